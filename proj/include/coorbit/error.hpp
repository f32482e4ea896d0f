#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace coorbit {

enum class Errc {
  dimension_too_small,
  not_orthogonal,
  closure_exceeds_cap,
  index_out_of_range,
  dimension_mismatch,
  zero_window,
  rank_out_of_range,
  selection_shape_mismatch,
  empty_selection,
  not_invariant_dataset,
  fewer_than_two_orbits,
  trivial_group,
  p_out_of_range,
  n_out_of_range,
  config_inconsistent,
  duplicate_id,
  parse_error,
  io_error,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::dimension_too_small: return "dimension-too-small";
    case Errc::not_orthogonal: return "not-orthogonal";
    case Errc::closure_exceeds_cap: return "closure-exceeds-cap";
    case Errc::index_out_of_range: return "index-out-of-range";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::zero_window: return "zero-window";
    case Errc::rank_out_of_range: return "rank-out-of-range";
    case Errc::selection_shape_mismatch: return "selection-shape-mismatch";
    case Errc::empty_selection: return "empty-selection";
    case Errc::not_invariant_dataset: return "not-invariant-dataset";
    case Errc::fewer_than_two_orbits: return "fewer-than-two-orbits";
    case Errc::trivial_group: return "trivial-group";
    case Errc::p_out_of_range: return "p-out-of-range";
    case Errc::n_out_of_range: return "n-out-of-range";
    case Errc::config_inconsistent: return "config-inconsistent";
    case Errc::duplicate_id: return "duplicate-id";
    case Errc::parse_error: return "parse-error";
    case Errc::io_error: return "io-error";
  }
  return "unknown";
}

/// Library error. `code()` carries the machine-readable kind; `what()` is
/// "<kind>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace coorbit
