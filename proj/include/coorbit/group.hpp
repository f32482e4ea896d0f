#pragma once

// Finite groups of orthogonal matrices acting on R^d.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "coorbit/error.hpp"

namespace coorbit {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class ElementKind { generic, permutation };

inline constexpr double kDefaultGroupTol = 1e-9;
inline constexpr double kDefaultHashPitch = 1e-6;
inline constexpr int kDefaultClosureCap = 10000;

/// Max-entry distance ‖A − B‖_max.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar max_entry_distance(const Eigen::MatrixBase<DerivedA>& a,
                                             const Eigen::MatrixBase<DerivedB>& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

/// ‖UᵀU − I‖_max.
template <typename Derived>
typename Derived::Scalar orthogonality_residual(const Eigen::MatrixBase<Derived>& u) {
  using Scalar = typename Derived::Scalar;
  const MatrixX<Scalar> gram = u.transpose() * u;
  return max_entry_distance(gram, MatrixX<Scalar>::Identity(u.cols(), u.cols()));
}

/// If `u` is a 0/1 permutation matrix (within tol), returns `source` with
/// (U x)_i = x_{source[i]}.
template <typename Scalar>
std::optional<std::vector<int>> detect_permutation(const MatrixX<Scalar>& u, Scalar tol) {
  const Eigen::Index d = u.rows();
  std::vector<int> source(static_cast<std::size_t>(d), -1);
  std::vector<bool> column_used(static_cast<std::size_t>(d), false);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const Scalar v = u(i, j);
      if (std::abs(v) <= tol) continue;
      if (std::abs(v - Scalar(1)) > tol) return std::nullopt;
      if (source[i] != -1 || column_used[j]) return std::nullopt;
      source[i] = static_cast<int>(j);
      column_used[j] = true;
    }
    if (source[i] == -1) return std::nullopt;
  }
  return source;
}

/// Tolerant lookup of matrices. Entries are rounded onto a grid of the given
/// pitch; an entry within `tol` of a cell boundary is registered under both
/// neighbouring cells so a query on either side still hits. Candidates are
/// confirmed by exact max-entry distance.
template <typename Scalar>
class MatrixIndex {
 public:
  MatrixIndex(Scalar tol, Scalar pitch) : tol_(tol), pitch_(std::max(pitch, tol)) {}

  std::optional<int> find(const MatrixX<Scalar>& m) const {
    const auto it = buckets_.find(primary_key(m));
    if (it == buckets_.end()) return std::nullopt;
    for (int id : it->second) {
      if (max_entry_distance(stored_[static_cast<std::size_t>(id)], m) <= tol_) return id;
    }
    return std::nullopt;
  }

  /// Registers `m` with the next id and returns it. No duplicate check.
  int insert(const MatrixX<Scalar>& m) {
    const int id = static_cast<int>(stored_.size());
    stored_.push_back(m);
    std::vector<std::int64_t> key = primary_key(m);
    std::vector<std::pair<std::size_t, std::int64_t>> ambiguous;
    const Scalar* data = m.data();
    for (std::size_t k = 0; k < key.size(); ++k) {
      const Scalar scaled = data[k] / pitch_;
      const Scalar frac = scaled - std::floor(scaled);
      if (std::abs(frac - Scalar(0.5)) * pitch_ <= tol_) {
        const std::int64_t other =
            key[k] == static_cast<std::int64_t>(std::floor(scaled)) ? key[k] + 1 : key[k] - 1;
        ambiguous.emplace_back(k, other);
      }
    }
    // Pathological inputs with many boundary entries fall back to the
    // primary key alone.
    const std::size_t combos = ambiguous.size() <= 10 ? (std::size_t{1} << ambiguous.size()) : 1;
    for (std::size_t mask = 0; mask < combos; ++mask) {
      std::vector<std::int64_t> variant = key;
      for (std::size_t b = 0; b < ambiguous.size() && combos > 1; ++b) {
        if (mask & (std::size_t{1} << b)) variant[ambiguous[b].first] = ambiguous[b].second;
      }
      buckets_[variant].push_back(id);
    }
    return id;
  }

  std::size_t size() const noexcept { return stored_.size(); }

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<std::int64_t>& key) const noexcept {
      std::uint64_t h = 1469598103934665603ULL;
      for (std::int64_t v : key) {
        h ^= static_cast<std::uint64_t>(v);
        h *= 1099511628211ULL;
      }
      return static_cast<std::size_t>(h);
    }
  };

  std::vector<std::int64_t> primary_key(const MatrixX<Scalar>& m) const {
    std::vector<std::int64_t> key(static_cast<std::size_t>(m.size()));
    const Scalar* data = m.data();
    for (std::size_t k = 0; k < key.size(); ++k) {
      key[k] = static_cast<std::int64_t>(std::llround(data[k] / pitch_));
    }
    return key;
  }

  Scalar tol_;
  Scalar pitch_;
  std::vector<MatrixX<Scalar>> stored_;
  std::unordered_map<std::vector<std::int64_t>, std::vector<int>, KeyHash> buckets_;
};

/// A finite list of d×d orthogonal matrices, identity first. Builders other
/// than `from_elements` always produce a closed group; `from_elements` only
/// checks shapes, and `verify_group` reports on the group laws.
template <typename Scalar = double>
class GroupAction {
 public:
  using Matrix = MatrixX<Scalar>;
  using Vector = VectorX<Scalar>;

  static GroupAction from_elements(std::vector<Matrix> elements, Scalar tol = Scalar(kDefaultGroupTol),
                                   std::vector<std::string> labels = {}) {
    if (elements.empty()) throw Error(Errc::dimension_mismatch, "group has no elements");
    const Eigen::Index d = elements.front().rows();
    if (d < 2) throw Error(Errc::dimension_too_small, "d = " + std::to_string(d) + " < 2");
    for (std::size_t k = 0; k < elements.size(); ++k) {
      if (elements[k].rows() != d || elements[k].cols() != d) {
        throw Error(Errc::dimension_mismatch, "element " + std::to_string(k) + " is not " +
                                                  std::to_string(d) + "x" + std::to_string(d));
      }
    }
    if (!labels.empty() && labels.size() != elements.size()) {
      throw Error(Errc::dimension_mismatch, "label count differs from element count");
    }
    GroupAction action;
    action.dim_ = d;
    action.tol_ = tol;
    action.elements_ = std::move(elements);
    action.labels_ = std::move(labels);
    if (action.labels_.empty()) {
      action.labels_.reserve(action.elements_.size());
      for (std::size_t k = 0; k < action.elements_.size(); ++k) {
        action.labels_.push_back("g" + std::to_string(k));
      }
    }
    action.permutations_.resize(action.elements_.size());
    action.kinds_.resize(action.elements_.size(), ElementKind::generic);
    for (std::size_t k = 0; k < action.elements_.size(); ++k) {
      if (auto perm = detect_permutation(action.elements_[k], tol)) {
        action.kinds_[k] = ElementKind::permutation;
        action.permutations_[k] = std::move(*perm);
      }
    }
    return action;
  }

  Eigen::Index dim() const noexcept { return dim_; }
  /// Group order N.
  int order() const noexcept { return static_cast<int>(elements_.size()); }
  Scalar tol() const noexcept { return tol_; }

  const Matrix& element(int g) const {
    check_index(g);
    return elements_[static_cast<std::size_t>(g)];
  }
  const std::vector<Matrix>& elements() const noexcept { return elements_; }
  ElementKind kind(int g) const {
    check_index(g);
    return kinds_[static_cast<std::size_t>(g)];
  }
  /// Empty unless kind(g) is permutation.
  const std::vector<int>& permutation(int g) const {
    check_index(g);
    return permutations_[static_cast<std::size_t>(g)];
  }
  const std::string& label(int g) const {
    check_index(g);
    return labels_[static_cast<std::size_t>(g)];
  }
  bool all_permutations() const {
    return std::all_of(kinds_.begin(), kinds_.end(),
                       [](ElementKind k) { return k == ElementKind::permutation; });
  }

  void check_index(int g) const {
    if (g < 0 || g >= order()) {
      throw Error(Errc::index_out_of_range,
                  "element " + std::to_string(g) + " not in [0, " + std::to_string(order()) + ")");
    }
  }

 private:
  GroupAction() = default;

  Eigen::Index dim_ = 0;
  Scalar tol_ = Scalar(kDefaultGroupTol);
  std::vector<Matrix> elements_;
  std::vector<ElementKind> kinds_;
  std::vector<std::vector<int>> permutations_;
  std::vector<std::string> labels_;
};

using GroupActiond = GroupAction<double>;

namespace detail {

template <typename Scalar>
MatrixX<Scalar> permutation_matrix(const std::vector<int>& source) {
  const auto d = static_cast<Eigen::Index>(source.size());
  MatrixX<Scalar> p = MatrixX<Scalar>::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) p(i, source[static_cast<std::size_t>(i)]) = Scalar(1);
  return p;
}

/// Shift by k: coordinate i moves to i + k mod d.
inline std::vector<int> shift_source(int d, int k) {
  std::vector<int> source(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) source[static_cast<std::size_t>(i)] = ((i - k) % d + d) % d;
  return source;
}

inline void require_dim(int d, int minimum) {
  if (d < minimum) {
    throw Error(Errc::dimension_too_small,
                "d = " + std::to_string(d) + " < " + std::to_string(minimum));
  }
}

}  // namespace detail

/// The d coordinate shifts; element k maps coordinate i to i + k mod d.
template <typename Scalar = double>
GroupAction<Scalar> build_cyclic_shift(int d) {
  detail::require_dim(d, 2);
  std::vector<MatrixX<Scalar>> elements;
  std::vector<std::string> labels;
  for (int k = 0; k < d; ++k) {
    elements.push_back(detail::permutation_matrix<Scalar>(detail::shift_source(d, k)));
    labels.push_back(k == 0 ? "e" : "shift" + std::to_string(k));
  }
  return GroupAction<Scalar>::from_elements(std::move(elements), Scalar(kDefaultGroupTol),
                                            std::move(labels));
}

/// {I, −I}.
template <typename Scalar = double>
GroupAction<Scalar> build_sign_flip(int d) {
  detail::require_dim(d, 2);
  std::vector<MatrixX<Scalar>> elements{MatrixX<Scalar>::Identity(d, d),
                                        -MatrixX<Scalar>::Identity(d, d)};
  return GroupAction<Scalar>::from_elements(std::move(elements), Scalar(kDefaultGroupTol),
                                            {"e", "neg"});
}

/// Order-2d group generated by the coordinate shift and the reversal
/// i -> d − 1 − i. Elements 0..d−1 are shifts, d + k is reversal ∘ shift_k.
template <typename Scalar = double>
GroupAction<Scalar> build_dihedral(int d) {
  detail::require_dim(d, 3);
  std::vector<MatrixX<Scalar>> elements;
  std::vector<std::string> labels;
  for (int k = 0; k < d; ++k) {
    elements.push_back(detail::permutation_matrix<Scalar>(detail::shift_source(d, k)));
    labels.push_back(k == 0 ? "e" : "shift" + std::to_string(k));
  }
  std::vector<int> reverse(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) reverse[static_cast<std::size_t>(i)] = d - 1 - i;
  const MatrixX<Scalar> r = detail::permutation_matrix<Scalar>(reverse);
  for (int k = 0; k < d; ++k) {
    elements.push_back(r * elements[static_cast<std::size_t>(k)]);
    labels.push_back("reflect" + std::to_string(k));
  }
  return GroupAction<Scalar>::from_elements(std::move(elements), Scalar(kDefaultGroupTol),
                                            std::move(labels));
}

/// Breadth-first closure of `generators` under right multiplication.
template <typename Scalar = double>
GroupAction<Scalar> close_under_product(const std::vector<MatrixX<Scalar>>& generators,
                                        int n_max = kDefaultClosureCap,
                                        Scalar tol = Scalar(kDefaultGroupTol),
                                        Scalar pitch = Scalar(kDefaultHashPitch)) {
  if (generators.empty()) throw Error(Errc::dimension_mismatch, "no generators");
  if (n_max < 1) throw Error(Errc::closure_exceeds_cap, "n_max must be positive");
  const Eigen::Index d = generators.front().rows();
  for (std::size_t k = 0; k < generators.size(); ++k) {
    const auto& gen = generators[k];
    if (gen.rows() != d || gen.cols() != d) {
      throw Error(Errc::dimension_mismatch, "generator " + std::to_string(k) + " has wrong shape");
    }
    if (orthogonality_residual(gen) > tol) {
      throw Error(Errc::not_orthogonal, "generator " + std::to_string(k));
    }
  }
  detail::require_dim(static_cast<int>(d), 2);

  MatrixIndex<Scalar> index(tol, pitch);
  std::vector<MatrixX<Scalar>> elements{MatrixX<Scalar>::Identity(d, d)};
  index.insert(elements.front());
  std::deque<std::size_t> frontier{0};
  while (!frontier.empty()) {
    const std::size_t current = frontier.front();
    frontier.pop_front();
    for (const auto& gen : generators) {
      MatrixX<Scalar> product = elements[current] * gen;
      if (index.find(product)) continue;
      if (static_cast<int>(elements.size()) >= n_max) {
        throw Error(Errc::closure_exceeds_cap,
                    "group order exceeds n_max = " + std::to_string(n_max));
      }
      index.insert(product);
      elements.push_back(std::move(product));
      frontier.push_back(elements.size() - 1);
    }
  }
  std::vector<std::string> labels;
  for (std::size_t k = 0; k < elements.size(); ++k) {
    labels.push_back(k == 0 ? "e" : "g" + std::to_string(k));
  }
  return GroupAction<Scalar>::from_elements(std::move(elements), tol, std::move(labels));
}

/// U_g x. Uses the coordinate gather for permutation elements.
template <typename Scalar, typename Derived>
VectorX<Scalar> apply(const GroupAction<Scalar>& action, int g, const Eigen::MatrixBase<Derived>& x) {
  action.check_index(g);
  if (x.size() != action.dim()) {
    throw Error(Errc::dimension_mismatch, "vector length " + std::to_string(x.size()) +
                                              " vs dim " + std::to_string(action.dim()));
  }
  if (action.kind(g) == ElementKind::permutation) {
    const auto& source = action.permutation(g);
    VectorX<Scalar> y(action.dim());
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = x(source[static_cast<std::size_t>(i)]);
    return y;
  }
  return action.element(g) * x;
}

/// Element lookup for products: index_of(U_g U_h), −1 when absent.
template <typename Scalar>
class CompositionTable {
 public:
  explicit CompositionTable(const GroupAction<Scalar>& action,
                            Scalar pitch = Scalar(kDefaultHashPitch))
      : n_(action.order()), table_(static_cast<std::size_t>(n_) * n_, -1) {
    MatrixIndex<Scalar> index(action.tol(), pitch);
    for (const auto& e : action.elements()) index.insert(e);
    for (int g = 0; g < n_; ++g) {
      for (int h = 0; h < n_; ++h) {
        const auto found = index.find(action.element(g) * action.element(h));
        table_[static_cast<std::size_t>(g) * n_ + h] = found ? *found : -1;
      }
    }
  }

  int operator()(int g, int h) const { return table_[static_cast<std::size_t>(g) * n_ + h]; }
  int order() const noexcept { return n_; }

  bool is_latin_square() const {
    for (int r = 0; r < n_; ++r) {
      std::vector<bool> row(static_cast<std::size_t>(n_), false), col(static_cast<std::size_t>(n_), false);
      for (int c = 0; c < n_; ++c) {
        const int a = (*this)(r, c), b = (*this)(c, r);
        if (a < 0 || b < 0 || row[a] || col[b]) return false;
        row[a] = true;
        col[b] = true;
      }
    }
    return true;
  }

 private:
  int n_;
  std::vector<int> table_;
};

struct VerificationReport {
  double orthogonality_residual = 0;
  double identity_residual = 0;
  /// Max over pairs (g,h) of the distance from U_g U_h to the nearest element.
  double closure_residual = 0;
  /// Max over g of the distance from U_gᵀ to the nearest element.
  double inverse_residual = 0;
  /// Smallest max-entry distance between two listed elements.
  double min_element_separation = 0;
  bool orthogonality_ok = true;
  bool identity_ok = true;
  bool closure_ok = true;
  bool inverse_ok = true;
  bool duplicates_ok = true;
  std::vector<std::string> failures;

  bool passed() const {
    return orthogonality_ok && identity_ok && closure_ok && inverse_ok && duplicates_ok;
  }
};

namespace detail {

template <typename Scalar>
Scalar nearest_distance(const GroupAction<Scalar>& action, const MatrixX<Scalar>& m) {
  Scalar best = std::numeric_limits<Scalar>::infinity();
  for (const auto& e : action.elements()) best = std::min(best, max_entry_distance(e, m));
  return best;
}

}  // namespace detail

template <typename Scalar>
VerificationReport verify_group(const GroupAction<Scalar>& action,
                                Scalar pitch = Scalar(kDefaultHashPitch)) {
  VerificationReport report;
  const Scalar tol = action.tol();
  const int n = action.order();
  const Eigen::Index d = action.dim();

  for (int g = 0; g < n; ++g) {
    const Scalar r = orthogonality_residual(action.element(g));
    report.orthogonality_residual = std::max<double>(report.orthogonality_residual, r);
    if (r > tol) {
      report.orthogonality_ok = false;
      report.failures.push_back("orthogonality: element " + std::to_string(g) + " (" +
                                action.label(g) + ")");
    }
  }

  report.identity_residual = max_entry_distance(action.element(0), MatrixX<Scalar>::Identity(d, d));
  if (report.identity_residual > tol) {
    report.identity_ok = false;
    report.failures.push_back("identity: element 0 is not the identity");
  }

  MatrixIndex<Scalar> index(tol, pitch);
  report.min_element_separation = std::numeric_limits<double>::infinity();
  for (int g = 0; g < n; ++g) {
    if (const auto dup = index.find(action.element(g))) {
      report.duplicates_ok = false;
      report.failures.push_back("duplicate: elements " + std::to_string(*dup) + " and " +
                                std::to_string(g));
    }
    index.insert(action.element(g));
  }
  for (int g = 0; g < n; ++g) {
    for (int h = g + 1; h < n; ++h) {
      report.min_element_separation = std::min<double>(
          report.min_element_separation, max_entry_distance(action.element(g), action.element(h)));
    }
  }
  if (n == 1) report.min_element_separation = 0;

  for (int g = 0; g < n; ++g) {
    for (int h = 0; h < n; ++h) {
      const MatrixX<Scalar> product = action.element(g) * action.element(h);
      if (index.find(product)) continue;
      report.closure_ok = false;
      report.closure_residual =
          std::max<double>(report.closure_residual, detail::nearest_distance(action, product));
      report.failures.push_back("closure: product of (" + std::to_string(g) + ", " +
                                std::to_string(h) + ") [" + action.label(g) + " * " +
                                action.label(h) + "] not in list");
    }
    const MatrixX<Scalar> inverse = action.element(g).transpose();
    if (!index.find(inverse)) {
      report.inverse_ok = false;
      report.inverse_residual =
          std::max<double>(report.inverse_residual, detail::nearest_distance(action, inverse));
      report.failures.push_back("inverse: element " + std::to_string(g) + " (" + action.label(g) +
                                ") has no inverse in list");
    }
  }
  return report;
}

}  // namespace coorbit
