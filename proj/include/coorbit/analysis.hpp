#pragma once

// Injectivity and stability quantities: optimal bi-Lipschitz constants on
// finite invariant sets, orbit separation, the spectral γ profile with the
// minimal window counts p_n, selection planning, and adversarial collision
// search.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "coorbit/coorbit.hpp"
#include "coorbit/error.hpp"
#include "coorbit/group.hpp"
#include "coorbit/metric.hpp"
#include "coorbit/parallel.hpp"
#include "coorbit/random.hpp"

namespace coorbit {

inline constexpr double kDefaultRankTol = 1e-8;
inline constexpr double kDefaultSeparationTol = 1e-12;

// ---------------------------------------------------------------------------
// Bi-Lipschitz constants on a finite invariant set

struct BoundsReport {
  double a_w = 0;
  double b_w = 0;
  /// ‖w‖, always an upper Lipschitz constant.
  double trivial_upper = 0;
  std::pair<std::string, std::string> witness_lower;
  std::pair<std::string, std::string> witness_upper;
  std::size_t pair_count = 0;
  std::size_t orbit_count = 0;
  /// a_w > 0: every scanned orbit pair was separated.
  bool separated() const { return a_w > 0; }
};

namespace detail {

template <typename Scalar>
void require_invariant(const Dataset<Scalar>& data, const GroupAction<Scalar>& action) {
  if (data.dim() != action.dim()) {
    throw Error(Errc::dimension_mismatch, "dataset dim " + std::to_string(data.dim()) +
                                              " vs action dim " + std::to_string(action.dim()));
  }
  if (!data.invariant()) {
    throw Error(Errc::not_invariant_dataset, "dataset is not flagged G-invariant; close it first");
  }
}

/// Gaps at or below tol·(1 + scale) count as collisions.
template <typename Scalar>
bool below_threshold(Scalar gap, Scalar scale, Scalar tol) {
  return gap <= tol * (Scalar(1) + scale);
}

}  // namespace detail

/// Optimal constants a_w = min, b_w = max of |Φ_{w,j}(x) − Φ_{w,j}(y)| / d([x],[y])
/// over non-equivalent pairs. One representative per orbit is scanned since
/// both numerator and denominator are orbit invariants. Numerators at or below
/// sep_tol·(1 + max(|Φ(x)|, |Φ(y)|)) are taken as exact collisions.
template <typename Scalar, typename Derived>
BoundsReport lipschitz_bounds(const GroupAction<Scalar>& action, const Eigen::MatrixBase<Derived>& w,
                              int j, const Dataset<Scalar>& data,
                              Scalar sep_tol = Scalar(kDefaultSeparationTol),
                              Scalar orbit_tol = Scalar(kDefaultOrbitTol)) {
  detail::require_invariant(data, action);
  if (j < 1 || j > action.order()) {
    throw Error(Errc::rank_out_of_range,
                "rank " + std::to_string(j) + " not in [1, " + std::to_string(action.order()) + "]");
  }
  const auto reps = orbit_representatives(action, data, orbit_tol);
  if (reps.size() < 2) {
    throw Error(Errc::fewer_than_two_orbits, std::to_string(reps.size()) + " orbit(s) in dataset");
  }
  const WindowBank<Scalar> bank{MatrixX<Scalar>(w)};
  const CoorbitMap<Scalar> phi(action, bank, SelectionSet(std::vector<std::vector<int>>{{j}}));
  std::vector<Scalar> values;
  values.reserve(reps.size());
  for (std::size_t r : reps) values.push_back(phi(data.point(r))(0));

  BoundsReport report;
  report.trivial_upper = static_cast<double>(w.norm());
  report.orbit_count = reps.size();
  report.a_w = std::numeric_limits<double>::infinity();
  report.b_w = 0;
  for (std::size_t a = 0; a < reps.size(); ++a) {
    for (std::size_t b = a + 1; b < reps.size(); ++b) {
      const Scalar dist = quotient_distance(action, data.point(reps[a]), data.point(reps[b])).distance;
      Scalar gap = std::abs(values[a] - values[b]);
      const Scalar scale = std::max(std::abs(values[a]), std::abs(values[b]));
      if (detail::below_threshold(gap, scale, sep_tol)) gap = 0;
      const double ratio = static_cast<double>(gap / dist);
      const std::pair<std::string, std::string> ids{data.id(reps[a]), data.id(reps[b])};
      if (ratio < report.a_w) {
        report.a_w = ratio;
        report.witness_lower = ids;
      }
      if (ratio > report.b_w || report.pair_count == 0) {
        report.b_w = ratio;
        report.witness_upper = ids;
      }
      ++report.pair_count;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Orbit separation

struct UnseparatedPair {
  std::string first;
  std::string second;
  double gap;
};

/// Non-equivalent representative pairs whose features satisfy
/// ‖F(x) − F(y)‖ ≤ tol·(1 + max(‖F(x)‖, ‖F(y)‖)).
template <typename Scalar, typename Features>
std::vector<UnseparatedPair> separation_check_with(const GroupAction<Scalar>& action,
                                                   const Dataset<Scalar>& data, Features&& features,
                                                   Scalar tol = Scalar(kDefaultSeparationTol),
                                                   Scalar orbit_tol = Scalar(kDefaultOrbitTol)) {
  detail::require_invariant(data, action);
  const auto reps = orbit_representatives(action, data, orbit_tol);
  std::vector<VectorX<Scalar>> feats;
  feats.reserve(reps.size());
  for (std::size_t r : reps) feats.push_back(features(data.point(r)));
  std::vector<UnseparatedPair> out;
  for (std::size_t a = 0; a < reps.size(); ++a) {
    for (std::size_t b = a + 1; b < reps.size(); ++b) {
      const Scalar gap = (feats[a] - feats[b]).norm();
      const Scalar scale = std::max(feats[a].norm(), feats[b].norm());
      if (detail::below_threshold(gap, scale, tol)) {
        out.push_back({data.id(reps[a]), data.id(reps[b]), static_cast<double>(gap)});
      }
    }
  }
  return out;
}

template <typename Scalar>
std::vector<UnseparatedPair> separation_check(const GroupAction<Scalar>& action,
                                              const WindowBank<Scalar>& bank, const SelectionSet& sel,
                                              const Dataset<Scalar>& data,
                                              Scalar tol = Scalar(kDefaultSeparationTol)) {
  const CoorbitMap<Scalar> phi(action, bank, sel);
  return separation_check_with(action, data, [&](const VectorX<Scalar>& x) { return phi(x); }, tol);
}

// ---------------------------------------------------------------------------
// Spectra, ranks and the γ profile

/// Real eigenvalues of an orthogonal matrix, snapped to ±1, descending.
template <typename Scalar>
std::vector<Scalar> real_spectrum(const MatrixX<Scalar>& u, Scalar tol = Scalar(kDefaultRankTol)) {
  if (u.rows() != u.cols()) throw Error(Errc::dimension_mismatch, "matrix is not square");
  if (orthogonality_residual(u) > tol) throw Error(Errc::not_orthogonal, "‖UᵀU − I‖ exceeds tol");
  const Eigen::EigenSolver<MatrixX<Scalar>> solver(u, false);
  std::vector<Scalar> out;
  for (const auto& lambda : solver.eigenvalues()) {
    if (std::abs(lambda.imag()) > tol * (Scalar(1) + std::abs(lambda))) continue;
    const Scalar snapped = lambda.real() >= 0 ? Scalar(1) : Scalar(-1);
    if (std::find(out.begin(), out.end(), snapped) == out.end()) out.push_back(snapped);
  }
  std::sort(out.begin(), out.end(), std::greater<Scalar>());
  return out;
}

/// Numerical rank of U − λI: singular values above tol·σ_max, 0 for a
/// matrix that vanishes within tol.
template <typename Scalar>
int rank_at(const MatrixX<Scalar>& u, Scalar lambda, Scalar tol = Scalar(kDefaultRankTol)) {
  const MatrixX<Scalar> shifted = u - lambda * MatrixX<Scalar>::Identity(u.rows(), u.cols());
  if (shifted.size() == 0 || shifted.cwiseAbs().maxCoeff() <= tol) return 0;
  const Eigen::JacobiSVD<MatrixX<Scalar>> svd(shifted);
  const auto& sigma = svd.singularValues();
  const Scalar cutoff = tol * sigma(0);
  return static_cast<int>((sigma.array() > cutoff).count());
}

struct ElementSpectrum {
  int element = 0;
  std::string label;
  std::vector<double> spectrum;
  /// min over the real spectrum of rank[U_g − λI]; d when the spectrum is empty.
  int min_rank = 0;
};

struct GammaProfile {
  int dim = 0;
  int order = 0;
  /// Descending, N − 1 entries.
  std::vector<int> gamma;
  std::vector<ElementSpectrum> per_element;
  /// n ↦ p_n for n = 1..N; p_1 = 2d, p_n = 2d − γ_{N−n+1} for n ≥ 2.
  std::map<int, int> p_table;

  int p(int n) const {
    const auto it = p_table.find(n);
    if (it == p_table.end()) {
      throw Error(Errc::n_out_of_range,
                  "n = " + std::to_string(n) + " not in [1, " + std::to_string(order) + "]");
    }
    return it->second;
  }

  /// p_n ≥ d + 1 for every n ≥ 2. Holds whenever each non-identity element
  /// has a real eigenvalue; can fail for custom groups containing elements
  /// without one (e.g. a quarter turn in R^2).
  bool window_bound_holds() const {
    for (const auto& [n, pn] : p_table) {
      if (n >= 2 && pn < dim + 1) return false;
    }
    return true;
  }
};

template <typename Scalar>
GammaProfile gamma_profile(const GroupAction<Scalar>& action, Scalar tol = Scalar(kDefaultRankTol)) {
  const int n_order = action.order();
  if (n_order < 2) throw Error(Errc::trivial_group, "group of order 1 has no non-identity element");
  const int d = static_cast<int>(action.dim());
  GammaProfile profile;
  profile.dim = d;
  profile.order = n_order;
  for (int g = 1; g < n_order; ++g) {
    ElementSpectrum entry;
    entry.element = g;
    entry.label = action.label(g);
    entry.min_rank = d;
    for (Scalar lambda : real_spectrum(action.element(g), tol)) {
      entry.spectrum.push_back(static_cast<double>(lambda));
      entry.min_rank = std::min(entry.min_rank, rank_at(action.element(g), lambda, tol));
    }
    profile.gamma.push_back(entry.min_rank);
    profile.per_element.push_back(std::move(entry));
  }
  std::sort(profile.gamma.begin(), profile.gamma.end(), std::greater<int>());
  profile.p_table[1] = 2 * d;
  for (int n = 2; n <= n_order; ++n) {
    profile.p_table[n] = 2 * d - profile.gamma[static_cast<std::size_t>(n_order - n)];
  }
  return profile;
}

/// The first 2d − p windows keep ranks {1..n}, the remaining 2p − 2d keep {1}.
inline SelectionSet plan_selection(const GammaProfile& profile, int n, int p) {
  if (n < 1 || n > profile.order) {
    throw Error(Errc::n_out_of_range,
                "n = " + std::to_string(n) + " not in [1, " + std::to_string(profile.order) + "]");
  }
  const int d = profile.dim;
  const int pn = profile.p(n);
  const int lower = std::max(pn, d);
  if (p < lower || p > 2 * d) {
    throw Error(Errc::p_out_of_range, "p = " + std::to_string(p) + " not in [p_" + std::to_string(n) +
                                          " = " + std::to_string(lower) + ", 2d = " +
                                          std::to_string(2 * d) + "]");
  }
  std::vector<int> rich(static_cast<std::size_t>(n));
  std::iota(rich.begin(), rich.end(), 1);
  std::vector<std::vector<int>> per_window;
  for (int i = 0; i < 2 * d - p; ++i) per_window.push_back(rich);
  for (int i = 0; i < 2 * p - 2 * d; ++i) per_window.push_back({1});
  SelectionSet sel(std::move(per_window));
  if (sel.m() != (2 * d - p) * n + 2 * p - 2 * d) {
    throw Error(Errc::config_inconsistent, "planned cardinality mismatch");
  }
  return sel;
}

template <typename Scalar>
SelectionSet plan_selection(const GroupAction<Scalar>& action, int n, int p) {
  return plan_selection(gamma_profile(action), n, p);
}

// ---------------------------------------------------------------------------
// Collision search

struct CollisionOptions {
  /// Random restarts.
  long budget = 10000;
  /// Minimum admissible orbit distance.
  double floor = 1e-2;
  std::uint64_t seed = 0;
  /// Best restarts passed to coordinate descent.
  int refine = 16;
  /// Coordinate sweeps per refined restart.
  int descent_steps = 200;
  unsigned threads = 0;
};

template <typename Scalar = double>
struct CollisionReport {
  VectorX<Scalar> x;
  VectorX<Scalar> y;
  double orbit_distance = 0;
  double embedding_gap = 0;
  double ratio = std::numeric_limits<double>::infinity();
  long trials = 0;
  std::uint64_t seed = 0;
};

template <typename Scalar>
struct CollisionSample {
  Scalar gap;
  Scalar distance;
  Scalar ratio;
};

/// ‖Φ(x) − Φ(y)‖ / d([x],[y]).
template <typename Scalar, typename DerivedX, typename DerivedY>
CollisionSample<Scalar> collision_ratio(const CoorbitMap<Scalar>& phi, const GroupAction<Scalar>& action,
                                        const Eigen::MatrixBase<DerivedX>& x,
                                        const Eigen::MatrixBase<DerivedY>& y) {
  const Scalar gap = (phi(x) - phi(y)).norm();
  const Scalar dist = quotient_distance(action, x, y).distance;
  return {gap, dist, dist > 0 ? gap / dist : std::numeric_limits<Scalar>::infinity()};
}

namespace detail {

inline constexpr long kCollisionChunk = 512;

template <typename Scalar>
struct Candidate {
  Scalar ratio;
  long trial;
  VectorX<Scalar> x;
  VectorX<Scalar> y;
};

template <typename Scalar>
class CollisionSearch {
 public:
  CollisionSearch(const GroupAction<Scalar>& action, const CoorbitMap<Scalar>& phi, Scalar floor)
      : action_(action), phi_(phi), floor_(floor) {}

  Scalar ratio(const VectorX<Scalar>& x, const VectorX<Scalar>& y) const {
    return collision_ratio(phi_, action_, x, y).ratio;
  }

  /// Pushes y away from the nearest orbit point of x until d([x],[y]) ≥ floor.
  bool enforce_floor(const VectorX<Scalar>& x, VectorX<Scalar>& y) const {
    const auto qd = quotient_distance(action_, x, y);
    if (qd.distance >= floor_) return true;
    if (qd.distance == Scalar(0)) return false;
    const VectorX<Scalar> moved = apply(action_, qd.element, y);
    const VectorX<Scalar> pushed = x + (moved - x) * (floor_ / qd.distance);
    y = action_.element(qd.element).transpose() * pushed;
    return quotient_distance(action_, x, y).distance >= floor_ * (Scalar(1) - Scalar(1e-12));
  }

  Candidate<Scalar> sample(Rng& rng, long trial) const {
    const Eigen::Index d = action_.dim();
    for (;;) {
      VectorX<Scalar> x = gaussian_vector<Scalar>(rng, d);
      VectorX<Scalar> y = gaussian_vector<Scalar>(rng, d);
      const Scalar dist = quotient_distance(action_, x, y).distance;
      if (dist == Scalar(0)) continue;
      if (dist < floor_) {
        const Scalar s = Scalar(2) * floor_ / dist;
        x *= s;
        y *= s;
      }
      return {ratio(x, y), trial, std::move(x), std::move(y)};
    }
  }

  void refine(Candidate<Scalar>& c, int steps) const {
    const Eigen::Index d = action_.dim();
    VectorX<Scalar> z(2 * d);
    z << c.x, c.y;
    Scalar best = c.ratio;
    Scalar h = Scalar(0.1) * z.norm() / std::sqrt(Scalar(2 * d));
    const Scalar h_min = Scalar(1e-13) * z.norm();
    for (int step = 0; step < steps && h > h_min; ++step) {
      bool improved = false;
      for (Eigen::Index k = 0; k < 2 * d; ++k) {
        for (Scalar sign : {Scalar(1), Scalar(-1)}) {
          VectorX<Scalar> trial = z;
          trial(k) += sign * h;
          VectorX<Scalar> tx = trial.head(d);
          VectorX<Scalar> ty = trial.tail(d);
          if (!enforce_floor(tx, ty)) continue;
          const Scalar r = ratio(tx, ty);
          if (r < best) {
            best = r;
            z << tx, ty;
            improved = true;
            break;
          }
        }
      }
      if (!improved) h *= Scalar(0.5);
    }
    c.x = z.head(d);
    c.y = z.tail(d);
    c.ratio = best;
  }

 private:
  const GroupAction<Scalar>& action_;
  const CoorbitMap<Scalar>& phi_;
  Scalar floor_;
};

}  // namespace detail

/// Seeded search for pairs minimizing ‖Φ(x) − Φ(y)‖ / d([x],[y]) subject to
/// d([x],[y]) ≥ floor: Gaussian restarts, then coordinate descent on the
/// best `refine` of them. Restarts are drawn in fixed chunks with sub-seeds
/// mix_seed(seed, chunk), so the result does not depend on `threads`.
template <typename Scalar>
CollisionReport<Scalar> collision_search(const GroupAction<Scalar>& action, const WindowBank<Scalar>& bank,
                                         const SelectionSet& sel, const CollisionOptions& options) {
  if (options.budget < 1) throw Error(Errc::config_inconsistent, "budget must be at least 1");
  if (!(options.floor > 0)) throw Error(Errc::config_inconsistent, "floor must be positive");
  const CoorbitMap<Scalar> phi(action, bank, sel);
  const detail::CollisionSearch<Scalar> search(action, phi, Scalar(options.floor));

  const long chunks = (options.budget + detail::kCollisionChunk - 1) / detail::kCollisionChunk;
  const auto keep = static_cast<std::size_t>(std::max(options.refine, 1));
  const auto by_ratio = [](const detail::Candidate<Scalar>& a, const detail::Candidate<Scalar>& b) {
    return a.ratio != b.ratio ? a.ratio < b.ratio : a.trial < b.trial;
  };

  std::vector<std::vector<detail::Candidate<Scalar>>> per_chunk(static_cast<std::size_t>(chunks));
  parallel_for(static_cast<std::size_t>(chunks), options.threads, [&](std::size_t c) {
    Rng rng(mix_seed(options.seed, c));
    const long begin = static_cast<long>(c) * detail::kCollisionChunk;
    const long end = std::min(options.budget, begin + detail::kCollisionChunk);
    auto& best = per_chunk[c];
    for (long t = begin; t < end; ++t) {
      best.push_back(search.sample(rng, t));
      std::sort(best.begin(), best.end(), by_ratio);
      if (best.size() > keep) best.pop_back();
    }
  });
  std::vector<detail::Candidate<Scalar>> pool;
  for (auto& chunk : per_chunk) {
    for (auto& cand : chunk) pool.push_back(std::move(cand));
  }
  std::sort(pool.begin(), pool.end(), by_ratio);
  if (pool.size() > keep) pool.resize(keep);

  if (options.refine > 0) {
    parallel_for(pool.size(), options.threads,
                 [&](std::size_t k) { search.refine(pool[k], options.descent_steps); });
  }
  const auto winner = std::min_element(pool.begin(), pool.end(), by_ratio);

  CollisionReport<Scalar> report;
  report.x = winner->x;
  report.y = winner->y;
  const auto final_sample = collision_ratio(phi, action, report.x, report.y);
  report.orbit_distance = static_cast<double>(final_sample.distance);
  report.embedding_gap = static_cast<double>(final_sample.gap);
  report.ratio = static_cast<double>(final_sample.ratio);
  report.trials = options.budget;
  report.seed = options.seed;
  return report;
}

}  // namespace coorbit
