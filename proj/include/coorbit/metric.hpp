#pragma once

// Orbit-space metric d([x],[y]) = min_g ‖x − U_g y‖ and finite invariant sets.

#include <limits>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "coorbit/coorbit.hpp"
#include "coorbit/error.hpp"
#include "coorbit/group.hpp"

namespace coorbit {

inline constexpr double kDefaultOrbitTol = 1e-9;

template <typename Scalar>
struct QuotientDistance {
  Scalar distance;
  /// Lowest-index minimizer.
  int element;
};

template <typename Scalar, typename DerivedX, typename DerivedY>
QuotientDistance<Scalar> quotient_distance(const GroupAction<Scalar>& action,
                                           const Eigen::MatrixBase<DerivedX>& x,
                                           const Eigen::MatrixBase<DerivedY>& y) {
  detail::check_vector(action, x, "x");
  detail::check_vector(action, y, "y");
  Scalar best = std::numeric_limits<Scalar>::infinity();
  int arg = 0;
  for (int g = 0; g < action.order(); ++g) {
    const Scalar sq = (x - apply(action, g, y)).squaredNorm();
    if (sq < best) {
      best = sq;
      arg = g;
    }
  }
  return {std::sqrt(best), arg};
}

/// quotient distance ≤ tol·(1 + ‖x‖).
template <typename Scalar, typename DerivedX, typename DerivedY>
bool same_orbit(const GroupAction<Scalar>& action, const Eigen::MatrixBase<DerivedX>& x,
                const Eigen::MatrixBase<DerivedY>& y, Scalar tol = Scalar(kDefaultOrbitTol)) {
  return quotient_distance(action, x, y).distance <= tol * (Scalar(1) + x.norm());
}

/// [x] with points closer than dedup_tol merged (first representative kept).
template <typename Scalar, typename Derived>
std::vector<VectorX<Scalar>> orbit(const GroupAction<Scalar>& action, const Eigen::MatrixBase<Derived>& x,
                                   Scalar dedup_tol = Scalar(kDefaultOrbitTol)) {
  detail::check_vector(action, x, "point");
  std::vector<VectorX<Scalar>> out;
  for (int g = 0; g < action.order(); ++g) {
    VectorX<Scalar> y = apply(action, g, x);
    const bool seen = std::any_of(out.begin(), out.end(),
                                  [&](const VectorX<Scalar>& z) { return (z - y).norm() <= dedup_tol; });
    if (!seen) out.push_back(std::move(y));
  }
  // Orbit-stabilizer: |[x]| divides N. Only exact for permutation actions.
  assert(!action.all_permutations() || action.order() % static_cast<int>(out.size()) == 0);
  return out;
}

/// Points of R^d with unique string ids.
template <typename Scalar = double>
class Dataset {
 public:
  using Vector = VectorX<Scalar>;

  explicit Dataset(Eigen::Index dim) : dim_(dim) {}

  Dataset(Eigen::Index dim, std::vector<Vector> points, std::vector<std::string> ids = {})
      : dim_(dim) {
    if (!ids.empty() && ids.size() != points.size()) {
      throw Error(Errc::dimension_mismatch, "id count differs from point count");
    }
    for (std::size_t k = 0; k < points.size(); ++k) {
      add(std::move(points[k]), ids.empty() ? "p" + std::to_string(k) : std::move(ids[k]));
    }
  }

  void add(Vector point, std::string id) {
    if (point.size() != dim_) {
      throw Error(Errc::dimension_mismatch, "point '" + id + "' has length " +
                                                std::to_string(point.size()) + ", expected " +
                                                std::to_string(dim_));
    }
    if (!id_set_.insert(id).second) throw Error(Errc::duplicate_id, "duplicate id '" + id + "'");
    points_.push_back(std::move(point));
    ids_.push_back(std::move(id));
    invariant_ = false;
  }

  Eigen::Index dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  const Vector& point(std::size_t k) const { return points_.at(k); }
  const std::string& id(std::size_t k) const { return ids_.at(k); }
  const std::vector<Vector>& points() const noexcept { return points_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  bool invariant() const noexcept { return invariant_; }

  /// Rows are points.
  MatrixX<Scalar> matrix() const {
    MatrixX<Scalar> m(static_cast<Eigen::Index>(points_.size()), dim_);
    for (std::size_t k = 0; k < points_.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = points_[k].transpose();
    return m;
  }

 private:
  template <typename S, typename A>
  friend Dataset<S> orbit_closure(const GroupAction<S>&, const Dataset<S>&, A);
  template <typename S, typename A>
  friend Dataset<S> checked_invariant(const GroupAction<S>&, Dataset<S>, A);

  Eigen::Index dim_;
  std::vector<Vector> points_;
  std::vector<std::string> ids_;
  std::unordered_set<std::string> id_set_;
  bool invariant_ = false;
};

using Datasetd = Dataset<double>;

namespace detail {

template <typename Scalar>
bool contains_point(const std::vector<VectorX<Scalar>>& points, const VectorX<Scalar>& y, Scalar tol) {
  return std::any_of(points.begin(), points.end(),
                     [&](const VectorX<Scalar>& z) { return (z - y).norm() <= tol; });
}

}  // namespace detail

/// Union of the orbits of every point, deduplicated. A point keeps its own id;
/// new orbit members are named "{parent}#g{index}".
template <typename Scalar, typename Tol = Scalar>
Dataset<Scalar> orbit_closure(const GroupAction<Scalar>& action, const Dataset<Scalar>& data,
                              Tol dedup_tol = Tol(kDefaultOrbitTol)) {
  if (data.dim() != action.dim()) {
    throw Error(Errc::dimension_mismatch, "dataset dim " + std::to_string(data.dim()) +
                                              " vs action dim " + std::to_string(action.dim()));
  }
  Dataset<Scalar> out(data.dim());
  for (std::size_t k = 0; k < data.size(); ++k) {
    for (int g = 0; g < action.order(); ++g) {
      VectorX<Scalar> y = apply(action, g, data.point(k));
      if (detail::contains_point(out.points(), y, Scalar(dedup_tol))) continue;
      std::string id = g == 0 ? data.id(k) : data.id(k) + "#g" + std::to_string(g);
      // An input id may collide with a generated one; disambiguate.
      while (out.id_set_.count(id)) id += "'";
      out.add(std::move(y), std::move(id));
    }
  }
  out.invariant_ = true;
  return out;
}

/// Returns `data` flagged invariant after checking U_g x ∈ data for all g, x.
template <typename Scalar, typename Tol = Scalar>
Dataset<Scalar> checked_invariant(const GroupAction<Scalar>& action, Dataset<Scalar> data,
                                  Tol tol = Tol(kDefaultOrbitTol)) {
  for (std::size_t k = 0; k < data.size(); ++k) {
    for (int g = 1; g < action.order(); ++g) {
      if (!detail::contains_point(data.points(), apply(action, g, data.point(k)), Scalar(tol))) {
        throw Error(Errc::not_invariant_dataset, "orbit of '" + data.id(k) + "' leaves the dataset");
      }
    }
  }
  data.invariant_ = true;
  return data;
}

/// Indices of one point per orbit, first occurrence kept.
template <typename Scalar>
std::vector<std::size_t> orbit_representatives(const GroupAction<Scalar>& action,
                                                const Dataset<Scalar>& data,
                                                Scalar tol = Scalar(kDefaultOrbitTol)) {
  std::vector<std::size_t> reps;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const bool known = std::any_of(reps.begin(), reps.end(), [&](std::size_t r) {
      return same_orbit(action, data.point(r), data.point(k), tol);
    });
    if (!known) reps.push_back(k);
  }
  return reps;
}

}  // namespace coorbit
