#pragma once

// Sorted coorbits and the bank map x ↦ [↓⟨U_g w_i, x⟩ restricted to S_i]_i.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "coorbit/error.hpp"
#include "coorbit/group.hpp"

namespace coorbit {

/// The p windows w_1..w_p, stored as the columns of a d×p matrix.
template <typename Scalar = double>
class WindowBank {
 public:
  using Matrix = MatrixX<Scalar>;
  using Vector = VectorX<Scalar>;

  explicit WindowBank(Matrix windows) : windows_(std::move(windows)) {
    if (windows_.cols() < 1) throw Error(Errc::selection_shape_mismatch, "window bank is empty");
    for (Eigen::Index i = 0; i < windows_.cols(); ++i) {
      if (windows_.col(i).squaredNorm() == Scalar(0)) {
        throw Error(Errc::zero_window, "window " + std::to_string(i) + " is zero");
      }
    }
  }

  static WindowBank from_list(const std::vector<Vector>& windows) {
    if (windows.empty()) throw Error(Errc::selection_shape_mismatch, "window bank is empty");
    Matrix m(windows.front().size(), static_cast<Eigen::Index>(windows.size()));
    for (std::size_t i = 0; i < windows.size(); ++i) {
      if (windows[i].size() != m.rows()) {
        throw Error(Errc::dimension_mismatch, "window " + std::to_string(i) + " has wrong length");
      }
      m.col(static_cast<Eigen::Index>(i)) = windows[i];
    }
    return WindowBank(std::move(m));
  }

  Eigen::Index dim() const noexcept { return windows_.rows(); }
  int size() const noexcept { return static_cast<int>(windows_.cols()); }
  auto window(int i) const { return windows_.col(i); }
  const Matrix& matrix() const noexcept { return windows_; }

 private:
  Matrix windows_;
};

using WindowBankd = WindowBank<double>;

/// Per-window rank lists S_i (1-based, strictly increasing, nonempty).
class SelectionSet {
 public:
  explicit SelectionSet(std::vector<std::vector<int>> per_window)
      : per_window_(std::move(per_window)) {
    if (per_window_.empty()) throw Error(Errc::empty_selection, "no windows selected");
    for (std::size_t i = 0; i < per_window_.size(); ++i) {
      const auto& s = per_window_[i];
      if (s.empty()) throw Error(Errc::empty_selection, "S_" + std::to_string(i + 1) + " is empty");
      for (std::size_t k = 0; k < s.size(); ++k) {
        if (s[k] < 1) {
          throw Error(Errc::rank_out_of_range, "rank " + std::to_string(s[k]) + " in S_" +
                                                   std::to_string(i + 1) + " is below 1");
        }
        if (k > 0 && s[k] <= s[k - 1]) {
          throw Error(Errc::selection_shape_mismatch,
                      "S_" + std::to_string(i + 1) + " is not strictly increasing");
        }
      }
      m_ += static_cast<int>(s.size());
    }
  }

  /// S_i = {1} for all i: the max filter.
  static SelectionSet singleton(int p) { return top(p, 1); }

  /// S_i = {1, …, n} for all i.
  static SelectionSet top(int p, int n) {
    std::vector<int> ranks(static_cast<std::size_t>(std::max(n, 0)));
    std::iota(ranks.begin(), ranks.end(), 1);
    return SelectionSet(std::vector<std::vector<int>>(static_cast<std::size_t>(std::max(p, 0)), ranks));
  }

  int windows() const noexcept { return static_cast<int>(per_window_.size()); }
  int m() const noexcept { return m_; }
  const std::vector<int>& ranks(int i) const { return per_window_.at(static_cast<std::size_t>(i)); }
  const std::vector<std::vector<int>>& per_window() const noexcept { return per_window_; }
  int max_rank() const {
    int r = 0;
    for (const auto& s : per_window_) r = std::max(r, s.back());
    return r;
  }
  std::vector<int> sizes() const {
    std::vector<int> out;
    for (const auto& s : per_window_) out.push_back(static_cast<int>(s.size()));
    return out;
  }

  bool operator==(const SelectionSet&) const = default;

 private:
  std::vector<std::vector<int>> per_window_;
  int m_ = 0;
};

/// Non-increasing rearrangement; ties keep their original order.
template <typename Derived>
VectorX<typename Derived::Scalar> sort_descending(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(v.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return v(a) > v(b); });
  VectorX<Scalar> out(v.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) out(k) = v(order[static_cast<std::size_t>(k)]);
  return out;
}

namespace detail {

template <typename Scalar, typename Derived>
void check_vector(const GroupAction<Scalar>& action, const Eigen::MatrixBase<Derived>& x,
                  const char* what) {
  if (x.size() != action.dim()) {
    throw Error(Errc::dimension_mismatch, std::string(what) + " has length " +
                                              std::to_string(x.size()) + ", action dim is " +
                                              std::to_string(action.dim()));
  }
}

}  // namespace detail

/// Compensated dot product (TwoProduct via fma, TwoSum accumulation). The
/// result is as accurate as if computed in twice the working precision, so
/// reordering the terms, as a permutation action does, changes it by at most
/// a few ulps of the result itself.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar accurate_dot(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  Scalar sum(0), err(0);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const Scalar prod = a(i) * b(i);
    const Scalar prod_err = std::fma(a(i), b(i), -prod);
    const Scalar t = sum + prod;
    const Scalar z = t - sum;
    err += (sum - (t - z)) + (prod - z) + prod_err;
    sum = t;
  }
  return sum + err;
}

/// Row-wise accurate_dot.
template <typename DerivedM, typename DerivedX>
VectorX<typename DerivedM::Scalar> accurate_product(const Eigen::MatrixBase<DerivedM>& m,
                                                    const Eigen::MatrixBase<DerivedX>& x) {
  VectorX<typename DerivedM::Scalar> out(m.rows());
  for (Eigen::Index r = 0; r < m.rows(); ++r) out(r) = accurate_dot(m.row(r).transpose(), x);
  return out;
}

/// N×d matrix whose row g is (U_g w)ᵀ.
template <typename Scalar, typename Derived>
MatrixX<Scalar> window_orbit(const GroupAction<Scalar>& action, const Eigen::MatrixBase<Derived>& w) {
  detail::check_vector(action, w, "window");
  MatrixX<Scalar> rows(action.order(), action.dim());
  for (int g = 0; g < action.order(); ++g) rows.row(g) = apply(action, g, w).transpose();
  return rows;
}

/// ↓(⟨U_g w, x⟩)_{g∈G}.
template <typename Scalar, typename DerivedW, typename DerivedX>
VectorX<Scalar> full_coorbit(const GroupAction<Scalar>& action, const Eigen::MatrixBase<DerivedW>& w,
                             const Eigen::MatrixBase<DerivedX>& x) {
  detail::check_vector(action, x, "point");
  detail::check_vector(action, w, "window");
  if (w.squaredNorm() == Scalar(0)) throw Error(Errc::zero_window, "window is zero");
  const VectorX<Scalar> products = accurate_product(window_orbit(action, w), x);
  return sort_descending(products);
}

/// Φ_{w,j}(x): the j-th (1-based) entry of the sorted coorbit.
template <typename Scalar, typename DerivedW, typename DerivedX>
Scalar coorbit_entry(const GroupAction<Scalar>& action, const Eigen::MatrixBase<DerivedW>& w, int j,
                     const Eigen::MatrixBase<DerivedX>& x) {
  if (j < 1 || j > action.order()) {
    throw Error(Errc::rank_out_of_range,
                "rank " + std::to_string(j) + " not in [1, " + std::to_string(action.order()) + "]");
  }
  return full_coorbit(action, w, x)(j - 1);
}

/// The bank map Φ_{w,S} with every window orbit precomputed once. Evaluation
/// is one (pN×d)·d compensated product followed by a per-window partial sort.
template <typename Scalar = double>
class CoorbitMap {
 public:
  using Matrix = MatrixX<Scalar>;
  using Vector = VectorX<Scalar>;

  CoorbitMap(const GroupAction<Scalar>& action, const WindowBank<Scalar>& bank, SelectionSet sel)
      : n_(action.order()), dim_(action.dim()), sel_(std::move(sel)) {
    if (bank.dim() != action.dim()) {
      throw Error(Errc::dimension_mismatch, "bank dim " + std::to_string(bank.dim()) +
                                                " vs action dim " + std::to_string(action.dim()));
    }
    if (sel_.windows() != bank.size()) {
      throw Error(Errc::selection_shape_mismatch,
                  std::to_string(sel_.windows()) + " rank lists for " + std::to_string(bank.size()) +
                      " windows");
    }
    if (sel_.max_rank() > n_) {
      throw Error(Errc::rank_out_of_range, "rank " + std::to_string(sel_.max_rank()) +
                                               " exceeds group order " + std::to_string(n_));
    }
    stacked_.resize(static_cast<Eigen::Index>(bank.size()) * n_, dim_);
    for (int i = 0; i < bank.size(); ++i) {
      stacked_.middleRows(static_cast<Eigen::Index>(i) * n_, n_) = window_orbit(action, bank.window(i));
    }
    depth_.reserve(static_cast<std::size_t>(bank.size()));
    for (int i = 0; i < bank.size(); ++i) depth_.push_back(sel_.ranks(i).back());
  }

  int windows() const noexcept { return sel_.windows(); }
  int output_dim() const noexcept { return sel_.m(); }
  Eigen::Index dim() const noexcept { return dim_; }
  int group_order() const noexcept { return n_; }
  const SelectionSet& selection() const noexcept { return sel_; }
  /// (pN)×d; block i holds the orbit of window i.
  const Matrix& stacked_orbits() const noexcept { return stacked_; }

  /// Raw inner products ⟨U_g w_i, x⟩ in block order.
  template <typename Derived>
  Vector products(const Eigen::MatrixBase<Derived>& x) const {
    if (x.size() != dim_) {
      throw Error(Errc::dimension_mismatch, "point has length " + std::to_string(x.size()) +
                                                ", expected " + std::to_string(dim_));
    }
    return accurate_product(stacked_, x);
  }

  template <typename Derived>
  Vector operator()(const Eigen::MatrixBase<Derived>& x) const {
    Vector raw = products(x);
    Vector out(sel_.m());
    Eigen::Index k = 0;
    for (int i = 0; i < windows(); ++i) {
      Scalar* block = raw.data() + static_cast<Eigen::Index>(i) * n_;
      const int depth = depth_[static_cast<std::size_t>(i)];
      std::partial_sort(block, block + depth, block + n_, std::greater<Scalar>());
      for (int rank : sel_.ranks(i)) out(k++) = block[rank - 1];
    }
    // S_i is stored increasing, so each block is already non-increasing and
    // the inner re-sort is the identity.
    assert(blocks_sorted(out));
    return out;
  }

  /// max_g ⟨U_g w_i, x⟩ per window.
  template <typename Derived>
  Vector max_filter(const Eigen::MatrixBase<Derived>& x) const {
    const Vector raw = products(x);
    Vector out(windows());
    for (int i = 0; i < windows(); ++i) {
      out(i) = raw.segment(static_cast<Eigen::Index>(i) * n_, n_).maxCoeff();
    }
    return out;
  }

 private:
  bool blocks_sorted(const Vector& out) const {
    Eigen::Index k = 0;
    for (int i = 0; i < windows(); ++i) {
      const auto len = static_cast<Eigen::Index>(sel_.ranks(i).size());
      for (Eigen::Index t = 1; t < len; ++t) {
        if (out(k + t) > out(k + t - 1)) return false;
      }
      k += len;
    }
    return true;
  }

  int n_;
  Eigen::Index dim_;
  SelectionSet sel_;
  Matrix stacked_;
  std::vector<int> depth_;
};

template <typename Scalar, typename Derived>
VectorX<Scalar> coorbit_map(const GroupAction<Scalar>& action, const WindowBank<Scalar>& bank,
                            const SelectionSet& sel, const Eigen::MatrixBase<Derived>& x) {
  return CoorbitMap<Scalar>(action, bank, sel)(x);
}

template <typename Scalar, typename Derived>
VectorX<Scalar> max_filter(const GroupAction<Scalar>& action, const WindowBank<Scalar>& bank,
                           const Eigen::MatrixBase<Derived>& x) {
  return CoorbitMap<Scalar>(action, bank, SelectionSet::singleton(bank.size())).max_filter(x);
}

}  // namespace coorbit
