#pragma once

// Window sampling, the linear reduction ℓ : R^m → R^{2d}, and Ψ = ℓ ∘ Φ.

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <Eigen/QR>

#include "coorbit/coorbit.hpp"
#include "coorbit/error.hpp"
#include "coorbit/group.hpp"
#include "coorbit/metric.hpp"
#include "coorbit/parallel.hpp"
#include "coorbit/random.hpp"

namespace coorbit {

/// p i.i.d. standard Gaussian windows in R^d.
template <typename Scalar = double>
WindowBank<Scalar> sample_windows(int d, int p, std::uint64_t seed) {
  if (d < 1 || p < 1) throw Error(Errc::config_inconsistent, "sample_windows needs d ≥ 1 and p ≥ 1");
  Rng rng(seed);
  MatrixX<Scalar> windows(d, p);
  for (int i = 0; i < p; ++i) {
    VectorX<Scalar> w;
    do {
      w = gaussian_vector<Scalar>(rng, d);
    } while (w.squaredNorm() == Scalar(0));
    windows.col(i) = w;
  }
  return WindowBank<Scalar>(std::move(windows));
}

template <typename Scalar = double>
struct LinearReduction {
  /// (2d)×m.
  MatrixX<Scalar> matrix;
  std::uint64_t seed = 0;

  Eigen::Index in_dim() const noexcept { return matrix.cols(); }
  Eigen::Index out_dim() const noexcept { return matrix.rows(); }
};

template <typename Scalar>
bool full_column_rank(const MatrixX<Scalar>& m) {
  Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(m);
  qr.setThreshold(Scalar(1e-10));
  return qr.rank() == m.cols();
}

/// Gaussian (2d)×m matrix scaled by 1/√m. For m ≤ 2d the map is injective
/// almost surely; that is checked.
template <typename Scalar = double>
LinearReduction<Scalar> sample_reduction(int m, int d, std::uint64_t seed) {
  if (m < 1) throw Error(Errc::config_inconsistent, "reduction input dimension must be positive");
  detail::require_dim(d, 2);
  Rng rng(seed);
  LinearReduction<Scalar> ell{gaussian_matrix<Scalar>(rng, 2 * d, m) / std::sqrt(Scalar(m)), seed};
  if (m <= 2 * d && !full_column_rank(ell.matrix)) {
    throw Error(Errc::config_inconsistent, "sampled reduction is rank deficient");
  }
  return ell;
}

/// Everything needed to evaluate Ψ; reduction absent means ℓ = identity.
template <typename Scalar = double>
struct EmbeddingConfig {
  WindowBank<Scalar> bank;
  SelectionSet sel;
  std::optional<LinearReduction<Scalar>> reduction;
  std::uint64_t seed = 0;

  /// Output dimension: 2d with a reduction, m without.
  Eigen::Index output_dim() const {
    return reduction ? reduction->out_dim() : static_cast<Eigen::Index>(sel.m());
  }
};

/// Windows from `seed`; a reduction (seeded by mix_seed(seed, 1)) only when
/// m exceeds 2d.
template <typename Scalar = double>
EmbeddingConfig<Scalar> make_config(int d, int p, SelectionSet sel, std::uint64_t seed) {
  WindowBank<Scalar> bank = sample_windows<Scalar>(d, p, seed);
  std::optional<LinearReduction<Scalar>> reduction;
  if (sel.m() > 2 * d) reduction = sample_reduction<Scalar>(sel.m(), d, mix_seed(seed, 1));
  return {std::move(bank), std::move(sel), std::move(reduction), seed};
}

template <typename Scalar>
void check_config(const EmbeddingConfig<Scalar>& config, const GroupAction<Scalar>& action) {
  if (config.bank.dim() != action.dim()) {
    throw Error(Errc::config_inconsistent, "bank dim " + std::to_string(config.bank.dim()) +
                                               " vs action dim " + std::to_string(action.dim()));
  }
  if (config.sel.windows() != config.bank.size()) {
    throw Error(Errc::config_inconsistent, "selection has " + std::to_string(config.sel.windows()) +
                                               " lists for " + std::to_string(config.bank.size()) +
                                               " windows");
  }
  if (config.sel.max_rank() > action.order()) {
    throw Error(Errc::config_inconsistent, "selection rank exceeds group order");
  }
  if (config.reduction) {
    if (config.reduction->in_dim() != config.sel.m()) {
      throw Error(Errc::config_inconsistent, "reduction expects m = " +
                                                 std::to_string(config.reduction->in_dim()) +
                                                 ", selection has m = " + std::to_string(config.sel.m()));
    }
    if (config.reduction->out_dim() != 2 * action.dim()) {
      throw Error(Errc::config_inconsistent, "reduction output is not 2d");
    }
  }
}

/// Ψ with the coorbit map precomputed once.
template <typename Scalar = double>
class Embedding {
 public:
  Embedding(const EmbeddingConfig<Scalar>& config, const GroupAction<Scalar>& action)
      : phi_((check_config(config, action), CoorbitMap<Scalar>(action, config.bank, config.sel))),
        reduction_(config.reduction) {}

  template <typename Derived>
  VectorX<Scalar> operator()(const Eigen::MatrixBase<Derived>& x) const {
    VectorX<Scalar> raw = phi_(x);
    if (!reduction_) return raw;
    return reduction_->matrix * raw;
  }

  Eigen::Index output_dim() const {
    return reduction_ ? reduction_->out_dim() : static_cast<Eigen::Index>(phi_.output_dim());
  }
  const CoorbitMap<Scalar>& coorbit() const noexcept { return phi_; }

 private:
  CoorbitMap<Scalar> phi_;
  std::optional<LinearReduction<Scalar>> reduction_;
};

template <typename Scalar, typename Derived>
VectorX<Scalar> embed_point(const EmbeddingConfig<Scalar>& config, const GroupAction<Scalar>& action,
                            const Eigen::MatrixBase<Derived>& x) {
  return Embedding<Scalar>(config, action)(x);
}

/// One row per point, in dataset order.
template <typename Scalar>
MatrixX<Scalar> embed_dataset(const EmbeddingConfig<Scalar>& config, const GroupAction<Scalar>& action,
                              const Dataset<Scalar>& data, unsigned threads = 1) {
  if (data.dim() != action.dim()) {
    throw Error(Errc::dimension_mismatch, "dataset dim " + std::to_string(data.dim()) +
                                              " vs action dim " + std::to_string(action.dim()));
  }
  const Embedding<Scalar> psi(config, action);
  MatrixX<Scalar> out(static_cast<Eigen::Index>(data.size()), psi.output_dim());
  parallel_for(data.size(), threads, [&](std::size_t k) {
    out.row(static_cast<Eigen::Index>(k)) = psi(data.point(k)).transpose();
  });
  return out;
}

}  // namespace coorbit
