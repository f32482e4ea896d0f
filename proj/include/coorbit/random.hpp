#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "coorbit/group.hpp"

namespace coorbit {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

template <typename Scalar = double>
VectorX<Scalar> gaussian_vector(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorX<Scalar> v(n);
  for (Eigen::Index k = 0; k < n; ++k) v(k) = static_cast<Scalar>(normal(rng));
  return v;
}

template <typename Scalar = double>
MatrixX<Scalar> gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixX<Scalar> m(rows, cols);
  // Column-major fill order is part of the reproducibility contract.
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = static_cast<Scalar>(normal(rng));
  return m;
}

}  // namespace coorbit
