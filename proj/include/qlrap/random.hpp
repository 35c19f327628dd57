#pragma once

#include <random>

#include "qlrap/core.hpp"

namespace qlrap {

using Rng = std::mt19937_64;

// n non-negative parts summing to `total`, uniform on the scaled simplex via
// sorted uniform spacings (exchangeable, no rejection).
inline RVector simplex_sample(Index n, double total, Rng& rng) {
  if (n < 1) throw Error("simplex_sample needs n >= 1");
  if (n == 1) {
    RVector one(1);
    one[0] = total;
    return one;
  }
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> cuts(static_cast<size_t>(n - 1));
  for (auto& c : cuts) c = unif(rng);
  std::sort(cuts.begin(), cuts.end());
  RVector parts(n);
  double prev = 0.0;
  for (Index i = 0; i + 1 < n; ++i) {
    parts[i] = (cuts[static_cast<size_t>(i)] - prev) * total;
    prev = cuts[static_cast<size_t>(i)];
  }
  parts[n - 1] = (1.0 - prev) * total;
  return parts;
}

// Matrix of iid standard complex Gaussians.
inline CMatrix ginibre(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix z(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i)
      z(i, j) = ComplexScalar(normal(rng), normal(rng)) / std::sqrt(2.0);
  return z;
}

// Haar-distributed unitary: QR of a complex Gaussian matrix with the R
// diagonal phases folded back into Q.
inline CMatrix haar_unitary(Index d, Rng& rng) {
  const CMatrix z = ginibre(d, d, rng);
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ();
  const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  CVector phases(d);
  for (Index i = 0; i < d; ++i) {
    const double m = std::abs(r(i, i));
    phases[i] = m > 0.0 ? r(i, i) / m : ComplexScalar(1.0, 0.0);
  }
  return q * phases.asDiagonal();
}

inline CVector random_pure_state(Index d, Rng& rng) {
  CVector psi = ginibre(d, 1, rng);
  const double nrm = psi.norm();
  if (nrm == 0.0) throw ZeroVector("drew an exactly zero state vector");
  return psi / nrm;
}

// Random Hermitian with Gaussian entries, A = (Z + Z^dagger)/2.
inline HermitianOperator random_hermitian(Index d, Rng& rng, const Tolerances& tol = {}) {
  const CMatrix z = ginibre(d, d, rng);
  CMatrix h = (z + z.adjoint()) / 2.0;
  return HermitianOperator(std::move(h), tol);
}

// Random density matrix of exact rank: Haar eigenbasis plus a flat-Dirichlet
// spectrum on `rank` entries, zeros elsewhere. Deterministic per generator
// state.
inline DensityMatrix random_density(Index d, Index rank, Rng& rng,
                                    const Tolerances& tol = {}) {
  if (rank < 1 || rank > d) throw RankOutOfRange(rank, d);
  const CMatrix u = haar_unitary(d, rng);
  RVector values = RVector::Zero(d);
  values.head(rank) = simplex_sample(rank, 1.0, rng);
  return DensityMatrix::from_spectrum(std::move(values), u, tol);
}

}  // namespace qlrap
