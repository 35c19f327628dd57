#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <utility>
#include <vector>

#include "qlrap/errors.hpp"

namespace qlrap {

using ComplexScalar = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

// Numerical tolerances shared across the library. Every value can be
// overridden through the CLI --config file.
struct Tolerances {
  double herm_tol = 1e-9;        // hermiticity of raw inputs
  double trace_tol = 1e-9;       // unit trace / unit norm
  double psd_tol = 1e-9;         // allowed eigenvalue dip below zero
  double ortho_tol = 1e-8;       // eigenvector orthonormality
  double recon_tol = 1e-8;       // spectral reconstruction residual
  double proj_tol = 1e-8;        // projector idempotency residual
  double sum_tol = 1e-9;         // majorization sum equality
  double imag_tol = 1e-9;        // allowed imaginary dust on real quantities
  double rank_tol = 1e-10;       // eigenvalue threshold when counting rank
  double degeneracy_tol = 1e-9;  // eigenvalue gap treated as degenerate
};

// d x d complex matrix, Hermitian within herm_tol. The raw input carrier;
// rejects non-finite entries and non-square shapes at construction.
class HermitianOperator {
 public:
  explicit HermitianOperator(CMatrix m, const Tolerances& tol = {}) : mat_(std::move(m)) {
    if (mat_.rows() < 1 || mat_.rows() != mat_.cols())
      throw DimMismatch("operator must be square with dim >= 1");
    if (!mat_.allFinite()) throw Error("operator has non-finite entries");
    const double v = (mat_ - mat_.adjoint()).cwiseAbs().maxCoeff();
    if (v > tol.herm_tol) throw NotHermitian(v);
  }

  Index dim() const { return mat_.rows(); }
  const CMatrix& matrix() const { return mat_; }

 private:
  CMatrix mat_;
};

// Descending eigenvalues with matching orthonormal eigenvectors; column i of
// `vectors` pairs with values[i].
struct Spectrum {
  RVector values;
  CMatrix vectors;

  Index dim() const { return values.size(); }

  CMatrix reconstruct() const {
    return vectors * values.asDiagonal() * vectors.adjoint();
  }

  double orthonormality_error() const {
    const Index d = dim();
    return (vectors.adjoint() * vectors - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff();
  }

  double reconstruction_error(const CMatrix& a) const {
    return (reconstruct() - a).cwiseAbs().maxCoeff();
  }
};

// Full eigendecomposition, eigenvalues in non-increasing order. Ties keep the
// underlying solver's output order; no re-sorting beyond the reversal.
inline Spectrum eigh(const HermitianOperator& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a.matrix());
  if (es.info() != Eigen::Success) throw NoConvergence("eigensolver did not converge");
  Spectrum s;
  s.values = es.eigenvalues().reverse();
  s.vectors = es.eigenvectors().rowwise().reverse();
  return s;
}

class DensityMatrix;
inline DensityMatrix validate_density(const HermitianOperator& a, const Tolerances& tol);

// PSD, unit-trace Hermitian matrix. Construction goes through
// validate_density or from_spectrum; the eigendecomposition is computed once
// and cached. Eigenvalues in (-psd_tol, 0) are clamped to zero and the trace
// renormalized, so round-tripped states stay valid.
class DensityMatrix {
 public:
  Index dim() const { return mat_.rows(); }
  const CMatrix& matrix() const { return mat_; }
  const Spectrum& spectrum() const { return spec_; }
  const RVector& eigenvalues() const { return spec_.values; }

  double purity() const { return spec_.values.squaredNorm(); }

  // Number of eigenvalues above rank_tol.
  Index rank(double rank_tol = 1e-10) const {
    return (spec_.values.array() > rank_tol).count();
  }

  // Build from a known eigensystem. Values may arrive unsorted (they are
  // stable-sorted descending along with their vectors), must sum to one
  // within trace_tol and sit above -psd_tol; small negatives are clamped.
  static DensityMatrix from_spectrum(RVector values, CMatrix vectors,
                                     const Tolerances& tol = {}) {
    const Index d = values.size();
    if (d < 1 || vectors.rows() != d || vectors.cols() != d)
      throw DimMismatch("spectrum values/vectors shape mismatch");
    if (!values.allFinite() || !vectors.allFinite())
      throw Error("spectrum has non-finite entries");

    const double ortho = (vectors.adjoint() * vectors - CMatrix::Identity(d, d))
                             .cwiseAbs()
                             .maxCoeff();
    if (ortho > tol.ortho_tol) throw Error("eigenvector set is not orthonormal");

    const double min_ev = values.minCoeff();
    if (min_ev < -tol.psd_tol) throw NotPSD(-min_ev);
    const double tr_violation = std::abs(values.sum() - 1.0);
    if (tr_violation > tol.trace_tol) throw NotUnitTrace(tr_violation);

    RVector clamped = values.cwiseMax(0.0);
    clamped /= clamped.sum();

    std::vector<Index> order(static_cast<size_t>(d));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index i, Index j) { return clamped[i] > clamped[j]; });

    Spectrum s;
    s.values.resize(d);
    s.vectors.resize(d, d);
    for (Index i = 0; i < d; ++i) {
      s.values[i] = clamped[order[static_cast<size_t>(i)]];
      s.vectors.col(i) = vectors.col(order[static_cast<size_t>(i)]);
    }
    CMatrix m = s.reconstruct();
    return DensityMatrix(std::move(m), std::move(s));
  }

 private:
  DensityMatrix(CMatrix m, Spectrum s) : mat_(std::move(m)), spec_(std::move(s)) {}
  friend DensityMatrix validate_density(const HermitianOperator&, const Tolerances&);

  CMatrix mat_;
  Spectrum spec_;
};

// Check a raw Hermitian operator against the density-matrix invariants and
// return the validated state. Errors carry the measured violation: trace is
// checked before positivity, hermiticity already at HermitianOperator level.
inline DensityMatrix validate_density(const HermitianOperator& a, const Tolerances& tol = {}) {
  const double tr_violation = std::abs(a.matrix().trace() - ComplexScalar(1.0, 0.0));
  if (tr_violation > tol.trace_tol) throw NotUnitTrace(tr_violation);

  Spectrum s = eigh(a);
  const double min_ev = s.values.minCoeff();
  if (min_ev < -tol.psd_tol) throw NotPSD(-min_ev);

  if (min_ev < 0.0) {
    RVector clamped = s.values.cwiseMax(0.0);
    clamped /= clamped.sum();
    Spectrum cs{std::move(clamped), s.vectors};
    CMatrix m = cs.reconstruct();
    return DensityMatrix(std::move(m), std::move(cs));
  }
  return DensityMatrix(a.matrix(), std::move(s));
}

// Rank-k orthogonal projector onto selected eigenvectors of a Spectrum.
class Projector {
 public:
  Projector(const Spectrum& s, Index leading_k) {
    if (leading_k < 1 || leading_k > s.dim())
      throw RankOutOfRange(leading_k, s.dim());
    basis_ = s.vectors.leftCols(leading_k);
  }

  Projector(const Spectrum& s, const std::vector<Index>& indices) {
    if (indices.empty()) throw RankOutOfRange(0, s.dim());
    basis_.resize(s.dim(), static_cast<Index>(indices.size()));
    for (size_t k = 0; k < indices.size(); ++k) {
      if (indices[k] < 0 || indices[k] >= s.dim())
        throw RankOutOfRange(indices[k], s.dim());
      basis_.col(static_cast<Index>(k)) = s.vectors.col(indices[k]);
    }
  }

  Index dim() const { return basis_.rows(); }
  Index rank() const { return basis_.cols(); }
  const CMatrix& basis() const { return basis_; }
  CMatrix matrix() const { return basis_ * basis_.adjoint(); }

 private:
  CMatrix basis_;
};

namespace detail {
inline void require_same_dim(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim())
    throw DimMismatch("states have dims " + std::to_string(a.dim()) + " and " +
                      std::to_string(b.dim()));
}
}  // namespace detail

// Tr[(rho - sigma)^2], the squared Frobenius norm of the difference.
inline double hs_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  detail::require_same_dim(rho, sigma);
  return (rho.matrix() - sigma.matrix()).squaredNorm();
}

// (1/2) Tr|rho - sigma|: half the absolute eigenvalue sum of the difference.
inline double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
  detail::require_same_dim(rho, sigma);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(rho.matrix() - sigma.matrix(),
                                            Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NoConvergence("eigensolver did not converge");
  const double v = 0.5 * es.eigenvalues().cwiseAbs().sum();
  return std::clamp(v, 0.0, 1.0);
}

// Tr(rho sigma), real within imag_tol, clamped to [0, 1].
inline double overlap(const DensityMatrix& rho, const DensityMatrix& sigma,
                      const Tolerances& tol = {}) {
  detail::require_same_dim(rho, sigma);
  const ComplexScalar t = rho.matrix().transpose().cwiseProduct(sigma.matrix()).sum();
  if (std::abs(t.imag()) > tol.imag_tol)
    throw Error("overlap has imaginary part " + std::to_string(t.imag()));
  return std::clamp(t.real(), 0.0, 1.0);
}

inline double purity(const DensityMatrix& rho) { return rho.purity(); }

enum class Subsystem { System, Ancilla };

// Reduce a normalized pure state on system (x) ancilla to one marginal.
// Amplitude layout: psi[i_sys * d_anc + i_anc] (ancilla index fastest).
inline DensityMatrix partial_trace(const CVector& psi, Index d_sys, Index d_anc,
                                   Subsystem keep, const Tolerances& tol = {}) {
  if (d_sys < 1 || d_anc < 1 || psi.size() != d_sys * d_anc)
    throw DimMismatch("state length does not factor as d_sys * d_anc");
  if (!psi.allFinite()) throw Error("state vector has non-finite entries");
  const double nrm_violation = std::abs(psi.squaredNorm() - 1.0);
  if (nrm_violation > tol.trace_tol) throw NotNormalized(nrm_violation);

  using RowMajorC =
      Eigen::Matrix<ComplexScalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajorC> amp(psi.data(), d_sys, d_anc);

  CMatrix reduced;
  if (keep == Subsystem::System)
    reduced = amp * amp.adjoint();
  else
    reduced = amp.transpose() * amp.conjugate();
  return validate_density(HermitianOperator(std::move(reduced), tol), tol);
}

// True iff every prefix sum of a (sorted descending) dominates that of b,
// with the totals equal within sum_tol. Prefix comparisons get the same
// slack so that analytically-true relations survive round-off.
inline bool majorizes(const RVector& a, const RVector& b, const Tolerances& tol = {}) {
  if (a.size() != b.size())
    throw LengthMismatch("vectors have lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  if (!a.allFinite() || !b.allFinite()) throw Error("majorization input has non-finite entries");
  const double sum_gap = std::abs(a.sum() - b.sum());
  if (sum_gap > tol.sum_tol) throw SumMismatch(sum_gap);

  std::vector<double> sa(a.data(), a.data() + a.size());
  std::vector<double> sb(b.data(), b.data() + b.size());
  std::sort(sa.begin(), sa.end(), std::greater<>());
  std::sort(sb.begin(), sb.end(), std::greater<>());

  double pa = 0.0, pb = 0.0;
  for (size_t i = 0; i < sa.size(); ++i) {
    pa += sa[i];
    pb += sb[i];
    if (pa < pb - tol.sum_tol) return false;
  }
  return true;
}

// Worst prefix margin of spectrum-majorizes-diagonal style comparisons:
// min_k (prefix_a_k - prefix_b_k) over descending sorts. Negative means the
// majorization failed by that amount.
inline double majorization_margin(const RVector& a, const RVector& b) {
  std::vector<double> sa(a.data(), a.data() + a.size());
  std::vector<double> sb(b.data(), b.data() + b.size());
  std::sort(sa.begin(), sa.end(), std::greater<>());
  std::sort(sb.begin(), sb.end(), std::greater<>());
  double pa = 0.0, pb = 0.0, worst = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < sa.size(); ++i) {
    pa += sa[i];
    pb += sb[i];
    worst = std::min(worst, pa - pb);
  }
  return worst;
}

// Real diagonal of sigma expressed in the given orthonormal column basis.
inline RVector basis_diagonal(const DensityMatrix& sigma, const CMatrix& basis) {
  if (basis.rows() != sigma.dim())
    throw DimMismatch("basis rows do not match state dim");
  RVector d(basis.cols());
  for (Index i = 0; i < basis.cols(); ++i)
    d[i] = (basis.col(i).adjoint() * sigma.matrix() * basis.col(i)).value().real();
  return d;
}

}  // namespace qlrap
