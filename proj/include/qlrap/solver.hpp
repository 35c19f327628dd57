#pragma once

#include <optional>
#include <string>

#include "qlrap/core.hpp"
#include "qlrap/random.hpp"

namespace qlrap {

enum class Metric { HilbertSchmidt, Trace };

inline const char* metric_name(Metric m) {
  return m == Metric::HilbertSchmidt ? "hs" : "trace";
}

inline void check_rank_bound(Index rank_bound, Index d) {
  if (rank_bound < 1 || rank_bound > d) throw RankOutOfRange(rank_bound, d);
}

// Closed-form optimum of the rank-constrained closest-state problem for one
// metric: the optimal state, its distance to rho, and the spectral data the
// construction used.
struct QlrapSolution {
  Metric metric;
  Index rank_bound;
  DensityMatrix sigma_star;
  double distance_star;
  Spectrum eigenbasis;        // of the input rho
  double truncated_weight;    // 1 - (weight kept by the leading components)
  bool degenerate_boundary;   // eigenvalue tie at the rank cut; basis choice arbitrary
};

// The set of trace-distance optimal states: all states diagonal in rho's
// leading eigenbasis whose weights dominate the corresponding eigenvalues.
struct TraceOptimalFamily {
  CMatrix eigenbasis;    // d x R leading eigenvectors of rho
  RVector lower_bounds;  // rho's leading eigenvalues, non-increasing
  double slack;          // 1 - sum(lower_bounds), free weight above the bounds

  Index dim() const { return eigenbasis.rows(); }
  Index rank_bound() const { return lower_bounds.size(); }
};

namespace detail {

inline double kept_weight(const RVector& values, Index rank_bound) {
  return values.head(rank_bound).sum();
}

inline bool boundary_is_degenerate(const RVector& values, Index rank_bound,
                                   const Tolerances& tol) {
  if (rank_bound >= values.size()) return false;
  return values[rank_bound - 1] - values[rank_bound] <= tol.degeneracy_tol;
}

}  // namespace detail

// Keep the leading rank_bound spectral components of rho, unnormalized:
// project rho onto its leading eigenvectors from both sides. PSD, but the
// trace equals only the kept weight.
inline HermitianOperator truncate(const DensityMatrix& rho, Index rank_bound,
                                  const Tolerances& tol = {}) {
  check_rank_bound(rank_bound, rho.dim());
  const Spectrum& s = rho.spectrum();
  const CMatrix basis = s.vectors.leftCols(rank_bound);
  CMatrix t = basis * s.values.head(rank_bound).asDiagonal() * basis.adjoint();
  return HermitianOperator(std::move(t), tol);
}

// Optimal squared Hilbert-Schmidt distance without building the state:
// the squared weight of the discarded eigenvalues plus the uniform-lift
// penalty slack^2 / rank_bound.
inline double solve_hs_distance(const DensityMatrix& rho, Index rank_bound,
                                const Tolerances& tol = {}) {
  (void)tol;
  check_rank_bound(rank_bound, rho.dim());
  const RVector& values = rho.eigenvalues();
  const Index d = rho.dim();
  const double tail_sq = values.tail(d - rank_bound).squaredNorm();
  const double slack = std::max(0.0, 1.0 - detail::kept_weight(values, rank_bound));
  return tail_sq + slack * slack / static_cast<double>(rank_bound);
}

// Optimal trace distance: the weight of the discarded eigenvalues.
inline double solve_trace_distance(const DensityMatrix& rho, Index rank_bound,
                                   const Tolerances& tol = {}) {
  (void)tol;
  check_rank_bound(rank_bound, rho.dim());
  const Index d = rho.dim();
  return std::max(0.0, rho.eigenvalues().tail(d - rank_bound).sum());
}

namespace detail {

// The shared optimal state: keep the leading components and lift each kept
// eigenvalue by slack / rank_bound so the trace returns to one. Unique
// optimum for Hilbert-Schmidt, one member of the optimal family for trace.
inline DensityMatrix lifted_truncation(const DensityMatrix& rho, Index rank_bound,
                                       const Tolerances& tol) {
  const Spectrum& s = rho.spectrum();
  const Index d = rho.dim();
  const double slack = std::max(0.0, 1.0 - kept_weight(s.values, rank_bound));
  RVector values = RVector::Zero(d);
  values.head(rank_bound) =
      s.values.head(rank_bound).array() + slack / static_cast<double>(rank_bound);
  return DensityMatrix::from_spectrum(std::move(values), s.vectors, tol);
}

}  // namespace detail

// Hilbert-Schmidt optimum. A tie at the rank boundary makes the component
// choice arbitrary; the solution is still returned, flagged, using the
// eigensolver's stable order.
inline QlrapSolution solve_hs(const DensityMatrix& rho, Index rank_bound,
                              const Tolerances& tol = {}) {
  check_rank_bound(rank_bound, rho.dim());
  const Spectrum& s = rho.spectrum();
  return QlrapSolution{Metric::HilbertSchmidt,
                       rank_bound,
                       detail::lifted_truncation(rho, rank_bound, tol),
                       solve_hs_distance(rho, rank_bound, tol),
                       s,
                       std::max(0.0, 1.0 - detail::kept_weight(s.values, rank_bound)),
                       detail::boundary_is_degenerate(s.values, rank_bound, tol)};
}

// Canonical trace-distance optimum: the same lifted truncation, scored with
// the trace metric. Not unique; see trace_family for the whole optimal set.
inline QlrapSolution solve_trace_canonical(const DensityMatrix& rho, Index rank_bound,
                                           const Tolerances& tol = {}) {
  check_rank_bound(rank_bound, rho.dim());
  const Spectrum& s = rho.spectrum();
  return QlrapSolution{Metric::Trace,
                       rank_bound,
                       detail::lifted_truncation(rho, rank_bound, tol),
                       solve_trace_distance(rho, rank_bound, tol),
                       s,
                       std::max(0.0, 1.0 - detail::kept_weight(s.values, rank_bound)),
                       detail::boundary_is_degenerate(s.values, rank_bound, tol)};
}

inline TraceOptimalFamily trace_family(const DensityMatrix& rho, Index rank_bound,
                                       const Tolerances& tol = {}) {
  (void)tol;
  check_rank_bound(rank_bound, rho.dim());
  const Spectrum& s = rho.spectrum();
  TraceOptimalFamily fam;
  fam.eigenbasis = s.vectors.leftCols(rank_bound);
  fam.lower_bounds = s.values.head(rank_bound);
  fam.slack = std::max(0.0, 1.0 - fam.lower_bounds.sum());
  return fam;
}

// Membership test for the trace-optimal family. Checks, each within
// membership_tol: support confined to the family's basis, diagonality in
// that basis, per-component weights above the lower bounds, unit trace.
// Diagonality is judged against the concrete computed eigenbasis; with
// allow_block_rotation, components whose bounds tie within degeneracy_tol
// are compared as blocks (diagonal up to a rotation inside each block).
inline bool trace_family_contains(const TraceOptimalFamily& family,
                                  const DensityMatrix& sigma, double membership_tol,
                                  bool allow_block_rotation = false,
                                  const Tolerances& tol = {}) {
  if (sigma.dim() != family.dim())
    throw DimMismatch("state dim does not match family dim");
  const Index r = family.rank_bound();
  const CMatrix& basis = family.eigenbasis;

  const CMatrix m = basis.adjoint() * sigma.matrix() * basis;  // r x r
  const double support_residual =
      (sigma.matrix() - basis * m * basis.adjoint()).cwiseAbs().maxCoeff();
  if (support_residual > membership_tol) return false;

  if (std::abs(m.trace().real() - 1.0) > membership_tol) return false;

  if (!allow_block_rotation) {
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < r; ++j) {
        if (i == j) continue;
        if (std::abs(m(i, j)) > membership_tol) return false;
      }
    for (Index i = 0; i < r; ++i)
      if (m(i, i).real() < family.lower_bounds[i] - membership_tol) return false;
    return true;
  }

  // Blocks of equal lower bounds; members need only be block-diagonal with
  // block spectra above the shared bound.
  Index start = 0;
  while (start < r) {
    Index stop = start + 1;
    while (stop < r &&
           family.lower_bounds[stop - 1] - family.lower_bounds[stop] <= tol.degeneracy_tol)
      ++stop;
    for (Index i = start; i < stop; ++i)
      for (Index j = 0; j < r; ++j) {
        if (j >= start && j < stop) continue;
        if (std::abs(m(i, j)) > membership_tol) return false;
      }
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m.block(start, start, stop - start, stop - start),
                                              Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NoConvergence("eigensolver did not converge");
    if (es.eigenvalues().minCoeff() < family.lower_bounds[start] - membership_tol)
      return false;
    start = stop;
  }
  return true;
}

// Draw a family member uniformly: weights = lower bounds plus a uniform
// simplex split of the slack. A slack-free family has exactly one member.
inline DensityMatrix trace_family_sample(const TraceOptimalFamily& family,
                                         uint64_t rng_seed, const Tolerances& tol = {}) {
  const Index r = family.rank_bound();
  RVector weights = family.lower_bounds;
  if (family.slack > 0.0) {
    Rng rng(rng_seed);
    weights += simplex_sample(r, family.slack, rng);
  }
  CMatrix m = family.eigenbasis * weights.asDiagonal() * family.eigenbasis.adjoint();
  return validate_density(HermitianOperator(std::move(m), tol), tol);
}

// The tempting-but-suboptimal answer: rescale the truncation to unit trace
// multiplicatively instead of lifting it additively. Kept as a comparison
// baseline; never beats the lifted truncation under the HS metric.
inline DensityMatrix naive_rescale(const DensityMatrix& rho, Index rank_bound,
                                   const Tolerances& tol = {}) {
  check_rank_bound(rank_bound, rho.dim());
  const Spectrum& s = rho.spectrum();
  const double kept = detail::kept_weight(s.values, rank_bound);
  if (kept <= tol.rank_tol)
    throw ZeroTrace("all kept eigenvalues are zero; cannot rescale");
  RVector values = RVector::Zero(rho.dim());
  values.head(rank_bound) = s.values.head(rank_bound) / kept;
  return DensityMatrix::from_spectrum(std::move(values), s.vectors, tol);
}

}  // namespace qlrap
