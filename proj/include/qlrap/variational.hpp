#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qlrap/core.hpp"
#include "qlrap/random.hpp"
#include "qlrap/solver.hpp"

namespace qlrap {

// Full purification parameterization of a rank-constrained mixed state: real
// and imaginary parts of every system x ancilla amplitude, ancilla index
// fastest. The ancilla dimension enforces the rank bound structurally.
struct PurificationAnsatz {
  Index d_sys = 0;
  Index d_anc = 0;
  RVector params;  // length 2 * d_sys * d_anc: [re, im] per amplitude

  PurificationAnsatz(Index sys, Index anc, RVector p)
      : d_sys(sys), d_anc(anc), params(std::move(p)) {
    if (d_sys < 1 || d_anc < 1) throw DimMismatch("ansatz dims must be >= 1");
    if (params.size() != 2 * d_sys * d_anc)
      throw DimMismatch("ansatz parameter vector has wrong length");
    if (!params.allFinite()) throw Error("ansatz parameters must be finite");
    if (params.cwiseAbs().maxCoeff() == 0.0)
      throw ZeroVector("ansatz needs at least one nonzero amplitude");
  }

  static PurificationAnsatz from_amplitudes(const CMatrix& amplitudes) {
    RVector p(2 * amplitudes.rows() * amplitudes.cols());
    Index k = 0;
    for (Index i = 0; i < amplitudes.rows(); ++i)
      for (Index a = 0; a < amplitudes.cols(); ++a) {
        p[2 * k] = amplitudes(i, a).real();
        p[2 * k + 1] = amplitudes(i, a).imag();
        ++k;
      }
    return PurificationAnsatz(amplitudes.rows(), amplitudes.cols(), std::move(p));
  }

  // Unnormalized amplitude matrix, d_sys x d_anc.
  CMatrix amplitude_matrix() const {
    CMatrix w(d_sys, d_anc);
    Index k = 0;
    for (Index i = 0; i < d_sys; ++i)
      for (Index a = 0; a < d_anc; ++a) {
        w(i, a) = ComplexScalar(params[2 * k], params[2 * k + 1]);
        ++k;
      }
    return w;
  }
};

// Normalize the amplitudes, reshape to system x ancilla and trace the
// ancilla out. The result has rank at most d_anc for any parameter values.
inline DensityMatrix prepare_state(const PurificationAnsatz& ansatz,
                                   const Tolerances& tol = {}) {
  CMatrix w = ansatz.amplitude_matrix();
  const double nrm = w.norm();
  if (nrm == 0.0) throw ZeroVector("ansatz amplitudes are all zero");
  w /= nrm;
  CVector psi(ansatz.d_sys * ansatz.d_anc);
  for (Index i = 0; i < ansatz.d_sys; ++i)
    for (Index a = 0; a < ansatz.d_anc; ++a) psi[i * ansatz.d_anc + a] = w(i, a);
  return partial_trace(psi, ansatz.d_sys, ansatz.d_anc, Subsystem::System, tol);
}

// The squared HS distance split into the three terms a device would estimate
// separately (two purities and the cross overlap).
struct CostTerms {
  double value = 0.0;
  double purity_rho = 0.0;
  double purity_sigma = 0.0;
  double overlap = 0.0;
};

namespace detail {

// Cost terms straight from the unnormalized amplitude matrix, bypassing
// state validation; the optimizer inner loop lives here.
inline CostTerms raw_cost(const CMatrix& rho_mat, double rho_purity, const CMatrix& w) {
  const double n = w.squaredNorm();
  if (n == 0.0) throw ZeroVector("ansatz amplitudes are all zero");
  const CMatrix a = w * w.adjoint();
  CostTerms terms;
  terms.purity_rho = rho_purity;
  terms.purity_sigma = a.squaredNorm() / (n * n);
  terms.overlap = rho_mat.transpose().cwiseProduct(a).sum().real() / n;
  terms.value = terms.purity_rho + terms.purity_sigma - 2.0 * terms.overlap;
  return terms;
}

// Gradient of the cost with respect to the real parameter vector. With
// sigma = W W^dag / N, N = ||W||^2:
//   dC/dWbar = (2/N) [ (sigma - rho) W + (overlap - purity_sigma) W ]
// and the real/imaginary parts pick up a further factor of two.
inline RVector raw_gradient(const CMatrix& rho_mat, const CMatrix& w) {
  const double n = w.squaredNorm();
  if (n == 0.0) throw ZeroVector("ansatz amplitudes are all zero");
  const CMatrix a = w * w.adjoint();
  const CMatrix sigma = a / n;
  const double ps = a.squaredNorm() / (n * n);
  const double ov = rho_mat.transpose().cwiseProduct(a).sum().real() / n;
  const CMatrix g = (2.0 / n) * ((sigma - rho_mat) * w + (ov - ps) * w);

  RVector grad(2 * w.rows() * w.cols());
  Index k = 0;
  for (Index i = 0; i < w.rows(); ++i)
    for (Index c = 0; c < w.cols(); ++c) {
      grad[2 * k] = 2.0 * g(i, c).real();
      grad[2 * k + 1] = 2.0 * g(i, c).imag();
      ++k;
    }
  return grad;
}

inline CMatrix params_to_amplitudes(const RVector& params, Index d_sys, Index d_anc) {
  CMatrix w(d_sys, d_anc);
  Index k = 0;
  for (Index i = 0; i < d_sys; ++i)
    for (Index a = 0; a < d_anc; ++a) {
      w(i, a) = ComplexScalar(params[2 * k], params[2 * k + 1]);
      ++k;
    }
  return w;
}

}  // namespace detail

// HS distance between rho and the ansatz state, with the term decomposition.
inline CostTerms cost(const DensityMatrix& rho, const PurificationAnsatz& ansatz,
                      const Tolerances& tol = {}) {
  (void)tol;
  if (rho.dim() != ansatz.d_sys)
    throw DimMismatch("target dim does not match ansatz system dim");
  return detail::raw_cost(rho.matrix(), rho.purity(), ansatz.amplitude_matrix());
}

// Analytic cost gradient; matches central finite differences to ~1e-5 and is
// orthogonal to the parameter direction (the overall scale is a gauge).
inline RVector gradient(const DensityMatrix& rho, const PurificationAnsatz& ansatz,
                        const Tolerances& tol = {}) {
  (void)tol;
  if (rho.dim() != ansatz.d_sys)
    throw DimMismatch("target dim does not match ansatz system dim");
  return detail::raw_gradient(rho.matrix(), ansatz.amplitude_matrix());
}

struct OptimizeConfig {
  int max_iters = 5000;         // per restart
  int restarts = 5;
  double initial_step = 1.0;    // first line-search trial step
  double convergence_tol = 1e-6;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;     // additive Gaussian noise per cost term, 0 = exact
  double armijo_c = 1e-4;
};

struct VariationalRun {
  std::vector<double> cost_history;  // accepted costs of the winning restart
  RVector final_params;
  DensityMatrix final_state;
  double final_cost = 0.0;
  double target = 0.0;           // closed-form optimum for the same rank bound
  double closed_form_gap = 0.0;  // final_cost - target
  long iterations = 0;           // accepted steps of the winning restart
  bool converged = false;        // final_cost <= target + convergence_tol
  int best_restart = 0;
};

// Gradient descent with halving (Armijo) line search, best of `restarts`
// seeded random starts. Exhausting the budget is not an error: the best run
// so far comes back with converged = false.
inline VariationalRun optimize(const DensityMatrix& rho, Index rank_bound,
                               const OptimizeConfig& config = {}, const Tolerances& tol = {}) {
  check_rank_bound(rank_bound, rho.dim());
  if (config.max_iters < 0 || config.restarts < 1)
    throw Error("optimizer needs max_iters >= 0 and restarts >= 1");

  const double target = solve_hs_distance(rho, rank_bound, tol);
  const Index d_sys = rho.dim();
  const Index d_anc = rank_bound;
  const Index n_params = 2 * d_sys * d_anc;

  std::optional<VariationalRun> best;

  for (int restart = 0; restart < config.restarts; ++restart) {
    Rng rng(config.seed + static_cast<std::uint64_t>(restart));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, config.noise_sigma);

    RVector params(n_params);
    for (Index i = 0; i < n_params; ++i) params[i] = normal(rng);

    const auto eval = [&](const RVector& p) {
      CostTerms t = detail::raw_cost(rho.matrix(), rho.purity(),
                                     detail::params_to_amplitudes(p, d_sys, d_anc));
      if (config.noise_sigma > 0.0) {
        t.purity_sigma += noise(rng);
        t.overlap += noise(rng);
        t.value = t.purity_rho + noise(rng) + t.purity_sigma - 2.0 * t.overlap;
      }
      return t.value;
    };

    double current = eval(params);
    std::vector<double> history{current};
    double step = config.initial_step;

    for (int iter = 0; iter < config.max_iters; ++iter) {
      const RVector g =
          detail::raw_gradient(rho.matrix(), detail::params_to_amplitudes(params, d_sys, d_anc));
      const double g2 = g.squaredNorm();
      if (g2 < 1e-24) break;

      double t = step;
      bool accepted = false;
      while (t > 1e-18) {
        const RVector candidate = params - t * g;
        const double value = eval(candidate);
        if (value <= current - config.armijo_c * t * g2) {
          params = candidate;
          current = value;
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) break;
      history.push_back(current);
      step = 2.0 * t;
      if (current <= target + 0.1 * config.convergence_tol) break;
    }

    if (!best || current < best->final_cost) {
      const long iterations = static_cast<long>(history.size()) - 1;
      best = VariationalRun{std::move(history),
                            params,
                            prepare_state(PurificationAnsatz(d_sys, d_anc, params), tol),
                            current,
                            target,
                            current - target,
                            iterations,
                            false,
                            restart};
    }
  }

  best->converged = best->final_cost <= target + config.convergence_tol;
  return *best;
}

struct PrincipalComponents {
  RVector values;   // top rank_bound eigenvalues, descending
  CMatrix vectors;  // matching columns
  bool degenerate_ordering = false;  // ties make the order arbitrary
};

// Leading eigenpairs of sigma. When sigma is a converged variational state
// for some target, these are the target's principal components; ties within
// the retained block (or at its edge) are flagged since the order then
// carries no information.
inline PrincipalComponents extract_principal_components(const DensityMatrix& sigma,
                                                        Index rank_bound,
                                                        const Tolerances& tol = {}) {
  check_rank_bound(rank_bound, sigma.dim());
  const Spectrum& s = sigma.spectrum();
  PrincipalComponents pc;
  pc.values = s.values.head(rank_bound);
  pc.vectors = s.vectors.leftCols(rank_bound);
  for (Index i = 0; i + 1 < std::min(rank_bound + 1, sigma.dim()); ++i)
    if (s.values[i] - s.values[i + 1] <= tol.degeneracy_tol) pc.degenerate_ordering = true;
  return pc;
}

struct MisorderingReport {
  bool found = false;
  std::optional<DensityMatrix> member;
  RVector member_weights;      // weights on the family's basis positions
  Index pos_low = -1;          // earlier position that ends up lighter...
  Index pos_high = -1;         // ...than this later position
  double member_trace_distance = 0.0;
  double optimal_trace_distance = 0.0;
  int samples_tried = 0;
  int samples_misordered = 0;
  bool constructed = false;
};

// Exhibit the trace-metric ordering hazard: a member of the optimal family
// whose weight ordering disagrees with the target's, achieving the exactly
// optimal trace distance nonetheless. Random members are sampled to show how
// common the hazard is, and a deterministic witness is built whenever one
// exists (none exists when the slack cannot bridge any eigenvalue gap, which
// is reported, not thrown).
inline MisorderingReport misordering_demo(const DensityMatrix& rho, Index rank_bound,
                                          std::uint64_t seed, int n_samples = 64,
                                          const Tolerances& tol = {}) {
  const TraceOptimalFamily family = trace_family(rho, rank_bound, tol);
  const RVector& bounds = family.lower_bounds;
  const Index r = family.rank_bound();

  MisorderingReport report;
  report.optimal_trace_distance = solve_trace_distance(rho, rank_bound, tol);

  const auto misordered_pair = [&](const RVector& w) -> std::pair<Index, Index> {
    for (Index i = 0; i < r; ++i)
      for (Index j = i + 1; j < r; ++j)
        if (w[i] + 1e-12 < w[j]) return {i, j};
    return {-1, -1};
  };

  for (int s = 0; s < n_samples; ++s) {
    ++report.samples_tried;
    const DensityMatrix member = trace_family_sample(family, seed + static_cast<std::uint64_t>(s), tol);
    const RVector w = basis_diagonal(member, family.eigenbasis);
    if (misordered_pair(w).first >= 0) ++report.samples_misordered;
  }

  // Witness construction. First choice: swap the lifted weights of the
  // closest strictly-separated pair, which stays in the family iff the
  // uniform lift covers the gap. Fallback: park all slack on the later index.
  RVector witness;
  Index wi = -1, wj = -1;
  const double lift = family.slack / static_cast<double>(r);
  double best_gap = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < r; ++i)
    for (Index j = i + 1; j < r; ++j) {
      const double gap = bounds[i] - bounds[j];
      if (gap > tol.degeneracy_tol && gap < best_gap) {
        best_gap = gap;
        wi = i;
        wj = j;
      }
    }
  if (wi >= 0 && lift >= best_gap) {
    witness = bounds.array() + lift;
    std::swap(witness[wi], witness[wj]);
  } else if (wi >= 0 && family.slack > best_gap + tol.degeneracy_tol) {
    witness = bounds;
    witness[wj] += family.slack;
  }

  if (witness.size() > 0) {
    CMatrix m = family.eigenbasis * witness.asDiagonal() * family.eigenbasis.adjoint();
    report.member = validate_density(HermitianOperator(std::move(m), tol), tol);
    report.member_weights = witness;
    report.found = true;
    report.constructed = true;
    const auto [i, j] = misordered_pair(witness);
    report.pos_low = i;
    report.pos_high = j;
    report.member_trace_distance = trace_distance(rho, *report.member);
  }
  return report;
}

}  // namespace qlrap
