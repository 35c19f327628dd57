#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include "qlrap/core.hpp"
#include "qlrap/random.hpp"
#include "qlrap/solver.hpp"

namespace qlrap {

struct InstanceDescriptor {
  RVector rho_spectrum;
  Index dim = 0;
  Index rank_bound = 0;
  std::uint64_t seed = 0;
};

// Outcome of an independent search, paired with the closed-form value it is
// auditing. gap = oracle_distance - closed_form_distance; a correct closed
// form keeps it above -1e-9 (the search can never win beyond round-off).
struct OracleReport {
  InstanceDescriptor instance;
  Metric metric;
  double oracle_distance = 0.0;
  double closed_form_distance = 0.0;
  double gap = 0.0;
  DensityMatrix best_candidate;
  std::int64_t candidates_evaluated = 0;
  double gap_bound = 0.0;              // grid only: discretization bound
  std::int64_t near_optimal_count = 0; // grid only, on request
  int restarts_converged = 0;          // descent only
};

namespace detail {

inline std::int64_t binomial(Index n, Index k) {
  if (k < 0 || k > n) return 0;
  std::int64_t r = 1;
  for (Index i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// All k-subsets of {0..n-1} in lexicographic order; with descending input
// eigenvalues the first subset is the leading one.
inline std::vector<std::vector<Index>> all_supports(Index n, Index k) {
  std::vector<std::vector<Index>> out;
  std::vector<Index> cur(static_cast<size_t>(k));
  std::iota(cur.begin(), cur.end(), Index{0});
  while (true) {
    out.push_back(cur);
    Index i = k - 1;
    while (i >= 0 && cur[static_cast<size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++cur[static_cast<size_t>(i)];
    for (Index j = i + 1; j < k; ++j)
      cur[static_cast<size_t>(j)] = cur[static_cast<size_t>(j - 1)] + 1;
  }
  return out;
}

// Distance of a co-diagonal candidate spectrum x (on `support`) to lambda.
inline double codiagonal_distance(const RVector& lambda, const std::vector<Index>& support,
                                  const RVector& x, Metric metric) {
  double fixed = 0.0;
  std::vector<char> in(static_cast<size_t>(lambda.size()), 0);
  for (auto i : support) in[static_cast<size_t>(i)] = 1;
  for (Index i = 0; i < lambda.size(); ++i)
    if (!in[static_cast<size_t>(i)])
      fixed += metric == Metric::HilbertSchmidt ? lambda[i] * lambda[i] : lambda[i];
  double var = 0.0;
  for (size_t k = 0; k < support.size(); ++k) {
    const double e = x[static_cast<Index>(k)] - lambda[support[k]];
    var += metric == Metric::HilbertSchmidt ? e * e : std::abs(e);
  }
  return metric == Metric::HilbertSchmidt ? fixed + var : 0.5 * (fixed + var);
}

struct GridScan {
  double best_hs = std::numeric_limits<double>::infinity();
  double best_tr = std::numeric_limits<double>::infinity();
  std::array<int, 4> best_ticks_hs{};
  std::array<int, 4> best_ticks_tr{};
  std::int64_t leaves = 0;
};

// Enumerate every composition of `resolution` into r <= 4 non-negative tick
// counts; candidate weights are ticks / resolution. Both metrics are scored
// in the same pass (loops unrolled per rank, this is the hot path of the
// verification battery). fixed_* carry the off-support contribution.
inline void scan_support_grid(const double* lam, Index r, int resolution, double fixed_hs,
                              double fixed_tr, GridScan& out) {
  if (r < 1 || r > 4) throw BudgetExceeded("grid scan supports rank bounds 1..4");
  const double inv = 1.0 / resolution;
  const auto consider = [&](double hs, double tr, int k0, int k1, int k2, int k3) {
    ++out.leaves;
    if (hs < out.best_hs) {
      out.best_hs = hs;
      out.best_ticks_hs = {k0, k1, k2, k3};
    }
    if (tr < out.best_tr) {
      out.best_tr = tr;
      out.best_ticks_tr = {k0, k1, k2, k3};
    }
  };

  if (r == 1) {
    const double e = resolution * inv - lam[0];
    consider(fixed_hs + e * e, 0.5 * (fixed_tr + std::abs(e)), resolution, 0, 0, 0);
    return;
  }
  if (r == 2) {
    for (int k0 = 0; k0 <= resolution; ++k0) {
      const double e0 = k0 * inv - lam[0];
      const double e1 = (resolution - k0) * inv - lam[1];
      consider(fixed_hs + e0 * e0 + e1 * e1,
               0.5 * (fixed_tr + std::abs(e0) + std::abs(e1)), k0, resolution - k0, 0, 0);
    }
    return;
  }
  if (r == 3) {
    for (int k0 = 0; k0 <= resolution; ++k0) {
      const double e0 = k0 * inv - lam[0];
      const double h0 = e0 * e0, t0 = std::abs(e0);
      for (int k1 = 0; k1 <= resolution - k0; ++k1) {
        const double e1 = k1 * inv - lam[1];
        const double e2 = (resolution - k0 - k1) * inv - lam[2];
        consider(fixed_hs + h0 + e1 * e1 + e2 * e2,
                 0.5 * (fixed_tr + t0 + std::abs(e1) + std::abs(e2)), k0, k1,
                 resolution - k0 - k1, 0);
      }
    }
    return;
  }
  for (int k0 = 0; k0 <= resolution; ++k0) {
    const double e0 = k0 * inv - lam[0];
    const double h0 = e0 * e0, t0 = std::abs(e0);
    for (int k1 = 0; k1 <= resolution - k0; ++k1) {
      const double e1 = k1 * inv - lam[1];
      const double h1 = h0 + e1 * e1, t1 = t0 + std::abs(e1);
      for (int k2 = 0; k2 <= resolution - k0 - k1; ++k2) {
        const double e2 = k2 * inv - lam[2];
        const double e3 = (resolution - k0 - k1 - k2) * inv - lam[3];
        consider(fixed_hs + h1 + e2 * e2 + e3 * e3,
                 0.5 * (fixed_tr + t1 + std::abs(e2) + std::abs(e3)), k0, k1, k2,
                 resolution - k0 - k1 - k2);
      }
    }
  }
}

inline std::int64_t count_near_grid(const double* lam, Index r, int resolution,
                                    double fixed, double threshold, Metric metric) {
  if (r < 1 || r > 4) throw BudgetExceeded("grid scan supports rank bounds 1..4");
  const double inv = 1.0 / resolution;
  const bool hs = metric == Metric::HilbertSchmidt;
  const auto term = [&](double e) { return hs ? e * e : std::abs(e); };
  std::int64_t count = 0;
  std::array<int, 4> k{};
  // odometer over compositions: levels 0..r-2 free, last level determined
  const auto leaf = [&](double acc, int last) {
    const double cand = hs ? fixed + acc + term(last * inv - lam[r - 1])
                           : 0.5 * (fixed + acc + term(last * inv - lam[r - 1]));
    if (cand <= threshold) ++count;
  };
  if (r == 1) {
    leaf(0.0, resolution);
    return count;
  }
  for (k[0] = 0; k[0] <= resolution; ++k[0]) {
    const double a0 = term(k[0] * inv - lam[0]);
    if (r == 2) {
      leaf(a0, resolution - k[0]);
      continue;
    }
    for (k[1] = 0; k[1] <= resolution - k[0]; ++k[1]) {
      const double a1 = a0 + term(k[1] * inv - lam[1]);
      if (r == 3) {
        leaf(a1, resolution - k[0] - k[1]);
        continue;
      }
      for (k[2] = 0; k[2] <= resolution - k[0] - k[1]; ++k[2]) {
        const double a2 = a1 + term(k[2] * inv - lam[2]);
        leaf(a2, resolution - k[0] - k[1] - k[2]);
      }
    }
  }
  return count;
}

inline DensityMatrix candidate_state(const DensityMatrix& rho,
                                     const std::vector<Index>& support, const RVector& weights,
                                     const Tolerances& tol) {
  RVector values = RVector::Zero(rho.dim());
  for (size_t k = 0; k < support.size(); ++k) values[support[k]] = weights[static_cast<Index>(k)];
  return DensityMatrix::from_spectrum(std::move(values), rho.spectrum().vectors, tol);
}

inline double closed_form_distance(const DensityMatrix& rho, Index rank_bound, Metric metric,
                                   const Tolerances& tol) {
  return metric == Metric::HilbertSchmidt ? solve_hs_distance(rho, rank_bound, tol)
                                          : solve_trace_distance(rho, rank_bound, tol);
}

}  // namespace detail

struct GridOptions {
  int resolution = 100;
  bool count_near_optimal = false;  // second pass counting candidates near the best
  std::uint64_t instance_seed = 0;  // provenance stamp for the report
};

// Best candidate distance over one fixed support subset of rho's eigenbasis.
struct SupportMinimum {
  std::vector<Index> support;
  double min_distance = 0.0;
  RVector best_weights;
};

inline SupportMinimum grid_minimum_on_support(const RVector& lambda_desc,
                                              const std::vector<Index>& support,
                                              int resolution, Metric metric) {
  double fixed_hs = 0.0, fixed_tr = 0.0;
  std::vector<char> in(static_cast<size_t>(lambda_desc.size()), 0);
  for (auto i : support) in[static_cast<size_t>(i)] = 1;
  for (Index i = 0; i < lambda_desc.size(); ++i)
    if (!in[static_cast<size_t>(i)]) {
      fixed_hs += lambda_desc[i] * lambda_desc[i];
      fixed_tr += lambda_desc[i];
    }
  std::vector<double> lam;
  for (auto i : support) lam.push_back(lambda_desc[i]);

  const Index r = static_cast<Index>(lam.size());
  detail::GridScan scan;
  detail::scan_support_grid(lam.data(), r, resolution, fixed_hs, fixed_tr, scan);
  SupportMinimum sm;
  sm.support = support;
  const auto& ticks =
      metric == Metric::HilbertSchmidt ? scan.best_ticks_hs : scan.best_ticks_tr;
  sm.best_weights.resize(r);
  for (Index k = 0; k < r; ++k)
    sm.best_weights[k] = static_cast<double>(ticks[static_cast<size_t>(k)]) / resolution;
  sm.min_distance = metric == Metric::HilbertSchmidt ? scan.best_hs : scan.best_tr;
  return sm;
}

// Exhaustive search over all rank-bound support subsets and all simplex grid
// points of the given resolution, restricted to candidates co-diagonal with
// rho. Budget-guarded; the report carries the discretization gap bound.
inline OracleReport grid_oracle(const DensityMatrix& rho, Index rank_bound, Metric metric,
                                const GridOptions& options = {}, const Tolerances& tol = {}) {
  check_rank_bound(rank_bound, rho.dim());
  const Index d = rho.dim();
  if (d > 8 || rank_bound > 4 || options.resolution > 200 || options.resolution < 1)
    throw BudgetExceeded("grid oracle limits: dim <= 8, rank bound <= 4, resolution <= 200");

  const RVector& lambda = rho.eigenvalues();
  const auto supports = detail::all_supports(d, rank_bound);

  double best = std::numeric_limits<double>::infinity();
  std::vector<Index> best_support;
  RVector best_weights;
  std::int64_t leaves = 0;

  for (const auto& support : supports) {
    SupportMinimum sm = grid_minimum_on_support(lambda, support, options.resolution, metric);
    leaves += detail::binomial(options.resolution + rank_bound - 1, rank_bound - 1);
    if (sm.min_distance < best) {
      best = sm.min_distance;
      best_support = support;
      best_weights = sm.best_weights;
    }
  }

  OracleReport report{
      InstanceDescriptor{lambda, d, rank_bound, options.instance_seed},
      metric,
      best,
      detail::closed_form_distance(rho, rank_bound, metric, tol),
      0.0,
      detail::candidate_state(rho, best_support, best_weights, tol),
      leaves};
  report.gap = report.oracle_distance - report.closed_form_distance;
  const double c = metric == Metric::HilbertSchmidt ? 4.0 * rank_bound : 1.0 * rank_bound;
  report.gap_bound = c / options.resolution;

  if (options.count_near_optimal) {
    const double threshold = best + 2.0 / options.resolution;
    for (const auto& support : supports) {
      double fixed = 0.0;
      std::vector<char> in(static_cast<size_t>(d), 0);
      for (auto i : support) in[static_cast<size_t>(i)] = 1;
      for (Index i = 0; i < d; ++i)
        if (!in[static_cast<size_t>(i)])
          fixed += metric == Metric::HilbertSchmidt ? lambda[i] * lambda[i] : lambda[i];
      std::vector<double> lam;
      for (auto i : support) lam.push_back(lambda[i]);
      report.near_optimal_count += detail::count_near_grid(
          lam.data(), rank_bound, options.resolution, fixed, threshold, metric);
    }
  }
  return report;
}

// Both metrics from a single grid enumeration; the verification battery runs
// this instead of two grid_oracle calls since the scan already scores both.
inline std::pair<OracleReport, OracleReport> grid_oracle_pair(const DensityMatrix& rho,
                                                              Index rank_bound,
                                                              const GridOptions& options = {},
                                                              const Tolerances& tol = {}) {
  check_rank_bound(rank_bound, rho.dim());
  const Index d = rho.dim();
  if (d > 8 || rank_bound > 4 || options.resolution > 200 || options.resolution < 1)
    throw BudgetExceeded("grid oracle limits: dim <= 8, rank bound <= 4, resolution <= 200");

  const RVector& lambda = rho.eigenvalues();
  const auto supports = detail::all_supports(d, rank_bound);

  double best_hs = std::numeric_limits<double>::infinity();
  double best_tr = std::numeric_limits<double>::infinity();
  std::vector<Index> support_hs, support_tr;
  RVector weights_hs, weights_tr;
  std::int64_t leaves = 0;

  for (const auto& support : supports) {
    double fixed_hs = 0.0, fixed_tr = 0.0;
    std::vector<char> in(static_cast<size_t>(d), 0);
    for (auto i : support) in[static_cast<size_t>(i)] = 1;
    for (Index i = 0; i < d; ++i)
      if (!in[static_cast<size_t>(i)]) {
        fixed_hs += lambda[i] * lambda[i];
        fixed_tr += lambda[i];
      }
    std::vector<double> lam;
    for (auto i : support) lam.push_back(lambda[i]);

    detail::GridScan scan;
    detail::scan_support_grid(lam.data(), rank_bound, options.resolution, fixed_hs, fixed_tr,
                              scan);
    leaves += scan.leaves;
    const auto to_weights = [&](const std::array<int, 4>& ticks) {
      RVector w(rank_bound);
      for (Index k = 0; k < rank_bound; ++k)
        w[k] = static_cast<double>(ticks[static_cast<size_t>(k)]) / options.resolution;
      return w;
    };
    if (scan.best_hs < best_hs) {
      best_hs = scan.best_hs;
      support_hs = support;
      weights_hs = to_weights(scan.best_ticks_hs);
    }
    if (scan.best_tr < best_tr) {
      best_tr = scan.best_tr;
      support_tr = support;
      weights_tr = to_weights(scan.best_ticks_tr);
    }
  }

  const auto make_report = [&](Metric metric, double best, const std::vector<Index>& support,
                               const RVector& weights) {
    OracleReport report{
        InstanceDescriptor{lambda, d, rank_bound, options.instance_seed},
        metric,
        best,
        detail::closed_form_distance(rho, rank_bound, metric, tol),
        0.0,
        detail::candidate_state(rho, support, weights, tol),
        leaves};
    report.gap = report.oracle_distance - report.closed_form_distance;
    const double c = metric == Metric::HilbertSchmidt ? 4.0 * rank_bound : 1.0 * rank_bound;
    report.gap_bound = c / options.resolution;
    return report;
  };
  return {make_report(Metric::HilbertSchmidt, best_hs, support_hs, weights_hs),
          make_report(Metric::Trace, best_tr, support_tr, weights_tr)};
}

// Euclidean projection onto the probability simplex (sorted-threshold rule).
inline RVector project_to_simplex(const RVector& v) {
  const Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (Index j = 0; j < n; ++j) {
    cum += u[static_cast<size_t>(j)];
    const double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<size_t>(j)] - t > 0.0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0);
}

struct RotationReport {
  bool pass = false;
  int trials = 0;
  double worst_margin = 0.0;
};

// D(rho, rotated sigma) minus D(rho, sigma realigned descending onto rho's
// eigenbasis). Non-negative whenever realignment is optimal for the metric.
inline double rotation_margin(const DensityMatrix& rho, const DensityMatrix& sigma_diag,
                              const CMatrix& basis_change, Metric metric,
                              const Tolerances& tol = {}) {
  detail::require_same_dim(rho, sigma_diag);
  RVector realigned = RVector::Zero(rho.dim());
  realigned.head(sigma_diag.dim()) = sigma_diag.eigenvalues();
  const DensityMatrix aligned =
      DensityMatrix::from_spectrum(std::move(realigned), rho.spectrum().vectors, tol);

  CMatrix rotated = basis_change * sigma_diag.matrix() * basis_change.adjoint();
  const DensityMatrix sigma_rot =
      validate_density(HermitianOperator(std::move(rotated), tol), tol);

  const auto dist = [&](const DensityMatrix& s) {
    return metric == Metric::HilbertSchmidt ? hs_distance(rho, s) : trace_distance(rho, s);
  };
  return dist(sigma_rot) - dist(aligned);
}

// Empirical check that no unitary twist of a co-diagonal candidate can get
// closer to rho than its realigned version: n_trials Haar rotations, margin
// must stay above -1e-9. sigma_diag must already be diagonal in rho's basis.
inline RotationReport rotation_test(const DensityMatrix& rho, const DensityMatrix& sigma_diag,
                                    int n_trials, std::uint64_t rng_seed, Metric metric,
                                    const Tolerances& tol = {}) {
  detail::require_same_dim(rho, sigma_diag);
  {
    const CMatrix m =
        rho.spectrum().vectors.adjoint() * sigma_diag.matrix() * rho.spectrum().vectors;
    double offdiag = 0.0;
    for (Index i = 0; i < m.rows(); ++i)
      for (Index j = 0; j < m.cols(); ++j)
        if (i != j) offdiag = std::max(offdiag, std::abs(m(i, j)));
    if (offdiag > 1e-8)
      throw Error("rotation_test input is not diagonal in rho's eigenbasis");
  }

  RotationReport report;
  report.trials = n_trials;
  report.worst_margin = std::numeric_limits<double>::infinity();
  Rng rng(rng_seed);
  for (int t = 0; t < n_trials; ++t) {
    const CMatrix u = haar_unitary(rho.dim(), rng);
    report.worst_margin =
        std::min(report.worst_margin, rotation_margin(rho, sigma_diag, u, metric, tol));
  }
  report.pass = report.worst_margin >= -1e-9;
  return report;
}

struct DescentOptions {
  int max_iters = 2000;
  double initial_step = 0.25;
  int max_supports = 128;           // beyond this, keep the best-fixed-part subsets
  std::uint64_t instance_seed = 0;  // provenance stamp for the report
};

// Projected (sub)gradient descent over candidate spectra on the eigenvalue
// simplex, restarted from random points on every retained support subset.
// Smooth metric: fixed step, linear convergence. Trace metric: signs with
// stall-triggered step halving; once the iterate enters the flat optimal
// region it stops moving.
inline OracleReport descent_oracle(const DensityMatrix& rho, Index rank_bound, Metric metric,
                                   int restarts, std::uint64_t rng_seed,
                                   const DescentOptions& options = {},
                                   const Tolerances& tol = {}) {
  check_rank_bound(rank_bound, rho.dim());
  const Index d = rho.dim();
  if (d > 16) throw BudgetExceeded("descent oracle limit: dim <= 16");
  if (restarts < 1) throw Error("descent oracle needs at least one restart");

  const RVector& lambda = rho.eigenvalues();
  auto supports = detail::all_supports(d, rank_bound);
  if (static_cast<int>(supports.size()) > options.max_supports) {
    std::stable_sort(supports.begin(), supports.end(),
                     [&](const auto& a, const auto& b) {
                       double fa = 0.0, fb = 0.0;
                       for (auto i : a) fa += lambda[i];
                       for (auto i : b) fb += lambda[i];
                       return fa > fb;  // keep supports holding the most weight
                     });
    supports.resize(static_cast<size_t>(options.max_supports));
  }

  Rng rng(rng_seed);
  double best = std::numeric_limits<double>::infinity();
  std::vector<Index> best_support;
  RVector best_weights;
  std::int64_t evaluations = 0;
  int restarts_converged = 0;

  for (const auto& support : supports) {
    RVector lam_s(rank_bound);
    for (Index k = 0; k < rank_bound; ++k) lam_s[k] = lambda[support[static_cast<size_t>(k)]];

    for (int restart = 0; restart < restarts; ++restart) {
      RVector x = simplex_sample(rank_bound, 1.0, rng);
      bool converged = false;

      if (metric == Metric::HilbertSchmidt) {
        for (int iter = 0; iter < options.max_iters; ++iter) {
          // objective sum (x_i - lam_i)^2: gradient 2(x - lam), step 0.45
          RVector next = project_to_simplex(x - 0.9 * (x - lam_s));
          ++evaluations;
          const double move = (next - x).cwiseAbs().maxCoeff();
          x = std::move(next);
          if (move <= 1e-15) {
            converged = true;
            break;
          }
        }
        const double f = detail::codiagonal_distance(lambda, support, x, metric);
        if (f < best - 1e-15) {
          best = f;
          best_support = support;
          best_weights = x;
        }
      } else {
        double step = options.initial_step;
        double best_f = detail::codiagonal_distance(lambda, support, x, metric);
        RVector best_x = x;
        int stall = 0;
        for (int iter = 0; iter < options.max_iters; ++iter) {
          RVector g(rank_bound);
          for (Index k = 0; k < rank_bound; ++k) {
            const double e = x[k] - lam_s[k];
            g[k] = e > 0.0 ? 0.5 : (e < 0.0 ? -0.5 : 0.0);
          }
          RVector next = project_to_simplex(x - step * g);
          const double move = (next - x).cwiseAbs().maxCoeff();
          x = std::move(next);
          const double f = detail::codiagonal_distance(lambda, support, x, metric);
          ++evaluations;
          if (f < best_f - 1e-15) {
            best_f = f;
            best_x = x;
            stall = 0;
          } else if (++stall >= 25) {
            step *= 0.5;
            stall = 0;
          }
          if (move <= 1e-18 || step < 1e-9) {
            converged = true;
            break;
          }
        }
        if (best_f < best - 1e-15) {
          best = best_f;
          best_support = support;
          best_weights = best_x;
        }
      }
      if (converged) ++restarts_converged;
    }
  }

  OracleReport report{
      InstanceDescriptor{lambda, d, rank_bound, options.instance_seed},
      metric,
      best,
      detail::closed_form_distance(rho, rank_bound, metric, tol),
      0.0,
      detail::candidate_state(rho, best_support, best_weights, tol),
      evaluations};
  report.gap = report.oracle_distance - report.closed_form_distance;
  report.restarts_converged = restarts_converged;
  return report;
}

struct AuditReport {
  bool pass = false;
  int trials = 0;
  double worst_margin = 0.0;
};

// Spectrum-majorizes-diagonal audit: for the given state and then fresh
// random states, check that the eigenvalues majorize the diagonal taken in a
// random orthonormal basis, every trial.
inline AuditReport majorization_audit(const DensityMatrix& rho, int n_trials,
                                      std::uint64_t rng_seed, const Tolerances& tol = {}) {
  Rng rng(rng_seed);
  AuditReport report;
  report.trials = n_trials;
  report.worst_margin = std::numeric_limits<double>::infinity();
  report.pass = true;
  const Index d = rho.dim();
  for (int t = 0; t < n_trials; ++t) {
    const DensityMatrix sigma = t == 0 ? rho : random_density(d, d, rng, tol);
    const CMatrix basis = t == 0 ? CMatrix(CMatrix::Identity(d, d)) : haar_unitary(d, rng);
    const RVector diag = basis_diagonal(sigma, basis);
    report.worst_margin =
        std::min(report.worst_margin, majorization_margin(sigma.eigenvalues(), diag));
    if (!majorizes(sigma.eigenvalues(), diag, tol)) report.pass = false;
  }
  return report;
}

}  // namespace qlrap
