#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <vector>

#include "qlrap/oracle.hpp"
#include "qlrap/solver.hpp"
#include "qlrap/variational.hpp"

namespace qlrap {

// Budget knobs for the verification battery. Defaults match the shipped
// acceptance gate: dims 2..8, 50 spectra each, every rank bound, grid
// resolution 100 wherever the grid budget allows, plus rotation and
// majorization audits.
struct VerifyBudget {
  Index max_dim = 8;
  int spectra_per_dim = 50;
  int resolution = 100;
  int descent_restarts = 3;
  int rotation_trials = 1000;
  int rotation_instances_per_dim = 1;
  int audit_trials = 1000;
  Index audit_dim = 6;
  std::uint64_t seed = 20240817;
};

struct VerifyFailure {
  std::string check;
  InstanceDescriptor instance;
  double value = 0.0;
  double bound = 0.0;
};

struct VerifySummary {
  bool pass = true;
  std::int64_t instances = 0;
  std::int64_t checks = 0;
  std::int64_t grid_runs = 0;
  std::int64_t descent_runs = 0;
  std::int64_t rotation_runs = 0;
  double worst_rotation_margin = std::numeric_limits<double>::infinity();
  double worst_audit_margin = std::numeric_limits<double>::infinity();
  double seconds = 0.0;
  std::vector<VerifyFailure> failures;
};

// Closed-form distance hook; tests inject broken implementations here to
// prove the battery catches them.
using ClosedFormFn = std::function<double(const DensityMatrix&, Index, Metric)>;

namespace detail {

inline void record(VerifySummary& summary, bool ok, const std::string& check,
                   const InstanceDescriptor& instance, double value, double bound) {
  ++summary.checks;
  if (!ok) {
    summary.pass = false;
    if (summary.failures.size() < 32)
      summary.failures.push_back(VerifyFailure{check, instance, value, bound});
  }
}

}  // namespace detail

// Seeded instance battery pitting the closed forms against the independent
// searches. For every instance and rank bound:
//   - neither oracle may beat the closed form by more than 1e-9,
//   - the grid gap stays under its discretization bound,
//   - the descent gap stays under 1e-6 and its HS minimizer matches the
//     closed-form state entrywise to 1e-5,
//   - both closed-form distances are non-increasing in the rank bound and
//     hit zero exactly at the state's rank.
// Rotation and majorization audits run on a per-dimension instance subset.
inline VerifySummary run_verify_battery(const VerifyBudget& budget, const Tolerances& tol = {},
                                        ClosedFormFn closed_form = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!closed_form)
    closed_form = [](const DensityMatrix& rho, Index rank_bound, Metric metric) {
      return metric == Metric::HilbertSchmidt ? solve_hs_distance(rho, rank_bound)
                                              : solve_trace_distance(rho, rank_bound);
    };

  VerifySummary summary;
  std::uint64_t instance_counter = 0;

  for (Index d = 2; d <= budget.max_dim; ++d) {
    for (int spectrum_idx = 0; spectrum_idx < budget.spectra_per_dim; ++spectrum_idx) {
      const std::uint64_t instance_seed = budget.seed + instance_counter;
      ++instance_counter;
      Rng rng(instance_seed);
      // two thirds full rank, one third rank-deficient
      const Index rank =
          spectrum_idx % 3 == 2 ? 1 + static_cast<Index>(rng() % static_cast<std::uint64_t>(d))
                                : d;
      const DensityMatrix rho = random_density(d, rank, rng, tol);
      const Index r = rho.rank(tol.rank_tol);
      ++summary.instances;

      double prev_hs = std::numeric_limits<double>::infinity();
      double prev_tr = std::numeric_limits<double>::infinity();

      for (Index rank_bound = 1; rank_bound <= d; ++rank_bound) {
        const InstanceDescriptor inst{rho.eigenvalues(), d, rank_bound, instance_seed};
        const double closed_hs = closed_form(rho, rank_bound, Metric::HilbertSchmidt);
        const double closed_tr = closed_form(rho, rank_bound, Metric::Trace);

        // monotone in the rank bound, zero exactly once the rank is reached
        detail::record(summary, closed_hs <= prev_hs + 1e-12, "hs monotonicity", inst,
                       closed_hs - prev_hs, 1e-12);
        detail::record(summary, closed_tr <= prev_tr + 1e-12, "trace monotonicity", inst,
                       closed_tr - prev_tr, 1e-12);
        prev_hs = closed_hs;
        prev_tr = closed_tr;
        if (rank_bound >= r) {
          detail::record(summary, closed_hs <= 1e-12, "hs zero at full rank", inst, closed_hs,
                         1e-12);
          detail::record(summary, closed_tr <= 1e-12, "trace zero at full rank", inst,
                         closed_tr, 1e-12);
        } else {
          detail::record(summary, closed_hs > 1e-9, "hs positive below rank", inst, closed_hs,
                         1e-9);
          detail::record(summary, closed_tr > 1e-9, "trace positive below rank", inst,
                         closed_tr, 1e-9);
        }

        if (d <= 8 && rank_bound <= 4 && budget.resolution <= 200) {
          GridOptions gopt;
          gopt.resolution = budget.resolution;
          gopt.instance_seed = instance_seed;
          const auto [grid_hs, grid_tr] = grid_oracle_pair(rho, rank_bound, gopt, tol);
          summary.grid_runs += 2;
          const double gap_hs = grid_hs.oracle_distance - closed_hs;
          const double gap_tr = grid_tr.oracle_distance - closed_tr;
          detail::record(summary, gap_hs >= -1e-9, "grid hs lower gap", inst, gap_hs, -1e-9);
          detail::record(summary, gap_hs <= grid_hs.gap_bound, "grid hs upper gap", inst,
                         gap_hs, grid_hs.gap_bound);
          detail::record(summary, gap_tr >= -1e-9, "grid trace lower gap", inst, gap_tr, -1e-9);
          detail::record(summary, gap_tr <= grid_tr.gap_bound, "grid trace upper gap", inst,
                         gap_tr, grid_tr.gap_bound);
        }

        DescentOptions dopt;
        dopt.instance_seed = instance_seed;
        const OracleReport descent_hs =
            descent_oracle(rho, rank_bound, Metric::HilbertSchmidt, budget.descent_restarts,
                           instance_seed + 101, dopt, tol);
        const OracleReport descent_tr =
            descent_oracle(rho, rank_bound, Metric::Trace, budget.descent_restarts,
                           instance_seed + 202, dopt, tol);
        summary.descent_runs += 2;

        const double dgap_hs = descent_hs.oracle_distance - closed_hs;
        const double dgap_tr = descent_tr.oracle_distance - closed_tr;
        detail::record(summary, dgap_hs >= -1e-9, "descent hs lower gap", inst, dgap_hs, -1e-9);
        detail::record(summary, dgap_hs <= 1e-6, "descent hs upper gap", inst, dgap_hs, 1e-6);
        detail::record(summary, dgap_tr >= -1e-9, "descent trace lower gap", inst, dgap_tr,
                       -1e-9);
        detail::record(summary, dgap_tr <= 1e-6, "descent trace upper gap", inst, dgap_tr,
                       1e-6);

        // HS uniqueness: the descent minimizer must be the closed-form state
        const DensityMatrix closed_state = detail::lifted_truncation(rho, rank_bound, tol);
        const double state_dev =
            (descent_hs.best_candidate.matrix() - closed_state.matrix()).cwiseAbs().maxCoeff();
        detail::record(summary, state_dev <= 1e-5, "descent hs state match", inst, state_dev,
                       1e-5);

        // Trace family: the descent terminal candidate must be a member
        const TraceOptimalFamily family = trace_family(rho, rank_bound, tol);
        detail::record(summary,
                       trace_family_contains(family, descent_tr.best_candidate, 1e-5, false, tol),
                       "descent trace family membership", inst, dgap_tr, 1e-5);
      }

      if (spectrum_idx < budget.rotation_instances_per_dim && budget.rotation_trials > 0) {
        const Index rank_bound = std::max(Index{1}, d / 2);
        const DensityMatrix canonical = detail::lifted_truncation(rho, rank_bound, tol);
        const InstanceDescriptor inst{rho.eigenvalues(), d, rank_bound, instance_seed};
        for (Metric metric : {Metric::HilbertSchmidt, Metric::Trace}) {
          const RotationReport rot = rotation_test(rho, canonical, budget.rotation_trials,
                                                   instance_seed + 303, metric, tol);
          ++summary.rotation_runs;
          summary.worst_rotation_margin =
              std::min(summary.worst_rotation_margin, rot.worst_margin);
          detail::record(summary, rot.pass,
                         std::string("rotation margin (") + metric_name(metric) + ")", inst,
                         rot.worst_margin, -1e-9);
        }
      }
    }
  }

  if (budget.audit_trials > 0) {
    Rng rng(budget.seed + 909);
    const DensityMatrix rho = random_density(budget.audit_dim, budget.audit_dim, rng, tol);
    const AuditReport audit = majorization_audit(rho, budget.audit_trials, budget.seed + 910, tol);
    summary.worst_audit_margin = audit.worst_margin;
    detail::record(summary, audit.pass, "majorization audit",
                   InstanceDescriptor{rho.eigenvalues(), budget.audit_dim, 0, budget.seed + 909},
                   audit.worst_margin, 0.0);
  }

  summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return summary;
}

}  // namespace qlrap
