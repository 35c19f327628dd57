#include <catch2/catch.hpp>

#include "test_support.hpp"

using namespace qlrap;
using testsupport::diag_state;
using testsupport::reference_state;

TEST_CASE("grid oracle confirms the HS optimum on the reference state") {
  GridOptions opt;
  opt.resolution = 100;
  const OracleReport report =
      grid_oracle(reference_state(), 2, Metric::HilbertSchmidt, opt);
  CHECK(report.gap >= -1e-9);
  CHECK(report.gap <= 1e-3);
  CHECK(report.closed_form_distance == Approx(0.06).margin(1e-12));
  const DensityMatrix target = diag_state({0.51, 0.49, 0.0, 0.0});
  CHECK((report.best_candidate.matrix() - target.matrix()).cwiseAbs().maxCoeff() <= 0.01);
  CHECK(report.candidates_evaluated == 6 * 101);  // C(4,2) supports x 101 grid points
}

TEST_CASE("grid oracle exposes the trace-metric degeneracy") {
  GridOptions opt;
  opt.resolution = 100;
  opt.count_near_optimal = true;
  const OracleReport report = grid_oracle(reference_state(), 2, Metric::Trace, opt);
  CHECK(report.oracle_distance == Approx(0.2).margin(1e-3));
  CHECK(report.gap >= -1e-9);
  // the whole on-grid stretch of the optimal family ties at the optimum:
  // weights (k/100, 1-k/100) for k in [41, 61], 21 candidates, plus anything
  // within two grid steps
  CHECK(report.near_optimal_count >= 21);
}

TEST_CASE("grid oracle at full rank returns the grid-rounded state") {
  const DensityMatrix rho = diag_state({0.5, 0.3, 0.2});
  GridOptions opt;
  opt.resolution = 100;
  const OracleReport report = grid_oracle(rho, 3, Metric::HilbertSchmidt, opt);
  CHECK(report.closed_form_distance <= 1e-14);
  CHECK(report.oracle_distance <= report.gap_bound);
}

TEST_CASE("grid oracle enforces its budget") {
  Rng rng(3100);
  const DensityMatrix big = random_density(9, 9, rng);
  CHECK_THROWS_AS(grid_oracle(big, 2, Metric::Trace), BudgetExceeded);

  const DensityMatrix ok = random_density(8, 8, rng);
  CHECK_THROWS_AS(grid_oracle(ok, 5, Metric::Trace), BudgetExceeded);
  GridOptions too_fine;
  too_fine.resolution = 500;
  CHECK_THROWS_AS(grid_oracle(ok, 2, Metric::Trace, too_fine), BudgetExceeded);
}

TEST_CASE("dropping a leading component from the support strictly hurts") {
  const DensityMatrix ref = reference_state();
  const RVector& lambda = ref.eigenvalues();
  const double best =
      grid_minimum_on_support(lambda, {0, 1}, 100, Metric::HilbertSchmidt).min_distance;
  for (const std::vector<Index>& support :
       {std::vector<Index>{0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}) {
    const double other =
        grid_minimum_on_support(lambda, support, 100, Metric::HilbertSchmidt).min_distance;
    CHECK(other > best + 1e-3);
  }
}

TEST_CASE("grid and closed form stay within the discretization bound", "[property]") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(3300 + seed);
    const Index d = 3 + static_cast<Index>(seed % 4);
    const DensityMatrix rho = random_density(d, d, rng);
    GridOptions opt;
    opt.resolution = 50;
    for (Index r = 1; r <= std::min<Index>(3, d); ++r) {
      const auto [hs, tr] = grid_oracle_pair(rho, r, opt);
      REQUIRE(hs.gap >= -1e-9);
      REQUIRE(hs.gap <= hs.gap_bound);
      REQUIRE(tr.gap >= -1e-9);
      REQUIRE(tr.gap <= tr.gap_bound);
    }
  }
}

TEST_CASE("rotation margin is zero for the identity rotation of the canonical state") {
  const DensityMatrix ref = reference_state();
  const DensityMatrix canonical = solve_hs(ref, 2).sigma_star;
  const CMatrix id = CMatrix::Identity(4, 4);
  CHECK(rotation_margin(ref, canonical, id, Metric::HilbertSchmidt) ==
        Approx(0.0).margin(1e-12));
  CHECK(rotation_margin(ref, canonical, id, Metric::Trace) == Approx(0.0).margin(1e-12));
}

TEST_CASE("realignment beats a misordered co-diagonal state even without rotation") {
  const DensityMatrix ref = reference_state();
  const DensityMatrix misordered = diag_state({0.49, 0.51, 0.0, 0.0});
  const CMatrix id = CMatrix::Identity(4, 4);
  CHECK(rotation_margin(ref, misordered, id, Metric::HilbertSchmidt) > 1e-6);
  // under the trace metric the misordered member is equally optimal
  CHECK(rotation_margin(ref, misordered, id, Metric::Trace) == Approx(0.0).margin(1e-12));
}

TEST_CASE("no Haar rotation beats the aligned state", "[property]") {
  const DensityMatrix ref = reference_state();
  const DensityMatrix canonical = solve_hs(ref, 2).sigma_star;
  for (Metric metric : {Metric::HilbertSchmidt, Metric::Trace}) {
    const RotationReport report = rotation_test(ref, canonical, 300, 4242, metric);
    CHECK(report.pass);
    CHECK(report.worst_margin >= -1e-9);
  }
}

TEST_CASE("rotation test rejects non-co-diagonal inputs") {
  const DensityMatrix ref = reference_state();
  Rng rng(3500);
  const CMatrix u = haar_unitary(4, rng);
  const DensityMatrix skew = validate_density(
      HermitianOperator(u * diag_state({0.6, 0.4, 0.0, 0.0}).matrix() * u.adjoint()));
  CHECK_THROWS_AS(rotation_test(ref, skew, 5, 1, Metric::Trace), Error);
}

TEST_CASE("descent oracle lands on the HS optimum") {
  const DensityMatrix ref = reference_state();
  const OracleReport report = descent_oracle(ref, 2, Metric::HilbertSchmidt, 3, 991);
  CHECK(report.gap >= -1e-9);
  CHECK(report.gap <= 1e-6);
  const DensityMatrix target = solve_hs(ref, 2).sigma_star;
  CHECK((report.best_candidate.matrix() - target.matrix()).cwiseAbs().maxCoeff() <= 1e-6);

  const OracleReport rank1 = descent_oracle(diag_state({0.5, 0.3, 0.2}), 1,
                                            Metric::HilbertSchmidt, 3, 992);
  CHECK(rank1.oracle_distance == Approx(0.38).margin(1e-6));

  const OracleReport full = descent_oracle(ref, 3, Metric::HilbertSchmidt, 3, 993);
  CHECK(full.oracle_distance <= 1e-10);
}

TEST_CASE("descent refines the grid: its optimum is never worse") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    Rng rng(4500 + seed);
    const Index d = 3 + static_cast<Index>(seed % 3);
    const DensityMatrix rho = random_density(d, d, rng);
    GridOptions opt;
    opt.resolution = 50;
    for (Metric metric : {Metric::HilbertSchmidt, Metric::Trace}) {
      const OracleReport grid = grid_oracle(rho, 2, metric, opt);
      const OracleReport descent = descent_oracle(rho, 2, metric, 3, 4600 + seed);
      REQUIRE(descent.oracle_distance <= grid.oracle_distance + 1e-12);
    }
  }
}

TEST_CASE("descent oracle terminal trace candidates are family members") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(3700 + seed);
    const Index d = 2 + static_cast<Index>(seed % 5);
    const DensityMatrix rho = random_density(d, d, rng);
    for (Index r = 1; r <= d; ++r) {
      const OracleReport report = descent_oracle(rho, r, Metric::Trace, 3, 800 + seed);
      REQUIRE(report.gap >= -1e-9);
      REQUIRE(report.gap <= 1e-6);
      REQUIRE(trace_family_contains(trace_family(rho, r), report.best_candidate, 1e-5));
    }
  }
}

TEST_CASE("near-optimal HS descent candidates collapse onto one state", "[property]") {
  // uniqueness: every restart that reaches the optimum reaches the same state
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(3900 + seed);
    const Index d = 3 + static_cast<Index>(seed % 5);
    const DensityMatrix rho = random_density(d, d, rng);
    const Index r = 1 + static_cast<Index>(seed % 3);
    const QlrapSolution sol = solve_hs(rho, r);
    const OracleReport report = descent_oracle(rho, r, Metric::HilbertSchmidt, 8, seed);
    if (report.gap <= 1e-8) {
      REQUIRE((report.best_candidate.matrix() - sol.sigma_star.matrix())
                  .cwiseAbs()
                  .maxCoeff() <= 1e-3);
    }
  }
}

TEST_CASE("descent oracle enforces its budget") {
  Rng rng(4000);
  const DensityMatrix big = random_density(17, 17, rng);
  CHECK_THROWS_AS(descent_oracle(big, 2, Metric::Trace, 2, 1), BudgetExceeded);
}

TEST_CASE("majorization audit passes on seeded batteries") {
  Rng rng(4100);
  const DensityMatrix rho = random_density(6, 6, rng);
  const AuditReport report = majorization_audit(rho, 1000, 314159);
  CHECK(report.pass);
  CHECK(report.trials == 1000);
  // trial zero uses the identity basis: diagonal equals the spectrum exactly
  const AuditReport identity_only = majorization_audit(rho, 1, 1);
  CHECK(identity_only.pass);
  CHECK(identity_only.worst_margin >= -1e-12);
}

TEST_CASE("rank-1 spectra majorize any diagonal") {
  Rng rng(4200);
  const DensityMatrix pure = random_density(5, 1, rng);
  for (int t = 0; t < 20; ++t) {
    const CMatrix basis = haar_unitary(5, rng);
    CHECK(majorizes(pure.eigenvalues(), basis_diagonal(pure, basis)));
  }
}

TEST_CASE("verification battery passes on a reduced budget") {
  VerifyBudget budget;
  budget.max_dim = 4;
  budget.spectra_per_dim = 4;
  budget.resolution = 50;
  budget.rotation_trials = 50;
  budget.audit_trials = 100;
  const VerifySummary summary = run_verify_battery(budget);
  INFO("failures: " << summary.failures.size());
  CHECK(summary.pass);
  CHECK(summary.instances == 12);
}

TEST_CASE("verification battery tolerates a coarse grid through the gap bound") {
  VerifyBudget budget;
  budget.max_dim = 3;
  budget.spectra_per_dim = 3;
  budget.resolution = 10;  // gap bound scales as 1/resolution
  budget.rotation_trials = 0;
  budget.audit_trials = 0;
  CHECK(run_verify_battery(budget).pass);
}

TEST_CASE("verification battery flags a solver with the uniform lift dropped") {
  VerifyBudget budget;
  budget.max_dim = 4;
  budget.spectra_per_dim = 3;
  budget.resolution = 50;
  budget.rotation_trials = 0;
  budget.audit_trials = 0;
  const ClosedFormFn tampered = [](const DensityMatrix& rho, Index rank_bound, Metric metric) {
    if (metric == Metric::Trace) return solve_trace_distance(rho, rank_bound);
    // claims the truncation error alone, forgetting the lift penalty
    const Index d = rho.dim();
    return rho.eigenvalues().tail(d - rank_bound).squaredNorm();
  };
  const VerifySummary summary = run_verify_battery(budget, Tolerances{}, tampered);
  CHECK_FALSE(summary.pass);
  // every instance with visible slack must produce a positive-gap failure
  int gap_failures = 0;
  for (const auto& f : summary.failures)
    if (f.check.find("upper gap") != std::string::npos && f.value > 1e-6) ++gap_failures;
  CHECK(gap_failures >= 5);
}
