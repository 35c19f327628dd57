#include <catch2/catch.hpp>

#include "test_support.hpp"

using namespace qlrap;
using testsupport::diag_state;
using testsupport::reference_state;

TEST_CASE("validate_density accepts well-formed states") {
  const DensityMatrix mixed = diag_state({0.5, 0.5});
  CHECK(mixed.eigenvalues()[0] == Approx(0.5).margin(1e-12));
  CHECK(mixed.eigenvalues()[1] == Approx(0.5).margin(1e-12));

  const DensityMatrix ref = reference_state();
  CHECK(ref.dim() == 4);
  CHECK(ref.rank() == 3);
}

TEST_CASE("validate_density reports the failed invariant with its magnitude") {
  SECTION("negative eigenvalue") {
    CMatrix m = CMatrix::Zero(3, 3);
    m(0, 0) = 0.6;
    m(1, 1) = 0.6;
    m(2, 2) = -0.2;
    try {
      validate_density(HermitianOperator(m));
      FAIL("expected NotPSD");
    } catch (const NotPSD& e) {
      CHECK(e.violation == Approx(0.2).margin(1e-12));
    }
  }
  SECTION("trace off by 0.1") {
    CMatrix m = CMatrix::Zero(2, 2);
    m(0, 0) = 0.6;
    m(1, 1) = 0.3;
    try {
      validate_density(HermitianOperator(m));
      FAIL("expected NotUnitTrace");
    } catch (const NotUnitTrace& e) {
      CHECK(e.violation == Approx(0.1).margin(1e-12));
    }
  }
  SECTION("not Hermitian") {
    CMatrix m = CMatrix::Zero(2, 2);
    m(0, 0) = 0.5;
    m(1, 1) = 0.5;
    m(0, 1) = ComplexScalar(0.1, 0.0);
    m(1, 0) = ComplexScalar(0.3, 0.0);
    CHECK_THROWS_AS(HermitianOperator(m), NotHermitian);
  }
  SECTION("non-finite entries rejected") {
    CMatrix m = CMatrix::Zero(2, 2);
    m(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(HermitianOperator(m), Error);
  }
}

TEST_CASE("eigenvalues just below zero are clamped and renormalized") {
  Rng rng(31);
  const CMatrix u = haar_unitary(3, rng);
  RVector values(3);
  values << 0.7, 0.3 + 5e-10, -5e-10;
  const CMatrix m = u * values.asDiagonal() * u.adjoint();
  const DensityMatrix rho = validate_density(HermitianOperator(m));
  CHECK(rho.eigenvalues().minCoeff() >= 0.0);
  CHECK(std::abs(rho.matrix().trace().real() - 1.0) <= 1e-12);
}

TEST_CASE("eigh returns a descending spectrum with a matching basis") {
  const DensityMatrix shuffled = diag_state({0.2, 0.41, 0.39, 0.0});
  const Spectrum& s = shuffled.spectrum();
  RVector expected(4);
  expected << 0.41, 0.39, 0.2, 0.0;
  CHECK((s.values - expected).cwiseAbs().maxCoeff() <= 1e-12);
  // vectors must be the permuted computational basis
  const std::vector<Index> source{1, 2, 0, 3};
  for (Index i = 0; i < 4; ++i)
    CHECK(std::abs(s.vectors(source[static_cast<size_t>(i)], i)) == Approx(1.0).margin(1e-10));
}

TEST_CASE("eigh of the identity gives a flat spectrum and an orthonormal basis") {
  const HermitianOperator id(CMatrix::Identity(3, 3));
  const Spectrum s = eigh(id);
  for (Index i = 0; i < 3; ++i) CHECK(s.values[i] == Approx(1.0).margin(1e-14));
  CHECK(s.orthonormality_error() <= 1e-12);
}

TEST_CASE("eigh matches an independent Jacobi eigensolver") {
  Rng rng(501);
  const HermitianOperator a = random_hermitian(5, rng);
  const Spectrum s = eigh(a);
  const RVector reference = testsupport::jacobi_eigenvalues(a.matrix());
  CHECK((s.values - reference).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("spectra reconstruct their operators", "[property]") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    const Index d = 2 + static_cast<Index>(seed % 15);
    const HermitianOperator a = random_hermitian(d, rng);
    const Spectrum s = eigh(a);
    REQUIRE(s.orthonormality_error() <= 1e-8);
    REQUIRE(s.reconstruction_error(a.matrix()) <= 1e-8);
    for (Index i = 0; i + 1 < d; ++i) REQUIRE(s.values[i] >= s.values[i + 1]);
  }
}

TEST_CASE("hs_distance basics") {
  const DensityMatrix ref = reference_state();
  CHECK(hs_distance(ref, ref) == 0.0);

  const DensityMatrix sigma = diag_state({0.51, 0.49, 0.0, 0.0});
  CHECK(hs_distance(ref, sigma) == Approx(0.06).margin(1e-12));
  CHECK(hs_distance(sigma, ref) == Approx(0.06).margin(1e-12));

  CHECK(hs_distance(diag_state({1.0, 0.0}), diag_state({0.5, 0.5})) ==
        Approx(0.5).margin(1e-12));

  CHECK_THROWS_AS(hs_distance(ref, diag_state({1.0, 0.0})), DimMismatch);
}

TEST_CASE("trace_distance basics") {
  const DensityMatrix ref = reference_state();
  CHECK(trace_distance(ref, ref) <= 1e-15);
  CHECK(trace_distance(diag_state({1.0, 0.0}), diag_state({0.0, 1.0})) ==
        Approx(1.0).margin(1e-12));
  // half-sum convention: 0.5 * (0.1 + 0.1 + 0.2 + 0)
  CHECK(trace_distance(ref, diag_state({0.51, 0.49, 0.0, 0.0})) ==
        Approx(0.2).margin(1e-12));
  CHECK_THROWS_AS(trace_distance(ref, diag_state({1.0, 0.0})), DimMismatch);
}

TEST_CASE("trace_distance satisfies the triangle inequality on seeded triples",
          "[property]") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(7000 + seed);
    const DensityMatrix a = random_density(4, 4, rng);
    const DensityMatrix b = random_density(4, 4, rng);
    const DensityMatrix c = random_density(4, 4, rng);
    REQUIRE(trace_distance(a, c) <= trace_distance(a, b) + trace_distance(b, c) + 1e-12);
  }
}

TEST_CASE("trace_distance is unitarily invariant", "[property]") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(8200 + seed);
    const Index d = 2 + static_cast<Index>(seed % 5);
    const DensityMatrix a = random_density(d, d, rng);
    const DensityMatrix b = random_density(d, d, rng);
    const CMatrix u = haar_unitary(d, rng);
    const DensityMatrix ua =
        validate_density(HermitianOperator(u * a.matrix() * u.adjoint()));
    const DensityMatrix ub =
        validate_density(HermitianOperator(u * b.matrix() * u.adjoint()));
    REQUIRE(trace_distance(ua, ub) == Approx(trace_distance(a, b)).margin(1e-10));
  }
}

TEST_CASE("overlap basics") {
  Rng rng(99);
  const DensityMatrix pure = random_density(3, 1, rng);
  CHECK(overlap(pure, pure) == Approx(1.0).margin(1e-12));

  const DensityMatrix mixed = diag_state({0.5, 0.5});
  CHECK(overlap(mixed, mixed) == Approx(0.5).margin(1e-12));

  const DensityMatrix ref = reference_state();
  const DensityMatrix sigma = diag_state({0.51, 0.49, 0.0, 0.0});
  CHECK(overlap(ref, sigma) == Approx(0.4002).margin(1e-12));

  CHECK_THROWS_AS(overlap(ref, mixed), DimMismatch);
}

TEST_CASE("hs_distance equals the purity/overlap expansion", "[property]") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(9100 + seed);
    const Index d = 2 + static_cast<Index>(seed % 7);
    const DensityMatrix a = random_density(d, d, rng);
    const DensityMatrix b = random_density(d, 1 + static_cast<Index>(seed % d), rng);
    const double expanded = purity(a) + purity(b) - 2.0 * overlap(a, b);
    REQUIRE(hs_distance(a, b) == Approx(expanded).margin(1e-10));
  }
}

TEST_CASE("partial_trace of product and maximally entangled states") {
  SECTION("product state") {
    CVector psi = CVector::Zero(6);
    psi[0] = 1.0;  // |0>|0> with d_sys=3, d_anc=2
    const DensityMatrix rho = partial_trace(psi, 3, 2, Subsystem::System);
    CHECK(rho.eigenvalues()[0] == Approx(1.0).margin(1e-12));
    CHECK(rho.rank() == 1);
  }
  SECTION("Bell state reduces to maximally mixed") {
    CVector psi = CVector::Zero(4);
    psi[0] = 1.0 / std::sqrt(2.0);
    psi[3] = 1.0 / std::sqrt(2.0);
    const DensityMatrix rho = partial_trace(psi, 2, 2, Subsystem::System);
    CHECK(rho.eigenvalues()[0] == Approx(0.5).margin(1e-12));
    CHECK(rho.eigenvalues()[1] == Approx(0.5).margin(1e-12));
    const DensityMatrix anc = partial_trace(psi, 2, 2, Subsystem::Ancilla);
    CHECK(anc.eigenvalues()[0] == Approx(0.5).margin(1e-12));
  }
}

TEST_CASE("partial_trace eigenvalues are squared Schmidt coefficients", "[property]") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(400 + seed);
    const CVector psi = random_pure_state(8, rng);
    const DensityMatrix sys = partial_trace(psi, 4, 2, Subsystem::System);
    REQUIRE(sys.rank() <= 2);
    const RVector schmidt = testsupport::schmidt_coefficients(psi, 4, 2);
    for (Index i = 0; i < schmidt.size(); ++i)
      REQUIRE(sys.eigenvalues()[i] == Approx(schmidt[i] * schmidt[i]).margin(1e-10));
  }
}

TEST_CASE("partial_trace input checks") {
  CVector psi = CVector::Zero(4);
  psi[0] = 1.0;
  CHECK_THROWS_AS(partial_trace(psi, 3, 2, Subsystem::System), DimMismatch);
  psi[0] = 0.7;
  CHECK_THROWS_AS(partial_trace(psi, 2, 2, Subsystem::System), NotNormalized);
}

TEST_CASE("majorizes on hand cases") {
  RVector pure(3), flat(3);
  pure << 1.0, 0.0, 0.0;
  flat << 1.0 / 3, 1.0 / 3, 1.0 / 3;
  CHECK(majorizes(pure, flat));
  CHECK_FALSE(majorizes(flat, pure));

  RVector shorter(2);
  shorter << 0.5, 0.5;
  CHECK_THROWS_AS(majorizes(pure, shorter), LengthMismatch);

  RVector off(3);
  off << 0.5, 0.3, 0.1;
  CHECK_THROWS_AS(majorizes(pure, off), SumMismatch);
}

TEST_CASE("spectrum majorizes the diagonal in any basis", "[property]") {
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(600 + seed);
    const Index d = 2 + static_cast<Index>(seed % 5);
    const DensityMatrix rho = random_density(d, 1 + static_cast<Index>(seed % d), rng);
    const CMatrix basis = haar_unitary(d, rng);
    REQUIRE(majorizes(rho.eigenvalues(), basis_diagonal(rho, basis)));
  }
}

TEST_CASE("projector invariants") {
  const DensityMatrix ref = reference_state();
  const Projector p(ref.spectrum(), 2);
  const CMatrix m = p.matrix();
  CHECK((m * m - m).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((m - m.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(p.rank() == 2);
  CHECK(std::abs(m.trace().real() - 2.0) <= 1e-12);

  const Projector sub(ref.spectrum(), std::vector<Index>{0, 2});
  const CMatrix ms = sub.matrix();
  CHECK((ms * ms - ms).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_THROWS_AS(Projector(ref.spectrum(), 5), RankOutOfRange);
}
