#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "procq/channels.hpp"
#include "procq/linalg.hpp"
#include "test_helpers.hpp"

using namespace procq;
using testutil::max_abs_diff;
using testutil::random_hermitian;
using testutil::random_psd;
using testutil::random_unitary;

TEST_CASE("kron identity and diagonal cases") {
  const ComplexMatrix i2 = ComplexMatrix::identity(2);
  CHECK(max_abs_diff(kron(i2, i2), ComplexMatrix::identity(4)) == 0.0);

  const ComplexMatrix zz = kron(chan::pauli_z(), chan::pauli_z());
  const ComplexMatrix want =
      ComplexMatrix::from_rows(4, {1, 0, 0, 0, 0, -1, 0, 0, 0, 0, -1, 0, 0, 0, 0, 1});
  CHECK(max_abs_diff(zz, want) == 0.0);
}

TEST_CASE("kron X with |0><0| places the two hand-expanded entries") {
  ComplexMatrix p00(2);
  p00(0, 0) = 1.0;
  const ComplexMatrix k = kron(chan::pauli_x(), p00);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const bool hit = (i == 0 && j == 2) || (i == 2 && j == 0);
      CHECK(std::abs(k(i, j) - (hit ? cplx(1.0) : cplx(0.0))) == 0.0);
    }
}

TEST_CASE("kron is multiplicative on random factors") {
  std::mt19937 rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    const ComplexMatrix a = random_hermitian(2, rng), b = random_hermitian(2, rng);
    const ComplexMatrix c = random_hermitian(2, rng), d = random_hermitian(2, rng);
    const ComplexMatrix lhs = kron(a, b) * kron(c, d);
    const ComplexMatrix rhs = kron(a * c, b * d);
    CHECK(max_abs_diff(lhs, rhs) < 1e-12);
  }
}

TEST_CASE("partial trace of a Bell state gives the maximally mixed marginal") {
  ComplexMatrix bell(4);
  bell(0, 0) = bell(0, 3) = bell(3, 0) = bell(3, 3) = 0.5;
  const ComplexMatrix marg = partial_trace(bell, {2, 2}, {0});
  ComplexMatrix half = ComplexMatrix::identity(2);
  half *= cplx(0.5, 0.0);
  CHECK(max_abs_diff(marg, half) < 1e-14);
}

TEST_CASE("partial trace of a product factors") {
  std::mt19937 rng(12);
  for (int rep = 0; rep < 5; ++rep) {
    const ComplexMatrix rho = random_hermitian(2, rng);
    const ComplexMatrix sig = random_hermitian(3, rng);
    const ComplexMatrix got = partial_trace(kron(rho, sig), {2, 3}, {0});
    ComplexMatrix want = rho;
    want *= sig.trace();
    CHECK(max_abs_diff(got, want) < 1e-12);
  }
}

TEST_CASE("partial trace keeps factors 0 and 2 of |010><010|") {
  ComplexMatrix m(8);
  m(2, 2) = 1.0;  // |010>
  const ComplexMatrix got = partial_trace(m, {2, 2, 2}, {0, 2});
  ComplexMatrix want(4);
  want(0, 0) = 1.0;  // |00><00|
  CHECK(max_abs_diff(got, want) == 0.0);
}

TEST_CASE("partial trace rejects inconsistent dims") {
  CHECK_THROWS_AS(partial_trace(ComplexMatrix::identity(6), {2, 2}, {0}), DimensionError);
}

TEST_CASE("hermitian_eig on the Pauli matrices") {
  auto ez = hermitian_eig(chan::pauli_z());
  CHECK(ez.eigenvalues[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(ez.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-12));

  auto ex = hermitian_eig(chan::pauli_x());
  CHECK(ex.eigenvalues[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(ex.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-12));
  // Eigenvectors are (|0> -+ |1>)/sqrt2 up to phase.
  for (int k = 0; k < 2; ++k) {
    CHECK(std::abs(ex.eigenvectors(0, k)) == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-10));
    const double sign = k == 0 ? -1.0 : 1.0;
    const cplx ratio = ex.eigenvectors(1, k) / ex.eigenvectors(0, k);
    CHECK(std::abs(ratio - sign) < 1e-10);
  }

  ComplexMatrix hx = chan::pauli_x() + chan::pauli_z();
  hx *= cplx(1.0 / std::sqrt(2.0), 0.0);
  auto eh = hermitian_eig(hx);
  CHECK(eh.eigenvalues[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(eh.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hermitian_eig rejects non-Hermitian input") {
  ComplexMatrix m(2);
  m(0, 1) = 1.0;
  CHECK_THROWS_AS(hermitian_eig(m), NumericsError);
}

TEST_CASE("hermitian_eig reconstruction and unitarity across sizes") {
  std::mt19937 rng(13);
  for (int dim : {2, 3, 5, 8, 16, 64}) {
    const ComplexMatrix a = random_hermitian(dim, rng);
    auto eig = hermitian_eig(a);
    // V diag(lambda) V^dag
    ComplexMatrix rec(dim);
    for (int k = 0; k < dim; ++k)
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
          rec(i, j) += eig.eigenvalues[k] * eig.eigenvectors(i, k) *
                       std::conj(eig.eigenvectors(j, k));
    rec -= a;
    CHECK(rec.frobenius_norm() <= 1e-10 * a.frobenius_norm());

    ComplexMatrix vtv(dim);
    matmul_adjoint_left(eig.eigenvectors, eig.eigenvectors, vtv);
    vtv -= ComplexMatrix::identity(dim);
    CHECK(vtv.frobenius_norm() < 1e-10);

    for (int k = 1; k < dim; ++k) CHECK(eig.eigenvalues[k] >= eig.eigenvalues[k - 1]);
  }
}

TEST_CASE("hermitian_eig handles degenerate spectra") {
  std::mt19937 rng(14);
  // Projector with a 3-fold degenerate unit eigenvalue, rotated randomly.
  const ComplexMatrix u = random_unitary(5, rng);
  ComplexMatrix d(5);
  d(0, 0) = d(1, 1) = d(2, 2) = 1.0;
  ComplexMatrix tmp(5), a(5);
  matmul(u, d, tmp);
  matmul(tmp, u.adjoint(), a);
  a.hermitize();
  auto eig = hermitian_eig(a);
  CHECK(eig.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(eig.eigenvalues[4] == doctest::Approx(1.0).epsilon(1e-10));
  ComplexMatrix vtv(5);
  matmul_adjoint_left(eig.eigenvectors, eig.eigenvectors, vtv);
  vtv -= ComplexMatrix::identity(5);
  CHECK(vtv.frobenius_norm() < 1e-10);
}

TEST_CASE("embed_hermitian doubles the spectrum") {
  // Y embeds to a real 4x4 with eigenvalues (-1, -1, 1, 1).
  RealMatrix e = embed_hermitian(chan::pauli_y());
  ComplexMatrix ec(4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) ec(i, j) = e(i, j);
  auto eig = hermitian_eig(ec);
  CHECK(eig.eigenvalues[0] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(eig.eigenvalues[1] == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(eig.eigenvalues[2] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eig.eigenvalues[3] == doctest::Approx(1.0).epsilon(1e-12));

  // Real symmetric input embeds into two diagonal copies.
  std::mt19937 rng(15);
  ComplexMatrix r = random_hermitian(3, rng);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = r(i, j).real();
  RealMatrix er = embed_hermitian(r);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(er(i, j) == doctest::Approx(r(i, j).real()));
      CHECK(er(i + 3, j + 3) == doctest::Approx(r(i, j).real()));
      CHECK(er(i, j + 3) == 0.0);
      CHECK(er(i + 3, j) == 0.0);
    }

  // Random Hermitian: embedded spectrum equals the complex spectrum doubled.
  const ComplexMatrix h = random_hermitian(4, rng);
  auto eh = hermitian_eig(h);
  RealMatrix emb = embed_hermitian(h);
  ComplexMatrix embc(8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) embc(i, j) = emb(i, j);
  auto ee = hermitian_eig(embc);
  for (int k = 0; k < 4; ++k) {
    CHECK(ee.eigenvalues[2 * k] == doctest::Approx(eh.eigenvalues[k]).epsilon(1e-10));
    CHECK(ee.eigenvalues[2 * k + 1] == doctest::Approx(eh.eigenvalues[k]).epsilon(1e-10));
  }
}

TEST_CASE("psd_project clips, fixes PSD inputs and kills -I") {
  const ComplexMatrix clipped = psd_project(ComplexMatrix::from_rows(2, {2, 0, 0, -1}));
  CHECK(max_abs_diff(clipped, ComplexMatrix::from_rows(2, {2, 0, 0, 0})) < 1e-12);

  std::mt19937 rng(16);
  const ComplexMatrix p = random_psd(4, rng);
  CHECK(max_abs_diff(psd_project(p), p) < 1e-10);

  ComplexMatrix neg = ComplexMatrix::identity(3);
  neg *= cplx(-1.0, 0.0);
  CHECK(psd_project(neg).frobenius_norm() < 1e-14);
}

TEST_CASE("psd_project is idempotent and never beats any PSD reference") {
  std::mt19937 rng(17);
  for (int rep = 0; rep < 6; ++rep) {
    const ComplexMatrix a = random_hermitian(4, rng);
    const ComplexMatrix pa = psd_project(a);
    CHECK(max_abs_diff(psd_project(pa), pa) < 1e-10);
    // Frobenius-nearest: distance to a never exceeds that of any PSD matrix.
    const ComplexMatrix ref = random_psd(4, rng);
    ComplexMatrix da = pa;
    da -= a;
    ComplexMatrix dr = ref;
    dr -= a;
    CHECK(da.frobenius_norm() <= dr.frobenius_norm() + 1e-10);
  }
}

TEST_CASE("psd projection warm start matches the cold path") {
  std::mt19937 rng(18);
  ComplexMatrix hint;
  ComplexMatrix a = random_hermitian(6, rng);
  const ComplexMatrix first = psd_project_warm(a, hint);
  CHECK(max_abs_diff(first, psd_project(a)) < 1e-10);
  // Drift the matrix slightly; the warm start must still be exact.
  a.add_scaled(random_hermitian(6, rng), cplx(1e-3, 0.0));
  a.hermitize();
  const ComplexMatrix warm = psd_project_warm(a, hint);
  CHECK(max_abs_diff(warm, psd_project(a)) < 1e-10);
}

TEST_CASE("von Neumann entropy reference values") {
  // Rank-1 projector: S = 0.
  ComplexMatrix proj(4);
  proj(0, 0) = 1.0;
  CHECK(von_neumann_entropy(proj) == doctest::Approx(0.0).epsilon(1e-12));

  ComplexMatrix mixed = ComplexMatrix::identity(4);
  mixed *= cplx(0.25, 0.0);
  CHECK(von_neumann_entropy(mixed) == doctest::Approx(2.0).epsilon(1e-12));

  ComplexMatrix half(4);
  half(0, 0) = half(1, 1) = 0.5;
  CHECK(von_neumann_entropy(half) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("von Neumann entropy rejects bad inputs") {
  CHECK_THROWS_AS(von_neumann_entropy(ComplexMatrix::identity(2)), NumericsError);  // trace 2
  ComplexMatrix neg(2);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  CHECK_THROWS_AS(von_neumann_entropy(neg), NumericsError);
}

TEST_CASE("entropy is unitarily invariant") {
  std::mt19937 rng(19);
  for (int rep = 0; rep < 4; ++rep) {
    ComplexMatrix rho = random_psd(4, rng);
    rho *= cplx(1.0 / rho.trace().real(), 0.0);
    const double s0 = von_neumann_entropy(rho);
    const ComplexMatrix u = random_unitary(4, rng);
    ComplexMatrix tmp(4), rot(4);
    matmul(u, rho, tmp);
    matmul(tmp, u.adjoint(), rot);
    rot.hermitize();
    CHECK(von_neumann_entropy(rot) == doctest::Approx(s0).epsilon(1e-10));
  }
}

TEST_CASE("lu_solve and lu_inverse round trip") {
  std::mt19937 rng(20);
  const ComplexMatrix a = random_hermitian(5, rng) + cplx(3.0, 0.0) * ComplexMatrix::identity(5);
  std::vector<cplx> b(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (auto& v : b) v = cplx(g(rng), g(rng));
  const auto x = lu_solve(a, b);
  std::vector<cplx> ax(5, cplx(0.0));
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) ax[i] += a(i, j) * x[j];
  for (int i = 0; i < 5; ++i) CHECK(std::abs(ax[i] - b[i]) < 1e-10);

  const ComplexMatrix ainv = lu_inverse(a);
  CHECK(max_abs_diff(a * ainv, ComplexMatrix::identity(5)) < 1e-10);
}
