#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "procq/channels.hpp"
#include "procq/classical.hpp"
#include "test_helpers.hpp"

using namespace procq;
using namespace procq::classical;
using testutil::max_abs_diff;
using testutil::random_hermitian;

namespace {

sdp::Collection random_sigma(const Model& m, std::mt19937& rng) {
  sdp::Collection sigma(std::vector<int>(m.assignment_count(), m.dim()));
  for (size_t b = 0; b < sigma.size(); ++b)
    sigma[b] = random_hermitian(m.dim(), rng, 0.5);
  return sigma;
}

}  // namespace

TEST_CASE("assignment counts per system kind") {
  CHECK(Model::build(SystemKind::qubit1).assignment_count() == 8);
  CHECK(Model::build(SystemKind::qubit2).assignment_count() == 64);
  CHECK(Model::build(SystemKind::qubit3).assignment_count() == 512);
  CHECK(Model::build(SystemKind::qutrit).assignment_count() == 6561);
}

TEST_CASE("property sets span the operator space") {
  // Construction runs the rank check; reaching here means it passed. Spot
  // check counts and outcome labels.
  const Model q = Model::build(SystemKind::qubit1);
  CHECK(q.n_properties() == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(q.properties().properties[k].n_outcomes() == 2);
    CHECK(q.properties().properties[k].outcomes[0] == 1.0);
    CHECK(q.properties().properties[k].outcomes[1] == -1.0);
  }
  const Model t = Model::build(SystemKind::qutrit);
  CHECK(t.n_properties() == 8);
  for (int k = 0; k < 8; ++k) CHECK(t.properties().properties[k].n_outcomes() == 3);
}

TEST_CASE("qutrit eigenbases are mutually unbiased") {
  const Model t = Model::build(SystemKind::qutrit);
  // Bases repeat in pairs (two labelings per basis); compare distinct ones.
  for (int a = 0; a < 8; a += 2)
    for (int b = a + 2; b < 8; b += 2) {
      const auto& ba = t.properties().properties[a].eigenbasis;
      const auto& bb = t.properties().properties[b].eigenbasis;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          cplx ip = 0.0;
          for (int r = 0; r < 3; ++r) ip += std::conj(ba(r, i)) * bb(r, j);
          CHECK(std::norm(ip) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("uniform sigma gives maximally mixed conditionals and chi") {
  const Model m = Model::build(SystemKind::qubit1);
  sdp::Collection sigma(std::vector<int>(8, 2));
  for (size_t b = 0; b < 8; ++b) {
    sigma[b] = ComplexMatrix::identity(2);
    sigma[b] *= cplx(1.0 / 16.0, 0.0);
  }
  ComplexMatrix half = ComplexMatrix::identity(2);
  half *= cplx(0.5, 0.0);
  for (int k = 0; k < 3; ++k)
    for (int v = 0; v < 2; ++v)
      CHECK(max_abs_diff(m.conditional_output(sigma, k, v), half) < 1e-12);

  ComplexMatrix quarter = ComplexMatrix::identity(4);
  quarter *= cplx(0.25, 0.0);
  CHECK(max_abs_diff(m.assemble_chi(sigma), quarter) < 1e-12);
}

TEST_CASE("concentrated sigma conditions sharply") {
  const Model m = Model::build(SystemKind::qubit1);
  sdp::Collection sigma(std::vector<int>(8, 2));
  // Assignment (+1,+1,+1) is index 0 in the lexicographic order.
  sigma[0](0, 0) = 1.0;  // |0><0|
  const ComplexMatrix on = m.conditional_output(sigma, 2, 0);   // v3 = +1
  const ComplexMatrix off = m.conditional_output(sigma, 2, 1);  // v3 = -1
  ComplexMatrix two(2);
  two(0, 0) = 2.0;
  CHECK(max_abs_diff(on, two) < 1e-12);
  CHECK(off.frobenius_norm() == 0.0);
}

TEST_CASE("optimal-overlap preparation leaves shrunk Bloch conditionals") {
  // Each assignment prepares the pure state along (v1,v2,v3)/sqrt(3) with
  // uniform weight; the v3 = +1 conditional has Bloch vector (0,0,1/sqrt3).
  const Model m = Model::build(SystemKind::qubit1);
  const double s3 = 1.0 / std::sqrt(3.0);
  sdp::Collection sigma(std::vector<int>(8, 2));
  for (long mu = 0; mu < 8; ++mu) {
    const double v1 = m.outcome_value(mu, 0), v2 = m.outcome_value(mu, 1),
                 v3 = m.outcome_value(mu, 2);
    ComplexMatrix rho = ComplexMatrix::identity(2);
    rho.add_scaled(chan::pauli_x(), cplx(v1 * s3, 0.0));
    rho.add_scaled(chan::pauli_y(), cplx(v2 * s3, 0.0));
    rho.add_scaled(chan::pauli_z(), cplx(v3 * s3, 0.0));
    rho *= cplx(0.5 / 8.0, 0.0);
    sigma[mu] = rho;
  }
  const ComplexMatrix cond = m.conditional_output(sigma, 2, 0);
  ComplexMatrix want = ComplexMatrix::identity(2);
  want.add_scaled(chan::pauli_z(), cplx(s3, 0.0));
  want *= cplx(0.5, 0.0);
  CHECK(max_abs_diff(cond, want) < 1e-12);

  // Overlap with the maximally entangled projector: (1 + sqrt3)/4.
  const ComplexMatrix chi = m.assemble_chi(sigma);
  const chan::ProcessMatrix id = chan::identity_chi(2);
  CHECK(inner(chi, id.chi) == doctest::Approx((1.0 + std::sqrt(3.0)) / 4.0).epsilon(1e-12));
  // And it is a valid PSD process matrix.
  CHECK(chi.is_psd(1e-9));
}

TEST_CASE("Z-conditioned preparation assembles the full phase damping chi") {
  const Model m = Model::build(SystemKind::qubit1);
  sdp::Collection sigma(std::vector<int>(8, 2));
  for (long mu = 0; mu < 8; ++mu) {
    const int level = m.outcome_value(mu, 2) > 0 ? 0 : 1;
    sigma[mu](level, level) = 1.0 / 8.0;
  }
  const chan::ProcessMatrix pd1 = chan::chi_from_kraus(chan::phase_damping_channel(1.0));
  CHECK(max_abs_diff(m.assemble_chi(sigma), pd1.chi) < 1e-12);
}

TEST_CASE("single-qubit assembly matches the explicit block formulas") {
  // I_c, X_c, Y_c, Z_c from the conditionals; blocks (I+-Z)/2, (X+-iY)/2 of
  // the trace-2 form, then the global /2 normalization.
  std::mt19937 rng(41);
  const Model m = Model::build(SystemKind::qubit1);
  for (int rep = 0; rep < 5; ++rep) {
    sdp::Collection sigma = random_sigma(m, rng);
    const ComplexMatrix ic = m.conditional_output(sigma, 2, 0) + m.conditional_output(sigma, 2, 1);
    const ComplexMatrix xc = m.conditional_output(sigma, 0, 0) - m.conditional_output(sigma, 0, 1);
    const ComplexMatrix yc = m.conditional_output(sigma, 1, 0) - m.conditional_output(sigma, 1, 1);
    const ComplexMatrix zc = m.conditional_output(sigma, 2, 0) - m.conditional_output(sigma, 2, 1);
    ComplexMatrix chi(4);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) {
        chi(0 + r, 0 + c) = 0.5 * (ic(r, c) + zc(r, c));
        chi(0 + r, 2 + c) = 0.5 * (xc(r, c) + cplx(0, 1) * yc(r, c));
        chi(2 + r, 0 + c) = 0.5 * (xc(r, c) - cplx(0, 1) * yc(r, c));
        chi(2 + r, 2 + c) = 0.5 * (ic(r, c) - zc(r, c));
      }
    chi *= cplx(0.5, 0.0);
    CHECK(max_abs_diff(chi, m.assemble_chi(sigma)) < 1e-12);
  }
}

TEST_CASE("conditional sums are property independent") {
  std::mt19937 rng(42);
  for (auto kind : {SystemKind::qubit1, SystemKind::qubit2, SystemKind::qutrit}) {
    const Model m = Model::build(kind);
    sdp::Collection sigma = random_sigma(m, rng);
    ComplexMatrix ref;
    for (int k = 0; k < m.n_properties(); ++k) {
      ComplexMatrix total(m.dim());
      const int n_out = m.properties().properties[k].n_outcomes();
      for (int v = 0; v < n_out; ++v) total += m.conditional_output(sigma, k, v);
      // Normalize by the outcome count so every property sums to the same
      // dim * sum sigma.
      total *= cplx(1.0 / n_out, 0.0);
      if (ref.empty()) ref = total;
      else CHECK(max_abs_diff(ref, total) < 1e-12);
    }
  }
}

TEST_CASE("assembly trace equals the sigma weight and output is Hermitian") {
  std::mt19937 rng(43);
  for (auto kind : {SystemKind::qubit1, SystemKind::qubit2, SystemKind::qutrit}) {
    const Model m = Model::build(kind);
    sdp::Collection sigma = random_sigma(m, rng);
    const ComplexMatrix chi = m.assemble_chi(sigma);
    CHECK(chi.is_hermitian(1e-9 * chi.frobenius_norm()));
    double want = 0.0;
    for (size_t b = 0; b < sigma.size(); ++b) want += sigma[b].trace().real();
    CHECK(chi.trace().real() == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("assembly adjoint is the true adjoint") {
  std::mt19937 rng(44);
  for (auto kind : {SystemKind::qubit1, SystemKind::qutrit}) {
    const Model m = Model::build(kind);
    sdp::Collection sigma = random_sigma(m, rng);
    const ComplexMatrix y = random_hermitian(m.dim() * m.dim(), rng);
    const ComplexMatrix lx = m.assemble_chi(sigma);
    const sdp::Collection ly = m.assemble_adjoint(y);
    CHECK(inner(lx, y) == doctest::Approx(ly.dot(sigma)).epsilon(1e-10));
  }
}

TEST_CASE("base problem shapes") {
  const Model m = Model::build(SystemKind::qubit1);
  const auto p = m.base_problem(true, true);
  CHECK(p.blocks.size() == 8);
  CHECK(p.constraints.size() == 9);  // 8 sigma cones + chi_C
  CHECK(p.equalities.size() == 1);
  CHECK_NOTHROW(p.validate());

  const auto p2 = m.base_problem(false, false);
  CHECK(p2.constraints.size() == 8);
  CHECK(p2.equalities.empty());
}
