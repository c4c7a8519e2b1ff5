#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "procq/channels.hpp"
#include "test_helpers.hpp"

using namespace procq;
using namespace procq::chan;
using testutil::max_abs_diff;
using testutil::random_density;

namespace {

KrausChannel random_channel(int d, int n_kraus, std::mt19937& rng) {
  // Random Kraus set normalized through S^{-1/2}, S = sum G^dag G.
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<ComplexMatrix> ops;
  ComplexMatrix s(d);
  for (int k = 0; k < n_kraus; ++k) {
    ComplexMatrix m(d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = cplx(g(rng), g(rng));
    ComplexMatrix mm(d);
    matmul_adjoint_left(m, m, mm);
    s += mm;
    ops.push_back(std::move(m));
  }
  s.hermitize();
  auto eig = hermitian_eig(s);
  ComplexMatrix isqrt(d);
  for (int k = 0; k < d; ++k) {
    const double w = 1.0 / std::sqrt(eig.eigenvalues[k]);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        isqrt(i, j) += w * eig.eigenvectors(i, k) * std::conj(eig.eigenvectors(j, k));
  }
  KrausChannel ch{d, {}, ChannelKind::trace_preserving};
  for (auto& m : ops) ch.operators.push_back(m * isqrt);
  return ch;
}

}  // namespace

TEST_CASE("identity channel chi is the maximally entangled projector") {
  const ProcessMatrix chi = identity_chi(2);
  ComplexMatrix want(4);
  want(0, 0) = want(0, 3) = want(3, 0) = want(3, 3) = 0.5;
  CHECK(max_abs_diff(chi.chi, want) < 1e-12);
  CHECK(chi.trace_preserving);
  CHECK(von_neumann_entropy(chi.chi) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("fully depolarizing channel gives the maximally mixed chi") {
  const ProcessMatrix chi = chi_from_kraus(depolarizing_channel(1.0));
  ComplexMatrix want = ComplexMatrix::identity(4);
  want *= cplx(0.25, 0.0);
  CHECK(max_abs_diff(chi.chi, want) < 1e-12);
}

TEST_CASE("fusion chi is the rank-1 projector on the HH/VV span") {
  const ProcessMatrix chi = chi_from_kraus(fusion_pf());
  // (|HH,HH> + |VV,VV>)/sqrt2 outer product: indices 0 and 15 of the
  // (input (x) output) space.
  ComplexMatrix want(16);
  want(0, 0) = want(0, 15) = want(15, 0) = want(15, 15) = 0.5;
  CHECK(max_abs_diff(chi.chi, want) < 1e-12);
  CHECK_FALSE(chi.trace_preserving);
  auto eig = hermitian_eig(chi.chi);
  CHECK(eig.eigenvalues.back() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("apply reproduces the represented map") {
  const ProcessMatrix id = identity_chi(2);
  std::mt19937 rng(31);
  const ComplexMatrix rho = random_density(2, rng);
  CHECK(max_abs_diff(apply_raw(id, rho), rho) < 1e-12);

  // Full phase damping kills the coherence twice over: |+><+| goes to I/2.
  const ProcessMatrix pd = chi_from_kraus(phase_damping_channel(1.0));
  ComplexMatrix plus(2);
  plus(0, 0) = plus(0, 1) = plus(1, 0) = plus(1, 1) = 0.5;
  ComplexMatrix half = ComplexMatrix::identity(2);
  half *= cplx(0.5, 0.0);
  CHECK(max_abs_diff(apply_raw(pd, plus), half) < 1e-12);

  // Full amplitude damping empties the excited state.
  const ProcessMatrix ad = chi_from_kraus(amplitude_damping_channel(1.0));
  ComplexMatrix exc(2);
  exc(1, 1) = 1.0;
  ComplexMatrix ground(2);
  ground(0, 0) = 1.0;
  CHECK(max_abs_diff(apply_raw(ad, exc), ground) < 1e-12);
}

TEST_CASE("amplitude damping Kraus set is trace preserving for all p") {
  for (double p : {0.0, 0.3, 0.7, 1.0}) CHECK_NOTHROW(amplitude_damping_channel(p).validate());
}

TEST_CASE("tomography round trips channels") {
  std::mt19937 rng(32);
  for (int rep = 0; rep < 4; ++rep) {
    const KrausChannel ch = random_channel(2, 2, rng);
    const ProcessMatrix direct = chi_from_kraus(ch);
    const ProcessMatrix tomo =
        chi_from_map([&](const ComplexMatrix& rho) { return ch.apply(rho); }, 2);
    CHECK(max_abs_diff(direct.chi, tomo.chi) < 1e-9);
  }
  // Hadamard conjugation via the black box equals the direct construction.
  const auto h = unitary_channel(hadamard_gate());
  const ProcessMatrix chi_h = chi_from_kraus(h);
  const ProcessMatrix chi_h2 =
      chi_from_map([&](const ComplexMatrix& rho) { return h.apply(rho); }, 2);
  CHECK(process_fidelity(chi_h, chi_h2) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("round trip through apply") {
  std::mt19937 rng(33);
  const ProcessMatrix chi = chi_from_kraus(random_channel(3, 2, rng));
  const ProcessMatrix again =
      chi_from_map([&](const ComplexMatrix& rho) { return apply_raw(chi, rho); }, 3);
  CHECK(max_abs_diff(chi.chi, again.chi) < 1e-9);
}

TEST_CASE("compose matches channel algebra") {
  const ProcessMatrix chi_x = chi_from_kraus(unitary_channel(pauli_x()));
  const ProcessMatrix id = identity_chi(2);
  CHECK(max_abs_diff(compose(chi_x, chi_x).chi, id.chi) < 1e-12);

  const ProcessMatrix pd1 = chi_from_kraus(phase_damping_channel(1.0));
  CHECK(max_abs_diff(compose(pd1, pd1).chi, pd1.chi) < 1e-12);

  const ProcessMatrix d03 = chi_from_kraus(depolarizing_channel(0.3));
  CHECK(max_abs_diff(compose(id, d03).chi, d03.chi) < 1e-12);

  std::mt19937 rng(34);
  const ProcessMatrix a = chi_from_kraus(random_channel(2, 2, rng));
  const ProcessMatrix b = chi_from_kraus(random_channel(2, 3, rng));
  const ProcessMatrix c = chi_from_kraus(random_channel(2, 2, rng));
  CHECK(max_abs_diff(compose(compose(c, b), a).chi, compose(c, compose(b, a)).chi) < 1e-9);
}

TEST_CASE("invert behaves as the map inverse") {
  const ProcessMatrix chi_t = chi_from_kraus(unitary_channel(t_gate()));
  const ProcessMatrix inv = invert(chi_t);
  CHECK(max_abs_diff(compose(inv, chi_t).chi, identity_chi(2).chi) < 1e-10);

  const ProcessMatrix id = identity_chi(2);
  CHECK(max_abs_diff(invert(id).chi, id.chi) < 1e-12);

  const ProcessMatrix d05 = chi_from_kraus(depolarizing_channel(0.5));
  CHECK(max_abs_diff(compose(invert(d05), d05).chi, id.chi) < 1e-8);

  // p = 1 depolarizing collapses everything; the superoperator is singular.
  CHECK_THROWS_AS(invert(chi_from_kraus(depolarizing_channel(1.0))), DomainError);
}

TEST_CASE("process fidelity and the average state fidelity conversion") {
  const ProcessMatrix id = identity_chi(2);
  CHECK(process_fidelity(id, id) == doctest::Approx(1.0));
  CHECK(avg_state_fidelity(1.0, 2) == doctest::Approx(1.0));
  CHECK(avg_state_fidelity(0.683, 2) == doctest::Approx(0.789).epsilon(1e-3));
  CHECK(avg_state_fidelity(0.467, 4) == doctest::Approx(0.574).epsilon(1e-3));

  const ProcessMatrix chi_h = chi_from_kraus(unitary_channel(hadamard_gate()));
  CHECK(process_fidelity(chi_h, chi_h) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(process_fidelity(id, chi_h) < 1.0 - 1e-3);
}

TEST_CASE("trace preservation of apply on random states") {
  std::mt19937 rng(35);
  const ProcessMatrix chi = chi_from_kraus(random_channel(2, 3, rng));
  for (int rep = 0; rep < 20; ++rep) {
    const ComplexMatrix rho = random_density(2, rng);
    const ComplexMatrix out = apply_raw(chi, rho);
    CHECK(std::abs(out.trace().real() - 1.0) < 1e-9);
  }
}

TEST_CASE("teleportation at theta = pi/4 is the identity channel") {
  const ProcessMatrix chi = chi_from_kraus(teleportation_channel(M_PI / 4.0));
  CHECK(max_abs_diff(chi.chi, identity_chi(2).chi) < 1e-12);
}

TEST_CASE("teleportation channel matches an explicit Bell-measurement simulation") {
  // Independent oracle: build the three-qubit state, project on each Bell
  // outcome of qubits (0,1), correct qubit 2, and sum the outcome branches.
  std::mt19937 rng(36);
  for (double theta : {0.0, 0.3, M_PI / 8.0, M_PI / 4.0, 1.2}) {
    const ProcessMatrix chi = chi_from_kraus(teleportation_channel(theta));
    const double c0 = std::cos(theta), c1 = std::sin(theta);
    for (int rep = 0; rep < 5; ++rep) {
      const ComplexMatrix rho_in = random_density(2, rng);
      ComplexMatrix phi(4);
      phi(0, 0) = c0 * c0;
      phi(0, 3) = c0 * c1;
      phi(3, 0) = c1 * c0;
      phi(3, 3) = c1 * c1;
      const ComplexMatrix joint = kron(rho_in, phi);
      ComplexMatrix out(2);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          // Bell state |B_ab> = (|0,b> + (-1)^a |1,1-b>)/sqrt2 on qubits (0,1).
          std::vector<cplx> bell(4, cplx(0.0));
          bell[0 * 2 + b] = 1.0 / std::sqrt(2.0);
          bell[1 * 2 + (1 - b)] = (a == 1 ? -1.0 : 1.0) / std::sqrt(2.0);
          ComplexMatrix proj(4);
          for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) proj(i, j) = bell[i] * std::conj(bell[j]);
          const ComplexMatrix pr8 = kron(proj, ComplexMatrix::identity(2));
          const ComplexMatrix branch = pr8 * joint * pr8;
          ComplexMatrix cond = partial_trace(branch, {2, 2, 2}, {2});
          ComplexMatrix corr = ComplexMatrix::identity(2);
          if (b == 1) corr = pauli_x();
          if (a == 1) corr = pauli_z() * corr;
          out += corr * cond * corr.adjoint();
        }
      CHECK(max_abs_diff(out, apply_raw(chi, rho_in)) < 1e-9);
    }
  }
}

TEST_CASE("channel spec parsing accepts documented kinds and rejects junk") {
  CHECK(parse_channel_spec(R"({"kind": "hadamard"})").operators.size() == 1);
  CHECK(parse_channel_spec(R"({"kind": "pd", "p": 1.0})").operators.size() == 2);
  CHECK(parse_channel_spec(R"({"kind": "nghz", "n": 3})").d == 8);
  CHECK(parse_channel_spec(R"({"kind": "teleport", "theta": 0.5})").operators.size() == 4);
  const std::string kraus = R"({"kind": "kraus", "dim": 2,
    "operators": [[[[1,0],[0,0]],[[0,0],[1,0]]]]})";
  CHECK(parse_channel_spec(kraus).kind == ChannelKind::trace_preserving);

  CHECK_THROWS_AS(parse_channel_spec("{"), ParseError);
  CHECK_THROWS_AS(parse_channel_spec(R"({"kind": "warp"})"), ParseError);
  CHECK_THROWS_AS(parse_channel_spec(R"({"kind": "pd"})"), ParseError);
  CHECK_THROWS_AS(parse_channel_spec(R"({"kind": "pd", "p": 2.0})"), ParseError);
  CHECK_THROWS_AS(parse_channel_spec(R"({"kind": "pd", "p": 0.1, "x": 1})"), ParseError);
  CHECK_THROWS_AS(parse_channel_spec(R"({"kind": "hadamard", "dim": 3})"), ParseError);
  const std::string bad = R"({"kind": "kraus", "dim": 2,
    "operators": [[[[2,0],[0,0]],[[0,0],[2,0]]]]})";
  CHECK_THROWS_AS(parse_channel_spec(bad), ParseError);
}
