#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "procq/quantify.hpp"

using namespace procq;
using namespace procq::quant;

namespace {

const classical::Model& qubit_model() {
  static classical::Model m = classical::Model::build(classical::SystemKind::qubit1);
  return m;
}

chan::ProcessMatrix chi_of(const ComplexMatrix& u) {
  return chan::chi_from_kraus(chan::unitary_channel(u));
}

}  // namespace

TEST_CASE("unitaries are fully quantum") {
  for (const auto& u : {chan::pauli_x(), chan::hadamard_gate(), chan::t_gate()}) {
    const auto a = alpha(chi_of(u), qubit_model());
    CHECK(a.alpha == doctest::Approx(1.0).epsilon(1e-4));
    CHECK(entropy_certificate(chi_of(u)).s_bits == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("projective measurement and full phase damping are classical") {
  const auto proj = chan::chi_from_kraus(chan::projective_measurement(ComplexMatrix::identity(2)));
  const auto pd1 = chan::chi_from_kraus(chan::phase_damping_channel(1.0));
  CHECK(alpha(proj, qubit_model()).alpha < 1e-4);
  CHECK(beta(proj, qubit_model()).beta < 1e-4);
  CHECK(alpha(pd1, qubit_model()).alpha < 1e-4);
  CHECK(beta(pd1, qubit_model()).beta < 1e-4);
  // The two constructions describe the same channel.
  CHECK(chan::process_fidelity(proj, pd1) == doctest::Approx(inner(proj.chi, proj.chi)));
}

TEST_CASE("alpha of teleportation tracks the resource concurrence") {
  const auto a = alpha(chan::chi_from_kraus(chan::teleportation_channel(M_PI / 8.0)),
                       qubit_model());
  CHECK(a.alpha == doctest::Approx(std::sin(M_PI / 4.0)).epsilon(2e-4));
}

TEST_CASE("alpha = 0 comes with an exact classical reproduction") {
  const auto pd1 = chan::chi_from_kraus(chan::phase_damping_channel(1.0));
  const auto a = alpha(pd1, qubit_model());
  REQUIRE(a.alpha < 1e-4);
  REQUIRE(a.classical_weight > 0.5);
  ComplexMatrix diff = a.chi_classical.chi;
  diff *= cplx(a.classical_weight, 0.0);
  diff -= pd1.chi;
  CHECK(diff.frobenius_norm() < 1e-5);
}

TEST_CASE("classical fidelity bound for the identity target") {
  const auto fc = f_classical(chan::identity_chi(2), qubit_model());
  CHECK(fc.f_classical == doctest::Approx((1.0 + std::sqrt(3.0)) / 4.0).epsilon(1e-6));
  // The optimizer itself is a valid classical process matrix.
  CHECK(fc.chi_classical.chi.is_psd(1e-6));
  CHECK(std::abs(fc.chi_classical.chi.trace().real() - 1.0) < 1e-6);
}

TEST_CASE("fidelity certification separates quantum from classical") {
  const auto id = chan::identity_chi(2);
  const auto cert = certify_fidelity(id, id, qubit_model());
  CHECK(cert.f_expt == doctest::Approx(1.0));
  CHECK(cert.certified);
  CHECK(cert.avg_state_fidelity_threshold == doctest::Approx(0.789).epsilon(1e-3));

  const auto pd1 = chan::chi_from_kraus(chan::phase_damping_channel(1.0));
  const auto cert2 = certify_fidelity(pd1, id, qubit_model());
  CHECK_FALSE(cert2.certified);
}

TEST_CASE("f_classical requires a pure target") {
  const auto mixed = chan::chi_from_kraus(chan::depolarizing_channel(0.5));
  CHECK_THROWS_AS(f_classical(mixed, qubit_model()), DomainError);
}

TEST_CASE("entropy certificate thresholds") {
  const auto id = chan::identity_chi(2);
  auto e = entropy_certificate(id);
  CHECK(e.s_threshold == doctest::Approx(1.0));
  CHECK(e.certified);

  const auto depol = chan::chi_from_kraus(chan::depolarizing_channel(1.0));
  e = entropy_certificate(depol);
  CHECK(e.s_bits == doctest::Approx(2.0).epsilon(1e-9));
  CHECK_FALSE(e.certified);
}

TEST_CASE("depolarizing entropy crosses one bit where the spectrum says") {
  // Oracle: chi_D(p) has one eigenvalue 1 - 3p/4 and three p/4; bisection on
  // the closed form locates the crossing, the certificate must agree.
  auto closed_form = [](double p) {
    const double big = 1.0 - 0.75 * p, small = 0.25 * p;
    double s = 0.0;
    if (big > 0) s -= big * std::log2(big);
    if (small > 0) s -= 3.0 * small * std::log2(small);
    return s;
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (closed_form(mid) < 1.0 ? lo : hi) = mid;
  }
  const double pstar = 0.5 * (lo + hi);
  CHECK(pstar > 0.0);
  CHECK(pstar < 1.0);
  const double eps = 1e-3;
  CHECK(entropy_certificate(chan::chi_from_kraus(chan::depolarizing_channel(pstar - eps)))
            .certified);
  CHECK_FALSE(
      entropy_certificate(chan::chi_from_kraus(chan::depolarizing_channel(pstar + eps)))
          .certified);
}

TEST_CASE("composition bounds hold on simple pairs") {
  const auto id = chan::identity_chi(2);
  const auto c = p1_check(id, id, qubit_model());
  CHECK(c.alpha_ok);
  CHECK(c.beta_ok);
  CHECK(c.alpha_composite == doctest::Approx(1.0).epsilon(1e-4));

  const auto pd1 = chan::chi_from_kraus(chan::phase_damping_channel(1.0));
  const auto c2 = p1_check(pd1, pd1, qubit_model());
  CHECK(c2.alpha_composite < 1e-4);
  CHECK(c2.alpha_ok);

  const auto d05 = chan::chi_from_kraus(chan::depolarizing_channel(0.5));
  const auto cx = chi_of(chan::pauli_x());
  const auto c3 = p1_check(d05, cx, qubit_model());
  CHECK(c3.alpha_ok);
  CHECK(c3.alpha_composite <= c3.alpha1 + 1e-4);
}

TEST_CASE("reliability thresholds behave at the extremes") {
  const auto id = chan::identity_chi(2);
  const auto fc = f_classical(id, qubit_model());
  {
    const auto a = alpha(id, qubit_model());
    const auto b = beta(id, qubit_model());
    const auto p2 = p2_thresholds(a, b, id, id, fc.f_classical);
    CHECK(p2.reliable_alpha);
    CHECK(p2.reliable_beta);
  }
  {
    const auto depol = chan::chi_from_kraus(chan::depolarizing_channel(1.0));
    const auto a = alpha(depol, qubit_model());
    const auto b = beta(depol, qubit_model());
    const auto p2 = p2_thresholds(a, b, depol, id, fc.f_classical);
    CHECK_FALSE(p2.reliable_alpha);
    CHECK_FALSE(p2.reliable_beta);
  }
}

TEST_CASE("robustness-derived classical part meets the fidelity bound at the target") {
  const auto id = chan::identity_chi(2);
  const auto c = p3_check(id, id, qubit_model());
  CHECK(c.ok);
  CHECK(c.fidelity == doctest::Approx(c.bound).epsilon(1e-3));

  const auto noisy = chan::chi_from_kraus(chan::depolarizing_channel(0.8));
  const auto c2 = p3_check(noisy, id, qubit_model());
  CHECK(c2.ok);
  CHECK(c2.fidelity < c2.bound - 1e-3);
}

TEST_CASE("transmission criterion reference points") {
  auto c = comm_criterion(chan::identity_chi(2));
  CHECK(c.i_total == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(c.reliable);

  c = comm_criterion(chan::chi_from_kraus(chan::phase_damping_channel(1.0)));
  CHECK(c.i_z == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(c.i_x == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(c.i_total == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_FALSE(c.reliable);
}

TEST_CASE("transmission criterion matches the symmetric-channel closed form") {
  // Oracle: solve 2(1 - H(D)) = 1 by bisection; the depolarizing channel
  // with that error rate must sit exactly at the classical ceiling.
  auto h2 = [](double x) { return -x * std::log2(x) - (1 - x) * std::log2(1 - x); };
  double lo = 1e-6, hi = 0.49;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (2.0 * (1.0 - h2(mid)) > 1.0 ? lo : hi) = mid;
  }
  const double dstar = 0.5 * (lo + hi);
  CHECK(dstar == doctest::Approx(0.110).epsilon(1e-2));
  // chi_D(p) flips each basis with probability p/2, so D = p/2.
  const auto chi = chan::chi_from_kraus(chan::depolarizing_channel(2.0 * dstar));
  const auto c = comm_criterion(chi);
  CHECK(c.i_total == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(c.error_rate == doctest::Approx(dstar).epsilon(1e-9));
}

TEST_CASE("full report carries the documented fields") {
  const auto rep =
      quantify_channel(chi_of(chan::hadamard_gate()), std::nullopt, qubit_model());
  CHECK(rep.alpha == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(rep.s_bits == doctest::Approx(0.0).epsilon(1e-9));
  REQUIRE(rep.f_expt.has_value());  // pure channel doubles as its own target
  CHECK(*rep.f_expt == doctest::Approx(1.0).epsilon(1e-9));
  REQUIRE(rep.f_classical.has_value());
  CHECK(*rep.f_classical == doctest::Approx(0.683).epsilon(1e-3));
  REQUIRE(rep.reliable_alpha.has_value());
  CHECK(*rep.reliable_alpha);
}
