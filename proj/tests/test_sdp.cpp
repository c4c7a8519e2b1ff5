#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include "procq/channels.hpp"
#include "procq/sdp.hpp"
#include "test_helpers.hpp"

using namespace procq;
using testutil::max_abs_diff;
using testutil::random_hermitian;

namespace {

// minimize tr X  s.t.  X >= 0, X >= A.
sdp::SdpProblem clip_program(const ComplexMatrix& a) {
  sdp::SdpProblem p;
  const int d = a.dim();
  p.blocks = {{"x", d}};
  p.objective = sdp::Collection({d});
  p.objective[0] = ComplexMatrix::identity(d);
  auto form = std::make_shared<sdp::BlockForm>(0, d);
  sdp::PsdConstraint psd{"x_psd", ComplexMatrix(d), {{1.0, form}}};
  ComplexMatrix neg_a = a;
  neg_a *= cplx(-1.0, 0.0);
  sdp::PsdConstraint dom{"x_dominates_a", neg_a, {{1.0, form}}};
  p.constraints = {psd, dom};
  return p;
}

// maximize tr(B X)  s.t.  tr X = 1, X >= 0.
sdp::SdpProblem top_eig_program(const ComplexMatrix& b) {
  sdp::SdpProblem p;
  const int d = b.dim();
  p.blocks = {{"x", d}};
  p.sense = sdp::Sense::maximize;
  p.objective = sdp::Collection({d});
  p.objective[0] = b;
  auto form = std::make_shared<sdp::BlockForm>(0, d);
  p.constraints.push_back({"x_psd", ComplexMatrix(d), {{1.0, form}}});
  sdp::EqConstraint eq;
  eq.name = "unit_trace";
  eq.coeffs = sdp::Collection({d});
  eq.coeffs[0] = ComplexMatrix::identity(d);
  eq.rhs = 1.0;
  p.equalities.push_back(std::move(eq));
  return p;
}

}  // namespace

TEST_CASE("clip program reaches the positive-part trace") {
  const auto p = clip_program(ComplexMatrix::from_rows(2, {3, 0, 0, -1}));
  const auto s = sdp::solve(p);
  CHECK(s.status == sdp::SolveStatus::optimal);
  CHECK(s.objective_value == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(max_abs_diff(s.block_values[0], ComplexMatrix::from_rows(2, {3, 0, 0, 0})) < 1e-5);
  const auto rep = sdp::verify(p, s);
  CHECK(rep.eq_residual <= 1e-7);
  CHECK(rep.psd_min_eigenvalue >= -1e-7);
  CHECK(rep.dual_residual <= 1e-6);
  CHECK(rep.gap <= 1e-5);
}

TEST_CASE("top eigenvalue program") {
  const auto p = top_eig_program(chan::pauli_z());
  const auto s = sdp::solve(p);
  CHECK(s.status == sdp::SolveStatus::optimal);
  CHECK(s.objective_value == doctest::Approx(1.0).epsilon(1e-6));
  // X = |0><0|
  CHECK(s.block_values[0](0, 0).real() == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(std::abs(s.block_values[0](1, 1)) < 1e-5);
}

TEST_CASE("verify reports residuals independently of the solver") {
  const auto p = top_eig_program(chan::pauli_z());
  sdp::SdpSolution hand;
  hand.block_values = {ComplexMatrix::from_rows(2, {1, 0, 0, 0})};
  hand.objective_value = 1.0;
  auto rep = sdp::verify(p, hand);
  CHECK(rep.objective == doctest::Approx(1.0));
  CHECK(rep.eq_residual <= 1e-12);
  CHECK(rep.psd_min_eigenvalue >= -1e-12);
  CHECK(rep.dual_residual == -1.0);  // no duals supplied

  // Perturb the block by 1e-3 * I: the equality residual shows up as 2e-3.
  hand.block_values[0](0, 0) += 1e-3;
  hand.block_values[0](1, 1) += 1e-3;
  rep = sdp::verify(p, hand);
  CHECK(rep.eq_residual == doctest::Approx(2e-3).epsilon(1e-6));
}

TEST_CASE("solver is deterministic bit for bit") {
  const auto p = top_eig_program(random_hermitian(3, *[] {
    static std::mt19937 rng(21);
    return &rng;
  }()));
  const auto s1 = sdp::solve(p);
  const auto s2 = sdp::solve(p);
  CHECK(s1.iters == s2.iters);
  CHECK(std::memcmp(&s1.objective_value, &s2.objective_value, sizeof(double)) == 0);
  for (size_t b = 0; b < s1.block_values.size(); ++b)
    CHECK(max_abs_diff(s1.block_values[b], s2.block_values[b]) == 0.0);
}

TEST_CASE("positive objective scaling keeps the argmax") {
  std::mt19937 rng(22);
  const ComplexMatrix b = random_hermitian(3, rng);
  auto p1 = top_eig_program(b);
  auto p2 = top_eig_program(b);
  p2.objective[0] *= cplx(7.5, 0.0);
  sdp::SolverOptions opts;
  opts.tol = 1e-9;
  const auto s1 = sdp::solve(p1, opts);
  const auto s2 = sdp::solve(p2, opts);
  CHECK(s2.objective_value == doctest::Approx(7.5 * s1.objective_value).epsilon(1e-6));
  CHECK(max_abs_diff(s1.block_values[0], s2.block_values[0]) < 1e-6);
}

TEST_CASE("weak duality holds at the optimum") {
  std::mt19937 rng(23);
  const auto p = clip_program(random_hermitian(4, rng));
  const auto s = sdp::solve(p);
  CHECK(s.status == sdp::SolveStatus::optimal);
  // Internal sense is minimize: the independently evaluated objective never
  // drops below the best dual bound.
  const auto rep = sdp::verify(p, s);
  CHECK(rep.objective >= s.best_dual_bound - 1e-6);
}

TEST_CASE("validate rejects malformed problems") {
  sdp::SdpProblem p;
  p.blocks = {{"x", 2}};
  p.objective = sdp::Collection({2});
  ComplexMatrix nonherm(2);
  nonherm(0, 1) = 1.0;
  p.objective[0] = nonherm;
  CHECK_THROWS_AS(sdp::solve(p), NumericsError);
}

TEST_CASE("dump emits every section") {
  const auto p = top_eig_program(chan::pauli_z());
  std::ostringstream os;
  sdp::dump_problem(p, os);
  const std::string text = os.str();
  CHECK(text.find("BLOCKS") != std::string::npos);
  CHECK(text.find("OBJECTIVE") != std::string::npos);
  CHECK(text.find("EQUALITIES") != std::string::npos);
  CHECK(text.find("PSD-CONSTRAINTS") != std::string::npos);
}
