#include "procq/quantify.hpp"

#include <cmath>

namespace procq::quant {

namespace {

SolveDiag diag_of(const sdp::SdpSolution& s) {
  return SolveDiag{s.status, s.iters, s.primal_residual, s.dual_residual, s.gap};
}

void require_converged(const sdp::SdpSolution& s, const std::string& what) {
  if (s.status != sdp::SolveStatus::optimal)
    throw SolverError(what + ": solver returned " + std::string(sdp::to_string(s.status)) +
                      " (primal " + std::to_string(s.primal_residual) + ", dual " +
                      std::to_string(s.dual_residual) + ", iters " + std::to_string(s.iters) +
                      ")");
}

void require_psd_chi(const chan::ProcessMatrix& chi, const std::string& what) {
  auto eig = hermitian_eig(chi.chi);
  if (!eig.eigenvalues.empty() && eig.eigenvalues.front() < -1e-7)
    throw DomainError(what + ": chi has negative eigenvalue " +
                      std::to_string(eig.eigenvalues.front()) +
                      "; only physical (PSD) process matrices can be quantified");
}

void require_model_dim(const chan::ProcessMatrix& chi, const classical::Model& model,
                       const std::string& what) {
  if (chi.d != model.dim())
    throw DimensionError(what + ": chi dimension " + std::to_string(chi.d) +
                         " does not match classical model dimension " +
                         std::to_string(model.dim()));
}

sdp::Collection sigma_from(const sdp::SdpSolution& s, long n_assign) {
  std::vector<int> dims;
  dims.reserve(n_assign);
  for (long mu = 0; mu < n_assign; ++mu) dims.push_back(s.block_values[mu].dim());
  sdp::Collection c(dims);
  for (long mu = 0; mu < n_assign; ++mu) c[static_cast<size_t>(mu)] = s.block_values[mu];
  return c;
}

double rank_one_weight(const chan::ProcessMatrix& chi) {
  auto eig = hermitian_eig(chi.chi);
  return eig.eigenvalues.empty() ? 0.0 : eig.eigenvalues.back();
}

}  // namespace

AlphaResult alpha(const chan::ProcessMatrix& chi_expt, const classical::Model& model,
                  const sdp::SolverOptions& opts) {
  require_model_dim(chi_expt, model, "alpha");
  require_psd_chi(chi_expt, "alpha");
  sdp::SdpProblem p = model.base_problem(/*normalized=*/false, /*chi_psd=*/true);
  sdp::PsdConstraint quantum_part;
  quantum_part.name = "quantum_part_psd";
  quantum_part.offset = chi_expt.chi;
  quantum_part.terms.push_back({-1.0, model.chi_form()});
  p.constraints.push_back(std::move(quantum_part));

  for (size_t b = 0; b < p.objective.size(); ++b) {
    p.objective[b] = ComplexMatrix::identity(model.dim());
    p.objective[b] *= cplx(-1.0, 0.0);
  }
  p.objective_offset = 1.0;
  p.sense = sdp::Sense::minimize;

  sdp::SdpSolution s = sdp::solve(p, opts);
  require_converged(s, "alpha");

  AlphaResult r;
  r.alpha_raw = s.objective_value;
  r.alpha = std::min(1.0, std::max(0.0, s.objective_value));
  r.classical_weight = 1.0 - r.alpha_raw;
  r.diag = diag_of(s);
  if (r.classical_weight > 1e-9) {
    sdp::Collection sigma = sigma_from(s, model.assignment_count());
    r.chi_classical = model.chi_from_sigma(sigma);
  }
  return r;
}

BetaResult beta(const chan::ProcessMatrix& chi_expt, const classical::Model& model,
                const sdp::SolverOptions& opts) {
  require_model_dim(chi_expt, model, "beta");
  require_psd_chi(chi_expt, "beta");
  // chi_C~ >= chi_expt >= 0 already forces chi_C~ PSD, so the explicit
  // chi_C >= 0 constraint is dropped here.
  sdp::SdpProblem p = model.base_problem(/*normalized=*/false, /*chi_psd=*/false);
  sdp::PsdConstraint dominance;
  dominance.name = "noise_dominance_psd";
  dominance.offset = chi_expt.chi;
  dominance.offset *= cplx(-1.0, 0.0);
  dominance.terms.push_back({1.0, model.chi_form()});
  p.constraints.push_back(std::move(dominance));

  // tr(chi_C~) >= 1 as a 1x1 cone.
  sdp::Collection tr_coeffs(p.block_dims());
  for (size_t b = 0; b < tr_coeffs.size(); ++b)
    tr_coeffs[b] = ComplexMatrix::identity(model.dim());
  sdp::PsdConstraint trace_floor;
  trace_floor.name = "trace_floor";
  trace_floor.offset = ComplexMatrix(1);
  trace_floor.offset(0, 0) = -1.0;
  trace_floor.terms.push_back({1.0, std::make_shared<sdp::FunctionalForm>(tr_coeffs)});
  p.constraints.push_back(std::move(trace_floor));

  for (size_t b = 0; b < p.objective.size(); ++b)
    p.objective[b] = ComplexMatrix::identity(model.dim());
  p.objective_offset = -1.0;
  p.sense = sdp::Sense::minimize;

  sdp::SdpSolution s = sdp::solve(p, opts);
  require_converged(s, "beta");

  BetaResult r;
  r.beta_raw = s.objective_value;
  r.beta = std::max(0.0, s.objective_value);
  r.diag = diag_of(s);
  sdp::Collection sigma = sigma_from(s, model.assignment_count());
  r.chi_classical_raw = model.assemble_chi(sigma);
  r.chi_classical = model.chi_from_sigma(sigma);
  return r;
}

FcResult f_classical(const chan::ProcessMatrix& chi_target, const classical::Model& model,
                     const sdp::SolverOptions& opts) {
  require_model_dim(chi_target, model, "f_classical");
  if (rank_one_weight(chi_target) < 1.0 - 1e-6)
    throw DomainError("f_classical: target process must be pure (rank-1 chi)");
  sdp::SdpProblem p = model.base_problem(/*normalized=*/true, /*chi_psd=*/true);
  p.objective = model.assemble_adjoint(chi_target.chi);
  p.sense = sdp::Sense::maximize;

  sdp::SdpSolution s = sdp::solve(p, opts);
  require_converged(s, "f_classical");

  FcResult r;
  r.f_classical = s.objective_value;
  r.diag = diag_of(s);
  sdp::Collection sigma = sigma_from(s, model.assignment_count());
  r.chi_classical = model.chi_from_sigma(sigma);
  return r;
}

FidelityCertificate certify_fidelity(const chan::ProcessMatrix& chi_expt,
                                     const chan::ProcessMatrix& chi_target,
                                     const classical::Model& model,
                                     const sdp::SolverOptions& opts) {
  FidelityCertificate c;
  c.f_expt = chan::process_fidelity(chi_expt, chi_target);
  c.f_classical = f_classical(chi_target, model, opts).f_classical;
  c.certified = c.f_expt > c.f_classical;
  c.avg_state_fidelity_expt = chan::avg_state_fidelity(c.f_expt, chi_expt.d);
  c.avg_state_fidelity_threshold = chan::avg_state_fidelity(c.f_classical, chi_expt.d);
  return c;
}

EntropyCertificate entropy_certificate(const chan::ProcessMatrix& chi_expt) {
  EntropyCertificate e;
  e.s_bits = von_neumann_entropy(chi_expt.chi);
  e.s_threshold = std::log2(static_cast<double>(chi_expt.d));
  e.certified = e.s_bits < e.s_threshold;
  return e;
}

CompositionCheck p1_check(const chan::ProcessMatrix& chi1, const chan::ProcessMatrix& chi2,
                          const classical::Model& model, const sdp::SolverOptions& opts,
                          double slack) {
  const chan::ProcessMatrix comp = chan::compose(chi2, chi1);
  CompositionCheck c;
  c.alpha1 = alpha(chi1, model, opts).alpha;
  c.alpha2 = alpha(chi2, model, opts).alpha;
  c.alpha_composite = alpha(comp, model, opts).alpha;
  c.beta1 = beta(chi1, model, opts).beta;
  c.beta2 = beta(chi2, model, opts).beta;
  c.beta_composite = beta(comp, model, opts).beta;
  c.alpha_ok = c.alpha_composite <= std::min(c.alpha1, c.alpha2) + slack;
  c.beta_ok = c.beta_composite <= std::min(c.beta1, c.beta2) + slack;
  return c;
}

ReliabilityThresholds p2_thresholds(const AlphaResult& a, const BetaResult& b,
                                    const chan::ProcessMatrix& chi_expt,
                                    const chan::ProcessMatrix& chi_target,
                                    double f_classical_bound) {
  ReliabilityThresholds r;
  const double f_expt = chan::process_fidelity(chi_expt, chi_target);

  // Alpha test: alpha > (F_C - F_c) / (F_q - F_c) with F_c, F_q evaluated on
  // the decomposition returned by the alpha program. A vanishing classical
  // part pins F_c = 0 (any admissible value keeps the test conclusion).
  r.f_c_alpha = a.classical_weight > 1e-9 && a.chi_classical.d == chi_target.d
                    ? chan::process_fidelity(a.chi_classical, chi_target)
                    : 0.0;
  if (a.alpha > 1e-9) {
    r.f_q = (f_expt - (1.0 - a.alpha) * r.f_c_alpha) / a.alpha;
    const double denom = r.f_q - r.f_c_alpha;
    if (std::abs(denom) < 1e-9) {
      r.inconclusive_alpha = true;
    } else {
      r.alpha_threshold = (f_classical_bound - r.f_c_alpha) / denom;
      r.reliable_alpha = a.alpha > r.alpha_threshold;
    }
  } else {
    // Fully classical process: never reliable, threshold degenerate.
    r.f_q = 0.0;
    r.alpha_threshold = 1.0;
    r.reliable_alpha = false;
  }

  // Beta test: beta > (F_C - F_c) / (F_c - F') with F' the fidelity of the
  // admixed noise process.
  if (b.beta > 1e-9) {
    r.f_c_beta = chan::process_fidelity(b.chi_classical, chi_target);
    ComplexMatrix noise = b.chi_classical_raw;
    noise -= chi_expt.chi;
    noise *= cplx(1.0 / b.beta, 0.0);
    chan::ProcessMatrix chi_noise{chi_expt.d, noise, false};
    r.f_prime = chan::process_fidelity(chi_noise, chi_target);
    const double denom = r.f_c_beta - r.f_prime;
    if (std::abs(denom) < 1e-9) {
      r.inconclusive_beta = true;
    } else {
      r.beta_threshold = (f_classical_bound - r.f_c_beta) / denom;
      r.reliable_beta = b.beta > r.beta_threshold;
    }
  } else {
    r.f_c_beta = chan::process_fidelity(b.chi_classical, chi_target);
    r.beta_threshold = 0.0;
    r.reliable_beta = false;
  }
  return r;
}

RobustnessFidelityCheck p3_check(const chan::ProcessMatrix& chi_expt,
                                 const chan::ProcessMatrix& chi_target,
                                 const classical::Model& model,
                                 const sdp::SolverOptions& opts, double slack) {
  BetaResult b = beta(chi_expt, model, opts);
  FcResult fc = f_classical(chi_target, model, opts);
  RobustnessFidelityCheck c;
  c.fidelity = chan::process_fidelity(b.chi_classical, chi_target);
  c.bound = fc.f_classical;
  c.beta_value = b.beta;
  c.ok = c.fidelity <= c.bound + slack;
  return c;
}

namespace {

double entropy_of_dist(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log2(v);
  return h;
}

// Mutual information of the binary channel induced by measuring the outputs
// of chi in `basis` (columns), with uniformly weighted basis-state inputs.
double basis_mutual_information(const chan::ProcessMatrix& chi, const ComplexMatrix& basis) {
  std::vector<std::vector<double>> cond(2, std::vector<double>(2, 0.0));
  for (int in = 0; in < 2; ++in) {
    ComplexMatrix rho(2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) rho(i, j) = basis(i, in) * std::conj(basis(j, in));
    const ComplexMatrix out = chan::apply_raw(chi, rho);
    double tot = 0.0;
    for (int m = 0; m < 2; ++m) {
      cplx v = 0.0;
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) v += std::conj(basis(i, m)) * out(i, j) * basis(j, m);
      cond[in][m] = std::max(0.0, v.real());
      tot += cond[in][m];
    }
    if (tot <= 0.0) throw DomainError("comm_criterion: vanished channel output");
    for (int m = 0; m < 2; ++m) cond[in][m] /= tot;
  }
  std::vector<double> marginal = {0.5 * (cond[0][0] + cond[1][0]),
                                  0.5 * (cond[0][1] + cond[1][1])};
  return entropy_of_dist(marginal) -
         0.5 * (entropy_of_dist(cond[0]) + entropy_of_dist(cond[1]));
}

}  // namespace

CommCriterion comm_criterion(const chan::ProcessMatrix& chi_expt) {
  if (chi_expt.d != 2) throw DimensionError("comm_criterion: requires a qubit process");
  CommCriterion c;
  c.i_z = basis_mutual_information(chi_expt, ComplexMatrix::identity(2));
  const double s = 1.0 / std::sqrt(2.0);
  c.i_x = basis_mutual_information(chi_expt, ComplexMatrix::from_rows(2, {s, s, s, -s}));
  c.i_total = c.i_z + c.i_x;
  c.reliable = c.i_total > 1.0;
  const double f_expt = chan::process_fidelity(chi_expt, chan::identity_chi(2));
  c.error_rate = 1.0 - chan::avg_state_fidelity(f_expt, 2);
  c.within_error_bound = c.error_rate <= c.error_rate_bound;
  return c;
}

QuantifierReport quantify_channel(const chan::ProcessMatrix& chi_expt,
                                  const std::optional<chan::ProcessMatrix>& chi_target,
                                  const classical::Model& model,
                                  const sdp::SolverOptions& opts) {
  QuantifierReport rep;
  AlphaResult a = alpha(chi_expt, model, opts);
  BetaResult b = beta(chi_expt, model, opts);
  rep.alpha = a.alpha;
  rep.beta = b.beta;
  rep.alpha_diag = a.diag;
  rep.beta_diag = b.diag;

  EntropyCertificate e = entropy_certificate(chi_expt);
  rep.s_bits = e.s_bits;
  rep.s_threshold = e.s_threshold;

  std::optional<chan::ProcessMatrix> target = chi_target;
  if (!target && rank_one_weight(chi_expt) >= 1.0 - 1e-6) target = chi_expt;
  if (target) {
    FcResult fc = f_classical(*target, model, opts);
    rep.f_expt = chan::process_fidelity(chi_expt, *target);
    rep.f_classical = fc.f_classical;
    rep.fc_diag = fc.diag;
    rep.avg_state_fidelity_threshold = chan::avg_state_fidelity(fc.f_classical, chi_expt.d);
    ReliabilityThresholds p2 = p2_thresholds(a, b, chi_expt, *target, fc.f_classical);
    if (!p2.inconclusive_alpha) rep.reliable_alpha = p2.reliable_alpha;
    if (!p2.inconclusive_beta) rep.reliable_beta = p2.reliable_beta;
  }
  return rep;
}

}  // namespace procq::quant
