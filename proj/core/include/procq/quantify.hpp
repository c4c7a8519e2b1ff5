#pragma once

#include <optional>
#include <string>

#include "procq/channels.hpp"
#include "procq/classical.hpp"
#include "procq/sdp.hpp"

namespace procq::quant {

struct SolveDiag {
  sdp::SolveStatus status = sdp::SolveStatus::optimal;
  long iters = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
};

// Minimum quantum weight in any convex split chi = a * chi_Q + (1-a) * chi_C
// over the classical model. SDP: minimize 1 - sum tr(sigma) subject to
// chi - chi_C(sigma) >= 0, sigma >= 0, chi_C(sigma) >= 0.
struct AlphaResult {
  double alpha = 0.0;      // clamped to [0, 1]
  double alpha_raw = 0.0;  // solver value before clamping
  double classical_weight = 0.0;
  // Normalized classical part; empty matrix when the classical weight
  // vanishes (alpha = 1).
  chan::ProcessMatrix chi_classical;
  SolveDiag diag;
};
AlphaResult alpha(const chan::ProcessMatrix& chi_expt, const classical::Model& model,
                  const sdp::SolverOptions& opts = {});

// Minimum noise admixture making the process classical:
// minimize tr(chi_C~) - 1 subject to chi_C~ - chi >= 0, tr(chi_C~) >= 1,
// sigma >= 0. (chi_C~ >= 0 follows from dominating a PSD chi.)
struct BetaResult {
  double beta = 0.0;
  double beta_raw = 0.0;
  chan::ProcessMatrix chi_classical;  // chi_C~ / (1 + beta)
  ComplexMatrix chi_classical_raw;    // unnormalized chi_C~
  SolveDiag diag;
};
BetaResult beta(const chan::ProcessMatrix& chi_expt, const classical::Model& model,
                const sdp::SolverOptions& opts = {});

// Best classical overlap with a pure target process:
// maximize tr(chi_C chi_target) subject to tr(chi_C) = 1, sigma >= 0,
// chi_C >= 0. The target must be rank one.
struct FcResult {
  double f_classical = 0.0;
  chan::ProcessMatrix chi_classical;
  SolveDiag diag;
};
FcResult f_classical(const chan::ProcessMatrix& chi_target, const classical::Model& model,
                     const sdp::SolverOptions& opts = {});

struct FidelityCertificate {
  double f_expt = 0.0;
  double f_classical = 0.0;
  bool certified = false;  // f_expt > f_classical
  double avg_state_fidelity_expt = 0.0;
  double avg_state_fidelity_threshold = 0.0;
};
FidelityCertificate certify_fidelity(const chan::ProcessMatrix& chi_expt,
                                     const chan::ProcessMatrix& chi_target,
                                     const classical::Model& model,
                                     const sdp::SolverOptions& opts = {});

struct EntropyCertificate {
  double s_bits = 0.0;
  double s_threshold = 0.0;  // log2(d), i.e. N bits for N qubits
  bool certified = false;    // s_bits < s_threshold
};
EntropyCertificate entropy_certificate(const chan::ProcessMatrix& chi_expt);

// Composition bounds: quantifiers of a composite process never exceed those
// of its sub-processes.
struct CompositionCheck {
  double alpha1 = 0.0, alpha2 = 0.0, alpha_composite = 0.0;
  double beta1 = 0.0, beta2 = 0.0, beta_composite = 0.0;
  bool alpha_ok = false, beta_ok = false;
};
CompositionCheck p1_check(const chan::ProcessMatrix& chi1, const chan::ProcessMatrix& chi2,
                          const classical::Model& model, const sdp::SolverOptions& opts = {},
                          double slack = 1e-4);

// Reliability thresholds computed from the decomposition parts returned by
// the alpha / beta programs.
struct ReliabilityThresholds {
  double f_c_alpha = 0.0, f_q = 0.0;
  double f_c_beta = 0.0, f_prime = 0.0;
  double alpha_threshold = 0.0, beta_threshold = 0.0;
  bool reliable_alpha = false, reliable_beta = false;
  bool inconclusive_alpha = false, inconclusive_beta = false;
};
ReliabilityThresholds p2_thresholds(const AlphaResult& a, const BetaResult& b,
                                    const chan::ProcessMatrix& chi_expt,
                                    const chan::ProcessMatrix& chi_target,
                                    double f_classical_bound);

// The robustness-derived classical part never beats the classical fidelity
// bound; equality is approached exactly at chi_expt = chi_target.
struct RobustnessFidelityCheck {
  double fidelity = 0.0;
  double bound = 0.0;
  double beta_value = 0.0;
  bool ok = false;
};
RobustnessFidelityCheck p3_check(const chan::ProcessMatrix& chi_expt,
                                 const chan::ProcessMatrix& chi_target,
                                 const classical::Model& model,
                                 const sdp::SolverOptions& opts = {}, double slack = 1e-4);

// Reliable qubit transmission: summed mutual information of the induced
// binary channels in the Z and X bases against the classical ceiling of 1
// bit, plus the error-rate form D = 1 - avg state fidelity vs the 0.110
// bound.
struct CommCriterion {
  double i_z = 0.0;
  double i_x = 0.0;
  double i_total = 0.0;
  bool reliable = false;  // i_total > 1
  double error_rate = 0.0;
  double error_rate_bound = 0.110;
  bool within_error_bound = false;
};
CommCriterion comm_criterion(const chan::ProcessMatrix& chi_expt);

// Full report for one channel. Fidelity fields are present only when a
// target is supplied or the channel itself is pure (then it doubles as its
// own target).
struct QuantifierReport {
  double alpha = 0.0;
  double beta = 0.0;
  std::optional<double> f_expt;
  std::optional<double> f_classical;
  double s_bits = 0.0;
  double s_threshold = 0.0;
  std::optional<double> avg_state_fidelity_threshold;
  std::optional<bool> reliable_alpha;
  std::optional<bool> reliable_beta;
  SolveDiag alpha_diag, beta_diag, fc_diag;
};

QuantifierReport quantify_channel(const chan::ProcessMatrix& chi_expt,
                                  const std::optional<chan::ProcessMatrix>& chi_target,
                                  const classical::Model& model,
                                  const sdp::SolverOptions& opts = {});

}  // namespace procq::quant
