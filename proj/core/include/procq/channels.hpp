#pragma once

#include <functional>
#include <string>
#include <vector>

#include "procq/linalg.hpp"

namespace procq::chan {

// Hermitian PSD operator with trace in (0, 1]; sub-normalized states appear
// as outputs of post-selected channels. Invariants are checked on demand via
// validate(), not on every construction.
struct DensityMatrix {
  ComplexMatrix rho;
  int dim() const { return rho.dim(); }
  void validate(double tol = kStructTol) const;
};

DensityMatrix pure_state(const std::vector<cplx>& ket);
std::vector<cplx> basis_ket(int dim, int i);

enum class ChannelKind { trace_preserving, post_selected };

// A map rho -> sum_m K_m rho K_m^dagger. Trace-preserving channels satisfy
// sum K^dag K = I; post-selected ones sum K^dag K <= I.
struct KrausChannel {
  int d = 0;
  std::vector<ComplexMatrix> operators;
  ChannelKind kind = ChannelKind::trace_preserving;
  void validate(double tol = kStructTol) const;
  ComplexMatrix apply(const ComplexMatrix& rho) const;
};

// Normalized process matrix: trace-1 Hermitian d^2 x d^2 matrix addressed as
// d x d blocks of d x d, block(i,j) = E(|i><j|) / N with N fixing unit trace
// (N = d for trace-preserving maps).
struct ProcessMatrix {
  int d = 0;
  ComplexMatrix chi;
  bool trace_preserving = true;

  // View of block (i, j).
  ComplexMatrix block(int i, int j) const;
  void validate(double tol = kStructTol) const;
};

ProcessMatrix chi_from_kraus(const KrausChannel& k);

// Applies the represented map: sum_ij rho_ij * d * block(i, j). For a
// trace-preserving process this reproduces E(rho) exactly; post-selected
// processes give the acceptance-normalized output.
DensityMatrix apply(const ProcessMatrix& chi, const DensityMatrix& rho);
ComplexMatrix apply_raw(const ProcessMatrix& chi, const ComplexMatrix& rho);

// Process tomography against the probe set {|i>, (|i>+|j>)/sqrt2,
// (|i>+i|j>)/sqrt2}. The map must be linear; trace-decreasing maps are fine.
// `raw_trace` (when non-null) receives tr of the unnormalized chi, the
// average output trace over the basis probes.
using MapFn = std::function<ComplexMatrix(const ComplexMatrix&)>;
ProcessMatrix chi_from_map(const MapFn& eval, int d, double* raw_trace = nullptr);

// Superoperator (transfer matrix) in the matrix-unit basis; composition of
// maps is a plain matrix product there.
ComplexMatrix superoperator(const ProcessMatrix& chi);
ProcessMatrix chi_from_superoperator(const ComplexMatrix& s, int d, bool trace_preserving);

// Process matrix of E2 after E1.
ProcessMatrix compose(const ProcessMatrix& chi2, const ProcessMatrix& chi1);

// Inverse map; the result need not be a physical channel. Throws DomainError
// when the superoperator condition estimate exceeds 1e8.
ProcessMatrix invert(const ProcessMatrix& chi);

// tr(chi_a chi_b); with a rank-1 (pure) second argument this is the process
// fidelity of the paper's threshold criteria.
double process_fidelity(const ProcessMatrix& a, const ProcessMatrix& b);
// (d F + 1) / (d + 1)
double avg_state_fidelity(double process_fid, int d);

// ---------------------------------------------------------------------------
// Named channel zoo
// ---------------------------------------------------------------------------

ComplexMatrix pauli_i();
ComplexMatrix pauli_x();
ComplexMatrix pauli_y();
ComplexMatrix pauli_z();
ComplexMatrix hadamard_gate();
ComplexMatrix t_gate();
ComplexMatrix cnot_gate();  // control = qubit 0 (most significant index)

KrausChannel unitary_channel(const ComplexMatrix& u);
// Depolarizing: (1 - 3p/4) rho + p/4 (X rho X + Y rho Y + Z rho Z).
KrausChannel depolarizing_channel(double p);
// Phase damping: (1 - p/2) rho + p/2 Z rho Z.
KrausChannel phase_damping_channel(double p);
// Amplitude damping with K0 = diag(1, sqrt(1-p)), K1 = sqrt(p)|0><1|.
KrausChannel amplitude_damping_channel(double p);
// Projective measurement onto an orthonormal basis (columns of `basis`).
KrausChannel projective_measurement(const ComplexMatrix& basis);
// Two-photon fusion at a polarizing beam splitter, post-selected on a
// coincidence: M = |HH><HH| + |VV><VV|.
KrausChannel fusion_pf();
// N-photon GHZ analyzer: (x)|0..0><0..0| + (x)|1..1><1..1|, N in {2, 3}.
KrausChannel ghz_analyzer(int n);
// Single-qubit teleportation over cos(theta)|00> + sin(theta)|11> with the
// standard Bell measurement and Pauli corrections, averaged over outcomes.
KrausChannel teleportation_channel(double theta);

ProcessMatrix identity_chi(int d);

// Channel spec files ({"kind": ..., ...}, complex entries as [re, im]).
// Unknown or inapplicable fields raise ParseError naming the field.
KrausChannel parse_channel_spec(const std::string& json_text);

}  // namespace procq::chan
