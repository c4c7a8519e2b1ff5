#pragma once

#include <optional>
#include <string>
#include <vector>

#include "procq/channels.hpp"
#include "procq/classical.hpp"

namespace procq::witness {

// Witness kernel for genuinely multipartite nonclassicality against the
// single-qubit classical model: the best fidelity any classical process
// acting on one qubit of the pure target can retain. States with fidelity
// above the kernel are detected by W = w * 1 - |target><target|.
struct WitnessResult {
  std::string target_label;
  int n_qubits = 0;
  double w_chiC = 0.0;
  std::vector<double> per_partition;  // one value per choice of the acted-on qubit
  std::vector<cplx> target_state;
  double biseparable_bound = 0.0;
  std::optional<double> steering_bound;
};

// n_A = 1: maximize <psi| (Lambda_C (x) I)(|psi><psi|) |psi> over classical
// single-qubit processes on each qubit position, taking the maximum.
WitnessResult w_chiC(const std::vector<cplx>& target_state, int n_qubits,
                     const classical::Model& qubit_model,
                     const sdp::SolverOptions& opts = {});

// tr(W rho) = w - <target| rho |target>; negative means detected.
double evaluate_witness(const WitnessResult& w, const chan::DensityMatrix& rho);

enum class Target { ghz3, w3 };

std::vector<cplx> ghz_state(int n_qubits);
std::vector<cplx> w_state(int n_qubits);

// Kernel value alongside the entanglement / steering context thresholds.
WitnessResult hierarchy_report(Target target, const classical::Model& qubit_model,
                               const sdp::SolverOptions& opts = {});

}  // namespace procq::witness
