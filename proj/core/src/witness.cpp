#include "procq/witness.hpp"

#include <cmath>

#include "procq/quantify.hpp"

namespace procq::witness {

namespace {

// Reduced state of qubit `pos` (0 = most significant) of a pure N-qubit
// state.
ComplexMatrix reduced_qubit(const std::vector<cplx>& psi, int n_qubits, int pos) {
  const int shift = n_qubits - 1 - pos;
  ComplexMatrix rho(2);
  const int dim = 1 << n_qubits;
  for (int x = 0; x < dim; ++x)
    for (int i = 0; i < 2; ++i) {
      const int xr = (x & ~(1 << shift)) | (i << shift);
      rho(i, (x >> shift) & 1) += psi[xr] * std::conj(psi[x]);
    }
  return rho;
}

// The witness objective depends on the target only through the reduced
// state r of the acted-on qubit:
//   <psi| (Lambda (x) I)(|psi><psi|) |psi> = sum_ij (r M_ij r)(i, j),
// with M_ij = E_C(|i><j|) the classical responses to the qubit matrix units.
double objective_value(const classical::Model& model, const sdp::Collection& sigma,
                       const ComplexMatrix& rho_a) {
  const ComplexMatrix chi = model.assemble_chi(sigma);
  double val = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      // M_ij = d * block(i, j) of the raw assembled chi.
      ComplexMatrix m(2);
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) m(r, c) = 2.0 * chi(i * 2 + r, j * 2 + c);
      const ComplexMatrix rmr = rho_a * m * rho_a;
      val += rmr(i, j).real();  // the ij-sum is real for Hermitian sigma
    }
  return val;
}

double partition_maximum(const classical::Model& model, const ComplexMatrix& rho_a,
                         const sdp::SolverOptions& opts) {
  const long n_assign = model.assignment_count();
  // Sample the linear functional over an orthonormal Hermitian basis to get
  // per-assignment coefficient matrices.
  const double s2 = 1.0 / std::sqrt(2.0);
  const ComplexMatrix hbasis[4] = {
      ComplexMatrix::from_rows(2, {1, 0, 0, 0}), ComplexMatrix::from_rows(2, {0, 0, 0, 1}),
      ComplexMatrix::from_rows(2, {0, s2, s2, 0}),
      ComplexMatrix::from_rows(2, {0, cplx(0, -s2), cplx(0, s2), 0})};

  sdp::SdpProblem p = model.base_problem(/*normalized=*/false, /*chi_psd=*/true);

  // The classical process extends to the other qubits as (Lambda (x) id), so
  // it must be a channel: tr E(|i><j|) = delta_ij. In block terms
  // tr block(i, j) = delta_ij / d, i.e. <|i><j| (x) I, chi_C> pinned.
  {
    const int d = model.dim();
    int row = 0;
    auto add_row = [&](const ComplexMatrix& extractor, double rhs) {
      sdp::EqConstraint eq;
      eq.name = "trace_preserving_" + std::to_string(row++);
      eq.coeffs = model.assemble_adjoint(extractor);
      eq.rhs = rhs;
      p.equalities.push_back(std::move(eq));
    };
    const ComplexMatrix idd = ComplexMatrix::identity(d);
    for (int i = 0; i < d; ++i) {
      ComplexMatrix unit(d);
      unit(i, i) = 1.0;
      add_row(kron(unit, idd), 1.0 / d);
      for (int j = i + 1; j < d; ++j) {
        ComplexMatrix re(d), im(d);
        re(i, j) = re(j, i) = 1.0;
        im(i, j) = cplx(0.0, 1.0);
        im(j, i) = cplx(0.0, -1.0);
        add_row(kron(re, idd), 0.0);
        add_row(kron(im, idd), 0.0);
      }
    }
  }
  sdp::Collection probe(p.block_dims());
  for (long mu = 0; mu < n_assign; ++mu) {
    for (const auto& h : hbasis) {
      probe.set_zero();
      probe[static_cast<size_t>(mu)] = h;
      const double c = objective_value(model, probe, rho_a);
      p.objective[static_cast<size_t>(mu)].add_scaled(h, cplx(c, 0.0));
    }
  }
  p.sense = sdp::Sense::maximize;
  sdp::SdpSolution s = sdp::solve(p, opts);
  if (s.status != sdp::SolveStatus::optimal)
    throw SolverError("w_chiC: solver returned " + std::string(sdp::to_string(s.status)));
  return s.objective_value;
}

}  // namespace

WitnessResult w_chiC(const std::vector<cplx>& target_state, int n_qubits,
                     const classical::Model& qubit_model, const sdp::SolverOptions& opts) {
  if (n_qubits < 2 || n_qubits > 3)
    throw DomainError("w_chiC: two or three qubits supported");
  if (static_cast<int>(target_state.size()) != (1 << n_qubits))
    throw DimensionError("w_chiC: target state dimension mismatch");
  if (qubit_model.dim() != 2) throw DomainError("w_chiC: needs the single-qubit model");
  double nn = 0.0;
  for (const auto& v : target_state) nn += std::norm(v);
  if (std::abs(nn - 1.0) > 1e-9) throw DomainError("w_chiC: target state not normalized");

  WitnessResult out;
  out.n_qubits = n_qubits;
  out.target_state = target_state;
  out.w_chiC = 0.0;
  for (int pos = 0; pos < n_qubits; ++pos) {
    const ComplexMatrix rho_a = reduced_qubit(target_state, n_qubits, pos);
    const double v = partition_maximum(qubit_model, rho_a, opts);
    out.per_partition.push_back(v);
    out.w_chiC = std::max(out.w_chiC, v);
  }
  return out;
}

double evaluate_witness(const WitnessResult& w, const chan::DensityMatrix& rho) {
  const int dim = 1 << w.n_qubits;
  if (rho.dim() != dim) throw DimensionError("evaluate_witness: state dimension mismatch");
  cplx overlap = 0.0;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      overlap += std::conj(w.target_state[i]) * rho.rho(i, j) * w.target_state[j];
  return w.w_chiC - overlap.real();
}

std::vector<cplx> ghz_state(int n_qubits) {
  const int dim = 1 << n_qubits;
  std::vector<cplx> psi(dim, cplx(0.0));
  psi.front() = 1.0 / std::sqrt(2.0);
  psi.back() = 1.0 / std::sqrt(2.0);
  return psi;
}

std::vector<cplx> w_state(int n_qubits) {
  const int dim = 1 << n_qubits;
  std::vector<cplx> psi(dim, cplx(0.0));
  const double a = 1.0 / std::sqrt(static_cast<double>(n_qubits));
  for (int q = 0; q < n_qubits; ++q) psi[1 << q] = a;
  return psi;
}

WitnessResult hierarchy_report(Target target, const classical::Model& qubit_model,
                               const sdp::SolverOptions& opts) {
  WitnessResult r;
  if (target == Target::ghz3) {
    r = w_chiC(ghz_state(3), 3, qubit_model, opts);
    r.target_label = "GHZ3";
    r.biseparable_bound = 0.5;
    r.steering_bound = (1.0 + std::sqrt(3.0)) / 4.0;
  } else {
    r = w_chiC(w_state(3), 3, qubit_model, opts);
    r.target_label = "W3";
    r.biseparable_bound = 2.0 / 3.0;
    r.steering_bound = (1.0 + std::sqrt(2.0)) / 3.0;
  }
  return r;
}

}  // namespace procq::witness
