#include "procq/channels.hpp"

#include <cmath>

#include "json.hpp"

namespace procq::chan {

using json = nlohmann::json;

void DensityMatrix::validate(double tol) const {
  if (!rho.is_hermitian(tol)) throw NumericsError("density matrix is not Hermitian");
  if (!rho.is_psd(tol)) throw NumericsError("density matrix is not PSD");
  const double tr = rho.trace().real();
  if (tr <= 0.0 || tr > 1.0 + tol)
    throw NumericsError("density matrix trace outside (0, 1]");
}

DensityMatrix pure_state(const std::vector<cplx>& ket) {
  const int d = static_cast<int>(ket.size());
  double nn = 0.0;
  for (const auto& v : ket) nn += std::norm(v);
  if (nn <= 0.0) throw DomainError("pure_state: zero vector");
  DensityMatrix out{ComplexMatrix(d)};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out.rho(i, j) = ket[i] * std::conj(ket[j]) / nn;
  return out;
}

std::vector<cplx> basis_ket(int dim, int i) {
  std::vector<cplx> k(dim, cplx(0.0));
  k[i] = 1.0;
  return k;
}

void KrausChannel::validate(double tol) const {
  if (operators.empty()) throw DomainError("kraus channel: no operators");
  ComplexMatrix s(d);
  ComplexMatrix tmp(d);
  for (const auto& k : operators) {
    if (k.dim() != d) throw DimensionError("kraus channel: operator dim mismatch");
    matmul_adjoint_left(k, k, tmp);
    s += tmp;
  }
  ComplexMatrix defect = s - ComplexMatrix::identity(d);
  if (kind == ChannelKind::trace_preserving) {
    if (defect.frobenius_norm() > tol * d)
      throw NumericsError("kraus channel: sum K^dag K != I for a trace-preserving map");
  } else {
    auto eig = hermitian_eig(defect);
    if (!eig.eigenvalues.empty() && eig.eigenvalues.back() > tol)
      throw NumericsError("kraus channel: sum K^dag K exceeds I for a post-selected map");
  }
}

ComplexMatrix KrausChannel::apply(const ComplexMatrix& rho) const {
  ComplexMatrix out(d), t1(d), t2(d);
  for (const auto& k : operators) {
    matmul(k, rho, t1);
    matmul(t1, k.adjoint(), t2);
    out += t2;
  }
  return out;
}

ComplexMatrix ProcessMatrix::block(int i, int j) const {
  ComplexMatrix b(d);
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) b(r, c) = chi(i * d + r, j * d + c);
  return b;
}

void ProcessMatrix::validate(double tol) const {
  if (chi.dim() != d * d) throw DimensionError("process matrix: chi dim != d^2");
  if (!chi.is_hermitian(tol)) throw NumericsError("process matrix: chi is not Hermitian");
  if (std::abs(chi.trace() - cplx(1.0)) > tol)
    throw NumericsError("process matrix: trace != 1");
}

namespace {

void set_block(ComplexMatrix& chi, int d, int i, int j, const ComplexMatrix& b) {
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < d; ++c) chi(i * d + r, j * d + c) = b(r, c);
}

}  // namespace

ProcessMatrix chi_from_kraus(const KrausChannel& k) {
  k.validate();
  const int d = k.d;
  ProcessMatrix out;
  out.d = d;
  out.chi = ComplexMatrix(d * d);
  // block(i,j) = E(|i><j|): with Kraus operators this is sum_m K col_i(K)^dag-
  // style outer products, assembled column by column.
  for (const auto& km : k.operators) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int r = 0; r < d; ++r)
          for (int c = 0; c < d; ++c)
            out.chi(i * d + r, j * d + c) += km(r, i) * std::conj(km(c, j));
  }
  const double raw_trace = out.chi.trace().real();
  if (raw_trace <= 1e-12) throw DomainError("chi_from_kraus: zero map");
  out.chi *= cplx(1.0 / raw_trace, 0.0);
  out.chi.hermitize();
  out.trace_preserving = (k.kind == ChannelKind::trace_preserving) &&
                         std::abs(raw_trace - d) <= 1e-7 * d;
  return out;
}

ComplexMatrix apply_raw(const ProcessMatrix& chi, const ComplexMatrix& rho) {
  if (rho.dim() != chi.d) throw DimensionError("apply: dimension mismatch");
  const int d = chi.d;
  ComplexMatrix out(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const cplx w = rho(i, j) * static_cast<double>(d);
      if (w == cplx(0.0)) continue;
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) out(r, c) += w * chi.chi(i * d + r, j * d + c);
    }
  out.hermitize();
  return out;
}

DensityMatrix apply(const ProcessMatrix& chi, const DensityMatrix& rho) {
  return DensityMatrix{apply_raw(chi, rho.rho)};
}

ProcessMatrix chi_from_map(const MapFn& eval, int d, double* raw_trace) {
  // Responses on the basis projectors first.
  std::vector<ComplexMatrix> diag(d);
  for (int i = 0; i < d; ++i) {
    ComplexMatrix p(d);
    p(i, i) = 1.0;
    diag[i] = eval(p);
  }
  ComplexMatrix chi(d * d);
  for (int i = 0; i < d; ++i) set_block(chi, d, i, i, diag[i]);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      // (|i>+|j>)/sqrt2 and (|i>+i|j>)/sqrt2 probes recover E(|i><j|).
      ComplexMatrix plus(d), phase(d);
      plus(i, i) = plus(j, j) = plus(i, j) = plus(j, i) = 0.5;
      phase(i, i) = phase(j, j) = 0.5;
      phase(j, i) = cplx(0.0, 0.5);
      phase(i, j) = cplx(0.0, -0.5);
      const ComplexMatrix ea = eval(plus);
      const ComplexMatrix eb = eval(phase);
      ComplexMatrix off(d);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
          const cplx base = 0.5 * (diag[i](r, c) + diag[j](r, c));
          off(r, c) = (ea(r, c) - base) + cplx(0.0, 1.0) * (eb(r, c) - base);
        }
      set_block(chi, d, i, j, off);
      ComplexMatrix offd = off.adjoint();
      set_block(chi, d, j, i, offd);
    }
  ProcessMatrix out;
  out.d = d;
  chi *= cplx(1.0 / d, 0.0);
  const double tr = chi.trace().real();
  if (raw_trace) *raw_trace = tr;
  if (tr <= 1e-12) throw DomainError("chi_from_map: vanished map trace");
  chi *= cplx(1.0 / tr, 0.0);
  chi.hermitize();
  out.chi = std::move(chi);
  out.trace_preserving = std::abs(tr - 1.0) <= 1e-7;
  return out;
}

ComplexMatrix superoperator(const ProcessMatrix& chi) {
  const int d = chi.d;
  ComplexMatrix s(d * d);
  // Column (i,j) of the transfer matrix is vec of E(|i><j|) = d * block(i,j).
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c)
          s(r * d + c, i * d + j) = static_cast<double>(d) * chi.chi(i * d + r, j * d + c);
  return s;
}

ProcessMatrix chi_from_superoperator(const ComplexMatrix& s, int d, bool trace_preserving) {
  ProcessMatrix out;
  out.d = d;
  out.chi = ComplexMatrix(d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) out.chi(i * d + r, j * d + c) = s(r * d + c, i * d + j);
  const double tr = out.chi.trace().real();
  if (std::abs(tr) <= 1e-12) throw DomainError("chi_from_superoperator: traceless map");
  out.chi *= cplx(1.0 / tr, 0.0);
  out.chi.hermitize();
  out.trace_preserving = trace_preserving;
  return out;
}

ProcessMatrix compose(const ProcessMatrix& chi2, const ProcessMatrix& chi1) {
  if (chi2.d != chi1.d) throw DimensionError("compose: dimension mismatch");
  const ComplexMatrix s = superoperator(chi2) * superoperator(chi1);
  return chi_from_superoperator(s, chi1.d, chi1.trace_preserving && chi2.trace_preserving);
}

ProcessMatrix invert(const ProcessMatrix& chi) {
  const ComplexMatrix s = superoperator(chi);
  ComplexMatrix sinv;
  try {
    sinv = lu_inverse(s);
  } catch (const NumericsError&) {
    throw DomainError("invert: singular superoperator");
  }
  const double cond = s.frobenius_norm() * sinv.frobenius_norm() / s.dim();
  if (cond > 1e8)
    throw DomainError("invert: superoperator condition estimate " + std::to_string(cond) +
                      " exceeds 1e8");
  return chi_from_superoperator(sinv, chi.d, chi.trace_preserving);
}

double process_fidelity(const ProcessMatrix& a, const ProcessMatrix& b) {
  if (a.d != b.d) throw DimensionError("process_fidelity: dimension mismatch");
  return inner(a.chi, b.chi);
}

double avg_state_fidelity(double process_fid, int d) {
  return (d * process_fid + 1.0) / (d + 1.0);
}

// ---------------------------------------------------------------------------
// Zoo
// ---------------------------------------------------------------------------

ComplexMatrix pauli_i() { return ComplexMatrix::identity(2); }
ComplexMatrix pauli_x() { return ComplexMatrix::from_rows(2, {0, 1, 1, 0}); }
ComplexMatrix pauli_y() {
  return ComplexMatrix::from_rows(2, {0, cplx(0, -1), cplx(0, 1), 0});
}
ComplexMatrix pauli_z() { return ComplexMatrix::from_rows(2, {1, 0, 0, -1}); }

ComplexMatrix hadamard_gate() {
  const double s = 1.0 / std::sqrt(2.0);
  return ComplexMatrix::from_rows(2, {s, s, s, -s});
}

ComplexMatrix t_gate() {
  return ComplexMatrix::from_rows(2, {1, 0, 0, std::polar(1.0, M_PI / 4.0)});
}

ComplexMatrix cnot_gate() {
  ComplexMatrix u(4);
  u(0, 0) = u(1, 1) = u(2, 3) = u(3, 2) = 1.0;
  return u;
}

KrausChannel unitary_channel(const ComplexMatrix& u) {
  return KrausChannel{u.dim(), {u}, ChannelKind::trace_preserving};
}

namespace {

void check_noise_p(double p) {
  if (p < 0.0 || p > 1.0) throw DomainError("noise intensity must lie in [0, 1]");
}

}  // namespace

KrausChannel depolarizing_channel(double p) {
  check_noise_p(p);
  KrausChannel k{2, {}, ChannelKind::trace_preserving};
  k.operators.push_back(std::sqrt(1.0 - 0.75 * p) * pauli_i());
  k.operators.push_back(std::sqrt(0.25 * p) * pauli_x());
  k.operators.push_back(std::sqrt(0.25 * p) * pauli_y());
  k.operators.push_back(std::sqrt(0.25 * p) * pauli_z());
  return k;
}

KrausChannel phase_damping_channel(double p) {
  check_noise_p(p);
  KrausChannel k{2, {}, ChannelKind::trace_preserving};
  k.operators.push_back(std::sqrt(1.0 - 0.5 * p) * pauli_i());
  k.operators.push_back(std::sqrt(0.5 * p) * pauli_z());
  return k;
}

KrausChannel amplitude_damping_channel(double p) {
  check_noise_p(p);
  KrausChannel k{2, {}, ChannelKind::trace_preserving};
  // (1+sqrt(1-p))/2 I + (1-sqrt(1-p))/2 Z = diag(1, sqrt(1-p)).
  k.operators.push_back(ComplexMatrix::from_rows(2, {1, 0, 0, std::sqrt(1.0 - p)}));
  ComplexMatrix k1(2);
  k1(0, 1) = std::sqrt(p);
  k.operators.push_back(k1);
  return k;
}

KrausChannel projective_measurement(const ComplexMatrix& basis) {
  const int d = basis.dim();
  KrausChannel k{d, {}, ChannelKind::trace_preserving};
  for (int m = 0; m < d; ++m) {
    ComplexMatrix proj(d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) proj(i, j) = basis(i, m) * std::conj(basis(j, m));
    k.operators.push_back(std::move(proj));
  }
  return k;
}

KrausChannel fusion_pf() { return ghz_analyzer(2); }

KrausChannel ghz_analyzer(int n) {
  if (n < 2 || n > 3) throw DomainError("ghz_analyzer: n must be 2 or 3");
  const int d = 1 << n;
  ComplexMatrix m(d);
  m(0, 0) = 1.0;
  m(d - 1, d - 1) = 1.0;
  return KrausChannel{d, {m}, ChannelKind::post_selected};
}

KrausChannel teleportation_channel(double theta) {
  if (theta < 0.0 || theta > M_PI / 2.0)
    throw DomainError("teleportation_channel: theta must lie in [0, pi/2]");
  const double c0 = std::cos(theta);
  const double c1 = std::sin(theta);
  const double inv_r2 = 1.0 / std::sqrt(2.0);
  KrausChannel k{2, {}, ChannelKind::trace_preserving};
  // Bell outcome (a, b): measurement leg (1/sqrt2) sum_j (-1)^{aj} c_{j xor b}
  // |j xor b><j|, then the standard correction Z^a X^b.
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      ComplexMatrix m(2);
      for (int j = 0; j < 2; ++j) {
        const double amp = inv_r2 * ((a == 1 && j == 1) ? -1.0 : 1.0) * (j ^ b ? c1 : c0);
        m(j ^ b, j) = amp;
      }
      ComplexMatrix corr = ComplexMatrix::identity(2);
      if (b == 1) corr = pauli_x();
      if (a == 1) corr = pauli_z() * corr;
      k.operators.push_back(corr * m);
    }
  return k;
}

ProcessMatrix identity_chi(int d) {
  return chi_from_kraus(unitary_channel(ComplexMatrix::identity(d)));
}

// ---------------------------------------------------------------------------
// Channel spec files
// ---------------------------------------------------------------------------

namespace {

void require_fields(const json& j, const std::vector<std::string>& required,
                    const std::vector<std::string>& optional) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool known = false;
    for (const auto& f : required) known = known || key == f;
    for (const auto& f : optional) known = known || key == f;
    if (!known) throw ParseError("channel spec: unknown field '" + key + "'");
  }
  for (const auto& f : required)
    if (!j.contains(f)) throw ParseError("channel spec: missing field '" + f + "'");
}

double number_field(const json& j, const std::string& f) {
  if (!j.at(f).is_number())
    throw ParseError("channel spec: field '" + f + "' must be a number");
  return j.at(f).get<double>();
}

ComplexMatrix parse_operator(const json& rows, int d) {
  if (!rows.is_array() || static_cast<int>(rows.size()) != d)
    throw ParseError("channel spec: field 'operators' entries must be " + std::to_string(d) +
                     " rows");
  ComplexMatrix m(d);
  for (int r = 0; r < d; ++r) {
    const auto& row = rows.at(r);
    if (!row.is_array() || static_cast<int>(row.size()) != d)
      throw ParseError("channel spec: field 'operators' rows must hold " + std::to_string(d) +
                       " entries");
    for (int c = 0; c < d; ++c) {
      const auto& e = row.at(c);
      if (!e.is_array() || e.size() != 2 || !e.at(0).is_number() || !e.at(1).is_number())
        throw ParseError("channel spec: field 'operators' entries must be [re, im] pairs");
      m(r, c) = cplx(e.at(0).get<double>(), e.at(1).get<double>());
    }
  }
  return m;
}

}  // namespace

KrausChannel parse_channel_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("channel spec: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("channel spec: top level must be an object");
  if (!j.contains("kind")) throw ParseError("channel spec: missing field 'kind'");
  if (!j.at("kind").is_string()) throw ParseError("channel spec: field 'kind' must be a string");
  const std::string kind = j.at("kind").get<std::string>();

  auto check_dim = [&](int expected) {
    if (j.contains("dim")) {
      if (!j.at("dim").is_number_integer())
        throw ParseError("channel spec: field 'dim' must be an integer");
      if (j.at("dim").get<int>() != expected)
        throw ParseError("channel spec: field 'dim' conflicts with kind '" + kind + "'");
    }
  };

  if (kind == "identity" || kind == "x" || kind == "y" || kind == "z" ||
      kind == "hadamard" || kind == "t") {
    require_fields(j, {"kind"}, {"dim"});
    check_dim(2);
    if (kind == "identity") return unitary_channel(pauli_i());
    if (kind == "x") return unitary_channel(pauli_x());
    if (kind == "y") return unitary_channel(pauli_y());
    if (kind == "z") return unitary_channel(pauli_z());
    if (kind == "hadamard") return unitary_channel(hadamard_gate());
    return unitary_channel(t_gate());
  }
  if (kind == "cnot") {
    require_fields(j, {"kind"}, {"dim"});
    check_dim(4);
    return unitary_channel(cnot_gate());
  }
  if (kind == "d" || kind == "ad" || kind == "pd") {
    require_fields(j, {"kind", "p"}, {"dim"});
    check_dim(2);
    const double p = number_field(j, "p");
    if (p < 0.0 || p > 1.0) throw ParseError("channel spec: field 'p' must lie in [0, 1]");
    if (kind == "d") return depolarizing_channel(p);
    if (kind == "ad") return amplitude_damping_channel(p);
    return phase_damping_channel(p);
  }
  if (kind == "projective") {
    require_fields(j, {"kind"}, {"dim", "basis"});
    check_dim(2);
    std::string basis = "z";
    if (j.contains("basis")) {
      if (!j.at("basis").is_string())
        throw ParseError("channel spec: field 'basis' must be a string");
      basis = j.at("basis").get<std::string>();
    }
    const double s = 1.0 / std::sqrt(2.0);
    if (basis == "z") return projective_measurement(ComplexMatrix::identity(2));
    if (basis == "x")
      return projective_measurement(ComplexMatrix::from_rows(2, {s, s, s, -s}));
    if (basis == "y")
      return projective_measurement(
          ComplexMatrix::from_rows(2, {s, s, cplx(0, s), cplx(0, -s)}));
    throw ParseError("channel spec: field 'basis' must be one of z, x, y");
  }
  if (kind == "pf") {
    require_fields(j, {"kind"}, {"dim"});
    check_dim(4);
    return fusion_pf();
  }
  if (kind == "nghz") {
    require_fields(j, {"kind", "n"}, {"dim"});
    if (!j.at("n").is_number_integer())
      throw ParseError("channel spec: field 'n' must be an integer");
    const int n = j.at("n").get<int>();
    if (n < 2 || n > 3) throw ParseError("channel spec: field 'n' must be 2 or 3");
    check_dim(1 << n);
    return ghz_analyzer(n);
  }
  if (kind == "teleport") {
    require_fields(j, {"kind", "theta"}, {"dim"});
    check_dim(2);
    const double theta = number_field(j, "theta");
    if (theta < 0.0 || theta > M_PI / 2.0)
      throw ParseError("channel spec: field 'theta' must lie in [0, pi/2]");
    return teleportation_channel(theta);
  }
  if (kind == "kraus") {
    require_fields(j, {"kind", "dim", "operators"}, {});
    if (!j.at("dim").is_number_integer())
      throw ParseError("channel spec: field 'dim' must be an integer");
    const int d = j.at("dim").get<int>();
    if (d < 2 || d > 8) throw ParseError("channel spec: field 'dim' must lie in [2, 8]");
    if (!j.at("operators").is_array() || j.at("operators").empty())
      throw ParseError("channel spec: field 'operators' must be a non-empty array");
    KrausChannel k{d, {}, ChannelKind::trace_preserving};
    for (const auto& op : j.at("operators")) k.operators.push_back(parse_operator(op, d));
    // Classify: trace preserving, post-selected, or invalid.
    ComplexMatrix s(d), tmp(d);
    for (const auto& op : k.operators) {
      matmul_adjoint_left(op, op, tmp);
      s += tmp;
    }
    ComplexMatrix defect = s - ComplexMatrix::identity(d);
    if (defect.frobenius_norm() <= 1e-7 * d) {
      k.kind = ChannelKind::trace_preserving;
    } else {
      auto eig = hermitian_eig(defect);
      if (!eig.eigenvalues.empty() && eig.eigenvalues.back() > 1e-7)
        throw ParseError("channel spec: field 'operators' exceeds trace preservation");
      k.kind = ChannelKind::post_selected;
    }
    return k;
  }
  throw ParseError("channel spec: unknown kind '" + kind + "'");
}

}  // namespace procq::chan
