#include "procq/classical.hpp"

#include <cmath>
#include <random>

namespace procq::classical {

SystemKind system_kind_for_dim(int d) {
  switch (d) {
    case 2: return SystemKind::qubit1;
    case 3: return SystemKind::qutrit;
    case 4: return SystemKind::qubit2;
    case 8: return SystemKind::qubit3;
  }
  throw DomainError("no classical model for dimension " + std::to_string(d));
}

const char* to_string(SystemKind k) {
  switch (k) {
    case SystemKind::qubit1: return "qubit";
    case SystemKind::qubit2: return "qubit2";
    case SystemKind::qubit3: return "qubit3";
    case SystemKind::qutrit: return "qutrit";
  }
  return "unknown";
}

struct Model::Core {
  PropertySet props;
  int dim = 0;
  long n_assign = 0;
  std::vector<int> radices;
  std::vector<long> suffix;            // suffix products for outcome lookup
  std::vector<ComplexMatrix> basis;    // operator basis B_a
  std::vector<ComplexMatrix> coeff;    // C_a with (C_a)_{ij} = coeff of B_a in |i><j|
  std::vector<double> weight_mu_major; // [mu * n_basis + a]
  double kappa = -1.0;

  int n_basis() const { return static_cast<int>(basis.size()); }

  int outcome_index(long mu, int k) const {
    return static_cast<int>((mu / suffix[k]) % radices[k]);
  }

  void assemble_into(const sdp::Collection& sigma, ComplexMatrix& out, double scale) const;
  void adjoint_into(const ComplexMatrix& y, sdp::Collection& out, double scale) const;
};

namespace {

// chi_C(sigma) = sum_a C_a (x) R_a with R_a = sum_mu weight[a][mu] sigma_mu.
// Flat accumulation buffers; the qubit weights are +-1 so the inner update
// is an add or subtract.
void compute_responses(const Model::Core& c, const sdp::Collection& sigma,
                       std::vector<ComplexMatrix>& r) {
  const int nb = c.n_basis();
  const int d = c.dim;
  const int ent = d * d;
  r.assign(nb, ComplexMatrix(d));
  for (long mu = 0; mu < c.n_assign; ++mu) {
    const cplx* s = sigma[static_cast<size_t>(mu)].data();
    const double* wrow = c.weight_mu_major.data() + static_cast<size_t>(mu) * nb;
    for (int a = 0; a < nb; ++a) {
      const double w = wrow[a];
      if (w == 0.0) continue;
      cplx* dst = r[a].data();
      if (w == 1.0) {
        for (int e = 0; e < ent; ++e) dst[e] += s[e];
      } else if (w == -1.0) {
        for (int e = 0; e < ent; ++e) dst[e] -= s[e];
      } else {
        for (int e = 0; e < ent; ++e) dst[e] += w * s[e];
      }
    }
  }
}

}  // namespace

void Model::Core::assemble_into(const sdp::Collection& sigma, ComplexMatrix& out,
                                double scale) const {
  std::vector<ComplexMatrix> r;
  compute_responses(*this, sigma, r);
  const int d = dim;
  for (int a = 0; a < n_basis(); ++a) {
    const ComplexMatrix& ca = coeff[a];
    const ComplexMatrix& ra = r[a];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        const cplx w = scale * ca(i, j);
        if (w == cplx(0.0)) continue;
        for (int rr = 0; rr < d; ++rr)
          for (int cc = 0; cc < d; ++cc) out(i * d + rr, j * d + cc) += w * ra(rr, cc);
      }
  }
}

void Model::Core::adjoint_into(const ComplexMatrix& y, sdp::Collection& out,
                               double scale) const {
  const int d = dim;
  const int nb = n_basis();
  std::vector<ComplexMatrix> s(nb, ComplexMatrix(d));
  for (int a = 0; a < nb; ++a) {
    const ComplexMatrix& ca = coeff[a];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        const cplx w = std::conj(ca(i, j));
        if (w == cplx(0.0)) continue;
        for (int rr = 0; rr < d; ++rr)
          for (int cc = 0; cc < d; ++cc) s[a](rr, cc) += w * y(i * d + rr, j * d + cc);
      }
  }
  for (int a = 0; a < nb; ++a) s[a] *= cplx(scale, 0.0);
  const int ent = d * d;
  for (long mu = 0; mu < n_assign; ++mu) {
    cplx* dst = out[static_cast<size_t>(mu)].data();
    const double* wrow = weight_mu_major.data() + static_cast<size_t>(mu) * nb;
    for (int a = 0; a < nb; ++a) {
      const double w = wrow[a];
      if (w == 0.0) continue;
      const cplx* src = s[a].data();
      if (w == 1.0) {
        for (int e = 0; e < ent; ++e) dst[e] += src[e];
      } else if (w == -1.0) {
        for (int e = 0; e < ent; ++e) dst[e] -= src[e];
      } else {
        for (int e = 0; e < ent; ++e) dst[e] += w * src[e];
      }
    }
  }
}

namespace {

class ChiAssemblyForm final : public sdp::Form {
 public:
  explicit ChiAssemblyForm(std::shared_ptr<const Model::Core> core) : core_(std::move(core)) {}
  int out_dim() const override { return core_->dim * core_->dim; }
  std::string describe() const override {
    return std::string("classical-chi(") + to_string(core_->props.kind) + ")";
  }
  void add_apply(const sdp::Collection& x, ComplexMatrix& out, double scale) const override {
    core_->assemble_into(x, out, scale);
  }
  void add_adjoint(const ComplexMatrix& s, sdp::Collection& out, double scale) const override {
    core_->adjoint_into(s, out, scale);
  }
  void touched_blocks(std::vector<char>& mask) const override {
    for (long mu = 0; mu < core_->n_assign; ++mu) mask[static_cast<size_t>(mu)] = 1;
  }
  std::optional<double> gram_scale_with(const sdp::Form& other) const override {
    const auto* o = dynamic_cast<const ChiAssemblyForm*>(&other);
    if (!o || o->core_ != core_ || core_->kappa < 0.0) return std::nullopt;
    return core_->kappa;
  }

 private:
  std::shared_ptr<const Model::Core> core_;
};

ComplexMatrix eigvec_basis(std::initializer_list<cplx> cols) {
  // 2x2 basis from two column vectors packed row-major.
  return ComplexMatrix::from_rows(2, cols);
}

void build_qubit_properties(PropertySet& ps, int n_qubits) {
  const double s = 1.0 / std::sqrt(2.0);
  const ComplexMatrix bx = eigvec_basis({s, s, s, -s});
  const ComplexMatrix by = eigvec_basis({s, s, cplx(0, s), cplx(0, -s)});
  const ComplexMatrix bz = ComplexMatrix::identity(2);
  for (int q = 0; q < n_qubits; ++q)
    for (const auto* b : {&bx, &by, &bz}) {
      Property p;
      p.eigenbasis = *b;
      p.outcomes = {+1.0, -1.0};
      p.subsystem = q;
      ps.properties.push_back(std::move(p));
    }
}

std::vector<ComplexMatrix> qutrit_mub_bases() {
  const cplx w = std::polar(1.0, 2.0 * M_PI / 3.0);
  const double s = 1.0 / std::sqrt(3.0);
  auto pw = [&](int e) { return std::pow(w, cplx(static_cast<double>(((e % 3) + 3) % 3), 0.0)); };
  std::vector<ComplexMatrix> bases;
  bases.push_back(ComplexMatrix::identity(3));
  // Eigenbases of the generalized shift X, XZ and XZ^2; together with the
  // computational basis these form the four d=3 mutually unbiased bases.
  ComplexMatrix fx(3), fxz(3), fxz2(3);
  for (int j = 0; j < 3; ++j) {
    fx(0, j) = s;
    fx(1, j) = s * pw(j);
    fx(2, j) = s * pw(2 * j);
    fxz(0, j) = s;
    fxz(1, j) = s * pw(-j);
    fxz(2, j) = s * pw(1 - 2 * j);
    fxz2(0, j) = s;
    fxz2(1, j) = s * pw(-j);
    fxz2(2, j) = s * pw(2 - 2 * j);
  }
  bases.push_back(fx);
  bases.push_back(fxz);
  bases.push_back(fxz2);
  return bases;
}

void build_qutrit_properties(PropertySet& ps) {
  // Each MUB is used twice with independent three-outcome labelings so the
  // eight observables together with the identity span the full operator
  // space.
  const std::vector<double> label_a = {+1.0, 0.0, -1.0};
  const std::vector<double> label_b = {0.0, +1.0, -1.0};
  for (const auto& basis : qutrit_mub_bases())
    for (const auto* lab : {&label_a, &label_b}) {
      Property p;
      p.eigenbasis = basis;
      p.outcomes = *lab;
      p.subsystem = 0;
      ps.properties.push_back(std::move(p));
    }
}

// Rank check: {identity} united with all eigenprojectors must span the local
// operator space of each subsystem (products then span the full space).
void spanning_check(const PropertySet& ps) {
  int n_sub = 0;
  for (const auto& p : ps.properties) n_sub = std::max(n_sub, p.subsystem + 1);
  for (int sub = 0; sub < n_sub; ++sub) {
    std::vector<ComplexMatrix> ops;
    int local_dim = 0;
    for (const auto& p : ps.properties) {
      if (p.subsystem != sub) continue;
      local_dim = p.eigenbasis.dim();
      for (int m = 0; m < p.n_outcomes(); ++m) {
        ComplexMatrix proj(local_dim);
        for (int i = 0; i < local_dim; ++i)
          for (int j = 0; j < local_dim; ++j)
            proj(i, j) = p.eigenbasis(i, m) * std::conj(p.eigenbasis(j, m));
        ops.push_back(std::move(proj));
      }
    }
    ops.push_back(ComplexMatrix::identity(local_dim));
    const int n = static_cast<int>(ops.size());
    ComplexMatrix gram(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        cplx v = 0.0;
        for (int r = 0; r < local_dim; ++r)
          for (int c = 0; c < local_dim; ++c) v += std::conj(ops[i](r, c)) * ops[j](r, c);
        gram(i, j) = v;
      }
    auto eig = hermitian_eig(gram);
    int rank = 0;
    for (double lam : eig.eigenvalues)
      if (lam > 1e-9) ++rank;
    if (rank != local_dim * local_dim)
      throw DomainError("classical model: property projectors span rank " +
                        std::to_string(rank) + ", need " +
                        std::to_string(local_dim * local_dim));
  }
}

}  // namespace

Model Model::build(SystemKind kind) {
  auto core = std::make_shared<Core>();
  PropertySet& ps = core->props;
  ps.kind = kind;

  int n_qubits = 0;
  switch (kind) {
    case SystemKind::qubit1: n_qubits = 1; break;
    case SystemKind::qubit2: n_qubits = 2; break;
    case SystemKind::qubit3: n_qubits = 3; break;
    case SystemKind::qutrit: n_qubits = 0; break;
  }

  if (kind == SystemKind::qutrit) {
    ps.dim = 3;
    build_qutrit_properties(ps);
  } else {
    ps.dim = 1 << n_qubits;
    build_qubit_properties(ps, n_qubits);
  }
  spanning_check(ps);
  core->dim = ps.dim;

  const int n_props = static_cast<int>(ps.properties.size());
  core->radices.resize(n_props);
  for (int k = 0; k < n_props; ++k) core->radices[k] = ps.properties[k].n_outcomes();
  core->suffix.assign(n_props, 1);
  for (int k = n_props - 2; k >= 0; --k)
    core->suffix[k] = core->suffix[k + 1] * core->radices[k + 1];
  core->n_assign = core->suffix.empty() ? 1 : core->suffix[0] * core->radices[0];

  const int d = core->dim;
  const int nb = d * d;

  if (kind == SystemKind::qutrit) {
    // Operator basis {I, V_1..V_8}; expansion coefficients by linear
    // inversion through the (non-orthogonal) basis.
    core->basis.push_back(ComplexMatrix::identity(3));
    for (const auto& p : ps.properties) {
      ComplexMatrix v(3);
      for (int m = 0; m < 3; ++m)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            v(i, j) += p.outcomes[m] * p.eigenbasis(i, m) * std::conj(p.eigenbasis(j, m));
      core->basis.push_back(std::move(v));
    }
    if (static_cast<int>(core->basis.size()) != nb)
      throw DomainError("classical model: qutrit operator basis size mismatch");
    ComplexMatrix g(nb);
    for (int a = 0; a < nb; ++a)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) g(i * 3 + j, a) = core->basis[a](i, j);
    const ComplexMatrix ginv = lu_inverse(g);  // throws if the basis fails to span
    core->coeff.assign(nb, ComplexMatrix(3));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int a = 0; a < nb; ++a) core->coeff[a](i, j) = ginv(a, i * 3 + j);
  } else {
    // Pauli strings, qubit 0 most significant.
    const ComplexMatrix paulis[4] = {
        ComplexMatrix::identity(2), chan::pauli_x(), chan::pauli_y(), chan::pauli_z()};
    for (int a = 0; a < nb; ++a) {
      ComplexMatrix op = ComplexMatrix::identity(1);
      int rem = a;
      for (int q = 0; q < n_qubits; ++q) {
        const int digit = (a / static_cast<int>(std::pow(4, n_qubits - 1 - q))) % 4;
        op = kron(op, paulis[digit]);
        (void)rem;
      }
      core->basis.push_back(op);
      ComplexMatrix c = core->basis.back().conjugate();
      c *= cplx(1.0 / d, 0.0);
      core->coeff.push_back(std::move(c));
    }
  }

  // Per-assignment weights in the operator basis.
  core->weight_mu_major.assign(static_cast<size_t>(core->n_assign) * nb, 0.0);
  if (kind == SystemKind::qutrit) {
    for (long mu = 0; mu < core->n_assign; ++mu) {
      double* row = core->weight_mu_major.data() + static_cast<size_t>(mu) * nb;
      row[0] = 1.0;
      for (int k = 0; k < n_props; ++k)
        row[k + 1] = ps.properties[k].outcomes[core->outcome_index(mu, k)];
    }
  } else {
    for (long mu = 0; mu < core->n_assign; ++mu) {
      double* row = core->weight_mu_major.data() + static_cast<size_t>(mu) * nb;
      // Per-qubit signs (v1, v2, v3) read off the assignment digits.
      double v[3 * 8];  // up to 3 qubits
      for (int q = 0; q < n_qubits; ++q)
        for (int axis = 0; axis < 3; ++axis)
          v[q * 3 + axis] = core->outcome_index(mu, q * 3 + axis) == 0 ? +1.0 : -1.0;
      for (int a = 0; a < nb; ++a) {
        double wgt = 1.0;
        for (int q = 0; q < n_qubits; ++q) {
          const int digit = (a / static_cast<int>(std::pow(4, n_qubits - 1 - q))) % 4;
          if (digit > 0) wgt *= v[q * 3 + (digit - 1)];
        }
        row[a] = wgt;
      }
    }
  }

  // Gram structure probe: for the qubit models the assembly satisfies
  // L L^* = kappa Id, which the solver exploits; verify numerically.
  {
    std::mt19937 rng(7u);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double kappa = -1.0;
    bool ok = true;
    for (int probe = 0; probe < 2 && ok; ++probe) {
      ComplexMatrix y(nb);
      for (int i = 0; i < nb; ++i) {
        y(i, i) = cplx(gauss(rng), 0.0);
        for (int j = i + 1; j < nb; ++j) {
          const cplx val(gauss(rng), gauss(rng));
          y(i, j) = val;
          y(j, i) = std::conj(val);
        }
      }
      sdp::Collection adj(std::vector<int>(static_cast<size_t>(core->n_assign), d));
      core->adjoint_into(y, adj, 1.0);
      ComplexMatrix z(nb);
      core->assemble_into(adj, z, 1.0);
      const double k_est = inner(z, y) / inner(y, y);
      ComplexMatrix diff = z;
      diff.add_scaled(y, cplx(-k_est, 0.0));
      if (diff.frobenius_norm() > 1e-8 * std::max(1.0, k_est) * y.frobenius_norm()) {
        ok = false;
      } else if (probe == 0) {
        kappa = k_est;
      } else if (std::abs(k_est - kappa) > 1e-8 * std::max(1.0, kappa)) {
        ok = false;
      }
    }
    core->kappa = ok ? kappa : -1.0;
  }

  Model m;
  m.core_ = core;
  m.form_ = std::make_shared<ChiAssemblyForm>(core);
  return m;
}

int Model::outcome_index(long mu, int k) const { return core_->outcome_index(mu, k); }

double Model::outcome_value(long mu, int k) const {
  return core_->props.properties[k].outcomes[core_->outcome_index(mu, k)];
}

int Model::dim() const { return core_->dim; }
SystemKind Model::kind() const { return core_->props.kind; }
long Model::assignment_count() const { return core_->n_assign; }
const PropertySet& Model::properties() const { return core_->props; }
int Model::n_properties() const { return static_cast<int>(core_->props.properties.size()); }

std::vector<sdp::BlockSpec> Model::sigma_blocks() const {
  std::vector<sdp::BlockSpec> blocks;
  blocks.reserve(core_->n_assign);
  for (long mu = 0; mu < core_->n_assign; ++mu)
    blocks.push_back({"sigma" + std::to_string(mu), core_->dim});
  return blocks;
}

ComplexMatrix Model::conditional_output(const sdp::Collection& sigma, int property,
                                        int outcome_idx) const {
  if (property < 0 || property >= n_properties())
    throw DomainError("conditional_output: unknown property");
  if (outcome_idx < 0 || outcome_idx >= core_->radices[property])
    throw DomainError("conditional_output: unknown outcome");
  ComplexMatrix out(core_->dim);
  for (long mu = 0; mu < core_->n_assign; ++mu)
    if (core_->outcome_index(mu, property) == outcome_idx)
      out += sigma[static_cast<size_t>(mu)];
  out *= cplx(static_cast<double>(core_->radices[property]), 0.0);
  return out;
}

ComplexMatrix Model::assemble_chi(const sdp::Collection& sigma) const {
  ComplexMatrix out(core_->dim * core_->dim);
  core_->assemble_into(sigma, out, 1.0);
  return out;
}

sdp::Collection Model::assemble_adjoint(const ComplexMatrix& chi_like) const {
  sdp::Collection out(std::vector<int>(static_cast<size_t>(core_->n_assign), core_->dim));
  core_->adjoint_into(chi_like, out, 1.0);
  return out;
}

sdp::SdpProblem Model::base_problem(bool normalized, bool chi_psd) const {
  sdp::SdpProblem p;
  p.blocks = sigma_blocks();
  const auto dims = p.block_dims();
  p.objective = sdp::Collection(dims);
  for (long mu = 0; mu < core_->n_assign; ++mu) {
    sdp::PsdConstraint pc;
    pc.name = "sigma" + std::to_string(mu) + "_psd";
    pc.offset = ComplexMatrix(core_->dim);
    pc.terms.push_back({1.0, std::make_shared<sdp::BlockForm>(static_cast<int>(mu), core_->dim)});
    p.constraints.push_back(std::move(pc));
  }
  if (chi_psd) {
    sdp::PsdConstraint pc;
    pc.name = "chi_c_psd";
    pc.offset = ComplexMatrix(core_->dim * core_->dim);
    pc.terms.push_back({1.0, form_});
    p.constraints.push_back(std::move(pc));
  }
  if (normalized) {
    sdp::EqConstraint eq;
    eq.name = "trace_one";
    eq.coeffs = sdp::Collection(dims);
    for (size_t b = 0; b < eq.coeffs.size(); ++b)
      eq.coeffs[b] = ComplexMatrix::identity(core_->dim);
    eq.rhs = 1.0;
    p.equalities.push_back(std::move(eq));
  }
  return p;
}

chan::ProcessMatrix Model::chi_from_sigma(const sdp::Collection& sigma) const {
  ComplexMatrix chi = assemble_chi(sigma);
  const double tr = chi.trace().real();
  if (tr <= 1e-12) throw DomainError("chi_from_sigma: zero total weight");
  chi *= cplx(1.0 / tr, 0.0);
  chi.hermitize();
  chan::ProcessMatrix out;
  out.d = core_->dim;
  out.chi = std::move(chi);
  out.trace_preserving = false;
  return out;
}

}  // namespace procq::classical
