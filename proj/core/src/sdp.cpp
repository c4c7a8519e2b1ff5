#include "procq/sdp.hpp"

#include <cmath>
#include <random>

namespace procq::sdp {

Collection::Collection(const std::vector<int>& dims) {
  blocks_.reserve(dims.size());
  for (int d : dims) blocks_.emplace_back(d);
}

void Collection::set_zero() {
  for (auto& b : blocks_) b.set_zero();
}

void Collection::add_scaled(const Collection& o, double s) {
  for (size_t b = 0; b < blocks_.size(); ++b) blocks_[b].add_scaled(o.blocks_[b], s);
}

void Collection::scale(double s) {
  for (auto& b : blocks_) b *= cplx(s, 0.0);
}

double Collection::dot(const Collection& o) const {
  double r = 0.0;
  for (size_t b = 0; b < blocks_.size(); ++b) r += inner(blocks_[b], o.blocks_[b]);
  return r;
}

double Collection::norm() const { return std::sqrt(dot(*this)); }

std::vector<int> Collection::dims() const {
  std::vector<int> d;
  d.reserve(blocks_.size());
  for (const auto& b : blocks_) d.push_back(b.dim());
  return d;
}

std::string BlockForm::describe() const {
  return "block(" + std::to_string(block_) + ")";
}

void BlockForm::add_apply(const Collection& x, ComplexMatrix& out, double scale) const {
  out.add_scaled(x[block_], cplx(scale, 0.0));
}

void BlockForm::add_adjoint(const ComplexMatrix& s, Collection& out, double scale) const {
  out[block_].add_scaled(s, cplx(scale, 0.0));
}

void FunctionalForm::add_apply(const Collection& x, ComplexMatrix& out, double scale) const {
  out(0, 0) += scale * coeffs_.dot(x);
}

void FunctionalForm::add_adjoint(const ComplexMatrix& s, Collection& out, double scale) const {
  out.add_scaled(coeffs_, scale * s(0, 0).real());
}

void FunctionalForm::touched_blocks(std::vector<char>& mask) const {
  for (size_t b = 0; b < coeffs_.size(); ++b)
    if (coeffs_[b].frobenius_norm() > 0.0) mask[b] = 1;
}

std::vector<int> SdpProblem::block_dims() const {
  std::vector<int> d;
  d.reserve(blocks.size());
  for (const auto& b : blocks) d.push_back(b.dim);
  return d;
}

namespace {

void check_hermitian(const ComplexMatrix& m, const std::string& what) {
  if (!m.is_hermitian(1e-9 * std::max(1.0, m.frobenius_norm())))
    throw NumericsError("sdp: " + what + " is not Hermitian");
}

Collection random_hermitian_collection(const std::vector<int>& dims, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Collection c(dims);
  for (size_t b = 0; b < c.size(); ++b) {
    const int d = c[b].dim();
    for (int i = 0; i < d; ++i) {
      c[b](i, i) = cplx(g(rng), 0.0);
      for (int j = i + 1; j < d; ++j) {
        const cplx v(g(rng), g(rng));
        c[b](i, j) = v;
        c[b](j, i) = std::conj(v);
      }
    }
  }
  return c;
}

ComplexMatrix constraint_expression(const PsdConstraint& pc, const Collection& x) {
  ComplexMatrix e = pc.offset;
  for (const auto& t : pc.terms) t.form->add_apply(x, e, t.coeff);
  return e;
}

}  // namespace

void SdpProblem::validate() const {
  const auto dims = block_dims();
  for (const auto& b : blocks)
    if (b.dim <= 0) throw DimensionError("sdp: block '" + b.label + "' has non-positive dim");
  if (objective.size() != blocks.size())
    throw DimensionError("sdp: objective block count mismatch");
  for (size_t b = 0; b < objective.size(); ++b) {
    if (objective[b].dim() != dims[b]) throw DimensionError("sdp: objective block dim mismatch");
    check_hermitian(objective[b], "objective coefficient");
  }
  for (const auto& eq : equalities) {
    if (eq.coeffs.size() != blocks.size())
      throw DimensionError("sdp: equality '" + eq.name + "' block count mismatch");
    for (size_t b = 0; b < eq.coeffs.size(); ++b) {
      if (eq.coeffs[b].dim() != dims[b])
        throw DimensionError("sdp: equality '" + eq.name + "' block dim mismatch");
      check_hermitian(eq.coeffs[b], "equality coefficient");
    }
  }
  for (const auto& pc : constraints) {
    if (pc.dim() <= 0)
      throw DimensionError("sdp: constraint '" + pc.name + "' missing offset matrix");
    check_hermitian(pc.offset, "constraint '" + pc.name + "' offset");
    for (const auto& t : pc.terms) {
      if (!t.form) throw DimensionError("sdp: constraint '" + pc.name + "' has null form");
      if (t.form->out_dim() != pc.dim())
        throw DimensionError("sdp: constraint '" + pc.name + "' term output dim mismatch");
      std::vector<char> mask(blocks.size(), 0);
      t.form->touched_blocks(mask);
    }
  }
  // Hermiticity of every affine expression, probed on random Hermitian input.
  for (unsigned probe = 0; probe < 2; ++probe) {
    Collection x = random_hermitian_collection(dims, 1234u + probe);
    for (const auto& pc : constraints) {
      ComplexMatrix e = constraint_expression(pc, x);
      if (!e.is_hermitian(1e-9 * std::max(1.0, e.frobenius_norm())))
        throw NumericsError("sdp: constraint '" + pc.name +
                            "' expression is not Hermitian on Hermitian input");
    }
  }
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::infeasible_suspected: return "infeasible_suspected";
  }
  return "unknown";
}

SdpSolution solve(const SdpProblem& p, double tol, long max_iters) {
  SolverOptions o;
  o.tol = tol;
  o.max_iters = max_iters;
  return solve(p, o);
}

ResidualReport verify(const SdpProblem& p, const SdpSolution& s) {
  ResidualReport r;
  Collection x(p.block_dims());
  for (size_t b = 0; b < x.size(); ++b) x[b] = s.block_values[b];

  r.objective = p.objective.dot(x) + p.objective_offset;
  for (const auto& eq : p.equalities)
    r.eq_residual = std::max(r.eq_residual, std::abs(eq.coeffs.dot(x) - eq.rhs));

  double min_eig = 0.0;
  bool first = true;
  for (const auto& pc : p.constraints) {
    ComplexMatrix e = constraint_expression(pc, x);
    e.hermitize();
    auto eig = hermitian_eig(e);
    const double lo = eig.eigenvalues.empty() ? 0.0 : eig.eigenvalues.front();
    min_eig = first ? lo : std::min(min_eig, lo);
    first = false;
  }
  r.psd_min_eigenvalue = first ? 0.0 : min_eig;

  if (s.psd_duals.size() == p.constraints.size() &&
      s.eq_duals.size() == p.equalities.size() && !p.constraints.empty()) {
    // Dual feasibility of min <c,x> s.t. expr_j >= 0, <A_i,x> = b_i:
    //   c - sum_j L_j^* y_j - sum_i w_i A_i = 0 with y_j >= 0.
    // The solver always minimizes internally, so flip for maximize problems.
    const double sgn = (p.sense == Sense::maximize) ? -1.0 : 1.0;
    Collection resid(p.block_dims());
    resid.add_scaled(p.objective, sgn);
    double dual_obj = 0.0;
    double dual_min = 0.0;
    bool dfirst = true;
    for (size_t j = 0; j < p.constraints.size(); ++j) {
      const auto& pc = p.constraints[j];
      for (const auto& t : pc.terms) t.form->add_adjoint(s.psd_duals[j], resid, -t.coeff);
      dual_obj -= inner(s.psd_duals[j], pc.offset);
      auto eig = hermitian_eig(s.psd_duals[j]);
      const double lo = eig.eigenvalues.empty() ? 0.0 : eig.eigenvalues.front();
      dual_min = dfirst ? lo : std::min(dual_min, lo);
      dfirst = false;
    }
    for (size_t i = 0; i < p.equalities.size(); ++i) {
      resid.add_scaled(p.equalities[i].coeffs, -s.eq_duals[i]);
      dual_obj += s.eq_duals[i] * p.equalities[i].rhs;
    }
    r.dual_residual = resid.norm();
    r.dual_psd_min = dfirst ? 0.0 : dual_min;
    const double pobj_internal = sgn * (r.objective - p.objective_offset);
    r.gap = std::abs(pobj_internal - dual_obj);
  }
  return r;
}

namespace {

void print_matrix(const ComplexMatrix& m, std::ostream& os, const char* indent) {
  for (int i = 0; i < m.dim(); ++i) {
    os << indent;
    for (int j = 0; j < m.dim(); ++j) {
      const cplx v = m(i, j);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "(%.12g,%.12g) ", v.real(), v.imag());
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace

void dump_problem(const SdpProblem& p, std::ostream& os) {
  constexpr int kPrintCap = 16;
  os << "SDP sense=" << (p.sense == Sense::minimize ? "minimize" : "maximize") << '\n';
  os << "BLOCKS " << p.blocks.size() << '\n';
  for (const auto& b : p.blocks) os << "  " << b.label << " dim=" << b.dim << '\n';
  os << "OBJECTIVE offset=" << p.objective_offset << '\n';
  for (size_t b = 0; b < p.objective.size(); ++b) {
    if (p.objective[b].frobenius_norm() == 0.0) continue;
    os << "  block " << p.blocks[b].label << ":\n";
    if (p.objective[b].dim() <= kPrintCap) print_matrix(p.objective[b], os, "    ");
    else os << "    (suppressed, dim " << p.objective[b].dim() << ")\n";
  }
  os << "EQUALITIES " << p.equalities.size() << '\n';
  for (const auto& eq : p.equalities) {
    os << "  " << eq.name << " rhs=" << eq.rhs << '\n';
    for (size_t b = 0; b < eq.coeffs.size(); ++b) {
      if (eq.coeffs[b].frobenius_norm() == 0.0) continue;
      os << "    block " << p.blocks[b].label << ":\n";
      if (eq.coeffs[b].dim() <= kPrintCap) print_matrix(eq.coeffs[b], os, "      ");
      else os << "      (suppressed)\n";
    }
  }
  os << "PSD-CONSTRAINTS " << p.constraints.size() << '\n';
  for (const auto& pc : p.constraints) {
    os << "  " << pc.name << " dim=" << pc.dim() << '\n';
    if (pc.offset.frobenius_norm() > 0.0) {
      os << "    offset:\n";
      if (pc.dim() <= kPrintCap) print_matrix(pc.offset, os, "      ");
      else os << "      (suppressed)\n";
    }
    for (const auto& t : pc.terms)
      os << "    + " << t.coeff << " * " << t.form->describe() << '\n';
  }
}

}  // namespace procq::sdp
