#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "procq/sdp.hpp"

namespace procq::sdp {

namespace {

// ---------------------------------------------------------------------------
// svec: isometric real coordinates for Hermitian matrices
// (diagonal entries, then sqrt(2)-scaled upper re/im pairs, row-major).
// ---------------------------------------------------------------------------

int svec_len(int m) { return m * m; }

void svec_write(const ComplexMatrix& a, double* out) {
  const int m = a.dim();
  int k = 0;
  for (int i = 0; i < m; ++i) out[k++] = a(i, i).real();
  const double r2 = std::sqrt(2.0);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      out[k++] = r2 * a(i, j).real();
      out[k++] = r2 * a(i, j).imag();
    }
}

void svec_read(const double* in, ComplexMatrix& a) {
  const int m = a.dim();
  int k = 0;
  for (int i = 0; i < m; ++i) a(i, i) = cplx(in[k++], 0.0);
  const double inv_r2 = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      const cplx v(in[k] * inv_r2, in[k + 1] * inv_r2);
      k += 2;
      a(i, j) = v;
      a(j, i) = std::conj(v);
    }
}

// ---------------------------------------------------------------------------
// Small dense real LU (for the core Schur complement and M inverse).
// ---------------------------------------------------------------------------

struct RealLu {
  int n = 0;
  std::vector<double> a;  // row-major factors
  std::vector<int> piv;

  void factor(std::vector<double> mat, int dim) {
    n = dim;
    a = std::move(mat);
    piv.assign(n, 0);
    for (int k = 0; k < n; ++k) {
      int p = k;
      double best = std::abs(a[k * n + k]);
      for (int i = k + 1; i < n; ++i)
        if (std::abs(a[i * n + k]) > best) {
          best = std::abs(a[i * n + k]);
          p = i;
        }
      if (best == 0.0) throw SolverError("sdp solver: singular core matrix");
      piv[k] = p;
      if (p != k)
        for (int j = 0; j < n; ++j) std::swap(a[k * n + j], a[p * n + j]);
      const double inv = 1.0 / a[k * n + k];
      for (int i = k + 1; i < n; ++i) {
        const double l = a[i * n + k] * inv;
        a[i * n + k] = l;
        if (l == 0.0) continue;
        for (int j = k + 1; j < n; ++j) a[i * n + j] -= l * a[k * n + j];
      }
    }
  }

  void solve(double* b) const {
    for (int k = 0; k < n; ++k)
      if (piv[k] != k) std::swap(b[k], b[piv[k]]);
    for (int i = 1; i < n; ++i)
      for (int j = 0; j < i; ++j) b[i] -= a[i * n + j] * b[j];
    for (int i = n - 1; i >= 0; --i) {
      for (int j = i + 1; j < n; ++j) b[i] -= a[i * n + j] * b[j];
      b[i] /= a[i * n + i];
    }
  }
};

// ---------------------------------------------------------------------------
// Compiled problem
// ---------------------------------------------------------------------------

struct TermRef {
  int form = -1;
  double coeff = 0.0;
};

// PSD constraint of shape offset + c * X_b: handled without the coupled
// machinery, contributing c^2 to the diagonal of the normal matrix.
struct LocalCone {
  int ci = -1;
  int block = -1;
  double coeff = 0.0;
};

struct CoupledCone {
  int ci = -1;
  std::vector<TermRef> terms;
  int dim = 0;
  int off = 0;  // offset into the stacked svec vector (bigs first)
  bool big = false;
};

struct Compiled {
  std::vector<int> dims;
  long n_cones = 0;  // PSD constraints
  std::vector<const Form*> forms;           // distinct, first-seen order
  std::vector<LocalCone> locals;
  std::vector<CoupledCone> coupled;         // bigs then smalls
  int n_big = 0;
  int big_svec = 0;                         // svec length shared by all bigs
  std::vector<double> minv;                 // (n_big x n_big) inverse of I + G
  int small_total = 0;                      // svec of smalls + #equalities
  int stack_len = 0;                        // n_big*big_svec + small_total
  std::vector<double> bmat;                 // small_total x (n_big*big_svec)
  RealLu schur;                             // small_total x small_total
  bool has_core = false;
  std::vector<double> dinv;                 // per-block 1/(D_b + tau_b)
  std::vector<char> tau;                    // proximal blocks
  bool any_tau = false;
};

int find_or_add_form(std::vector<const Form*>& forms, const Form* f) {
  for (size_t i = 0; i < forms.size(); ++i)
    if (forms[i] == f) return static_cast<int>(i);
  forms.push_back(f);
  return static_cast<int>(forms.size()) - 1;
}

// Forward map of one coupled cone's linear part into its svec segment.
void coupled_forward(const SdpProblem& p, const CoupledCone& cone,
                     const std::vector<ComplexMatrix>& form_vals, double* seg,
                     ComplexMatrix& scratch) {
  scratch = ComplexMatrix(cone.dim);
  const auto& pc = p.constraints[cone.ci];
  for (size_t t = 0; t < cone.terms.size(); ++t)
    scratch.add_scaled(form_vals[cone.terms[t].form], cplx(pc.terms[t].coeff, 0.0));
  svec_write(scratch, seg);
}

struct Workspace {
  Collection x, u, rhs, work;
  std::vector<ComplexMatrix> z, uu, expr, hint;  // per PSD cone
  std::vector<double> eq_u;                      // scaled duals for equalities
  std::vector<double> eqval;
  std::vector<ComplexMatrix> form_vals;          // cached form applications
  std::vector<ComplexMatrix> form_acc;           // adjoint accumulators
  std::vector<double> stack_v, stack_w, stack_t;
  ComplexMatrix scratch;
};

void apply_minv_blocks(const Compiled& c, const double* in, double* out) {
  const int J = c.n_big;
  const int m = c.big_svec;
  for (int e = 0; e < m; ++e) {
    for (int j = 0; j < J; ++j) {
      double s = 0.0;
      for (int j2 = 0; j2 < J; ++j2) s += c.minv[j * J + j2] * in[j2 * m + e];
      out[j * m + e] = s;
    }
  }
}

// core(v) = (I + V D^-1 V^T)^-1 v over the stacked coupled space.
void core_solve(const Compiled& c, std::vector<double>& v, std::vector<double>& t) {
  const int J = c.n_big;
  const int m = c.big_svec;
  const int r = c.small_total;
  const int big_len = J * m;
  if (J > 0 && r == 0) {
    t.assign(big_len, 0.0);
    apply_minv_blocks(c, v.data(), t.data());
    std::copy(t.begin(), t.end(), v.begin());
    return;
  }
  if (J == 0) {
    c.schur.solve(v.data());
    return;
  }
  // Bordered system: [[M ox I, B^T],[B, S]].
  t.assign(big_len, 0.0);
  apply_minv_blocks(c, v.data(), t.data());  // t = P^-1 vb
  std::vector<double> rs(r);
  for (int i = 0; i < r; ++i) {
    double s = v[big_len + i];
    const double* brow = c.bmat.data() + static_cast<size_t>(i) * big_len;
    for (int k = 0; k < big_len; ++k) s -= brow[k] * t[k];
    rs[i] = s;
  }
  c.schur.solve(rs.data());
  // yb = P^-1 (vb - B^T ys)
  for (int i = 0; i < r; ++i) {
    const double* brow = c.bmat.data() + static_cast<size_t>(i) * big_len;
    const double yi = rs[i];
    for (int k = 0; k < big_len; ++k) v[k] -= brow[k] * yi;
  }
  apply_minv_blocks(c, v.data(), t.data());
  std::copy(t.begin(), t.begin() + big_len, v.begin());
  for (int i = 0; i < r; ++i) v[big_len + i] = rs[i];
}

Compiled compile(const SdpProblem& p) {
  Compiled c;
  c.dims = p.block_dims();
  c.n_cones = static_cast<long>(p.constraints.size());
  const size_t nb = c.dims.size();

  std::vector<double> dvec(nb, 0.0);
  std::vector<CoupledCone> pending;

  for (size_t ci = 0; ci < p.constraints.size(); ++ci) {
    const auto& pc = p.constraints[ci];
    if (pc.terms.size() == 1) {
      if (auto bl = pc.terms[0].form->block_local()) {
        LocalCone lc;
        lc.ci = static_cast<int>(ci);
        lc.block = bl->first;
        lc.coeff = pc.terms[0].coeff * bl->second;
        dvec[lc.block] += lc.coeff * lc.coeff;
        c.locals.push_back(lc);
        continue;
      }
    }
    CoupledCone cc;
    cc.ci = static_cast<int>(ci);
    cc.dim = pc.dim();
    for (const auto& t : pc.terms) {
      TermRef tr;
      tr.form = find_or_add_form(c.forms, t.form.get());
      tr.coeff = t.coeff;
      cc.terms.push_back(tr);
    }
    pending.push_back(std::move(cc));
  }

  // Proximal regularization for blocks outside every block-local cone.
  c.tau.assign(nb, 0);
  for (size_t b = 0; b < nb; ++b)
    if (dvec[b] == 0.0) {
      c.tau[b] = 1;
      dvec[b] = 1.0;
      c.any_tau = true;
    }
  c.dinv.resize(nb);
  for (size_t b = 0; b < nb; ++b) c.dinv[b] = 1.0 / dvec[b];

  // Big candidates: single-term constraints with a large output and mutual
  // gram structure over uniformly weighted blocks.
  constexpr int kBigSvecMin = 1024;
  std::vector<int> big_idx;
  for (size_t k = 0; k < pending.size(); ++k) {
    const auto& cc = pending[k];
    if (cc.terms.size() != 1 || svec_len(cc.dim) < kBigSvecMin) continue;
    big_idx.push_back(static_cast<int>(k));
  }
  // Uniform D over the touched blocks, same value for every big.
  double d0 = 0.0;
  bool structured = !big_idx.empty();
  if (structured) {
    std::vector<char> mask(nb, 0);
    for (int k : big_idx) {
      const auto& pc = p.constraints[pending[k].ci];
      pc.terms[0].form->touched_blocks(mask);
    }
    bool first = true;
    for (size_t b = 0; b < nb; ++b) {
      if (!mask[b]) continue;
      if (first) {
        d0 = dvec[b];
        first = false;
      } else if (std::abs(dvec[b] - d0) > 1e-12 * std::max(1.0, d0)) {
        structured = false;
        break;
      }
    }
    if (first) structured = false;
  }
  // Pairwise gram scales and a common output dimension.
  std::vector<double> gram;
  if (structured) {
    const int J = static_cast<int>(big_idx.size());
    const int d_out = pending[big_idx[0]].dim;
    gram.assign(static_cast<size_t>(J) * J, 0.0);
    for (int a = 0; a < J && structured; ++a) {
      const auto& pa = p.constraints[pending[big_idx[a]].ci];
      if (pa.dim() != d_out) {
        structured = false;
        break;
      }
      for (int b = 0; b < J && structured; ++b) {
        const auto& pb = p.constraints[pending[big_idx[b]].ci];
        auto g = pa.terms[0].form->gram_scale_with(*pb.terms[0].form);
        if (!g) {
          structured = false;
          break;
        }
        gram[a * J + b] = pa.terms[0].coeff * pb.terms[0].coeff * (*g) / d0;
      }
    }
  }

  std::vector<char> is_big(pending.size(), 0);
  if (structured)
    for (int k : big_idx) is_big[k] = 1;

  // Stack layout: bigs first, then smalls, then equality rows.
  int off = 0;
  for (size_t k = 0; k < pending.size(); ++k)
    if (is_big[k]) {
      pending[k].big = true;
      pending[k].off = off;
      off += svec_len(pending[k].dim);
      c.coupled.push_back(pending[k]);
      ++c.n_big;
    }
  c.big_svec = c.n_big > 0 ? svec_len(c.coupled[0].dim) : 0;
  for (size_t k = 0; k < pending.size(); ++k)
    if (!is_big[k]) {
      pending[k].off = off;
      off += svec_len(pending[k].dim);
      c.coupled.push_back(pending[k]);
    }
  const int eq_off = off;
  off += static_cast<int>(p.equalities.size());
  c.stack_len = off;
  c.small_total = off - c.n_big * c.big_svec;

  constexpr int kSmallCap = 6000;
  if (c.small_total > kSmallCap)
    throw SolverError("sdp solver: coupled constraints too large for the dense core (" +
                      std::to_string(c.small_total) + " rows)");

  if (c.stack_len == 0) return c;
  c.has_core = true;

  // M = I + G, inverted densely (J is tiny).
  if (c.n_big > 0) {
    const int J = c.n_big;
    std::vector<double> m(static_cast<size_t>(J) * J, 0.0);
    for (int a = 0; a < J; ++a)
      for (int b = 0; b < J; ++b) m[a * J + b] = gram[a * J + b] + (a == b ? 1.0 : 0.0);
    RealLu lu;
    lu.factor(m, J);
    c.minv.assign(static_cast<size_t>(J) * J, 0.0);
    std::vector<double> e(J);
    for (int col = 0; col < J; ++col) {
      std::fill(e.begin(), e.end(), 0.0);
      e[col] = 1.0;
      lu.solve(e.data());
      for (int row = 0; row < J; ++row) c.minv[row * J + col] = e[row];
    }
  }

  // Dense rows: smalls and equalities. One pass per svec basis element
  // builds both the small-small gram C and the small-big border B.
  const int r = c.small_total;
  const int big_len = c.n_big * c.big_svec;
  std::vector<double> cmat(static_cast<size_t>(r) * r, 0.0);
  c.bmat.assign(static_cast<size_t>(r) * std::max(big_len, 1), 0.0);

  Collection a(c.dims);
  for (int row = 0; row < r; ++row) {
    a.set_zero();
    const int stack_pos = c.n_big * c.big_svec + row;
    // Adjoint of the basis element behind this row.
    bool found = false;
    for (const auto& cone : c.coupled) {
      if (cone.big) continue;
      const int len = svec_len(cone.dim);
      if (stack_pos >= cone.off && stack_pos < cone.off + len) {
        std::vector<double> e(len, 0.0);
        e[stack_pos - cone.off] = 1.0;
        ComplexMatrix em(cone.dim);
        svec_read(e.data(), em);
        const auto& pc = p.constraints[cone.ci];
        for (const auto& t : pc.terms) t.form->add_adjoint(em, a, t.coeff);
        found = true;
        break;
      }
    }
    if (!found) {
      const int i = stack_pos - eq_off;
      a.add_scaled(p.equalities[i].coeffs, 1.0);
    }
    for (size_t b = 0; b < a.size(); ++b) a[b] *= cplx(c.dinv[b], 0.0);

    // Forward through every small row (gram) and every big (border).
    for (const auto& cone : c.coupled) {
      if (cone.big) {
        const auto& pc = p.constraints[cone.ci];
        ComplexMatrix out(cone.dim);
        for (const auto& t : pc.terms) t.form->add_apply(a, out, t.coeff);
        svec_write(out, c.bmat.data() + static_cast<size_t>(row) * big_len + cone.off);
      } else {
        const auto& pc = p.constraints[cone.ci];
        ComplexMatrix out(cone.dim);
        for (const auto& t : pc.terms) t.form->add_apply(a, out, t.coeff);
        std::vector<double> seg(svec_len(cone.dim));
        svec_write(out, seg.data());
        const int base = cone.off - c.n_big * c.big_svec;
        for (int k = 0; k < static_cast<int>(seg.size()); ++k)
          cmat[static_cast<size_t>(row) * r + base + k] = seg[k];
      }
    }
    for (size_t i = 0; i < p.equalities.size(); ++i)
      cmat[static_cast<size_t>(row) * r + (eq_off - c.n_big * c.big_svec) + i] =
          p.equalities[i].coeffs.dot(a);
  }

  // Schur complement S - B P^-1 B^T over I + C.
  std::vector<double> schur(static_cast<size_t>(r) * r, 0.0);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      schur[static_cast<size_t>(i) * r + j] =
          0.5 * (cmat[static_cast<size_t>(i) * r + j] + cmat[static_cast<size_t>(j) * r + i]) +
          (i == j ? 1.0 : 0.0);
  if (c.n_big > 0 && big_len > 0) {
    std::vector<double> bp(static_cast<size_t>(r) * big_len);
    for (int i = 0; i < r; ++i)
      apply_minv_blocks(c, c.bmat.data() + static_cast<size_t>(i) * big_len,
                        bp.data() + static_cast<size_t>(i) * big_len);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        double s = 0.0;
        const double* bi = c.bmat.data() + static_cast<size_t>(i) * big_len;
        const double* pj = bp.data() + static_cast<size_t>(j) * big_len;
        for (int k = 0; k < big_len; ++k) s += bi[k] * pj[k];
        schur[static_cast<size_t>(i) * r + j] -= s;
      }
  }
  if (r > 0) c.schur.factor(std::move(schur), r);
  return c;
}

// ---------------------------------------------------------------------------
// ADMM loop
// ---------------------------------------------------------------------------

struct Loop {
  const SdpProblem& p;
  const Compiled& c;
  SolverOptions opts;
  Collection cint;  // internal minimize objective
  Workspace w;
  double rho;
  size_t nb = 0, ncone = 0, neq = 0;

  // Filled by compute_residuals().
  double primal_inf = 0.0, dual_inf = 0.0, gap = 0.0, pobj = 0.0, dobj = 0.0;

  Loop(const SdpProblem& prob, const Compiled& comp, const SolverOptions& o)
      : p(prob), c(comp), opts(o), rho(o.rho0) {
    nb = c.dims.size();
    ncone = p.constraints.size();
    neq = p.equalities.size();
    const double sgn = (p.sense == Sense::maximize) ? -1.0 : 1.0;
    cint = Collection(c.dims);
    cint.add_scaled(p.objective, sgn);

    w.x = Collection(c.dims);
    w.u = Collection(c.dims);
    w.rhs = Collection(c.dims);
    w.work = Collection(c.dims);
    w.z.resize(ncone);
    w.uu.resize(ncone);
    w.expr.resize(ncone);
    w.hint.resize(ncone);
    for (size_t j = 0; j < ncone; ++j) {
      w.expr[j] = p.constraints[j].offset;
      w.z[j] = psd_project_warm(p.constraints[j].offset, w.hint[j]);
      w.uu[j] = ComplexMatrix(p.constraints[j].dim());
    }
    w.eq_u.assign(neq, 0.0);
    w.eqval.assign(neq, 0.0);
    w.form_vals.assign(c.forms.size(), ComplexMatrix());
    w.form_acc.assign(c.forms.size(), ComplexMatrix());
    for (size_t f = 0; f < c.forms.size(); ++f) {
      w.form_vals[f] = ComplexMatrix(c.forms[f]->out_dim());
      w.form_acc[f] = ComplexMatrix(c.forms[f]->out_dim());
    }
    w.stack_v.assign(std::max(c.stack_len, 1), 0.0);
  }

  // One ADMM pass: exact least-squares x step, over-relaxed projection step,
  // scaled dual step.
  void iterate() {
    // ---- x step ----
    w.rhs.set_zero();
    w.rhs.add_scaled(cint, -1.0 / rho);
    for (const auto& lc : c.locals) {
      const auto& pc = p.constraints[lc.ci];
      auto& dst = w.rhs[lc.block];
      dst.add_scaled(w.z[lc.ci], cplx(lc.coeff, 0.0));
      dst.add_scaled(pc.offset, cplx(-lc.coeff, 0.0));
      dst.add_scaled(w.uu[lc.ci], cplx(-lc.coeff, 0.0));
    }
    for (auto& m : w.form_acc) m.set_zero();
    for (const auto& cone : c.coupled) {
      const auto& pc = p.constraints[cone.ci];
      for (size_t t = 0; t < cone.terms.size(); ++t) {
        auto& acc = w.form_acc[cone.terms[t].form];
        const double cf = pc.terms[t].coeff;
        acc.add_scaled(w.z[cone.ci], cplx(cf, 0.0));
        acc.add_scaled(pc.offset, cplx(-cf, 0.0));
        acc.add_scaled(w.uu[cone.ci], cplx(-cf, 0.0));
      }
    }
    for (size_t f = 0; f < c.forms.size(); ++f)
      c.forms[f]->add_adjoint(w.form_acc[f], w.rhs, 1.0);
    for (size_t i = 0; i < neq; ++i)
      w.rhs.add_scaled(p.equalities[i].coeffs, p.equalities[i].rhs - w.eq_u[i]);
    if (c.any_tau)
      for (size_t b = 0; b < nb; ++b)
        if (c.tau[b]) w.rhs[b].add_scaled(w.x[b], cplx(1.0, 0.0));

    for (size_t b = 0; b < nb; ++b) {
      w.u[b] = w.rhs[b];
      w.u[b] *= cplx(c.dinv[b], 0.0);
    }

    if (c.has_core) {
      for (size_t f = 0; f < c.forms.size(); ++f) {
        w.form_vals[f].set_zero();
        c.forms[f]->add_apply(w.u, w.form_vals[f], 1.0);
      }
      for (const auto& cone : c.coupled)
        coupled_forward(p, cone, w.form_vals, w.stack_v.data() + cone.off, w.scratch);
      for (size_t i = 0; i < neq; ++i)
        w.stack_v[c.stack_len - neq + i] = p.equalities[i].coeffs.dot(w.u);

      core_solve(c, w.stack_v, w.stack_t);

      for (auto& m : w.form_acc) m.set_zero();
      for (const auto& cone : c.coupled) {
        const auto& pc = p.constraints[cone.ci];
        ComplexMatrix seg(cone.dim);
        svec_read(w.stack_v.data() + cone.off, seg);
        for (size_t t = 0; t < cone.terms.size(); ++t)
          w.form_acc[cone.terms[t].form].add_scaled(seg, cplx(pc.terms[t].coeff, 0.0));
      }
      w.work.set_zero();
      for (size_t f = 0; f < c.forms.size(); ++f)
        c.forms[f]->add_adjoint(w.form_acc[f], w.work, 1.0);
      for (size_t i = 0; i < neq; ++i)
        w.work.add_scaled(p.equalities[i].coeffs, w.stack_v[c.stack_len - neq + i]);
      for (size_t b = 0; b < nb; ++b) {
        w.x[b] = w.u[b];
        w.x[b].add_scaled(w.work[b], cplx(-c.dinv[b], 0.0));
      }
    } else {
      for (size_t b = 0; b < nb; ++b) w.x[b] = w.u[b];
    }

    // ---- expressions at the new x ----
    for (size_t f = 0; f < c.forms.size(); ++f) {
      w.form_vals[f].set_zero();
      c.forms[f]->add_apply(w.x, w.form_vals[f], 1.0);
    }
    for (const auto& lc : c.locals) {
      w.expr[lc.ci] = p.constraints[lc.ci].offset;
      w.expr[lc.ci].add_scaled(w.x[lc.block], cplx(lc.coeff, 0.0));
    }
    for (const auto& cone : c.coupled) {
      const auto& pc = p.constraints[cone.ci];
      w.expr[cone.ci] = pc.offset;
      for (size_t t = 0; t < cone.terms.size(); ++t)
        w.expr[cone.ci].add_scaled(w.form_vals[cone.terms[t].form],
                                   cplx(pc.terms[t].coeff, 0.0));
    }
    for (size_t i = 0; i < neq; ++i) w.eqval[i] = p.equalities[i].coeffs.dot(w.x);

    // ---- z / dual steps (over-relaxed) ----
    const double gamma = opts.over_relax;
    for (size_t j = 0; j < ncone; ++j) {
      ComplexMatrix h = w.expr[j];
      h *= cplx(gamma, 0.0);
      h.add_scaled(w.z[j], cplx(1.0 - gamma, 0.0));
      ComplexMatrix arg = h;
      arg += w.uu[j];
      arg.hermitize();
      ComplexMatrix znew = psd_project_warm(arg, w.hint[j]);
      w.uu[j] += h;
      w.uu[j] -= znew;
      w.z[j] = std::move(znew);
    }
    for (size_t i = 0; i < neq; ++i) {
      const double h = gamma * w.eqval[i] + (1.0 - gamma) * p.equalities[i].rhs;
      w.eq_u[i] += h - p.equalities[i].rhs;
    }
  }

  // Primal / dual residuals, objective values and duality gap of the
  // internal minimization at the current iterate.
  void compute_residuals() {
    double pr2 = 0.0;
    for (size_t j = 0; j < ncone; ++j) {
      ComplexMatrix d = w.expr[j];
      d -= w.z[j];
      const double nn = d.frobenius_norm();
      pr2 += nn * nn;
    }
    for (size_t i = 0; i < neq; ++i) {
      const double d = w.eqval[i] - p.equalities[i].rhs;
      pr2 += d * d;
    }
    primal_inf = std::sqrt(pr2);

    // || cint + rho (L^* U + A^T u) ||: stationarity defect of the x step
    // with the duals implied by the scaled multipliers.
    w.work.set_zero();
    w.work.add_scaled(cint, 1.0);
    for (auto& m : w.form_acc) m.set_zero();
    for (const auto& lc : c.locals)
      w.work[lc.block].add_scaled(w.uu[lc.ci], cplx(rho * lc.coeff, 0.0));
    for (const auto& cone : c.coupled) {
      const auto& pc = p.constraints[cone.ci];
      for (size_t t = 0; t < cone.terms.size(); ++t)
        w.form_acc[cone.terms[t].form].add_scaled(w.uu[cone.ci],
                                                  cplx(pc.terms[t].coeff, 0.0));
    }
    for (size_t f = 0; f < c.forms.size(); ++f)
      c.forms[f]->add_adjoint(w.form_acc[f], w.work, rho);
    for (size_t i = 0; i < neq; ++i)
      w.work.add_scaled(p.equalities[i].coeffs, rho * w.eq_u[i]);
    dual_inf = w.work.norm();

    pobj = cint.dot(w.x);
    dobj = 0.0;
    for (size_t j = 0; j < ncone; ++j)
      dobj += rho * inner(w.uu[j], p.constraints[j].offset);
    for (size_t i = 0; i < neq; ++i) dobj -= rho * w.eq_u[i] * p.equalities[i].rhs;
    gap = std::abs(pobj - dobj);
  }

  void rescale_duals(double factor) {
    for (auto& m : w.uu) m *= cplx(factor, 0.0);
    for (auto& v : w.eq_u) v *= factor;
  }

  // ---- fixed-point state (Z, U, eq_u) for acceleration ----
  int state_len() const {
    int n = 0;
    for (size_t j = 0; j < ncone; ++j) n += 2 * svec_len(p.constraints[j].dim());
    return n + static_cast<int>(neq);
  }
  void save_state(double* out) const {
    for (size_t j = 0; j < ncone; ++j) {
      const int len = svec_len(p.constraints[j].dim());
      svec_write(w.z[j], out);
      svec_write(w.uu[j], out + len);
      out += 2 * len;
    }
    for (size_t i = 0; i < neq; ++i) out[i] = w.eq_u[i];
  }
  void load_state(const double* in) {
    for (size_t j = 0; j < ncone; ++j) {
      const int len = svec_len(p.constraints[j].dim());
      svec_read(in, w.z[j]);
      svec_read(in + len, w.uu[j]);
      in += 2 * len;
    }
    for (size_t i = 0; i < neq; ++i) w.eq_u[i] = in[i];
  }
};

// Anderson acceleration (type II) over the ADMM fixed-point map, with a
// residual-growth safeguard that falls back to plain iterations.
struct Anderson {
  int slen = 0;
  int mem = 10;
  std::vector<std::vector<double>> dv, dg;  // difference history
  std::vector<double> v_prev, g_prev;
  bool have_prev = false;

  explicit Anderson(int n) : slen(n) {}

  void clear() {
    dv.clear();
    dg.clear();
    have_prev = false;
  }

  static double norm(const std::vector<double>& a) {
    double s = 0.0;
    for (double x : a) s += x * x;
    return std::sqrt(s);
  }

  // Record one (state, residual) pair into the difference history.
  void remember(const std::vector<double>& v, const std::vector<double>& g) {
    if (have_prev) {
      std::vector<double> dvv(slen), dgg(slen);
      for (int i = 0; i < slen; ++i) {
        dvv[i] = v[i] - v_prev[i];
        dgg[i] = g[i] - g_prev[i];
      }
      dv.push_back(std::move(dvv));
      dg.push_back(std::move(dgg));
      if (static_cast<int>(dv.size()) > mem) {
        dv.erase(dv.begin());
        dg.erase(dg.begin());
      }
    }
    v_prev = v;
    g_prev = g;
    have_prev = true;
  }

  // Candidate state from the current history: accel = wst - (dV + dG) theta
  // with theta the regularized least-squares combination of residual
  // differences. Returns false when no usable candidate exists.
  bool propose(const std::vector<double>& wst, const std::vector<double>& g,
               std::vector<double>& accel) {
    bool ok = false;
    const int m = static_cast<int>(dv.size());
    if (m > 0) {
      // theta = argmin || g - dG theta ||, via regularized normal equations.
      std::vector<double> gram(static_cast<size_t>(m) * m, 0.0);
      std::vector<double> rhs(m, 0.0);
      double diag_scale = 0.0;
      for (int a = 0; a < m; ++a) {
        for (int b = a; b < m; ++b) {
          double s = 0.0;
          for (int i = 0; i < slen; ++i) s += dg[a][i] * dg[b][i];
          gram[a * m + b] = s;
          gram[b * m + a] = s;
        }
        diag_scale = std::max(diag_scale, gram[a * m + a]);
        double s = 0.0;
        for (int i = 0; i < slen; ++i) s += dg[a][i] * g[i];
        rhs[a] = s;
      }
      const double lambda = 1e-12 * std::max(diag_scale, 1e-30);
      for (int a = 0; a < m; ++a) gram[a * m + a] += lambda;
      RealLu lu;
      bool solved = true;
      try {
        lu.factor(std::move(gram), m);
        lu.solve(rhs.data());
      } catch (const SolverError&) {
        solved = false;
      }
      if (solved) {
        double tn = 0.0;
        for (double t : rhs) tn += t * t;
        if (std::isfinite(tn) && tn < 1e12) {
          accel = wst;
          for (int a = 0; a < m; ++a) {
            const double t = rhs[a];
            if (t == 0.0) continue;
            const auto& dva = dv[a];
            const auto& dga = dg[a];
            for (int i = 0; i < slen; ++i) accel[i] -= t * (dva[i] + dga[i]);
          }
          double an = 0.0;
          for (double x : accel) an += x * x;
          ok = std::isfinite(an);
        }
      }
    }
    return ok;
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

SdpSolution solve(const SdpProblem& p, const SolverOptions& opts) {
  p.validate();
  if (auto ipm = solve_interior_point(p, opts)) return *ipm;
  Compiled c = compile(p);
  Loop loop(p, c, opts);
  const size_t nb = c.dims.size();
  const double sgn = (p.sense == Sense::maximize) ? -1.0 : 1.0;

  const int slen = loop.state_len();
  Anderson aa(slen);
  std::vector<double> v(slen), wst(slen), g(slen), accel(slen);
  // Safeguard bookkeeping: the last accepted plain-chain state and its
  // fixed-point residual. An accelerated candidate whose follow-up residual
  // exceeds the baseline is rolled back.
  std::vector<double> plain_state(slen);
  double plain_res = 1e300;
  bool last_was_aa = false;
  bool have_plain = false;

  double best_combined = 1e300;
  double best_dual = -1e300;
  long best_iter = 0;
  Collection best_x = loop.w.x;
  std::vector<ComplexMatrix> best_uu = loop.w.uu;
  std::vector<double> best_eq_u = loop.w.eq_u;
  double best_rho = loop.rho;

  double window_resid = 1e300;
  int stall_windows = 0;
  bool flagged_infeasible = false;
  bool converged = false;
  long iter = 0;

  for (iter = 1; iter <= opts.max_iters; ++iter) {
    loop.save_state(v.data());
    loop.iterate();
    loop.save_state(wst.data());
    for (int i = 0; i < slen; ++i) g[i] = wst[i] - v[i];
    const double res = Anderson::norm(g);

    if (last_was_aa && res > plain_res) {
      // The accelerated candidate regressed: discard it and resume the plain
      // chain from the last accepted iterate.
      loop.load_state(plain_state.data());
      aa.clear();
      last_was_aa = false;
      continue;
    }
    plain_state = wst;
    plain_res = res;
    have_plain = true;
    aa.remember(v, g);

    const bool check = (iter % opts.check_every == 0) || iter == opts.max_iters;
    if (check) {
      loop.compute_residuals();
      if (std::getenv("PROCQ_ADMM_TRACE"))
        std::fprintf(stderr, "admm iter %6ld rp %.3e rd %.3e gap %.3e rho %.2e pobj %.8f\n",
                     iter, loop.primal_inf, loop.dual_inf, loop.gap, loop.rho, loop.pobj);
      if (loop.dual_inf <= 10.0 * opts.tol) best_dual = std::max(best_dual, loop.dobj);

      const double combined = std::max(loop.primal_inf, loop.dual_inf);
      if (combined < best_combined) {
        best_combined = combined;
        best_x = loop.w.x;
        best_uu = loop.w.uu;
        best_eq_u = loop.w.eq_u;
        best_rho = loop.rho;
        best_iter = iter;
      }

      const double gap_tol =
          std::max(10.0 * opts.tol, 1e-6) * std::max(1.0, std::abs(loop.pobj));
      if (loop.primal_inf <= opts.tol && loop.dual_inf <= opts.tol && loop.gap <= gap_tol) {
        converged = true;
        break;
      }

      if (iter % 500 == 0) {
        const double cur = combined;
        if (iter >= 2000 && cur > 1e-4 && cur > 0.99 * window_resid) {
          if (++stall_windows >= 2) {
            flagged_infeasible = true;
            break;
          }
        } else {
          stall_windows = 0;
        }
        window_resid = cur;
      }

      if (iter % opts.balance_every == 0) {
        bool changed = false;
        if (loop.primal_inf > 10.0 * loop.dual_inf && loop.rho < 1e6) {
          loop.rho *= 2.0;
          loop.rescale_duals(0.5);
          changed = true;
        } else if (loop.dual_inf > 10.0 * loop.primal_inf && loop.rho > 1e-6) {
          loop.rho *= 0.5;
          loop.rescale_duals(2.0);
          changed = true;
        }
        if (changed) {
          // The fixed-point map changed; restart acceleration from here.
          aa.clear();
          last_was_aa = false;
          plain_res = 1e300;
          loop.save_state(plain_state.data());
          continue;
        }
      }
    }

    if (have_plain && aa.propose(wst, g, accel)) {
      loop.load_state(accel.data());
      last_was_aa = true;
    } else {
      last_was_aa = false;
    }
  }

  SdpSolution sol;
  const bool use_best =
      !converged && best_combined < std::max(loop.primal_inf, loop.dual_inf);
  const Collection& xr = use_best ? best_x : loop.w.x;
  const auto& uur = use_best ? best_uu : loop.w.uu;
  const auto& equr = use_best ? best_eq_u : loop.w.eq_u;
  const double rhor = use_best ? best_rho : loop.rho;

  sol.block_values.reserve(nb);
  for (size_t b = 0; b < nb; ++b) {
    ComplexMatrix m = xr[b];
    m.hermitize();
    sol.block_values.push_back(std::move(m));
  }
  Collection cint(c.dims);
  cint.add_scaled(p.objective, sgn);
  double pobj_final = 0.0;
  for (size_t b = 0; b < nb; ++b) pobj_final += inner(cint[b], xr[b]);
  sol.objective_value = sgn * pobj_final + p.objective_offset;
  sol.status = converged ? SolveStatus::optimal
                         : (flagged_infeasible ? SolveStatus::infeasible_suspected
                                               : SolveStatus::max_iters);
  sol.primal_residual = loop.primal_inf;
  sol.dual_residual = loop.dual_inf;
  sol.gap = loop.gap;
  sol.iters = converged || flagged_infeasible ? iter : (use_best ? best_iter : iter - 1);
  sol.best_dual_bound = best_dual;
  sol.psd_duals.reserve(p.constraints.size());
  for (size_t j = 0; j < p.constraints.size(); ++j) {
    ComplexMatrix y = uur[j];
    y *= cplx(-rhor, 0.0);
    y.hermitize();
    sol.psd_duals.push_back(std::move(y));
  }
  sol.eq_duals.reserve(p.equalities.size());
  for (double u : equr) sol.eq_duals.push_back(-rhor * u);
  return sol;
}

}  // namespace procq::sdp
