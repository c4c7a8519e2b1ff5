// Dense interior-point path for small and medium problems. The splitting
// solver handles the large structured programs; on Slater-degenerate
// instances (rank-deficient process matrices in the composition program) it
// converges sublinearly, while a primal-dual predictor-corrector with HKM
// scaling reaches 1e-8 residuals in a few dozen iterations. Problems route
// here when every decision block carries its own PSD cone and the dense
// Schur complement is affordable.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <cstdio>
#include <cstdlib>
#include <optional>

#include "procq/sdp.hpp"

namespace procq::sdp {

namespace {

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

struct StdBlock {
  int dim = 0;
  int offset = 0;  // svec offset into the x vector
};

// min <c, x> s.t. A x = b, x in a product of PSD cones (svec coordinates).
struct StdForm {
  std::vector<StdBlock> blocks;
  int n = 0;
  int m = 0;
  std::vector<double> c;
  std::vector<double> a;  // m x n row-major
  std::vector<double> b;

  // Bookkeeping to translate the solution back.
  std::vector<int> block_of_decision;      // cone block index per problem block
  std::vector<int> conerep_constraint;     // the X >= 0 constraint per problem block
  std::vector<int> slack_block_of;         // cone block per non-local constraint, -1 otherwise
  std::vector<int> row_offset_of;          // A-row offset per non-local constraint
  std::vector<int> eq_rows;                // A-row per equality
};

// A problem qualifies when every decision block has a plain X >= 0
// constraint (so it is a cone variable) and the dense normal-equations cost
// stays reasonable.
std::optional<StdForm> to_standard_form(const SdpProblem& p) {
  const auto dims = p.block_dims();
  const size_t nblocks = dims.size();

  StdForm f;
  f.block_of_decision.assign(nblocks, -1);
  f.conerep_constraint.assign(nblocks, -1);
  f.slack_block_of.assign(p.constraints.size(), -1);
  f.row_offset_of.assign(p.constraints.size(), -1);

  for (size_t ci = 0; ci < p.constraints.size(); ++ci) {
    const auto& pc = p.constraints[ci];
    if (pc.terms.size() != 1) continue;
    auto bl = pc.terms[0].form->block_local();
    if (!bl) continue;
    const int b = bl->first;
    if (f.conerep_constraint[b] >= 0) continue;  // first one wins
    if (pc.terms[0].coeff * bl->second != 1.0) continue;
    if (pc.offset.frobenius_norm() != 0.0) continue;
    f.conerep_constraint[b] = static_cast<int>(ci);
  }
  for (size_t b = 0; b < nblocks; ++b)
    if (f.conerep_constraint[b] < 0) return std::nullopt;

  // Layout: decision blocks first, then one slack block per remaining PSD
  // constraint.
  int off = 0;
  for (size_t b = 0; b < nblocks; ++b) {
    f.blocks.push_back({dims[b], off});
    f.block_of_decision[b] = static_cast<int>(b);
    off += svec_len(dims[b]);
  }
  std::vector<int> slack_constraints;
  for (size_t ci = 0; ci < p.constraints.size(); ++ci) {
    bool is_conerep = false;
    for (size_t b = 0; b < nblocks; ++b)
      is_conerep = is_conerep || f.conerep_constraint[b] == static_cast<int>(ci);
    if (is_conerep) continue;
    f.slack_block_of[ci] = static_cast<int>(f.blocks.size());
    f.blocks.push_back({p.constraints[ci].dim(), off});
    off += svec_len(p.constraints[ci].dim());
    slack_constraints.push_back(static_cast<int>(ci));
  }
  f.n = off;

  int rows = 0;
  for (int ci : slack_constraints) rows += svec_len(p.constraints[ci].dim());
  rows += static_cast<int>(p.equalities.size());
  f.m = rows;

  // Cost gate on the dense normal equations.
  const double cost = static_cast<double>(f.m) * f.m * f.n +
                      static_cast<double>(f.m) * f.m * f.m;
  if (cost > 1.2e10 || f.m == 0) return std::nullopt;

  f.c.assign(f.n, 0.0);
  const double sgn = (p.sense == Sense::maximize) ? -1.0 : 1.0;
  for (size_t b = 0; b < nblocks; ++b) {
    ComplexMatrix cb = p.objective[b];
    cb *= cplx(sgn, 0.0);
    svec_write(cb, f.c.data() + f.blocks[b].offset);
  }

  f.a.assign(static_cast<size_t>(f.m) * f.n, 0.0);
  f.b.assign(f.m, 0.0);
  int row = 0;
  Collection basis_adj(dims);
  for (int ci : slack_constraints) {
    const auto& pc = p.constraints[ci];
    const int d = pc.dim();
    const int len = svec_len(d);
    f.row_offset_of[ci] = row;
    // Rows: svec(L(x_dec)) - svec(S) = -svec(F). Row k of L is the adjoint
    // applied to the k-th svec basis element of the output space.
    std::vector<double> e(len, 0.0);
    ComplexMatrix em(d);
    for (int k = 0; k < len; ++k) {
      std::fill(e.begin(), e.end(), 0.0);
      e[k] = 1.0;
      svec_read(e.data(), em);
      basis_adj.set_zero();
      for (const auto& t : pc.terms) t.form->add_adjoint(em, basis_adj, t.coeff);
      double* arow = f.a.data() + static_cast<size_t>(row) * f.n;
      for (size_t b = 0; b < nblocks; ++b)
        svec_write(basis_adj[b], arow + f.blocks[b].offset);
      arow[f.blocks[f.slack_block_of[ci]].offset + k] = -1.0;
      ++row;
    }
    std::vector<double> fv(len);
    svec_write(pc.offset, fv.data());
    for (int k = 0; k < len; ++k) f.b[f.row_offset_of[ci] + k] = -fv[k];
  }
  for (size_t i = 0; i < p.equalities.size(); ++i) {
    f.eq_rows.push_back(row);
    double* arow = f.a.data() + static_cast<size_t>(row) * f.n;
    for (size_t b = 0; b < nblocks; ++b)
      svec_write(p.equalities[i].coeffs[b], arow + f.blocks[b].offset);
    f.b[row] = p.equalities[i].rhs;
    ++row;
  }
  return f;
}

// Dense LU for the (nonsymmetric) HKM Schur complement.
struct DenseLu {
  int n = 0;
  std::vector<double> a;
  std::vector<int> piv;
  bool factor(std::vector<double> mat, int dim) {
    n = dim;
    a = std::move(mat);
    piv.assign(n, 0);
    for (int k = 0; k < n; ++k) {
      int p = k;
      double best = std::abs(a[static_cast<size_t>(k) * n + k]);
      for (int i = k + 1; i < n; ++i)
        if (std::abs(a[static_cast<size_t>(i) * n + k]) > best) {
          best = std::abs(a[static_cast<size_t>(i) * n + k]);
          p = i;
        }
      if (best <= 0.0) return false;
      piv[k] = p;
      if (p != k)
        for (int j = 0; j < n; ++j)
          std::swap(a[static_cast<size_t>(k) * n + j], a[static_cast<size_t>(p) * n + j]);
      const double inv = 1.0 / a[static_cast<size_t>(k) * n + k];
      for (int i = k + 1; i < n; ++i) {
        const double l = a[static_cast<size_t>(i) * n + k] * inv;
        a[static_cast<size_t>(i) * n + k] = l;
        if (l == 0.0) continue;
        for (int j = k + 1; j < n; ++j)
          a[static_cast<size_t>(i) * n + j] -= l * a[static_cast<size_t>(k) * n + j];
      }
    }
    return true;
  }
  void solve(double* v) const {
    for (int k = 0; k < n; ++k)
      if (piv[k] != k) std::swap(v[k], v[piv[k]]);
    for (int i = 1; i < n; ++i)
      for (int j = 0; j < i; ++j) v[i] -= a[static_cast<size_t>(i) * n + j] * v[j];
    for (int i = n - 1; i >= 0; --i) {
      for (int j = i + 1; j < n; ++j) v[i] -= a[static_cast<size_t>(i) * n + j] * v[j];
      v[i] /= a[static_cast<size_t>(i) * n + i];
    }
  }
};

struct IpmState {
  const StdForm& f;
  std::vector<ComplexMatrix> x, z;  // per cone block
  std::vector<double> y;

  explicit IpmState(const StdForm& form) : f(form), y(form.m, 0.0) {
    for (const auto& bl : f.blocks) {
      x.push_back(ComplexMatrix::identity(bl.dim));
      z.push_back(ComplexMatrix::identity(bl.dim));
    }
  }

  double mu() const {
    double s = 0.0;
    int nu = 0;
    for (size_t j = 0; j < x.size(); ++j) {
      s += inner(x[j], z[j]);
      nu += x[j].dim();
    }
    return s / nu;
  }
};

void gather(const StdForm& f, const std::vector<ComplexMatrix>& mats, std::vector<double>& v) {
  for (size_t j = 0; j < f.blocks.size(); ++j)
    svec_write(mats[j], v.data() + f.blocks[j].offset);
}

void scatter(const StdForm& f, const double* v, std::vector<ComplexMatrix>& mats) {
  for (size_t j = 0; j < f.blocks.size(); ++j) svec_read(v + f.blocks[j].offset, mats[j]);
}

// Largest step alpha in [0, 1] keeping x + alpha dx PSD, via the minimum
// eigenvalue of x^{-1/2} dx x^{-1/2}.
double max_step(const ComplexMatrix& x, const ComplexMatrix& dx) {
  auto eig = hermitian_eig(x);
  const int d = x.dim();
  ComplexMatrix isqrt(d);
  for (int k = 0; k < d; ++k) {
    const double lam = std::max(eig.eigenvalues[k], 1e-300);
    const double w = 1.0 / std::sqrt(lam);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        isqrt(i, j) += w * eig.eigenvectors(i, k) * std::conj(eig.eigenvectors(j, k));
  }
  ComplexMatrix t1(d), t2(d);
  matmul(isqrt, dx, t1);
  matmul(t1, isqrt, t2);
  t2.hermitize();
  auto e2 = hermitian_eig(t2);
  const double lo = e2.eigenvalues.empty() ? 0.0 : e2.eigenvalues.front();
  if (lo >= 0.0) return 1.0;
  return std::min(1.0, -1.0 / lo);
}

struct IpmResult {
  bool converged = false;
  int iters = 0;
  double rp_norm = 0.0, rd_norm = 0.0, gap = 0.0;
};

IpmResult ipm_solve(const StdForm& f, IpmState& s, double tol, int max_iters) {
  const int m = f.m;
  const int n = f.n;
  std::vector<double> xv(n), zv(n), cv = f.c;
  std::vector<double> rp(m), rd(n);
  std::vector<ComplexMatrix> zinv(f.blocks.size());
  std::vector<ComplexMatrix> rdm(f.blocks.size());
  for (size_t j = 0; j < f.blocks.size(); ++j) rdm[j] = ComplexMatrix(f.blocks[j].dim);

  double bnorm = 1.0, cnorm = 1.0;
  for (double v : f.b) bnorm += v * v;
  for (double v : f.c) cnorm += v * v;
  bnorm = std::sqrt(bnorm);
  cnorm = std::sqrt(cnorm);

  IpmResult res;
  double prev_rp = 1e300, prev_mu = 1e300;
  double last_alpha = 0.0, last_sigma = 0.0;
  int stalled = 0;
  for (int iter = 1; iter <= max_iters; ++iter) {
    res.iters = iter;
    gather(f, s.x, xv);
    gather(f, s.z, zv);

    // rp = b - A x ; rd = c - A^T y - z
    for (int i = 0; i < m; ++i) {
      const double* arow = f.a.data() + static_cast<size_t>(i) * n;
      double dot = 0.0;
      for (int k = 0; k < n; ++k) dot += arow[k] * xv[k];
      rp[i] = f.b[i] - dot;
    }
    for (int k = 0; k < n; ++k) rd[k] = cv[k] - zv[k];
    for (int i = 0; i < m; ++i) {
      const double yi = s.y[i];
      if (yi == 0.0) continue;
      const double* arow = f.a.data() + static_cast<size_t>(i) * n;
      for (int k = 0; k < n; ++k) rd[k] -= yi * arow[k];
    }

    double rpn = 0.0, rdn = 0.0;
    for (double v : rp) rpn += v * v;
    for (double v : rd) rdn += v * v;
    rpn = std::sqrt(rpn);
    rdn = std::sqrt(rdn);
    const double mu = s.mu();
    double pobj = 0.0, dobj = 0.0;
    for (int k = 0; k < n; ++k) pobj += cv[k] * xv[k];
    for (int i = 0; i < m; ++i) dobj += f.b[i] * s.y[i];
    res.rp_norm = rpn;
    res.rd_norm = rdn;
    res.gap = std::abs(pobj - dobj);

    if (std::getenv("PROCQ_IPM_TRACE"))
      std::fprintf(stderr, "ipm iter %3d rp %.3e rd %.3e mu %.3e gap %.3e alpha %.3e sigma %.3e\n",
                   iter, rpn, rdn, mu, res.gap, last_alpha, last_sigma);
    if (rpn <= tol && rdn <= tol &&
        res.gap <= std::max(10.0 * tol, 1e-7) * std::max(1.0, std::abs(pobj))) {
      res.converged = true;
      return res;
    }
    if (!std::isfinite(rpn) || !std::isfinite(rdn) || !std::isfinite(mu)) return res;
    // Pinned against the boundary: hand over to the polishing step.
    if (std::abs(rpn - prev_rp) <= 1e-6 * std::max(prev_rp, 1e-300) &&
        std::abs(mu - prev_mu) <= 1e-6 * std::max(prev_mu, 1e-300)) {
      if (++stalled >= 5) return res;
    } else {
      stalled = 0;
    }
    prev_rp = rpn;
    prev_mu = mu;

    scatter(f, rd.data(), rdm);
    // Inverse through the spectral decomposition with a floor: near the
    // optimum the slack duals of degenerate constraints are legitimately
    // rank-deficient and a plain LU breaks down.
    for (size_t j = 0; j < f.blocks.size(); ++j) {
      auto eig = hermitian_eig(s.z[j]);
      const int d = s.z[j].dim();
      const double floor_val = std::max(1e-14 * std::max(1.0, eig.eigenvalues.back()), 1e-30);
      ComplexMatrix inv(d);
      for (int k = 0; k < d; ++k) {
        const double w = 1.0 / std::max(eig.eigenvalues[k], floor_val);
        for (int i = 0; i < d; ++i)
          for (int jc = 0; jc < d; ++jc)
            inv(i, jc) += w * eig.eigenvectors(i, k) * std::conj(eig.eigenvectors(jc, k));
      }
      inv.hermitize();
      zinv[j] = std::move(inv);
    }

    // HKM Schur complement M_{ik} = <a_i, svec(sym(X mat(a_k) Z^{-1}))>.
    // Build E A^T once: column k holds svec(sym(X mat(a_k) Z^{-1})).
    std::vector<double> eat(static_cast<size_t>(m) * n);
    {
      std::vector<ComplexMatrix> arow_m(f.blocks.size());
      for (size_t j = 0; j < f.blocks.size(); ++j)
        arow_m[j] = ComplexMatrix(f.blocks[j].dim);
      for (int i = 0; i < m; ++i) {
        scatter(f, f.a.data() + static_cast<size_t>(i) * n, arow_m);
        double* out = eat.data() + static_cast<size_t>(i) * n;
        for (size_t j = 0; j < f.blocks.size(); ++j) {
          const int d = f.blocks[j].dim;
          ComplexMatrix t1(d), t2(d);
          matmul(s.x[j], arow_m[j], t1);
          matmul(t1, zinv[j], t2);
          t2.hermitize();
          svec_write(t2, out + f.blocks[j].offset);
        }
      }
    }
    std::vector<double> mmat(static_cast<size_t>(m) * m, 0.0);
    for (int i = 0; i < m; ++i) {
      const double* arow = f.a.data() + static_cast<size_t>(i) * n;
      for (int k = 0; k < m; ++k) {
        const double* ek = eat.data() + static_cast<size_t>(k) * n;
        double sdot = 0.0;
        for (int t = 0; t < n; ++t) sdot += arow[t] * ek[t];
        mmat[static_cast<size_t>(i) * m + k] = sdot;
      }
    }
    // Equilibrate before factoring: near convergence the scaled entries span
    // ~12 orders of magnitude and an unscaled regularization wrecks the
    // direction.
    std::vector<double> scal(m);
    for (int i = 0; i < m; ++i) {
      const double d = std::abs(mmat[static_cast<size_t>(i) * m + i]);
      scal[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 1.0;
    }
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < m; ++k) mmat[static_cast<size_t>(i) * m + k] *= scal[i] * scal[k];
    for (int i = 0; i < m; ++i) mmat[static_cast<size_t>(i) * m + i] += 1e-12;
    DenseLu lu;
    if (!lu.factor(std::move(mmat), m)) return res;
    auto schur_solve = [&](double* v) {
      for (int i = 0; i < m; ++i) v[i] *= scal[i];
      lu.solve(v);
      for (int i = 0; i < m; ++i) v[i] *= scal[i];
    };

    auto solve_direction = [&](double sigma_mu, const std::vector<ComplexMatrix>* corr,
                               std::vector<ComplexMatrix>& dx, std::vector<ComplexMatrix>& dz,
                               std::vector<double>& dy) {
      // dX = sigma_mu Z^{-1} - X - X (Rd - mat(A^T dy)) Z^{-1} - corr term
      // with A dX = rp pinning dy.
      std::vector<double> rhs = rp;
      std::vector<double> tmp(n);
      std::vector<ComplexMatrix> base(f.blocks.size());
      for (size_t j = 0; j < f.blocks.size(); ++j) {
        const int d = f.blocks[j].dim;
        ComplexMatrix t1(d), t2(d);
        matmul(s.x[j], rdm[j], t1);
        matmul(t1, zinv[j], t2);
        ComplexMatrix bj(d);
        bj.add_scaled(zinv[j], cplx(sigma_mu, 0.0));
        bj -= s.x[j];
        bj -= t2;
        if (corr) {
          matmul((*corr)[j], zinv[j], t1);
          bj -= t1;
        }
        bj.hermitize();
        base[j] = std::move(bj);
      }
      gather(f, base, tmp);
      for (int i = 0; i < m; ++i) {
        const double* arow = f.a.data() + static_cast<size_t>(i) * n;
        double dot = 0.0;
        for (int k = 0; k < n; ++k) dot += arow[k] * tmp[k];
        rhs[i] -= dot;
      }
      schur_solve(rhs.data());
      dy = rhs;
      // dZ = Rd - mat(A^T dy); dX = base + X mat(A^T dy) Z^{-1}.
      std::vector<double> aty(n, 0.0);
      for (int i = 0; i < m; ++i) {
        const double yi = dy[i];
        if (yi == 0.0) continue;
        const double* arow = f.a.data() + static_cast<size_t>(i) * n;
        for (int k = 0; k < n; ++k) aty[k] += yi * arow[k];
      }
      std::vector<ComplexMatrix> atym(f.blocks.size());
      for (size_t j = 0; j < f.blocks.size(); ++j) atym[j] = ComplexMatrix(f.blocks[j].dim);
      scatter(f, aty.data(), atym);
      dx.resize(f.blocks.size());
      dz.resize(f.blocks.size());
      for (size_t j = 0; j < f.blocks.size(); ++j) {
        const int d = f.blocks[j].dim;
        dz[j] = rdm[j];
        dz[j] -= atym[j];
        ComplexMatrix t1(d), t2(d);
        matmul(s.x[j], atym[j], t1);
        matmul(t1, zinv[j], t2);
        t2.hermitize();
        dx[j] = base[j];
        dx[j] += t2;
        dx[j].hermitize();
      }
    };

    // Predictor.
    std::vector<ComplexMatrix> dx_aff, dz_aff;
    std::vector<double> dy_aff;
    solve_direction(0.0, nullptr, dx_aff, dz_aff, dy_aff);
    double ap = 1.0, ad = 1.0;
    for (size_t j = 0; j < f.blocks.size(); ++j) {
      ap = std::min(ap, max_step(s.x[j], dx_aff[j]));
      ad = std::min(ad, max_step(s.z[j], dz_aff[j]));
    }
    double mu_aff = 0.0;
    int nu = 0;
    for (size_t j = 0; j < f.blocks.size(); ++j) {
      ComplexMatrix xa = s.x[j];
      xa.add_scaled(dx_aff[j], cplx(ap, 0.0));
      ComplexMatrix za = s.z[j];
      za.add_scaled(dz_aff[j], cplx(ad, 0.0));
      mu_aff += inner(xa, za);
      nu += xa.dim();
    }
    mu_aff /= nu;
    double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);
    // Keep centering while infeasibility dominates complementarity; letting
    // mu collapse first strands the iterate at the boundary with a residual
    // it can no longer repair.
    const double infeas = std::max(rpn / bnorm, rdn / cnorm);
    if (infeas > mu) sigma = std::max(sigma, 0.5);

    // Corrector with the Mehrotra term dX_aff dZ_aff.
    std::vector<ComplexMatrix> corr(f.blocks.size());
    for (size_t j = 0; j < f.blocks.size(); ++j) {
      const int d = f.blocks[j].dim;
      ComplexMatrix t1(d);
      matmul(dx_aff[j], dz_aff[j], t1);
      corr[j] = std::move(t1);
    }
    std::vector<ComplexMatrix> dx, dz;
    std::vector<double> dy;
    solve_direction(sigma * mu, &corr, dx, dz, dy);

    ap = 1.0;
    ad = 1.0;
    for (size_t j = 0; j < f.blocks.size(); ++j) {
      ap = std::min(ap, max_step(s.x[j], dx[j]));
      ad = std::min(ad, max_step(s.z[j], dz[j]));
    }
    // A shared step length keeps primal and dual progress in lockstep;
    // independent steps let mu race ahead of the infeasibilities on
    // degenerate instances.
    const double alpha = std::min(1.0, 0.98 * std::min(ap, ad));
    last_alpha = alpha;
    last_sigma = sigma;
    for (size_t j = 0; j < f.blocks.size(); ++j) {
      s.x[j].add_scaled(dx[j], cplx(alpha, 0.0));
      s.z[j].add_scaled(dz[j], cplx(alpha, 0.0));
      s.x[j].hermitize();
      s.z[j].hermitize();
    }
    for (int i = 0; i < m; ++i) s.y[i] += alpha * dy[i];
  }
  return res;
}

// On degenerate instances the iteration can pin against the cone boundary
// with a frozen primal residual while mu and the dual residual are already
// tight. The optimal face is identified at that point, so project each block
// onto its face and solve the feasibility least squares there; any
// complementary feasible point on the face satisfies the KKT conditions.
bool polish_at_cutoff(const StdForm& f, IpmState& s, double tol, IpmResult& r,
                      double rel_cut) {
  const int m = f.m;
  const int n = f.n;
  // Face bases from the block spectra.
  std::vector<ComplexMatrix> face(f.blocks.size());
  std::vector<int> rank(f.blocks.size());
  int p_total = 0;
  for (size_t j = 0; j < f.blocks.size(); ++j) {
    auto eig = hermitian_eig(s.x[j]);
    const int d = s.x[j].dim();
    const double top = std::max(eig.eigenvalues.empty() ? 0.0 : eig.eigenvalues.back(), 0.0);
    // rel_cut < 0 keeps the whole block (full-space correction).
    const double cut = rel_cut < 0.0 ? -1e300 : std::max(rel_cut * top, 1e-14);
    std::vector<int> keep;
    for (int k = 0; k < d; ++k)
      if (eig.eigenvalues[k] > cut) keep.push_back(k);
    rank[j] = static_cast<int>(keep.size());
    ComplexMatrix fb(d);  // first rank[j] columns hold the face basis
    for (int c = 0; c < rank[j]; ++c)
      for (int i = 0; i < d; ++i) fb(i, c) = eig.eigenvectors(i, keep[c]);
    face[j] = std::move(fb);
    p_total += rank[j] * rank[j];
  }
  if (p_total == 0 || p_total > 4096) return false;

  // Columns of the reduced system: A * svec(F S_e F^dag) for each face
  // parameter basis element.
  auto embed = [&](const std::vector<ComplexMatrix>& smat, std::vector<double>& xv) {
    for (size_t j = 0; j < f.blocks.size(); ++j) {
      const int d = f.blocks[j].dim;
      ComplexMatrix xb(d);
      for (int a = 0; a < rank[j]; ++a)
        for (int b = 0; b < rank[j]; ++b) {
          const cplx w = smat[j](a, b);
          if (w == cplx(0.0)) continue;
          for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k)
              xb(i, k) += w * face[j](i, a) * std::conj(face[j](k, b));
        }
      xb.hermitize();
      svec_write(xb, xv.data() + f.blocks[j].offset);
    }
  };

  // Start from the face coordinates of the stalled iterate and apply the
  // minimal-norm correction that restores A x = b:
  //   delta = B^T (B B^T)^{-1} rp0,  B = A restricted to the face.
  std::vector<double> bmat(static_cast<size_t>(m) * p_total);
  std::vector<ComplexMatrix> basis(f.blocks.size());
  for (size_t j = 0; j < f.blocks.size(); ++j) basis[j] = ComplexMatrix(rank[j]);
  std::vector<double> xv(n, 0.0);
  int col = 0;
  for (size_t j = 0; j < f.blocks.size(); ++j) {
    const int rj = rank[j];
    std::vector<double> e(svec_len(rj));
    for (int k = 0; k < svec_len(rj); ++k) {
      std::fill(e.begin(), e.end(), 0.0);
      e[k] = 1.0;
      for (auto& bmv : basis) bmv.set_zero();
      svec_read(e.data(), basis[j]);
      std::fill(xv.begin(), xv.end(), 0.0);
      embed(basis, xv);
      for (int i = 0; i < m; ++i) {
        const double* arow = f.a.data() + static_cast<size_t>(i) * n;
        double dot = 0.0;
        for (int t = 0; t < n; ++t) dot += arow[t] * xv[t];
        bmat[static_cast<size_t>(i) * p_total + col] = dot;
      }
      ++col;
    }
  }

  // Face coordinates of the current blocks: S0 = F^dag X F.
  std::vector<double> s0(p_total, 0.0);
  {
    int off = 0;
    for (size_t j = 0; j < f.blocks.size(); ++j) {
      const int d = f.blocks[j].dim;
      const int rj = rank[j];
      ComplexMatrix proj(rj);
      for (int a = 0; a < rj; ++a)
        for (int b = 0; b < rj; ++b) {
          cplx v = 0.0;
          for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k)
              v += std::conj(face[j](i, a)) * s.x[j](i, k) * face[j](k, b);
          proj(a, b) = v;
        }
      proj.hermitize();
      svec_write(proj, s0.data() + off);
      off += svec_len(rj);
    }
  }

  // rp0 at the face-projected point.
  std::vector<double> rp0(m);
  for (int i = 0; i < m; ++i) {
    double dot = 0.0;
    const double* brow = bmat.data() + static_cast<size_t>(i) * p_total;
    for (int k = 0; k < p_total; ++k) dot += brow[k] * s0[k];
    rp0[i] = f.b[i] - dot;
  }

  std::vector<double> gram(static_cast<size_t>(m) * m, 0.0);
  for (int i = 0; i < m; ++i)
    for (int k = i; k < m; ++k) {
      double sdot = 0.0;
      const double* bi = bmat.data() + static_cast<size_t>(i) * p_total;
      const double* bk = bmat.data() + static_cast<size_t>(k) * p_total;
      for (int t = 0; t < p_total; ++t) sdot += bi[t] * bk[t];
      gram[static_cast<size_t>(i) * m + k] = sdot;
      gram[static_cast<size_t>(k) * m + i] = sdot;
    }
  double dscale = 1.0;
  for (int i = 0; i < m; ++i)
    dscale = std::max(dscale, gram[static_cast<size_t>(i) * m + i]);
  for (int i = 0; i < m; ++i) gram[static_cast<size_t>(i) * m + i] += 1e-12 * dscale;
  DenseLu lu;
  if (!lu.factor(std::move(gram), m)) return false;
  std::vector<double> lam = rp0;
  lu.solve(lam.data());
  std::vector<double> snew = s0;
  for (int i = 0; i < m; ++i) {
    const double* brow = bmat.data() + static_cast<size_t>(i) * p_total;
    const double li = lam[i];
    for (int k = 0; k < p_total; ++k) snew[k] += li * brow[k];
  }

  // Reassemble, clip the tiny negative part, and accept only if feasibility
  // actually improved to tolerance.
  std::vector<ComplexMatrix> smat(f.blocks.size());
  int off = 0;
  for (size_t j = 0; j < f.blocks.size(); ++j) {
    smat[j] = ComplexMatrix(rank[j]);
    svec_read(snew.data() + off, smat[j]);
    off += svec_len(rank[j]);
    smat[j] = psd_project(smat[j]);
  }
  std::fill(xv.begin(), xv.end(), 0.0);
  embed(smat, xv);
  double rpn2 = 0.0;
  for (int i = 0; i < m; ++i) {
    const double* arow = f.a.data() + static_cast<size_t>(i) * n;
    double dot = 0.0;
    for (int t = 0; t < n; ++t) dot += arow[t] * xv[t];
    const double d = f.b[i] - dot;
    rpn2 += d * d;
  }
  rpn2 = std::sqrt(rpn2);
  double pobj = 0.0;
  for (int k = 0; k < n; ++k) pobj += f.c[k] * xv[k];
  if (rpn2 < r.rp_norm) {
    // Keep any feasibility improvement; subsequent rounds re-derive the face
    // from the corrected point.
    scatter(f, xv.data(), s.x);
    r.rp_norm = rpn2;
  }
  if (std::getenv("PROCQ_IPM_TRACE"))
    std::fprintf(stderr, "ipm polish cut=%.0e p=%d rp %.3e pobj %.9f\n", rel_cut, p_total,
                 rpn2, pobj);
  if (rpn2 > tol) return false;

  // Dual side: the stalled multipliers certify a b-perturbed problem, so
  // re-solve stationarity A^T y + z = c with z confined to the complementary
  // face of the polished x. Complementarity then gives the exact gap.
  int q_total = 0;
  std::vector<int> null_rank(f.blocks.size());
  for (size_t j = 0; j < f.blocks.size(); ++j) {
    null_rank[j] = f.blocks[j].dim - rank[j];
    q_total += null_rank[j] * null_rank[j];
  }
  if (m + q_total > 4096) return false;
  const int w = m + q_total;
  // Columns: A^T (n x m), then embeddings of the null-face parameters.
  std::vector<double> dmat(static_cast<size_t>(n) * w, 0.0);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < n; ++k)
      dmat[static_cast<size_t>(k) * w + i] = f.a[static_cast<size_t>(i) * n + k];
  {
    int colq = m;
    std::vector<double> xcol(n);
    for (size_t j = 0; j < f.blocks.size(); ++j) {
      const int d = f.blocks[j].dim;
      const int nr = null_rank[j];
      ComplexMatrix gb(d);  // null basis columns
      for (int c = 0; c < nr; ++c)
        for (int i = 0; i < d; ++i) gb(i, c) = face[j](i, rank[j] + c);
      std::vector<double> e(svec_len(nr));
      ComplexMatrix t(nr);
      for (int k = 0; k < svec_len(nr); ++k) {
        std::fill(e.begin(), e.end(), 0.0);
        e[k] = 1.0;
        svec_read(e.data(), t);
        ComplexMatrix zb(d);
        for (int a = 0; a < nr; ++a)
          for (int b = 0; b < nr; ++b) {
            const cplx wv = t(a, b);
            if (wv == cplx(0.0)) continue;
            for (int i = 0; i < d; ++i)
              for (int kk = 0; kk < d; ++kk)
                zb(i, kk) += wv * gb(i, a) * std::conj(gb(kk, b));
          }
        zb.hermitize();
        std::fill(xcol.begin(), xcol.end(), 0.0);
        svec_write(zb, xcol.data() + f.blocks[j].offset);
        for (int kk = 0; kk < n; ++kk) dmat[static_cast<size_t>(kk) * w + colq] = xcol[kk];
        ++colq;
      }
    }
  }
  std::vector<double> ngram(static_cast<size_t>(w) * w, 0.0);
  std::vector<double> nrhs(w, 0.0);
  for (int a = 0; a < w; ++a) {
    for (int b = a; b < w; ++b) {
      double sdot = 0.0;
      for (int k = 0; k < n; ++k)
        sdot += dmat[static_cast<size_t>(k) * w + a] * dmat[static_cast<size_t>(k) * w + b];
      ngram[static_cast<size_t>(a) * w + b] = sdot;
      ngram[static_cast<size_t>(b) * w + a] = sdot;
    }
    double sdot = 0.0;
    for (int k = 0; k < n; ++k) sdot += dmat[static_cast<size_t>(k) * w + a] * f.c[k];
    nrhs[a] = sdot;
  }
  double nscale = 1.0;
  for (int a = 0; a < w; ++a)
    nscale = std::max(nscale, ngram[static_cast<size_t>(a) * w + a]);
  for (int a = 0; a < w; ++a) ngram[static_cast<size_t>(a) * w + a] += 1e-12 * nscale;
  DenseLu dlu;
  if (!dlu.factor(std::move(ngram), w)) return false;
  dlu.solve(nrhs.data());

  std::vector<double> ynew(nrhs.begin(), nrhs.begin() + m);
  std::vector<ComplexMatrix> znew(f.blocks.size());
  {
    int off2 = m;
    for (size_t j = 0; j < f.blocks.size(); ++j) {
      const int d = f.blocks[j].dim;
      const int nr = null_rank[j];
      ComplexMatrix t(nr);
      svec_read(nrhs.data() + off2, t);
      off2 += svec_len(nr);
      t = psd_project(t);
      ComplexMatrix zb(d);
      for (int a = 0; a < nr; ++a)
        for (int b = 0; b < nr; ++b) {
          const cplx wv = t(a, b);
          if (wv == cplx(0.0)) continue;
          for (int i = 0; i < d; ++i)
            for (int kk = 0; kk < d; ++kk)
              zb(i, kk) += wv * face[j](i, rank[j] + a) * std::conj(face[j](kk, rank[j] + b));
        }
      zb.hermitize();
      znew[j] = std::move(zb);
    }
  }
  // rd and gap at the polished pair.
  std::vector<double> zv2(n);
  {
    std::vector<double> tmpv(n);
    for (size_t j = 0; j < f.blocks.size(); ++j)
      svec_write(znew[j], zv2.data() + f.blocks[j].offset);
  }
  double rdn2 = 0.0;
  for (int k = 0; k < n; ++k) {
    double v = f.c[k] - zv2[k];
    for (int i = 0; i < m; ++i) v -= ynew[i] * f.a[static_cast<size_t>(i) * n + k];
    rdn2 += v * v;
  }
  rdn2 = std::sqrt(rdn2);
  double dobj = 0.0;
  for (int i = 0; i < m; ++i) dobj += f.b[i] * ynew[i];
  const double gap = std::abs(pobj - dobj);
  if (std::getenv("PROCQ_IPM_TRACE"))
    std::fprintf(stderr, "ipm polish dual rd %.3e gap %.3e dobj %.9f\n", rdn2, gap, dobj);
  if (rdn2 > tol) return false;
  if (gap > std::max(10.0 * tol, 1e-7) * std::max(1.0, std::abs(pobj))) return false;
  s.y = std::move(ynew);
  s.z = std::move(znew);
  r.rd_norm = rdn2;
  r.gap = gap;
  r.converged = true;
  return true;
}

bool polish(const StdForm& f, IpmState& s, double tol, IpmResult& r) {
  for (int round = 0; round < 6; ++round) {
    const double before = r.rp_norm;
    for (double cut : {1e-7, 1e-9, -1.0})
      if (polish_at_cutoff(f, s, tol, r, cut)) return true;
    if (r.rp_norm > 0.5 * before) break;  // no longer contracting
  }
  return false;
}

}  // namespace

std::optional<SdpSolution> solve_interior_point(const SdpProblem& p, const SolverOptions& opts) {
  auto form = to_standard_form(p);
  if (!form) return std::nullopt;
  const StdForm& f = *form;

  IpmState state(f);
  const int cap = static_cast<int>(std::min<long>(200, std::max<long>(50, opts.max_iters)));
  IpmResult r;
  try {
    r = ipm_solve(f, state, opts.tol, cap);
    if (!r.converged && r.rd_norm <= opts.tol && r.rp_norm <= 1e-3)
      polish(f, state, opts.tol, r);
  } catch (const Error&) {
    return std::nullopt;  // numerical breakdown; the caller falls back
  }
  if (!r.converged) return std::nullopt;

  const auto dims = p.block_dims();
  const double sgn = (p.sense == Sense::maximize) ? -1.0 : 1.0;
  SdpSolution sol;
  sol.status = SolveStatus::optimal;
  sol.iters = r.iters;
  sol.primal_residual = r.rp_norm;
  sol.dual_residual = r.rd_norm;
  sol.gap = r.gap;

  double pobj = 0.0;
  for (size_t b = 0; b < dims.size(); ++b) {
    ComplexMatrix xb = state.x[f.block_of_decision[b]];
    xb.hermitize();
    pobj += inner(p.objective[b], xb) * sgn;
    sol.block_values.push_back(std::move(xb));
  }
  sol.objective_value = sgn * pobj + p.objective_offset;
  double dobj = 0.0;
  for (int i = 0; i < f.m; ++i) dobj += f.b[i] * state.y[i];
  sol.best_dual_bound = dobj;

  // Duals: cone-representative constraints carry the block's cone dual; the
  // slack-backed constraints carry the unsvec of their equality multipliers.
  sol.psd_duals.resize(p.constraints.size());
  for (size_t b = 0; b < dims.size(); ++b) {
    ComplexMatrix zb = state.z[f.block_of_decision[b]];
    zb.hermitize();
    sol.psd_duals[f.conerep_constraint[b]] = std::move(zb);
  }
  for (size_t ci = 0; ci < p.constraints.size(); ++ci) {
    if (f.slack_block_of[ci] < 0) continue;
    ComplexMatrix y = state.z[f.slack_block_of[ci]];
    y.hermitize();
    sol.psd_duals[ci] = std::move(y);
  }
  for (size_t i = 0; i < p.equalities.size(); ++i)
    sol.eq_duals.push_back(state.y[f.eq_rows[i]]);
  return sol;
}

}  // namespace procq::sdp
