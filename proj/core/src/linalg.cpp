#include "procq/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace procq {

ComplexMatrix ComplexMatrix::identity(int dim) {
  ComplexMatrix m(dim);
  for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::from_rows(int dim, std::initializer_list<cplx> entries) {
  if (static_cast<int>(entries.size()) != dim * dim)
    throw DimensionError("from_rows: entry count does not match dim*dim");
  ComplexMatrix m(dim);
  std::copy(entries.begin(), entries.end(), m.a_.begin());
  return m;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
  if (o.dim_ != dim_) throw DimensionError("matrix +=: dimension mismatch");
  for (size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
  if (o.dim_ != dim_) throw DimensionError("matrix -=: dimension mismatch");
  for (size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cplx s) {
  for (auto& v : a_) v *= s;
  return *this;
}

void ComplexMatrix::set_zero() { std::fill(a_.begin(), a_.end(), cplx(0.0)); }

void ComplexMatrix::add_scaled(const ComplexMatrix& o, cplx s) {
  if (o.dim_ != dim_) throw DimensionError("add_scaled: dimension mismatch");
  for (size_t k = 0; k < a_.size(); ++k) a_[k] += s * o.a_[k];
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix r(dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) r(j, i) = std::conj((*this)(i, j));
  return r;
}

ComplexMatrix ComplexMatrix::conjugate() const {
  ComplexMatrix r(dim_);
  for (size_t k = 0; k < a_.size(); ++k) r.a_[k] = std::conj(a_[k]);
  return r;
}

ComplexMatrix ComplexMatrix::transpose() const {
  ComplexMatrix r(dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) r(j, i) = (*this)(i, j);
  return r;
}

cplx ComplexMatrix::trace() const {
  cplx t = 0.0;
  for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
  return t;
}

double ComplexMatrix::frobenius_norm() const {
  double s = 0.0;
  for (const auto& v : a_) s += std::norm(v);
  return std::sqrt(s);
}

double ComplexMatrix::hermiticity_defect() const {
  double d = 0.0;
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j)
      d = std::max(d, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
  return d;
}

void ComplexMatrix::hermitize() {
  for (int i = 0; i < dim_; ++i) {
    (*this)(i, i) = cplx((*this)(i, i).real(), 0.0);
    for (int j = i + 1; j < dim_; ++j) {
      cplx v = 0.5 * ((*this)(i, j) + std::conj((*this)(j, i)));
      (*this)(i, j) = v;
      (*this)(j, i) = std::conj(v);
    }
  }
}

bool ComplexMatrix::is_psd(double tol) const {
  if (!is_hermitian(tol)) return false;
  auto eig = hermitian_eig(*this);
  return eig.eigenvalues.empty() || eig.eigenvalues.front() >= -tol;
}

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
ComplexMatrix operator*(cplx s, ComplexMatrix a) { return a *= s; }

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.dim());
  matmul(a, b, out);
  return out;
}

void matmul(const ComplexMatrix& a, const ComplexMatrix& b, ComplexMatrix& out) {
  const int n = a.dim();
  if (b.dim() != n) throw DimensionError("matmul: dimension mismatch");
  if (out.dim() != n) out = ComplexMatrix(n);
  out.set_zero();
  const cplx* pa = a.data();
  const cplx* pb = b.data();
  cplx* po = out.data();
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      const cplx aik = pa[i * n + k];
      if (aik == cplx(0.0)) continue;
      const cplx* brow = pb + k * n;
      cplx* orow = po + i * n;
      for (int j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
}

void matmul_adjoint_left(const ComplexMatrix& a, const ComplexMatrix& b, ComplexMatrix& out) {
  const int n = a.dim();
  if (b.dim() != n) throw DimensionError("matmul_adjoint_left: dimension mismatch");
  if (out.dim() != n) out = ComplexMatrix(n);
  out.set_zero();
  const cplx* pa = a.data();
  const cplx* pb = b.data();
  cplx* po = out.data();
  for (int k = 0; k < n; ++k) {
    const cplx* arow = pa + k * n;
    const cplx* brow = pb + k * n;
    for (int i = 0; i < n; ++i) {
      const cplx c = std::conj(arow[i]);
      if (c == cplx(0.0)) continue;
      cplx* orow = po + i * n;
      for (int j = 0; j < n; ++j) orow[j] += c * brow[j];
    }
  }
}

double inner(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.dim() != b.dim()) throw DimensionError("inner: dimension mismatch");
  const cplx* pa = a.data();
  const cplx* pb = b.data();
  const size_t n = static_cast<size_t>(a.dim()) * a.dim();
  double s = 0.0;
  for (size_t k = 0; k < n; ++k)
    s += pa[k].real() * pb[k].real() + pa[k].imag() * pb[k].imag();
  return s;
}

RealMatrix embed_hermitian(const ComplexMatrix& h) {
  if (!h.is_hermitian())
    throw NumericsError("embed_hermitian: input is not Hermitian");
  const int d = h.dim();
  RealMatrix e(2 * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      const cplx v = h(i, j);
      e(i, j) = v.real();
      e(i, j + d) = -v.imag();
      e(i + d, j) = v.imag();
      e(i + d, j + d) = v.real();
    }
  return e;
}

namespace {

// Cyclic Jacobi sweeps on a real symmetric matrix; a becomes diagonal and v
// accumulates the rotations (columns are eigenvectors). Rotations below the
// threshold are skipped, which makes near-diagonal inputs cheap.
void jacobi_symmetric(RealMatrix& a, RealMatrix& v) {
  const int n = a.dim();
  v = RealMatrix(n);
  for (int i = 0; i < n; ++i) v(i, i) = 1.0;
  if (n <= 1) return;

  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scale += a(i, j) * a(i, j);
  scale = std::sqrt(scale);
  if (scale == 0.0) return;
  const double stop = 1e-14 * scale;

  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += 2.0 * a(i, j) * a(i, j);
    if (std::sqrt(off) <= stop) return;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= stop / n) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e15) {
          t = 1.0 / (2.0 * theta);
        } else {
          t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const double tau = s / (1.0 + c);

        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (int k = 0; k < n; ++k) {
          if (k != p && k != q) {
            const double akp = a(k, p);
            const double akq = a(k, q);
            a(k, p) = akp - s * (akq + tau * akp);
            a(k, q) = akq + s * (akp - tau * akq);
            a(p, k) = a(k, p);
            a(q, k) = a(k, q);
          }
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = vkp - s * (vkq + tau * vkp);
          v(k, q) = vkq + s * (vkp - tau * vkq);
        }
      }
    }
  }
  // The loop above always converges in well under max_sweeps for the
  // dimensions handled here (<= 128); reaching this point means NaNs.
  throw NumericsError("jacobi_symmetric: sweeps exhausted without convergence");
}

// Extracts a complex orthonormal eigenbasis from the doubled spectrum of the
// real embedding. Embedded eigenvectors (x; y) map to candidates x + iy; the
// complex eigenspace of multiplicity m appears with real dimension 2m, so a
// greedy max-residual Gram-Schmidt over each eigenvalue cluster picks m
// orthonormal representatives.
HermitianEig extract_complex_eig(const ComplexMatrix& m, RealMatrix& diag, RealMatrix& vecs) {
  const int d = m.dim();
  const int n = 2 * d;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return diag(i, i) < diag(j, j); });

  double lam_scale = 1.0;
  for (int i = 0; i < n; ++i) lam_scale = std::max(lam_scale, std::abs(diag(i, i)));
  const double cluster_tol = 1e-8 * lam_scale;

  HermitianEig out;
  out.eigenvalues.reserve(d);
  out.eigenvectors = ComplexMatrix(d);
  std::vector<std::vector<cplx>> accepted;
  accepted.reserve(d);

  int pos = 0;
  while (pos < n) {
    // Grow the cluster to an even size; eigenvalues of the embedding come in
    // exactly degenerate pairs, so odd clusters only arise from tolerance
    // artifacts at cluster boundaries.
    int end = pos + 1;
    while (end < n && (diag(order[end], order[end]) - diag(order[end - 1], order[end - 1])) <= cluster_tol)
      ++end;
    if ((end - pos) % 2 != 0 && end < n) ++end;

    const int csize = end - pos;
    const int want = csize / 2;

    // Candidate complex vectors from this cluster. Vectors from distinct
    // clusters are orthogonal through the real orthogonality of the Jacobi
    // basis, so Gram-Schmidt runs within the cluster only.
    std::vector<std::vector<cplx>> cand(csize, std::vector<cplx>(d));
    std::vector<double> cand_lambda(csize);
    for (int c = 0; c < csize; ++c) {
      const int col = order[pos + c];
      cand_lambda[c] = diag(col, col);
      for (int r = 0; r < d; ++r) cand[c][r] = cplx(vecs(r, col), vecs(r + d, col));
    }

    const size_t cluster_base = accepted.size();
    std::vector<char> used(csize, 0);
    auto try_accept = [&](int c, double threshold) -> bool {
      std::vector<cplx> w = cand[c];
      for (int rep = 0; rep < 2; ++rep)
        for (size_t a = cluster_base; a < accepted.size(); ++a) {
          cplx ip = 0.0;
          for (int r = 0; r < d; ++r) ip += std::conj(accepted[a][r]) * w[r];
          for (int r = 0; r < d; ++r) w[r] -= ip * accepted[a][r];
        }
      double nn = 0.0;
      for (int r = 0; r < d; ++r) nn += std::norm(w[r]);
      if (nn <= threshold) return false;
      const double inv = 1.0 / std::sqrt(nn);
      for (int r = 0; r < d; ++r) w[r] *= inv;
      used[c] = 1;
      out.eigenvalues.push_back(cand_lambda[c]);
      accepted.push_back(std::move(w));
      return true;
    };

    // Single pass first; each candidate is either an essentially new
    // direction or the i*v duplicate of an accepted one.
    for (int c = 0; c < csize && accepted.size() - cluster_base < static_cast<size_t>(want);
         ++c)
      try_accept(c, 0.25);
    // Rare fallback for skewed candidates.
    for (int c = 0; c < csize && accepted.size() - cluster_base < static_cast<size_t>(want);
         ++c)
      if (!used[c]) try_accept(c, 1e-20);
    if (accepted.size() - cluster_base != static_cast<size_t>(want))
      throw NumericsError("hermitian_eig: eigenvector extraction failed");
    pos = end;
  }

  // Within a cluster the greedy pick may return eigenvalues out of order;
  // restore a globally ascending spectrum.
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](int i, int j) {
    return out.eigenvalues[i] < out.eigenvalues[j];
  });
  std::vector<double> sorted_vals(d);
  for (int c = 0; c < d; ++c) {
    sorted_vals[c] = out.eigenvalues[perm[c]];
    for (int r = 0; r < d; ++r) out.eigenvectors(r, c) = accepted[perm[c]][r];
  }
  out.eigenvalues = std::move(sorted_vals);
  return out;
}

HermitianEig eig_via_embedding(const ComplexMatrix& m) {
  RealMatrix e = embed_hermitian(m);
  RealMatrix v;
  jacobi_symmetric(e, v);
  return extract_complex_eig(m, e, v);
}

}  // namespace

HermitianEig hermitian_eig(const ComplexMatrix& m) {
  if (!m.is_hermitian())
    throw NumericsError("hermitian_eig: input is not Hermitian");
  if (m.dim() == 0) return {};
  return eig_via_embedding(m);
}

HermitianEig hermitian_eig_warm(const ComplexMatrix& m, const ComplexMatrix& hint) {
  if (hint.empty() || hint.dim() != m.dim()) return hermitian_eig(m);
  // Rotate into the hint frame; the result is near-diagonal when the hint
  // comes from a nearby matrix, and the Jacobi threshold skips most pairs.
  const int d = m.dim();
  ComplexMatrix tmp(d), rotated(d);
  matmul_adjoint_left(hint, m, tmp);
  matmul(tmp, hint, rotated);
  rotated.hermitize();
  HermitianEig inner_eig = eig_via_embedding(rotated);
  ComplexMatrix v(d);
  matmul(hint, inner_eig.eigenvectors, v);
  inner_eig.eigenvectors = std::move(v);
  return inner_eig;
}

namespace {

ComplexMatrix clip_negative(const HermitianEig& eig) {
  const int d = eig.eigenvectors.dim();
  ComplexMatrix out(d);
  for (int k = 0; k < d; ++k) {
    const double lam = eig.eigenvalues[k];
    if (lam <= 0.0) continue;
    for (int i = 0; i < d; ++i) {
      const cplx vik = eig.eigenvectors(i, k);
      if (vik == cplx(0.0)) continue;
      const cplx w = lam * vik;
      for (int j = 0; j < d; ++j) out(i, j) += w * std::conj(eig.eigenvectors(j, k));
    }
  }
  out.hermitize();
  return out;
}

}  // namespace

ComplexMatrix psd_project(const ComplexMatrix& m) {
  return clip_negative(hermitian_eig(m));
}

ComplexMatrix psd_project_warm(const ComplexMatrix& m, ComplexMatrix& hint) {
  HermitianEig eig = hermitian_eig_warm(m, hint);
  hint = eig.eigenvectors;
  return clip_negative(eig);
}

double von_neumann_entropy(const ComplexMatrix& m) {
  if (!m.is_hermitian())
    throw NumericsError("von_neumann_entropy: input is not Hermitian");
  if (std::abs(m.trace() - cplx(1.0)) > kStructTol)
    throw NumericsError("von_neumann_entropy: trace is not 1");
  auto eig = hermitian_eig(m);
  double s = 0.0;
  for (double lam : eig.eigenvalues) {
    if (lam < -kStructTol)
      throw NumericsError("von_neumann_entropy: negative eigenvalue beyond tolerance");
    if (lam > 0.0) s -= lam * std::log2(lam);
  }
  return std::max(0.0, s);
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  const int da = a.dim();
  const int db = b.dim();
  ComplexMatrix out(da * db);
  for (int i1 = 0; i1 < da; ++i1)
    for (int j1 = 0; j1 < da; ++j1) {
      const cplx av = a(i1, j1);
      if (av == cplx(0.0)) continue;
      for (int i2 = 0; i2 < db; ++i2)
        for (int j2 = 0; j2 < db; ++j2)
          out(i1 * db + i2, j1 * db + j2) = av * b(i2, j2);
    }
  return out;
}

ComplexMatrix partial_trace(const ComplexMatrix& m, const std::vector<int>& dims,
                            const std::vector<int>& keep) {
  long prod = 1;
  for (int d : dims) {
    if (d <= 0) throw DimensionError("partial_trace: factor dims must be positive");
    prod *= d;
  }
  if (prod != m.dim()) throw DimensionError("partial_trace: prod(dims) != dim(m)");
  const int nf = static_cast<int>(dims.size());
  for (size_t k = 0; k < keep.size(); ++k) {
    if (keep[k] < 0 || keep[k] >= nf) throw DimensionError("partial_trace: keep index out of range");
    if (k > 0 && keep[k] <= keep[k - 1])
      throw DimensionError("partial_trace: keep must be strictly ascending");
  }

  std::vector<int> strides(nf, 1);
  for (int f = nf - 2; f >= 0; --f) strides[f] = strides[f + 1] * dims[f + 1];

  std::vector<int> traced;
  for (int f = 0; f < nf; ++f)
    if (std::find(keep.begin(), keep.end(), f) == keep.end()) traced.push_back(f);

  long kd = 1;
  for (int f : keep) kd *= dims[f];
  long td = 1;
  for (int f : traced) td *= dims[f];

  // Offsets of every kept / traced multi-index into the flat index.
  std::vector<long> koff(kd, 0);
  for (long e = 0; e < kd; ++e) {
    long rem = e;
    for (int k = static_cast<int>(keep.size()) - 1; k >= 0; --k) {
      const int f = keep[k];
      koff[e] += (rem % dims[f]) * strides[f];
      rem /= dims[f];
    }
  }
  std::vector<long> toff(td, 0);
  for (long e = 0; e < td; ++e) {
    long rem = e;
    for (int k = static_cast<int>(traced.size()) - 1; k >= 0; --k) {
      const int f = traced[k];
      toff[e] += (rem % dims[f]) * strides[f];
      rem /= dims[f];
    }
  }

  ComplexMatrix out(static_cast<int>(kd));
  for (long r = 0; r < kd; ++r)
    for (long c = 0; c < kd; ++c) {
      cplx s = 0.0;
      for (long t = 0; t < td; ++t)
        s += m(static_cast<int>(koff[r] + toff[t]), static_cast<int>(koff[c] + toff[t]));
      out(static_cast<int>(r), static_cast<int>(c)) = s;
    }
  return out;
}

namespace {

struct Lu {
  ComplexMatrix lu;
  std::vector<int> piv;
};

Lu lu_factor(const ComplexMatrix& a) {
  const int n = a.dim();
  Lu f{a, std::vector<int>(n)};
  for (int k = 0; k < n; ++k) {
    int p = k;
    double best = std::abs(f.lu(k, k));
    for (int i = k + 1; i < n; ++i) {
      const double v = std::abs(f.lu(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (best == 0.0) throw NumericsError("lu_factor: singular matrix");
    f.piv[k] = p;
    if (p != k)
      for (int j = 0; j < n; ++j) std::swap(f.lu(k, j), f.lu(p, j));
    const cplx inv = 1.0 / f.lu(k, k);
    for (int i = k + 1; i < n; ++i) {
      const cplx l = f.lu(i, k) * inv;
      f.lu(i, k) = l;
      if (l == cplx(0.0)) continue;
      for (int j = k + 1; j < n; ++j) f.lu(i, j) -= l * f.lu(k, j);
    }
  }
  return f;
}

std::vector<cplx> lu_apply(const Lu& f, std::vector<cplx> b) {
  const int n = f.lu.dim();
  for (int k = 0; k < n; ++k)
    if (f.piv[k] != k) std::swap(b[k], b[f.piv[k]]);
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < i; ++j) b[i] -= f.lu(i, j) * b[j];
  for (int i = n - 1; i >= 0; --i) {
    for (int j = i + 1; j < n; ++j) b[i] -= f.lu(i, j) * b[j];
    b[i] /= f.lu(i, i);
  }
  return b;
}

}  // namespace

std::vector<cplx> lu_solve(const ComplexMatrix& a, const std::vector<cplx>& b) {
  if (static_cast<int>(b.size()) != a.dim())
    throw DimensionError("lu_solve: rhs size mismatch");
  return lu_apply(lu_factor(a), b);
}

ComplexMatrix lu_inverse(const ComplexMatrix& a) {
  const int n = a.dim();
  Lu f = lu_factor(a);
  ComplexMatrix inv(n);
  std::vector<cplx> e(n);
  for (int c = 0; c < n; ++c) {
    std::fill(e.begin(), e.end(), cplx(0.0));
    e[c] = 1.0;
    auto col = lu_apply(f, e);
    for (int r = 0; r < n; ++r) inv(r, c) = col[r];
  }
  return inv;
}

}  // namespace procq
