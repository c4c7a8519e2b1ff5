#pragma once

#include <complex>
#include <initializer_list>
#include <vector>

#include "procq/errors.hpp"

namespace procq {

using cplx = std::complex<double>;

// Shared absolute tolerance for structural checks (hermiticity, positivity,
// trace normalization) on matrices scaled to unit trace.
inline constexpr double kStructTol = 1e-9;

// Dense square complex matrix, row-major. Everything in this library works
// on trace-normalized operators of dimension <= 64, so no attempt is made at
// sparse storage or cache blocking beyond loop order.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  explicit ComplexMatrix(int dim) : dim_(dim), a_(static_cast<size_t>(dim) * dim) {}

  static ComplexMatrix zero(int dim) { return ComplexMatrix(dim); }
  static ComplexMatrix identity(int dim);
  // Row-major entries, one initializer list per matrix.
  static ComplexMatrix from_rows(int dim, std::initializer_list<cplx> entries);

  int dim() const { return dim_; }
  bool empty() const { return dim_ == 0; }

  cplx& operator()(int i, int j) { return a_[static_cast<size_t>(i) * dim_ + j]; }
  const cplx& operator()(int i, int j) const { return a_[static_cast<size_t>(i) * dim_ + j]; }
  cplx* data() { return a_.data(); }
  const cplx* data() const { return a_.data(); }

  ComplexMatrix& operator+=(const ComplexMatrix& o);
  ComplexMatrix& operator-=(const ComplexMatrix& o);
  ComplexMatrix& operator*=(cplx s);
  void set_zero();
  // this += s * o
  void add_scaled(const ComplexMatrix& o, cplx s);

  ComplexMatrix adjoint() const;
  ComplexMatrix conjugate() const;
  ComplexMatrix transpose() const;
  cplx trace() const;
  double frobenius_norm() const;
  // Largest |A - A^dagger| entry.
  double hermiticity_defect() const;
  // A <- (A + A^dagger)/2
  void hermitize();

  bool is_hermitian(double tol = kStructTol) const { return hermiticity_defect() <= tol; }
  // Decided via eigendecomposition; requires hermiticity first.
  bool is_psd(double tol = kStructTol) const;

 private:
  int dim_ = 0;
  std::vector<cplx> a_;
};

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix operator*(cplx s, ComplexMatrix a);

// out = a * b, preallocated; aliasing with inputs is not allowed.
void matmul(const ComplexMatrix& a, const ComplexMatrix& b, ComplexMatrix& out);
// out = a^dagger * b
void matmul_adjoint_left(const ComplexMatrix& a, const ComplexMatrix& b, ComplexMatrix& out);
// Re tr(a^dagger b); real Frobenius inner product.
double inner(const ComplexMatrix& a, const ComplexMatrix& b);

// Dense square real matrix used for the real-symmetric embedding of
// Hermitian eigenproblems.
class RealMatrix {
 public:
  RealMatrix() = default;
  explicit RealMatrix(int dim) : dim_(dim), a_(static_cast<size_t>(dim) * dim) {}
  int dim() const { return dim_; }
  double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * dim_ + j]; }
  const double& operator()(int i, int j) const { return a_[static_cast<size_t>(i) * dim_ + j]; }
  double* data() { return a_.data(); }
  const double* data() const { return a_.data(); }

 private:
  int dim_ = 0;
  std::vector<double> a_;
};

// [[Re, -Im], [Im, Re]] embedding of a Hermitian matrix. The embedding is
// real symmetric and carries the spectrum of h with every eigenvalue doubled.
RealMatrix embed_hermitian(const ComplexMatrix& h);

struct HermitianEig {
  std::vector<double> eigenvalues;  // ascending
  ComplexMatrix eigenvectors;       // unitary, columns
};

// Eigendecomposition of a Hermitian matrix via cyclic Jacobi sweeps on the
// real-symmetric embedding. Reconstruction error and the unitarity defect of
// the eigenvector matrix stay below 1e-10 * ||A||_F.
// Throws NumericsError for non-Hermitian input (tolerance kStructTol).
HermitianEig hermitian_eig(const ComplexMatrix& m);

// Same decomposition, but the input is first rotated by the unitary hint
// (typically the eigenvectors of a nearby matrix) so the Jacobi sweeps start
// close to diagonal. Used by the SDP cone projections where consecutive
// inputs differ slightly. An empty hint falls back to the cold start.
HermitianEig hermitian_eig_warm(const ComplexMatrix& m, const ComplexMatrix& hint);

// Frobenius-nearest PSD matrix: V max(lambda, 0) V^dagger.
ComplexMatrix psd_project(const ComplexMatrix& m);

// Warm-started variant for solver loops: `hint` is updated in place with the
// eigenvectors of m so the next call starts near-diagonal.
ComplexMatrix psd_project_warm(const ComplexMatrix& m, ComplexMatrix& hint);

// -sum lambda_i log2 lambda_i in bits, with 0 log 0 := 0. Requires a
// Hermitian PSD matrix of unit trace (tolerance kStructTol on both).
double von_neumann_entropy(const ComplexMatrix& m);

// Tensor product with a's index major: (a ox b)(i1*db+i2, j1*db+j2) = a(i1,j1) b(i2,j2).
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

// Trace out every factor not listed in `keep` (ascending, unique). `dims`
// lists the tensor factor dimensions, most significant first;
// prod(dims) must equal dim(m). The trace is preserved.
ComplexMatrix partial_trace(const ComplexMatrix& m, const std::vector<int>& dims,
                            const std::vector<int>& keep);

// Solves a x = b for dense complex a via LU with partial pivoting.
// Returns x; also used to build matrix inverses column by column.
std::vector<cplx> lu_solve(const ComplexMatrix& a, const std::vector<cplx>& b);
ComplexMatrix lu_inverse(const ComplexMatrix& a);

}  // namespace procq
