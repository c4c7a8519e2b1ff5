#pragma once

#include <random>

#include "procq/linalg.hpp"

namespace testutil {

using procq::ComplexMatrix;
using procq::cplx;

inline ComplexMatrix random_hermitian(int dim, std::mt19937& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  ComplexMatrix m(dim);
  for (int i = 0; i < dim; ++i) {
    m(i, i) = cplx(g(rng), 0.0);
    for (int j = i + 1; j < dim; ++j) {
      const cplx v(g(rng), g(rng));
      m(i, j) = v;
      m(j, i) = std::conj(v);
    }
  }
  return m;
}

inline ComplexMatrix random_unitary(int dim, std::mt19937& rng) {
  // Eigenvectors of a random Hermitian matrix form a Haar-ish unitary; exact
  // distribution does not matter for these tests.
  return procq::hermitian_eig(random_hermitian(dim, rng)).eigenvectors;
}

inline ComplexMatrix random_psd(int dim, std::mt19937& rng, double scale = 1.0) {
  ComplexMatrix h = random_hermitian(dim, rng, scale);
  ComplexMatrix out(dim);
  procq::matmul_adjoint_left(h, h, out);
  out.hermitize();
  return out;
}

inline ComplexMatrix random_density(int dim, std::mt19937& rng) {
  ComplexMatrix p = random_psd(dim, rng);
  p *= cplx(1.0 / p.trace().real(), 0.0);
  return p;
}

inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  double m = 0.0;
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j < a.dim(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

}  // namespace testutil
