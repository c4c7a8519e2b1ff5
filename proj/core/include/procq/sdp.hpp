#pragma once

#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "procq/linalg.hpp"

namespace procq::sdp {

// A tuple of Hermitian decision blocks; the vector space every SDP here is
// posed over. The inner product is the sum of real Frobenius inner products.
class Collection {
 public:
  Collection() = default;
  explicit Collection(const std::vector<int>& dims);

  size_t size() const { return blocks_.size(); }
  ComplexMatrix& operator[](size_t b) { return blocks_[b]; }
  const ComplexMatrix& operator[](size_t b) const { return blocks_[b]; }

  void set_zero();
  void add_scaled(const Collection& o, double s);
  void scale(double s);
  double dot(const Collection& o) const;
  double norm() const;
  std::vector<int> dims() const;

 private:
  std::vector<ComplexMatrix> blocks_;
};

struct BlockSpec {
  std::string label;
  int dim = 0;
};

// Linear map from a Collection into a Hermitian matrix of dimension
// out_dim(). Implementations must map Hermitian inputs to Hermitian outputs
// and provide the exact adjoint with respect to the real Frobenius inner
// products on both sides.
class Form {
 public:
  virtual ~Form() = default;
  virtual int out_dim() const = 0;
  virtual std::string describe() const = 0;
  // out += scale * L(x)
  virtual void add_apply(const Collection& x, ComplexMatrix& out, double scale) const = 0;
  // out += scale * L^*(s)
  virtual void add_adjoint(const ComplexMatrix& s, Collection& out, double scale) const = 0;
  // Marks the blocks this form reads.
  virtual void touched_blocks(std::vector<char>& mask) const = 0;

  // Structure hints used by the solver's least-squares step.
  //
  // If the expression is coeff * X_b for a single block b, report it.
  virtual std::optional<std::pair<int, double>> block_local() const { return std::nullopt; }
  // If L_this (L_other)^* equals g * Identity on the output space, report g.
  virtual std::optional<double> gram_scale_with(const Form& other) const {
    (void)other;
    return std::nullopt;
  }
};

// Expression X_b (out_dim = block dim).
class BlockForm final : public Form {
 public:
  BlockForm(int block, int dim) : block_(block), dim_(dim) {}
  int out_dim() const override { return dim_; }
  std::string describe() const override;
  void add_apply(const Collection& x, ComplexMatrix& out, double scale) const override;
  void add_adjoint(const ComplexMatrix& s, Collection& out, double scale) const override;
  void touched_blocks(std::vector<char>& mask) const override { mask[block_] = 1; }
  std::optional<std::pair<int, double>> block_local() const override {
    return std::make_pair(block_, 1.0);
  }

 private:
  int block_;
  int dim_;
};

// 1x1 expression [ <C, X> ] for a Hermitian coefficient collection C.
class FunctionalForm final : public Form {
 public:
  explicit FunctionalForm(Collection coeffs) : coeffs_(std::move(coeffs)) {}
  int out_dim() const override { return 1; }
  std::string describe() const override { return "functional"; }
  void add_apply(const Collection& x, ComplexMatrix& out, double scale) const override;
  void add_adjoint(const ComplexMatrix& s, Collection& out, double scale) const override;
  void touched_blocks(std::vector<char>& mask) const override;
  const Collection& coeffs() const { return coeffs_; }

 private:
  Collection coeffs_;
};

struct PsdTerm {
  double coeff = 1.0;
  std::shared_ptr<const Form> form;
};

// Affine expression offset + sum_k coeff_k * form_k(X), constrained PSD.
struct PsdConstraint {
  std::string name;
  ComplexMatrix offset;
  std::vector<PsdTerm> terms;
  int dim() const { return offset.dim(); }
};

// <coeffs, X> = rhs
struct EqConstraint {
  std::string name;
  Collection coeffs;
  double rhs = 0.0;
};

enum class Sense { minimize, maximize };

struct SdpProblem {
  std::vector<BlockSpec> blocks;
  Sense sense = Sense::minimize;
  Collection objective;  // <objective, X> + objective_offset
  double objective_offset = 0.0;
  std::vector<EqConstraint> equalities;
  std::vector<PsdConstraint> constraints;

  std::vector<int> block_dims() const;
  // Checks dimensions, hermiticity of all coefficient data, and that every
  // constraint expression stays Hermitian on random Hermitian probes.
  void validate() const;
};

enum class SolveStatus { optimal, max_iters, infeasible_suspected };

const char* to_string(SolveStatus s);

struct SdpSolution {
  std::vector<ComplexMatrix> block_values;
  double objective_value = 0.0;
  SolveStatus status = SolveStatus::max_iters;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  long iters = 0;
  double best_dual_bound = 0.0;  // bound on the minimized internal objective
  // Dual certificates, one PSD multiplier per PSD constraint plus one real
  // multiplier per equality; used by verify().
  std::vector<ComplexMatrix> psd_duals;
  std::vector<double> eq_duals;
};

struct SolverOptions {
  double tol = 1e-7;
  long max_iters = 200000;
  double over_relax = 1.5;
  double rho0 = 1.0;
  int check_every = 25;
  int balance_every = 100;
};

// Solves the program. Small and medium problems where every decision block
// carries its own PSD cone route through a dense HKM predictor-corrector
// interior-point method; everything else runs consensus ADMM with per-cone
// projection, an exact least-squares step through a Woodbury factorization
// of the coupled constraints, and safeguarded Anderson acceleration.
// Deterministic: identical inputs give bit-identical results.
SdpSolution solve(const SdpProblem& p, const SolverOptions& opts = {});
SdpSolution solve(const SdpProblem& p, double tol, long max_iters);

// The interior-point path alone; std::nullopt when the problem shape does
// not qualify or the iteration failed to reach tolerance.
std::optional<SdpSolution> solve_interior_point(const SdpProblem& p,
                                                const SolverOptions& opts = {});

struct ResidualReport {
  double objective = 0.0;
  double eq_residual = 0.0;       // max_i |<A_i, x> - b_i|
  double psd_min_eigenvalue = 0.0;  // min over constraints of lambda_min(expr)
  double dual_residual = -1.0;    // ||c - L^* y - A^T w||, -1 when no duals stored
  double dual_psd_min = 0.0;
  double gap = -1.0;
  bool feasible(double tol) const {
    return eq_residual <= tol && psd_min_eigenvalue >= -tol;
  }
};

// Recomputes residuals from the returned block values and duals, independent
// of solver internals.
ResidualReport verify(const SdpProblem& p, const SdpSolution& s);

// Plain-text sectioned dump (blocks / objective / equalities / constraints)
// for cross-checking small problems against external solvers.
void dump_problem(const SdpProblem& p, std::ostream& os);

}  // namespace procq::sdp
