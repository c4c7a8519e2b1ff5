#pragma once

#include <memory>
#include <string>
#include <vector>

#include "procq/channels.hpp"
#include "procq/linalg.hpp"
#include "procq/sdp.hpp"

namespace procq::classical {

enum class SystemKind { qubit1, qubit2, qubit3, qutrit };

SystemKind system_kind_for_dim(int d);
const char* to_string(SystemKind k);

// One observable: an orthonormal eigenbasis (columns) with one real outcome
// per eigenvector, listed in enumeration order. For multi-qubit systems the
// eigenbasis is the local 2x2 basis on `subsystem`.
struct Property {
  ComplexMatrix eigenbasis;
  std::vector<double> outcomes;
  int subsystem = 0;
  int n_outcomes() const { return static_cast<int>(outcomes.size()); }
};

struct PropertySet {
  SystemKind kind = SystemKind::qubit1;
  int dim = 0;
  std::vector<Property> properties;
};

// The classical-process model: realistic assignments (one outcome per
// property), the PSD decision blocks sigma_mu attached to them, and the
// linear assembly of the classical process matrix from those blocks.
//
// Qubit systems use the per-qubit (X, Y, Z) triple with outcomes +-1, giving
// 8^N assignments; multi-qubit responses extend over tensor-product Pauli
// strings. The qutrit model uses 8 non-degenerate observables with outcomes
// {+1, 0, -1} whose eigenbases are the four d=3 mutually unbiased bases,
// each taken twice with independent outcome labelings: 3^8 = 6561
// assignments, with the process matrix recovered by linear inversion through
// the {identity, observables} operator basis.
class Model {
 public:
  static Model build(SystemKind kind);

  SystemKind kind() const;
  int dim() const;
  long assignment_count() const;
  const PropertySet& properties() const;
  int n_properties() const;

  // Outcome (index / value) of property k under assignment mu; assignments
  // enumerate outcome tuples lexicographically, property 0 most significant.
  int outcome_index(long mu, int k) const;
  double outcome_value(long mu, int k) const;

  // Declarations for the sigma_mu decision blocks, labeled "sigma<mu>".
  std::vector<sdp::BlockSpec> sigma_blocks() const;

  // (#outcomes of k) * sum over assignments with outcome v' of sigma_mu; the
  // model's final state conditioned on property k having value v'.
  ComplexMatrix conditional_output(const sdp::Collection& sigma, int property,
                                   int outcome_idx) const;

  // chi_C as a linear map of the sigma blocks. tr(chi) = sum_mu tr(sigma_mu).
  ComplexMatrix assemble_chi(const sdp::Collection& sigma) const;
  // Adjoint of the assembly with respect to real Frobenius inner products.
  sdp::Collection assemble_adjoint(const ComplexMatrix& chi_like) const;
  // The assembly as a shared SDP form (supports the solver's gram shortcut
  // for qubit models, where the map satisfies L L^* = kappa * Id).
  std::shared_ptr<const sdp::Form> chi_form() const { return form_; }

  // Base SDP over the sigma blocks: sigma_mu >= 0 for all mu, chi_C >= 0
  // (when chi_psd), and sum_mu tr(sigma_mu) = 1 (when normalized).
  sdp::SdpProblem base_problem(bool normalized, bool chi_psd = true) const;

  // Classical process matrix for explicitly given sigma values.
  chan::ProcessMatrix chi_from_sigma(const sdp::Collection& sigma) const;

  struct Core;  // shared immutable tables; keeps the SDP form valid across copies

 private:
  Model() = default;

  std::shared_ptr<const Core> core_;
  std::shared_ptr<const sdp::Form> form_;
};

}  // namespace procq::classical
