#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "procq/quantify.hpp"
#include "procq/witness.hpp"

namespace procq::report {

// QuantifierReport with the stable field names alpha, beta, f_expt,
// f_classical, s_bits, s_threshold, reliable_alpha, reliable_beta, solver.
// Absent fidelity data serializes as null.
std::string to_json(const quant::QuantifierReport& r, int indent = 2);

std::string to_json(const witness::WitnessResult& w, int indent = 2);

// CSV with a mandatory header row; numbers use '.' decimals (C locale),
// booleans print as 0/1.
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, const std::vector<std::string>& columns);
  void row(const std::vector<double>& values);

 private:
  std::ostream& os_;
  size_t n_cols_;
};

std::string format_double(double v);

}  // namespace procq::report
