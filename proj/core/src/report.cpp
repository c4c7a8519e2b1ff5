#include "procq/report.hpp"

#include <cstdio>

#include "json.hpp"

namespace procq::report {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json diag_json(const quant::SolveDiag& d) {
  ordered_json j;
  j["status"] = sdp::to_string(d.status);
  j["iters"] = d.iters;
  j["residuals"] = {{"primal", d.primal_residual},
                    {"dual", d.dual_residual},
                    {"gap", d.gap}};
  return j;
}

}  // namespace

std::string to_json(const quant::QuantifierReport& r, int indent) {
  ordered_json j;
  j["alpha"] = r.alpha;
  j["beta"] = r.beta;
  j["f_expt"] = r.f_expt ? ordered_json(*r.f_expt) : ordered_json(nullptr);
  j["f_classical"] = r.f_classical ? ordered_json(*r.f_classical) : ordered_json(nullptr);
  j["s_bits"] = r.s_bits;
  j["s_threshold"] = r.s_threshold;
  j["avg_state_fidelity_threshold"] = r.avg_state_fidelity_threshold
                                          ? ordered_json(*r.avg_state_fidelity_threshold)
                                          : ordered_json(nullptr);
  j["reliable_alpha"] = r.reliable_alpha ? ordered_json(*r.reliable_alpha) : ordered_json(nullptr);
  j["reliable_beta"] = r.reliable_beta ? ordered_json(*r.reliable_beta) : ordered_json(nullptr);
  ordered_json solver;
  solver["alpha"] = diag_json(r.alpha_diag);
  solver["beta"] = diag_json(r.beta_diag);
  if (r.f_classical) solver["f_classical"] = diag_json(r.fc_diag);
  j["solver"] = solver;
  return j.dump(indent);
}

std::string to_json(const witness::WitnessResult& w, int indent) {
  ordered_json j;
  j["target"] = w.target_label;
  j["w_chiC"] = w.w_chiC;
  j["partitions"] = w.per_partition;
  ordered_json th;
  th["biseparable"] = w.biseparable_bound;
  th["steering"] = w.steering_bound ? ordered_json(*w.steering_bound) : ordered_json(nullptr);
  j["thresholds"] = th;
  return j.dump(indent);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

CsvWriter::CsvWriter(std::ostream& os, const std::vector<std::string>& columns)
    : os_(os), n_cols_(columns.size()) {
  for (size_t i = 0; i < columns.size(); ++i) {
    if (i) os_ << ',';
    os_ << columns[i];
  }
  os_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != n_cols_) throw DimensionError("csv row width mismatch");
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) os_ << ',';
    os_ << format_double(values[i]);
  }
  os_ << '\n';
}

}  // namespace procq::report
