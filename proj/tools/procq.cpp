// procq: quantify how far a quantum process sits from every classical
// explanation, sweep channels and dynamics, and emit plot-ready CSV / JSON.

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "procq/channels.hpp"
#include "procq/classical.hpp"
#include "procq/dynamics.hpp"
#include "procq/errors.hpp"
#include "procq/quantify.hpp"
#include "procq/report.hpp"
#include "procq/witness.hpp"

namespace {

using namespace procq;

int thread_cap() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  if (const char* env = std::getenv("PROCQ_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return hw;
}

// Runs fn(i) for i in [0, n), at most thread_cap() workers; exceptions are
// re-thrown on the caller thread after joining.
template <typename F>
void parallel_for(int n, F&& fn) {
  const int nt = std::min(thread_cap(), n);
  if (nt <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex err_mu;
  std::vector<std::thread> workers;
  workers.reserve(nt);
  for (int w = 0; w < nt; ++w)
    workers.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  for (auto& t : workers) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct Grid {
  double start = 0.0, stop = 1.0;
  int points = 11;
  std::vector<double> values() const {
    std::vector<double> v(points);
    for (int i = 0; i < points; ++i)
      v[i] = points == 1 ? start : start + (stop - start) * i / (points - 1);
    return v;
  }
};

Grid parse_grid(const std::string& s) {
  Grid g;
  char extra = 0;
  if (std::sscanf(s.c_str(), "%lf:%lf:%d%c", &g.start, &g.stop, &g.points, &extra) != 3)
    throw ParseError("grid: expected start:stop:points, got '" + s + "'");
  if (g.points < 2) throw ParseError("grid: points must be >= 2");
  if (g.stop <= g.start) throw ParseError("grid: stop must exceed start");
  return g;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open input file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Output sink: file when --output is set, stdout otherwise.
struct Sink {
  std::ofstream file;
  bool to_file = false;
  std::ostream& stream() { return to_file ? file : std::cout; }
  void open(const std::string& path) {
    if (path.empty()) return;
    file.open(path);
    if (!file) throw ParseError("cannot open output file '" + path + "'");
    to_file = true;
  }
};

classical::Model model_for(int dim, const std::string& override_name) {
  classical::SystemKind kind = classical::system_kind_for_dim(dim);
  if (!override_name.empty()) {
    classical::SystemKind want;
    if (override_name == "qubit") want = classical::SystemKind::qubit1;
    else if (override_name == "qubit2") want = classical::SystemKind::qubit2;
    else if (override_name == "qubit3") want = classical::SystemKind::qubit3;
    else if (override_name == "qutrit") want = classical::SystemKind::qutrit;
    else throw ParseError("--model must be one of qubit, qubit2, qubit3, qutrit");
    if (want != kind)
      throw ParseError(std::string("--model ") + override_name +
                       " does not match the channel dimension " + std::to_string(dim));
  }
  return classical::Model::build(kind);
}

sdp::SolverOptions solver_options(double tol, long max_iters) {
  if (tol < 1e-10 || tol > 1e-3) throw ParseError("--tol must lie in [1e-10, 1e-3]");
  if (max_iters < 1) throw ParseError("--max-iters must be positive");
  sdp::SolverOptions o;
  o.tol = tol;
  o.max_iters = max_iters;
  return o;
}

void check_format(const std::string& format, const char* expected) {
  if (!format.empty() && format != expected)
    throw ParseError(std::string("this command emits ") + expected + ", not " + format);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_quantify(const std::string& input, const std::string& target,
                 const std::string& model_name, double tol, long max_iters,
                 const std::string& output, const std::string& format) {
  check_format(format, "json");
  const auto opts = solver_options(tol, max_iters);
  const chan::KrausChannel k = chan::parse_channel_spec(read_file(input));
  const chan::ProcessMatrix chi = chan::chi_from_kraus(k);
  const classical::Model model = model_for(chi.d, model_name);
  std::optional<chan::ProcessMatrix> chi_target;
  if (!target.empty()) {
    const chan::ProcessMatrix t = chan::chi_from_kraus(chan::parse_channel_spec(read_file(target)));
    if (t.d != chi.d) throw ParseError("--target dimension does not match --input");
    chi_target = t;
  }
  const quant::QuantifierReport rep = quant::quantify_channel(chi, chi_target, model, opts);
  Sink sink;
  sink.open(output);
  sink.stream() << report::to_json(rep) << '\n';
  return 0;
}

int cmd_sweep_noise(const std::string& channel, const std::string& noise,
                    const std::string& grid_s, double tol, long max_iters,
                    const std::string& output, const std::string& format) {
  check_format(format, "csv");
  const auto opts = solver_options(tol, max_iters);
  const Grid grid = grid_s.empty() ? Grid{0.0, 1.0, 11} : parse_grid(grid_s);
  if (grid.start < 0.0 || grid.stop > 1.0)
    throw ParseError("noise sweep grid must stay inside [0, 1]");

  const chan::KrausChannel base = chan::parse_channel_spec("{\"kind\": \"" + channel + "\"}");
  const chan::ProcessMatrix base_chi = chan::chi_from_kraus(base);
  if (base_chi.d != 2) throw ParseError("--channel must be a single-qubit kind");
  if (noise != "d" && noise != "ad" && noise != "pd")
    throw ParseError("--noise must be one of d, ad, pd");

  const classical::Model model = classical::Model::build(classical::SystemKind::qubit1);
  const auto ps = grid.values();
  struct Row {
    double p, alpha, beta, f, s;
    double ra, rb;
  };
  std::vector<Row> rows(ps.size());
  parallel_for(static_cast<int>(ps.size()), [&](int i) {
    chan::KrausChannel nk = noise == "d"    ? chan::depolarizing_channel(ps[i])
                            : noise == "ad" ? chan::amplitude_damping_channel(ps[i])
                                            : chan::phase_damping_channel(ps[i]);
    const chan::ProcessMatrix chi = chan::compose(chan::chi_from_kraus(nk), base_chi);
    const quant::QuantifierReport r = quant::quantify_channel(chi, base_chi, model, opts);
    rows[i] = {ps[i],
               r.alpha,
               r.beta,
               r.f_expt.value_or(0.0),
               r.s_bits,
               r.reliable_alpha.value_or(false) ? 1.0 : 0.0,
               r.reliable_beta.value_or(false) ? 1.0 : 0.0};
  });

  Sink sink;
  sink.open(output);
  report::CsvWriter csv(sink.stream(),
                        {"p", "alpha", "beta", "f_expt", "s_bits", "reliable_alpha",
                         "reliable_beta"});
  for (const auto& r : rows) csv.row({r.p, r.alpha, r.beta, r.f, r.s, r.ra, r.rb});
  return 0;
}

int cmd_fmo(const std::string& sites_s, int temp, const std::string& grid_s, double dt,
            double tol, long max_iters, const std::string& output, const std::string& format) {
  check_format(format, "csv");
  const auto opts = solver_options(tol, max_iters);
  if (temp != 77 && temp != 298) throw ParseError("--temp must be 77 or 298");
  std::vector<int> sites;
  {
    std::stringstream ss(sites_s);
    std::string tok;
    while (std::getline(ss, tok, ',')) sites.push_back(std::atoi(tok.c_str()));
  }
  const Grid grid = grid_s.empty() ? Grid{0.0, 1.0, 10} : parse_grid(grid_s);
  std::vector<double> times = grid.values();
  if (times.front() < 1e-12) times.front() = 0.0;

  const dyn::LindbladModel fmo =
      dyn::fmo_model(temp == 77 ? dyn::kFmoDephasing77K : dyn::kFmoDephasing298K);
  const auto series = dyn::fmo_subsystem_series(fmo, sites, times, dt);
  const classical::Model model =
      classical::Model::build(classical::system_kind_for_dim(static_cast<int>(sites.size())));
  const chan::ProcessMatrix target = chan::identity_chi(model.dim());

  struct Row {
    double alpha, beta, f, s;
  };
  std::vector<Row> rows(times.size());
  parallel_for(static_cast<int>(times.size()), [&](int i) {
    const auto& chi = series[i].chi;
    const auto a = quant::alpha(chi, model, opts);
    const auto b = quant::beta(chi, model, opts);
    rows[i] = {a.alpha, b.beta, chan::process_fidelity(chi, target),
               quant::entropy_certificate(chi).s_bits};
  });

  Sink sink;
  sink.open(output);
  report::CsvWriter csv(sink.stream(),
                        {"t", "alpha", "beta", "f_expt", "s_bits", "transport_prob"});
  for (size_t i = 0; i < times.size(); ++i)
    csv.row({times[i], rows[i].alpha, rows[i].beta, rows[i].f, rows[i].s,
             series[i].transport_probability});
  return 0;
}

int cmd_nonmarkov(double p, double gamma, const std::string& grid_s, double dt, double tol,
                  long max_iters, const std::string& output, const std::string& format) {
  check_format(format, "csv");
  const auto opts = solver_options(tol, max_iters);
  const Grid grid = grid_s.empty() ? Grid{0.0, 15.0, 301} : parse_grid(grid_s);
  std::vector<double> times = grid.values();
  if (times.front() < 1e-12) times[0] = 1e-9;  // tomography needs t > 0 state copies

  const auto chis = dyn::env_qubit_series(p, gamma, times, dt);
  const classical::Model model = classical::Model::build(classical::SystemKind::qubit1);
  const chan::ProcessMatrix target = chan::identity_chi(2);

  struct Row {
    double alpha, beta, f, s;
  };
  std::vector<Row> rows(times.size());
  parallel_for(static_cast<int>(times.size()), [&](int i) {
    rows[i] = {quant::alpha(chis[i], model, opts).alpha, quant::beta(chis[i], model, opts).beta,
               chan::process_fidelity(chis[i], target),
               quant::entropy_certificate(chis[i]).s_bits};
  });

  std::vector<double> alphas, betas;
  for (const auto& r : rows) {
    alphas.push_back(r.alpha);
    betas.push_back(r.beta);
  }
  const auto ha = dyn::nonmarkov_measure(times, alphas);
  const auto hb = dyn::nonmarkov_measure(times, betas);

  Sink sink;
  sink.open(output);
  {
    report::CsvWriter csv(sink.stream(), {"t", "alpha", "beta", "f_expt", "s_bits"});
    for (size_t i = 0; i < times.size(); ++i)
      csv.row({times[i], rows[i].alpha, rows[i].beta, rows[i].f, rows[i].s});
  }
  std::ostream& summary = sink.to_file ? std::cout : std::cerr;
  summary << "{\n  \"h_alpha\": " << report::format_double(ha.h)
          << ",\n  \"h_beta\": " << report::format_double(hb.h)
          << ",\n  \"grid_ok\": " << ((ha.grid_ok && hb.grid_ok) ? "true" : "false") << "\n}\n";
  return 0;
}

int cmd_teleport(const std::string& grid_s, double tol, long max_iters,
                 const std::string& output, const std::string& format) {
  check_format(format, "csv");
  const auto opts = solver_options(tol, max_iters);
  const Grid grid = grid_s.empty() ? Grid{0.0, M_PI / 4.0, 9} : parse_grid(grid_s);
  const auto thetas = grid.values();
  if (thetas.front() < 0.0 || thetas.back() > M_PI / 2.0)
    throw ParseError("teleport grid must stay inside [0, pi/2]");

  const classical::Model model = classical::Model::build(classical::SystemKind::qubit1);
  const chan::ProcessMatrix target = chan::identity_chi(2);
  struct Row {
    double alpha, beta, f, s;
  };
  std::vector<Row> rows(thetas.size());
  parallel_for(static_cast<int>(thetas.size()), [&](int i) {
    const auto chi = chan::chi_from_kraus(chan::teleportation_channel(thetas[i]));
    rows[i] = {quant::alpha(chi, model, opts).alpha, quant::beta(chi, model, opts).beta,
               chan::process_fidelity(chi, target), quant::entropy_certificate(chi).s_bits};
  });

  Sink sink;
  sink.open(output);
  report::CsvWriter csv(sink.stream(),
                        {"theta", "alpha", "beta", "f_expt", "s_bits", "concurrence"});
  for (size_t i = 0; i < thetas.size(); ++i)
    csv.row({thetas[i], rows[i].alpha, rows[i].beta, rows[i].f, rows[i].s,
             std::abs(std::sin(2.0 * thetas[i]))});
  return 0;
}

int cmd_witness(const std::string& target, double tol, long max_iters,
                const std::string& output, const std::string& format) {
  check_format(format, "json");
  const auto opts = solver_options(tol, max_iters);
  const classical::Model model = classical::Model::build(classical::SystemKind::qubit1);
  witness::Target t;
  if (target == "ghz3") t = witness::Target::ghz3;
  else if (target == "w3") t = witness::Target::w3;
  else throw ParseError("--target must be ghz3 or w3");
  const auto result = witness::hierarchy_report(t, model, opts);
  Sink sink;
  sink.open(output);
  sink.stream() << report::to_json(result) << '\n';
  return 0;
}

int cmd_selftest() {
  int failures = 0;
  auto check = [&](const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name;
    if (!detail.empty()) std::cout << "  (" << detail << ")";
    std::cout << '\n';
    if (!ok) ++failures;
  };

  // Analytic SDP: minimize tr X, X >= 0, X >= diag(3, -1) -> 3.
  {
    sdp::SdpProblem p;
    p.blocks = {{"x", 2}};
    p.objective = sdp::Collection({2});
    p.objective[0] = ComplexMatrix::identity(2);
    auto form = std::make_shared<sdp::BlockForm>(0, 2);
    sdp::PsdConstraint c0{"x_psd", ComplexMatrix(2), {{1.0, form}}};
    sdp::PsdConstraint c1{"x_dominates", ComplexMatrix::from_rows(2, {-3, 0, 0, 1}),
                          {{1.0, form}}};
    p.constraints = {c0, c1};
    const auto s1 = sdp::solve(p);
    const auto s2 = sdp::solve(p);
    const auto rep = sdp::verify(p, s1);
    check("solver.clip_program", s1.status == sdp::SolveStatus::optimal &&
                                      std::abs(s1.objective_value - 3.0) < 1e-6,
          "objective " + report::format_double(s1.objective_value));
    check("solver.residuals", rep.feasible(1e-7) && rep.dual_residual <= 1e-6,
          "primal " + report::format_double(rep.eq_residual) + ", dual " +
              report::format_double(rep.dual_residual));
    check("solver.determinism",
          s1.iters == s2.iters &&
              std::memcmp(&s1.objective_value, &s2.objective_value, sizeof(double)) == 0,
          "iters " + std::to_string(s1.iters));
  }

  // Single-qubit oracle values.
  try {
    const classical::Model model = classical::Model::build(classical::SystemKind::qubit1);
    const auto fc = quant::f_classical(chan::identity_chi(2), model);
    const double expect = (1.0 + std::sqrt(3.0)) / 4.0;
    check("quantify.f_classical_identity", std::abs(fc.f_classical - expect) < 1e-3,
          report::format_double(fc.f_classical));
    const auto a_h =
        quant::alpha(chan::chi_from_kraus(chan::unitary_channel(chan::hadamard_gate())), model);
    check("quantify.alpha_hadamard", std::abs(a_h.alpha - 1.0) < 1e-4,
          report::format_double(a_h.alpha));
    const auto chi_pd = chan::chi_from_kraus(chan::phase_damping_channel(1.0));
    check("quantify.alpha_pd1", quant::alpha(chi_pd, model).alpha < 1e-4, "");
    check("quantify.beta_pd1", quant::beta(chi_pd, model).beta < 1e-4, "");
    const auto a_tp =
        quant::alpha(chan::chi_from_kraus(chan::teleportation_channel(M_PI / 8.0)), model);
    check("quantify.alpha_teleport_pi8", std::abs(a_tp.alpha - std::sin(M_PI / 4.0)) < 1e-3,
          report::format_double(a_tp.alpha));
  } catch (const Error& e) {
    check("quantify.suite", false, e.what());
  }

  std::cout << (failures == 0 ? "selftest: all checks passed\n"
                              : "selftest: " + std::to_string(failures) + " failures\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"procq: classical-process models and nonclassicality quantifiers"};
  app.require_subcommand(1);

  std::string input, target, output, format, model_name, grid_s, sites = "4,5,6";
  std::string channel = "identity", noise;
  double tol = 1e-7, p = 0.5, gamma = 0.015, dt = 1e-3;
  long max_iters = 200000;
  int temp = 77;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--tol", tol, "solver tolerance");
    cmd->add_option("--max-iters", max_iters, "solver iteration cap");
    cmd->add_option("--output", output, "output file (default stdout)");
    cmd->add_option("--format", format, "output format override (json|csv)");
  };

  auto* q = app.add_subcommand("quantify", "quantify a channel spec file");
  q->add_option("--input", input, "channel spec file")->required();
  q->add_option("--target", target, "target channel spec file");
  q->add_option("--model", model_name, "classical model override");
  add_common(q);

  auto* sw = app.add_subcommand("sweep-noise", "noise-intensity sweep");
  sw->add_option("--channel", channel, "base channel kind (default identity)");
  sw->add_option("--noise", noise, "noise kind: d, ad, pd")->required();
  sw->add_option("--grid", grid_s, "start:stop:points (default 0:1:11)");
  add_common(sw);

  auto* fm = app.add_subcommand("fmo", "exciton transport time series");
  fm->add_option("--sites", sites, "comma-separated FMO sites (default 4,5,6)");
  fm->add_option("--temp", temp, "temperature in K: 77 or 298");
  fm->add_option("--grid", grid_s, "time grid start:stop:points (ps, default 0:1:10)");
  fm->add_option("--dt", dt, "integrator step (ps, default 1e-3)");
  add_common(fm);

  auto* nm = app.add_subcommand("nonmarkov", "environment-qubit model time series");
  nm->add_option("--p", p, "environment ground-state weight");
  nm->add_option("--gamma", gamma, "depolarization rate");
  nm->add_option("--grid", grid_s, "time grid start:stop:points (default 0:15:301)");
  nm->add_option("--dt", dt, "integrator step (default 1e-3)");
  add_common(nm);

  auto* tp = app.add_subcommand("teleport", "teleportation resource sweep");
  tp->add_option("--grid", grid_s, "theta grid start:stop:points (default 0:pi/4:9)");
  add_common(tp);

  auto* wt = app.add_subcommand("witness", "multipartite witness kernel");
  wt->add_option("--target", target, "ghz3 or w3")->required();
  add_common(wt);

  app.add_subcommand("selftest", "solver and oracle self-checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 3;
  }

  try {
    if (app.got_subcommand("quantify"))
      return cmd_quantify(input, target, model_name, tol, max_iters, output, format);
    if (app.got_subcommand("sweep-noise"))
      return cmd_sweep_noise(channel, noise, grid_s, tol, max_iters, output, format);
    if (app.got_subcommand("fmo"))
      return cmd_fmo(sites, temp, grid_s, dt, tol, max_iters, output, format);
    if (app.got_subcommand("nonmarkov"))
      return cmd_nonmarkov(p, gamma, grid_s, dt, tol, max_iters, output, format);
    if (app.got_subcommand("teleport"))
      return cmd_teleport(grid_s, tol, max_iters, output, format);
    if (app.got_subcommand("witness"))
      return cmd_witness(target, tol, max_iters, output, format);
    if (app.got_subcommand("selftest")) return cmd_selftest();
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const SolverError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
