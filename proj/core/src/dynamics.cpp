#include "procq/dynamics.hpp"

#include <cmath>
#include <cstdio>

namespace procq::dyn {

void LindbladModel::validate() const {
  if (hamiltonian.dim() != dim) throw DimensionError("lindblad model: hamiltonian dim mismatch");
  if (!hamiltonian.is_hermitian()) throw NumericsError("lindblad model: hamiltonian not Hermitian");
  for (const auto& d : dissipators) {
    if (d.jump.dim() != dim) throw DimensionError("lindblad model: jump operator dim mismatch");
    if (d.rate < 0.0) throw DomainError("lindblad model: negative rate");
  }
}

namespace {

struct Generator {
  const LindbladModel* model;
  std::vector<ComplexMatrix> ldl;  // L^dag L per dissipator
  mutable ComplexMatrix t1, t2, t3;

  explicit Generator(const LindbladModel& m) : model(&m) {
    const int n = m.dim;
    t1 = ComplexMatrix(n);
    t2 = ComplexMatrix(n);
    t3 = ComplexMatrix(n);
    ldl.reserve(m.dissipators.size());
    for (const auto& d : m.dissipators) {
      ComplexMatrix x(n);
      matmul_adjoint_left(d.jump, d.jump, x);
      ldl.push_back(std::move(x));
    }
  }

  // out = -i[H, rho] + sum rate (2 L rho L^dag - {L^dag L, rho})
  void operator()(const ComplexMatrix& rho, ComplexMatrix& out) const {
    const int n = model->dim;
    if (out.dim() != n) out = ComplexMatrix(n);
    out.set_zero();
    matmul(model->hamiltonian, rho, t1);
    matmul(rho, model->hamiltonian, t2);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        out(i, j) = cplx(0.0, -1.0) * (t1(i, j) - t2(i, j));
    for (size_t k = 0; k < model->dissipators.size(); ++k) {
      const auto& d = model->dissipators[k];
      if (d.rate == 0.0) continue;
      matmul(d.jump, rho, t1);
      matmul(t1, d.jump.adjoint(), t2);
      out.add_scaled(t2, cplx(2.0 * d.rate, 0.0));
      matmul(ldl[k], rho, t1);
      matmul(rho, ldl[k], t2);
      out.add_scaled(t1, cplx(-d.rate, 0.0));
      out.add_scaled(t2, cplx(-d.rate, 0.0));
    }
  }
};

double stiffness_scale(const LindbladModel& m) {
  // Row-sum bound on ||H|| plus the largest rate.
  double hnorm = 0.0;
  for (int i = 0; i < m.dim; ++i) {
    double row = 0.0;
    for (int j = 0; j < m.dim; ++j) row += std::abs(m.hamiltonian(i, j));
    hnorm = std::max(hnorm, row);
  }
  double rmax = 0.0;
  for (const auto& d : m.dissipators) rmax = std::max(rmax, d.rate);
  return std::max(hnorm, rmax);
}

void rk4_advance(const Generator& gen, ComplexMatrix& rho, double h, ComplexMatrix& k1,
                 ComplexMatrix& k2, ComplexMatrix& k3, ComplexMatrix& k4,
                 ComplexMatrix& stage) {
  gen(rho, k1);
  stage = rho;
  stage.add_scaled(k1, cplx(0.5 * h, 0.0));
  gen(stage, k2);
  stage = rho;
  stage.add_scaled(k2, cplx(0.5 * h, 0.0));
  gen(stage, k3);
  stage = rho;
  stage.add_scaled(k3, cplx(h, 0.0));
  gen(stage, k4);
  rho.add_scaled(k1, cplx(h / 6.0, 0.0));
  rho.add_scaled(k2, cplx(h / 3.0, 0.0));
  rho.add_scaled(k3, cplx(h / 3.0, 0.0));
  rho.add_scaled(k4, cplx(h / 6.0, 0.0));
  rho.hermitize();
  if (!std::isfinite(rho.frobenius_norm()))
    throw NumericsError("evolve: state diverged (NaN)");
}

void warn_step(const LindbladModel& model, double dt) {
  const double scale = stiffness_scale(model);
  if (scale > 0.0 && dt > 1e-3 / scale) {
    static thread_local bool warned = false;
    if (!warned) {
      std::fprintf(stderr,
                   "procq: evolve step %.3g exceeds guidance %.3g for this generator\n", dt,
                   1e-3 / scale);
      warned = true;
    }
  }
}

}  // namespace

chan::DensityMatrix evolve(const LindbladModel& model, const chan::DensityMatrix& rho0,
                           double t, double dt) {
  model.validate();
  if (t < 0.0) throw DomainError("evolve: negative time");
  if (dt <= 0.0) throw DomainError("evolve: non-positive step");
  warn_step(model, dt);
  ComplexMatrix rho = rho0.rho;
  if (t > 0.0) {
    const long n = std::max(1L, static_cast<long>(std::ceil(t / dt - 1e-12)));
    const double h = t / static_cast<double>(n);
    Generator gen(model);
    ComplexMatrix k1, k2, k3, k4, stage;
    for (long s = 0; s < n; ++s) rk4_advance(gen, rho, h, k1, k2, k3, k4, stage);
  }
  return chan::DensityMatrix{std::move(rho)};
}

std::vector<ComplexMatrix> evolve_trajectory(const LindbladModel& model,
                                             const ComplexMatrix& rho0,
                                             const std::vector<double>& times, double dt) {
  model.validate();
  warn_step(model, dt);
  for (size_t i = 1; i < times.size(); ++i)
    if (times[i] <= times[i - 1])
      throw DomainError("evolve_trajectory: times must be strictly increasing");
  if (!times.empty() && times.front() < 0.0)
    throw DomainError("evolve_trajectory: negative time");

  std::vector<ComplexMatrix> out;
  out.reserve(times.size());
  Generator gen(model);
  ComplexMatrix rho = rho0, k1, k2, k3, k4, stage;
  double now = 0.0;
  for (double target : times) {
    const double span = target - now;
    if (span > 1e-15) {
      const long n = std::max(1L, static_cast<long>(std::ceil(span / dt - 1e-12)));
      const double h = span / static_cast<double>(n);
      for (long s = 0; s < n; ++s) rk4_advance(gen, rho, h, k1, k2, k3, k4, stage);
    }
    now = target;
    out.push_back(rho);
  }
  return out;
}

// ---------------------------------------------------------------------------
// FMO
// ---------------------------------------------------------------------------

ComplexMatrix fmo_hamiltonian_cm1() {
  const double h[7][7] = {
      {215.0, -104.1, 5.1, -4.3, 4.7, -15.1, -7.8},
      {-104.1, 220.0, 32.6, 7.1, 5.4, 8.3, 0.8},
      {5.1, 32.6, 0.0, -46.8, 1.0, -8.1, 5.1},
      {-4.3, 7.1, -46.8, 125.0, -70.7, -14.7, -61.5},
      {4.7, 5.4, 1.0, -70.7, 450.0, 89.7, -2.5},
      {-15.1, 8.3, -8.1, -14.7, 89.7, 330.0, 32.7},
      {-7.8, 0.8, 5.1, -61.5, -2.5, 32.7, 280.0}};
  ComplexMatrix m(7);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) m(i, j) = h[i][j];
  return m;
}

LindbladModel fmo_model(double dephasing_rate_per_ps) {
  // Sites 1..7 map to indices 0..6; the empty state sits at index 7.
  constexpr int kEmpty = 7;
  LindbladModel m;
  m.dim = 8;
  m.hamiltonian = ComplexMatrix(8);
  const ComplexMatrix h7 = fmo_hamiltonian_cm1();
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 7; ++j) m.hamiltonian(i, j) = kCm1ToRadPerPs * h7(i, j);
  for (int site = 0; site < 7; ++site) {
    ComplexMatrix rec(8);
    rec(kEmpty, site) = 1.0;
    m.dissipators.push_back({rec, kFmoRecombinationRate});
    ComplexMatrix deph(8);
    deph(site, site) = 1.0;
    m.dissipators.push_back({deph, dephasing_rate_per_ps});
  }
  ComplexMatrix sink(8);
  sink(kEmpty, 2) = 1.0;  // trapping from site 3
  m.dissipators.push_back({sink, kFmoSinkRate});
  return m;
}

namespace {

std::vector<int> site_indices(const std::vector<int>& sites) {
  if (sites.size() != 2 && sites.size() != 3)
    throw DomainError("fmo subsystem: pick 2 or 3 sites");
  std::vector<int> idx;
  for (int s : sites) {
    if (s < 1 || s > 7) throw DomainError("fmo subsystem: sites are labeled 1..7");
    idx.push_back(s - 1);
  }
  for (size_t i = 1; i < idx.size(); ++i)
    if (idx[i] <= idx[i - 1]) throw DomainError("fmo subsystem: sites must be ascending");
  return idx;
}

// Tomography probes for a d-dimensional map, matrix-unit combinations.
std::vector<ComplexMatrix> tomography_probes(int d) {
  std::vector<ComplexMatrix> probes;
  for (int i = 0; i < d; ++i) {
    ComplexMatrix p(d);
    p(i, i) = 1.0;
    probes.push_back(std::move(p));
  }
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      ComplexMatrix plus(d), phase(d);
      plus(i, i) = plus(j, j) = plus(i, j) = plus(j, i) = 0.5;
      phase(i, i) = phase(j, j) = 0.5;
      phase(j, i) = cplx(0.0, 0.5);
      phase(i, j) = cplx(0.0, -0.5);
      probes.push_back(std::move(plus));
      probes.push_back(std::move(phase));
    }
  return probes;
}

// Reconstructs chi from the probe responses in the order produced above.
chan::ProcessMatrix chi_from_probe_responses(const std::vector<ComplexMatrix>& responses,
                                             int d, double* raw_trace) {
  size_t next = 0;
  auto take = [&]() -> const ComplexMatrix& { return responses[next++]; };
  std::vector<const ComplexMatrix*> diag(d);
  for (int i = 0; i < d; ++i) diag[i] = &take();
  std::vector<std::vector<std::pair<const ComplexMatrix*, const ComplexMatrix*>>> pairs(
      d, std::vector<std::pair<const ComplexMatrix*, const ComplexMatrix*>>(d));
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const ComplexMatrix& a = take();
      const ComplexMatrix& b = take();
      pairs[i][j] = {&a, &b};
    }

  ComplexMatrix chi(d * d);
  for (int i = 0; i < d; ++i)
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) chi(i * d + r, i * d + c) = (*diag[i])(r, c);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const ComplexMatrix& ea = *pairs[i][j].first;
      const ComplexMatrix& eb = *pairs[i][j].second;
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) {
          const cplx base = 0.5 * ((*diag[i])(r, c) + (*diag[j])(r, c));
          const cplx v = (ea(r, c) - base) + cplx(0.0, 1.0) * (eb(r, c) - base);
          chi(i * d + r, j * d + c) = v;
          chi(j * d + c, i * d + r) = std::conj(v);
        }
    }
  chi *= cplx(1.0 / d, 0.0);
  const double tr = chi.trace().real();
  if (raw_trace) *raw_trace = tr;
  if (tr <= 1e-6)
    throw DomainError("subsystem tomography: transport probability below 1e-6");
  chi *= cplx(1.0 / tr, 0.0);
  chi.hermitize();
  chan::ProcessMatrix out;
  out.d = d;
  out.chi = std::move(chi);
  out.trace_preserving = std::abs(tr - 1.0) <= 1e-7;
  return out;
}

}  // namespace

std::vector<SubsystemChi> fmo_subsystem_series(const LindbladModel& model,
                                               const std::vector<int>& sites,
                                               const std::vector<double>& times, double dt) {
  const std::vector<int> idx = site_indices(sites);
  const int d = static_cast<int>(idx.size());
  const auto probes = tomography_probes(d);

  // Evolve each probe once, collecting snapshots; project back to the
  // subsystem span at every requested time.
  std::vector<std::vector<ComplexMatrix>> responses(times.size());
  for (auto& r : responses) r.reserve(probes.size());
  for (const auto& probe : probes) {
    ComplexMatrix full(model.dim);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) full(idx[r], idx[c]) = probe(r, c);
    const auto traj = evolve_trajectory(model, full, times, dt);
    for (size_t k = 0; k < times.size(); ++k) {
      ComplexMatrix sub(d);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) sub(r, c) = traj[k](idx[r], idx[c]);
      responses[k].push_back(std::move(sub));
    }
  }

  std::vector<SubsystemChi> out;
  out.reserve(times.size());
  for (size_t k = 0; k < times.size(); ++k) {
    SubsystemChi sc;
    sc.chi = chi_from_probe_responses(responses[k], d, &sc.transport_probability);
    out.push_back(std::move(sc));
  }
  return out;
}

SubsystemChi fmo_subsystem_chi(const LindbladModel& model, const std::vector<int>& sites,
                               double t, double dt) {
  return fmo_subsystem_series(model, sites, {t}, dt).front();
}

// ---------------------------------------------------------------------------
// Environment-qubit model
// ---------------------------------------------------------------------------

namespace {

LindbladModel env_qubit_model(double gamma) {
  if (gamma < 0.0) throw DomainError("env_qubit_chi: negative gamma");
  LindbladModel m;
  m.dim = 4;  // system (x) environment, system index most significant
  m.hamiltonian = ComplexMatrix(4);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      m.hamiltonian(i * 2 + j, i * 2 + j) = 0.5 * ((i & j) ? -1.0 : 1.0);
  const ComplexMatrix i2 = ComplexMatrix::identity(2);
  for (const auto& pauli : {chan::pauli_x(), chan::pauli_y(), chan::pauli_z()})
    m.dissipators.push_back({kron(pauli, i2), gamma / 4.0});
  return m;
}

}  // namespace

std::vector<chan::ProcessMatrix> env_qubit_series(double p, double gamma,
                                                  const std::vector<double>& times,
                                                  double dt) {
  if (p < 0.0 || p > 1.0) throw DomainError("env_qubit_chi: p must lie in [0, 1]");
  const LindbladModel model = env_qubit_model(gamma);
  ComplexMatrix env(2);
  env(0, 0) = p;
  env(1, 1) = 1.0 - p;

  const auto probes = tomography_probes(2);
  std::vector<std::vector<ComplexMatrix>> responses(times.size());
  for (const auto& probe : probes) {
    const auto traj = evolve_trajectory(model, kron(probe, env), times, dt);
    for (size_t k = 0; k < times.size(); ++k)
      responses[k].push_back(partial_trace(traj[k], {2, 2}, {0}));
  }
  std::vector<chan::ProcessMatrix> out;
  out.reserve(times.size());
  for (size_t k = 0; k < times.size(); ++k)
    out.push_back(chi_from_probe_responses(responses[k], 2, nullptr));
  return out;
}

chan::ProcessMatrix env_qubit_chi(double p, double gamma, double t, double dt) {
  return env_qubit_series(p, gamma, {t}, dt).front();
}

// ---------------------------------------------------------------------------
// Non-Markovianity measure
// ---------------------------------------------------------------------------

namespace {

double positive_derivative_integral(const std::vector<double>& t,
                                    const std::vector<double>& q, size_t stride) {
  // Central differences on the strided grid, positive part, trapezoid.
  std::vector<double> ts, qs;
  for (size_t i = 0; i < t.size(); i += stride) {
    ts.push_back(t[i]);
    qs.push_back(q[i]);
  }
  const size_t n = ts.size();
  if (n < 3) throw DomainError("nonmarkov_measure: need at least 3 grid points");
  std::vector<double> dq(n, 0.0);
  dq[0] = (qs[1] - qs[0]) / (ts[1] - ts[0]);
  dq[n - 1] = (qs[n - 1] - qs[n - 2]) / (ts[n - 1] - ts[n - 2]);
  for (size_t i = 1; i + 1 < n; ++i) dq[i] = (qs[i + 1] - qs[i - 1]) / (ts[i + 1] - ts[i - 1]);
  for (auto& v : dq) v = std::max(0.0, v);
  double h = 0.0;
  for (size_t i = 0; i + 1 < n; ++i) h += 0.5 * (dq[i] + dq[i + 1]) * (ts[i + 1] - ts[i]);
  return h;
}

}  // namespace

NonMarkovMeasure nonmarkov_measure(const std::vector<double>& times,
                                   const std::vector<double>& values) {
  if (times.size() != values.size())
    throw DimensionError("nonmarkov_measure: times/values size mismatch");
  for (size_t i = 1; i < times.size(); ++i)
    if (times[i] <= times[i - 1])
      throw DomainError("nonmarkov_measure: times must be strictly increasing");
  NonMarkovMeasure m;
  m.h = positive_derivative_integral(times, values, 1);
  if (times.size() >= 5) {
    m.h_coarse = positive_derivative_integral(times, values, 2);
    m.grid_ok = std::abs(m.h - m.h_coarse) <= 0.02 * std::max(m.h, 1e-9);
  }
  return m;
}

NonMarkovMeasure nonmarkov_measure(const TimeSeriesReport& series, Quantity q) {
  std::vector<double> vals;
  vals.reserve(series.reports.size());
  for (const auto& r : series.reports)
    vals.push_back(q == Quantity::alpha ? r.alpha : r.beta);
  return nonmarkov_measure(series.times, vals);
}

// ---------------------------------------------------------------------------
// Divisibility
// ---------------------------------------------------------------------------

DivisibilityReport divisibility_test(double p, double gamma, double t1, double t2,
                                     const classical::Model& qubit_model,
                                     const sdp::SolverOptions& opts, double dt) {
  if (!(0.0 < t1 && t1 < t2)) throw DomainError("divisibility_test: need 0 < t1 < t2");
  const auto chis = env_qubit_series(p, gamma, {t1, t2 - t1, t2}, dt);
  const chan::ProcessMatrix& chi1 = chis[0];
  const chan::ProcessMatrix& chi2_fresh = chis[1];
  const chan::ProcessMatrix& chi_full = chis[2];

  DivisibilityReport rep;
  rep.alpha_full = quant::alpha(chi_full, qubit_model, opts).alpha;
  const chan::ProcessMatrix split = chan::compose(chi2_fresh, chi1);
  rep.alpha_split = quant::alpha(split, qubit_model, opts).alpha;
  rep.gap = std::abs(rep.alpha_full - rep.alpha_split);

  // Inverse-extracted intermediate map: recomposition reproduces the full
  // map up to integration error, independent of Markovianity.
  try {
    const chan::ProcessMatrix chi2_inv = chan::compose(chi_full, chan::invert(chi1));
    const chan::ProcessMatrix recomposed = chan::compose(chi2_inv, chi1);
    const double a = quant::alpha(recomposed, qubit_model, opts).alpha;
    rep.inverse_ok = true;
    rep.inverse_gap = std::abs(rep.alpha_full - a);
  } catch (const DomainError& e) {
    rep.inverse_ok = false;
    rep.inverse_note = e.what();
  }
  return rep;
}

}  // namespace procq::dyn
