#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "qchain/errors.hpp"
#include "qchain/gaussian.hpp"
#include "qchain/observables.hpp"
#include "qchain/protocol.hpp"

namespace qchain {

enum class Observable { rdm_params, entropy, momentum, otoc, ratio };

inline const char* observable_name(Observable o) {
  switch (o) {
    case Observable::rdm_params: return "rdm_params";
    case Observable::entropy: return "entropy";
    case Observable::momentum: return "momentum";
    case Observable::otoc: return "otoc";
    case Observable::ratio: return "ratio";
  }
  return "?";
}

inline Observable observable_from_name(const std::string& name) {
  for (Observable o : {Observable::rdm_params, Observable::entropy, Observable::momentum,
                       Observable::otoc, Observable::ratio}) {
    if (name == observable_name(o)) return o;
  }
  throw ConfigError("unknown observable \"" + name + "\"");
}

struct RunConfig {
  int n_sites = 500;
  double omega_initial = 3.0;
  double omega_final = 20.0;
  double coupling = 2.0;
  double quench_period = 4.0;
  int num_quenches = 5;
  double t_max = 40.0;
  double dt = 0.01;
  std::array<int, 2> otoc_sites{1, 6};
  double ratio_delta = 1.0;
  std::set<Observable> observables{Observable::rdm_params, Observable::entropy,
                                   Observable::momentum, Observable::otoc,
                                   Observable::ratio};
  std::string output_path;
  int threads = 0;  // 0 = auto; THREADS env var overrides either way
  std::vector<std::string> header_comments;

  void validate() const {
    if (n_sites < 2) throw ConfigError("n_sites must be >= 2");
    if (!(omega_initial > 0.0)) throw ConfigError("omega_initial must be > 0");
    if (!(omega_final > 0.0)) throw ConfigError("omega_final must be > 0");
    if (!(coupling >= 0.0)) throw ConfigError("coupling must be >= 0");
    if (!(quench_period > 0.0)) throw ConfigError("quench_period must be > 0");
    if (num_quenches < 1) throw ConfigError("num_quenches must be >= 1");
    if (!(t_max > 0.0)) throw ConfigError("t_max must be > 0");
    if (!(dt > 0.0) || dt > t_max) throw ConfigError("dt must be in (0, t_max]");
    for (int s : otoc_sites)
      if (s < 1 || s > n_sites) throw ConfigError("otoc_sites must lie in 1..n_sites");
    if (!std::isfinite(ratio_delta)) throw ConfigError("ratio_delta must be finite");
    if (observables.empty()) throw ConfigError("observables must not be empty");
    if (output_path.empty()) throw ConfigError("output_path must be set");
    if (threads < 0) throw ConfigError("threads must be >= 0");
  }

  std::vector<std::string> warnings() const {
    std::vector<std::string> out;
    if (t_max <= num_quenches * quench_period)
      out.push_back("t_max <= num_quenches * quench_period: the run ends before the "
                    "protocol completes; late-time observables will not saturate");
    return out;
  }

  QuenchProtocol protocol() const {
    return QuenchProtocol::periodic(ChainSpec{n_sites, omega_initial, coupling},
                                    omega_final, quench_period, num_quenches);
  }

  bool enabled(Observable o) const { return observables.count(o) > 0; }
  bool needs_rdm() const {
    return enabled(Observable::rdm_params) || enabled(Observable::entropy) ||
           enabled(Observable::momentum) || enabled(Observable::ratio);
  }

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_json_file(const std::string& path);
};

inline RunConfig RunConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "n_sites", "omega_initial", "omega_final", "coupling", "quench_period",
      "num_quenches", "t_max", "dt", "otoc_sites", "ratio_delta", "observables",
      "output_path", "threads"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) throw ConfigError("unknown config key \"" + item.key() + "\"");
  }
  RunConfig cfg;
  try {
    cfg.n_sites = j.at("n_sites").get<int>();
    cfg.omega_initial = j.at("omega_initial").get<double>();
    cfg.omega_final = j.at("omega_final").get<double>();
    cfg.coupling = j.at("coupling").get<double>();
    cfg.quench_period = j.at("quench_period").get<double>();
    cfg.num_quenches = j.at("num_quenches").get<int>();
    cfg.t_max = j.at("t_max").get<double>();
    cfg.output_path = j.at("output_path").get<std::string>();
    if (j.contains("dt")) cfg.dt = j.at("dt").get<double>();
    if (j.contains("otoc_sites")) {
      const auto sites = j.at("otoc_sites");
      if (!sites.is_array() || sites.size() != 2)
        throw ConfigError("otoc_sites must be an array of two site indices");
      cfg.otoc_sites = {sites[0].get<int>(), sites[1].get<int>()};
    }
    if (j.contains("ratio_delta")) cfg.ratio_delta = j.at("ratio_delta").get<double>();
    if (j.contains("observables")) {
      cfg.observables.clear();
      for (const auto& name : j.at("observables"))
        cfg.observables.insert(observable_from_name(name.get<std::string>()));
    }
    if (j.contains("threads")) {
      const auto& th = j.at("threads");
      if (th.is_string()) {
        if (th.get<std::string>() != "auto") throw ConfigError("threads must be an integer or \"auto\"");
        cfg.threads = 0;
      } else {
        cfg.threads = th.get<int>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

inline RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file \"" + path + "\"");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

/// Uniform grid 0, dt, ..., t_max with the quench boundaries inserted
/// exactly (a grid point within dt*1e-6 of a boundary is snapped onto it,
/// so continuity checks hit the boundary times bit-exactly).
inline std::vector<double> time_grid(double t_max, double dt,
                                     const std::vector<double>& boundaries) {
  std::vector<double> grid;
  for (long i = 0;; ++i) {
    const double t = static_cast<double>(i) * dt;
    if (t > t_max * (1.0 + 1e-12)) break;
    grid.push_back(t);
  }
  for (double b : boundaries) {
    if (b < 0.0 || b > t_max * (1.0 + 1e-12)) continue;
    auto it = std::lower_bound(grid.begin(), grid.end(), b - dt * 1e-6);
    if (it != grid.end() && std::abs(*it - b) <= dt * 1e-6) {
      *it = b;
    } else {
      grid.insert(std::upper_bound(grid.begin(), grid.end(), b), b);
    }
  }
  return grid;
}

/// Thread count: THREADS env var wins, then the config value, then the
/// hardware concurrency.
inline unsigned resolve_thread_count(int requested) {
  if (const char* env = std::getenv("THREADS")) {
    int value = 0;
    const auto [ptr, ec] = std::from_chars(env, env + std::string_view(env).size(), value);
    if (ec == std::errc{} && *ptr == '\0' && value > 0) return static_cast<unsigned>(value);
    throw ConfigError("THREADS must be a positive integer");
  }
  if (requested > 0) return static_cast<unsigned>(requested);
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

struct SimulationResult {
  std::vector<double> times;
  std::vector<ObservableSample> samples;
};

namespace detail {

struct Engine {
  const RunConfig& cfg;
  QuenchProtocol protocol;
  ModeTransform transform;
  std::vector<ModeSolution> modes;

  explicit Engine(const RunConfig& c)
      : cfg(c),
        protocol(c.protocol()),
        transform(ModeTransform::build(c.n_sites)),
        modes(propagate_all_modes(protocol)) {}

  struct Workspace {
    Eigen::MatrixXd omega;
    Eigen::MatrixXd btilde;
  };

  ObservableSample sample(double t, Workspace& ws) const {
    ObservableSample s;
    s.t = t;
    if (cfg.needs_rdm()) {
      const QuadraticForms forms = quadratic_forms(modes, t);
      site_matrix_circulant(forms.omega_diag, ws.omega);
      site_matrix_circulant(forms.btilde_diag, ws.btilde);
      RdmParams p;
      try {
        p = rdm_params(ws.omega, ws.btilde, 1);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " (at t=" + std::to_string(t) + ")");
      }
      if (cfg.enabled(Observable::rdm_params)) {
        s.gamma_r = p.gamma_r;
        s.gamma_minus_beta = p.gamma_r - p.beta_r;
        s.Z = p.Z;
      }
      if (cfg.enabled(Observable::entropy)) s.entropy = entanglement_entropy(p);
      if (cfg.enabled(Observable::momentum)) s.n0 = momentum_distribution(p, 0.0);
      if (cfg.enabled(Observable::ratio))
        s.abs_ratio = std::abs(offdiag_ratio(p, 0.0, cfg.ratio_delta));
    }
    if (cfg.enabled(Observable::otoc))
      s.otoc = otoc_value(transform, modes, cfg.otoc_sites[0], cfg.otoc_sites[1], t);
    return s;
  }
};

}  // namespace detail

/// Runs every time point of the grid (work distributed over a pool; each
/// sample is computed by exactly one worker, so the result is independent
/// of the thread count).
inline SimulationResult run_simulation(const RunConfig& cfg) {
  cfg.validate();
  const detail::Engine engine(cfg);
  SimulationResult result;
  result.times = time_grid(cfg.t_max, cfg.dt, engine.protocol.boundary_times());
  result.samples.resize(result.times.size());

  const unsigned threads =
      std::min<unsigned>(resolve_thread_count(cfg.threads),
                         std::max<size_t>(1, result.times.size()));
  std::atomic<size_t> next{0};
  std::mutex error_mutex;
  size_t error_index = result.times.size();
  std::string error_message;

  auto worker = [&]() {
    detail::Engine::Workspace ws;
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= result.times.size()) break;
      try {
        result.samples[i] = engine.sample(result.times[i], ws);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (i < error_index) {
          error_index = i;
          error_message = e.what();
        }
      }
    }
  };

  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error_index < result.times.size()) throw NumericalError(error_message);
  return result;
}

namespace detail {

inline void append_double(std::string& out, double value) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value,
                                 std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

inline void append_cell(std::string& out, const std::optional<double>& value) {
  out.push_back(',');
  if (value) append_double(out, *value);
}

}  // namespace detail

inline std::string csv_text(const RunConfig& cfg, const SimulationResult& result) {
  std::string out;
  out.reserve(result.samples.size() * 96 + 128);
  for (const auto& comment : cfg.header_comments) out += "# " + comment + "\n";
  out += "t,gamma_r,gamma_minus_beta,Z,entropy,n0,otoc,abs_ratio\n";
  for (const auto& s : result.samples) {
    detail::append_double(out, s.t);
    detail::append_cell(out, s.gamma_r);
    detail::append_cell(out, s.gamma_minus_beta);
    detail::append_cell(out, s.Z);
    detail::append_cell(out, s.entropy);
    detail::append_cell(out, s.n0);
    detail::append_cell(out, s.otoc);
    detail::append_cell(out, s.abs_ratio);
    out.push_back('\n');
  }
  return out;
}

inline void write_csv(const RunConfig& cfg, const SimulationResult& result) {
  std::ofstream out(cfg.output_path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file \"" + cfg.output_path + "\"");
  out << csv_text(cfg, result);
  if (!out) throw ConfigError("failed writing \"" + cfg.output_path + "\"");
}

/// simulate = compute + write.
inline void run_simulation_to_csv(const RunConfig& cfg) {
  write_csv(cfg, run_simulation(cfg));
}

namespace detail {

inline std::string with_suffix(const std::string& path, const std::string& suffix) {
  const size_t slash = path.find_last_of('/');
  const size_t dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + suffix + ".csv";
  return path.substr(0, dot) + suffix + path.substr(dot);
}

}  // namespace detail

/// Named data-series presets matching the reference parameter set
/// (N = 500 chain, omega 3 <-> 20, k = 2, T = 4 s unless stated). `base`
/// supplies only output_path (used as the stem) and threads.
inline std::vector<RunConfig> figure_presets(int figure, const RunConfig& base) {
  auto preset = [&](int n_sites, int quenches, double t_max, double dt,
                    std::set<Observable> obs, const std::string& suffix,
                    const std::string& note) {
    RunConfig cfg;
    cfg.n_sites = n_sites;
    cfg.num_quenches = quenches;
    cfg.t_max = t_max;
    cfg.dt = dt;
    cfg.observables = std::move(obs);
    cfg.threads = base.threads;
    cfg.output_path = detail::with_suffix(base.output_path, suffix);
    cfg.header_comments = {note};
    return cfg;
  };
  std::vector<RunConfig> runs;
  switch (figure) {
    case 2:
      for (int q : {1, 5})
        runs.push_back(preset(500, q, 40.0, 0.01, {Observable::rdm_params, Observable::ratio},
                              "_fig2_q" + std::to_string(q),
                              "figure 2 series: gamma_r and gamma_r - beta_r vs time; N=500, "
                              "omega 3 -> 20, k=2, T=4 s, quenches=" + std::to_string(q)));
      break;
    case 3:
      for (int q : {1, 3, 5})
        runs.push_back(preset(500, q, 40.0, 0.01,
                              {Observable::rdm_params, Observable::momentum},
                              "_fig3_q" + std::to_string(q),
                              "figure 3 series: central momentum component n(0,t); N=500, "
                              "omega 3 -> 20, k=2, T=4 s, quenches=" + std::to_string(q)));
      break;
    case 4:
      for (int q : {1, 5})
        runs.push_back(preset(500, q, 40.0, 0.01,
                              {Observable::rdm_params, Observable::entropy},
                              "_fig4_q" + std::to_string(q),
                              "figure 4 series: entanglement entropy S(t); N=500, omega 3 -> 20, "
                              "k=2, T=4 s, quenches=" + std::to_string(q)));
      break;
    case 5:
      for (int q : {1, 3, 5})
        runs.push_back(preset(500, q, 150.0, 0.02, {Observable::otoc},
                              "_fig5_q" + std::to_string(q),
                              "figure 5 series: OTOC of x_1(t), p_6(0); N=500, omega 3 -> 20, "
                              "k=2, T=4 s, quenches=" + std::to_string(q) +
                              "; t_max=150 s covers the light-cone arrival near l/v_max ~ 50 s"));
      break;
    case 6:
      for (int n : {20, 100, 200, 500})
        runs.push_back(preset(n, 5, 13.0 * n, 0.05, {Observable::otoc},
                              "_fig6_n" + std::to_string(n),
                              "figure 6 series: OTOC of x_1(t), p_6(0) for N=" + std::to_string(n) +
                              ", 5 quenches, omega 3 -> 20, k=2, T=4 s; t_max=13N s covers the "
                              "quasi-recurrence near N/v_max ~ 10N s"));
      break;
    default:
      throw ConfigError("figure must be one of 2, 3, 4, 5, 6");
  }
  return runs;
}

}  // namespace qchain
