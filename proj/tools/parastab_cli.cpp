// parastab: validate, synthesize, simulate and reproduce.
//
// Exit codes: 0 success, 2 infeasible / assumption or decay failure,
// 3 undecided, 4 input error.

#include <parastab/config.hpp>
#include <parastab/controller.hpp>
#include <parastab/model.hpp>
#include <parastab/report.hpp>
#include <parastab/sim.hpp>
#include <parastab/spectral.hpp>
#include <parastab/synthesis.hpp>
#include <parastab/transform.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace parastab;

namespace {

constexpr int kOk = 0;
constexpr int kInfeasible = 2;
constexpr int kUndecided = 3;
constexpr int kInputError = 4;

struct Options {
  std::string config;
  std::string preset = "paper-siv";
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> l1;
  std::vector<double> gamma_grid;
  std::vector<double> rho_grid;
  std::optional<double> delta;
  std::optional<int> modes;
  std::optional<double> dt;
  std::optional<double> t_end;
  bool open_loop = false;
  std::string gain;
};

struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& msg, int code)
      : std::runtime_error(stage + ": " + msg), code(code) {}
  int code;
};

RunConfig resolve(const Options& o) {
  RunConfig cfg = o.config.empty() ? preset_config(o.preset) : load_config(o.config);
  if (!o.out.empty()) cfg.output = o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (o.l1) {
    if (*o.l1 < 0.0) throw ConfigError("--l1 must be nonnegative");
    cfg.plant.nonlinearity.set(1, *o.l1 > 0.0 ? NamedTerm{"sin", *o.l1, 3, 1.0} : NamedTerm{});
  }
  if (!o.gamma_grid.empty()) cfg.synthesis.gamma_grid = o.gamma_grid;
  if (!o.rho_grid.empty()) cfg.synthesis.rho_grid = o.rho_grid;
  if (o.delta) cfg.synthesis.delta = *o.delta;
  if (o.modes) cfg.sim.modes = *o.modes;
  if (o.dt) cfg.sim.dt = *o.dt;
  if (o.t_end) cfg.sim.t_end = *o.t_end;
  try {
    cfg.synthesis.check();
    cfg.sim.check();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

struct Setup {
  EigenBasis basis;
  ActuatorMatrix actuators;
};

Setup make_setup(const RunConfig& cfg) {
  const int n_max = std::max(cfg.resolved_basis_modes(), cfg.sim.modes);
  Setup s{EigenBasis::compute(cfg.plant.bc, cfg.plant.length, n_max), {}};
  const SpatialGrid grid =
      SpatialGrid::for_modes(cfg.plant.length, cfg.synthesis.N + 1, cfg.plant.shapes.breakpoints);
  s.actuators = actuator_matrix(cfg.plant.shapes, s.basis, grid);
  return s;
}

fs::path out_dir(const RunConfig& cfg) {
  fs::path p(cfg.output);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw ConfigError("cannot create output directory '" + cfg.output + "'");
  return p;
}

template <class F>
void write_file(const fs::path& path, F&& body) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'");
  body(os);
}

// ---------------------------------------------------------------------------

int stage_validate(const RunConfig& cfg, const Setup& s, const fs::path& dir) {
  const int hi = std::max(cfg.synthesis.N, 20);
  const AssumptionReport rep = validate(cfg.plant, s.basis, 1, hi, cfg.seed);
  std::ostringstream text;
  write_assumption_report(text, rep);
  if (cfg.synthesis.K0 || cfg.plant.q21() * cfg.plant.q32() != 0.0) {
    try {
      const RowVec3 K0 = resolve_K0(cfg.plant, cfg.synthesis);
      text << "K0 " << format_double(K0(0)) << ' ' << format_double(K0(1)) << ' '
           << format_double(K0(2)) << " (Q0 + B K0 Hurwitz)\n";
    } catch (const Error& e) {
      text << "K0: " << e.what() << '\n';
    }
  }
  std::cout << text.str();
  write_file(dir / "assumptions.txt", [&](std::ostream& os) { os << text.str(); });
  return rep.a1_ok && rep.a2_ok && rep.a3_invertible ? kOk : kInfeasible;
}

struct SynthOutcome {
  GridSearchResult search;
  std::optional<TransformPack> pack;
  std::optional<FeedbackGain> gain;
};

SynthOutcome stage_synth(const RunConfig& cfg, const Setup& s, const fs::path& dir) {
  SynthOutcome out;
  out.search = grid_search(cfg.plant, s.basis, s.actuators, cfg.synthesis);
  const Certificate& c = out.search.best;
  std::optional<ComparisonConstants> k;
  if (out.search.feasible()) {
    out.pack = build_transform(cfg.plant, s.basis, s.actuators, c.K0, c.N, c.gamma);
    out.gain = build_gain(s.actuators, *out.pack, c.K0);
    k = comparison_constants(c, *out.pack);
    write_file(dir / "gain.txt", [&](std::ostream& os) { write_gain_file(os, c, *out.gain); });
    const LmiSet lmis =
        assemble_lmis(cfg.plant, s.basis, s.actuators, *out.pack, cfg.synthesis, c.gamma, c.rho, c.l1);
    write_file(dir / "lmi_system.txt",
               [&](std::ostream& os) { sdp::write_system(os, lmis.system(cfg.synthesis.bound)); });
  }
  write_file(dir / "certificate.txt", [&](std::ostream& os) { write_certificate_report(os, c, k); });
  write_file(dir / "search_log.csv", [&](std::ostream& os) { write_search_log_csv(os, out.search.log); });

  // Constructive estimate, for information only.
  try {
    const AssumptionReport rep =
        validate(cfg.plant, s.basis, 1, std::max(cfg.synthesis.N, 20), cfg.seed);
    const double beta1 = cfg.beta1 > rep.beta ? cfg.beta1 : 0.5 * (rep.beta + 1.0);
    const ConstructiveEstimate est = constructive_estimate(cfg.plant, s.basis, cfg.synthesis, beta1, rep.eta, rep.beta);
    write_file(dir / "constructive_estimate.txt", [&](std::ostream& os) { write_constructive_estimate(os, est); });
  } catch (const Error& e) {
    write_file(dir / "constructive_estimate.txt", [&](std::ostream& os) { os << "error " << e.what() << '\n'; });
  }

  std::printf("synth: %s after %zu cells; gamma = %g, rho = %g, N = %d, l1 = %g\n",
              sdp::to_string(out.search.status), out.search.log.size(), c.gamma, c.rho, c.N, c.l1);
  std::printf("synth: margins phi %.3e tail %.3e (oracle %.3e)\n", c.margin_phi, c.margin_tail,
              c.oracle_margin);
  if (k) std::printf("synth: overshoot bound M = %.6g\n", k->M);
  return out;
}

int synth_code(const GridSearchResult& r) {
  switch (r.status) {
    case sdp::Status::Feasible: return kOk;
    case sdp::Status::Infeasible: return kInfeasible;
    case sdp::Status::Undecided: return kUndecided;
  }
  return kUndecided;
}

struct SimSummary {
  bool closed_loop = false;
  bool all_pass = true;
  bool blew_up = false;
  double min_rate = std::numeric_limits<double>::infinity();
  double max_M = 0.0;
  double max_growth = 0.0;
};

ModalState initial_state(const RunConfig& cfg, int run) {
  const int M = cfg.sim.modes;
  const InitialCondition& ic = cfg.initial;
  switch (ic.kind) {
    case InitialCondition::Kind::Zero: return ModalState(M);
    case InitialCondition::Kind::Mode: {
      if (ic.mode > M) throw ConfigError("sim.initial.mode exceeds sim.modes");
      ModalState s(M);
      Vec3 v = Vec3::Zero();
      v(ic.component - 1) = ic.amplitude;
      s.set_mode(ic.mode, v);
      return s;
    }
    case InitialCondition::Kind::Random: break;
  }
  return random_smooth_state(M, cfg.seed + static_cast<std::uint64_t>(run), ic.excited, ic.amplitude);
}

SimSummary stage_simulate(const RunConfig& cfg, const Setup& s, const fs::path& dir,
                          const FeedbackGain* gain, const Certificate* cert,
                          const TransformPack* pack) {
  SimSummary sum;
  sum.closed_loop = gain != nullptr;
  std::ostringstream text;
  for (int run = 0; run < cfg.runs; ++run) {
    const ModalState z0 = initial_state(cfg, run);
    Trajectory tr = simulate(cfg.plant, s.basis, gain, z0, cfg.sim);
    if (cert && pack) tr.V = lyapunov_trace(tr, *cert, *pack);
    const fs::path stem = dir / ("trajectory_" + std::to_string(run) + ".csv");
    write_file(stem, [&](std::ostream& os) { write_trajectory_csv(os, tr); });
    if (!tr.snapshots.empty()) {
      write_file(dir / ("snapshots_" + std::to_string(run) + ".csv"),
                 [&](std::ostream& os) { write_snapshots_csv(os, tr); });
    }

    char line[256];
    if (tr.blew_up) {
      sum.blew_up = true;
      sum.all_pass = false;
      std::snprintf(line, sizeof line, "run %d: FAIL %s\n", run, tr.diagnostic.c_str());
      text << line;
      continue;
    }
    if (tr.norms.front() == 0.0) {
      std::snprintf(line, sizeof line, "run %d: zero initial condition, trajectory identically %s\n",
                    run, tr.norms.back() == 0.0 ? "zero" : "NONZERO");
      if (tr.norms.back() != 0.0) sum.all_pass = false;
      text << line;
      continue;
    }
    const double ta = std::min(cfg.fit_start, 0.5 * cfg.sim.t_end);
    const double tb = std::min(cfg.fit_end, cfg.sim.t_end);
    const DecayFit fit = fit_decay(tr, ta, tb);
    sum.min_rate = std::min(sum.min_rate, fit.rate);
    sum.max_M = std::max(sum.max_M, fit.M_fit);
    const double growth = tr.V.empty() ? 0.0 : lyapunov_growth(tr, cfg.synthesis.delta);
    sum.max_growth = std::max(sum.max_growth, growth);
    if (gain) {
      const bool pass = fit.rate >= 0.95 * cfg.synthesis.delta && growth <= 0.02;
      if (!pass) sum.all_pass = false;
      std::snprintf(line, sizeof line,
                    "run %d: rate %.6g on [%g, %g], M_fit %.6g, V growth %.3g -> %s (delta %g)\n",
                    run, fit.rate, ta, tb, fit.M_fit, growth, pass ? "PASS" : "FAIL",
                    cfg.synthesis.delta);
    } else {
      std::snprintf(line, sizeof line, "run %d: open loop, rate %.6g on [%g, %g] (%s), |z(T)| = %.6g\n",
                    run, fit.rate, ta, tb, fit.rate < 0 ? "growth" : "decay", tr.norms.back());
    }
    text << line;
    for (const std::string& w : tr.warnings) text << "run " << run << ": warning: " << w << '\n';
  }
  std::cout << text.str();
  write_file(dir / "simulation_summary.txt", [&](std::ostream& os) { os << text.str(); });
  return sum;
}

int sim_code(const SimSummary& s) {
  if (s.blew_up) return kInfeasible;
  if (s.closed_loop && !s.all_pass) return kInfeasible;
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_validate(const Options& o) {
  const RunConfig cfg = resolve(o);
  const Setup s = make_setup(cfg);
  return stage_validate(cfg, s, out_dir(cfg));
}

int cmd_synth(const Options& o) {
  const RunConfig cfg = resolve(o);
  const Setup s = make_setup(cfg);
  const SynthOutcome r = stage_synth(cfg, s, out_dir(cfg));
  return synth_code(r.search);
}

int cmd_simulate(const Options& o) {
  RunConfig cfg = resolve(o);
  const fs::path dir = out_dir(cfg);
  if (o.open_loop) {
    const Setup s = make_setup(cfg);
    return sim_code(stage_simulate(cfg, s, dir, nullptr, nullptr, nullptr));
  }
  if (!o.gain.empty()) {
    std::ifstream in(o.gain);
    if (!in) throw ConfigError("cannot open gain file '" + o.gain + "'");
    const GainFile gf = read_gain_file(in);
    if (gf.cert.N != cfg.plant.actuator_count()) {
      if (!cfg.plant.shapes.resized) throw ConfigError("gain N does not match the actuators");
      cfg.plant.shapes = cfg.plant.shapes.with_count(gf.cert.N);
    }
    cfg.synthesis.N = gf.cert.N;
    cfg.synthesis.delta = gf.cert.delta > 0 ? gf.cert.delta : cfg.synthesis.delta;
    const Setup s = make_setup(cfg);
    const FeedbackGain gain = gain_from_file(gf);
    const TransformPack pack =
        build_transform(cfg.plant, s.basis, s.actuators, gf.cert.K0, gf.cert.N, gf.cert.gamma);
    return sim_code(stage_simulate(cfg, s, dir, &gain, &gf.cert, &pack));
  }
  // No gain given: synthesize first.
  const Setup s = make_setup(cfg);
  const SynthOutcome r = stage_synth(cfg, s, dir);
  if (!r.search.feasible()) return synth_code(r.search);
  return sim_code(stage_simulate(cfg, s, dir, &*r.gain, &r.search.best, &*r.pack));
}

int cmd_reproduce(const Options& o) {
  const bool exploration = o.l1.has_value();
  const RunConfig cfg = resolve(o);
  const fs::path dir = out_dir(cfg);

  Setup s;
  try {
    s = make_setup(cfg);
  } catch (const Error& e) {
    throw StageError("setup", e.what(), kInputError);
  }
  int code = kOk;
  try {
    code = stage_validate(cfg, s, dir);
  } catch (const Error& e) {
    throw StageError("validate", e.what(), kInputError);
  }
  if (code != kOk) throw StageError("validate", "assumptions do not hold", code);

  SynthOutcome r;
  try {
    r = stage_synth(cfg, s, dir);
  } catch (const Error& e) {
    throw StageError("synth", e.what(), kUndecided);
  }
  const double l1 = cfg.plant.nonlinearity.lipschitz[0];
  std::ostringstream summary;
  summary << "l1 " << format_double(l1) << '\n';
  summary << "feasibility " << sdp::to_string(r.search.status) << '\n';
  if (!r.search.feasible()) {
    std::cout << summary.str();
    write_file(dir / "summary.txt", [&](std::ostream& os) { os << summary.str(); });
    if (exploration) return kOk;
    return synth_code(r.search);
  }
  const Certificate& c = r.search.best;
  summary << "gamma " << format_double(c.gamma) << "\nrho " << format_double(c.rho) << '\n';

  SimSummary sim;
  try {
    sim = stage_simulate(cfg, s, dir, &*r.gain, &c, &*r.pack);
  } catch (const Error& e) {
    throw StageError("simulate", e.what(), kUndecided);
  }
  summary << "fitted_rate_min " << format_double(sim.min_rate) << '\n';
  summary << "M_fit_max " << format_double(sim.max_M) << '\n';
  summary << "lyapunov_growth_max " << format_double(sim.max_growth) << '\n';
  if (exploration) {
    summary << "mode exploration\n";
  } else {
    summary << "decay " << (sim.all_pass ? "PASS" : "FAIL") << '\n';
  }
  std::cout << summary.str();
  write_file(dir / "summary.txt", [&](std::ostream& os) { os << summary.str(); });
  if (exploration) return kOk;
  return sim.all_pass && !sim.blew_up ? kOk : kInfeasible;
}

void add_common(CLI::App* app, Options& o) {
  app->add_option("--config", o.config, "JSON run configuration");
  app->add_option("--preset", o.preset, "preset used when no --config is given");
  app->add_option("--out", o.out, "output directory");
  app->add_option("--seed", o.seed, "seed for random initial conditions");
  app->add_option("--l1", o.l1, "Lipschitz constant of f1 = l1 sin(z3)");
  app->add_option("--gamma-grid", o.gamma_grid, "comma separated gamma values")->delimiter(',');
  app->add_option("--rho-grid", o.rho_grid, "comma separated rho values")->delimiter(',');
  app->add_option("--delta", o.delta, "decay rate");
  app->add_option("--modes", o.modes, "simulated modes");
  app->add_option("--dt", o.dt, "time step");
  app->add_option("--t-end", o.t_end, "final time");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parastab: stabilization of underactuated reaction-diffusion systems"};
  app.require_subcommand(1);
  Options o;
  auto* v = app.add_subcommand("validate", "check the plant assumptions");
  auto* s = app.add_subcommand("synth", "grid-search a stability certificate and feedback gain");
  auto* m = app.add_subcommand("simulate", "closed- or open-loop simulation");
  auto* r = app.add_subcommand("reproduce", "validate, synth and simulate the preset end to end");
  for (auto* sub : {v, s, m, r}) add_common(sub, o);
  m->add_flag("--open-loop", o.open_loop, "simulate without feedback");
  m->add_option("--gain", o.gain, "gain file written by synth");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  try {
    if (v->parsed()) return cmd_validate(o);
    if (s->parsed()) return cmd_synth(o);
    if (m->parsed()) return cmd_simulate(o);
    if (r->parsed()) return cmd_reproduce(o);
  } catch (const StageError& e) {
    std::cerr << "error: stage " << e.what() << '\n';
    return e.code;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const AssumptionViolation& e) {
    std::cerr << "error: assumption violated: " << e.what() << '\n';
    return kInfeasible;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUndecided;
  }
  return kInputError;
}
