#include <parastab/config.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace parastab {

using nlohmann::json;

int RunConfig::resolved_basis_modes() const {
  if (basis_modes > 0) return basis_modes;
  return std::max({sim.modes, synthesis.N + 1, 200});
}

RunConfig preset_config(std::string_view name) {
  if (name != "paper-siv") throw ConfigError("unknown preset '" + std::string(name) + "'");
  RunConfig c;
  c.preset = "paper-siv";
  c.plant = example_plant(15.0);
  c.synthesis.delta = 1.0;
  c.synthesis.N = 5;
  c.synthesis.K0 = RowVec3(-3.708, -26.329, -2.222);
  c.synthesis.gamma_grid = {1, 2, 5, 10, 25, 50, 100};
  c.synthesis.rho_grid = c.synthesis.rho_values();
  c.synthesis.rho_grid.push_back(1.24e-4);
  std::sort(c.synthesis.rho_grid.begin(), c.synthesis.rho_grid.end());
  c.sim.modes = 60;
  c.sim.dt = 1e-4;
  c.sim.t_end = 5.0;
  c.runs = 5;
  return c;
}

namespace {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError((path_.empty() ? std::string("config") : path_) + ": " + msg);
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) const { return j_.at(key); }

  Reader sub(const std::string& key) const { return Reader(j_.at(key), at(key)); }

  double number(const std::string& key) const {
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(at(key) + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(at(key) + ": not finite");
    return d;
  }

  double number_or(const std::string& key, double dflt) const { return has(key) ? number(key) : dflt; }

  int integer(const std::string& key) const {
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(at(key) + ": expected an integer");
    return v.get<int>();
  }

  int integer_or(const std::string& key, int dflt) const { return has(key) ? integer(key) : dflt; }

  std::string string(const std::string& key) const {
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(at(key) + ": expected a string");
    return v.get<std::string>();
  }

  std::vector<double> list(const std::string& key) const {
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(at(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) {
        throw ConfigError(at(key) + "[" + std::to_string(i) + "]: expected a number");
      }
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  Vec3 vec3(const std::string& key) const {
    const auto v = list(key);
    if (v.size() != 3) throw ConfigError(at(key) + ": expected 3 entries");
    return Vec3(v[0], v[1], v[2]);
  }

  Mat3 mat3(const std::string& key) const {
    const json& v = j_.at(key);
    if (!v.is_array() || v.size() != 3) throw ConfigError(at(key) + ": expected a 3x3 nested array");
    Mat3 m;
    for (int r = 0; r < 3; ++r) {
      const std::string p = at(key) + "[" + std::to_string(r) + "]";
      if (!v[r].is_array() || v[r].size() != 3) throw ConfigError(p + ": expected 3 entries");
      for (int c = 0; c < 3; ++c) {
        if (!v[r][c].is_number()) {
          throw ConfigError(p + "[" + std::to_string(c) + "]: expected a number");
        }
        m(r, c) = v[r][c].get<double>();
      }
    }
    return m;
  }

  void only(std::initializer_list<const char*> keys) const {
    std::set<std::string> allowed;
    for (const char* k : keys) allowed.insert(k);
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!allowed.count(it.key())) throw ConfigError(at(it.key()) + ": unknown field");
    }
  }

 private:
  const json& j_;
  std::string path_;
};

BoundaryConditions parse_bc(const Reader& r, const std::string& key) {
  const json& v = r.raw(key);
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "dirichlet") return BoundaryConditions::dirichlet();
    if (s == "neumann") return BoundaryConditions::neumann();
    throw ConfigError(r.at(key) + ": expected 'dirichlet', 'neumann' or an object");
  }
  const Reader b = r.sub(key);
  b.only({"g11", "g12", "g21", "g22"});
  BoundaryConditions bc;
  bc.g11 = b.number_or("g11", 1.0);
  bc.g12 = b.number_or("g12", 0.0);
  bc.g21 = b.number_or("g21", 1.0);
  bc.g22 = b.number_or("g22", 0.0);
  try {
    bc.check();
  } catch (const ParameterError& e) {
    throw ConfigError(r.at(key) + ": " + e.what());
  }
  return bc;
}

void parse_plant(const Reader& r, RunConfig& cfg) {
  r.only({"preset", "length", "diffusion", "Q0", "Q1", "bc", "nonlinearity", "actuators", "l1"});
  if (r.has("preset")) {
    const std::string name = r.string("preset");
    try {
      const RunConfig p = preset_config(name);
      cfg.plant = p.plant;
      cfg.preset = name;
    } catch (const ConfigError& e) {
      throw ConfigError(r.at("preset") + ": " + e.what());
    }
  } else {
    cfg.plant = PlantSpec{};
    cfg.plant.shapes = ShapeFunctionSet::indicator_partition(1.0, 5);
    cfg.preset.clear();
  }
  PlantSpec& p = cfg.plant;
  if (r.has("length")) p.length = r.number("length");
  if (r.has("diffusion")) p.diffusion = r.vec3("diffusion");
  if (r.has("Q0")) p.Q0 = r.mat3("Q0");
  if (r.has("Q1")) p.Q1 = r.mat3("Q1");
  if (r.has("bc")) p.bc = parse_bc(r, "bc");
  if (r.has("nonlinearity")) {
    p.nonlinearity = Nonlinearity::zero();
    const json& arr = r.raw("nonlinearity");
    if (!arr.is_array()) throw ConfigError(r.at("nonlinearity") + ": expected an array of terms");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const Reader t(arr[i], r.at("nonlinearity") + "[" + std::to_string(i) + "]");
      t.only({"component", "kind", "gain", "arg", "level"});
      NamedTerm term;
      term.kind = t.has("kind") ? t.string("kind") : "zero";
      term.gain = t.number_or("gain", 0.0);
      term.arg = t.integer_or("arg", 3);
      term.level = t.number_or("level", 1.0);
      try {
        p.nonlinearity.set(t.integer_or("component", 1), term);
      } catch (const ConfigError& e) {
        t.fail(e.what());
      }
    }
  }
  if (r.has("l1")) {
    const double l1 = r.number("l1");
    if (l1 < 0.0) throw ConfigError(r.at("l1") + ": must be nonnegative");
    p.nonlinearity.set(1, l1 > 0.0 ? NamedTerm{"sin", l1, 3, 1.0} : NamedTerm{});
  }
  if (r.has("actuators")) {
    const Reader a = r.sub("actuators");
    a.only({"kind", "count"});
    const std::string kind = a.has("kind") ? a.string("kind") : "indicator";
    const int count = a.integer_or("count", p.actuator_count() > 0 ? p.actuator_count() : 5);
    if (count < 1) throw ConfigError(a.at("count") + ": must be positive");
    if (!(p.length > 0.0)) throw ConfigError(r.at("length") + ": must be positive");
    if (kind == "indicator") {
      p.shapes = ShapeFunctionSet::indicator_partition(p.length, count);
    } else if (kind == "eigenfunction") {
      p.shapes = eigenfunction_shapes(EigenBasis::compute(p.bc, p.length, std::max(count, 64)), count);
    } else {
      throw ConfigError(a.at("kind") + ": expected 'indicator' or 'eigenfunction'");
    }
  } else if (p.shapes.length != p.length && p.shapes.resized) {
    p.shapes = ShapeFunctionSet::indicator_partition(p.length, p.actuator_count());
  }
}

void parse_synthesis(const Reader& r, SynthesisConfig& s) {
  r.only({"delta", "N", "gamma_grid", "rho_grid", "K0", "poles", "pole_scale", "epsilon",
          "tolerance", "policy", "threads", "bound", "l1_search_max"});
  s.delta = r.number_or("delta", s.delta);
  s.N = r.integer_or("N", s.N);
  if (r.has("gamma_grid")) s.gamma_grid = r.list("gamma_grid");
  if (r.has("rho_grid")) s.rho_grid = r.list("rho_grid");
  if (r.has("K0")) {
    const Vec3 k = r.vec3("K0");
    s.K0 = RowVec3(k(0), k(1), k(2));
  }
  if (r.has("poles")) {
    const json& v = r.raw("poles");
    if (!v.is_array() || v.size() != 3) throw ConfigError(r.at("poles") + ": expected 3 poles");
    s.K0.reset();
    for (int i = 0; i < 3; ++i) {
      const std::string p = r.at("poles") + "[" + std::to_string(i) + "]";
      if (v[i].is_number()) {
        s.poles[i] = {v[i].get<double>(), 0.0};
      } else if (v[i].is_array() && v[i].size() == 2 && v[i][0].is_number() && v[i][1].is_number()) {
        s.poles[i] = {v[i][0].get<double>(), v[i][1].get<double>()};
      } else {
        throw ConfigError(p + ": expected a number or [re, im]");
      }
    }
  }
  s.pole_scale = r.number_or("pole_scale", s.pole_scale);
  s.epsilon = r.number_or("epsilon", s.epsilon);
  s.tolerance = r.number_or("tolerance", s.tolerance);
  s.bound = r.number_or("bound", s.bound);
  s.threads = r.integer_or("threads", s.threads);
  s.l1_search_max = r.number_or("l1_search_max", s.l1_search_max);
  if (r.has("policy")) {
    const std::string p = r.string("policy");
    if (p == "min-gamma") s.policy = GridPolicy::MinGamma;
    else if (p == "max-margin") s.policy = GridPolicy::MaxMargin;
    else if (p == "max-l1") s.policy = GridPolicy::MaxL1;
    else throw ConfigError(r.at("policy") + ": expected min-gamma, max-margin or max-l1");
  }
  try {
    s.check();
  } catch (const ParameterError& e) {
    r.fail(e.what());
  }
}

void parse_sim(const Reader& r, RunConfig& cfg) {
  r.only({"modes", "dt", "t_end", "record_stride", "panels_per_mode", "scheme", "blowup",
          "snapshot_times", "snapshot_points", "runs", "fit_window", "initial"});
  SimConfig& s = cfg.sim;
  s.modes = r.integer_or("modes", s.modes);
  s.dt = r.number_or("dt", s.dt);
  s.t_end = r.number_or("t_end", s.t_end);
  s.record_stride = r.integer_or("record_stride", s.record_stride);
  s.panels_per_mode = r.integer_or("panels_per_mode", s.panels_per_mode);
  s.blowup = r.number_or("blowup", s.blowup);
  s.snapshot_points = r.integer_or("snapshot_points", s.snapshot_points);
  if (r.has("snapshot_times")) s.snapshot_times = r.list("snapshot_times");
  if (r.has("scheme")) {
    const std::string v = r.string("scheme");
    if (v == "split") s.scheme = SimScheme::Split;
    else if (v == "coupled") s.scheme = SimScheme::CoupledLinear;
    else throw ConfigError(r.at("scheme") + ": expected 'split' or 'coupled'");
  }
  cfg.runs = r.integer_or("runs", cfg.runs);
  if (cfg.runs < 1) throw ConfigError(r.at("runs") + ": must be positive");
  if (r.has("fit_window")) {
    const auto w = r.list("fit_window");
    if (w.size() != 2 || !(w[1] > w[0])) throw ConfigError(r.at("fit_window") + ": expected [t_a, t_b] with t_a < t_b");
    cfg.fit_start = w[0];
    cfg.fit_end = w[1];
  }
  if (r.has("initial")) {
    const Reader ic = r.sub("initial");
    ic.only({"kind", "excited", "amplitude", "mode", "component"});
    InitialCondition& i = cfg.initial;
    const std::string kind = ic.has("kind") ? ic.string("kind") : "random";
    if (kind == "random") i.kind = InitialCondition::Kind::Random;
    else if (kind == "zero") i.kind = InitialCondition::Kind::Zero;
    else if (kind == "mode") i.kind = InitialCondition::Kind::Mode;
    else throw ConfigError(ic.at("kind") + ": expected random, zero or mode");
    i.excited = ic.integer_or("excited", i.excited);
    i.amplitude = ic.number_or("amplitude", i.amplitude);
    i.mode = ic.integer_or("mode", i.mode);
    i.component = ic.integer_or("component", i.component);
    if (i.component < 1 || i.component > 3) throw ConfigError(ic.at("component") + ": must be 1, 2 or 3");
    if (i.mode < 1) throw ConfigError(ic.at("mode") + ": must be positive");
  }
  try {
    s.check();
  } catch (const ParameterError& e) {
    r.fail(e.what());
  }
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // Byte offset to line and column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("config: syntax error at line " + std::to_string(line) + ", column " +
                      std::to_string(col));
  }
  const Reader root(j, "");
  root.only({"plant", "synthesis", "sim", "seed", "output", "basis_modes", "beta1"});

  RunConfig cfg;
  if (root.has("plant")) {
    const Reader pr = root.sub("plant");
    if (pr.has("preset")) {
      try {
        cfg = preset_config(pr.string("preset"));
      } catch (const ConfigError& e) {
        throw ConfigError(pr.at("preset") + ": " + e.what());
      }
    }
    parse_plant(pr, cfg);
  } else {
    throw ConfigError("config: missing 'plant' section");
  }
  if (root.has("synthesis")) parse_synthesis(root.sub("synthesis"), cfg.synthesis);
  if (root.has("sim")) parse_sim(root.sub("sim"), cfg);
  if (root.has("seed")) {
    const json& v = j.at("seed");
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError("seed: expected a nonnegative integer");
    cfg.seed = v.get<std::uint64_t>();
  }
  if (root.has("output")) cfg.output = root.string("output");
  cfg.basis_modes = root.integer_or("basis_modes", cfg.basis_modes);
  cfg.beta1 = root.number_or("beta1", cfg.beta1);

  // Actuator count follows N for families that can be regenerated.
  const bool n_given = j.contains("synthesis") && j["synthesis"].is_object() && j["synthesis"].contains("N");
  if (n_given && cfg.plant.actuator_count() != cfg.synthesis.N) {
    if (!cfg.plant.shapes.resized) {
      throw ConfigError("synthesis.N: does not match the actuator count");
    }
    cfg.plant.shapes = cfg.plant.shapes.with_count(cfg.synthesis.N);
  } else if (!n_given) {
    cfg.synthesis.N = cfg.plant.actuator_count();
  }
  try {
    cfg.plant.check();
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("plant: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace parastab
