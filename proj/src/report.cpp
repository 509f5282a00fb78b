#include <parastab/report.hpp>

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace parastab {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

void write_assumption_report(std::ostream& os, const AssumptionReport& rep) {
  os << "assumption 1 (q21, q32 nonzero): " << (rep.a1_ok ? "pass" : "FAIL") << '\n';
  os << "assumption 2 (triangular Lipschitz f, f(0) = 0): " << (rep.a2_ok ? "pass" : "FAIL") << '\n';
  os << "assumption 3 (B_NN invertible): " << (rep.a3_invertible ? "pass" : "FAIL") << '\n';
  os << "assumption 3 bound fit: eta = " << fmt_short(rep.eta) << ", beta = " << fmt_short(rep.beta)
     << '\n';
  os << "  N  lambda_{N+1}  tail*|B^-1|^2  cond(B_NN)\n";
  for (const A3Sample& s : rep.a3_bound_samples) {
    char buf[160];
    if (s.invertible) {
      std::snprintf(buf, sizeof buf, "  %-2d %-13.6g %-14.6g %.6g\n", s.n, s.lambda_next, s.lhs,
                    s.condition);
    } else {
      std::snprintf(buf, sizeof buf, "  %-2d %-13.6g singular\n", s.n, s.lambda_next);
    }
    os << buf;
  }
  for (const std::string& w : rep.warnings) os << "warning: " << w << '\n';
}

void write_certificate_report(std::ostream& os, const Certificate& c,
                              const std::optional<ComparisonConstants>& k) {
  os << "status " << sdp::to_string(c.status) << '\n';
  os << "feasible " << (c.feasible ? "yes" : "no") << '\n';
  os << "N " << c.N << '\n';
  os << "gamma " << format_double(c.gamma) << '\n';
  os << "rho " << format_double(c.rho) << '\n';
  os << "delta " << format_double(c.delta) << '\n';
  os << "l1 " << format_double(c.l1) << '\n';
  os << "K0 " << format_double(c.K0(0)) << ' ' << format_double(c.K0(1)) << ' '
     << format_double(c.K0(2)) << '\n';
  for (int r = 0; r < 3; ++r) {
    os << "P" << (r + 1);
    for (int col = 0; col < 3; ++col) os << ' ' << format_double(c.P(r, col));
    os << '\n';
  }
  os << "alpha0 " << format_double(c.alpha0) << '\n';
  os << "alpha1 " << format_double(c.alpha1) << '\n';
  os << "margin_phi " << format_double(c.margin_phi) << '\n';
  os << "margin_tail " << format_double(c.margin_tail) << '\n';
  os << "scaled_margin_phi " << format_double(c.scaled_margin_phi) << '\n';
  os << "scaled_margin_tail " << format_double(c.scaled_margin_tail) << '\n';
  os << "min_eig_P " << format_double(c.min_eig_P) << '\n';
  os << "oracle_margin " << format_double(c.oracle_margin) << '\n';
  os << "oracle_upper " << format_double(c.oracle_upper) << '\n';
  if (k) {
    os << "c_lower " << format_double(k->c_lower) << '\n';
    os << "c_upper " << format_double(k->c_upper) << '\n';
    os << "M " << format_double(k->M) << '\n';
  }
  if (!c.note.empty()) os << "note " << c.note << '\n';
}

void write_search_log_csv(std::ostream& os, const std::vector<SearchEntry>& log) {
  os << "gamma,rho,l1,status,verified,oracle_margin,margin\n";
  for (const SearchEntry& e : log) {
    os << format_double(e.gamma) << ',' << format_double(e.rho) << ',' << format_double(e.l1) << ','
       << sdp::to_string(e.status) << ',' << (e.verified ? 1 : 0) << ','
       << format_double(e.oracle_margin) << ',' << format_double(e.margin) << '\n';
  }
}

void write_constructive_estimate(std::ostream& os, const ConstructiveEstimate& e) {
  os << "beta1 " << fmt_short(e.beta1) << " (eta " << fmt_short(e.eta) << ", beta "
     << fmt_short(e.beta) << ")\n";
  if (e.found) {
    os << "N_star " << e.N_star << " (tail lambda_max " << fmt_short(e.tail_lambda_max) << ")\n";
    os << "S lambda_max " << fmt_short(e.s_margin) << (e.s_margin < 0 ? " (negative)" : " (not negative)")
       << '\n';
    if (e.gamma0_found) {
      os << "gamma0 " << fmt_short(e.gamma0) << '\n';
    } else {
      os << "gamma0 not found on the grid (lambda_max " << fmt_short(e.gamma0_lambda_max) << ")\n";
    }
  } else {
    os << "N_star not found (deficit " << fmt_short(e.tail_lambda_max) << ")\n";
  }
  if (!e.note.empty()) os << "note " << e.note << '\n';
}

void write_gain_file(std::ostream& os, const Certificate& c, const FeedbackGain& g) {
  os << "parastab-gain 1\n";
  os << "N " << g.N << '\n';
  os << "gamma " << format_double(g.gamma) << '\n';
  os << "rho " << format_double(c.rho) << '\n';
  os << "delta " << format_double(c.delta) << '\n';
  os << "l1 " << format_double(c.l1) << '\n';
  os << "K0 " << format_double(g.K0(0)) << ' ' << format_double(g.K0(1)) << ' '
     << format_double(g.K0(2)) << '\n';
  os << "P";
  for (int r = 0; r < 3; ++r) {
    for (int col = 0; col < 3; ++col) os << ' ' << format_double(c.P(r, col));
  }
  os << '\n';
  os << "alphas " << format_double(c.alpha0) << ' ' << format_double(c.alpha1) << '\n';
  os << "margins " << format_double(c.margin_phi) << ' ' << format_double(c.margin_tail) << '\n';
  os << "U_map " << g.U_map.rows() << ' ' << g.U_map.cols() << '\n';
  for (int r = 0; r < g.U_map.rows(); ++r) {
    for (int col = 0; col < g.U_map.cols(); ++col) {
      os << (col ? " " : "") << format_double(g.U_map(r, col));
    }
    os << '\n';
  }
}

GainFile read_gain_file(std::istream& is) {
  GainFile f;
  std::string line;
  int lineno = 0;
  auto bad = [&](const std::string& msg) -> ConfigError {
    return ConfigError("gain file line " + std::to_string(lineno) + ": " + msg);
  };
  auto numbers = [&](std::istringstream& ss, int count) {
    std::vector<double> v(count);
    for (double& x : v) {
      if (!(ss >> x)) throw bad("expected " + std::to_string(count) + " numbers");
    }
    return v;
  };

  if (!std::getline(is, line) || (++lineno, line != "parastab-gain 1")) {
    throw bad("missing 'parastab-gain 1' header");
  }
  bool have_map = false, have_n = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "N") {
      if (!(ss >> f.cert.N) || f.cert.N < 1) throw bad("bad N");
      have_n = true;
    } else if (key == "gamma") {
      f.cert.gamma = numbers(ss, 1)[0];
    } else if (key == "rho") {
      f.cert.rho = numbers(ss, 1)[0];
    } else if (key == "delta") {
      f.cert.delta = numbers(ss, 1)[0];
    } else if (key == "l1") {
      f.cert.l1 = numbers(ss, 1)[0];
    } else if (key == "K0") {
      const auto v = numbers(ss, 3);
      f.cert.K0 = RowVec3(v[0], v[1], v[2]);
    } else if (key == "P") {
      const auto v = numbers(ss, 9);
      for (int i = 0; i < 9; ++i) f.cert.P(i / 3, i % 3) = v[i];
    } else if (key == "alphas") {
      const auto v = numbers(ss, 2);
      f.cert.alpha0 = v[0];
      f.cert.alpha1 = v[1];
    } else if (key == "margins") {
      const auto v = numbers(ss, 2);
      f.cert.margin_phi = v[0];
      f.cert.margin_tail = v[1];
    } else if (key == "U_map") {
      int rows = 0, cols = 0;
      if (!(ss >> rows >> cols) || rows < 1 || cols != 3 * rows) throw bad("bad U_map size");
      f.U_map.resize(rows, cols);
      for (int r = 0; r < rows; ++r) {
        if (!std::getline(is, line)) throw bad("truncated U_map");
        ++lineno;
        std::istringstream row(line);
        const auto v = numbers(row, cols);
        for (int c = 0; c < cols; ++c) f.U_map(r, c) = v[c];
      }
      have_map = true;
    } else {
      throw bad("unknown key '" + key + "'");
    }
  }
  if (!have_n || !have_map) throw ConfigError("gain file: missing N or U_map");
  if (f.U_map.rows() != f.cert.N) throw ConfigError("gain file: U_map rows do not match N");
  f.cert.feasible = true;
  f.cert.status = sdp::Status::Feasible;
  return f;
}

FeedbackGain gain_from_file(const GainFile& file) {
  FeedbackGain g;
  g.N = file.cert.N;
  g.gamma = file.cert.gamma;
  g.K0 = file.cert.K0;
  g.U_map = file.U_map;
  return g;
}

}  // namespace parastab
