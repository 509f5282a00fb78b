#include <parastab/sdp.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace parastab::sdp {

const char* to_string(Cone c) {
  switch (c) {
    case Cone::NegativeDefinite: return "nd";
    case Cone::PositiveDefinite: return "pd";
    case Cone::NegativeSemidef: return "nsd";
  }
  return "nd";
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Feasible: return "feasible";
    case Status::Infeasible: return "infeasible";
    case Status::Undecided: return "undecided";
  }
  return "undecided";
}

MatrixXd AffineBlock::evaluate(const VectorXd& x) const {
  MatrixXd out = constant;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (coeffs[i].size() != 0 && x(i) != 0.0) out.noalias() += x(i) * coeffs[i];
  }
  return out;
}

void LmiSystem::check() const {
  const std::size_t nv = variables.size();
  for (const AffineBlock& b : blocks) {
    const int k = b.dim();
    if (k < 1 || b.constant.cols() != k) throw ParameterError("block '" + b.name + "' is not square");
    if (b.coeffs.size() != nv) {
      throw ParameterError("block '" + b.name + "' has " + std::to_string(b.coeffs.size()) +
                           " coefficients for " + std::to_string(nv) + " unknowns");
    }
    auto symmetric = [](const MatrixXd& m) {
      const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
      return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
    };
    if (!symmetric(b.constant)) throw ParameterError("block '" + b.name + "' constant is not symmetric");
    for (const MatrixXd& a : b.coeffs) {
      if (a.size() == 0) continue;
      if (a.rows() != k || a.cols() != k) {
        throw ParameterError("block '" + b.name + "' coefficient has the wrong size");
      }
      if (!symmetric(a)) throw ParameterError("block '" + b.name + "' coefficient is not symmetric");
    }
  }
}

namespace {

// A block in the form D (A0 + sum x_i A_i) D <= 0.
struct ScaledBlock {
  MatrixXd a0;
  std::vector<MatrixXd> a;
  MatrixXd eval(const VectorXd& x) const {
    MatrixXd out = a0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].size() != 0 && x(i) != 0.0) out.noalias() += x(i) * a[i];
    }
    return out;
  }
};

double max_eig(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace

OracleResult BarrierOracle::solve(const LmiSystem& system, const OracleOptions& opt) const {
  system.check();
  const int nv = system.num_variables();
  VectorXd x = opt.x0.size() == nv ? opt.x0 : VectorXd::Zero(nv);

  // Shift into G <= 0 form.
  std::vector<ScaledBlock> blocks;
  int m = 0;
  for (const AffineBlock& b : system.blocks) {
    ScaledBlock s;
    const double sign = b.cone == Cone::PositiveDefinite ? -1.0 : 1.0;
    const int k = b.dim();
    s.a0 = sign * b.constant;
    if (b.cone != Cone::NegativeSemidef) s.a0 += opt.epsilon * MatrixXd::Identity(k, k);
    for (const MatrixXd& a : b.coeffs) s.a.push_back(a.size() == 0 ? MatrixXd() : MatrixXd(sign * a));

    const MatrixXd g = s.eval(x);
    VectorXd d(k);
    for (int i = 0; i < k; ++i) {
      const double v = std::abs(g(i, i));
      d(i) = v > 1e-300 ? 1.0 / std::sqrt(v) : 1.0;
    }
    s.a0 = d.asDiagonal() * s.a0 * d.asDiagonal();
    for (MatrixXd& a : s.a) {
      if (a.size() != 0) a = d.asDiagonal() * a * d.asDiagonal();
    }
    blocks.push_back(std::move(s));
    m += k;
  }

  OracleResult res;
  double worst = -std::numeric_limits<double>::infinity();
  for (const ScaledBlock& b : blocks) worst = std::max(worst, max_eig(b.eval(x)));
  double t = -worst - 1.0;

  // -log det of every slack S_k = -(G_k(x) + t I); +inf outside the domain.
  auto barrier = [&](const VectorXd& xx, double tt) {
    double val = 0.0;
    for (const ScaledBlock& b : blocks) {
      MatrixXd S = -b.eval(xx);
      S.diagonal().array() -= tt;
      Eigen::LLT<MatrixXd> llt(S);
      if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
      const VectorXd diag = MatrixXd(llt.matrixL()).diagonal();
      if ((diag.array() <= 0.0).any()) return std::numeric_limits<double>::infinity();
      val -= 2.0 * diag.array().log().sum();
    }
    return val;
  };

  const int nz = nv + 1;
  double mu = 1.0;
  double gap = m / mu;
  for (int outer = 0; outer < opt.max_outer; ++outer) {
    for (int it = 0; it < opt.max_newton; ++it) {
      VectorXd grad = VectorXd::Zero(nz);
      MatrixXd H = MatrixXd::Zero(nz, nz);
      for (const ScaledBlock& b : blocks) {
        const int k = static_cast<int>(b.a0.rows());
        MatrixXd S = -b.eval(x);
        S.diagonal().array() -= t;
        Eigen::LLT<MatrixXd> llt(S);
        if (llt.info() != Eigen::Success) {
          res.message = "lost strict feasibility of the slack";
          res.x = x;
          res.margin = t;
          res.margin_upper = t + gap;
          return res;
        }
        const MatrixXd L = llt.matrixL();
        // M_i = L^{-1} A_i L^{-T}; the margin variable has A = I.
        std::vector<MatrixXd> Ms(nz);
        std::vector<bool> used(nz, false);
        for (int i = 0; i < nv; ++i) {
          if (b.a[i].size() == 0) continue;
          MatrixXd tmp = L.triangularView<Eigen::Lower>().solve(b.a[i]);
          Ms[i] = L.triangularView<Eigen::Lower>().solve(tmp.transpose()).transpose();
          used[i] = true;
        }
        {
          MatrixXd Li = L.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(k, k));
          Ms[nv] = Li * Li.transpose();
          used[nv] = true;
        }
        for (int i = 0; i < nz; ++i) {
          if (!used[i]) continue;
          grad(i) += Ms[i].trace();
          for (int j = 0; j <= i; ++j) {
            if (!used[j]) continue;
            H(i, j) += Ms[i].cwiseProduct(Ms[j]).sum();
          }
        }
      }
      H = H.selfadjointView<Eigen::Lower>();
      grad(nv) -= mu;
      // Unknowns that appear in no block: keep them fixed.
      for (int i = 0; i < nv; ++i) {
        if (H(i, i) <= 0.0) H(i, i) = 1.0;
      }

      VectorXd sc(nz);
      for (int i = 0; i < nz; ++i) sc(i) = 1.0 / std::sqrt(std::max(H(i, i), 1e-300));
      const MatrixXd Hs = sc.asDiagonal() * H * sc.asDiagonal();
      Eigen::LDLT<MatrixXd> ldlt(Hs);
      VectorXd dz = -sc.cwiseProduct(ldlt.solve(sc.cwiseProduct(grad)));
      if (!dz.allFinite()) {
        res.message = "Newton system is singular";
        res.x = x;
        res.margin = t;
        res.margin_upper = t + gap;
        return res;
      }
      const double dec = -grad.dot(dz);
      ++res.newton_steps;
      if (dec / 2.0 < 1e-9) break;

      const double f0 = -mu * t + barrier(x, t);
      double s = 1.0;
      bool moved = false;
      while (s > 1e-14) {
        const VectorXd xn = x + s * dz.head(nv);
        const double tn = t + s * dz(nv);
        const double fn = -mu * tn + barrier(xn, tn);
        if (std::isfinite(fn) && fn <= f0 - 0.25 * s * dec) {
          x = xn;
          t = tn;
          moved = true;
          break;
        }
        s *= 0.5;
      }
      if (!moved) break;
    }

    gap = m / mu;
    // Any feasible (x, t') has t' <= t + m / mu on the central path.
    if (t + gap < 0.0) {
      res.status = Status::Infeasible;
      res.x = x;
      res.margin = t;
      res.margin_upper = t + gap;
      res.message = "dual bound is negative";
      return res;
    }
    if (gap < opt.tolerance * std::max(1.0, std::abs(t))) break;
    mu *= 8.0;
  }

  res.x = x;
  res.margin = t;
  res.margin_upper = t + gap;
  if (t > 0.0) {
    res.status = Status::Feasible;
    res.message = "strictly feasible point found";
  } else {
    res.status = Status::Undecided;
    res.message = "margin and dual bound straddle zero";
  }
  return res;
}

std::unique_ptr<FeasibilityOracle> default_oracle() { return std::make_unique<BarrierOracle>(); }

namespace {

void write_lower(std::ostream& os, const MatrixXd& m) {
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c <= r; ++c) os << (c ? " " : "") << m(r, c);
    os << '\n';
  }
}

MatrixXd read_lower(std::istream& is, int k) {
  MatrixXd m(k, k);
  for (int r = 0; r < k; ++r) {
    for (int c = 0; c <= r; ++c) {
      if (!(is >> m(r, c))) throw ParameterError("LMI text: truncated matrix");
      m(c, r) = m(r, c);
    }
  }
  return m;
}

void expect(std::istream& is, const std::string& word) {
  std::string got;
  if (!(is >> got) || got != word) {
    throw ParameterError("LMI text: expected '" + word + "', got '" + got + "'");
  }
}

}  // namespace

void write_system(std::ostream& os, const LmiSystem& system) {
  const auto old = os.precision(17);
  os << "lmi 1\n";
  os << "variables " << system.variables.size() << '\n';
  for (std::size_t i = 0; i < system.variables.size(); ++i) {
    os << (i ? " " : "") << system.variables[i];
  }
  os << '\n';
  os << "blocks " << system.blocks.size() << '\n';
  for (const AffineBlock& b : system.blocks) {
    os << "block " << b.name << ' ' << to_string(b.cone) << ' ' << b.dim() << '\n';
    os << "const\n";
    write_lower(os, b.constant);
    for (std::size_t i = 0; i < b.coeffs.size(); ++i) {
      if (b.coeffs[i].size() == 0) continue;
      os << "coef " << i << '\n';
      write_lower(os, b.coeffs[i]);
    }
    os << "end\n";
  }
  os.precision(old);
}

LmiSystem read_system(std::istream& is) {
  LmiSystem sys;
  expect(is, "lmi");
  int version = 0;
  if (!(is >> version) || version != 1) throw ParameterError("LMI text: unsupported version");
  expect(is, "variables");
  std::size_t nv = 0;
  if (!(is >> nv)) throw ParameterError("LMI text: bad variable count");
  sys.variables.resize(nv);
  for (auto& v : sys.variables) {
    if (!(is >> v)) throw ParameterError("LMI text: truncated variable list");
  }
  expect(is, "blocks");
  std::size_t nb = 0;
  if (!(is >> nb)) throw ParameterError("LMI text: bad block count");
  for (std::size_t k = 0; k < nb; ++k) {
    AffineBlock b;
    std::string cone;
    int dim = 0;
    expect(is, "block");
    if (!(is >> b.name >> cone >> dim) || dim < 1) throw ParameterError("LMI text: bad block header");
    if (cone == "nd") b.cone = Cone::NegativeDefinite;
    else if (cone == "pd") b.cone = Cone::PositiveDefinite;
    else if (cone == "nsd") b.cone = Cone::NegativeSemidef;
    else throw ParameterError("LMI text: unknown cone tag '" + cone + "'");
    expect(is, "const");
    b.constant = read_lower(is, dim);
    b.coeffs.assign(nv, MatrixXd());
    std::string word;
    while (is >> word && word != "end") {
      if (word != "coef") throw ParameterError("LMI text: expected 'coef' or 'end'");
      std::size_t i = 0;
      if (!(is >> i) || i >= nv) throw ParameterError("LMI text: bad coefficient index");
      b.coeffs[i] = read_lower(is, dim);
    }
    if (word != "end") throw ParameterError("LMI text: missing 'end'");
    sys.blocks.push_back(std::move(b));
  }
  sys.check();
  return sys;
}

}  // namespace parastab::sdp
