#include "hypolab/evolve.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>

namespace hypolab {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kEulerGamma = 0.57721566490153286;
}  // namespace

const std::vector<double>& Trajectory::at(const std::string& name) const {
  auto it = tracked.find(name);
  if (it == tracked.end()) throw std::invalid_argument("trajectory: functional not tracked: " + name);
  return it->second;
}

Trajectory propagate(const LinOp& L, const StateVector& h0, const std::vector<double>& times,
                     Scheme scheme, double dt,
                     const std::vector<std::pair<std::string, Functional>>& functionals,
                     const std::vector<Vec>& kernel) {
  if (times.empty() || times.front() < 0)
    throw std::invalid_argument("propagate: times must start at 0 and increase");
  for (size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("propagate: times must increase");

  Trajectory traj;
  traj.times = times;
  Vec h = h0.h;
  const auto ker = orthonormalize(kernel);
  double removed = 0;
  for (const auto& k : ker) {
    const cplx c = k.dot(h);
    removed += std::norm(c);
    h -= c * k;
  }
  traj.kernel_norm_removed = std::sqrt(removed);

  auto record = [&](const Vec& ht) {
    traj.tracked["l2"].push_back(ht.squaredNorm());
    for (const auto& [name, fn] : functionals) traj.tracked[name].push_back(fn(ht));
  };

  bool use_eig = (scheme == Scheme::Eig);
  if (use_eig) {
    Eigen::ComplexEigenSolver<Mat> es(L.M);
    const Mat& V = es.eigenvectors();
    const Vec& lam = es.eigenvalues();
    const double resid = (L.M * V - V * lam.asDiagonal()).norm() / std::max(1.0, L.M.norm());
    if (resid <= 1e-8) {
      Eigen::PartialPivLU<Mat> lu(V);
      const Vec c0 = lu.solve(h);
      for (double t : times) {
        Vec c(c0.size());
        for (Eigen::Index i = 0; i < c0.size(); ++i) c[i] = std::exp(-lam[i] * t) * c0[i];
        record(V * c);
      }
      return traj;
    }
    use_eig = false;  // fall back to time stepping
  }
  if (!(dt > 0)) throw std::invalid_argument("propagate: crank-nicolson needs dt > 0");
  const Eigen::Index n = L.M.rows();
  Mat Ap = Mat::Identity(n, n) + 0.5 * dt * L.M;
  Mat Am = Mat::Identity(n, n) - 0.5 * dt * L.M;
  Eigen::PartialPivLU<Mat> lu(Ap);
  double t = 0;
  size_t iq = 0;
  Vec ht = h;
  if (times[0] == 0) {
    record(ht);
    ++iq;
  }
  while (iq < times.size()) {
    ht = lu.solve(Am * ht);
    t += dt;
    if (t + 0.5 * dt >= times[iq]) {
      record(ht);
      ++iq;
    }
  }
  return traj;
}

std::vector<std::pair<std::string, Functional>> standard_functionals(
    const ModelInstance& model, const CommutatorChain& chain, const CoeffLadder* ladder) {
  std::vector<std::pair<std::string, Functional>> fns;
  const Mat A = model.A[0].M;
  const Mat C = chain.levels() > 1 ? chain.C[1][0].M : Mat();
  fns.emplace_back("ah", [A](const Vec& h) { return (A * h).squaredNorm(); });
  if (C.size() > 0) {
    fns.emplace_back("ch", [C](const Vec& h) { return (C * h).squaredNorm(); });
    fns.emplace_back("mixed", [A, C](const Vec& h) { return (A * h).dot(C * h).real(); });
    fns.emplace_back("h1", [A, C](const Vec& h) {
      return h.squaredNorm() + (A * h).squaredNorm() + (C * h).squaredNorm();
    });
    if (ladder) {
      const double a = ladder->a.at(0);
      const double b = ladder->b.empty() ? 0.0 : ladder->b[0];
      const double c = ladder->a.size() > 1 ? ladder->a[1] : 0.0;
      fns.emplace_back("twisted", [A, C, a, b, c](const Vec& h) {
        return h.squaredNorm() + a * (A * h).squaredNorm() +
               2 * b * (A * h).dot(C * h).real() + c * (C * h).squaredNorm();
      });
    }
  }
  return fns;
}

DecayFit fit_series(const std::vector<double>& t, const std::vector<double>& y,
                    DecayFit::Kind kind, double t0, double t1) {
  if (t.size() != y.size()) throw std::invalid_argument("fit_series: length mismatch");
  std::vector<double> xs, ys;
  for (size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t0 || t[i] > t1) continue;
    if (!(y[i] > 0)) throw std::invalid_argument("fit_series: nonpositive value in fit window");
    xs.push_back(kind == DecayFit::Kind::PowerLaw ? std::log(t[i]) : t[i]);
    ys.push_back(std::log(y[i]));
  }
  if (xs.size() < 2) throw std::invalid_argument("fit_series: fewer than two points in window");
  const size_t n = xs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
    syy += ys[i] * ys[i];
  }
  const double den = n * sxx - sx * sx;
  const double slope = (n * sxy - sx * sy) / den;
  const double icept = (sy - slope * sx) / n;
  double ssr = 0, sst = 0;
  const double ybar = sy / n;
  for (size_t i = 0; i < n; ++i) {
    const double fit = icept + slope * xs[i];
    ssr += (ys[i] - fit) * (ys[i] - fit);
    sst += (ys[i] - ybar) * (ys[i] - ybar);
  }
  DecayFit f;
  f.kind = kind;
  f.value = (kind == DecayFit::Kind::Exponential) ? -slope : slope;
  f.prefactor = std::exp(icept);
  f.t0 = t0;
  f.t1 = t1;
  f.r2 = (sst > 0) ? 1.0 - ssr / sst : 1.0;
  f.reliable = f.r2 >= 0.98;
  return f;
}

DecayFit fit_rate(const Trajectory& traj, const std::string& name, DecayFit::Kind kind,
                  double t0, double t1) {
  return fit_series(traj.times, traj.at(name), kind, t0, t1);
}

HerauReport herau_check(const Trajectory& traj, double a, double b, double c) {
  HerauReport rep;
  rep.ratios = {a, b / a, c / b, c * c / b, b * b / (a * c)};
  rep.smallness_ok = true;
  for (double r : rep.ratios)
    if (!(r <= 1.0)) rep.smallness_ok = false;
  const auto& l2 = traj.at("l2");
  const auto& ah = traj.at("ah");
  const auto& ch = traj.at("ch");
  const auto& mx = traj.at("mixed");
  const size_t n = traj.times.size();
  rep.F.resize(n);
  for (size_t i = 0; i < n; ++i) {
    const double t = traj.times[i];
    rep.F[i] = l2[i] + a * t * ah[i] + 2 * b * t * t * mx[i] + c * t * t * t * ch[i];
  }
  const double F0 = rep.F[0];
  for (size_t i = 0; i + 1 < n; ++i)
    rep.max_violation = std::max(rep.max_violation, rep.F[i + 1] - rep.F[i]);
  for (size_t i = 0; i < n; ++i) {
    const double t = traj.times[i];
    if (t <= 0) continue;
    rep.bound_a = std::max(rep.bound_a, a * t * ah[i] / F0);
    rep.bound_c = std::max(rep.bound_c, c * t * t * t * ch[i] / F0);
  }
  return rep;
}

DiffIneqVerdict diffineq_check(const DiffIneqInstance& inst) {
  const size_t n = inst.t.size();
  if (n < 3) throw std::invalid_argument("diffineq_check: need at least 3 grid points");
  for (size_t i = 0; i < n; ++i)
    if (!(inst.t[i] > 0 && inst.t[i] <= 1.0))
      throw std::invalid_argument("diffineq_check: grid must lie in (0, 1]");
  for (const auto* s : {&inst.E, &inst.X, &inst.Y, &inst.Z, &inst.M})
    if (s->size() != n) throw std::invalid_argument("diffineq_check: series length mismatch");
  for (size_t i = 0; i < n; ++i)
    if (inst.E[i] < 0 || inst.X[i] < 0 || inst.Y[i] < 0 || inst.Z[i] < 0)
      throw std::invalid_argument("diffineq_check: E, X, Y, Z must be nonnegative");

  const double C = inst.C, K = inst.K;
  DiffIneqVerdict v;
  v.kappa = std::min(inst.delta, inst.theta / (1.0 - inst.theta));

  auto second_diff_max = [&](const std::vector<double>& s) {
    double m = 0;
    for (size_t i = 1; i + 1 < n; ++i)
      m = std::max(m, std::abs(s[i + 1] - 2 * s[i] + s[i - 1]));
    return m;
  };
  double dtmin = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i + 1 < n; ++i) dtmin = std::min(dtmin, inst.t[i + 1] - inst.t[i]);
  // forward-difference slack for the two derivative conditions
  const double slackE = 10.0 * second_diff_max(inst.E) / dtmin;
  const double slackM = 10.0 * second_diff_max(inst.M) / dtmin;

  auto worst = [&](auto&& margin_at, size_t count) {
    double w = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < count; ++i) w = std::min(w, margin_at(i));
    return w;
  };
  v.worst_margin[0] = worst(
      [&](size_t i) {
        return std::min(inst.E[i] - K * (inst.X[i] + inst.Y[i]),
                        C * (inst.X[i] + inst.Y[i]) - inst.E[i]);
      },
      n);
  v.worst_margin[1] = worst(
      [&](size_t i) { return C * std::pow(inst.E[i], 1.0 - inst.delta) - std::abs(inst.M[i]); }, n);
  v.worst_margin[2] = worst(
      [&](size_t i) {
        const double dE = (inst.E[i + 1] - inst.E[i]) / (inst.t[i + 1] - inst.t[i]);
        return -K * inst.Z[i] + C * inst.E[i] + slackE - dE;
      },
      n - 1);
  v.worst_margin[3] = worst(
      [&](size_t i) {
        return C * std::pow(inst.X[i] + inst.Z[i], 1.0 - inst.theta) - inst.Y[i];
      },
      n);
  v.worst_margin[4] = worst(
      [&](size_t i) {
        const double dM = (inst.M[i + 1] - inst.M[i]) / (inst.t[i + 1] - inst.t[i]);
        return -K * inst.X[i] + C * (inst.Y[i] + inst.Z[i]) + slackM - dM;
      },
      n - 1);

  v.hypotheses_hold = true;
  for (int j = 0; j < 5; ++j) {
    v.condition[j] = v.worst_margin[j] >= 0;
    v.hypotheses_hold = v.hypotheses_hold && v.condition[j];
  }
  v.Cbar = 0;
  for (size_t i = 0; i < n; ++i)
    v.Cbar = std::max(v.Cbar, inst.E[i] * std::pow(inst.t[i], 1.0 / v.kappa));
  v.conclusion_finite = std::isfinite(v.Cbar);
  return v;
}

NashReport nash_check(const RMat& f, double Lx, double Lv, double lam, double mu,
                      double lamp, double mup) {
  const int nx = static_cast<int>(f.rows());
  const int nv = static_cast<int>(f.cols());
  if ((nx & (nx - 1)) || (nv & (nv - 1)))
    throw std::invalid_argument("nash_check: grid sizes must be powers of two");
  if (!(lamp > 0 && mup > 0) || lam / lamp + mu / mup >= 1.0)
    throw std::invalid_argument("nash_check: exponent precondition violated");
  if (f.minCoeff() < -1e-12)
    throw std::invalid_argument("nash_check: f must be nonnegative");

  // 2D DFT
  Eigen::FFT<double> fft;
  Mat F1(nx, nv);
  for (int i = 0; i < nx; ++i) {
    std::vector<cplx> row(nv), out(nv);
    for (int j = 0; j < nv; ++j) row[j] = f(i, j);
    fft.fwd(out, row);
    for (int j = 0; j < nv; ++j) F1(i, j) = out[j];
  }
  Mat F2(nx, nv);
  for (int j = 0; j < nv; ++j) {
    std::vector<cplx> col(nx), out(nx);
    for (int i = 0; i < nx; ++i) col[i] = F1(i, j);
    fft.fwd(out, col);
    for (int i = 0; i < nx; ++i) F2(i, j) = out[i];
  }

  auto freq = [](int idx, int n, double L) {
    const int k = (idx <= n / 2) ? idx : idx - n;
    return 2 * kPi * k / L;
  };
  const double dx = Lx / nx, dv = Lv / nv;
  const double parseval = (dx * dv) / (static_cast<double>(nx) * nv);
  double lhs = 0, core = 0, mass = 0;
  for (int i = 0; i < nx; ++i) {
    const double xi = std::abs(freq(i, nx, Lx));
    for (int j = 0; j < nv; ++j) {
      const double eta = std::abs(freq(j, nv, Lv));
      const double p = std::norm(F2(i, j));
      lhs += std::pow(xi, 2 * lam) * std::pow(eta, 2 * mu) * p;
      core += (std::pow(xi, 2 * lamp) + std::pow(eta, 2 * mup)) * p;
    }
  }
  lhs *= parseval;
  core *= parseval;
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nv; ++j) mass += f(i, j);
  mass *= dx * dv;

  NashReport rep;
  const double nhalf = 0.5;  // n = 1 per variable
  rep.theta = (1.0 - (lam / lamp + mu / mup)) / (1.0 + nhalf * (1.0 / lamp + 1.0 / mup));
  rep.lhs = lhs;
  rep.rhs_core = std::pow(core, 1.0 - rep.theta) * std::pow(mass, 2.0 * rep.theta);
  return rep;
}

namespace {

// Ein(z) = int_0^z (1 - e^-s)/s ds = gamma + log z + E_1(z), E_1(z) = -Ei(-z)
double ein(double z) {
  if (z < 1e-6) return z * (1.0 - z / 4.0);
  return kEulerGamma + std::log(z) - std::expint(-z);
}

// P^{(j)}(q) = sum_{n=1}^{M} (n-1)...(n-j) q^{n-1-j}, j = 0..3, stable in
// u = -log q. At q == 1 these are M, M(M-1)/2, M(M-1)(M-2)/3, ...
struct GeomSums {
  double P0, P1, P2, P3;
};

GeomSums geom_sums(double u, double Mc) {
  // falling-factorial sums at q = 1: sum (n-1)...(n-j) = M (M-1)...(M-j)/(j+1)
  auto fallsum = [&](int j) {
    double p = Mc;
    for (int l = 1; l <= j; ++l) p *= (Mc - l);
    return p / (j + 1);
  };
  GeomSums g;
  const double z = u * Mc;
  const double d = -std::expm1(-u);  // 1 - q
  const double qM = (z > 700) ? 0.0 : std::exp(-z);
  const double q = std::exp(-u);
  auto fall = [&](int i) {  // M (M-1) ... (M-i+1)
    double p = 1;
    for (int l = 0; l < i; ++l) p *= (Mc - l);
    return p;
  };
  auto binom = [](int nn, int kk) {
    double r = 1;
    for (int l = 1; l <= kk; ++l) r = r * (nn - kk + l) / l;
    return r;
  };
  auto fact = [](int j) { return j == 0 ? 1.0 : (j == 1 ? 1.0 : (j == 2 ? 2.0 : 6.0)); };
  // full-series part j!/d^{j+1} minus the tail sum_{n>M}; cancellation-prone
  // when z = M u is small, handled by Taylor branches below
  auto exact = [&](int j) {
    double tail = 0;
    if (qM > 0) {
      for (int i = 0; i <= j; ++i)
        tail += binom(j, i) * fall(i) * std::pow(q, -static_cast<double>(i)) * qM *
                fact(j - i) / std::pow(d, j - i + 1);
    }
    return fact(j) / std::pow(d, j + 1) - tail;
  };
  // second-order Taylor in u around q = 1 for the low orders
  auto taylor2 = [&](int j) {
    // sum prod(n-l) q^{n-1-j} = F_j - u sum prod(n-l)(n-1-j) + u^2/2 (...)
    // with sum prod(n-l)(n-1-j) = (j+1) F_{j+1}/(j+2) ... expand via
    // (n-1-j) = (n-j-1) and (n-1-j)^2 = (n-j-1)(n-j-2) + (n-j-1):
    const double F1 = fallsum(j + 1);                      // sum prod_{l=1..j+1}
    const double F2 = fallsum(j + 2);                      // sum prod_{l=1..j+2}
    return fallsum(j) - u * F1 + 0.5 * u * u * (F2 + F1);
  };
  g.P0 = (z < 1e-3) ? taylor2(0) : exact(0);
  g.P1 = (z < 1e-3) ? taylor2(1) : exact(1);
  g.P2 = (z < 0.02) ? taylor2(2) : exact(2);
  g.P3 = (z < 0.05) ? taylor2(3) : exact(3);
  return g;
}

}  // namespace

Trajectory kfp_quadratic_exact_flow(const std::vector<double>& times, double degree_cutoff,
                                    double omega) {
  const double Mc = degree_cutoff;
  if (Mc < 10) throw std::invalid_argument("kfp_quadratic_exact_flow: cutoff too small");
  double HM;
  if (Mc <= 1e6) {
    HM = 0.0;
    for (long n = 1; n <= static_cast<long>(Mc); ++n) HM += 1.0 / n;
  } else {
    HM = std::log(Mc) + kEulerGamma + 0.5 / Mc;
  }
  const double kap = 1.0 / HM;

  // single-excitation generator in the (x, v) ladder directions
  Eigen::Matrix2cd G;
  G << 0.0, -omega, omega, 1.0;
  Eigen::ComplexEigenSolver<Eigen::Matrix2cd> es(G);
  const Eigen::Matrix2cd V = es.eigenvectors();
  const Eigen::Vector2cd lam = es.eigenvalues();
  const Eigen::Matrix2cd Vi = V.inverse();

  Trajectory traj;
  traj.times = times;
  for (double t : times) {
    Eigen::Matrix2cd expG;
    expG = V * Eigen::Vector2cd(std::exp(-lam[0] * t), std::exp(-lam[1] * t)).asDiagonal() * Vi;
    const Eigen::Vector2cd xi = expG * Eigen::Vector2cd(1.0, 0.0);  // from the x direction
    const double ax2 = std::norm(xi[0]);
    const double av2 = std::norm(xi[1]);
    const double r2 = ax2 + av2;
    const double u = -std::log(std::min(1.0, r2));  // -log q, clipped at 1
    const auto S = geom_sums(u, Mc);

    // l2 = kappa * sum q^n / n; exact for small cutoffs, exponential-integral
    // representation for astronomically large ones
    double p_log;
    if (u == 0.0) {
      p_log = HM;
    } else if (Mc <= 1e6) {
      p_log = 0.0;
      const double q = std::exp(-u);
      double qn = 1.0;
      for (long n = 1; n <= static_cast<long>(Mc); ++n) {
        qn *= q;
        p_log += qn / n;
      }
    } else if (Mc * u > 25.0) {
      p_log = -std::log(-std::expm1(-u));
    } else {
      p_log = HM - (ein((Mc + 0.5) * u) - ein(0.5 * u));
    }

    const double l2 = kap * p_log;
    const double ah = kap * av2 * S.P0;
    const double ch = kap * ax2 * S.P0;
    const double mixed = kap * (std::conj(xi[1]) * xi[0]).real() * S.P0;
    const double w = kap * ax2 * av2 * S.P1;
    const double y3 = kap * av2 * av2 * av2 * S.P2;
    const double y4 = kap * av2 * av2 * av2 * av2 * S.P3;

    traj.tracked["l2"].push_back(l2);
    traj.tracked["ah"].push_back(ah);
    traj.tracked["ch"].push_back(ch);
    traj.tracked["mixed"].push_back(mixed);
    traj.tracked["h1"].push_back(l2 + ah + ch);
    traj.tracked["w"].push_back(w);
    traj.tracked["y3"].push_back(y3);
    traj.tracked["y4"].push_back(y4);
  }
  return traj;
}

}  // namespace hypolab
