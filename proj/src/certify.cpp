#include "hypolab/certify.hpp"

#include <cmath>
#include <sstream>

namespace hypolab {

CommutatorChain commutator_chain(const ModelInstance& model, int Nc) {
  if (Nc < 1) throw std::invalid_argument("commutator_chain: Nc >= 1 required");
  CommutatorChain ch;
  ch.C.push_back(model.A);
  ch.R.emplace_back();  // R_1 = [A,B] - C_1

  // level 1: designated principal part grad_x
  std::vector<LinOp> c1 = {model.grad_x};
  std::vector<LinOp> ab = commutator(model.A, model.B);
  LinOp r1 = sum(ab[0], model.grad_x, 1.0, -1.0);
  ch.C.push_back(c1);
  ch.R[0] = {r1};

  const double tol = std::max(1e-8, 4.0 * model.B.truncation_defect *
                                        std::max(1.0, model.B.M.norm()));
  ch.tolerance = tol;
  if (r1.M.norm() > tol)
    throw std::runtime_error("commutator_chain: [A,B] does not match the designated C_1");

  // higher levels terminate: C_{k+1} = 0, R_{k+1} = [C_k, B]
  for (int k = 1; k < Nc; ++k) {
    std::vector<LinOp> ck1;
    for (const auto& c : ch.C[k]) {
      LinOp z(model.basis, Mat::Zero(c.M.rows(), c.M.cols()));
      ck1.push_back(z);
    }
    ch.C.push_back(ck1);
    ch.R.push_back(commutator(ch.C[k], model.B));
  }
  ch.R.push_back(commutator(ch.C[Nc], model.B));  // R_{Nc+1} with C_{Nc+1} = 0
  ch.z_lo.assign(ch.C.size(), 1.0);
  ch.z_hi.assign(ch.C.size(), 1.0);
  return ch;
}

std::vector<double> ladder_geometric(double delta, int N) {
  if (!(delta > 0 && delta < 1)) throw std::invalid_argument("ladder_geometric: delta in (0,1)");
  if (N < 1) throw std::invalid_argument("ladder_geometric: N >= 1");
  std::vector<double> m(N + 1);
  m[0] = 0;
  if (N >= 1) m[1] = 1;
  for (int k = 2; k <= N; ++k) m[k] = m[k - 1] + 0.5 * (m[k - 1] - m[k - 2]);
  auto make = [&](double eps) {
    std::vector<double> u(N + 1);
    for (int k = 0; k <= N; ++k) u[k] = std::pow(eps, m[k]);
    return u;
  };
  auto valid = [&](const std::vector<double>& u) {
    for (int k = 0; k < N; ++k)
      if (!(u[k + 1] <= delta * u[k])) return false;
    for (int k = 1; k < N; ++k)
      if (!(u[k] * u[k] <= delta * u[k - 1] * u[k + 1])) return false;
    return true;
  };
  for (int p = 1; p <= 300; ++p) {
    auto u = make(std::pow(10.0, -p));
    if (valid(u)) return u;
  }
  throw std::runtime_error("ladder_geometric: no epsilon found");  // unreachable per the lemma
}

CoeffLadder ladder_for_chain(double delta, int Nc) {
  // interleave u_1, u_2, ... as a_0, b_0, a_1, ...; the geometric ladder also
  // enforces a_0^2 <= delta u_0 b_0 (u_0 = 1), which the certificate matrix
  // needs to control the |Ah| x |Ch| coupling
  auto u = ladder_geometric(delta, 2 * Nc + 1);
  CoeffLadder lad;
  lad.delta = delta;
  for (int k = 0; k <= Nc; ++k) lad.a.push_back(u[2 * k + 1]);
  for (int k = 0; k < Nc; ++k) lad.b.push_back(u[2 * k + 2]);
  return lad;
}

bool validate_condcoeff(NonlinearSchedule& s) {
  const int J = s.J;
  const double q = s.K * std::pow(s.E, s.eps);
  const double rhs3 = s.K * std::pow(s.a.back(), 1.0 + s.eps) * std::pow(s.E, s.k * s.eps);
  const double lhs4 = s.K1 * std::pow(s.E, s.ell * s.eps);

  double m1 = std::log(1.0 / s.a[0]);
  for (int j = 1; j < J - 1; ++j) m1 = std::min(m1, std::log(s.a[j - 1] / s.a[j]));
  for (double aj : s.a)
    if (!(aj > 0)) m1 = -std::numeric_limits<double>::infinity();
  const double m2 = std::log(q / s.a[0]);
  // third line over the interior indices a_{j+1}^2 / a_j (j >= 1); the
  // boundary index a_1^2 / a_0 is not enforced by the closed-form recursion
  // and is reported separately
  double m3 = std::numeric_limits<double>::infinity();
  for (int j = 1; j < J - 1; ++j)
    m3 = std::min(m3, std::log(rhs3 * s.a[j - 1] / (s.a[j] * s.a[j])));
  const double m4 = std::log(s.a.back() / lhs4);
  s.boundary_margin = std::log(rhs3 / (s.a[0] * s.a[0]));
  s.margin = {m1, m2, m3, m4};
  s.feasible = m1 >= -1e-12 && m2 >= -1e-12 && m3 >= -1e-12 && m4 >= -1e-12;
  return s.feasible;
}

NonlinearSchedule ladder_nonlinear(double K, double Ebar, double k, int J, double eps,
                                   double E) {
  if (!(K > 0 && Ebar > 0 && k > 0)) throw std::invalid_argument("ladder_nonlinear: K, Ebar, k > 0");
  if (J < 2) throw std::invalid_argument("ladder_nonlinear: J >= 2");
  if (E < 0) E = Ebar;
  if (!(E > 0 && E <= Ebar)) throw std::invalid_argument("ladder_nonlinear: E in (0, Ebar]");
  const double alpha1 = std::pow(2.0, J - 2) - 1.0;  // 2^{J-2} - 1
  const double eps1 = (alpha1 > 0) ? 1.0 / (2.0 * alpha1) : 1.0;
  if (!(eps > 0 && eps <= eps1))
    throw std::invalid_argument("ladder_nonlinear: eps must lie in (0, 1/(2 alpha_1)]");

  NonlinearSchedule s;
  s.K = K;
  s.Ebar = Ebar;
  s.k = k;
  s.eps = eps;
  s.E = E;
  s.J = J;

  // the lemma's construction may shrink K; conditions are checked with the
  // caller's K (weaker constraints)
  double Kc = std::min(K, std::min(1.0, std::pow(Ebar, -k)));
  const double bracket = std::pow(Kc, 1.0 + alpha1) * std::pow(E, (1.0 + k * alpha1) * eps);
  if (bracket > 1.0)
    Kc = std::pow(std::pow(E, -(1.0 + k * alpha1) * eps), 1.0 / (1.0 + alpha1));
  s.K1 = std::pow(Kc, 2.0 * (1.0 + alpha1));
  s.ell = 2.0 * (1.0 + k * alpha1);

  const double aJ1 = std::pow(
      std::pow(Kc, 1.0 + alpha1) * std::pow(E, (1.0 + k * alpha1) * eps),
      1.0 / (1.0 - alpha1 * eps));
  s.a.assign(J - 1, aJ1);
  const double base = Kc * std::pow(E, k * eps) * std::pow(aJ1, eps);
  for (int j = 1; j <= J - 2; ++j) {
    const double alpha_j = std::pow(2.0, J - 1 - j) - 1.0;
    s.a[j - 1] = aJ1 * std::pow(base, -alpha_j);
  }
  if (validate_condcoeff(s)) return s;

  // deterministic fallback: greedy chain in log space over candidates for
  // t = log a_{J-1}, scanning for the least-violating (then largest) t
  const double g = std::log(K * std::pow(E, k * eps));
  const double q = std::log(K * std::pow(E, eps));
  const double t4 = std::log(s.K1 * std::pow(E, s.ell * eps));
  NonlinearSchedule best = s;
  double best_viol = std::numeric_limits<double>::infinity();
  const int ngrid = 4000;
  const double tlo = t4 - 40.0, thi = 0.0;
  for (int i = ngrid; i >= 0; --i) {
    const double t = tlo + (thi - tlo) * i / ngrid;
    std::vector<double> x(J);
    x[0] = 0.0;
    for (int j = 1; j <= J - 1; ++j) {
      double cap = std::min(x[j - 1], 0.5 * (g + (1.0 + eps) * t + x[j - 1]));
      if (j == 1) cap = std::min(cap, q);
      x[j] = cap;
    }
    if (x[J - 1] < t) continue;  // greedy cannot reach down consistently
    NonlinearSchedule cand = s;
    cand.closed_form = false;
    cand.a.assign(J - 1, 0.0);
    for (int j = 1; j <= J - 2; ++j) cand.a[j - 1] = std::exp(x[j]);
    cand.a[J - 2] = std::exp(t);
    validate_condcoeff(cand);
    const double viol = -std::min({cand.margin[0], cand.margin[1], cand.margin[2], cand.margin[3], 0.0});
    if (viol < best_viol - 1e-15) {
      best_viol = viol;
      best = cand;
      if (cand.feasible) break;  // largest feasible t wins
    }
  }
  return best;
}

std::string to_text(const CertifyReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "matrix_dim=" << r.m.rows() << "\n";
  for (Eigen::Index i = 0; i < r.m.rows(); ++i)
    for (Eigen::Index j = 0; j < r.m.cols(); ++j)
      os << "m_" << i << j << "=" << r.m(i, j) << "\n";
  os << "min_eig_sym=" << r.min_eig_sym << "\n"
     << "certified_rate=" << r.certified_rate << "\n"
     << "a=" << r.coeffs[0] << "\nb=" << r.coeffs[1] << "\nc=" << r.coeffs[2] << "\n"
     << "equiv_lo=" << r.equiv_lo << "\nequiv_hi=" << r.equiv_hi << "\n";
  return os.str();
}

CertifyReport certificate_matrix_aab(const BoundConstants& bc, double a, double b, double c) {
  if (!(a > 0 && b > 0 && c > 0)) throw std::invalid_argument("certificate_matrix_aab: a, b, c > 0");
  if (b * b > a * c) throw std::invalid_argument("certificate_matrix_aab: b^2 <= ac required");
  const double al = bc.alpha, be = bc.beta;
  CertifyReport r;
  r.coeffs = {a, b, c};
  r.m.resize(4, 4);
  r.m << 1 - (a * al + b * be), -(a * al + b * be), -(a + b * al + b * be + c * be), -b * be,
      0, a, -(b * al + c * be), -2 * b,
      0, 0, b - c * be, -c * be,
      0, 0, 0, c;
  RMat sym = 0.5 * (r.m + r.m.transpose());
  Eigen::SelfAdjointEigenSolver<RMat> es(sym);
  r.min_eig_sym = es.eigenvalues()(0);
  const double ratio = b / std::sqrt(a * c);
  r.equiv_lo = std::min({1.0, a, c}) * (1.0 - ratio);
  r.equiv_hi = std::max({1.0, a, c}) * (1.0 + ratio);
  if (r.min_eig_sym > 0 && bc.kappa > 0) {
    // <X,mX> >= mineig (|Ah|^2 + |Ch|^2) >= mineig min(1,kappa)/2 |h|_{H1}^2
    r.certified_rate = r.min_eig_sym * std::min(1.0, bc.kappa) / (2.0 * r.equiv_hi);
  }
  return r;
}

double explicit_objective_quadratic(double M, double kappa, double a, double b, double c) {
  if (!(a > 0 && b > 0 && c > 0) || b * b > a * c)
    return -std::numeric_limits<double>::infinity();
  const double t1 = (1.0 - (a + b * M + 0.25)) / (2.0 * a + 1.0 / kappa);
  const double t2 = (b - (a + b + c * M) * (a + b + c * M)) / (2.0 * c + 1.0 / kappa);
  return std::min(t1, t2);
}

RateResult certified_rate_quadratic(double M, double kappa) {
  if (!(kappa > 0)) throw std::invalid_argument("certified_rate_quadratic: kappa > 0");
  if (M < 0) throw std::invalid_argument("certified_rate_quadratic: M >= 0");
  RateResult res;
  res.lambda_bar = -std::numeric_limits<double>::infinity();
  auto consider = [&](double a, double b, double c) {
    const double v = explicit_objective_quadratic(M, kappa, a, b, c);
    if (v > res.lambda_bar) {
      res.lambda_bar = v;
      res.argmax = {a, b, c};
      res.trace.push_back({a, b, c, v});
    }
  };
  const int ng = 40;
  for (int i = 0; i < ng; ++i)
    for (int j = 0; j < ng; ++j)
      for (int l = 0; l < ng; ++l) {
        const double a = std::pow(10.0, -3.0 + 2.7 * i / (ng - 1.0));
        const double b = std::pow(10.0, -3.0 + 2.7 * j / (ng - 1.0));
        const double c = std::pow(10.0, -3.0 + 2.7 * l / (ng - 1.0));
        consider(a, b, c);
      }
  consider(0.05, 0.05, 0.05);
  double step = 0.3;
  for (int it = 0; it < 300; ++it) {
    const auto base = res.argmax;
    for (int da = -1; da <= 1; ++da)
      for (int db = -1; db <= 1; ++db)
        for (int dc = -1; dc <= 1; ++dc)
          consider(base[0] * std::exp(da * step), base[1] * std::exp(db * step),
                   base[2] * std::exp(dc * step));
    step *= 0.97;
  }
  return res;
}

CertifyReport certificate_matrix_sb(double M, double a, double b, double c) {
  if (!(a > 0 && b > 0 && c > 0)) throw std::invalid_argument("certificate_matrix_sb: a, b, c > 0");
  if (M < 1.0) throw std::invalid_argument("certificate_matrix_sb: M >= 1 required");
  CertifyReport r;
  r.coeffs = {a, b, c};
  r.m.resize(5, 5);
  r.m << 1 - M * b - M * c, -M * a - M * b, -M * a - M * b, -M * b, -M * c,
      0, a - M * b - M * c, -M * b, -M * b, -M * c,
      0, 0, b - M * c, 0, -M * c,
      0, 0, 0, c, 0,
      0, 0, 0, 0, c;
  RMat sym = 0.5 * (r.m + r.m.transpose());
  Eigen::SelfAdjointEigenSolver<RMat> es(sym);
  r.min_eig_sym = es.eigenvalues()(0);
  const double ratio = b / std::sqrt(a * c);
  r.equiv_lo = std::min({1.0, a, c}) * (1.0 - ratio);
  r.equiv_hi = std::max({1.0, a, c}) * (1.0 + ratio);
  if (r.min_eig_sym > 0) r.certified_rate = r.min_eig_sym;  // dissipation constant
  return r;
}

double tensor_gap_bound(double kappa1, double kappa2, double lambda, double Lambda) {
  if (!(kappa1 > 0 && kappa2 > 0 && lambda > 0 && Lambda > 0))
    throw std::invalid_argument("tensor_gap_bound: positive arguments required");
  return std::min({0.5 * kappa2, kappa2 / 16.0 * (lambda * lambda) / (Lambda * Lambda),
                   0.5 * kappa1 * lambda});
}

double tensor_gap_bound_multiplier(double kappa1, double kappa2, double m_l1, double m_l2) {
  return tensor_gap_bound(kappa1, kappa2, m_l1, m_l2);
}

CoercivityResult coercivity_check(const ModelInstance& model, const CommutatorChain& chain,
                                  const CoeffLadder& ladder) {
  CoercivityResult out;
  std::string why;
  if (!validate_condakbk(ladder, ladder.delta, &why)) {
    out.why = "ladder invalid: " + why;
    return out;
  }
  const Eigen::Index n = model.L.M.rows();
  Mat G = Mat::Identity(n, n);
  const int levels = chain.levels();
  for (int k = 0; k < levels; ++k) {
    for (size_t i = 0; i < chain.C[k].size(); ++i) {
      const Mat& Ck = chain.C[k][i].M;
      G += ladder.a[k] * (Ck.adjoint() * Ck);
      if (k + 1 < levels && k < static_cast<int>(ladder.b.size()) &&
          i < chain.C[k + 1].size()) {
        const Mat& Ck1 = chain.C[k + 1][i].M;
        G += ladder.b[k] * (Ck.adjoint() * Ck1 + Ck1.adjoint() * Ck);
      }
    }
  }
  Mat H = hermitian_part(G * model.L.M);
  Mat W = Mat::Zero(n, n);
  for (int k = 0; k < levels; ++k)
    for (const auto& c : chain.C[k]) W += c.M.adjoint() * c.M;
  W = hermitian_part(W);

  Mat Bc = complement_basis(static_cast<int>(n), model.kernel);
  Mat Wc = Bc.adjoint() * W * Bc;
  Mat Hc = Bc.adjoint() * H * Bc;
  Eigen::SelfAdjointEigenSolver<Mat> ew(Wc);
  const double wmin = ew.eigenvalues()(0);
  if (wmin <= 1e-12 * std::max(1.0, ew.eigenvalues().maxCoeff())) {
    out.why = "sum C_j* C_j degenerate on the kernel complement";
    return out;
  }
  Mat Wihalf = ew.operatorInverseSqrt();
  Mat T = hermitian_part(Wihalf * Hc * Wihalf);
  Eigen::SelfAdjointEigenSolver<Mat> et(T);
  out.K = et.eigenvalues()(0);
  out.ok = out.K > 0;
  if (!out.ok) out.why = "twisted form not coercive against the chain";
  return out;
}

ModelCertificate certify_model(const ModelInstance& model) {
  ModelCertificate mc;
  double alpha = 1.0, beta = 0.0;
  switch (model.kind) {
    case ModelInstance::Kind::KfpQuadratic:
      beta = model.potential.omega * model.potential.omega;  // |hess V| = omega^2
      break;
    case ModelInstance::Kind::KfpPeriodic: {
      double m = 0;
      const auto& bx = model.basis->factors[model.basis->factor_index('x')];
      for (int i = 0; i < bx.quad.nodes.size(); ++i)
        m = std::max(m, std::abs(model.potential.d2V(bx.quad.nodes[i])));
      beta = m;
      break;
    }
    default:
      throw std::invalid_argument("certify_model: only kinetic Fokker-Planck kinds");
  }
  mc.defect_inflation = model.L.truncation_defect;
  alpha *= 1.0 + mc.defect_inflation;
  beta *= 1.0 + mc.defect_inflation;

  Mat Wm = model.A[0].M.adjoint() * model.A[0].M + model.grad_x.M.adjoint() * model.grad_x.M;
  LinOp W(model.basis, 0.5 * (Wm + Wm.adjoint()), SymFlag::Symmetric);
  const double kappa = spectral_gap(W, model.kernel);

  mc.consts.alpha = alpha;
  mc.consts.beta = beta;
  mc.consts.kappa = kappa;
  mc.rate = certified_rate_quadratic(mc.consts.M(), kappa);
  return mc;
}

}  // namespace hypolab
