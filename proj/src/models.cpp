#include "hypolab/models.hpp"

#include <cmath>
#include <numbers>

namespace hypolab {

namespace {

constexpr double kPi = std::numbers::pi;

// Assemble sum_t coeff_t X_t (x) V_t at one-larger factor sizes and report
// the restriction together with the relative norm of the couplings from
// interior modes into the discarded ones.
struct KronAssembly {
  Mat M;
  double defect = 0.0;
};

KronAssembly assemble_kron(const std::vector<std::tuple<Mat, Mat, cplx>>& ext_terms,
                           int Nx, int Nv) {
  const int ex = Nx + 1, ev = Nv + 1;
  Mat full = Mat::Zero(ex * ev, ex * ev);
  for (const auto& [X, V, c] : ext_terms) full += c * kron(X, V);
  Mat inner(Nx * Nv, Nx * Nv);
  double out2 = 0.0;
  for (int i0 = 0; i0 < ex; ++i0)
    for (int i1 = 0; i1 < ev; ++i1) {
      const bool row_out = (i0 == Nx) || (i1 == Nv);
      for (int j0 = 0; j0 < Nx; ++j0)
        for (int j1 = 0; j1 < Nv; ++j1) {
          const cplx val = full(i0 * ev + i1, j0 * ev + j1);
          if (row_out)
            out2 += std::norm(val);
          else
            inner(i0 * Nv + i1, j0 * Nv + j1) = val;
        }
    }
  KronAssembly ka;
  ka.M = std::move(inner);
  ka.defect = std::sqrt(out2) / std::max(1.0, ka.M.norm());
  return ka;
}

Mat fourier_ddx(const BasisSpec& f, int n) {
  Mat D = Mat::Zero(n, n);
  // modes for a size-n truncation of the same torus
  const int lo = (n % 2 == 1) ? -(n - 1) / 2 : -n / 2;
  for (int j = 0; j < n; ++j) D(j, j) = cplx(0.0, 2 * kPi * (lo + j) / f.domain);
  return D;
}

Mat fourier_mult(const BasisSpec& f, const RVec& samples, int n) {
  const int nq = static_cast<int>(f.quad.nodes.size());
  const int mmax = nq / 2;
  std::vector<cplx> fhat(2 * mmax + 1);
  for (int m = -mmax; m <= mmax; ++m) {
    cplx s = 0;
    for (int i = 0; i < nq; ++i) {
      const double ph = -2 * kPi * m * f.quad.nodes[i] / f.domain;
      s += f.quad.weights[i] * samples[i] * cplx(std::cos(ph), std::sin(ph));
    }
    fhat[m + mmax] = s;
  }
  const int lo = (n % 2 == 1) ? -(n - 1) / 2 : -n / 2;
  Mat op = Mat::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      const int m = (lo + j) - (lo + k);
      if (std::abs(m) <= mmax) op(j, k) = fhat[m + mmax];
    }
  return op;
}

}  // namespace

PotentialSpec quadratic_potential(double omega) {
  if (!(omega > 0)) throw std::invalid_argument("quadratic_potential: omega must be positive");
  PotentialSpec p;
  p.kind = PotentialSpec::Kind::Quadratic;
  p.omega = omega;
  const double w2 = omega * omega;
  p.V = [w2](double x) { return 0.5 * w2 * x * x; };
  p.dV = [w2](double x) { return w2 * x; };
  p.d2V = [w2](double) { return w2; };
  return p;
}

PotentialSpec cosine_potential(double eps0, double ell) {
  if (!(ell > 0)) throw std::invalid_argument("cosine_potential: ell must be positive");
  PotentialSpec p;
  p.kind = PotentialSpec::Kind::Cosine;
  p.eps0 = eps0;
  p.ell = ell;
  const double k = 2 * kPi / ell;
  p.V = [eps0, k](double x) { return eps0 * std::cos(k * x); };
  p.dV = [eps0, k](double x) { return -eps0 * k * std::sin(k * x); };
  p.d2V = [eps0, k](double x) { return -eps0 * k * k * std::cos(k * x); };
  return p;
}

PotentialSpec zero_potential(double ell) {
  PotentialSpec p = cosine_potential(0.0, ell);
  p.kind = PotentialSpec::Kind::Zero;
  return p;
}

PotentialSpec sampled_potential(const RVec& nodes, const RVec& values, double ell) {
  if (nodes.size() != values.size() || nodes.size() < 4)
    throw std::invalid_argument("sampled_potential: need matching node/value columns");
  PotentialSpec p;
  p.kind = PotentialSpec::Kind::Samples;
  p.ell = ell;
  const auto xs = std::make_shared<RVec>(nodes);
  const auto ys = std::make_shared<RVec>(values);
  auto interp = [xs, ys, ell](double x) {
    x -= ell * std::floor(x / ell);
    const int n = static_cast<int>(xs->size());
    int j = 0;
    while (j + 1 < n && (*xs)[j + 1] <= x) ++j;
    const int j1 = (j + 1) % n;
    double x0 = (*xs)[j], x1 = (*xs)[j1];
    if (j1 == 0) x1 += ell;
    const double t = (x1 > x0) ? (x - x0) / (x1 - x0) : 0.0;
    return (1 - t) * (*ys)[j] + t * (*ys)[j1];
  };
  p.V = interp;
  const double h = ell / (8.0 * static_cast<double>(nodes.size()));
  p.dV = [interp, h](double x) { return (interp(x + h) - interp(x - h)) / (2 * h); };
  p.d2V = [interp, h](double x) {
    return (interp(x + h) - 2 * interp(x) + interp(x - h)) / (h * h);
  };
  return p;
}

double check_growth_condition(const PotentialSpec& pot, double lo, double hi, int samples) {
  double c = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double x = lo + (hi - lo) * i / (samples - 1.0);
    c = std::max(c, std::abs(pot.d2V(x)) / (1.0 + std::abs(pot.dV(x))));
  }
  return c;
}

bool check_potential_derivatives(const PotentialSpec& pot, double lo, double hi,
                                 int samples, double rtol) {
  const double h = 1e-5 * (hi - lo);
  for (int i = 0; i < samples; ++i) {
    const double x = lo + (hi - lo) * (i + 0.5) / samples;
    const double fd = (pot.V(x + h) - pot.V(x - h)) / (2 * h);
    const double scale = std::max({1.0, std::abs(fd), std::abs(pot.dV(x))});
    if (std::abs(fd - pot.dV(x)) > rtol * scale * 10) return false;
  }
  return true;
}

ModelInstance build_kfp(const PotentialSpec& pot, int Nx, int Nv) {
  if (Nx < 4 || Nv < 4) throw std::invalid_argument("build_kfp: Nx, Nv >= 4 required");
  ModelInstance m;
  m.potential = pot;

  if (pot.kind == PotentialSpec::Kind::Quadratic) {
    m.kind = ModelInstance::Kind::KfpQuadratic;
    const double omega = pot.omega;
    auto bx = build_basis(BasisKind::HermiteGauss, Nx, 1.0 / omega, 'x');
    auto bv = build_basis(BasisKind::HermiteGauss, Nv, 1.0, 'v');
    m.basis = tensor_basis({bx, bv});

    const Mat Lx = hermite_lowering(Nx + 1).cast<cplx>();
    const Mat Lv = hermite_lowering(Nv + 1).cast<cplx>();
    const Mat Rx = Lx.adjoint(), Rv = Lv.adjoint();
    const Mat Iv = Mat::Identity(Nv + 1, Nv + 1);

    // B = v d/dx - V'(x) d/dv = omega (Lx (x) Rv - Rx (x) Lv)
    auto B = assemble_kron({{Lx, Rv, omega}, {Rx, Lv, -omega}}, Nx, Nv);
    m.B = antisymmetrize(LinOp(m.basis, B.M, SymFlag::None, B.defect));

    m.A = {make_derivation(m.basis, Derivation::DDv)};
    auto C = assemble_kron({{Lx, Iv, omega}}, Nx, Nv);
    m.grad_x = detect_flags(LinOp(m.basis, C.M, SymFlag::None, C.defect));

    Mat Lmat = m.A[0].M.adjoint() * m.A[0].M + m.B.M;
    m.L = LinOp(m.basis, std::move(Lmat), SymFlag::None, m.B.truncation_defect);

    Vec eq = Vec::Zero(m.basis->dim());
    eq[0] = 1.0;  // h = 1, unit mass
    m.equilibrium = {m.basis, eq};
    m.kernel = {eq};
    return m;
  }

  // Periodic potential: flat picture on uniform (x) Gaussian (v); the unitary
  // map h -> e^{-V/2} h turns B into v d/dx - V' d/dv + (1/2) v V'.
  m.kind = ModelInstance::Kind::KfpPeriodic;
  auto bx = build_basis(BasisKind::FourierTorus, Nx, pot.ell, 'x');
  auto bv = build_basis(BasisKind::HermiteGauss, Nv, 1.0, 'v');
  m.basis = tensor_basis({bx, bv});

  const int nqx = static_cast<int>(bx.quad.nodes.size());
  RVec dV(nqx);
  for (int i = 0; i < nqx; ++i) dV[i] = pot.dV(bx.quad.nodes[i]);

  const Mat Dx_e = fourier_ddx(bx, Nx);  // diagonal, no x-truncation
  const Mat MdV_e = fourier_mult(bx, dV, Nx + 1);
  const Mat Lv_e = hermite_lowering(Nv + 1).cast<cplx>();
  const Mat Rv_e = Lv_e.adjoint();
  const Mat Mv_e = Lv_e + Rv_e;
  const Mat Av_e = 0.5 * (Rv_e - Lv_e);  // (v - 2 d/dv)/2, antisymmetric
  Mat Dx_ext = Mat::Zero(Nx + 1, Nx + 1);
  Dx_ext.topLeftCorner(Nx, Nx) = Dx_e;

  auto B = assemble_kron({{Dx_ext, Mv_e, 1.0}, {MdV_e, Av_e, 1.0}}, Nx, Nv);
  m.B = antisymmetrize(LinOp(m.basis, B.M, SymFlag::None, B.defect));

  m.A = {make_derivation(m.basis, Derivation::DDv)};

  // transformed grad_x = d/dx + V'/2
  const Mat Iv1 = Mat::Identity(Nv + 1, Nv + 1);
  auto C = assemble_kron({{Dx_ext, Iv1, 1.0}, {MdV_e, Iv1, 0.5}}, Nx, Nv);
  m.grad_x = detect_flags(LinOp(m.basis, C.M, SymFlag::None, C.defect));

  Mat Lmat = m.A[0].M.adjoint() * m.A[0].M + m.B.M;
  m.L = LinOp(m.basis, std::move(Lmat), SymFlag::None, m.B.truncation_defect);

  // equilibrium g = e^{-V/2} (x) ground mode, via Fourier projection
  Vec gx = Vec::Zero(Nx);
  const auto ks = bx.fourier_modes();
  for (int k = 0; k < Nx; ++k) {
    cplx s = 0;
    for (int i = 0; i < nqx; ++i) {
      const double ph = -2 * kPi * ks[k] * bx.quad.nodes[i] / pot.ell;
      s += bx.quad.weights[i] * std::exp(-0.5 * pot.V(bx.quad.nodes[i])) *
           cplx(std::cos(ph), std::sin(ph));
    }
    gx[k] = s;
  }
  Vec eq = Vec::Zero(m.basis->dim());
  for (int k = 0; k < Nx; ++k) eq[k * Nv] = gx[k];
  eq.normalize();
  m.equilibrium = {m.basis, eq};
  m.kernel = {eq};
  return m;
}

ModelInstance build_bgk(double ell, int Nx, int Nv) {
  if (Nx < 4 || Nv < 4) throw std::invalid_argument("build_bgk: Nx, Nv >= 4 required");
  ModelInstance m;
  m.kind = ModelInstance::Kind::Bgk;
  m.potential = zero_potential(ell);
  auto bx = build_basis(BasisKind::FourierTorus, Nx, ell, 'x');
  auto bv = build_basis(BasisKind::HermiteGauss, Nv, 1.0, 'v');
  m.basis = tensor_basis({bx, bv});

  const Mat Dx_e = fourier_ddx(bx, Nx);
  Mat Dx_ext = Mat::Zero(Nx + 1, Nx + 1);
  Dx_ext.topLeftCorner(Nx, Nx) = Dx_e;
  const Mat Lv_e = hermite_lowering(Nv + 1).cast<cplx>();
  const Mat Mv_e = Lv_e + Lv_e.adjoint();

  auto B = assemble_kron({{Dx_ext, Mv_e, 1.0}}, Nx, Nv);
  m.B = antisymmetrize(LinOp(m.basis, B.M, SymFlag::None, B.defect));

  m.A = {make_derivation(m.basis, Derivation::DDv)};
  Mat P0 = Mat::Zero(Nv, Nv);
  P0(0, 0) = 1.0;
  Mat Smat = kron(Mat::Identity(Nx, Nx), Mat::Identity(Nv, Nv) - P0);
  m.S = LinOp(m.basis, Smat, SymFlag::Symmetric, 0.0);

  auto Cx = assemble_kron({{Dx_ext, Mat::Identity(Nv + 1, Nv + 1), 1.0}}, Nx, Nv);
  m.grad_x = detect_flags(LinOp(m.basis, Cx.M, SymFlag::None, Cx.defect));

  m.L = LinOp(m.basis, m.S->M + m.B.M, SymFlag::None, m.B.truncation_defect);

  Vec eq = Vec::Zero(m.basis->dim());
  eq[(Nx / 2) * Nv] = 1.0;  // constant x-mode (k = 0) times Maxwellian
  m.equilibrium = {m.basis, eq};
  m.kernel = {eq};
  return m;
}

OseenInstance build_oseen(double alpha, const std::function<double(double)>& f, int N) {
  if (N < 32) throw std::invalid_argument("build_oseen: N >= 32 required");
  OseenInstance inst;
  inst.size = N;
  inst.alpha = alpha;
  RMat chi;
  hermite_chi(N, 2 * N, inst.nodes, chi);
  const int nq = static_cast<int>(inst.nodes.size());
  inst.f_samples.resize(nq);
  for (int i = 0; i < nq; ++i) {
    inst.f_samples[i] = f(inst.nodes[i]);
    if (!std::isfinite(inst.f_samples[i]))
      throw std::invalid_argument("build_oseen: multiplier not finite at quadrature node");
  }
  inst.F = chi.transpose() * inst.f_samples.asDiagonal() * chi;
  if (!inst.F.allFinite())
    throw std::invalid_argument("build_oseen: quadrature failure for the multiplier");
  inst.S_diag.resize(N);
  for (int k = 0; k < N; ++k) inst.S_diag[k] = 2.0 * k;
  inst.L = inst.F.cast<cplx>() * cplx(0.0, alpha);
  for (int k = 0; k < N; ++k) inst.L(k, k) += inst.S_diag[k];
  return inst;
}

std::vector<OseenScanPoint> oseen_alpha_scan(const std::function<double(double)>& f,
                                             int N, const std::vector<double>& alphas,
                                             double spurious_mass) {
  std::vector<OseenScanPoint> out;
  Vec vker = Vec::Zero(N);
  vker[0] = 1.0;  // alpha = 0 kernel: the Hermite ground mode
  const int top = static_cast<int>(0.9 * N);
  for (double a : alphas) {
    OseenInstance inst = build_oseen(a, f, N);
    Eigen::ComplexEigenSolver<Mat> es(inst.L);
    const Vec ev = es.eigenvalues();
    const Mat& W = es.eigenvectors();
    int jker = 0;
    double best = -1.0;
    for (int j = 0; j < N; ++j) {
      const double ov = std::norm(vker.dot(W.col(j))) / W.col(j).squaredNorm();
      if (ov > best) {
        best = ov;
        jker = j;
      }
    }
    vker = W.col(jker).normalized();
    OseenScanPoint pt;
    pt.alpha = a;
    pt.kernel_branch_re = ev[jker].real();
    pt.min_re_all = std::numeric_limits<double>::infinity();
    pt.min_re_nonkernel = std::numeric_limits<double>::infinity();
    for (int j = 0; j < N; ++j) {
      const double mass_top = W.col(j).tail(N - top).squaredNorm() / W.col(j).squaredNorm();
      if (mass_top >= spurious_mass) continue;
      const double re = ev[j].real();
      if (re <= 1e-9) continue;
      pt.min_re_all = std::min(pt.min_re_all, re);
      if (j != jker) pt.min_re_nonkernel = std::min(pt.min_re_nonkernel, re);
    }
    out.push_back(pt);
  }
  return out;
}

TensorToy build_tensor_toy(const RMat& P1, const RMat& P2, const BasisSpec& factor2,
                           const RVec& m_samples) {
  if (P2.rows() != factor2.size)
    throw std::invalid_argument("build_tensor_toy: P2 must act on factor2");
  if (m_samples.minCoeff() < 0)
    throw std::invalid_argument("build_tensor_toy: multiplier must be nonnegative");
  TensorToy toy;
  Eigen::SelfAdjointEigenSolver<RMat> e1(P1), e2(P2);
  if (e1.eigenvalues()(0) < -1e-10 || e2.eigenvalues()(0) < -1e-10)
    throw std::invalid_argument("build_tensor_toy: factors must be PSD");
  toy.kappa1 = e1.eigenvalues()(1);
  toy.kappa2 = e2.eigenvalues()(1);
  const RVec k1 = e1.eigenvectors().col(0);
  const RVec k2 = e2.eigenvectors().col(0);

  RMat Mmat = factor2.values.transpose() * m_samples.asDiagonal() * factor2.values;
  toy.lambda = k2.dot(Mmat * k2);
  toy.Lambda = (Mmat * k2).norm();
  toy.m_l1 = 0;
  toy.m_l2 = 0;
  for (int i = 0; i < m_samples.size(); ++i) {
    toy.m_l1 += factor2.quad.weights[i] * m_samples[i];
    toy.m_l2 += factor2.quad.weights[i] * m_samples[i] * m_samples[i];
  }
  toy.m_l2 = std::sqrt(toy.m_l2);
  if (toy.m_l1 <= 0)
    throw std::invalid_argument("build_tensor_toy: multiplier vanishes a.e.");

  toy.L = kron(P1.cast<cplx>(), Mmat.cast<cplx>()) +
          kron(RMat::Identity(P1.rows(), P1.cols()).cast<cplx>(), P2.cast<cplx>());
  Vec ker = kron(Mat(k1.cast<cplx>()), Mat(k2.cast<cplx>()));
  toy.kernel = {ker};
  return toy;
}

}  // namespace hypolab
