#include "hypolab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hypolab {

namespace {

constexpr double kPi = std::numbers::pi;

// Gauss nodes for the probabilists' weight gamma(u) = e^{-u^2/2}/sqrt(2 pi):
// eigenvalues of the Jacobi matrix with off-diagonal sqrt(k).
RVec hermite_prob_nodes(int n) {
  RMat J = RMat::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = std::sqrt(static_cast<double>(k));
    J(k - 1, k) = b;
    J(k, k - 1) = b;
  }
  Eigen::SelfAdjointEigenSolver<RMat> es(J);
  return es.eigenvalues();
}

// Orthonormal probabilists' Hermite values psi_k(u_i), k < nfun, with the
// Christoffel weights w_i = 1/sum_k psi_k(u_i)^2 (k < nquad) folded in as
// sqrt(w): chi(i,k) = psi_k(u_i) sqrt(w_i). Scale-invariant normalization
// keeps this stable for any size.
void hermite_prob_chi(int nfun, int nquad, RVec& nodes, RMat& chi) {
  nodes = hermite_prob_nodes(nquad);
  RMat psi(nquad, nquad);
  RVec ssum(nquad);
  for (int i = 0; i < nquad; ++i) {
    const double u = nodes[i];
    psi(i, 0) = 1.0;
    if (nquad > 1) psi(i, 1) = u;
    double s = psi(i, 0) * psi(i, 0);
    if (nquad > 1) s += psi(i, 1) * psi(i, 1);
    for (int k = 2; k < nquad; ++k) {
      psi(i, k) = (u * psi(i, k - 1) - std::sqrt(k - 1.0) * psi(i, k - 2)) /
                  std::sqrt(static_cast<double>(k));
      if (std::abs(psi(i, k)) > 1e120) {
        // overall scale cancels in psi/sqrt(s)
        for (int j = 0; j <= k; ++j) psi(i, j) *= 1e-120;
        s *= 1e-240;
      }
      s += psi(i, k) * psi(i, k);
    }
    const double inv = 1.0 / std::sqrt(s);
    for (int k = 0; k < nfun; ++k) chi(i, k) = psi(i, k) * inv;
  }
}

}  // namespace

void hermite_chi(int nfun, int nquad, RVec& nodes, RMat& chi) {
  // physicists' weight e^{-x^2}: Jacobi off-diagonal sqrt(k/2)
  RMat J = RMat::Zero(nquad, nquad);
  for (int k = 1; k < nquad; ++k) {
    const double b = std::sqrt(k / 2.0);
    J(k - 1, k) = b;
    J(k, k - 1) = b;
  }
  Eigen::SelfAdjointEigenSolver<RMat> es(J);
  nodes = es.eigenvalues();
  chi.resize(nquad, nfun);
  for (int i = 0; i < nquad; ++i) {
    const double x = nodes[i];
    RVec u(nquad);
    u[0] = 1.0;
    if (nquad > 1) u[1] = std::sqrt(2.0) * x;
    double s = u[0] * u[0];
    if (nquad > 1) s += u[1] * u[1];
    for (int k = 2; k < nquad; ++k) {
      u[k] = std::sqrt(2.0 / k) * x * u[k - 1] - std::sqrt((k - 1.0) / k) * u[k - 2];
      if (std::abs(u[k]) > 1e120) {
        for (int j = 0; j <= k; ++j) u[j] *= 1e-120;
        s *= 1e-240;
      }
      s += u[k] * u[k];
    }
    const double inv = 1.0 / std::sqrt(s);
    for (int k = 0; k < nfun; ++k) chi(i, k) = u[k] * inv;
  }
}

std::vector<int> BasisSpec::fourier_modes() const {
  // N odd: -(N-1)/2 .. (N-1)/2 ; N even: -N/2 .. N/2-1
  std::vector<int> ks(size);
  const int lo = (size % 2 == 1) ? -(size - 1) / 2 : -size / 2;
  for (int j = 0; j < size; ++j) ks[j] = lo + j;
  return ks;
}

BasisSpec build_basis(BasisKind kind, int size, double domain, char role) {
  if (size < 2) throw std::invalid_argument("build_basis: size must be >= 2");
  if (!(domain > 0)) throw std::invalid_argument("build_basis: domain parameter must be positive");
  BasisSpec b;
  b.kind = kind;
  b.size = size;
  b.domain = domain;
  b.role = role;
  if (kind == BasisKind::HermiteGauss) {
    const int nq = 2 * size;
    RVec unodes;
    RMat chi(nq, size);
    hermite_prob_chi(size, nq, unodes, chi);
    b.quad.nodes = domain * unodes;  // physical nodes v = sigma u
    b.values = chi;                  // half-weighted: G = values^T values
    // plain weights for callers that need them; psi_0 = 1, so w_i = chi(i,0)^2
    b.quad.weights.resize(nq);
    for (int i = 0; i < nq; ++i) b.quad.weights[i] = chi(i, 0) * chi(i, 0);
  } else {
    const int nq = 2 * size + 1;
    b.quad.nodes.resize(nq);
    b.quad.weights = RVec::Constant(nq, 1.0 / nq);
    for (int i = 0; i < nq; ++i) b.quad.nodes[i] = domain * i / nq;
  }
  return b;
}

Mat gram_matrix(const BasisSpec& b) {
  const int n = b.size;
  if (b.kind == BasisKind::HermiteGauss) {
    RMat g = b.values.transpose() * b.values;
    return g.cast<cplx>();
  }
  Mat g = Mat::Zero(n, n);
  const auto ks = b.fourier_modes();
  const int nq = static_cast<int>(b.quad.nodes.size());
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) {
      cplx s = 0;
      for (int i = 0; i < nq; ++i) {
        const double ph = 2 * kPi * (ks[k] - ks[j]) * b.quad.nodes[i] / b.domain;
        s += b.quad.weights[i] * cplx(std::cos(ph), std::sin(ph));
      }
      g(j, k) = s;
    }
  return g;
}

int TensorBasis::factor_index(char role) const {
  for (size_t i = 0; i < factors.size(); ++i)
    if (factors[i].role == role) return static_cast<int>(i);
  throw std::invalid_argument(std::string("tensor basis has no factor with role '") + role + "'");
}

TensorBasisPtr tensor_basis(std::vector<BasisSpec> factors) {
  auto tb = std::make_shared<TensorBasis>();
  tb->factors = std::move(factors);
  return tb;
}

Mat kron(const Mat& A, const Mat& B) {
  Mat K(A.rows() * B.rows(), A.cols() * B.cols());
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.cols(); ++j)
      K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  return K;
}

bool check_flag(const LinOp& op, double tol) {
  const double scale = std::max(1.0, op.M.norm());
  if (op.flag == SymFlag::Symmetric)
    return (op.M - op.M.adjoint()).norm() / scale <= tol;
  if (op.flag == SymFlag::Antisymmetric)
    return (op.M + op.M.adjoint()).norm() / scale <= tol;
  return true;
}

LinOp detect_flags(LinOp op, double tol) {
  const double scale = std::max(1.0, op.M.norm());
  if ((op.M - op.M.adjoint()).norm() / scale <= tol)
    op.flag = SymFlag::Symmetric;
  else if ((op.M + op.M.adjoint()).norm() / scale <= tol)
    op.flag = SymFlag::Antisymmetric;
  else
    op.flag = SymFlag::None;
  return op;
}

RMat hermite_lowering(int n) {
  RMat L = RMat::Zero(n, n);
  for (int k = 1; k < n; ++k) L(k - 1, k) = std::sqrt(static_cast<double>(k));
  return L;
}

namespace {

// Factor matrix plus the defect of its one-larger extension: the relative
// norm of the couplings from kept modes into the first discarded one.
struct FactorOp {
  Mat M;
  double defect = 0.0;
};

FactorOp factor_matrix(const BasisSpec& f, Derivation which) {
  const int n = f.size;
  const bool is_mult = (which == Derivation::MultX || which == Derivation::MultV);
  const char need = (which == Derivation::DDx || which == Derivation::MultX) ? 'x' : 'v';
  if (f.role != need)
    throw std::invalid_argument("make_derivation: requested factor role not present");
  if (f.kind == BasisKind::FourierTorus) {
    if (is_mult)
      throw std::invalid_argument(
          "make_derivation: multiplication by the coordinate is not defined on a torus factor");
    Mat D = Mat::Zero(n, n);
    const auto ks = f.fourier_modes();
    for (int j = 0; j < n; ++j) D(j, j) = cplx(0.0, 2 * kPi * ks[j] / f.domain);
    return {D, 0.0};
  }
  // Hermite: d/dv = lowering / sigma ; v = sigma (lowering + raising)
  const RMat Lext = hermite_lowering(n + 1);
  RMat ext;
  if (is_mult)
    ext = f.domain * (Lext + Lext.transpose());
  else
    ext = Lext / f.domain;
  const RMat kept = ext.topLeftCorner(n, n);
  const double out = ext.block(n, 0, 1, n).norm();
  const double defect = out / std::max(1.0, kept.norm());
  return {kept.cast<cplx>(), defect};
}

}  // namespace

LinOp embed_factor_op(const TensorBasisPtr& basis, int fi, const Mat& op, double defect) {
  const int nf = static_cast<int>(basis->factors.size());
  Mat M = Mat::Identity(1, 1);
  for (int j = 0; j < nf; ++j) {
    if (j == fi)
      M = kron(M, op);
    else
      M = kron(M, Mat::Identity(basis->factors[j].size, basis->factors[j].size));
  }
  return LinOp(basis, std::move(M), SymFlag::None, defect);
}

LinOp make_derivation(const TensorBasisPtr& basis, Derivation which) {
  const char role = (which == Derivation::DDx || which == Derivation::MultX) ? 'x' : 'v';
  const int fi = basis->factor_index(role);
  FactorOp fo = factor_matrix(basis->factors[fi], which);
  return detect_flags(embed_factor_op(basis, fi, fo.M, fo.defect));
}

LinOp make_mult_fn(const TensorBasisPtr& basis, int fi, const RVec& samples) {
  const BasisSpec& f = basis->factors[fi];
  const int n = f.size;
  if (samples.size() != f.quad.nodes.size())
    throw std::invalid_argument("make_mult_fn: samples must be given at the factor quadrature nodes");
  Mat op;
  double defect = 0.0;
  if (f.kind == BasisKind::HermiteGauss) {
    // one extra function for the defect estimate
    const int nq = static_cast<int>(f.quad.nodes.size());
    RVec unodes;
    RMat chi(nq, n + 1);
    hermite_prob_chi(n + 1, nq, unodes, chi);
    RMat full = chi.transpose() * samples.asDiagonal() * chi;
    op = full.topLeftCorner(n, n).cast<cplx>();
    defect = full.block(n, 0, 1, n).norm() / std::max(1.0, full.topLeftCorner(n, n).norm());
  } else {
    const int nq = static_cast<int>(f.quad.nodes.size());
    // Fourier coefficients of the sampled function
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
    const auto ks = f.fourier_modes();
    op = Mat::Zero(n, n);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const int m = ks[j] - ks[k];
        if (std::abs(m) <= mmax) op(j, k) = fhat[m + mmax];
      }
    // couplings out of the resolved band
    double out2 = 0.0, kept2 = std::max(1.0, op.norm());
    for (int j = 0; j < n; ++j)
      for (int m = -mmax; m <= mmax; ++m) {
        const int target = ks[j] - m;  // row index in mode numbers
        if (target < ks.front() || target > ks.back()) out2 += std::norm(fhat[m + mmax]);
      }
    defect = std::sqrt(out2) / kept2;
  }
  return detect_flags(embed_factor_op(basis, fi, op, defect));
}

LinOp commutator(const LinOp& P, const LinOp& Q) {
  if (P.basis != Q.basis && P.M.rows() != Q.M.rows())
    throw std::invalid_argument("commutator: dimension mismatch");
  LinOp out(P.basis ? P.basis : Q.basis, P.M * Q.M - Q.M * P.M);
  out.truncation_defect = P.truncation_defect + Q.truncation_defect;
  return detect_flags(std::move(out));
}

std::vector<LinOp> commutator(const std::vector<LinOp>& P, const LinOp& Q) {
  std::vector<LinOp> out;
  out.reserve(P.size());
  for (const auto& p : P) out.push_back(commutator(p, Q));
  return out;
}

LinOp adjoint_weighted(const LinOp& P) {
  LinOp out(P.basis, P.M.adjoint(), P.flag, P.truncation_defect);
  return detect_flags(std::move(out));
}

LinOp scaled(const LinOp& P, cplx factor) {
  LinOp out(P.basis, factor * P.M, SymFlag::None, P.truncation_defect);
  return detect_flags(std::move(out));
}

LinOp sum(const LinOp& P, const LinOp& Q, cplx alpha, cplx beta) {
  if (P.M.rows() != Q.M.rows()) throw std::invalid_argument("sum: dimension mismatch");
  LinOp out(P.basis ? P.basis : Q.basis, alpha * P.M + beta * Q.M);
  out.truncation_defect = P.truncation_defect + Q.truncation_defect;
  return detect_flags(std::move(out));
}

LinOp antisymmetrize(LinOp op) {
  const Mat anti = 0.5 * (op.M - op.M.adjoint());
  const double corr = (op.M - anti).norm() / std::max(1.0, anti.norm());
  op.truncation_defect += corr;
  op.M = anti;
  op.flag = SymFlag::Antisymmetric;
  return op;
}

bool validate_condakbk(const CoeffLadder& lad, double delta, std::string* why) {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  const size_t n = lad.a.size();
  if (n == 0) return fail("empty ladder");
  if (!(lad.a[0] <= delta)) return fail("a_0 <= delta violated");
  for (size_t k = 0; k < n; ++k) {
    if (!(lad.a[k] > 0)) return fail("coefficients must be positive");
    if (k >= lad.b.size()) continue;
    if (!(lad.b[k] > 0)) return fail("coefficients must be positive");
    if (!(lad.b[k] <= delta * lad.a[k])) return fail("b_k <= delta a_k violated");
    if (k + 1 < n && !(lad.a[k + 1] <= delta * lad.b[k]))
      return fail("a_{k+1} <= delta b_k violated");
  }
  for (size_t k = 1; k < n; ++k)
    if (k < lad.b.size() &&
        !(lad.a[k] * lad.a[k] <= delta * lad.b[k - 1] * lad.b[k]))
      return fail("a_k^2 <= delta b_{k-1} b_k violated");
  for (size_t k = 0; k + 1 < n; ++k)
    if (k < lad.b.size() &&
        !(lad.b[k] * lad.b[k] <= delta * lad.a[k] * lad.a[k + 1]))
      return fail("b_k^2 <= delta a_k a_{k+1} violated");
  return true;
}

NormsReport norms(const StateVector& h, const CommutatorChain& chain, const CoeffLadder* ladder) {
  NormsReport r;
  r.l2 = h.h.norm();
  double h1sq = r.l2 * r.l2;
  const int levels = chain.levels();
  for (int j = 0; j < levels; ++j) {
    double s = 0;
    for (const auto& op : chain.C[j]) s += (op.M * h.h).squaredNorm();
    h1sq += s;
  }
  r.h1 = std::sqrt(h1sq);
  if (!ladder) {
    r.twisted = 0;
    return r;
  }
  if (static_cast<int>(ladder->a.size()) < levels)
    throw std::invalid_argument("norms: ladder shorter than chain");
  double tw = r.l2 * r.l2;
  for (int k = 0; k < levels; ++k) {
    double csq = 0;
    cplx mix = 0;
    for (size_t i = 0; i < chain.C[k].size(); ++i) {
      const Vec ck = chain.C[k][i].M * h.h;
      csq += ck.squaredNorm();
      if (k + 1 < levels && i < chain.C[k + 1].size())
        mix += ck.dot(chain.C[k + 1][i].M * h.h);
    }
    tw += ladder->a[k] * csq;
    if (k + 1 < levels && k < static_cast<int>(ladder->b.size()))
      tw += 2.0 * ladder->b[k] * mix.real();
  }
  r.twisted = tw;
  double amin = 1.0, amax = 1.0, ratio = 0.0;
  for (int k = 0; k < levels; ++k) {
    amin = std::min(amin, ladder->a[k]);
    amax = std::max(amax, ladder->a[k]);
    if (k + 1 < levels && k < static_cast<int>(ladder->b.size()))
      ratio = std::max(ratio, ladder->b[k] / std::sqrt(ladder->a[k] * ladder->a[k + 1]));
  }
  r.equiv_lo = amin * std::max(0.0, 1.0 - ratio);
  r.equiv_hi = amax * (1.0 + ratio);
  return r;
}

std::vector<Vec> orthonormalize(const std::vector<Vec>& vs, double tol) {
  std::vector<Vec> out;
  for (Vec v : vs) {
    for (const auto& u : out) v -= u.dot(v) * u;
    const double n = v.norm();
    if (n > tol) out.push_back(v / n);
  }
  return out;
}

Mat complement_basis(int dim, const std::vector<Vec>& kernel) {
  auto ker = orthonormalize(kernel);
  if (ker.empty()) return Mat::Identity(dim, dim);
  Mat K(dim, ker.size());
  for (size_t j = 0; j < ker.size(); ++j) K.col(j) = ker[j];
  Eigen::HouseholderQR<Mat> qr(K);
  Mat Q = qr.householderQ();
  return Q.rightCols(dim - ker.size());
}

double spectral_gap(const Mat& P, const std::vector<Vec>& kernel) {
  Mat B = complement_basis(static_cast<int>(P.rows()), kernel);
  Mat Pc = hermitian_part(B.adjoint() * P * B);
  Eigen::SelfAdjointEigenSolver<Mat> es(Pc);
  const double lam = es.eigenvalues()(0);
  if (lam < -1e-8)
    throw std::runtime_error("spectral_gap: negative eigenvalue, discretization inconsistent");
  return std::max(0.0, lam);
}

double spectral_gap(const LinOp& P, const std::vector<Vec>& kernel) {
  if (P.flag != SymFlag::Symmetric)
    throw std::invalid_argument("spectral_gap: operator not flagged symmetric");
  return spectral_gap(P.M, kernel);
}

RelBound relative_bound_constant(const LinOp& S, const std::vector<LinOp>& T) {
  if (T.empty()) throw std::invalid_argument("relative_bound_constant: empty T");
  const Eigen::Index n = S.M.rows();
  Mat W = Mat::Zero(n, n);
  double tnorm = 0;
  for (const auto& t : T) {
    W += t.M.adjoint() * t.M;
    tnorm += t.M.norm();
  }
  if (tnorm == 0) throw std::invalid_argument("relative_bound_constant: all T zero");
  W = hermitian_part(W);
  Eigen::SelfAdjointEigenSolver<Mat> es(W);
  const RVec ev = es.eigenvalues();
  const double lmax = std::max(ev(n - 1), 1e-300);
  const double ktol = 1e-10 * lmax;
  RelBound rb;
  std::vector<Eigen::Index> pos;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (ev(i) <= ktol) {
      const Vec k = es.eigenvectors().col(i);
      if ((S.M * k).norm() > 1e-6 * std::max(1.0, S.M.norm())) {
        rb.infinite = true;
        rb.alpha = std::numeric_limits<double>::infinity();
        return rb;
      }
    } else {
      pos.push_back(i);
    }
  }
  if (pos.empty()) {
    rb.infinite = true;
    rb.alpha = std::numeric_limits<double>::infinity();
    return rb;
  }
  Mat V(n, pos.size());
  RVec dinv(pos.size());
  for (size_t j = 0; j < pos.size(); ++j) {
    V.col(j) = es.eigenvectors().col(pos[j]);
    dinv(j) = 1.0 / std::sqrt(ev(pos[j]));
  }
  Mat SS = S.M.adjoint() * S.M;
  Mat A = hermitian_part(dinv.asDiagonal() * (V.adjoint() * SS * V) * dinv.asDiagonal());
  Eigen::SelfAdjointEigenSolver<Mat> es2(A);
  rb.alpha = std::sqrt(std::max(0.0, es2.eigenvalues().maxCoeff()));
  return rb;
}

}  // namespace hypolab
