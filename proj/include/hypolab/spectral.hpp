#pragma once

#include <Eigen/Dense>

#include <complex>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace hypolab {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

enum class BasisKind { FourierTorus, HermiteGauss };

/// Quadrature against the reference probability density of the basis
/// (uniform on the torus, Gaussian for Hermite). weights sum to 1.
struct Quadrature {
  RVec nodes;
  RVec weights;
};

/// One factor of a weighted-L2 space: an orthonormal basis with an
/// attached quadrature that reproduces the Gram identity exactly.
struct BasisSpec {
  BasisKind kind;
  int size = 0;       // number of modes N
  double domain = 0;  // torus length ell, or Gaussian scale sigma
  char role = 'x';    // 'x' or 'v'
  Quadrature quad;
  // Hermite factors: values(i,k) = psi_k(node_i) sqrt(w_i), half of the
  // quadrature weight folded in, so gram = values^T values and multiplication
  // matrices are values^T diag(samples) values. Fourier factors are handled
  // analytically and keep this empty.
  RMat values;

  std::vector<int> fourier_modes() const;  // wave numbers, ascending
};

BasisSpec build_basis(BasisKind kind, int size, double domain, char role);

/// Gram matrix of the basis under its own quadrature (orthonormality check).
Mat gram_matrix(const BasisSpec& b);

/// Hermite function evaluation with half quadrature weight folded in:
/// chi(i,k) = psi_k(x_i) * sqrt(w_i), numerically stable for any N.
/// Rows are the Gauss-Hermite nodes for weight exp(-x^2) (physicists').
void hermite_chi(int nfun, int nquad, RVec& nodes, RMat& chi);

struct TensorBasis {
  std::vector<BasisSpec> factors;

  int dim() const {
    int d = 1;
    for (const auto& f : factors) d *= f.size;
    return d;
  }
  int factor_index(char role) const;
  // flat index = i0 * N1 * ... + ...; factor 0 slowest
};

using TensorBasisPtr = std::shared_ptr<const TensorBasis>;

TensorBasisPtr tensor_basis(std::vector<BasisSpec> factors);

enum class SymFlag { None, Symmetric, Antisymmetric };

/// Matrix representation of an operator in the orthonormal (tensor) basis.
struct LinOp {
  TensorBasisPtr basis;
  Mat M;
  SymFlag flag = SymFlag::None;
  // Relative Frobenius norm of the couplings into discarded modes, plus any
  // antisymmetrization correction applied afterwards.
  double truncation_defect = 0.0;

  LinOp() = default;
  LinOp(TensorBasisPtr b, Mat m, SymFlag f = SymFlag::None, double defect = 0.0)
      : basis(std::move(b)), M(std::move(m)), flag(f), truncation_defect(defect) {}
};

bool check_flag(const LinOp& op, double tol = 1e-10);
LinOp detect_flags(LinOp op, double tol = 1e-10);

struct StateVector {
  TensorBasisPtr basis;
  Vec h;

  double norm() const { return h.norm(); }
};

enum class Derivation { DDx, DDv, MultX, MultV };

/// Single-factor ladder matrices for a Hermite factor (scale folded in):
/// lowering = d/du with u the standardized variable.
RMat hermite_lowering(int n);

/// Operator of `which` embedded in the tensor basis. Closed-form entries:
/// Hermite d/dv is the scaled lowering ladder, multiplication by v is
/// lowering+raising; Fourier d/dx is diagonal i 2 pi k / ell.
/// truncation_defect records the relative norm of couplings into modes >= N.
LinOp make_derivation(const TensorBasisPtr& basis, Derivation which);

/// Multiplication by a function given by samples at the quadrature nodes of
/// factor `fi`, embedded in the tensor basis.
LinOp make_mult_fn(const TensorBasisPtr& basis, int fi, const RVec& samples);

LinOp embed_factor_op(const TensorBasisPtr& basis, int fi, const Mat& op,
                      double defect = 0.0);

LinOp commutator(const LinOp& P, const LinOp& Q);
std::vector<LinOp> commutator(const std::vector<LinOp>& P, const LinOp& Q);

/// Adjoint in the weighted space = conjugate transpose (orthonormal basis).
/// Detects and sets symmetry flags.
LinOp adjoint_weighted(const LinOp& P);

LinOp scaled(const LinOp& P, cplx factor);
LinOp sum(const LinOp& P, const LinOp& Q, cplx alpha = 1.0, cplx beta = 1.0);

/// Enforce exact antisymmetry, folding the correction size into the defect.
LinOp antisymmetrize(LinOp op);

/// C_0..C_Nc with remainders; C_{Nc+1} = 0 is implicit. Entry j of R is the
/// remainder R_{j+1} in [C_j, B] = Z_{j+1} C_{j+1} + R_{j+1}.
struct CommutatorChain {
  std::vector<std::vector<LinOp>> C;
  std::vector<std::vector<LinOp>> R;
  std::vector<double> z_lo, z_hi;  // lambda_j, Lambda_j; identity defaults 1
  double tolerance = 0.0;          // invariant slack actually used

  int levels() const { return static_cast<int>(C.size()); }
};

/// Part-I coefficient ladder (a_k, b_k) for the twisted norm.
struct CoeffLadder {
  std::vector<double> a;  // a_0..a_Nc
  std::vector<double> b;  // b_0..b_Nc-? (b beyond chain end ignored)
  double delta = 0.0;
};

bool validate_condakbk(const CoeffLadder& lad, double delta, std::string* why = nullptr);

struct NormsReport {
  double l2 = 0, h1 = 0, twisted = 0;
  double equiv_lo = 0, equiv_hi = 0;  // twisted vs h1^2 equivalence constants
};

/// l2 = |h|; h1 = |h|^2 + sum |C_j h|^2 (reported as the squared form's
/// square root); twisted = the quadratic form of the ladder norm.
NormsReport norms(const StateVector& h, const CommutatorChain& chain,
                  const CoeffLadder* ladder);

/// Smallest eigenvalue of symmetric PSD P on the orthogonal complement of
/// `kernel` (vectors orthonormalized internally).
double spectral_gap(const LinOp& P, const std::vector<Vec>& kernel);
double spectral_gap(const Mat& P, const std::vector<Vec>& kernel);

struct RelBound {
  double alpha = 0.0;
  bool infinite = false;  // S does not vanish on the intersection of Ker T_i
};

/// Least alpha with |S h| <= alpha * sqrt(sum |T_i h|^2) over the discretized
/// space (quadratic-sum surrogate of the sum-of-norms bound; overestimates
/// the sum-form constant by at most sqrt(#T)).
RelBound relative_bound_constant(const LinOp& S, const std::vector<LinOp>& T);

// small shared helpers
inline Mat hermitian_part(const Mat& M) { return 0.5 * (M + M.adjoint()); }
Mat kron(const Mat& A, const Mat& B);
std::vector<Vec> orthonormalize(const std::vector<Vec>& vs, double tol = 1e-12);
Mat complement_basis(int dim, const std::vector<Vec>& kernel);

}  // namespace hypolab
