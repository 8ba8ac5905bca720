#pragma once

#include "hypolab/spectral.hpp"

#include <functional>
#include <optional>

namespace hypolab {

struct PotentialSpec {
  enum class Kind { Quadratic, Cosine, Samples, Zero } kind = Kind::Zero;
  double omega = 1.0;                    // quadratic: V = omega^2 x^2 / 2
  double eps0 = 0.0;                     // cosine amplitude
  double ell = 2.0 * 3.14159265358979323846;  // torus length for cosine
  std::function<double(double)> V, dV, d2V;
  double growth_c = -1.0;  // |V''| <= c (1 + |V'|) when computed
};

PotentialSpec quadratic_potential(double omega);
PotentialSpec cosine_potential(double eps0, double ell);
PotentialSpec zero_potential(double ell);
/// Two-column samples (node, value); derivatives by centered differences.
PotentialSpec sampled_potential(const RVec& nodes, const RVec& values, double ell);

/// max over a sample grid of |V''| / (1 + |V'|).
double check_growth_condition(const PotentialSpec& pot, double lo, double hi,
                              int samples = 10000);

/// Consistency of the derivative evaluators with finite differences of V.
bool check_potential_derivatives(const PotentialSpec& pot, double lo, double hi,
                                 int samples = 200, double rtol = 1e-6);

struct ModelInstance {
  enum class Kind { KfpQuadratic, KfpPeriodic, Bgk };
  Kind kind;
  TensorBasisPtr basis;
  std::vector<LinOp> A;
  LinOp B;
  std::optional<LinOp> S;  // Part II models
  LinOp L;
  LinOp grad_x;  // the designated principal part C_1 of [A, B]
  StateVector equilibrium;
  std::vector<Vec> kernel;
  PotentialSpec potential;
};

/// Kinetic Fokker-Planck in the weighted space L^2(e^{-V} gamma).
/// Quadratic potentials use Hermite x Hermite with exact ladder algebra;
/// periodic potentials use Fourier x Hermite in the unitarily equivalent flat
/// picture, where B gains the multiplication term v V'(x)/2.
ModelInstance build_kfp(const PotentialSpec& pot, int Nx, int Nv);

/// Linear relaxation (BGK-type) L = S + B with S = I - (projection onto the
/// local Maxwellian direction), A = d/dv, B = v d/dx on the torus.
ModelInstance build_bgk(double ell, int Nx, int Nv);

struct OseenInstance {
  int size = 0;
  double alpha = 0.0;
  RVec nodes;       // Gauss-Hermite nodes (weight e^{-x^2})
  RVec f_samples;
  RVec S_diag;      // 2k
  RMat F;           // multiplication matrix of f, symmetric
  Mat L;            // S + i alpha F
};

OseenInstance build_oseen(double alpha, const std::function<double(double)>& f, int N);

struct OseenScanPoint {
  double alpha;
  double min_re_all;        // over non-spurious spectrum
  double min_re_nonkernel;  // excluding the branch continued from alpha = 0
  double kernel_branch_re;
};

/// Eigenvalue statistics along an increasing alpha path. The branch that
/// continues from the alpha = 0 kernel (the equilibrium direction) is tracked
/// by eigenvector overlap and reported separately; eigenvectors with more
/// than `spurious_mass` of their weight on the top 10% of modes are excluded.
std::vector<OseenScanPoint> oseen_alpha_scan(const std::function<double(double)>& f,
                                             int N, const std::vector<double>& alphas,
                                             double spurious_mass = 0.2);

struct TensorToy {
  Mat L;
  std::vector<Vec> kernel;
  double kappa1 = 0, kappa2 = 0;  // factor gaps
  double lambda = 0, Lambda = 0;  // <k2, M k2>, |M k2|
  double m_l1 = 0, m_l2 = 0;      // L1/L2 norms of the multiplier
};

/// L = P1 (x) M + I (x) P2 with M = multiplication by m on factor 2.
/// P1, P2 symmetric PSD with one-dimensional kernels (lowest eigenvector).
TensorToy build_tensor_toy(const RMat& P1, const RMat& P2, const BasisSpec& factor2,
                           const RVec& m_samples);

}  // namespace hypolab
