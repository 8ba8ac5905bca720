#pragma once

#include "hypolab/models.hpp"
#include "hypolab/spectral.hpp"

#include <array>
#include <string>

namespace hypolab {

/// alpha: bound of [A,A*] relative to {I, A};
/// beta: bound of [B,C] relative to {A, A^2, C, CA};
/// kappa: spectral gap of A*A + C*C (or sum C_k* C_k).
struct BoundConstants {
  double alpha = 0.0;
  double beta = 0.0;
  double kappa = 0.0;
  double M() const { return std::max({1.0, alpha, beta}); }
};

/// Iterated commutators C_0 = A, C_{k+1} = principal part of [C_k, B], with
/// remainders. For the kinetic models: C_1 = grad_x exactly, R_1 = 0,
/// C_2 = 0, R_2 = [C_1, B].
CommutatorChain commutator_chain(const ModelInstance& model, int Nc);

/// Geometric ladder u_0 = 1, u_k = eps^{m_k} with midpoint exponent spacing;
/// eps is the largest power of ten for which u_{k+1} <= delta u_k and
/// u_k^2 <= delta u_{k-1} u_{k+1} both hold.
std::vector<double> ladder_geometric(double delta, int N);

/// Interleaved (a_k, b_k) ladder for a chain with levels C_0..C_Nc, built
/// from ladder_geometric(delta, 2 Nc + 1).
CoeffLadder ladder_for_chain(double delta, int Nc);

/// Part-III coefficient schedule a_1..a_{J-1}.
struct NonlinearSchedule {
  std::vector<double> a;  // a_1..a_{J-1}; a_0 = 1 implicit
  double K = 0, Ebar = 0, k = 0, eps = 0, E = 0;
  int J = 2;
  double K1 = 0, ell = 0;      // fourth-line constants of the lemma
  bool closed_form = true;     // which path produced the output
  bool feasible = false;       // all four condition lines hold
  std::array<double, 4> margin{};  // min slack per line (>= 0 iff satisfied)
  // the quadratic condition at the boundary index (a_1^2 / a_0), which the
  // closed-form recursion does not enforce; reported, not required
  double boundary_margin = 0.0;
};

bool validate_condcoeff(NonlinearSchedule& s);

/// Closed-form construction of the coefficient schedule; if any condition
/// line fails, falls back to a deterministic log-space search minimizing the
/// constraint violation. E defaults to Ebar.
NonlinearSchedule ladder_nonlinear(double K, double Ebar, double k, int J, double eps,
                                   double E = -1.0);

struct CertifyReport {
  RMat m;                   // certificate matrix (4x4 or 5x5)
  double min_eig_sym = 0;   // of (m + m^T)/2
  double certified_rate = 0;  // lambda-bar for the twisted norm, when positive
  std::array<double, 3> coeffs{};  // (a, b, c)
  double equiv_lo = 0, equiv_hi = 0;
};

std::string to_text(const CertifyReport& report);

/// The 4x4 matrix of the A*A + B proof with X = (|Ah|, |A^2 h|, |Ch|, |CAh|).
CertifyReport certificate_matrix_aab(const BoundConstants& c, double a, double b, double x_c);

/// The explicit kinetic Fokker-Planck objective
///   min( (1-(a+bM+1/4))/(2a+1/kappa), (b-(a+b+cM)^2)/(2c+1/kappa) ).
double explicit_objective_quadratic(double M, double kappa, double a, double b, double c);

struct RateResult {
  double lambda_bar = 0;
  std::array<double, 3> argmax{};
  std::vector<std::array<double, 4>> trace;  // (a, b, c, objective)
};

/// Deterministic coarse log-grid search refined by pattern search over
/// triples with b^2 <= ac.
RateResult certified_rate_quadratic(double M, double kappa);

/// The 5x5 matrix of the S + B proof with
/// X = (|sqrt(S) h|, |sqrt(S) Ch|, |Ch|, |sqrt(S) Ah|, |Ah|).
CertifyReport certificate_matrix_sb(double M, double a, double b, double c);

/// min(k2/2, (k2/16) lambda^2 / Lambda^2, (k1/2) lambda); the lambda^2 form
/// follows the theorem's proof (and its multiplier corollary).
double tensor_gap_bound(double kappa1, double kappa2, double lambda, double Lambda);
double tensor_gap_bound_multiplier(double kappa1, double kappa2, double m_l1, double m_l2);

struct CoercivityResult {
  bool ok = false;
  double K = 0.0;
  std::string why;
};

/// Smallest generalized eigenvalue of the symmetric part of the twisted form
/// of <<h, Lh>> against sum_j C_j* C_j on the kernel complement.
CoercivityResult coercivity_check(const ModelInstance& model, const CommutatorChain& chain,
                                  const CoeffLadder& ladder);

/// Model-level certificate: closed-form constants per model kind, inflated by
/// the recorded truncation defect, kappa measured from the assembled
/// operators; runs the explicit-rate optimizer.
struct ModelCertificate {
  BoundConstants consts;
  RateResult rate;
  double defect_inflation = 0.0;
};

ModelCertificate certify_model(const ModelInstance& model);

}  // namespace hypolab
