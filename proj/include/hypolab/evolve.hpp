#pragma once

#include "hypolab/models.hpp"
#include "hypolab/spectral.hpp"

#include <map>
#include <string>

namespace hypolab {

/// Time series of tracked quadratic functionals along a flow. All tracked
/// values are the squared/quadratic quantities: l2 = |h|^2, ah = |Ah|^2,
/// ch = |Ch|^2, mixed = Re<Ah,Ch>, h1 = |h|^2 + |Ah|^2 + |Ch|^2, twisted =
/// the ladder form <<h,h>>.
struct Trajectory {
  std::vector<double> times;
  std::map<std::string, std::vector<double>> tracked;
  double kernel_norm_removed = 0.0;

  const std::vector<double>& at(const std::string& name) const;
};

enum class Scheme { Eig, CrankNicolson };

using Functional = std::function<double(const Vec&)>;

/// e^{-tL} h0 with the projection onto Ker L removed first. The eig scheme
/// uses a full eigendecomposition with a residual check and falls back to
/// Crank-Nicolson when the residual exceeds 1e-8 (then dt must be positive).
Trajectory propagate(const LinOp& L, const StateVector& h0, const std::vector<double>& times,
                     Scheme scheme, double dt,
                     const std::vector<std::pair<std::string, Functional>>& functionals,
                     const std::vector<Vec>& kernel);

/// The standard tracked set for a model + chain (+ optional ladder).
std::vector<std::pair<std::string, Functional>> standard_functionals(
    const ModelInstance& model, const CommutatorChain& chain, const CoeffLadder* ladder);

struct DecayFit {
  enum class Kind { Exponential, PowerLaw };
  Kind kind = Kind::Exponential;
  double value = 0.0;      // decay rate lambda-hat (y ~ e^{-lambda t}) or exponent p-hat
  double prefactor = 0.0;  // fitted y at t = 0 (exp) or t = 1 (power)
  double t0 = 0, t1 = 0;
  double r2 = 0.0;
  bool reliable = false;  // r2 >= 0.98
};

DecayFit fit_series(const std::vector<double>& t, const std::vector<double>& y,
                    DecayFit::Kind kind, double t0, double t1);
DecayFit fit_rate(const Trajectory& traj, const std::string& name, DecayFit::Kind kind,
                  double t0, double t1);

struct HerauReport {
  double max_violation = 0.0;  // max upward step of F(t)
  double bound_a = 0.0;        // sup_t a t |Ah|^2 / F(0)
  double bound_c = 0.0;        // sup_t c t^3 |Ch|^2 / F(0)
  bool smallness_ok = false;
  std::array<double, 5> ratios{};  // a, b/a, c/b, c^2/b, b^2/(ac)
  std::vector<double> F;
};

/// F(t) = |h|^2 + a t |Ah|^2 + 2 b t^2 Re<Ah,Ch> + c t^3 |Ch|^2 along the
/// trajectory; monotonicity encodes the short-time regularization.
HerauReport herau_check(const Trajectory& traj, double a, double b, double c);

struct DiffIneqInstance {
  double C = 1.0, K = 1.0;
  double delta = 0.5, theta = 0.5;
  std::vector<double> t, E, X, Y, Z, M;
};

struct DiffIneqVerdict {
  bool hypotheses_hold = false;
  std::array<bool, 5> condition{};
  std::array<double, 5> worst_margin{};
  double kappa = 0.0;       // min(delta, theta/(1-theta))
  double Cbar = 0.0;        // minimal C with E(t) <= C t^{-1/kappa}
  bool conclusion_finite = false;
};

/// Pointwise check of the five-condition differential-inequality system with
/// forward differences; derivative conditions carry the slack
/// 10 * max|second difference| / dt.
DiffIneqVerdict diffineq_check(const DiffIneqInstance& inst);

struct NashReport {
  double lhs = 0.0;
  double rhs_core = 0.0;
  double theta = 0.0;
};

/// Discrete-Fourier evaluation of the two-variable Nash interpolation data:
/// lhs = int |D_x^lam D_v^mu f|^2, rhs_core = (int |D_x^lam'|^2 f +
/// int |D_v^mu'|^2 f)^{1-theta} (int f)^{2 theta}. Grid sizes powers of two.
NashReport nash_check(const RMat& f, double Lx, double Lv, double lam, double mu,
                      double lamp, double mup);

/// Exact solution of the quadratic kinetic Fokker-Planck flow for data of the
/// form h0 = sum c_n psi_n(x) psi_0(v) with |c_n|^2 proportional to 1/n up to
/// degree cutoff M: the generator is bilinear in the ladder operators, so the
/// flow closes on a 2x2 system and all tracked functionals have closed forms.
/// Mimics L^2-rough data; used for short-time regularization experiments at
/// frequencies far beyond dense-matrix reach.
Trajectory kfp_quadratic_exact_flow(const std::vector<double>& times, double degree_cutoff,
                                    double omega = 1.0);

}  // namespace hypolab
