#pragma once

#include "hypolab/certify.hpp"
#include "hypolab/entropic.hpp"

namespace hypolab {

/// Even, mean-zero interaction potential W(x) = sum_k w_k cos(2 pi k x / ell).
struct CouplingSpec {
  RVec cos_coeffs;  // w_1, w_2, ...
  double ell = 1.0;
  double delta_max = 0.0;  // max |W| on a fine grid
  bool smallness = false;  // delta + delta^2 e^delta / 2 < 1/2

  double W(double x) const;
  double dW(double x) const;
};

CouplingSpec make_coupling(const RVec& cos_coeffs, double ell);

/// The smallness functional delta + delta^2 e^delta / 2.
double vfp_smallness_value(double delta);

struct VFPState {
  GridField f;
  RVec rho;    // int f dv
  RVec force;  // F[f](x)
};

VFPState make_vfp_state(int Nx, int Nv, double ell, double vmax,
                        const std::function<double(double, double)>& f0);

void update_density(VFPState& s);

/// F = -(dW) * rho by discrete convolution on the torus.
RVec self_consistent_force(const VFPState& s, const CouplingSpec& w);

/// One Strang-split step with the force frozen at the current density.
void vfp_step(VFPState& s, const CouplingSpec& w, double dt);

struct FreeEnergyReport {
  double E = 0;             // E(f)
  double E_rel = 0;         // E(f) - E(f_inf)
  double E_minus_Pi = 0;    // E(f) - E(Pi f) = int f log(f / rho M)
  double Pi_minus_inf = 0;  // E(Pi f) - E(f_inf)
  double E_inf = 0;
};

FreeEnergyReport free_energy(const VFPState& s, const CouplingSpec& w);

/// L1 distance to the global Maxwellian with unit density.
double l1_distance_to_equilibrium(const VFPState& s);

struct LyapunovReport {
  double L = 0;          // L(f)
  double correction = 0; // <(Id-Pi) f, (Id-Pi)'_f (B f)>
  double a1 = 0;
  double bracket_E = 0;
  bool sandwich_ok = false;  // E/4 <= L <= 5E/4
  double lo_margin = 0, hi_margin = 0;
};

/// L(f) = [E(f) - E(f_inf)] + a1 <(Id-Pi1) f, (Id-Pi1)'_f (B f)> with
/// Pi1 f = rho M and B f = v d_x f + F[f] d_v f; checks the sandwich against
/// the current bracket E.
LyapunovReport nonlinear_lyapunov(const VFPState& s, const CouplingSpec& w, double a1,
                                  double bracket_E);

}  // namespace hypolab
