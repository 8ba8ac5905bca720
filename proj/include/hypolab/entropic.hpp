#pragma once

#include "hypolab/models.hpp"
#include "hypolab/spectral.hpp"

namespace hypolab {

/// Nonnegative phase-space density on a collocation grid: x uniform on the
/// torus [0, ell), v cell-centered on [-vmax, vmax].
struct GridField {
  int Nx = 0, Nv = 0;
  double ell = 0, vmax = 0;
  double dx = 0, dv = 0;
  RVec x, v;
  RMat f;  // Nx rows, Nv cols

  double cell_weight() const { return dx * dv; }
  double mass() const { return f.sum() * dx * dv; }
};

GridField make_grid_field(int Nx, int Nv, double ell, double vmax,
                          const std::function<double(double, double)>& f0);

/// CFL-type bound for grid_step_fp: 0.4 min(dx/vmax, dv/max|V'|, dv^2/2).
double cfl_limit(const GridField& g, double max_force);

/// One Strang step of the kinetic Fokker-Planck equation in density form:
/// x-transport half-steps (semi-Lagrangian, conservative for constant row
/// shifts) around a Chang-Cooper implicit drift-diffusion step in v with the
/// force folded into the drift (v + V'(x)); mass is conserved to rounding,
/// positivity is preserved, and the discrete v-equilibrium is stationary.
void grid_step_fp(GridField& g, const PotentialSpec& pot, double dt);

/// Shared pieces, also used by the nonlinear VFP solver: `drift0(x)` is the
/// v-independent part of the drift (V'(x) for the linear equation, -F(x)
/// for the self-consistent one).
void advect_x(GridField& g, double dt);
void collision_step_v(GridField& g, const RVec& drift0, double dt);

struct EntropyReport {
  double H = 0;          // Kullback information
  double I = 0;          // Fisher information (x and v gradients)
  double Iv = 0, Ix = 0; // components
  double distorted = 0;  // sum of the ladder-weighted Fisher terms
  double E_total = 0;    // H + distorted
  double S_kappa = 0;    // least eigenvalue of the ladder quadratic form
};

EntropyReport entropy_and_fisher(const GridField& g, const PotentialSpec& pot);

/// Distorted entropy functional E(h) = H + a0 int f |d_v u|^2 +
/// 2 b0 int f <d_v u, d_x u> + a1 int f |d_x u|^2 with u = log h.
EntropyReport distorted_energy(const GridField& g, const PotentialSpec& pot,
                               const CoeffLadder& ladder);

}  // namespace hypolab
