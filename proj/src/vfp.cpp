#include "hypolab/vfp.hpp"

#include <cmath>
#include <numbers>

namespace hypolab {

namespace {
constexpr double kPi = std::numbers::pi;
}  // namespace

double CouplingSpec::W(double x) const {
  double s = 0;
  for (int k = 0; k < cos_coeffs.size(); ++k)
    s += cos_coeffs[k] * std::cos(2 * kPi * (k + 1) * x / ell);
  return s;
}

double CouplingSpec::dW(double x) const {
  double s = 0;
  for (int k = 0; k < cos_coeffs.size(); ++k)
    s -= cos_coeffs[k] * (2 * kPi * (k + 1) / ell) * std::sin(2 * kPi * (k + 1) * x / ell);
  return s;
}

double vfp_smallness_value(double delta) {
  return delta + 0.5 * delta * delta * std::exp(delta);
}

CouplingSpec make_coupling(const RVec& cos_coeffs, double ell) {
  CouplingSpec w;
  w.cos_coeffs = cos_coeffs;
  w.ell = ell;
  double m = 0;
  for (int i = 0; i < 4096; ++i) m = std::max(m, std::abs(w.W(ell * i / 4096.0)));
  w.delta_max = m;
  w.smallness = vfp_smallness_value(m) < 0.5;
  return w;
}

VFPState make_vfp_state(int Nx, int Nv, double ell, double vmax,
                        const std::function<double(double, double)>& f0) {
  VFPState s;
  s.f = make_grid_field(Nx, Nv, ell, vmax, f0);
  const double m = s.f.mass();
  if (!(m > 0)) throw std::invalid_argument("make_vfp_state: zero mass");
  s.f.f /= m;  // unit mass
  update_density(s);
  return s;
}

void update_density(VFPState& s) {
  s.rho.resize(s.f.Nx);
  for (int j = 0; j < s.f.Nx; ++j) s.rho[j] = s.f.f.row(j).sum() * s.f.dv;
}

RVec self_consistent_force(const VFPState& s, const CouplingSpec& w) {
  const int Nx = s.f.Nx;
  RVec dWtab(Nx);
  for (int d = 0; d < Nx; ++d) dWtab[d] = w.dW(d * s.f.dx);
  RVec F = RVec::Zero(Nx);
  for (int i = 0; i < Nx; ++i) {
    double acc = 0;
    for (int j = 0; j < Nx; ++j) {
      int d = i - j;
      if (d < 0) d += Nx;
      acc += dWtab[d] * s.rho[j];
    }
    F[i] = -acc * s.f.dx;
  }
  return F;
}

void vfp_step(VFPState& s, const CouplingSpec& w, double dt) {
  update_density(s);
  s.force = self_consistent_force(s, w);
  double fmax = 0;
  for (int j = 0; j < s.f.Nx; ++j) fmax = std::max(fmax, std::abs(s.force[j]));
  if (dt > cfl_limit(s.f, fmax) * (1 + 1e-12))
    throw std::invalid_argument("vfp_step: CFL bound violated");
  // drift B(v) = v - F(x) in the collision step
  RVec drift0 = -s.force;
  advect_x(s.f, 0.5 * dt);
  collision_step_v(s.f, drift0, dt);
  advect_x(s.f, 0.5 * dt);
  update_density(s);
}

namespace {

// discrete Maxwellian on the v-grid, sum M dv = 1
RVec discrete_maxwellian(const GridField& g) {
  RVec M(g.Nv);
  for (int i = 0; i < g.Nv; ++i) M[i] = std::exp(-0.5 * g.v[i] * g.v[i]);
  M /= M.sum() * g.dv;
  return M;
}

}  // namespace

FreeEnergyReport free_energy(const VFPState& s, const CouplingSpec& w) {
  const GridField& g = s.f;
  const double cw = g.cell_weight();
  FreeEnergyReport rep;
  const double mass = g.mass();
  if (!(mass > 0)) throw std::invalid_argument("free_energy: zero mass");

  const RVec M = discrete_maxwellian(g);
  RVec Wtab(g.Nx);
  for (int d = 0; d < g.Nx; ++d) Wtab[d] = w.W(d * g.dx);

  auto energy_of = [&](const std::function<double(int, int)>& fij,
                       const RVec& rho) {
    double ent = 0, kin = 0;
    for (int j = 0; j < g.Nx; ++j)
      for (int i = 0; i < g.Nv; ++i) {
        const double f = fij(j, i);
        if (f > 0) ent += cw * f * std::log(f);
        kin += cw * f * 0.5 * g.v[i] * g.v[i];
      }
    double pot = 0;
    for (int a = 0; a < g.Nx; ++a)
      for (int b = 0; b < g.Nx; ++b) {
        int d = a - b;
        if (d < 0) d += g.Nx;
        pot += rho[a] * rho[b] * Wtab[d];
      }
    pot *= 0.5 * g.dx * g.dx;
    return ent + kin + pot;
  };

  rep.E = energy_of([&](int j, int i) { return g.f(j, i); }, s.rho);
  RVec rho1 = RVec::Constant(g.Nx, 1.0 / g.ell);
  rep.E_inf = energy_of([&](int j, int i) { return M[i] / g.ell; }, rho1);
  const double Epi = energy_of([&](int j, int i) { return s.rho[j] * M[i]; }, s.rho);
  rep.E_minus_Pi = rep.E - Epi;
  rep.Pi_minus_inf = Epi - rep.E_inf;
  rep.E_rel = rep.E - rep.E_inf;
  return rep;
}

double l1_distance_to_equilibrium(const VFPState& s) {
  const GridField& g = s.f;
  const RVec M = discrete_maxwellian(g);
  double d = 0;
  for (int j = 0; j < g.Nx; ++j)
    for (int i = 0; i < g.Nv; ++i) d += std::abs(g.f(j, i) - M[i] / g.ell) * g.cell_weight();
  return d;
}

LyapunovReport nonlinear_lyapunov(const VFPState& s, const CouplingSpec& w, double a1,
                                  double bracket_E) {
  const GridField& g = s.f;
  const RVec M = discrete_maxwellian(g);
  const double cw = g.cell_weight();

  // B f = v d_x f + F d_v f, centered differences
  RMat Bf(g.Nx, g.Nv);
  for (int j = 0; j < g.Nx; ++j) {
    const int jp = (j + 1) % g.Nx, jm = (j + g.Nx - 1) % g.Nx;
    for (int i = 0; i < g.Nv; ++i) {
      const double fx = (g.f(jp, i) - g.f(jm, i)) / (2 * g.dx);
      double fv;
      if (i == 0)
        fv = (g.f(j, 1) - g.f(j, 0)) / g.dv;
      else if (i == g.Nv - 1)
        fv = (g.f(j, i) - g.f(j, i - 1)) / g.dv;
      else
        fv = (g.f(j, i + 1) - g.f(j, i - 1)) / (2 * g.dv);
      Bf(j, i) = g.v[i] * fx + s.force[j] * fv;
    }
  }
  // (Id - Pi)'_f (B f) = B f - (int B f dv) M
  RVec bbar(g.Nx);
  for (int j = 0; j < g.Nx; ++j) bbar[j] = Bf.row(j).sum() * g.dv;

  double corr = 0;
  for (int j = 0; j < g.Nx; ++j)
    for (int i = 0; i < g.Nv; ++i) {
      const double dev = g.f(j, i) - s.rho[j] * M[i];
      const double dB = Bf(j, i) - bbar[j] * M[i];
      corr += cw * dev * dB;
    }

  LyapunovReport rep;
  rep.a1 = a1;
  rep.bracket_E = bracket_E;
  rep.correction = corr;
  const FreeEnergyReport fe = free_energy(s, w);
  rep.L = fe.E_rel + a1 * corr;
  rep.lo_margin = rep.L - bracket_E / 4.0;
  rep.hi_margin = 5.0 * bracket_E / 4.0 - rep.L;
  rep.sandwich_ok = rep.lo_margin >= 0 && rep.hi_margin >= 0;
  return rep;
}

}  // namespace hypolab
