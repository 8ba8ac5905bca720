#include <doctest.h>

#include "hypolab/certify.hpp"
#include "hypolab/entropic.hpp"
#include "hypolab/evolve.hpp"

#include <random>

using namespace hypolab;

namespace {

GridField equilibrium_field(int Nx, int Nv, const PotentialSpec& pot, double ell) {
  auto g = make_grid_field(Nx, Nv, ell, 6.0, [&](double x, double v) {
    return std::exp(-(pot.V(x) + 0.5 * v * v));
  });
  g.f /= g.mass();
  return g;
}

}  // namespace

TEST_CASE("equilibrium is stationary to 1e-9 per step") {
  // the defect per step is first order in dt at fixed resolution; at this
  // grid the consistency constant gives 1e-9 for dt = 1e-7
  auto pot = cosine_potential(0.5, 2 * M_PI);
  auto g = equilibrium_field(128, 257, pot, 2 * M_PI);
  RMat before = g.f;
  grid_step_fp(g, pot, 1e-7);
  const double defect1 = (g.f - before).cwiseAbs().maxCoeff() / before.maxCoeff();
  CHECK(defect1 <= 1e-9);
  // first-order consistency: halving dt halves the defect
  auto g2 = equilibrium_field(128, 257, pot, 2 * M_PI);
  grid_step_fp(g2, pot, 5e-8);
  const double defect2 = (g2.f - before).cwiseAbs().maxCoeff() / before.maxCoeff();
  CHECK(defect2 <= 0.6 * defect1);
}

TEST_CASE("mass is conserved to 1e-12 relative per step") {
  auto pot = cosine_potential(0.5, 2 * M_PI);
  auto g = make_grid_field(64, 65, 2 * M_PI, 6.0, [&](double x, double v) {
    return std::exp(-(pot.V(x) + 0.5 * v * v)) * (1 + 0.4 * std::cos(x));
  });
  g.f /= g.mass();
  const double dt = 0.9 * cfl_limit(g, 0.5);
  for (int s = 0; s < 50; ++s) {
    const double m0 = g.mass();
    grid_step_fp(g, pot, dt);
    CHECK(std::abs(g.mass() - m0) <= 1e-12 * m0);
  }
  CHECK_THROWS_AS(grid_step_fp(g, pot, 1.0), std::invalid_argument);
}

TEST_CASE("x-independent data relaxes its second moment like the OU flow") {
  auto pot = zero_potential(2 * M_PI);
  // start at variance 0.25; d<v^2>/dt = 2 - 2<v^2>
  auto g = make_grid_field(16, 256, 2 * M_PI, 6.0, [](double, double v) {
    return std::exp(-v * v / (2 * 0.25));
  });
  g.f /= g.mass();
  const double dt = 0.8 * cfl_limit(g, 0.0);
  double t = 0;
  while (t < 0.5) {
    grid_step_fp(g, pot, dt);
    t += dt;
  }
  double m2 = 0;
  for (int j = 0; j < g.Nx; ++j)
    for (int i = 0; i < g.Nv; ++i) m2 += g.f(j, i) * g.v[i] * g.v[i] * g.cell_weight();
  const double expect = 1.0 + (0.25 - 1.0) * std::exp(-2.0 * t);
  CHECK(m2 == doctest::Approx(expect).epsilon(0.01));
}

TEST_CASE("point-like bump stays nonnegative through 1000 steps") {
  auto pot = cosine_potential(0.5, 2 * M_PI);
  auto g = make_grid_field(32, 33, 2 * M_PI, 6.0, [](double x, double v) {
    return std::exp(-20.0 * ((x - 3.0) * (x - 3.0) + (v - 1.0) * (v - 1.0)));
  });
  g.f /= g.mass();
  const double dt = 0.9 * cfl_limit(g, 0.5);
  for (int s = 0; s < 1000; ++s) grid_step_fp(g, pot, dt);
  CHECK(g.f.minCoeff() >= 0.0);
}

TEST_CASE("entropy and Fisher vanish at equilibrium") {
  auto pot = cosine_potential(0.5, 2 * M_PI);
  auto g = equilibrium_field(64, 65, pot, 2 * M_PI);
  auto rep = entropy_and_fisher(g, pot);
  CHECK(std::abs(rep.H) <= 1e-10);
  CHECK(rep.I <= 1e-8);
}

TEST_CASE("temperature-shifted Gaussian reproduces the closed-form entropy") {
  auto pot = cosine_potential(0.5, 2 * M_PI);
  const double T = 1.5;
  auto g = make_grid_field(64, 257, 2 * M_PI, 6.0, [&](double x, double v) {
    return std::exp(-pot.V(x)) * std::exp(-v * v / (2 * T)) / std::sqrt(2 * M_PI * T);
  });
  g.f /= g.mass();
  auto rep = entropy_and_fisher(g, pot);
  const double expect = 0.5 * (T - std::log(T) - 1.0);
  CHECK(rep.H == doctest::Approx(expect).epsilon(1e-4));
}

TEST_CASE("Csiszar-Kullback-Pinsker consistency on random fields") {
  auto pot = cosine_potential(0.5, 2 * M_PI);
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = ud(rng), b = 2 * M_PI * ud(rng), c = ud(rng);
    auto g = make_grid_field(48, 49, 2 * M_PI, 6.0, [&](double x, double v) {
      return std::exp(-(pot.V(x) + 0.5 * v * v)) *
             (1 + 0.8 * a * std::cos(x + b)) * (1 + 0.3 * c * std::sin(v));
    });
    g.f /= g.mass();
    auto rep = entropy_and_fisher(g, pot);
    // discrete reference probability
    RMat mu(g.Nx, g.Nv);
    for (int j = 0; j < g.Nx; ++j)
      for (int i = 0; i < g.Nv; ++i)
        mu(j, i) = std::exp(-(pot.V(g.x[j]) + 0.5 * g.v[i] * g.v[i]));
    mu /= mu.sum() * g.cell_weight();
    const double l1 = (g.f - mu).cwiseAbs().sum() * g.cell_weight();
    CHECK(rep.H >= 0.5 * l1 * l1 - 1e-12);
  }
}

TEST_CASE("distorted energy: equilibrium, decoupled form, invalid ladder") {
  auto pot = cosine_potential(0.5, 2 * M_PI);
  CoeffLadder lad;
  lad.a = {0.2, 0.0016};
  lad.b = {0.008};
  lad.delta = 0.2;

  auto geq = equilibrium_field(64, 65, pot, 2 * M_PI);
  auto rep0 = distorted_energy(geq, pot, lad);
  CHECK(std::abs(rep0.E_total) <= 1e-8);

  auto g = make_grid_field(64, 65, 2 * M_PI, 6.0, [&](double x, double v) {
    return std::exp(-(pot.V(x) + 0.5 * v * v)) * (1 + 0.4 * std::cos(x));
  });
  g.f /= g.mass();
  // b0 = 0 decouples into H + a0 Iv + a1 Ix; compare with entropy_and_fisher
  // (delta = 0 skips the full coefficient conditions, PSD is enough here)
  CoeffLadder dec;
  dec.a = {0.2, 0.0016};
  dec.b = {0.0};
  dec.delta = 0.0;
  auto repd = distorted_energy(g, pot, dec);
  auto repf = entropy_and_fisher(g, pot);
  CHECK(repd.E_total ==
        doctest::Approx(repf.H + 0.2 * repf.Iv + 0.0016 * repf.Ix).epsilon(1e-9));

  CoeffLadder bad;
  bad.a = {0.2, 0.2};
  bad.b = {0.2};
  bad.delta = 0.2;
  CHECK_THROWS_AS(distorted_energy(g, pot, bad), std::invalid_argument);
}

TEST_CASE("H-theorem along the flow and positive distorted-energy rate") {
  auto pot = cosine_potential(0.5, 2 * M_PI);
  // start away from the local-Maxwellian manifold so the true dissipation
  // dominates the splitting wiggle from the first step on
  auto g = make_grid_field(64, 65, 2 * M_PI, 6.0, [&](double x, double v) {
    return std::exp(-(pot.V(x) + 0.5 * v * v)) * (1 + 0.3 * std::cos(x)) *
           (1 + 0.2 * v * std::exp(-v * v / 4));
  });
  g.f /= g.mass();
  const double dt = 0.9 * cfl_limit(g, 0.5);
  double lastH = std::numeric_limits<double>::infinity();
  auto lad = CoeffLadder{};
  lad.a = {0.2, 0.0016};
  lad.b = {0.008};
  lad.delta = 0.2;
  double t = 0;
  std::vector<double> ts, Es;
  while (t < 2.0) {
    auto rep = distorted_energy(g, pot, lad);
    CHECK(rep.H <= lastH + 1e-10);
    lastH = rep.H;
    ts.push_back(t);
    Es.push_back(rep.E_total);
    for (int s = 0; s < 25; ++s) {
      grid_step_fp(g, pot, dt);
      t += dt;
    }
  }
  // crude rate positivity on the collected window
  CHECK(Es.back() < 0.5 * Es.front());
}

TEST_CASE("entropic regularization from rough data (finite H only)") {
  // indicator-type initial data: finite entropy, divergent Fisher at grid
  // scale; along the flow t I_v and t^3 I_x stay bounded, so power-law fits
  // on (0, 0.5] are no steeper than -1.2 and -3.3
  auto pot = cosine_potential(0.5, 2 * M_PI);
  auto g = make_grid_field(64, 129, 2 * M_PI, 6.0, [](double x, double v) {
    return (std::abs(x - 3.0) < 0.6 && std::abs(v) < 0.6) ? 1.0 : 0.0;
  });
  g.f /= g.mass();
  const double dt = 0.45 * cfl_limit(g, 0.5);
  std::vector<double> ts, iv, ix;
  double t = 0;
  double next = 0.01;
  while (t < 0.5) {
    grid_step_fp(g, pot, dt);
    t += dt;
    if (t >= next) {
      auto rep = entropy_and_fisher(g, pot);
      ts.push_back(t);
      iv.push_back(rep.Iv);
      ix.push_back(rep.Ix);
      next *= 1.25;
    }
  }
  auto fv = fit_series(ts, iv, DecayFit::Kind::PowerLaw, 0.01, 0.5);
  auto fx = fit_series(ts, ix, DecayFit::Kind::PowerLaw, 0.01, 0.5);
  CHECK(fv.value >= -1.2);
  CHECK(fx.value >= -3.3);
  CHECK(fv.value < 0.0);  // regularization is actually happening
}
