#include <doctest.h>

#include "hypolab/certify.hpp"
#include "hypolab/evolve.hpp"

#include <random>

using namespace hypolab;

TEST_CASE("commutator chain for the quadratic model") {
  auto m = build_kfp(quadratic_potential(1.0), 12, 12);
  auto chain = commutator_chain(m, 1);
  REQUIRE(chain.levels() == 2);
  // R_1 vanishes within the chain tolerance
  CHECK(chain.R[0][0].M.norm() <= chain.tolerance);
  // R_2 = [C_1, B] = -hess V grad_v, so |R_2| matches grad_v on interior modes
  const Mat& R2 = chain.R[1][0].M;
  const Mat& A = m.A[0].M;
  double best = std::min((R2 - A).topLeftCorner(100, 100).norm(),
                         (R2 + A).topLeftCorner(100, 100).norm());
  CHECK(best <= 1e-10);
}

TEST_CASE("chain with B = 0 has vanishing higher commutators") {
  auto m = build_kfp(quadratic_potential(1.0), 8, 8);
  m.B.M.setZero();
  m.grad_x.M.setZero();  // designated principal part of [A, 0]
  auto chain = commutator_chain(m, 2);
  for (int k = 1; k < chain.levels(); ++k) CHECK(chain.C[k][0].M.norm() <= 1e-14);
  CHECK(chain.R[1][0].M.norm() <= 1e-14);
}

TEST_CASE("geometric ladder: frozen spec instance at delta = 0.1, N = 2") {
  auto u = ladder_geometric(0.1, 2);
  REQUIRE(u.size() == 3);
  CHECK(u[0] == doctest::Approx(1.0));
  CHECK(u[1] == doctest::Approx(0.01));
  CHECK(u[2] == doctest::Approx(0.001));
  CHECK(u[1] <= 0.1 * u[0]);
  CHECK(u[2] <= 0.1 * u[1]);
  CHECK(u[1] * u[1] <= 0.1 * u[0] * u[2] * (1 + 1e-12));
}

TEST_CASE("geometric ladder: single step and validator re-check") {
  auto u1 = ladder_geometric(0.3, 1);
  REQUIRE(u1.size() == 2);
  CHECK(u1[1] <= 0.3);

  for (double delta : {0.5, 0.1, 0.03}) {
    for (int N : {1, 2, 4, 7}) {
      auto u = ladder_geometric(delta, N);
      for (int k = 0; k < N; ++k) CHECK(u[k + 1] <= delta * u[k] * (1 + 1e-12));
      for (int k = 1; k < N; ++k)
        CHECK(u[k] * u[k] <= delta * u[k - 1] * u[k + 1] * (1 + 1e-12));
    }
  }
}

TEST_CASE("interleaved chain ladder satisfies the coefficient conditions") {
  for (int Nc : {1, 2, 3}) {
    auto lad = ladder_for_chain(0.05, Nc);
    std::string why;
    CHECK(validate_condakbk(lad, 0.05, &why));
  }
  CoeffLadder bad;
  bad.a = {0.05, 0.05};
  bad.b = {0.2};
  CHECK_FALSE(validate_condakbk(bad, 0.05));
}

TEST_CASE("nonlinear schedule: the J = 3 worked example") {
  auto s = ladder_nonlinear(0.5, 1.0, 1.0, 3, 0.1);
  REQUIRE(s.a.size() == 2);
  CHECK(s.closed_form);
  CHECK(s.feasible);
  CHECK(s.a[0] == doctest::Approx(0.5).epsilon(1e-12));  // a1 = K E^eps exactly
  CHECK(s.a[1] == doctest::Approx(std::pow(0.25, 1.0 / 0.9)).epsilon(1e-12));
  CHECK(s.a[0] >= s.a[1]);
  // interior third line holds with equality
  const double rhs = 0.5 * std::pow(s.a[1], 1.1);
  CHECK(s.a[1] * s.a[1] / s.a[0] == doctest::Approx(rhs).epsilon(1e-10));
  // the boundary index is genuinely violated by the closed form (flagged)
  CHECK(s.boundary_margin < 0);
}

TEST_CASE("nonlinear schedule: smallest J reduces to a single coefficient") {
  auto s = ladder_nonlinear(0.5, 1.0, 1.0, 2, 0.3);
  REQUIRE(s.a.size() == 1);
  CHECK(s.feasible);
  CHECK(s.a[0] <= 0.5 * std::pow(1.0, 0.3) + 1e-15);
  CHECK(s.a[0] == doctest::Approx(0.5));
}

TEST_CASE("nonlinear schedule: E at its ceiling keeps a1 <= 1") {
  // K <= min(1, Ebar^-k) makes a1 = K E^eps <= 1
  auto s = ladder_nonlinear(0.25, 2.0, 1.0, 3, 0.1, 2.0);
  CHECK(s.a[0] <= 0.25 * std::pow(2.0, 0.1) + 1e-12);
  CHECK(s.a[0] <= 1.0);
  CHECK(s.feasible);
}

TEST_CASE("nonlinear schedule validates across a parameter grid") {
  int closed = 0, fallback = 0;
  for (double K : {0.1, 0.5, 1.0, 3.0})
    for (double Ebar : {0.3, 1.0, 4.0})
      for (double k : {0.5, 1.0, 2.0})
        for (int J : {2, 3, 4, 5}) {
          const double alpha1 = std::pow(2.0, J - 2) - 1.0;
          const double eps1 = alpha1 > 0 ? 1.0 / (2 * alpha1) : 1.0;
          for (double eps : {0.25 * eps1, 0.9 * eps1}) {
            auto s = ladder_nonlinear(K, Ebar, k, J, eps);
            CHECK(s.feasible);
            (s.closed_form ? closed : fallback)++;
          }
        }
  CHECK(closed + fallback == 4 * 3 * 3 * 4 * 2);
}

TEST_CASE("4x4 certificate: obstruction-free case is positive definite") {
  auto rep = certificate_matrix_aab({0.0, 0.0, 1.0}, 0.1, 0.05, 0.1);
  CHECK(rep.min_eig_sym > 0);
  CHECK(rep.certified_rate > 0);
}

TEST_CASE("4x4 certificate: untuned coefficients fail") {
  auto rep = certificate_matrix_aab({1.0, 1.0, 1.0}, 1.0, 1.0, 1.0);
  CHECK(rep.min_eig_sym < 0);
  CHECK(rep.certified_rate == 0.0);
}

TEST_CASE("4x4 certificate: the alpha = beta = 1 evaluation point") {
  auto rep = certificate_matrix_aab({1.0, 1.0, 1.0}, 0.05, 0.05, 0.05);
  // dense eigensolve oracle: the symmetric part is indefinite here
  RMat sym = 0.5 * (rep.m + rep.m.transpose());
  Eigen::SelfAdjointEigenSolver<RMat> es(sym);
  CHECK(rep.min_eig_sym == doctest::Approx(es.eigenvalues()(0)));
  CHECK(rep.min_eig_sym < 0);
  CHECK_THROWS_AS(certificate_matrix_aab({1, 1, 1}, 0.1, 0.2, 0.1), std::invalid_argument);
}

TEST_CASE("explicit objective at the reference point") {
  CHECK(explicit_objective_quadratic(1.0, 1.0, 0.05, 0.05, 0.05) ==
        doctest::Approx(0.025).epsilon(1e-12));
  auto res = certified_rate_quadratic(1.0, 1.0);
  CHECK(res.lambda_bar >= 0.025);
  CHECK(res.lambda_bar <= 0.5);
  // removing the Hessian obstruction strictly improves the rate
  auto res0 = certified_rate_quadratic(0.0, 1.0);
  CHECK(res0.lambda_bar > res.lambda_bar);
}

TEST_CASE("optimizer output is monotone in M and kappa") {
  double prev = std::numeric_limits<double>::infinity();
  for (double M : {0.0, 0.5, 1.0, 1.5, 2.0}) {
    const double v = certified_rate_quadratic(M, 1.0).lambda_bar;
    CHECK(v <= prev * (1 + 1e-9));
    prev = v;
  }
  prev = -std::numeric_limits<double>::infinity();
  for (double kap : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const double v = certified_rate_quadratic(1.0, kap).lambda_bar;
    CHECK(v >= prev * (1 - 1e-9));
    prev = v;
  }
}

TEST_CASE("5x5 certificate: signs across regimes") {
  auto good = certificate_matrix_sb(1.0, 0.1, 0.01, 0.001);
  RMat sym = 0.5 * (good.m + good.m.transpose());
  Eigen::SelfAdjointEigenSolver<RMat> es(sym);
  CHECK(good.min_eig_sym == doctest::Approx(es.eigenvalues()(0)));

  auto bad = certificate_matrix_sb(1.0, 1.0, 1.0, 1.0);
  CHECK(bad.min_eig_sym < 0);

  // vanishing ladder: all coefficients to zero degenerates m, min eig -> 0
  auto degen = certificate_matrix_sb(1.0, 1e-9, 1e-9, 1e-9);
  CHECK(degen.min_eig_sym <= 1e-9);
  CHECK(degen.min_eig_sym >= -1e-8);
  CHECK_THROWS_AS(certificate_matrix_sb(1.0, -0.1, 0.01, 0.001), std::invalid_argument);
}

TEST_CASE("tensor gap bound arithmetic") {
  CHECK(tensor_gap_bound(1, 1, 1, 1) == doctest::Approx(1.0 / 16.0));
  CHECK(tensor_gap_bound(1, 1, 1, 1e9) <= 1e-15);
  CHECK_THROWS_AS(tensor_gap_bound(1, 1, 0, 1), std::invalid_argument);
}

TEST_CASE("coercivity check on the quadratic model") {
  auto m = build_kfp(quadratic_potential(1.0), 14, 14);
  auto chain = commutator_chain(m, 1);
  auto lad = ladder_for_chain(0.05, 1);
  auto res = coercivity_check(m, chain, lad);
  CHECK(res.ok);
  CHECK(res.K > 0);

  CoeffLadder bad;
  bad.a = {0.05, 0.05};
  bad.b = {0.2};  // b^2 > delta a a'
  bad.delta = 0.05;
  auto fail = coercivity_check(m, chain, bad);
  CHECK_FALSE(fail.ok);
}

TEST_CASE("coercive case: B = 0 gives back the gap up to ladder scaling") {
  // single-factor model: A = d/dv with gap 1 and trivial transport
  auto bv = build_basis(BasisKind::HermiteGauss, 10, 1.0, 'v');
  auto tb = tensor_basis({bv});
  ModelInstance m;
  m.kind = ModelInstance::Kind::KfpQuadratic;
  m.basis = tb;
  m.A = {make_derivation(tb, Derivation::DDv)};
  m.B = LinOp(tb, Mat::Zero(10, 10), SymFlag::Antisymmetric);
  m.grad_x = LinOp(tb, Mat::Zero(10, 10));
  m.L = LinOp(tb, m.A[0].M.adjoint() * m.A[0].M, SymFlag::Symmetric);
  Vec e0 = Vec::Zero(10);
  e0[0] = 1.0;
  m.kernel = {e0};
  m.equilibrium = {tb, e0};
  auto chain = commutator_chain(m, 1);
  auto lad = ladder_for_chain(0.1, 1);
  auto res = coercivity_check(m, chain, lad);
  CHECK(res.ok);
  // <<h, Lh>> / |Ah|^2 = 1 + a_0 k on the k-th mode: K = 1 + a_0, the gap up
  // to ladder scaling
  CHECK(res.K == doctest::Approx(1.0 + lad.a[0]).epsilon(1e-8));
}

TEST_CASE("quadratic-form bound transfers to the model (matrix invariant)") {
  auto m = build_kfp(quadratic_potential(1.0), 16, 16);
  const double defect = m.L.truncation_defect;
  BoundConstants bc{1.0 * (1 + defect), 1.0 * (1 + defect), 1.0};
  const double delta = 1.0 / (32.0 * bc.M() * bc.M());
  auto u = ladder_geometric(delta, 3);
  auto rep = certificate_matrix_aab(bc, u[1], u[2], u[3]);
  REQUIRE(rep.min_eig_sym > 0);

  // twisted-form operator of <<h, Lh>>
  const Mat& A = m.A[0].M;
  const Mat& C = m.grad_x.M;
  Mat G = Mat::Identity(256, 256) + u[1] * A.adjoint() * A +
          u[2] * (A.adjoint() * C + C.adjoint() * A) + u[3] * C.adjoint() * C;
  Mat H = hermitian_part(G * m.L.M);

  std::mt19937 rng(23);
  std::normal_distribution<double> nd;
  for (int s = 0; s < 100; ++s) {
    // interior-supported test vectors keep the operator identities exact
    Vec h = Vec::Zero(256);
    for (int i0 = 0; i0 < 11; ++i0)
      for (int i1 = 0; i1 < 11; ++i1) h[i0 * 16 + i1] = cplx(nd(rng), nd(rng));
    const double lhs = h.dot(H * h).real();
    const double x1 = (A * h).norm(), x2 = (A * A * h).norm();
    const double x3 = (C * h).norm(), x4 = (C * A * h).norm();
    const double rhs = rep.min_eig_sym * (x1 * x1 + x2 * x2 + x3 * x3 + x4 * x4);
    CHECK(lhs >= rhs - 1e-10);
  }
}

TEST_CASE("certified rate is consistent with the measured twisted decay") {
  auto m = build_kfp(quadratic_potential(1.0), 12, 12);
  auto mc = certify_model(m);
  CHECK(mc.consts.kappa == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(mc.rate.lambda_bar > 0);
  CHECK(mc.rate.lambda_bar <= 0.5);
}
