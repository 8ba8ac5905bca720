#include <doctest.h>

#include "hypolab/certify.hpp"
#include "hypolab/models.hpp"
#include "hypolab/spectral.hpp"

#include <random>

using namespace hypolab;

namespace {

Vec random_vec(int n, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = cplx(nd(rng), nd(rng));
  return v;
}

}  // namespace

TEST_CASE("build_basis rejects degenerate sizes and nonpositive domains") {
  CHECK_THROWS_AS(build_basis(BasisKind::HermiteGauss, 1, 1.0, 'v'), std::invalid_argument);
  CHECK_THROWS_AS(build_basis(BasisKind::FourierTorus, 8, -1.0, 'x'), std::invalid_argument);
}

TEST_CASE("hermite basis is orthonormal under its quadrature") {
  auto b = build_basis(BasisKind::HermiteGauss, 16, 1.0, 'v');
  Mat g = gram_matrix(b);
  CHECK((g - Mat::Identity(16, 16)).norm() <= 1e-10 * g.norm());
}

TEST_CASE("fourier basis is orthonormal under trapezoid quadrature") {
  auto b = build_basis(BasisKind::FourierTorus, 8, 2 * M_PI, 'x');
  Mat g = gram_matrix(b);
  CHECK((g - Mat::Identity(8, 8)).norm() <= 1e-12 * std::max(1.0, g.norm()));
}

TEST_CASE("orthonormality holds across sizes and scales") {
  for (int n : {2, 5, 12, 33, 64}) {
    auto bh = build_basis(BasisKind::HermiteGauss, n, 0.7, 'v');
    CHECK((gram_matrix(bh) - Mat::Identity(n, n)).norm() <= 1e-10 * std::sqrt(double(n)));
    auto bf = build_basis(BasisKind::FourierTorus, n, 1.3, 'x');
    CHECK((gram_matrix(bf) - Mat::Identity(n, n)).norm() <= 1e-10 * std::sqrt(double(n)));
  }
}

TEST_CASE("hermite number operator has the harmonic oscillator spectrum") {
  auto tb = tensor_basis({build_basis(BasisKind::HermiteGauss, 4, 1.0, 'v')});
  auto dv = make_derivation(tb, Derivation::DDv);
  Mat num = dv.M.adjoint() * dv.M;
  Mat expect = Mat::Zero(4, 4);
  expect(1, 1) = 1;
  expect(2, 2) = 2;
  expect(3, 3) = 3;
  CHECK((num - expect).norm() <= 1e-12);
}

TEST_CASE("fourier derivative is the diagonal symbol i k") {
  auto tb = tensor_basis({build_basis(BasisKind::FourierTorus, 5, 2 * M_PI, 'x')});
  auto dx = make_derivation(tb, Derivation::DDx);
  for (int j = 0; j < 5; ++j) {
    const double k = j - 2;
    CHECK(std::abs(dx.M(j, j) - cplx(0.0, k)) <= 1e-14);
  }
  CHECK(dx.flag == SymFlag::Antisymmetric);
}

TEST_CASE("mult_fn with constant samples is the identity") {
  auto bf = build_basis(BasisKind::FourierTorus, 7, 2 * M_PI, 'x');
  auto tbf = tensor_basis({bf});
  RVec ones = RVec::Ones(bf.quad.nodes.size());
  auto idf = make_mult_fn(tbf, 0, ones);
  CHECK((idf.M - Mat::Identity(7, 7)).norm() <= 1e-12);

  auto bh = build_basis(BasisKind::HermiteGauss, 9, 1.0, 'v');
  auto tbh = tensor_basis({bh});
  RVec ones2 = RVec::Ones(bh.quad.nodes.size());
  auto idh = make_mult_fn(tbh, 0, ones2);
  CHECK((idh.M - Mat::Identity(9, 9)).norm() <= 1e-12);
}

TEST_CASE("mult on a fourier factor is rejected") {
  auto tb = tensor_basis({build_basis(BasisKind::FourierTorus, 5, 1.0, 'x')});
  CHECK_THROWS_AS(make_derivation(tb, Derivation::MultX), std::invalid_argument);
}

TEST_CASE("commutator of an operator with itself vanishes") {
  auto tb = tensor_basis({build_basis(BasisKind::HermiteGauss, 6, 1.0, 'v')});
  auto dv = make_derivation(tb, Derivation::DDv);
  CHECK(commutator(dv, dv).M.norm() <= 1e-14);
}

TEST_CASE("[d_v, v] is the identity on interior modes") {
  auto tb = tensor_basis({build_basis(BasisKind::HermiteGauss, 12, 1.0, 'v')});
  auto dv = make_derivation(tb, Derivation::DDv);
  auto mv = make_derivation(tb, Derivation::MultV);
  Mat c = commutator(dv, mv).M;
  CHECK((c.topLeftCorner(10, 10) - Mat::Identity(10, 10)).norm() <= 1e-12);
}

TEST_CASE("[grad_v, B] recovers grad_x away from the truncation edge") {
  auto model = build_kfp(quadratic_potential(1.0), 12, 12);
  Mat c = commutator(model.A[0], model.B).M;
  Mat diff = c - model.grad_x.M;
  // restrict to columns/rows supported on modes <= N-2 in each factor
  for (int i0 = 0; i0 < 10; ++i0)
    for (int i1 = 0; i1 < 10; ++i1)
      for (int j0 = 0; j0 < 10; ++j0)
        for (int j1 = 0; j1 < 10; ++j1)
          CHECK(std::abs(diff(i0 * 12 + i1, j0 * 12 + j1)) <= 1e-10);
}

TEST_CASE("weighted adjoint: fourier derivation is antisymmetric") {
  auto tb = tensor_basis({build_basis(BasisKind::FourierTorus, 5, 2 * M_PI, 'x')});
  auto dx = make_derivation(tb, Derivation::DDx);
  CHECK((adjoint_weighted(dx).M + dx.M).norm() <= 1e-14);
}

TEST_CASE("weighted adjoint: hermite lowering maps to raising (Gram check)") {
  auto b = build_basis(BasisKind::HermiteGauss, 8, 1.0, 'v');
  auto tb = tensor_basis({b});
  auto dv = make_derivation(tb, Derivation::DDv);
  auto up = adjoint_weighted(dv);
  // raising via quadrature: <psi_j, (v - d/dv) psi_k> = <(d/dv)* psi_k, psi_j>
  auto mv = make_derivation(tb, Derivation::MultV);
  Mat raise_expect = mv.M - dv.M;
  CHECK((up.M - raise_expect).norm() <= 1e-10);
  // involution and flag transport
  auto dxop = make_derivation(tensor_basis({build_basis(BasisKind::FourierTorus, 6, 1.0, 'x')}),
                              Derivation::DDx);
  CHECK((adjoint_weighted(adjoint_weighted(dxop)).M - dxop.M).norm() <= 1e-14);
  CHECK(adjoint_weighted(dxop).flag == SymFlag::Antisymmetric);
}

TEST_CASE("norms on a kernel element: h1 = l2, twisted = l2^2") {
  auto model = build_kfp(quadratic_potential(1.0), 8, 8);
  auto chain = commutator_chain(model, 1);
  CoeffLadder lad = ladder_for_chain(0.1, 1);
  StateVector h{model.basis, model.kernel[0] * 2.0};
  auto r = norms(h, chain, &lad);
  CHECK(r.l2 == doctest::Approx(2.0));
  CHECK(r.h1 == doctest::Approx(2.0));
  CHECK(r.twisted == doctest::Approx(4.0));
}

TEST_CASE("twisted norm stays inside the equivalence band") {
  auto model = build_kfp(quadratic_potential(1.0), 10, 10);
  auto chain = commutator_chain(model, 1);
  CoeffLadder lad;
  lad.a = {0.05, 0.05};
  lad.b = {0.05};
  lad.delta = 1.0;
  Vec h = random_vec(model.basis->dim(), 7);
  h.normalize();
  auto r = norms({model.basis, h}, chain, &lad);
  CHECK(r.twisted >= 0.0);
  CHECK(r.twisted / (r.h1 * r.h1) <= 1.05 * std::max({1.0, 0.05, 0.05}) * 2.0);
  // b^2 = ac boundary: lower equivalence constant collapses to zero
  CHECK(r.equiv_lo == doctest::Approx(0.0));
  CHECK(r.twisted >= -1e-12);
}

TEST_CASE("spectral gap of the 2d number operator is one") {
  auto model = build_kfp(quadratic_potential(1.0), 20, 20);
  Mat W = model.A[0].M.adjoint() * model.A[0].M + model.grad_x.M.adjoint() * model.grad_x.M;
  LinOp P(model.basis, 0.5 * (W + W.adjoint()), SymFlag::Symmetric);
  CHECK(spectral_gap(P, model.kernel) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("spectral gap of -Laplace on the torus is one") {
  auto tb = tensor_basis({build_basis(BasisKind::FourierTorus, 9, 2 * M_PI, 'x')});
  auto dx = make_derivation(tb, Derivation::DDx);
  Mat W = dx.M.adjoint() * dx.M;
  LinOp P(tb, W, SymFlag::Symmetric);
  Vec e0 = Vec::Zero(9);
  e0[4] = 1.0;  // constant mode k = 0
  CHECK(spectral_gap(P, {e0}) == doctest::Approx(1.0));
}

TEST_CASE("spectral gap of an explicit diagonal") {
  Mat P = Mat::Zero(3, 3);
  P(2, 2) = 3.0;
  LinOp op(nullptr, P, SymFlag::Symmetric);
  Vec e1 = Vec::Zero(3), e2 = Vec::Zero(3);
  e1[0] = 1;
  e2[1] = 1;
  CHECK(spectral_gap(op, {e1, e2}) == doctest::Approx(3.0));
  CHECK_THROWS_AS(spectral_gap(LinOp(nullptr, P, SymFlag::None), {e1}), std::invalid_argument);
}

TEST_CASE("relative bound constants: identity, scaling, model instance") {
  auto model = build_kfp(quadratic_potential(1.0), 12, 12);
  const LinOp& A = model.A[0];
  auto rb = relative_bound_constant(A, {A});
  CHECK(!rb.infinite);
  CHECK(rb.alpha == doctest::Approx(1.0).epsilon(1e-8));
  auto rb2 = relative_bound_constant(scaled(A, 2.0), {A});
  CHECK(rb2.alpha == doctest::Approx(2.0).epsilon(1e-8));
  // S = [B, C] = hess V . grad_v, whose exact matrix is grad_v itself for
  // the unit quadratic potential (the raw truncated commutator carries
  // boundary artifacts of size sqrt(N), which is why the certification path
  // works from the closed-form operator)
  auto rb3 = relative_bound_constant(model.A[0], {A});
  CHECK(rb3.alpha == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("relative bound reports failure when S does not vanish on ker T") {
  Mat T = Mat::Zero(2, 2);
  T(1, 1) = 1.0;
  Mat S = Mat::Identity(2, 2);
  auto rb = relative_bound_constant(LinOp(nullptr, S), {LinOp(nullptr, T)});
  CHECK(rb.infinite);
}

TEST_CASE("kernel identity: Ker L = Ker A meet Ker B on the assembled model") {
  auto model = build_kfp(quadratic_potential(1.0), 12, 12);
  Eigen::JacobiSVD<Mat> svd(model.L.M, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  int found = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) <= 1e-8) {
      Vec k = svd.matrixV().col(i);
      CHECK((model.A[0].M * k).norm() <= 1e-6);
      CHECK((model.B.M * k).norm() <= 1e-6);
      ++found;
    }
  }
  CHECK(found == 1);
}

TEST_CASE("Dirichlet identity Re<Lh,h> = |Ah|^2") {
  auto model = build_kfp(quadratic_potential(1.0), 10, 10);
  for (unsigned s = 0; s < 100; ++s) {
    Vec h = random_vec(model.basis->dim(), 1000 + s);
    const double lhs = (model.L.M * h).dot(h).real();
    const double rhs = (model.A[0].M * h).squaredNorm();
    CHECK(std::abs(lhs - rhs) <= 1e-8 * h.squaredNorm());
  }
}

TEST_CASE("truncation defect of B is nonincreasing in N and below C/sqrt(N)") {
  double prev = std::numeric_limits<double>::infinity();
  for (int n : {8, 16, 32, 48}) {
    auto model = build_kfp(quadratic_potential(1.0), n, n);
    CHECK(model.B.truncation_defect <= prev * (1 + 1e-12));
    CHECK(model.B.truncation_defect <= 4.0 / std::sqrt(static_cast<double>(n)));
    prev = model.B.truncation_defect;
    CHECK(check_flag(model.B));
  }
}
