#include <doctest.h>

#include <cmath>

#include "qspde/spectral.hpp"

using namespace qspde;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

TEST_CASE("eigenvalues of the interval bases") {
  const auto bd = build_basis(Domain::interval(kPi), BoundaryCondition::Dirichlet, 3);
  CHECK(bd.lambda(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(bd.lambda(1) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(bd.lambda(2) == doctest::Approx(9.0).epsilon(1e-14));

  const auto bn = build_basis(Domain::interval(kPi), BoundaryCondition::Neumann, 3);
  CHECK(bn.lambda(0) == 0.0);
  CHECK(bn.lambda(1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(bn.lambda(2) == doctest::Approx(4.0).epsilon(1e-14));

  const auto b2 = build_basis(Domain::interval(2.0), BoundaryCondition::Dirichlet, 1);
  CHECK(b2.lambda(0) == doctest::Approx((kPi / 2.0) * (kPi / 2.0)).epsilon(1e-12));

  CHECK_THROWS_AS(build_basis(Domain::interval(kPi), BoundaryCondition::Dirichlet, 0),
                  InvalidArgument);
  CHECK_THROWS_AS(Domain::interval(-1.0), InvalidArgument);
}

TEST_CASE("basis functions are orthonormal under the midpoint quadrature") {
  for (auto bc : {BoundaryCondition::Dirichlet, BoundaryCondition::Neumann}) {
    const auto b = build_basis(Domain::interval(2.5), bc, 8);
    const Eigen::MatrixXd gram = b.weight * (b.eval.transpose() * b.eval);
    CHECK((gram - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("sobolev norms") {
  const auto b = build_basis(Domain::interval(kPi), BoundaryCondition::Dirichlet, 4);
  Field f(b, 1);
  f.coef(0) = 1.0;  // e_1
  CHECK(sobolev_norm(f, 0.5) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(sobolev_norm(f, 0.0) == doctest::Approx(1.0).epsilon(1e-14));

  Field g(b, 1);
  g.coef(0) = 1.0;
  g.coef(1) = 1.0;  // e_1 + e_2: weights 2 and 5 at mu = 1/2
  CHECK(sobolev_norm(g, 0.5) == doctest::Approx(std::sqrt(7.0)).epsilon(1e-14));

  Field nan_field(b, 1);
  nan_field.coef(0) = std::nan("");
  CHECK_THROWS_AS(sobolev_norm(nan_field, 0.0), InvalidArgument);
}

TEST_CASE("embedding monotonicity of the Sobolev scale") {
  const auto b = build_basis(Domain::interval(1.7), BoundaryCondition::Neumann, 12);
  std::srand(42);
  for (int trial = 0; trial < 25; ++trial) {
    Field f(b, 2);
    f.coef = Eigen::VectorXd::Random(24);
    const double mu1 = 0.75 * std::abs(Eigen::VectorXd::Random(1)(0));
    const double mu2 = mu1 + 0.5 * std::abs(Eigen::VectorXd::Random(1)(0));
    CHECK(sobolev_norm(f, mu1) <= sobolev_norm(f, mu2) * (1.0 + 1e-14));
  }
}

TEST_CASE("Parseval: quadrature values against coefficient norm") {
  const auto b = build_basis(Domain::interval(kPi), BoundaryCondition::Dirichlet, 6);
  Field f(b, 1);
  f.coef << 0.3, -1.2, 0.0, 0.7, 0.05, -0.4;
  const Eigen::VectorXd vals = to_values(f, 0);
  const double l2_grid = std::sqrt(b.weight * vals.squaredNorm());
  CHECK(l2_grid == doctest::Approx(sobolev_norm(f, 0.0)).epsilon(1e-12));
  // Round trip back to coefficients.
  const Eigen::VectorXd back = project_values(vals, b);
  CHECK((back - f.coef).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ground-state functional phi") {
  const auto b = build_basis(Domain::interval(kPi), BoundaryCondition::Dirichlet, 5);
  const Field phi = phi_field(b);

  // integral of phi over the domain is 1 (high-order quadrature check):
  // composite Simpson on a fine grid, since the solver quadrature is only
  // exact for basis products.
  const int n = 4096;
  const double h = kPi / n;
  double integral = 0.0;
  const double c = phi.coef(0) * std::sqrt(2.0 / kPi);
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    integral += w * c * std::sin(i * h);
  }
  integral *= h / 3.0;
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-10));

  // <phi, phi> = pi / 8 on [0, pi]
  CHECK(inner_product_with_phi(phi, 0) == doctest::Approx(kPi / 8.0).epsilon(1e-13));

  // u = 0 -> 0 and u = e_2 -> 0 by orthogonality
  Field zero(b, 1);
  CHECK(inner_product_with_phi(zero, 0) == 0.0);
  Field e2(b, 1);
  e2.coef(1) = 1.0;
  CHECK(inner_product_with_phi(e2, 0) == 0.0);

  // Delta phi = -lambda_1 phi exactly in coefficients: only mode 0 is set.
  CHECK(phi.coef.tail(4).cwiseAbs().maxCoeff() == 0.0);

  const auto bn = build_basis(Domain::interval(kPi), BoundaryCondition::Neumann, 5);
  Field fn(bn, 1);
  CHECK_THROWS_AS(inner_product_with_phi(fn, 0), InvalidArgument);
}

TEST_CASE("rectangle basis eigenvalues ascend and norms work") {
  const auto b =
      build_basis(Domain::rectangle(kPi, kPi), BoundaryCondition::Dirichlet, 6);
  for (int i = 1; i < 6; ++i) CHECK(b.lambda(i) >= b.lambda(i - 1));
  CHECK(b.lambda(0) == doctest::Approx(2.0).epsilon(1e-13));  // sin x sin y
  const Eigen::MatrixXd gram = b.weight * (b.eval.transpose() * b.eval);
  CHECK((gram - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-12);
}
