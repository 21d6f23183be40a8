#include <doctest.h>

#include <cmath>
#include <map>

#include "qspde/evolution.hpp"
#include "qspde/kernels.hpp"

using namespace qspde;

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;

const SpectralBasis& dir_basis(int n) {
  static std::map<int, SpectralBasis> pool;
  auto it = pool.find(n);
  if (it == pool.end())
    it = pool.emplace(n, build_basis(Domain::interval(kPi),
                                     BoundaryCondition::Dirichlet, n))
             .first;
  return it->second;
}

Eigen::MatrixXd shifted_laplacian(int n) {
  return (dir_basis(n).lambda.array() + 1.0).matrix().asDiagonal();
}

}  // namespace

TEST_CASE("constant generator collapses to the semigroup") {
  const int n = 6;
  const Eigen::MatrixXd base = shifted_laplacian(n);
  const OperatorPath path = [&](double) { return OperatorSnapshot(dir_basis(n), 1, base); };
  const TimeGrid grid(0.0, 0.01, 50);
  const EvolutionFamily fam = build_family(path, grid, AuditMode::Waive);

  const OperatorSnapshot A(dir_basis(n), 1, base);
  const Eigen::MatrixXd exact = operator_exp(A, 0.5).mat;
  const Eigen::MatrixXd prod = family_matrix(fam, 50, 0);
  CHECK((prod - exact).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("identity and cocycle hold exactly") {
  const int n = 4;
  const OperatorPath path = [&](double t) {
    return OperatorSnapshot(dir_basis(n), 1, ((1.0 + t) * shifted_laplacian(n)).eval());
  };
  const TimeGrid grid(0.0, 0.005, 80);
  const EvolutionFamily fam = build_family(path, grid, AuditMode::Waive);

  Eigen::VectorXd x(n);
  x << 1.0, -0.3, 0.2, 0.05;
  CHECK(apply(fam, 17, 17, x) == x);

  const Eigen::VectorXd via = apply(fam, 70, 30, apply(fam, 30, 5, x));
  const Eigen::VectorXd direct = apply(fam, 70, 5, x);
  CHECK((via - direct).cwiseAbs().maxCoeff() < 1e-12);

  CHECK_THROWS_AS(apply(fam, 5, 10, x), InvalidArgument);
}

TEST_CASE("commuting family matches the closed form to first order") {
  // A(t) = (1+t)(I - Laplacian); U(t,s) = exp(-(I-Lap)((t-s) + (t^2-s^2)/2)).
  const int n = 4;
  const Eigen::MatrixXd base = shifted_laplacian(n);
  const OperatorPath path = [&](double t) {
    return OperatorSnapshot(dir_basis(n), 1, ((1.0 + t) * base).eval());
  };
  auto run_error = [&](int steps) {
    const TimeGrid grid(0.0, 0.5 / steps, steps);
    const EvolutionFamily fam = build_family(path, grid, AuditMode::Waive);
    const double t = 0.5, s = 0.0;
    const double eta = (t - s) + (t * t - s * s) / 2.0;
    const Eigen::MatrixXd exact =
        operator_exp(OperatorSnapshot(dir_basis(n), 1, base), eta).mat;
    return op_norm2(family_matrix(fam, steps, 0) - exact);
  };
  const double e1 = run_error(64);
  const double e2 = run_error(128);
  CHECK(e1 / e2 > 1.7);
  CHECK(e1 / e2 < 2.3);
}

TEST_CASE("heat family decays the first mode") {
  // Frozen A = -Laplacian on [0, pi]: apply(t, 0, e1) = e^{-t} e1.
  const int n = 5;
  const Eigen::MatrixXd lap = dir_basis(n).lambda.asDiagonal();
  const OperatorPath path = [&](double) { return OperatorSnapshot(dir_basis(n), 1, lap); };
  const TimeGrid grid(0.0, 1e-3, 250);
  const EvolutionFamily fam = build_family(path, grid, AuditMode::Waive);
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(n);
  e1(0) = 1.0;
  const Eigen::VectorXd u = apply(fam, 250, 0, e1);
  CHECK(u(0) == doctest::Approx(std::exp(-0.25)).epsilon(1e-6));
  CHECK(u.tail(n - 1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("differential property at the left time argument") {
  // (U(t+h,s) - U(t,s))/h + A(t) U(t,s) -> 0 at rate O(h).
  const int n = 4;
  const Eigen::MatrixXd base = shifted_laplacian(n);
  const OperatorPath path = [&](double t) {
    return OperatorSnapshot(dir_basis(n), 1, ((1.0 + 0.5 * t) * base).eval());
  };
  auto defect = [&](int steps) {
    const TimeGrid grid(0.0, 0.2 / steps, steps);
    const EvolutionFamily fam = build_family(path, grid, AuditMode::Waive);
    const int j = steps / 2;
    const Eigen::MatrixXd Ut = family_matrix(fam, j, 0);
    const Eigen::MatrixXd Uth = family_matrix(fam, j + 1, 0);
    const Eigen::MatrixXd D =
        (Uth - Ut) / grid.h + fam.snapshots[static_cast<size_t>(j)].mat * Ut;
    return op_norm2(D);
  };
  const double d1 = defect(50);
  const double d2 = defect(100);
  CHECK(d1 / d2 > 1.6);  // first order
}

TEST_CASE("uniform bound estimate is finite and modest for dissipative paths") {
  const int n = 4;
  const OperatorPath path = [&](double t) {
    return OperatorSnapshot(dir_basis(n), 1, ((1.0 + t) * shifted_laplacian(n)).eval());
  };
  const EvolutionFamily fam = build_family(path, TimeGrid(0.0, 0.01, 40), AuditMode::Waive);
  const double c = uniform_bound_estimate(fam);
  CHECK(c <= 1.0 + 1e-12);  // dissipative: every propagator contracts
  CHECK(c > 0.0);
}

TEST_CASE("smoothing audit slopes on a commuting family") {
  const int n = 64;
  const Eigen::MatrixXd base = shifted_laplacian(n);
  const OperatorPath path = [&](double t) {
    return OperatorSnapshot(dir_basis(n), 1, ((1.0 + 0.5 * t) * base).eval());
  };
  const TimeGrid grid(0.0, 2e-4, 500);
  const EvolutionFamily fam = build_family(path, grid, AuditMode::Waive);
  const SmoothingReport rep = smoothing_audit(fam, {0.5, 1.0, 0.75, 0.5}, {0.0, 0.0, 0.5, 0.5});
  REQUIRE(rep.fits.size() == 4);
  CHECK(std::abs(rep.fits[0].slope + 0.5) < 0.1);
  CHECK(std::abs(rep.fits[1].slope + 1.0) < 0.1);
  CHECK(std::abs(rep.fits[2].slope + 0.25) < 0.1);
  CHECK(std::abs(rep.fits[3].slope) < 0.1);  // alpha = beta: bounded
  CHECK(rep.all_pass());
  for (const auto& f : rep.fits) CHECK(f.gaps >= 8);
}

TEST_CASE("difference identity") {
  const int n = 4;
  const Eigen::MatrixXd base = shifted_laplacian(n);
  const TimeGrid grid(0.0, 1e-3, 100);
  const OperatorPath p1 = [&](double) { return OperatorSnapshot(dir_basis(n), 1, base); };
  const OperatorPath p2 = [&](double) {
    return OperatorSnapshot(dir_basis(n), 1, (2.0 * base).eval());
  };
  const EvolutionFamily f1 = build_family(p1, grid, AuditMode::Waive);
  const EvolutionFamily f2 = build_family(p2, grid, AuditMode::Waive);

  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(n);
  e1(0) = 1.0;

  // Same path: both sides vanish.
  const FamilyDifference same = family_difference(f1, f1, 100, 0, e1);
  CHECK(same.direct.cwiseAbs().maxCoeff() == 0.0);
  CHECK(same.integral.cwiseAbs().maxCoeff() == 0.0);

  // A2 = 2 A1, gap 0.1: direct and integral evaluations agree within 2%.
  const FamilyDifference diff = family_difference(f1, f2, 100, 0, e1);
  CHECK(diff.direct.cwiseAbs().maxCoeff() > 0.0);
  CHECK(diff.rel_err < 0.02);

  // First-order perturbation scaling: doubling (A2 - A1) doubles the
  // difference at leading order.
  const OperatorPath p3 = [&](double) {
    return OperatorSnapshot(dir_basis(n), 1, (1.01 * base).eval());
  };
  const OperatorPath p4 = [&](double) {
    return OperatorSnapshot(dir_basis(n), 1, (1.02 * base).eval());
  };
  const EvolutionFamily f3 = build_family(p3, grid, AuditMode::Waive);
  const EvolutionFamily f4 = build_family(p4, grid, AuditMode::Waive);
  const FamilyDifference d3 = family_difference(f1, f3, 100, 0, e1);
  const FamilyDifference d4 = family_difference(f1, f4, 100, 0, e1);
  const double ratio = d4.direct.norm() / d3.direct.norm();
  CHECK(ratio > 1.9);
  CHECK(ratio < 2.1);
}

TEST_CASE("semigroup comparison estimate on the commuting family") {
  // ||A^theta(t)(U(t,s) - e^{-(t-s)A(t)}) A^{-rho}(s)|| decays at least like
  // (t-s)^{rho - theta + delta + nu - 1}; here the path is Lipschitz (delta =
  // nu = 1), so the fitted exponent should be >= rho - theta + 1 - 0.15.
  const int n = 16;
  const Eigen::MatrixXd base = shifted_laplacian(n);
  const OperatorPath path = [&](double t) {
    return OperatorSnapshot(dir_basis(n), 1, ((1.0 + 0.5 * t) * base).eval());
  };
  const TimeGrid grid(0.0, 2e-4, 400);
  const EvolutionFamily fam = build_family(path, grid, AuditMode::Waive);

  const double theta = 0.5, rho = 0.5;
  std::vector<double> lx, ly;
  for (int gs : {12, 24, 48, 96, 192, 384}) {
    const int tj = 400, si = tj - gs;
    const Eigen::MatrixXd U = family_matrix(fam, tj, si);
    const OperatorSnapshot& At = fam.snapshots[static_cast<size_t>(tj)];
    const Eigen::MatrixXd E = operator_exp(At, gs * grid.h).mat;
    const Eigen::MatrixXd M =
        fractional_power(At, theta).mat * (U - E) *
        fractional_power(fam.snapshots[static_cast<size_t>(si)], -rho).mat;
    lx.push_back(std::log(gs * grid.h));
    ly.push_back(std::log(op_norm2(M) + 1e-300));
  }
  const LineFit fit = fit_line(lx, ly);
  CHECK(fit.slope >= rho - theta + 1.0 - 0.15);
}

TEST_CASE("checkpoint cache agrees with the exact product") {
  const int n = 4;
  const OperatorPath path = [&](double t) {
    return OperatorSnapshot(dir_basis(n), 1, ((1.0 + t) * shifted_laplacian(n)).eval());
  };
  EvolutionFamily fam = build_family(path, TimeGrid(0.0, 1e-3, 144), AuditMode::Waive);
  fam.build_checkpoints(12);
  Eigen::VectorXd x(n);
  x << 0.4, -1.0, 0.2, 0.9;
  for (auto [j, i] : std::initializer_list<std::pair<int, int>>{
           {144, 0}, {100, 3}, {36, 12}, {25, 24}}) {
    const Eigen::VectorXd a = apply(fam, j, i, x);
    const Eigen::VectorXd b = apply_cached(fam, j, i, x);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("build_family audit gate") {
  const int n = 3;
  Eigen::MatrixXd bad = (-shifted_laplacian(n)).eval();
  const OperatorPath path = [&](double) { return OperatorSnapshot(dir_basis(n), 1, bad); };
  CHECK_THROWS_AS(build_family(path, TimeGrid(0.0, 0.01, 4), AuditMode::Require),
                  CalculusError);
  // Waived: builds; these exponentials grow but stay below the overflow bound.
  CHECK_NOTHROW(build_family(path, TimeGrid(0.0, 0.01, 4), AuditMode::Waive));
}
