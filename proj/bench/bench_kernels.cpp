#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "qspde/kernels.hpp"
#include "qspde/operators.hpp"
#include "qspde/spectral.hpp"

using qspde::kern::Exec;

namespace {

Eigen::MatrixXd test_matrix(int n, unsigned seed) {
  std::srand(seed);
  return Eigen::MatrixXd::Random(n, n);
}

void bm_matmul(benchmark::State& state, Exec exec) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd A = test_matrix(n, 1);
  const Eigen::MatrixXd B = test_matrix(n, 2);
  Eigen::MatrixXd C(n, n);
  for (auto _ : state) {
    qspde::kern::matmul(A, B, 2, C, exec);
    benchmark::DoNotOptimize(C.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(n) * n * n);
}

void bm_matvec(benchmark::State& state, Exec exec) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd A = test_matrix(n, 3);
  const Eigen::VectorXd x = Eigen::VectorXd::Random(n);
  Eigen::VectorXd y(n);
  for (auto _ : state) {
    qspde::kern::matvec(A, x, 2, y, exec);
    benchmark::DoNotOptimize(y.data());
    benchmark::ClobberMemory();
  }
}

void bm_operator_exp(benchmark::State& state, Exec) {
  const int n = static_cast<int>(state.range(0));
  const auto basis = qspde::build_basis(qspde::Domain::interval(3.141592653589793),
                                        qspde::BoundaryCondition::Dirichlet, n / 2);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  m.diagonal() = Eigen::VectorXd::LinSpaced(n, 1.0, 40.0);
  m.diagonal(1).setConstant(0.25);
  const qspde::OperatorSnapshot A(basis, 2, m);
  for (auto _ : state) {
    auto E = qspde::operator_exp(A, 1e-3);
    benchmark::DoNotOptimize(E.mat.data());
  }
}

}  // namespace

BENCHMARK_CAPTURE(bm_matmul, serial, Exec::Serial)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK_CAPTURE(bm_matmul, parallel, Exec::Parallel)->Arg(64)->Arg(128)->Arg(256);
BENCHMARK_CAPTURE(bm_matvec, serial, Exec::Serial)->Arg(256)->Arg(1024);
BENCHMARK_CAPTURE(bm_matvec, parallel, Exec::Parallel)->Arg(256)->Arg(1024);
BENCHMARK_CAPTURE(bm_operator_exp, default, Exec::Auto)->Arg(32)->Arg(64);

BENCHMARK_MAIN();
