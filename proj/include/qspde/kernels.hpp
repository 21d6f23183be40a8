#pragma once

#include <Eigen/Dense>

namespace qspde::kern {

// Execution policy for the dense kernels. Auto picks the parallel path for
// matrices large enough to amortize the fork, the serial path otherwise.
enum class Exec { Auto, Serial, Parallel };

// Dense kernels on column-major Eigen storage. Matrices carry a components x
// components block structure of n x n blocks (comps == 1 means plain dense).
//
// Contract: for a fixed input, Serial and Parallel produce bitwise identical
// results (each output element is accumulated by exactly one thread in a
// fixed k-ascending order), and swapping the two component blocks of every
// input yields the block-swapped output bitwise (per-block partials are
// combined with a single commutative add).

// y = A * x
void matvec(const Eigen::MatrixXd& A, const Eigen::VectorXd& x, int comps,
            Eigen::VectorXd& y, Exec exec = Exec::Auto);

// C = A * B
void matmul(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int comps,
            Eigen::MatrixXd& C, Exec exec = Exec::Auto);

// Pointwise map over quadrature values: out[q] = a[q] * b[q].
void hadamard(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
              Eigen::VectorXd& out, Exec exec = Exec::Auto);

// Sum of squares with a fixed left-to-right accumulation (deterministic for
// any thread count; the parallel path reduces fixed-size chunk partials in
// chunk order).
double sum_squares(const Eigen::VectorXd& v, Exec exec = Exec::Auto);

// Convenience allocating wrappers.
Eigen::VectorXd matvec(const Eigen::MatrixXd& A, const Eigen::VectorXd& x,
                       int comps = 1, Exec exec = Exec::Auto);
Eigen::MatrixXd matmul(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                       int comps = 1, Exec exec = Exec::Auto);

}  // namespace qspde::kern
