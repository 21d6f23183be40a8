#include "qspde/kernels.hpp"

#include <cassert>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qspde::kern {

namespace {

// Shared inner kernels. Both execution paths call the same functions over
// sub-ranges, so the per-element arithmetic (and codegen) is identical for
// any thread count.

// y[rb..re) = sum_k A(i, k) * x[k], strided row dots over one block.
void gemv_rows(const double* a, int lda, const double* x, double* y, int n,
               int rb, int re) {
  for (int i = rb; i < re; ++i) {
    double s = 0.0;
    const double* row = a + i;
    for (int k = 0; k < n; ++k) s += row[static_cast<long>(k) * lda] * x[k];
    y[i] = s;
  }
}

// C.col(j) = sum_k B(k, j) * A.col(k) for j in [jb..je), one block.
void gemm_cols(const double* a, int lda, const double* b, int ldb, double* c,
               int ldc, int n, int jb, int je) {
  for (int j = jb; j < je; ++j) {
    double* cj = c + static_cast<long>(j) * ldc;
    for (int i = 0; i < n; ++i) cj[i] = 0.0;
    const double* bj = b + static_cast<long>(j) * ldb;
    for (int k = 0; k < n; ++k) {
      const double bkj = bj[k];
      const double* ak = a + static_cast<long>(k) * lda;
      for (int i = 0; i < n; ++i) cj[i] += bkj * ak[i];
    }
  }
}

bool use_parallel(Exec exec, long work) {
#ifdef _OPENMP
  if (exec == Exec::Serial) return false;
  if (omp_in_parallel()) return false;  // ensemble loop owns the threads
  if (exec == Exec::Parallel) return true;
  return work >= 64L * 64L * 64L;
#else
  (void)exec;
  (void)work;
  return false;
#endif
}

}  // namespace

void matvec(const Eigen::MatrixXd& A, const Eigen::VectorXd& x, int comps,
            Eigen::VectorXd& y, Exec exec) {
  const int dim = static_cast<int>(A.rows());
  assert(A.cols() == dim && x.size() == dim && comps >= 1 && dim % comps == 0);
  const int n = dim / comps;
  y.resize(dim);

  Eigen::VectorXd partial(n);
  Eigen::VectorXd acc(n);
  const bool par = use_parallel(exec, static_cast<long>(dim) * dim);
  for (int bi = 0; bi < comps; ++bi) {
    double* accp = acc.data();
    for (int bj = 0; bj < comps; ++bj) {
      const double* ablk = A.data() + static_cast<long>(bj) * n * dim + bi * n;
      const double* xblk = x.data() + static_cast<long>(bj) * n;
      double* out = (bj == 0) ? accp : partial.data();
      if (par) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (int i = 0; i < n; ++i) gemv_rows(ablk, dim, xblk, out, n, i, i + 1);
      } else {
        gemv_rows(ablk, dim, xblk, out, n, 0, n);
      }
      if (bj > 0)
        for (int i = 0; i < n; ++i) accp[i] += out[i];
    }
    y.segment(static_cast<long>(bi) * n, n) = acc;
  }
}

void matmul(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, int comps,
            Eigen::MatrixXd& C, Exec exec) {
  const int dim = static_cast<int>(A.rows());
  assert(A.cols() == dim && B.rows() == dim && B.cols() == dim);
  assert(comps >= 1 && dim % comps == 0);
  const int n = dim / comps;
  C.resize(dim, dim);

  Eigen::MatrixXd partial(n, n);
  Eigen::MatrixXd acc(n, n);
  const bool par = use_parallel(exec, static_cast<long>(dim) * dim * dim);
  for (int bi = 0; bi < comps; ++bi) {
    for (int bj = 0; bj < comps; ++bj) {
      for (int bk = 0; bk < comps; ++bk) {
        const double* ablk = A.data() + static_cast<long>(bk) * n * dim + bi * n;
        const double* bblk = B.data() + static_cast<long>(bj) * n * dim + bk * n;
        Eigen::MatrixXd& out = (bk == 0) ? acc : partial;
        if (par) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
          for (int j = 0; j < n; ++j)
            gemm_cols(ablk, dim, bblk, dim, out.data(), n, n, j, j + 1);
        } else {
          gemm_cols(ablk, dim, bblk, dim, out.data(), n, n, 0, n);
        }
        if (bk > 0) acc += out;
      }
      for (int j = 0; j < n; ++j)
        C.col(static_cast<long>(bj) * n + j).segment(static_cast<long>(bi) * n, n) = acc.col(j);
    }
  }
}

void hadamard(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
              Eigen::VectorXd& out, Exec exec) {
  const int n = static_cast<int>(a.size());
  assert(b.size() == n);
  out.resize(n);
  const double* ap = a.data();
  const double* bp = b.data();
  double* op = out.data();
  if (use_parallel(exec, static_cast<long>(n) * 64)) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int i = 0; i < n; ++i) op[i] = ap[i] * bp[i];
  } else {
    for (int i = 0; i < n; ++i) op[i] = ap[i] * bp[i];
  }
}

double sum_squares(const Eigen::VectorXd& v, Exec exec) {
  const int n = static_cast<int>(v.size());
  const double* p = v.data();
  constexpr int kChunk = 256;
  const int chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partials(static_cast<size_t>(chunks), 0.0);
  const bool par = use_parallel(exec, static_cast<long>(n) * 16);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (par)
#endif
  for (int c = 0; c < chunks; ++c) {
    const int lo = c * kChunk;
    const int hi = (lo + kChunk < n) ? lo + kChunk : n;
    double s = 0.0;
    for (int i = lo; i < hi; ++i) s += p[i] * p[i];
    partials[static_cast<size_t>(c)] = s;
  }
  double total = 0.0;
  for (int c = 0; c < chunks; ++c) total += partials[static_cast<size_t>(c)];
  return total;
}

Eigen::VectorXd matvec(const Eigen::MatrixXd& A, const Eigen::VectorXd& x,
                       int comps, Exec exec) {
  Eigen::VectorXd y;
  matvec(A, x, comps, y, exec);
  return y;
}

Eigen::MatrixXd matmul(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                       int comps, Exec exec) {
  Eigen::MatrixXd C;
  matmul(A, B, comps, C, exec);
  return C;
}

}  // namespace qspde::kern
