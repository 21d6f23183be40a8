#include "qspde/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace qspde {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

Domain Domain::interval(double L) {
  if (!(L > 0.0)) throw InvalidArgument("Domain: interval length must be positive");
  Domain d;
  d.kind = Kind::Interval;
  d.length = L;
  return d;
}

Domain Domain::rectangle(double L1, double L2) {
  if (!(L1 > 0.0) || !(L2 > 0.0))
    throw InvalidArgument("Domain: rectangle lengths must be positive");
  Domain d;
  d.kind = Kind::Rectangle;
  d.length = L1;
  d.length2 = L2;
  return d;
}

namespace {

void build_interval(SpectralBasis& b, int N) {
  const double L = b.domain.length;
  const bool dirichlet = (b.bc == BoundaryCondition::Dirichlet);

  b.lambda.resize(N);
  b.mode_index.resize(static_cast<size_t>(N));
  for (int i = 0; i < N; ++i) {
    const int k = dirichlet ? i + 1 : i;
    b.lambda(i) = (k * kPi / L) * (k * kPi / L);
    b.mode_index[static_cast<size_t>(i)] = {k, 0};
  }

  const int Q = 4 * N;
  b.nodes.resize(Q);
  b.weight = L / Q;
  for (int q = 0; q < Q; ++q) b.nodes(q) = (q + 0.5) * L / Q;

  const double amp = std::sqrt(2.0 / L);
  b.eval.resize(Q, N);
  b.deriv.resize(Q, N);
  for (int i = 0; i < N; ++i) {
    const int k = dirichlet ? i + 1 : i;
    const double w = k * kPi / L;
    for (int q = 0; q < Q; ++q) {
      const double x = b.nodes(q);
      if (dirichlet) {
        b.eval(q, i) = amp * std::sin(w * x);
        b.deriv(q, i) = amp * w * std::cos(w * x);
      } else if (k == 0) {
        b.eval(q, i) = std::sqrt(1.0 / L);
        b.deriv(q, i) = 0.0;
      } else {
        b.eval(q, i) = amp * std::cos(w * x);
        b.deriv(q, i) = -amp * w * std::sin(w * x);
      }
    }
  }

  // Flux space: cos modes 1..N for Dirichlet, sin modes 1..N-1 for Neumann.
  const int nf = dirichlet ? N : N - 1;
  b.flux_eval.resize(Q, std::max(nf, 0));
  b.flux_freq.resize(std::max(nf, 0));
  for (int m = 1; m <= nf; ++m) {
    const double w = m * kPi / L;
    b.flux_freq(m - 1) = w;
    for (int q = 0; q < Q; ++q) {
      const double x = b.nodes(q);
      b.flux_eval(q, m - 1) = dirichlet ? amp * std::cos(w * x) : amp * std::sin(w * x);
    }
  }
}

void build_rectangle(SpectralBasis& b, int N) {
  const double L1 = b.domain.length;
  const double L2 = b.domain.length2;
  const bool dirichlet = (b.bc == BoundaryCondition::Dirichlet);
  const int k0 = dirichlet ? 1 : 0;

  // Enumerate tensor modes by ascending eigenvalue, ties broken by index.
  const int m = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(N)))) + 2;
  struct Mode {
    double lam;
    int k1, k2;
  };
  std::vector<Mode> cand;
  for (int k1 = k0; k1 < k0 + m; ++k1)
    for (int k2 = k0; k2 < k0 + m; ++k2)
      cand.push_back({(k1 * kPi / L1) * (k1 * kPi / L1) + (k2 * kPi / L2) * (k2 * kPi / L2), k1, k2});
  std::sort(cand.begin(), cand.end(), [](const Mode& a, const Mode& c) {
    if (a.lam != c.lam) return a.lam < c.lam;
    if (a.k1 != c.k1) return a.k1 < c.k1;
    return a.k2 < c.k2;
  });

  b.lambda.resize(N);
  b.mode_index.resize(static_cast<size_t>(N));
  for (int i = 0; i < N; ++i) {
    b.lambda(i) = cand[static_cast<size_t>(i)].lam;
    b.mode_index[static_cast<size_t>(i)] = {cand[static_cast<size_t>(i)].k1,
                                            cand[static_cast<size_t>(i)].k2};
  }

  const int kmax = k0 + m - 1;
  const int Q1 = 4 * (kmax + 1);
  const int Q2 = 4 * (kmax + 1);
  b.nodes.resize(Q1 * Q2);
  b.weight = (L1 / Q1) * (L2 / Q2);

  auto mode_1d = [&](int k, double x, double L) {
    if (k == 0) return std::sqrt(1.0 / L);
    const double amp = std::sqrt(2.0 / L);
    return dirichlet ? amp * std::sin(k * kPi / L * x) : amp * std::cos(k * kPi / L * x);
  };

  b.eval.resize(Q1 * Q2, N);
  for (int q1 = 0; q1 < Q1; ++q1) {
    const double x = (q1 + 0.5) * L1 / Q1;
    for (int q2 = 0; q2 < Q2; ++q2) {
      const double y = (q2 + 0.5) * L2 / Q2;
      const int q = q1 * Q2 + q2;
      b.nodes(q) = x;  // flattened; y implicit in ordering
      for (int i = 0; i < N; ++i) {
        const auto [k1, k2] = b.mode_index[static_cast<size_t>(i)];
        b.eval(q, i) = mode_1d(k1, x, L1) * mode_1d(k2, y, L2);
      }
    }
  }
  b.deriv.resize(0, 0);
  b.flux_eval.resize(0, 0);
  b.flux_freq.resize(0);
}

}  // namespace

SpectralBasis build_basis(const Domain& domain, BoundaryCondition bc, int N) {
  if (N < 1) throw InvalidArgument("build_basis: mode count must be >= 1");
  SpectralBasis b;
  b.domain = domain;
  b.bc = bc;
  b.modes = N;
  if (domain.kind == Domain::Kind::Interval)
    build_interval(b, N);
  else
    build_rectangle(b, N);
  return b;
}

Field::Field(const SpectralBasis& b, int components) : basis(&b), comps(components) {
  if (components < 1) throw InvalidArgument("Field: component count must be >= 1");
  coef = Eigen::VectorXd::Zero(static_cast<long>(components) * b.modes);
}

Eigen::VectorBlock<Eigen::VectorXd> Field::component(int c) {
  return coef.segment(static_cast<long>(c) * basis->modes, basis->modes);
}

Eigen::VectorBlock<const Eigen::VectorXd> Field::component(int c) const {
  return coef.segment(static_cast<long>(c) * basis->modes, basis->modes);
}

double sobolev_norm(const Eigen::VectorXd& coef, const SpectralBasis& basis,
                    int comps, double mu) {
  const int N = basis.modes;
  if (coef.size() != static_cast<long>(comps) * N)
    throw InvalidArgument("sobolev_norm: coefficient size mismatch");
  if (!coef.allFinite()) throw InvalidArgument("sobolev_norm: non-finite coefficients");
  // Per-component partial sums combined with a commutative add, so that
  // swapping two components leaves the value bitwise unchanged.
  double total = 0.0;
  for (int c = 0; c < comps; ++c) {
    double s = 0.0;
    for (int k = 0; k < N; ++k) {
      const double w = std::pow(1.0 + basis.lambda(k), 2.0 * mu);
      const double v = coef(static_cast<long>(c) * N + k);
      s += w * v * v;
    }
    total += s;
  }
  return std::sqrt(total);
}

double sobolev_norm(const Field& f, double mu) {
  return sobolev_norm(f.coef, *f.basis, f.comps, mu);
}

double phi_mode_coefficient(const SpectralBasis& basis) {
  if (basis.bc != BoundaryCondition::Dirichlet)
    throw InvalidArgument("phi is the Dirichlet ground state; Neumann basis rejected");
  // integral of the 1-D ground mode: int_0^L sqrt(2/L) sin(pi x / L) dx = (2/pi) sqrt(2 L)
  auto int_e1 = [](double L) { return (2.0 / kPi) * std::sqrt(2.0 * L); };
  double integral = int_e1(basis.domain.length);
  if (basis.domain.kind == Domain::Kind::Rectangle)
    integral *= int_e1(basis.domain.length2);
  return 1.0 / integral;
}

Field phi_field(const SpectralBasis& basis) {
  Field phi(basis, 1);
  // Ground state is mode 0 (ascending eigenvalues, Dirichlet).
  phi.coef(0) = phi_mode_coefficient(basis);
  return phi;
}

double inner_product_with_phi(const Field& f, int component) {
  if (f.basis->bc != BoundaryCondition::Dirichlet)
    throw InvalidArgument("phi is the Dirichlet ground state; Neumann basis rejected");
  if (component < 0 || component >= f.comps)
    throw InvalidArgument("inner_product_with_phi: bad component index");
  return f.component(component)(0) * phi_mode_coefficient(*f.basis);
}

Eigen::VectorXd to_values(const Field& f, int component) {
  return f.basis->eval * f.component(component);
}

Eigen::VectorXd project_values(const Eigen::VectorXd& values,
                               const SpectralBasis& basis) {
  if (values.size() != basis.nodes.size())
    throw InvalidArgument("project_values: nodal size mismatch");
  return basis.weight * (basis.eval.transpose() * values);
}

}  // namespace qspde
