#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "qspde/errors.hpp"
#include "qspde/kernels.hpp"

namespace qspde {

enum class BoundaryCondition { Dirichlet, Neumann };

struct Domain {
  enum class Kind { Interval, Rectangle };
  Kind kind = Kind::Interval;
  double length = 0.0;    // interval [0, length]
  double length2 = 0.0;   // rectangle [0, length] x [0, length2]

  static Domain interval(double L);
  static Domain rectangle(double L1, double L2);
};

// Eigenbasis of the reference Laplacian on the domain. Closed-form sine or
// cosine modes, L2-normalized, eigenvalues ascending. The Dirichlet basis
// excludes the constant mode, the Neumann basis includes it.
//
// Quadrature uses Q >= 4N midpoints per direction; products of up to three
// basis functions are integrated exactly there (discrete trig orthogonality),
// which is what de-aliases the pseudo-spectral nonlinear terms.
struct SpectralBasis {
  Domain domain;
  BoundaryCondition bc = BoundaryCondition::Dirichlet;
  int modes = 0;

  Eigen::VectorXd lambda;          // ascending, size modes
  std::vector<std::pair<int, int>> mode_index;  // (k1, k2); k2 == 0 for interval

  Eigen::VectorXd nodes;           // quadrature nodes (flattened for rectangle)
  double weight = 0.0;             // uniform quadrature weight
  Eigen::MatrixXd eval;            // nodes x modes, e_k(x_q)
  Eigen::MatrixXd deriv;           // nodes x modes, e_k'(x_q) (interval only)

  // Flux-space modes on an interval: derivatives of the basis live in the
  // companion trig family (cosines for Dirichlet, sines for Neumann).
  Eigen::MatrixXd flux_eval;       // nodes x flux modes
  Eigen::VectorXd flux_freq;       // frequencies m*pi/L of the flux modes

  bool is_interval() const { return domain.kind == Domain::Kind::Interval; }
  int quad_points() const { return static_cast<int>(nodes.size()); }
};

SpectralBasis build_basis(const Domain& domain, BoundaryCondition bc, int N);

// Coefficient vector(s) over a basis; one block of `modes` coefficients per
// PDE component.
struct Field {
  const SpectralBasis* basis = nullptr;
  int comps = 1;
  Eigen::VectorXd coef;

  Field() = default;
  Field(const SpectralBasis& b, int components);

  int modes() const { return basis->modes; }
  Eigen::VectorBlock<Eigen::VectorXd> component(int c);
  Eigen::VectorBlock<const Eigen::VectorXd> component(int c) const;
};

// (sum_c sum_k (1 + lambda_k)^{2 mu} |u_hat|^2)^{1/2}; mu = 0 is the L2 norm.
// Throws on non-finite coefficients.
double sobolev_norm(const Field& f, double mu);
double sobolev_norm(const Eigen::VectorXd& coef, const SpectralBasis& basis,
                    int comps, double mu);

// Ground-state functional <u, phi> with phi = e_1 scaled so that its integral
// over the domain is exactly 1 (the scaling uses the closed-form integral of
// e_1, not quadrature). Dirichlet bases only.
double inner_product_with_phi(const Field& f, int component = 0);

// phi itself as a field (single component).
Field phi_field(const SpectralBasis& basis);

// <e_1, phi> = 1 / integral(e_1); the coefficient that converts the first
// mode coefficient into <u, phi>.
double phi_mode_coefficient(const SpectralBasis& basis);

// Values of one component at the quadrature nodes, and the L2 projection of
// nodal values back onto the basis.
Eigen::VectorXd to_values(const Field& f, int component);
Eigen::VectorXd project_values(const Eigen::VectorXd& values,
                               const SpectralBasis& basis);

}  // namespace qspde
