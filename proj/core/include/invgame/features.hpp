#pragma once

#include <vector>

#include "invgame/types.hpp"

namespace invgame {

enum class FeatureKind {
  kQuadraticMonomial,  // x1^2, x1 x2, ..., x_{n-1} x_n, x_n^2
  kQuadraticDiagonal,  // x1^2, ..., x_n^2
  kLegendre,           // tensor-product Legendre, truncated by total degree
};

// Differentiable feature basis with analytic Jacobians. Instances are
// immutable; evaluation is pure and safe to call concurrently.
//
// Monomial kinds use the fixed lexicographic pair ordering (x1^2, x1 x2, ...)
// so weight vectors are comparable across runs and against vec-of-symmetric-
// matrix ground truth. Legendre features are evaluated on inputs rescaled to
// [-1, 1] per coordinate via the domain box; inputs more than 10% outside the
// box are rejected.
class FeatureMap {
 public:
  static FeatureMap quadratic_monomial(int input_dim);
  static FeatureMap quadratic_diagonal(int input_dim);
  static FeatureMap legendre(int input_dim, int order, const Box& domain,
                             bool include_constant = false);

  // Feature vector of length output_dim().
  Vector eval(const Vector& x) const;

  // Row j is the gradient of feature j: output_dim() x input_dim().
  Matrix jacobian(const Vector& x) const;

  FeatureKind kind() const { return kind_; }
  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  int order() const { return order_; }
  bool include_constant() const { return include_constant_; }
  const Box& domain() const { return domain_; }

 private:
  FeatureMap() = default;
  void check_domain(const Vector& x) const;

  FeatureKind kind_ = FeatureKind::kQuadraticMonomial;
  int input_dim_ = 0;
  int output_dim_ = 0;
  int order_ = 0;
  bool include_constant_ = false;
  Box domain_;
  // Legendre only: per-feature exponent of each coordinate, graded ordering.
  std::vector<std::vector<int>> multi_indices_;
};

// Legendre P_0..P_order and derivatives at a scalar point, by the three-term
// recurrence. Exposed for tests.
void legendre_recurrence(int order, double t, std::vector<double>* values,
                         std::vector<double>* derivatives);

}  // namespace invgame
