#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace invgame {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Numerical failure inside a solver, estimator, or rollout: non-convergence,
// loss of stability, ill conditioning, trajectory divergence.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or unresolvable experiment configuration. Messages name the
// offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-coordinate interval box. Games declare their compact operating domain
// as one of these; Legendre feature maps use it for rescaling to [-1, 1].
struct Box {
  Vector lower;
  Vector upper;

  int dim() const { return static_cast<int>(lower.size()); }
  Vector center() const { return 0.5 * (lower + upper); }
  Vector width() const { return upper - lower; }

  // Membership test with the half-width scaled by `inflation` (1.0 = exact).
  bool contains(const Vector& x, double inflation = 1.0) const;

  // Symmetric box [-half_width, half_width]^dim.
  static Box cube(int dim, double half_width);
};

}  // namespace invgame
