#include "invgame/features.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace invgame {

namespace {

// Multi-indices with total degree in [min_degree, max_degree], graded
// lexicographic: by total degree first, then lexicographically.
std::vector<std::vector<int>> graded_multi_indices(int dim, int min_degree,
                                                   int max_degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> alpha(dim, 0);
  for (int degree = min_degree; degree <= max_degree; ++degree) {
    // Enumerate compositions of `degree` into `dim` parts.
    std::fill(alpha.begin(), alpha.end(), 0);
    alpha[0] = degree;
    while (true) {
      out.push_back(alpha);
      // Next composition in reverse-lexicographic order of the tail.
      int k = dim - 2;
      while (k >= 0 && alpha[k] == 0) --k;
      if (k < 0) break;
      --alpha[k];
      int tail = degree;
      for (int j = 0; j <= k; ++j) tail -= alpha[j];
      alpha[k + 1] = tail;
      for (int j = k + 2; j < dim; ++j) alpha[j] = 0;
    }
  }
  return out;
}

}  // namespace

void legendre_recurrence(int order, double t, std::vector<double>* values,
                         std::vector<double>* derivatives) {
  values->assign(order + 1, 0.0);
  derivatives->assign(order + 1, 0.0);
  (*values)[0] = 1.0;
  if (order == 0) return;
  (*values)[1] = t;
  (*derivatives)[1] = 1.0;
  for (int n = 2; n <= order; ++n) {
    (*values)[n] =
        ((2 * n - 1) * t * (*values)[n - 1] - (n - 1) * (*values)[n - 2]) / n;
    (*derivatives)[n] = ((2 * n - 1) * ((*values)[n - 1] + t * (*derivatives)[n - 1]) -
                         (n - 1) * (*derivatives)[n - 2]) /
                        n;
  }
}

FeatureMap FeatureMap::quadratic_monomial(int input_dim) {
  FeatureMap m;
  m.kind_ = FeatureKind::kQuadraticMonomial;
  m.input_dim_ = input_dim;
  m.output_dim_ = input_dim * (input_dim + 1) / 2;
  m.order_ = 2;
  return m;
}

FeatureMap FeatureMap::quadratic_diagonal(int input_dim) {
  FeatureMap m;
  m.kind_ = FeatureKind::kQuadraticDiagonal;
  m.input_dim_ = input_dim;
  m.output_dim_ = input_dim;
  m.order_ = 2;
  return m;
}

FeatureMap FeatureMap::legendre(int input_dim, int order, const Box& domain,
                                bool include_constant) {
  if (domain.dim() != input_dim) {
    throw std::invalid_argument("FeatureMap::legendre: domain dimension "
                                "does not match input_dim");
  }
  FeatureMap m;
  m.kind_ = FeatureKind::kLegendre;
  m.input_dim_ = input_dim;
  m.order_ = order;
  m.include_constant_ = include_constant;
  m.domain_ = domain;
  m.multi_indices_ =
      graded_multi_indices(input_dim, include_constant ? 0 : 1, order);
  m.output_dim_ = static_cast<int>(m.multi_indices_.size());
  return m;
}

void FeatureMap::check_domain(const Vector& x) const {
  // Rollouts may slightly exit the training box; tolerate 10% inflation.
  if (!domain_.contains(x, 1.1)) {
    std::ostringstream msg;
    msg << "FeatureMap: point [" << x.transpose()
        << "] outside inflated domain box";
    throw std::domain_error(msg.str());
  }
}

Vector FeatureMap::eval(const Vector& x) const {
  if (x.size() != input_dim_) {
    throw std::invalid_argument("FeatureMap::eval: input dimension mismatch");
  }
  Vector phi(output_dim_);
  switch (kind_) {
    case FeatureKind::kQuadraticMonomial: {
      int k = 0;
      for (int i = 0; i < input_dim_; ++i)
        for (int j = i; j < input_dim_; ++j) phi[k++] = x[i] * x[j];
      break;
    }
    case FeatureKind::kQuadraticDiagonal: {
      for (int i = 0; i < input_dim_; ++i) phi[i] = x[i] * x[i];
      break;
    }
    case FeatureKind::kLegendre: {
      check_domain(x);
      const Vector c = domain_.center();
      const Vector w = domain_.width();
      std::vector<std::vector<double>> vals(input_dim_);
      std::vector<double> scratch;
      for (int cdim = 0; cdim < input_dim_; ++cdim) {
        const double t = 2.0 * (x[cdim] - c[cdim]) / w[cdim];
        legendre_recurrence(order_, t, &vals[cdim], &scratch);
      }
      for (int k = 0; k < output_dim_; ++k) {
        double v = 1.0;
        for (int cdim = 0; cdim < input_dim_; ++cdim)
          v *= vals[cdim][multi_indices_[k][cdim]];
        phi[k] = v;
      }
      break;
    }
  }
  return phi;
}

Matrix FeatureMap::jacobian(const Vector& x) const {
  if (x.size() != input_dim_) {
    throw std::invalid_argument(
        "FeatureMap::jacobian: input dimension mismatch");
  }
  Matrix jac = Matrix::Zero(output_dim_, input_dim_);
  switch (kind_) {
    case FeatureKind::kQuadraticMonomial: {
      int k = 0;
      for (int i = 0; i < input_dim_; ++i) {
        for (int j = i; j < input_dim_; ++j) {
          jac(k, i) += x[j];
          jac(k, j) += x[i];
          ++k;
        }
      }
      break;
    }
    case FeatureKind::kQuadraticDiagonal: {
      for (int i = 0; i < input_dim_; ++i) jac(i, i) = 2.0 * x[i];
      break;
    }
    case FeatureKind::kLegendre: {
      check_domain(x);
      const Vector c = domain_.center();
      const Vector w = domain_.width();
      std::vector<std::vector<double>> vals(input_dim_), ders(input_dim_);
      for (int cdim = 0; cdim < input_dim_; ++cdim) {
        const double t = 2.0 * (x[cdim] - c[cdim]) / w[cdim];
        legendre_recurrence(order_, t, &vals[cdim], &ders[cdim]);
      }
      for (int k = 0; k < output_dim_; ++k) {
        for (int cdim = 0; cdim < input_dim_; ++cdim) {
          // Chain rule: d/dx = dP/dt * 2/width.
          double v = ders[cdim][multi_indices_[k][cdim]] * 2.0 / w[cdim];
          for (int other = 0; other < input_dim_; ++other) {
            if (other != cdim) v *= vals[other][multi_indices_[k][other]];
          }
          jac(k, cdim) = v;
        }
      }
      break;
    }
  }
  return jac;
}

}  // namespace invgame
