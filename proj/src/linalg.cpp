#include "sodesn/linalg.hpp"

#include <cmath>
#include <random>

namespace sodesn {

double spectral_radius(const Eigen::SparseMatrix<double>& m) {
  if (m.rows() != m.cols()) throw NumericError("spectral_radius: matrix is not square");
  if (m.rows() <= kDenseSpectralLimit) return spectral_radius(Eigen::MatrixXd(m));
  const auto result = power_iteration_radius(m);
  if (result.converged) return result.radius;
  return spectral_radius(Eigen::MatrixXd(m));
}

namespace {

// Modulus of the dominant root of z^2 = a z + b fitted to three consecutive iterates.
double pair_radius(const Eigen::VectorXd& x0, const Eigen::VectorXd& x1, const Eigen::VectorXd& x2) {
  Eigen::Matrix2d g;
  g << x1.squaredNorm(), x1.dot(x0), x0.dot(x1), x0.squaredNorm();
  Eigen::Vector2d rhs(x1.dot(x2), x0.dot(x2));
  const double det = g.determinant();
  const double scale = g(0, 0) * g(1, 1);
  if (scale <= 0 || std::abs(det) <= 1e-12 * scale) {
    return x0.norm() > 0 ? x1.norm() / x0.norm() : 0.0;
  }
  const Eigen::Vector2d ab = g.fullPivLu().solve(rhs);
  const double a = ab(0);
  const double b = ab(1);
  const double disc = a * a + 4 * b;
  if (disc >= 0) {
    const double r = std::sqrt(disc);
    return std::max(std::abs((a + r) / 2), std::abs((a - r) / 2));
  }
  return std::sqrt(-b);
}

}  // namespace

PowerIterationResult power_iteration_radius(const Eigen::SparseMatrix<double>& m, double rel_tol, int max_iterations,
                                            std::uint64_t seed) {
  if (m.rows() != m.cols()) throw NumericError("power_iteration_radius: matrix is not square");
  PowerIterationResult result;
  if (m.rows() == 0 || m.nonZeros() == 0) {
    result.converged = true;
    return result;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  Eigen::VectorXd x0(m.rows());
  for (Eigen::Index i = 0; i < x0.size(); ++i) x0(i) = uniform(rng);
  x0.normalize();
  Eigen::VectorXd x1 = m * x0;
  double previous = -1.0;
  int stable = 0;
  for (int it = 1; it <= max_iterations; ++it) {
    const double n1 = x1.norm();
    if (n1 == 0.0) {
      // Nilpotent along this start vector.
      result = {0.0, it, true};
      return result;
    }
    Eigen::VectorXd x2 = m * x1;
    const double estimate = pair_radius(x0, x1, x2);
    result.radius = estimate;
    result.iterations = it;
    if (previous >= 0 && std::abs(estimate - previous) <= rel_tol * std::max(estimate, 1e-300)) {
      if (++stable >= 20) {
        result.converged = true;
        return result;
      }
    } else {
      stable = 0;
    }
    previous = estimate;
    x0 = x1 / n1;
    x1 = x2 / n1;
  }
  return result;
}

}  // namespace sodesn
