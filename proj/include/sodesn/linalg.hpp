#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <cstdint>

#include "sodesn/error.hpp"

namespace sodesn {

/// Largest absolute eigenvalue of a dense square matrix (full Hessenberg/QR
/// eigenvalue solve, no eigenvectors).
template <typename Derived>
typename Derived::RealScalar spectral_radius(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (m.rows() != m.cols()) throw NumericError("spectral_radius: matrix is not square");
  if (m.rows() == 0) return 0;
  Eigen::EigenSolver<Matrix> solver(m.eval(), /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw NumericError("spectral_radius: eigenvalue solver did not converge");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

/// Matrices with more rows than this use power iteration in the sparse overload.
inline constexpr Eigen::Index kDenseSpectralLimit = 200;

/// Sparse overload: dense eigensolver up to kDenseSpectralLimit, power iteration
/// above (falling back to the dense solve if it does not converge).
double spectral_radius(const Eigen::SparseMatrix<double>& m);

struct PowerIterationResult {
  double radius = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Power iteration that also resolves a dominant complex-conjugate (or +-)
/// pair by fitting x_{k+2} = a x_{k+1} + b x_k over each step.
PowerIterationResult power_iteration_radius(const Eigen::SparseMatrix<double>& m, double rel_tol = 1e-10,
                                            int max_iterations = 20000, std::uint64_t seed = 1);

struct SolveOptions {
  /// Singular values below sv_cutoff * sigma_max count as zero.
  double sv_cutoff = 1e-10;
  /// Tikhonov term; 0 gives the plain pseudoinverse.
  double ridge = 0.0;
};

/// Minimum-norm least-squares readout: returns Wout with Wout^T = pinv(M) T,
/// i.e. an (outputs x features) matrix for samples M (S x F) and teacher T (S x L).
template <typename DerivedM, typename DerivedT>
Eigen::Matrix<typename DerivedM::Scalar, Eigen::Dynamic, Eigen::Dynamic> solve_readout(
    const Eigen::MatrixBase<DerivedM>& samples, const Eigen::MatrixBase<DerivedT>& teacher,
    const SolveOptions& options = {}) {
  using Scalar = typename DerivedM::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (samples.rows() == 0 || samples.cols() == 0 || teacher.cols() == 0) {
    throw NumericError("solve_readout: empty sample or teacher matrix");
  }
  if (samples.rows() != teacher.rows()) throw NumericError("solve_readout: sample and teacher row counts differ");
  if (options.sv_cutoff < 0 || options.ridge < 0) throw NumericError("solve_readout: negative cutoff or ridge");

  Eigen::JacobiSVD<Matrix, Eigen::ColPivHouseholderQRPreconditioner> svd(
      samples.eval(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sigma = svd.singularValues();
  const Scalar threshold = sigma.size() > 0 ? Scalar(options.sv_cutoff) * sigma(0) : Scalar(0);
  Vector filter = Vector::Zero(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > threshold && sigma(i) > Scalar(0)) {
      filter(i) = sigma(i) / (sigma(i) * sigma(i) + Scalar(options.ridge));
    }
  }
  Matrix weights_t = svd.matrixV() * filter.asDiagonal() * (svd.matrixU().transpose() * teacher);
  return weights_t.transpose();
}

}  // namespace sodesn
