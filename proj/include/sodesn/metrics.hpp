#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

#include "sodesn/error.hpp"

namespace sodesn {

/// Normalized root mean squared error, sqrt(sum (t - p)^2 / (n var(t))), with
/// the population variance of the truth. A constant mean predictor scores 1.
template <typename DerivedP, typename DerivedT>
double nrmse(const Eigen::MatrixBase<DerivedP>& predictions, const Eigen::MatrixBase<DerivedT>& truth) {
  const Eigen::Index n = truth.size();
  if (predictions.size() != n) throw NumericError("nrmse: prediction and truth lengths differ");
  if (n < 2) throw NumericError("nrmse: at least two samples required");
  const auto t = truth.derived().template cast<double>().array();
  const auto p = predictions.derived().template cast<double>().array();
  const double mean = t.mean();
  const double var = (t - mean).square().sum() / double(n);
  if (!(var > 0.0)) throw NumericError("nrmse: truth has zero variance");
  const double sse = (t - p).square().sum();
  return std::sqrt(sse / (double(n) * var));
}

template <typename DerivedP, typename DerivedT>
double max_abs_error(const Eigen::MatrixBase<DerivedP>& predictions, const Eigen::MatrixBase<DerivedT>& truth) {
  if (predictions.size() != truth.size()) throw NumericError("max_abs_error: lengths differ");
  if (truth.size() == 0) throw NumericError("max_abs_error: empty input");
  return (truth.derived().template cast<double>() - predictions.derived().template cast<double>())
      .cwiseAbs()
      .maxCoeff();
}

/// NRMSE over every sliding window [i, i + window). Windows whose truth has
/// zero variance are std::nullopt.
template <typename DerivedP, typename DerivedT>
std::vector<std::optional<double>> windowed_nrmse(const Eigen::MatrixBase<DerivedP>& predictions,
                                                  const Eigen::MatrixBase<DerivedT>& truth, Eigen::Index window) {
  const Eigen::Index n = truth.size();
  if (predictions.size() != n) throw NumericError("windowed_nrmse: lengths differ");
  if (window < 2) throw NumericError("windowed_nrmse: window must be >= 2");
  if (window > n) throw NumericError("windowed_nrmse: window larger than series");
  const Eigen::VectorXd t = truth.derived().template cast<double>();
  const Eigen::VectorXd p = predictions.derived().template cast<double>();
  std::vector<std::optional<double>> out;
  out.reserve(static_cast<std::size_t>(n - window + 1));
  for (Eigen::Index i = 0; i + window <= n; ++i) {
    const auto tw = t.segment(i, window).array();
    const double mean = tw.mean();
    const double var = (tw - mean).square().sum() / double(window);
    if (!(var > 0.0)) {
      out.emplace_back(std::nullopt);
      continue;
    }
    const double sse = (tw - p.segment(i, window).array()).square().sum();
    out.emplace_back(std::sqrt(sse / (double(window) * var)));
  }
  return out;
}

struct ScoreSummary {
  double nrmse = 0.0;
  double max_abs_error = 0.0;
  Eigen::Index n = 0;
};

template <typename DerivedP, typename DerivedT>
ScoreSummary score(const Eigen::MatrixBase<DerivedP>& predictions, const Eigen::MatrixBase<DerivedT>& truth) {
  return {nrmse(predictions, truth), max_abs_error(predictions, truth), truth.size()};
}

/// Incremental windowed statistic used by the online detector: keeps the
/// last `window` (prediction, reading) pairs.
class RollingNrmse {
 public:
  explicit RollingNrmse(Eigen::Index window = 2);

  void push(double prediction, double reading);
  bool full() const noexcept { return count_ >= window_; }
  /// nullopt until full; +inf for a zero-variance window with nonzero error,
  /// 0 when the window is constant and matched exactly.
  std::optional<double> value() const;
  void reset();

 private:
  Eigen::Index window_;
  Eigen::Index count_ = 0;
  Eigen::Index head_ = 0;
  Eigen::VectorXd predictions_;
  Eigen::VectorXd readings_;
};

}  // namespace sodesn
