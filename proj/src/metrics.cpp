#include "sodesn/metrics.hpp"

#include <limits>

namespace sodesn {

RollingNrmse::RollingNrmse(Eigen::Index window)
    : window_(window), predictions_(Eigen::VectorXd::Zero(window)), readings_(Eigen::VectorXd::Zero(window)) {
  if (window < 2) throw NumericError("RollingNrmse: window must be >= 2");
}

void RollingNrmse::push(double prediction, double reading) {
  predictions_(head_) = prediction;
  readings_(head_) = reading;
  head_ = (head_ + 1) % window_;
  if (count_ < window_) ++count_;
}

std::optional<double> RollingNrmse::value() const {
  if (!full()) return std::nullopt;
  // Recomputed from the buffer each call; a running sum would drift.
  const double mean = readings_.mean();
  const double var = (readings_.array() - mean).square().sum() / double(window_);
  const double sse = (readings_ - predictions_).squaredNorm();
  if (!(var > 0.0)) return sse > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return std::sqrt(sse / (double(window_) * var));
}

void RollingNrmse::reset() {
  count_ = 0;
  head_ = 0;
  predictions_.setZero();
  readings_.setZero();
}

}  // namespace sodesn
