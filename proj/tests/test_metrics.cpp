#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sodesn/error.hpp"
#include "sodesn/metrics.hpp"
#include "sodesn/random.hpp"

using namespace sodesn;

namespace {

// Plain loop oracle with the population variance.
double oracle_nrmse(const std::vector<double>& p, const std::vector<double>& t) {
  double mean = 0;
  for (double v : t) mean += v;
  mean /= double(t.size());
  double var = 0, sse = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    var += (t[i] - mean) * (t[i] - mean);
    sse += (t[i] - p[i]) * (t[i] - p[i]);
  }
  return std::sqrt(sse / var);
}

Eigen::VectorXd random_vector(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> g;
  return Eigen::VectorXd::NullaryExpr(n, [&]() { return g(rng); });
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST_CASE("nrmse: hand-computed case") {
  // Truth 0,2: mean 1, variance 1. Prediction 1,3: errors 1,1, sse 2 -> sqrt(2 / 2) = 1.
  CHECK(nrmse(Eigen::Vector2d(1, 3), Eigen::Vector2d(0, 2)) == doctest::Approx(1.0));
  // Truth 0,2,4: variance 8/3. Prediction 0,0,0: sse 20 -> sqrt(20 / 8) = sqrt(2.5).
  CHECK(nrmse(Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(0, 2, 4)) == doctest::Approx(std::sqrt(2.5)));
  // Truth 1,-1 (variance 1), errors of sqrt(2) each: sse 4 -> sqrt(4 / 2) = sqrt(2).
  CHECK(nrmse(Eigen::Vector2d(1 - std::sqrt(2.0), -1 + std::sqrt(2.0)), Eigen::Vector2d(1, -1)) ==
        doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("nrmse: perfect predictor 0, mean predictor 1") {
  Rng rng(1);
  const Eigen::VectorXd t = random_vector(500, rng);
  CHECK(nrmse(t, t) == 0.0);
  CHECK(nrmse(Eigen::VectorXd::Constant(500, t.mean()), t) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("nrmse: agrees with the loop oracle on random data") {
  Rng rng(2);
  for (int k = 0; k < 50; ++k) {
    const Eigen::VectorXd t = random_vector(10 + k, rng), p = random_vector(10 + k, rng);
    CHECK(nrmse(p, t) == doctest::Approx(oracle_nrmse(to_std(p), to_std(t))).epsilon(1e-12));
  }
}

TEST_CASE("nrmse: scale and shift invariance, order invariance") {
  Rng rng(3);
  const Eigen::VectorXd t = random_vector(200, rng), p = random_vector(200, rng);
  const double base = nrmse(p, t);
  CHECK(nrmse((p.array() * 3.5 + 7).matrix(), (t.array() * 3.5 + 7).matrix()) == doctest::Approx(base).epsilon(1e-12));
  CHECK(nrmse((-p).eval(), (-t).eval()) == doctest::Approx(base).epsilon(1e-12));
  std::vector<int> perm(200);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::VectorXd tp(200), pp(200);
  for (int i = 0; i < 200; ++i) {
    tp(i) = t(perm[std::size_t(i)]);
    pp(i) = p(perm[std::size_t(i)]);
  }
  CHECK(nrmse(pp, tp) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("nrmse: float inputs, errors") {
  const Eigen::Vector3f t(0, 2, 4), p(0, 0, 0);
  CHECK(nrmse(p, t) == doctest::Approx(std::sqrt(2.5)).epsilon(1e-6));
  CHECK_THROWS_AS(nrmse(Eigen::VectorXd::Zero(2), Eigen::VectorXd::LinSpaced(3, 0, 1)), NumericError);
  CHECK_THROWS_AS(nrmse(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)), NumericError);
  CHECK_THROWS_AS(nrmse(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(5, 5, 5)), NumericError);
}

TEST_CASE("max_abs_error: hand case") {
  CHECK(max_abs_error(Eigen::Vector3d(20.0, 0.0, -1.0), Eigen::Vector3d(5.8, 3.0, 1.0)) == doctest::Approx(14.2));
  CHECK_THROWS_AS(max_abs_error(Eigen::VectorXd(0), Eigen::VectorXd(0)), NumericError);
  const ScoreSummary s = score(Eigen::Vector2d(1, 3), Eigen::Vector2d(0, 2));
  CHECK(s.n == 2);
  CHECK(s.max_abs_error == 1.0);
}

TEST_CASE("windowed_nrmse: brute-force oracle and full-length window") {
  Rng rng(4);
  const Eigen::VectorXd t = random_vector(120, rng), p = random_vector(120, rng);
  const auto w = windowed_nrmse(p, t, 25);
  CHECK(w.size() == 96);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const auto tv = to_std(t.segment(Eigen::Index(i), 25)), pv = to_std(p.segment(Eigen::Index(i), 25));
    REQUIRE(w[i]);
    CHECK(*w[i] == doctest::Approx(oracle_nrmse(pv, tv)).epsilon(1e-12));
  }
  const auto full = windowed_nrmse(p, t, 120);
  REQUIRE(full.size() == 1);
  CHECK(*full[0] == doctest::Approx(nrmse(p, t)).epsilon(1e-14));
  Eigen::VectorXd flat = t;
  flat.head(10).setConstant(2.0);
  CHECK_FALSE(windowed_nrmse(p, flat, 5)[0]);
  CHECK_THROWS_AS(windowed_nrmse(p, t, 1), NumericError);
  CHECK_THROWS_AS(windowed_nrmse(p, t, 121), NumericError);
}

TEST_CASE("RollingNrmse matches windowed_nrmse step by step") {
  Rng rng(5);
  const Eigen::VectorXd t = random_vector(300, rng), p = random_vector(300, rng);
  const auto w = windowed_nrmse(p, t, 30);
  RollingNrmse r(30);
  for (Eigen::Index n = 0; n < 300; ++n) {
    r.push(p(n), t(n));
    if (n < 29) {
      CHECK_FALSE(r.value());
    } else {
      REQUIRE(r.value());
      CHECK(*r.value() == doctest::Approx(*w[std::size_t(n - 29)]).epsilon(1e-9));
    }
  }
  r.reset();
  CHECK_FALSE(r.full());
}

TEST_CASE("RollingNrmse: zero-variance windows") {
  RollingNrmse r(4);
  for (int i = 0; i < 4; ++i) r.push(0.0, 0.0);
  CHECK(*r.value() == 0.0);
  r.push(1.0, 0.0);
  CHECK(std::isinf(*r.value()));
  CHECK_THROWS(RollingNrmse(1));
}
