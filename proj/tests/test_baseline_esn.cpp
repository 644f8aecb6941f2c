#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "sodesn/baseline_esn.hpp"
#include "sodesn/data.hpp"
#include "sodesn/error.hpp"
#include "sodesn/metrics.hpp"
#include "sodesn/training.hpp"

using namespace sodesn;

namespace {

double oracle_radius(const Eigen::MatrixXd& m) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ces(m.cast<std::complex<double>>(), false);
  return ces.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd synthetic_inputs(Eigen::Index rows, std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::VectorXd base = synthesize_base(rows + 4, std::chrono::minutes(15), {}, rng);
  return normalize(synthesize_correlated(base, 8, 2, 0.1, rng)).normalized();
}

}  // namespace

TEST_CASE("init_esn: shapes, spectral radius, density and input range") {
  EsnOptions o;
  o.seed = 4;
  o.input_scaling = 0.5;
  const Esn esn = init_esn(7, o);
  CHECK(esn.reservoir.rows() == 120);
  CHECK(esn.input.cols() == 7);
  CHECK(esn.readout.size() == 127);
  CHECK(esn.readout.isZero(0.0));
  CHECK(std::abs(oracle_radius(esn.reservoir) - 0.66) < 1e-6);
  const double density = double((esn.reservoir.array() != 0.0).count()) / double(esn.reservoir.size());
  CHECK(std::abs(density - 0.1) < 0.02);
  CHECK(esn.input.cwiseAbs().maxCoeff() <= 0.5);
  CHECK(esn.input.cwiseAbs().maxCoeff() > 0.4);
  CHECK(init_esn(7, o) == esn);
}

TEST_CASE("init_esn: invalid options") {
  EsnOptions o;
  o.input_scaling = 0.0;
  CHECK_THROWS_AS(init_esn(3, o), ConfigError);
  o = {};
  o.n_internal = 0;
  CHECK_THROWS_AS(init_esn(3, o), ConfigError);
  o = {};
  o.rho_target = 1.2;
  CHECK_THROWS_AS(init_esn(3, o), ConfigError);
}

TEST_CASE("echo state property: trajectories from different states converge") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    EsnOptions o;
    o.seed = seed;
    const Esn esn = init_esn(3, o);
    const Eigen::MatrixXd in = Eigen::MatrixXd::Random(1000, 3);
    const Eigen::MatrixXd a = esn_trajectory(esn, in, Eigen::VectorXd::Random(120));
    const Eigen::MatrixXd b = esn_trajectory(esn, in, Eigen::VectorXd::Random(120));
    CHECK((a.row(999) - b.row(999)).squaredNorm() < 1e-6);
  }
}

TEST_CASE("with link quality 1 a single-node distributed net equals the ESN with the same weights") {
  const Eigen::MatrixXd data = synthetic_inputs(3000, 8);
  const Eigen::MatrixXd inputs = data.rightCols(7);
  const Eigen::VectorXd teacher = data.col(0);
  EsnOptions o;
  o.n_internal = 30;
  o.washout = 200;
  o.seed = 3;
  const Esn esn = train_esn(inputs.topRows(2000), teacher.head(2000), o);

  NodeWeights nw{esn.reservoir, esn.input, Eigen::MatrixXd(30, 0), Eigen::MatrixXd::Zero(1, 37)};
  const Sodesn single(build_grid(1, 1), {7, 30, 1}, {nw}, {});
  HarvestOptions h;
  h.washout = 200;
  const Sodesn trained = train_readouts(single, inputs.topRows(2000), teacher.head(2000), h);
  // Same weights in the other column order: [internal; input] vs [input; internal].
  const Eigen::RowVectorXd r = trained.node(0).readout.row(0);
  CHECK((r.head(30) - esn.readout.tail(30)).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((r.tail(7) - esn.readout.head(7)).cwiseAbs().maxCoeff() < 1e-6);

  const Eigen::VectorXd pe = esn_predict(esn, inputs, 1.0, 0);
  NetworkState s = zero_state(trained);
  for (Eigen::Index n = 0; n < inputs.rows(); ++n) {
    s = step(trained, s, inputs.row(n).transpose(), LinkOutcomes());
    CHECK(std::abs(s.y(0) - pe(n)) < 1e-6);
  }
}

TEST_CASE("esn_predict: lost inputs read zero") {
  EsnOptions o;
  o.n_internal = 20;
  const Esn base = init_esn(4, o);
  Esn esn = base;
  esn.readout = Eigen::RowVectorXd::Random(24);
  const Eigen::MatrixXd in = Eigen::MatrixXd::Random(100, 4);
  CHECK(esn_predict(esn, in, 0.0, 5) == esn_predict(esn, Eigen::MatrixXd::Zero(100, 4), 1.0, 5));
  CHECK(esn_predict(esn, in, 0.5, 5) == esn_predict(esn, in, 0.5, 5));
  CHECK_FALSE(esn_predict(esn, in, 0.5, 5) == esn_predict(esn, in, 0.5, 6));
  // Harvest rows carry the zeroed inputs too.
  const Eigen::MatrixXd m = esn_harvest(esn, in, 10, 0.0, 1);
  CHECK(m.rows() == 90);
  CHECK(m.cols() == 24);
  CHECK(m.isZero(0.0));
}

TEST_CASE("trained ESN predicts a correlated sensor with finite, small NRMSE") {
  const Eigen::MatrixXd data = synthetic_inputs(6000, 2);
  EsnOptions o;
  o.washout = 500;
  o.seed = 1;
  const Esn esn = train_esn(data.topRows(5000).rightCols(7), data.col(0).head(5000), o);
  const Eigen::VectorXd p = esn_predict(esn, data.rightCols(7), 1.0, 0);
  const double e = nrmse(p.tail(900), data.col(0).tail(900));
  CHECK(std::isfinite(e));
  CHECK(e < 0.5);
}
