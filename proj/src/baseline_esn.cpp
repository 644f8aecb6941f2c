#include "sodesn/baseline_esn.hpp"

#include <string>

#include "sodesn/error.hpp"
#include "sodesn/random.hpp"

namespace sodesn {

Esn init_esn(int n_inputs, const EsnOptions& options) {
  if (n_inputs < 0) throw ConfigError("init_esn: negative input count");
  if (options.n_internal <= 0) throw ConfigError("init_esn: the reservoir needs at least one unit");
  if (!(options.rho_target > 0.0 && options.rho_target < 1.0)) throw ConfigError("rho_target must lie in (0, 1)");
  if (!(options.density > 0.0 && options.density <= 1.0)) throw ConfigError("ESN density must lie in (0, 1]");
  if (!(options.input_scaling > 0.0)) throw ConfigError("ESN input scaling must be positive");
  Rng rng = make_rng(options.seed, {stream::init});
  std::uniform_real_distribution<double> weight(-1.0, 1.0);
  std::bernoulli_distribution edge(options.density);
  const Eigen::Index n = options.n_internal;

  Esn esn;
  esn.rho_target = options.rho_target;
  esn.reservoir = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      if (edge(rng)) esn.reservoir(r, c) = weight(rng);
    }
  }
  esn.input.resize(n, n_inputs);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n_inputs; ++c) esn.input(r, c) = options.input_scaling * weight(rng);
  }
  if (n > 0) {
    const double rho = spectral_radius(esn.reservoir);
    if (rho > 0.0) esn.reservoir *= options.rho_target / rho;
  }
  esn.readout = Eigen::RowVectorXd::Zero(n_inputs + n);
  return esn;
}

namespace {

void check_inputs(const Esn& esn, const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
  if (inputs.cols() != esn.input_count()) {
    throw NumericError("ESN: expected " + std::to_string(esn.input_count()) + " input columns, got " +
                       std::to_string(inputs.cols()));
  }
}

// Calls visit(n, u, x) after each step.
template <typename Visit>
void run_esn(const Esn& esn, const Eigen::Ref<const Eigen::MatrixXd>& inputs, double link_quality,
             std::uint64_t link_seed, Visit&& visit) {
  if (!(link_quality >= 0.0 && link_quality <= 1.0)) throw ConfigError("link quality must lie in [0, 1]");
  Rng rng(link_seed);
  std::bernoulli_distribution delivered(link_quality);
  const bool lossless = link_quality >= 1.0;
  const bool dead = link_quality <= 0.0;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(esn.internal_count());
  Eigen::VectorXd u(esn.input_count());
  for (Eigen::Index n = 0; n < inputs.rows(); ++n) {
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      const bool ok = lossless || (!dead && delivered(rng));
      u(k) = ok ? inputs(n, k) : 0.0;
    }
    if (x.size() > 0) x = (esn.input * u + esn.reservoir * x).array().tanh();
    visit(n, u, x);
  }
}

}  // namespace

Eigen::MatrixXd esn_harvest(const Esn& esn, const Eigen::Ref<const Eigen::MatrixXd>& inputs, Eigen::Index washout,
                            double link_quality, std::uint64_t link_seed) {
  check_inputs(esn, inputs);
  if (washout < 0 || inputs.rows() <= washout) throw DataError("ESN harvest: series not longer than washout");
  const Eigen::Index k = esn.input_count();
  Eigen::MatrixXd samples(inputs.rows() - washout, k + esn.internal_count());
  run_esn(esn, inputs, link_quality, link_seed, [&](Eigen::Index n, const Eigen::VectorXd& u, const Eigen::VectorXd& x) {
    if (n < washout) return;
    samples.row(n - washout).head(k) = u.transpose();
    samples.row(n - washout).tail(x.size()) = x.transpose();
  });
  return samples;
}

void train_esn_readout(Esn& esn, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                       const Eigen::Ref<const Eigen::VectorXd>& teacher, const EsnOptions& options) {
  if (teacher.size() != inputs.rows()) throw NumericError("train_esn: inputs and teacher differ in length");
  const Eigen::MatrixXd samples = esn_harvest(esn, inputs, options.washout, options.link_quality, options.link_seed);
  const Eigen::Index rows = samples.rows();
  esn.readout = solve_readout(samples, teacher.tail(rows), options.solve).row(0);
}

Esn train_esn(const Eigen::Ref<const Eigen::MatrixXd>& inputs, const Eigen::Ref<const Eigen::VectorXd>& teacher,
              const EsnOptions& options) {
  Esn esn = init_esn(static_cast<int>(inputs.cols()), options);
  train_esn_readout(esn, inputs, teacher, options);
  return esn;
}

Eigen::VectorXd esn_predict(const Esn& esn, const Eigen::Ref<const Eigen::MatrixXd>& inputs, double link_quality,
                            std::uint64_t link_seed) {
  check_inputs(esn, inputs);
  if (esn.readout.size() != esn.input_count() + esn.internal_count()) throw NumericError("ESN: readout size mismatch");
  Eigen::VectorXd out(inputs.rows());
  const Eigen::Index k = esn.input_count();
  run_esn(esn, inputs, link_quality, link_seed, [&](Eigen::Index n, const Eigen::VectorXd& u, const Eigen::VectorXd& x) {
    out(n) = esn.readout.head(k).dot(u) + esn.readout.tail(x.size()).dot(x);
  });
  return out;
}

Eigen::MatrixXd esn_trajectory(const Esn& esn, const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                               const Eigen::Ref<const Eigen::VectorXd>& initial_state) {
  check_inputs(esn, inputs);
  if (initial_state.size() != esn.internal_count()) throw NumericError("ESN: initial state size mismatch");
  Eigen::MatrixXd states(inputs.rows(), esn.internal_count());
  Eigen::VectorXd x = initial_state;
  for (Eigen::Index n = 0; n < inputs.rows(); ++n) {
    x = (esn.input * inputs.row(n).transpose() + esn.reservoir * x).array().tanh();
    states.row(n) = x.transpose();
  }
  return states;
}

}  // namespace sodesn
