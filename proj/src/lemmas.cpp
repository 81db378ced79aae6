#include "dagma_dce/lemmas.hpp"

#include <algorithm>
#include <cmath>

#include "dagma_dce/error.hpp"
#include "dagma_dce/objective.hpp"

namespace dce {

double empirical_dce_entry(const SemModel& model, int input, int output, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(n, model.d());
  for (Eigen::Index c = 0; c < x.cols(); ++c)
    for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) = normal(rng);
  return dce_adjacency(model.jacobian_batch(x))(input, output);
}

EdgeWitness make_witness(const MlpSemModel& model, int input, int output) {
  EdgeWitness w{model, input, output, 0.0, 0.0};
  w.first_layer_norm = first_layer_norms(model)(input, output);
  w.dce_entry = empirical_dce_entry(model, input, output);
  return w;
}

EdgeWitness construct_lemma1_mlp(double eps, double delta, int input, int d, int hidden,
                                 double safety) {
  if (!(eps > 0.0) || !(delta >= 0.0) || !(safety > 1.0)) {
    throw ParameterError("construct_lemma1_mlp: need eps > 0, delta >= 0, safety > 1");
  }
  if (d < 2 || hidden < 1 || input < 0 || input >= d) {
    throw ParameterError("construct_lemma1_mlp: need d >= 2, hidden >= 1, 0 <= input < d");
  }
  const int output = (input + 1) % d;
  MlpSemModel model(d, MlpOptions{hidden, Activation::Sigmoid, true});

  const double w = 0.5 * eps / std::sqrt(static_cast<double>(hidden));
  const double c = 4.0 * safety * std::max(delta, 1.0) / (w * hidden);
  auto w1 = model.first_layer();
  auto w2 = model.output_weights();
  for (int k = 0; k < hidden; ++k) {
    w1(static_cast<Eigen::Index>(output) * hidden + k, input) = w;
    w2(static_cast<Eigen::Index>(output) * hidden + k) = c;
  }
  return make_witness(model, input, output);
}

MlpSemModel rescale_relu_mlp(const MlpSemModel& model, double s, int input, int output) {
  if (model.options().activation != Activation::Relu) {
    throw ParameterError("rescale_relu_mlp: positive rescaling invariance needs ReLU");
  }
  if (!(s > 0.0) || !std::isfinite(s)) throw ParameterError("rescale_relu_mlp: target norm must be positive");
  const int d = model.d();
  if (input < 0 || input >= d || output < 0 || output >= d) {
    throw ParameterError("rescale_relu_mlp: index out of range");
  }
  const double current = first_layer_norms(model)(input, output);
  if (!(current > 0.0)) {
    throw ParameterError("rescale_relu_mlp: first-layer norm for input " + std::to_string(input) +
                         " is zero, cannot rescale");
  }
  MlpSemModel out = model;
  const double a = s / current;
  if (a == 1.0) return out;
  const int h = model.hidden();
  auto w1 = out.first_layer();
  auto w2 = out.output_weights();
  for (int k = 0; k < h; ++k) {
    const Eigen::Index row = static_cast<Eigen::Index>(output) * h + k;
    w1.row(row) *= a;
    if (model.options().bias) out.hidden_bias()(row) *= a;
    w2(row) /= a;
  }
  return out;
}

}  // namespace dce
