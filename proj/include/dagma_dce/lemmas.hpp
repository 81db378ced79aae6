#pragma once

#include <cstdint>

#include "dagma_dce/models.hpp"

namespace dce {

// A model plus the two competing strengths of edge input -> output.
struct EdgeWitness {
  MlpSemModel model;
  int input = 0;
  int output = 0;
  double first_layer_norm = 0.0;
  double dce_entry = 0.0;  // RMS derivative over standard-normal inputs
};

// Empirical RMS of df_output/dx_input over n standard-normal rows drawn with `seed`.
double empirical_dce_entry(const SemModel& model, int input, int output, int n = 1000,
                           std::uint64_t seed = 20240521);

// Sigmoid MLP in which regressor `output` (input + 1 mod d) reads only x_input.
// The first-layer column for x_input has norm eps/2 spread evenly over the
// hidden units; all output weights equal 4 * safety * max(delta, 1) / sum(w),
// so the derivative at the origin is safety * max(delta, 1).
EdgeWitness construct_lemma1_mlp(double eps, double delta, int input, int d, int hidden,
                                 double safety = 2.0);

// Witness for an existing model.
EdgeWitness make_witness(const MlpSemModel& model, int input, int output);

// Positive rescaling of regressor `output`'s hidden units by a = s / ||W1[output][:, input]||:
// W1 and b1 are multiplied by a, w2 divided by a. Requires ReLU.
MlpSemModel rescale_relu_mlp(const MlpSemModel& model, double s, int input, int output);

}  // namespace dce
