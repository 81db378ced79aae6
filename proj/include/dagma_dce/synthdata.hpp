#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dagma_dce/graphs.hpp"

namespace dce {

struct NoiseSpec {
  double sigma = 1.0;  // additive Gaussian, independent across nodes and samples
};

// B(i, j) is the coefficient of x_i in x_j; nonzero exactly on graph edges.
struct LinearMechanism {
  Eigen::MatrixXd coefficients;
};

// f_j(x) = sum_{i in Pa(j)} g_ij(x_i), each g_ij drawn from an RBF GP at
// simulation time.
struct GpAdditiveMechanism {
  double lengthscale = 1.0;
};

// Node j with parents p_1..p_k: f_j = w2 . sigmoid(W1 x_pa), W1 is hidden x k,
// no biases. Parentless nodes have empty weights.
struct MlpNodeWeights {
  std::vector<int> parents;
  Eigen::MatrixXd w1;
  Eigen::VectorXd w2;
};

struct RandomMlpMechanism {
  int hidden = 100;
  std::vector<MlpNodeWeights> nodes;
};

using Mechanism = std::variant<LinearMechanism, GpAdditiveMechanism, RandomMlpMechanism>;

struct SemSpec {
  BinaryDag graph;
  Mechanism mechanism;
  NoiseSpec noise;
};

struct Dataset {
  Eigen::MatrixXd x;  // N x d
  std::optional<std::uint64_t> seed;
  std::string sem_hash;
};

// Draws from U((-high, -low) u (low, high)).
double sample_two_sided_uniform(double low, double high, Rng& rng);

SemSpec sample_linear_sem(const BinaryDag& graph, double coef_low, double coef_high, Rng& rng,
                          NoiseSpec noise = {});
SemSpec sample_random_mlp_sem(const BinaryDag& graph, int hidden, Rng& rng, NoiseSpec noise = {},
                              double weight_low = 0.5, double weight_high = 2.0);
SemSpec make_gp_additive_sem(const BinaryDag& graph, double lengthscale, NoiseSpec noise = {});

// Draws N x d Gaussian noise, then evaluates the mechanisms in topological order.
Dataset simulate(const SemSpec& sem, int n, Rng& rng);

// Same, with caller-supplied noise (N x d). `rng` is only used by GP draws.
Eigen::MatrixXd simulate_from_noise(const SemSpec& sem, const Eigen::MatrixXd& noise, Rng& rng);

// Sample path of a zero-mean unit-variance RBF GP at the given points. Jitter
// starts at 1e-8 and escalates x10 up to 1e-4.
Eigen::VectorXd sample_rbf_gp(const Eigen::VectorXd& points, double lengthscale, Rng& rng);

Eigen::VectorXd column_variances(const Eigen::MatrixXd& x);
Eigen::MatrixXd standardize(const Eigen::MatrixXd& x);

nlohmann::json to_json(const SemSpec& sem);
std::string sem_hash(const SemSpec& sem);

}  // namespace dce
