#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include "dagma_dce/acyclicity.hpp"
#include "dagma_dce/graphs.hpp"
#include "dagma_dce/models.hpp"

namespace dce {

// Below this an RMS entry is treated as an absent edge and gets zero subgradient.
inline constexpr double kAdjacencyKinkEps = 1e-12;

// total = mu * (mse + lambda1 * l1 + lambda2 * l2) + h_value, where l1 is the
// method's sparsity term and l2 = ||theta||^2 / 2.
struct ScoreBreakdown {
  double mse = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double h_value = 0.0;
  double mu = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double total = 0.0;

  double recompute_total() const { return mu * (mse + lambda1 * l1 + lambda2 * l2) + h_value; }
};

nlohmann::json to_json(const ScoreBreakdown& s);

struct ObjectiveWeights {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double mu = 1.0;
  double s = 1.0;
};

struct ObjectiveEvaluation {
  bool feasible = false;
  ScoreBreakdown score;         // h_value and total are meaningless when infeasible
  Eigen::VectorXd gradient;     // empty unless feasible and requested
  WeightedAdjacency adjacency;  // the adjacency h was evaluated on
  FeasibilityReport feasibility;
};

// A_ij = sqrt(mean_n J[n][j][i]^2).
WeightedAdjacency dce_adjacency(const JacobianBatch& jac);

// sum_{i,j} mean_n |J[n][j][i]|, diagonal included.
double dce_l1(const JacobianBatch& jac);

// Pulls an adjacency-level gradient dA back to a Jacobian cotangent:
// G[n][j][i] = dA_ij J[n][j][i] / (N A_ij), or 0 where A_ij <= kAdjacencyKinkEps.
JacobianBatch adjacency_cotangent(const WeightedAdjacency& a, const JacobianBatch& jac,
                                  const Eigen::MatrixXd& grad_a);

// G[n][j][i] = sign(J[n][j][i]) / N with sign(0) = 0.
JacobianBatch l1_cotangent(const JacobianBatch& jac);

// DCE objective: mu * (MSE + lambda1 * dce_l1 + lambda2 * l2) + h_dagma(dce_adjacency(J), s).
// Returns feasible = false (without a gradient) outside the M-matrix domain.
ObjectiveEvaluation try_evaluate_dce_objective(const SemModel& model, const Eigen::MatrixXd& x,
                                               const ObjectiveWeights& weights,
                                               bool with_gradient = true);

// Same, throwing FeasibilityError outside the domain.
ObjectiveEvaluation evaluate_objective(const SemModel& model, const Eigen::MatrixXd& x,
                                       double lambda1, double mu, double s);

// Baseline objective: mu * (MSE + lambda1 * ||W1||_1 + lambda2 * l2) +
// h_dagma(first_layer_norms, s).
ObjectiveEvaluation try_evaluate_baseline_objective(const MlpSemModel& model,
                                                    const Eigen::MatrixXd& x,
                                                    const ObjectiveWeights& weights,
                                                    bool with_gradient = true);

}  // namespace dce
