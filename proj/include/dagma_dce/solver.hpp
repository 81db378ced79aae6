#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dagma_dce/acyclicity.hpp"
#include "dagma_dce/graphs.hpp"
#include "dagma_dce/models.hpp"
#include "dagma_dce/objective.hpp"

namespace dce {

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;

  explicit AdamState(Eigen::Index n = 0) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

struct AdamParams {
  double beta1 = 0.99;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam update of theta in place.
void adam_step(Eigen::VectorXd& theta, AdamState& state, const Eigen::VectorXd& gradient,
               double lr, const AdamParams& params = {});

struct CentralPathConfig {
  double mu_init = 1.0;
  double mu_decay = 0.1;
  std::vector<double> s_schedule{1.0, 0.9, 0.8, 0.7};
  double lr = 2e-4;
  // Stage t starts from lr * lr_stage_decay^t.
  double lr_stage_decay = 1.0;
  AdamParams adam;
  int max_iters_per_stage = 700;
  // Iteration cadence of the checkpoint callback; 0 disables it.
  int checkpoint_every = 0;
  // Iteration cadence of trace records (stage boundaries are always recorded).
  int trace_every = 100;
  double lambda1 = 3.5e-2;
  double lambda2 = 0.0;
  bool pretrain = false;
  std::uint64_t seed = 0;
  // Scale of the uniform first-layer initialization; 0 starts from A = 0.
  double init_scale = 0.0;
  int max_halvings = 10;
  double stop_tolerance = 1e-8;
  int stop_window = 100;

  int stages() const { return static_cast<int>(s_schedule.size()); }
  void validate() const;

  // Defaults used by the DAGMA baseline and by pre-training.
  static CentralPathConfig baseline_defaults();
  static CentralPathConfig dce_defaults();
};

nlohmann::json to_json(const CentralPathConfig& c);
// Missing keys keep the values of `defaults`.
CentralPathConfig central_path_config_from_json(const nlohmann::json& j,
                                                const CentralPathConfig& defaults);

struct TraceRecord {
  int stage = 0;
  int iteration = 0;
  double lr = 0.0;
  double s = 0.0;
  ScoreBreakdown score;
};

nlohmann::json to_json(const TraceRecord& r);

struct DiscoveryResult {
  std::string method;
  // DCE adjacency (RMS Jacobian) at the final parameters on the full dataset.
  WeightedAdjacency adjacency;
  // Only for the baseline: first-layer weight norms at the same parameters.
  std::optional<WeightedAdjacency> first_layer_adjacency;
  std::unique_ptr<SemModel> model;
  std::vector<TraceRecord> trace;
  double wall_time_s = 0.0;
  nlohmann::json config;
  int feasibility_incidents = 0;
  int aborted_stages = 0;
  int iterations = 0;
  double final_s = 1.0;
  FeasibilityReport final_feasibility;

  // The adjacency the method thresholds: first-layer norms for the baseline,
  // the DCE adjacency otherwise.
  const WeightedAdjacency& reported_adjacency() const {
    return first_layer_adjacency ? *first_layer_adjacency : adjacency;
  }
};

using CheckpointCallback = std::function<void(const SemModel&, int stage, int iteration)>;

// Central-path fit of the DCE objective. `model` is copied; the fitted copy is
// returned in the result. When config.pretrain is set and the model is an
// MLP, one stage of the baseline objective (with `pretrain_config`) runs first.
DiscoveryResult fit_dagma_dce(const Eigen::MatrixXd& x, const SemModel& model,
                              const CentralPathConfig& config,
                              const CentralPathConfig& pretrain_config = CentralPathConfig::baseline_defaults(),
                              const CheckpointCallback& on_checkpoint = {});

// One central-path stage of the baseline objective; returns the warm-started model.
MlpSemModel pretrain_dagma(const Eigen::MatrixXd& x, const MlpSemModel& model,
                           const CentralPathConfig& config, int* iterations = nullptr);

DiscoveryResult fit_dagma_baseline(const Eigen::MatrixXd& x, const MlpSemModel& model,
                                   const CentralPathConfig& config,
                                   const CheckpointCallback& on_checkpoint = {});

}  // namespace dce
