#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "dagma_dce/graphs.hpp"
#include "dagma_dce/solver.hpp"
#include "dagma_dce/synthdata.hpp"

namespace dce::cli {

inline constexpr int kSchemaVersion = 1;

// Thrown for bad flags or config values; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GenConfig {
  int d = 10;
  double edges = 20.0;  // expected edge count
  std::string mechanism = "linear";
  int n = 1000;
  std::uint64_t seed = 0;
  double coef_low = 0.5;
  double coef_high = 2.0;
  double lengthscale = 1.0;
  int hidden = 100;
  double noise_sigma = 1.0;
};

GenConfig gen_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GenConfig& c);

struct Generated {
  BinaryDag truth;
  SemSpec sem;
  Dataset data;
};

Generated generate(const GenConfig& c);

struct ModelSpec {
  std::string family = "mlp";  // mlp | linear | kernel_ridge
  int hidden = 10;
  std::string activation = "sigmoid";
  bool bias = true;
  double lengthscale = 1.0;  // kernel_ridge
  double ridge = 0.1;        // kernel_ridge
};

struct FitConfig {
  std::string method = "dagma-dce";  // dagma-dce | dagma | linear-dce
  ModelSpec model;
  CentralPathConfig solver;
  CentralPathConfig pretrain;
  bool standardize = false;
  std::uint64_t seed = 0;  // model initialization
};

bool known_method(const std::string& m);
// Method defaults are applied first, then the JSON overrides them.
FitConfig fit_config_from_json(const nlohmann::json& j, const std::optional<std::string>& method);
nlohmann::json to_json(const FitConfig& c);

// Builds and initializes the model, then runs the requested method.
DiscoveryResult run_fit(const Eigen::MatrixXd& x, const FitConfig& c);

// Deterministic result document (no timing).
nlohmann::json result_to_json(const DiscoveryResult& r, const FitConfig& c);

// Per-trial seed from the suite seed and the trial coordinates (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t suite_seed, std::uint64_t a, std::uint64_t b);

// Checks "schema_version" when present; rejects other versions.
void check_schema(const nlohmann::json& j, const std::string& what);

}  // namespace dce::cli
