#include "run_config.hpp"

#include <algorithm>
#include <set>

#include "dagma_dce/error.hpp"
#include "dagma_dce/json_io.hpp"
#include "dagma_dce/models.hpp"

namespace dce::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& what) {
  if (!j.is_object()) throw UsageError(what + ": expected a JSON object");
  for (const auto& item : j.items()) {
    if (!known.count(item.key())) throw UsageError(what + ": unknown key '" + item.key() + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& field, const std::string& what) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(what + ": key '" + key + "' has the wrong type");
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void check_schema(const json& j, const std::string& what) {
  if (!j.is_object()) throw UsageError(what + ": expected a JSON object");
  if (j.contains("schema_version")) {
    if (!j.at("schema_version").is_number_integer() || j.at("schema_version").get<int>() != kSchemaVersion) {
      throw UsageError(what + ": unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
    }
  }
}

std::uint64_t derive_seed(std::uint64_t suite_seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(suite_seed) ^ a) ^ b);
}

// ---------------------------------------------------------------------------
// gen

GenConfig gen_config_from_json(const json& j) {
  const std::string what = "gen config";
  check_schema(j, what);
  reject_unknown(j,
                 {"schema_version", "kind", "d", "edges", "mechanism", "n", "seed", "coef_low", "coef_high",
                  "lengthscale", "hidden", "noise_sigma"},
                 what);
  GenConfig c;
  read(j, "d", c.d, what);
  read(j, "edges", c.edges, what);
  read(j, "mechanism", c.mechanism, what);
  read(j, "n", c.n, what);
  read(j, "seed", c.seed, what);
  read(j, "coef_low", c.coef_low, what);
  read(j, "coef_high", c.coef_high, what);
  read(j, "lengthscale", c.lengthscale, what);
  read(j, "hidden", c.hidden, what);
  read(j, "noise_sigma", c.noise_sigma, what);
  if (c.mechanism != "linear" && c.mechanism != "gp" && c.mechanism != "mlp") {
    throw UsageError(what + ": mechanism must be linear, gp or mlp");
  }
  if (c.d < 2 || c.n < 1) throw UsageError(what + ": need d >= 2 and n >= 1");
  return c;
}

json to_json(const GenConfig& c) {
  return {{"schema_version", kSchemaVersion},
          {"kind", "gen"},
          {"d", c.d},
          {"edges", c.edges},
          {"mechanism", c.mechanism},
          {"n", c.n},
          {"seed", c.seed},
          {"coef_low", c.coef_low},
          {"coef_high", c.coef_high},
          {"lengthscale", c.lengthscale},
          {"hidden", c.hidden},
          {"noise_sigma", c.noise_sigma}};
}

Generated generate(const GenConfig& c) {
  Rng rng(c.seed);
  Generated g;
  g.truth = sample_er_dag(c.d, c.edges, rng);
  const NoiseSpec noise{c.noise_sigma};
  if (c.mechanism == "linear") {
    g.sem = sample_linear_sem(g.truth, c.coef_low, c.coef_high, rng, noise);
  } else if (c.mechanism == "gp") {
    g.sem = make_gp_additive_sem(g.truth, c.lengthscale, noise);
  } else {
    g.sem = sample_random_mlp_sem(g.truth, c.hidden, rng, noise, c.coef_low, c.coef_high);
  }
  g.data = simulate(g.sem, c.n, rng);
  g.data.seed = c.seed;
  return g;
}

// ---------------------------------------------------------------------------
// fit

bool known_method(const std::string& m) { return m == "dagma-dce" || m == "dagma" || m == "linear-dce"; }

FitConfig fit_config_from_json(const json& j, const std::optional<std::string>& method) {
  const std::string what = "fit config";
  check_schema(j, what);
  reject_unknown(j, {"schema_version", "kind", "method", "model", "solver", "pretrain", "standardize", "seed"},
                 what);
  FitConfig c;
  read(j, "method", c.method, what);
  if (method) c.method = *method;
  if (!known_method(c.method)) {
    throw UsageError("unknown method '" + c.method + "' (expected dagma-dce, dagma or linear-dce)");
  }
  if (c.method == "linear-dce") c.model.family = "linear";

  if (j.contains("model")) {
    const json& m = j.at("model");
    reject_unknown(m, {"family", "hidden", "activation", "bias", "lengthscale", "ridge"}, "model config");
    read(m, "family", c.model.family, "model config");
    read(m, "hidden", c.model.hidden, "model config");
    read(m, "activation", c.model.activation, "model config");
    read(m, "bias", c.model.bias, "model config");
    read(m, "lengthscale", c.model.lengthscale, "model config");
    read(m, "ridge", c.model.ridge, "model config");
  }
  const auto& f = c.model.family;
  if (f != "mlp" && f != "linear" && f != "kernel_ridge") {
    throw UsageError("model config: family must be mlp, linear or kernel_ridge");
  }
  if (c.model.activation != "sigmoid" && c.model.activation != "relu") {
    throw UsageError("model config: activation must be sigmoid or relu");
  }
  if (c.method == "dagma" && f != "mlp") throw UsageError("method dagma needs an mlp model");
  if (c.method == "linear-dce" && f != "linear") throw UsageError("method linear-dce needs a linear model");
  if (c.method == "dagma-dce" && f == "linear") throw UsageError("use method linear-dce for a linear model");

  const CentralPathConfig defaults =
      c.method == "dagma" ? CentralPathConfig::baseline_defaults() : CentralPathConfig::dce_defaults();
  try {
    c.solver = central_path_config_from_json(j.value("solver", json::object()), defaults);
    c.pretrain = central_path_config_from_json(j.value("pretrain", json::object()),
                                               CentralPathConfig::baseline_defaults());
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  } catch (const json::exception& e) {
    throw UsageError(std::string("solver config: ") + e.what());
  }
  read(j, "standardize", c.standardize, what);
  read(j, "seed", c.seed, what);
  return c;
}

json to_json(const FitConfig& c) {
  json model = {{"family", c.model.family}};
  if (c.model.family == "mlp") {
    model["hidden"] = c.model.hidden;
    model["activation"] = c.model.activation;
    model["bias"] = c.model.bias;
  } else if (c.model.family == "kernel_ridge") {
    model["lengthscale"] = c.model.lengthscale;
    model["ridge"] = c.model.ridge;
  }
  json j = {{"schema_version", kSchemaVersion},
            {"kind", "fit"},
            {"method", c.method},
            {"model", model},
            {"solver", to_json(c.solver)},
            {"standardize", c.standardize},
            {"seed", c.seed}};
  if (c.method == "dagma-dce" && c.solver.pretrain) j["pretrain"] = to_json(c.pretrain);
  return j;
}

DiscoveryResult run_fit(const Eigen::MatrixXd& raw, const FitConfig& c) {
  const Eigen::MatrixXd x = c.standardize ? standardize(raw) : raw;
  const int d = static_cast<int>(x.cols());
  if (d < 1) throw ParameterError("fit: dataset has no columns");
  if (c.model.family == "linear") {
    return fit_dagma_dce(x, LinearSemModel(d), c.solver, c.pretrain);
  }
  if (c.model.family == "kernel_ridge") {
    const KernelRidgeSemModel model = KernelRidgeSemModel::fit(x, c.model.lengthscale, c.model.ridge);
    return fit_dagma_dce(x, model, c.solver, c.pretrain);
  }
  MlpSemModel model(d, {c.model.hidden, c.model.activation == "relu" ? Activation::Relu : Activation::Sigmoid,
                        c.model.bias});
  Rng rng(c.seed);
  model.initialize(rng, c.solver.init_scale);
  if (c.method == "dagma") return fit_dagma_baseline(x, model, c.solver);
  return fit_dagma_dce(x, model, c.solver, c.pretrain);
}

json result_to_json(const DiscoveryResult& r, const FitConfig& c) {
  const FeasibilityReport& f = r.final_feasibility;
  json j = {{"schema_version", kSchemaVersion},
            {"kind", "result"},
            {"method", r.method},
            {"d", r.adjacency.rows()},
            {"adjacency", matrix_to_json(r.adjacency)},
            {"first_layer_adjacency",
             r.first_layer_adjacency ? matrix_to_json(*r.first_layer_adjacency) : json(nullptr)},
            {"reported", r.first_layer_adjacency ? "first_layer_adjacency" : "adjacency"},
            {"iterations", r.iterations},
            {"feasibility_incidents", r.feasibility_incidents},
            {"aborted_stages", r.aborted_stages},
            {"final_s", r.final_s},
            {"final_feasibility",
             {{"feasible", f.feasible},
              {"pivots_positive", f.pivots_positive},
              {"spectral_radius", f.spectral_radius},
              {"rho_lower", f.rho_lower},
              {"rho_upper", f.rho_upper},
              {"failed_check", f.failed_check}}},
            {"config", to_json(c)},
            {"checkpoint", save_checkpoint(*r.model)}};
  return j;
}

}  // namespace dce::cli
