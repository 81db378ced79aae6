#include "dagma_dce/solver.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "dagma_dce/error.hpp"
#include "dagma_dce/runtime.hpp"

namespace dce {

using nlohmann::json;

void adam_step(Eigen::VectorXd& theta, AdamState& state, const Eigen::VectorXd& gradient,
               double lr, const AdamParams& p) {
  if (state.m.size() != theta.size()) state = AdamState(theta.size());
  ++state.step;
  state.m = p.beta1 * state.m + (1.0 - p.beta1) * gradient;
  state.v = p.beta2 * state.v + (1.0 - p.beta2) * gradient.cwiseAbs2();
  const double bc1 = 1.0 - std::pow(p.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(p.beta2, static_cast<double>(state.step));
  theta.array() -= lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + p.eps);
}

// ---------------------------------------------------------------------------
// Config

void CentralPathConfig::validate() const {
  if (s_schedule.empty()) throw ParameterError("central path: s_schedule must be non-empty");
  for (double s : s_schedule)
    if (!(s > 0.0)) throw ParameterError("central path: every s must be positive");
  if (!(mu_init > 0.0)) throw ParameterError("central path: mu_init must be positive");
  if (!(mu_decay > 0.0 && mu_decay < 1.0)) throw ParameterError("central path: mu_decay must be in (0, 1)");
  if (!(lr > 0.0)) throw ParameterError("central path: lr must be positive");
  if (!(lr_stage_decay > 0.0 && lr_stage_decay <= 1.0)) {
    throw ParameterError("central path: lr_stage_decay must be in (0, 1]");
  }
  if (max_iters_per_stage < 0) throw ParameterError("central path: max_iters_per_stage must be >= 0");
  if (lambda1 < 0.0 || lambda2 < 0.0) throw ParameterError("central path: penalties must be >= 0");
  if (max_halvings < 0) throw ParameterError("central path: max_halvings must be >= 0");
  if (stop_window < 1) throw ParameterError("central path: stop_window must be >= 1");
}

CentralPathConfig CentralPathConfig::baseline_defaults() {
  CentralPathConfig c;
  c.lambda1 = 0.02;
  c.lambda2 = 0.005;
  c.max_iters_per_stage = 7000;
  return c;
}

CentralPathConfig CentralPathConfig::dce_defaults() { return CentralPathConfig{}; }

json to_json(const CentralPathConfig& c) {
  return {{"T", c.stages()},
          {"mu_init", c.mu_init},
          {"mu_decay", c.mu_decay},
          {"s_schedule", c.s_schedule},
          {"lr", c.lr},
          {"lr_stage_decay", c.lr_stage_decay},
          {"adam_beta1", c.adam.beta1},
          {"adam_beta2", c.adam.beta2},
          {"adam_eps", c.adam.eps},
          {"max_iters_per_stage", c.max_iters_per_stage},
          {"checkpoint_every", c.checkpoint_every},
          {"trace_every", c.trace_every},
          {"lambda1", c.lambda1},
          {"lambda2", c.lambda2},
          {"pretrain", c.pretrain},
          {"seed", c.seed},
          {"init_scale", c.init_scale},
          {"max_halvings", c.max_halvings},
          {"stop_tolerance", c.stop_tolerance},
          {"stop_window", c.stop_window}};
}

CentralPathConfig central_path_config_from_json(const json& j, const CentralPathConfig& defaults) {
  CentralPathConfig c = defaults;
  if (!j.is_object()) throw ParameterError("central path config must be a JSON object");
  static const char* known[] = {"T",          "mu_init",       "mu_decay",       "s_schedule",
                                "lr",         "lr_stage_decay", "adam_beta1",    "adam_beta2",     "adam_eps",
                                "max_iters_per_stage", "checkpoint_every", "trace_every",
                                "lambda1",    "lambda2",       "pretrain",       "seed",
                                "init_scale", "max_halvings",  "stop_tolerance", "stop_window"};
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || item.key() == k;
    if (!ok) throw ParameterError("central path config: unknown key '" + item.key() + "'");
  }
  auto read = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  read("mu_init", c.mu_init);
  read("mu_decay", c.mu_decay);
  read("s_schedule", c.s_schedule);
  read("lr", c.lr);
  read("lr_stage_decay", c.lr_stage_decay);
  read("adam_beta1", c.adam.beta1);
  read("adam_beta2", c.adam.beta2);
  read("adam_eps", c.adam.eps);
  read("max_iters_per_stage", c.max_iters_per_stage);
  read("checkpoint_every", c.checkpoint_every);
  read("trace_every", c.trace_every);
  read("lambda1", c.lambda1);
  read("lambda2", c.lambda2);
  read("pretrain", c.pretrain);
  read("seed", c.seed);
  read("init_scale", c.init_scale);
  read("max_halvings", c.max_halvings);
  read("stop_tolerance", c.stop_tolerance);
  read("stop_window", c.stop_window);
  if (j.contains("T")) {
    const int t = j.at("T").get<int>();
    if (t != c.stages()) {
      throw ParameterError("central path config: T = " + std::to_string(t) +
                           " does not match s_schedule length " + std::to_string(c.stages()));
    }
  }
  c.validate();
  return c;
}

json to_json(const TraceRecord& r) {
  json j = to_json(r.score);
  j["stage"] = r.stage;
  j["iteration"] = r.iteration;
  j["lr"] = r.lr;
  j["s"] = r.s;
  return j;
}

// ---------------------------------------------------------------------------
// Central path

namespace {

using Evaluator = std::function<ObjectiveEvaluation(const SemModel&, const ObjectiveWeights&)>;

struct PathOutcome {
  std::vector<TraceRecord> trace;
  int incidents = 0;
  int aborted = 0;
  int iterations = 0;
  double final_s = 1.0;
};

constexpr int kMaxConsecutiveExhaustions = 10;

PathOutcome run_central_path(SemModel& model, const CentralPathConfig& cfg, int stages,
                             const Evaluator& evaluate, const CheckpointCallback& on_checkpoint) {
  PathOutcome out;
  double mu = cfg.mu_init;
  double prev_s = cfg.s_schedule.front();
  int consecutive_exhaustions = 0;

  {
    const ObjectiveEvaluation first = evaluate(model, {cfg.lambda1, cfg.lambda2, mu, prev_s});
    if (!first.feasible) {
      throw FeasibilityError("initial parameters lie outside the M-matrix domain for s = " +
                             std::to_string(prev_s) + " (" + first.feasibility.failed_check +
                             " check)");
    }
  }

  for (int stage = 0; stage < stages; ++stage) {
    ObjectiveWeights w{cfg.lambda1, cfg.lambda2, mu, cfg.s_schedule[stage]};
    ObjectiveEvaluation current = evaluate(model, w);
    if (!current.feasible) {
      // A smaller s shrinks the domain; keep the last s the iterate is feasible for.
      ++out.incidents;
      w.s = prev_s;
      current = evaluate(model, w);
      if (!current.feasible) throw SolverError("stage start lost feasibility");
    }
    prev_s = w.s;
    out.final_s = w.s;

    double lr = cfg.lr * std::pow(cfg.lr_stage_decay, stage);
    int halvings = 0;
    bool exhausted = false;
    AdamState adam(model.num_params());
    std::vector<double> totals{current.score.total};
    out.trace.push_back({stage, 0, lr, w.s, current.score});

    int accepted = 0;
    for (int it = 1; it <= cfg.max_iters_per_stage; ++it) {
      const Eigen::VectorXd saved = model.params();
      const AdamState saved_adam = adam;
      Eigen::VectorXd theta = saved;
      adam_step(theta, adam, current.gradient, lr, cfg.adam);
      model.set_params(theta);

      ObjectiveEvaluation next = evaluate(model, w);
      if (!next.feasible || !std::isfinite(next.score.total) || !next.gradient.allFinite()) {
        model.set_params(saved);
        adam = saved_adam;
        lr *= 0.5;
        ++out.incidents;
        if (++halvings > cfg.max_halvings) {
          exhausted = true;
          break;
        }
        continue;
      }
      current = std::move(next);
      ++accepted;
      ++out.iterations;
      totals.push_back(current.score.total);

      if (cfg.trace_every > 0 && accepted % cfg.trace_every == 0) {
        out.trace.push_back({stage, accepted, lr, w.s, current.score});
      }
      if (on_checkpoint && cfg.checkpoint_every > 0 && accepted % cfg.checkpoint_every == 0) {
        on_checkpoint(model, stage, accepted);
      }
      const auto n = static_cast<int>(totals.size());
      if (n > cfg.stop_window &&
          std::abs(totals[n - 1 - cfg.stop_window] - totals[n - 1]) < cfg.stop_tolerance) {
        break;
      }
    }
    if (out.trace.back().stage != stage || out.trace.back().iteration != accepted) {
      out.trace.push_back({stage, accepted, lr, w.s, current.score});
    }

    if (exhausted) {
      ++out.aborted;
      if (++consecutive_exhaustions >= kMaxConsecutiveExhaustions) {
        throw SolverError("step-size backoff exhausted in " + std::to_string(consecutive_exhaustions) +
                          " consecutive stages");
      }
    } else {
      consecutive_exhaustions = 0;
    }
    mu *= cfg.mu_decay;
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Evaluator dce_evaluator(const Eigen::MatrixXd& x) {
  return [&x](const SemModel& m, const ObjectiveWeights& w) {
    return try_evaluate_dce_objective(m, x, w);
  };
}

Evaluator baseline_evaluator(const Eigen::MatrixXd& x) {
  return [&x](const SemModel& m, const ObjectiveWeights& w) {
    return try_evaluate_baseline_objective(static_cast<const MlpSemModel&>(m), x, w);
  };
}

void check_data(const Eigen::MatrixXd& x, const SemModel& model) {
  configure_allocator();
  if (x.rows() < 1) throw ParameterError("fit: dataset has no samples");
  if (x.cols() != model.d()) throw ParameterError("fit: dataset width does not match model d");
  if (!x.allFinite()) throw ParameterError("fit: dataset contains non-finite values");
}

}  // namespace

MlpSemModel pretrain_dagma(const Eigen::MatrixXd& x, const MlpSemModel& model,
                           const CentralPathConfig& config, int* iterations) {
  config.validate();
  check_data(x, model);
  MlpSemModel work = model;
  const PathOutcome path = run_central_path(work, config, 1, baseline_evaluator(x), {});
  if (iterations) *iterations = path.iterations;
  return work;
}

DiscoveryResult fit_dagma_dce(const Eigen::MatrixXd& x, const SemModel& model,
                              const CentralPathConfig& config,
                              const CentralPathConfig& pretrain_config,
                              const CheckpointCallback& on_checkpoint) {
  config.validate();
  check_data(x, model);
  const auto start = std::chrono::steady_clock::now();

  DiscoveryResult result;
  result.method = "dagma-dce";
  result.model = model.clone();
  result.config = {{"solver", to_json(config)}, {"model", model.layout()}};

  int pretrain_iterations = 0;
  if (config.pretrain) {
    auto* mlp = dynamic_cast<MlpSemModel*>(result.model.get());
    if (!mlp) throw UnsupportedModelError("pre-training requires an MLP model");
    result.config["pretrain"] = to_json(pretrain_config);
    MlpSemModel warm = pretrain_dagma(x, *mlp, pretrain_config, &pretrain_iterations);
    const ObjectiveEvaluation probe = try_evaluate_dce_objective(
        warm, x, {config.lambda1, config.lambda2, config.mu_init, config.s_schedule.front()}, false);
    if (probe.feasible) {
      *mlp = std::move(warm);
    } else {
      // The baseline keeps first-layer norms feasible, not the Jacobian adjacency.
      ++result.feasibility_incidents;
    }
  }

  const PathOutcome path = run_central_path(*result.model, config, config.stages(),
                                            dce_evaluator(x), on_checkpoint);
  result.trace = path.trace;
  result.feasibility_incidents += path.incidents;
  result.aborted_stages = path.aborted;
  result.iterations = path.iterations + pretrain_iterations;
  result.final_s = path.final_s;
  result.adjacency = dce_adjacency(result.model->jacobian_batch(x));
  result.final_feasibility = check_feasible(result.adjacency, result.final_s);
  result.wall_time_s = seconds_since(start);
  return result;
}

DiscoveryResult fit_dagma_baseline(const Eigen::MatrixXd& x, const MlpSemModel& model,
                                   const CentralPathConfig& config,
                                   const CheckpointCallback& on_checkpoint) {
  config.validate();
  check_data(x, model);
  const auto start = std::chrono::steady_clock::now();

  DiscoveryResult result;
  result.method = "dagma";
  result.model = model.clone();
  result.config = {{"solver", to_json(config)}, {"model", model.layout()}};

  const PathOutcome path = run_central_path(*result.model, config, config.stages(),
                                            baseline_evaluator(x), on_checkpoint);
  result.trace = path.trace;
  result.feasibility_incidents = path.incidents;
  result.aborted_stages = path.aborted;
  result.iterations = path.iterations;
  result.final_s = path.final_s;
  result.first_layer_adjacency = first_layer_norms(*result.model);
  result.adjacency = dce_adjacency(result.model->jacobian_batch(x));
  result.final_feasibility = check_feasible(*result.first_layer_adjacency, result.final_s);
  result.wall_time_s = seconds_since(start);
  return result;
}

}  // namespace dce
