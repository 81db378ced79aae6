// dce: dataset generation, fitting, evaluation, benchmarks and lemma witnesses.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dagma_dce/error.hpp"
#include "dagma_dce/json_io.hpp"
#include "dagma_dce/lemmas.hpp"
#include "dagma_dce/metrics.hpp"
#include "dagma_dce/objective.hpp"
#include "run_config.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dce;
using namespace dce::cli;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kIo = 3, kSolver = 4, kPartial = 5 };

struct CommonOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out = ".";
};

int resolve_threads(const CommonOptions& o) {
  if (o.threads) {
    if (*o.threads < 1) throw UsageError("--threads must be >= 1");
    return *o.threads;
  }
  if (const char* env = std::getenv("DCE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw UsageError("DCE_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

std::vector<std::string> data_header(int d) {
  std::vector<std::string> h;
  for (int j = 0; j < d; ++j) h.push_back("x" + std::to_string(j));
  return h;
}

ThresholdScheme parse_scheme(const std::string& name, double cutoff) {
  if (name == "raw") return ThresholdScheme::raw(cutoff);
  if (name == "var") return ThresholdScheme::variance_normalized(cutoff);
  if (name == "colsum") return ThresholdScheme::column_sum_normalized(cutoff);
  throw UsageError("unknown threshold scheme '" + name + "' (expected raw, var or colsum)");
}

std::optional<Eigen::MatrixXd> linear_truth(const json& sem) {
  const json& mech = sem.at("mechanism");
  if (mech.at("type") != "linear") return std::nullopt;
  return matrix_from_json(mech.at("coefficients"), "sem coefficients").cwiseAbs();
}

// Adjacency a method reports: first-layer norms for the baseline, otherwise the DCE adjacency.
WeightedAdjacency reported_from_json(const json& j) {
  if (j.contains("weights")) return weighted_from_json(j);
  if (!j.contains("adjacency")) throw IoError("result: neither 'weights' nor 'adjacency' present");
  const std::string which = j.value("reported", std::string("adjacency"));
  if (!j.contains(which) || j.at(which).is_null()) throw IoError("result: missing '" + which + "'");
  return matrix_from_json(j.at(which), "result " + which);
}

// ---------------------------------------------------------------------------
// gen

int cmd_gen(const std::string& config_path, const CommonOptions& o) {
  GenConfig c = gen_config_from_json(read_json_file(config_path));
  if (o.seed) c.seed = *o.seed;
  const Generated g = generate(c);
  const fs::path out = ensure_dir(o.out);
  write_csv_matrix((out / "data.csv").string(), g.data.x, data_header(c.d));
  json sem = to_json(g.sem);
  sem["sem_hash"] = g.data.sem_hash;
  sem["config"] = to_json(c);
  write_json_file((out / "sem.json").string(), sem);
  write_json_file((out / "truth.json").string(), to_json(g.truth));
  std::cerr << "wrote " << c.n << " x " << c.d << " " << c.mechanism << " dataset to " << out.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// fit

int cmd_fit(const std::string& data_path, const std::string& config_path, const std::string& method,
            bool standardize_flag, const CommonOptions& o) {
  const json cfg_json = config_path.empty() ? json::object() : read_json_file(config_path);
  FitConfig c = fit_config_from_json(cfg_json, method.empty() ? std::nullopt : std::optional(method));
  if (o.seed) c.seed = *o.seed;
  if (standardize_flag) c.standardize = true;
  const Eigen::MatrixXd x = read_csv_matrix(data_path);
  const DiscoveryResult r = run_fit(x, c);

  const fs::path out = ensure_dir(o.out);
  write_json_file((out / "result.json").string(), result_to_json(r, c));
  write_json_file((out / "adjacency.json").string(), weighted_to_json(r.reported_adjacency()));
  std::string trace;
  for (const auto& t : r.trace) trace += to_json(t).dump() + "\n";
  write_text_file((out / "trace.jsonl").string(), trace);
  write_json_file((out / "timing.json").string(), {{"wall_time_s", r.wall_time_s}});
  std::cerr << c.method << ": " << r.iterations << " iterations, " << r.wall_time_s << " s\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const std::string& result_path, const std::string& truth_path, double cutoff,
             const std::string& scheme_name, const std::string& data_path, const std::string& sem_path,
             const CommonOptions& o) {
  const ThresholdScheme scheme = parse_scheme(scheme_name, cutoff);
  if (scheme.kind == ThresholdScheme::Kind::VarianceNormalized && data_path.empty()) {
    throw UsageError("--scheme var needs --data for the column variances");
  }
  const WeightedAdjacency a = reported_from_json(read_json_file(result_path));
  const BinaryDag truth = graph_from_json(read_json_file(truth_path));
  if (a.rows() != truth.d()) {
    throw UsageError("shape mismatch: adjacency is " + std::to_string(a.rows()) + " x " +
                     std::to_string(a.cols()) + ", truth has d = " + std::to_string(truth.d()));
  }
  std::optional<Eigen::VectorXd> variances;
  if (!data_path.empty()) variances = column_variances(read_csv_matrix(data_path));
  const BinaryDag est = threshold(a, scheme, variances);
  MetricsReport m = evaluate_graph(est, truth);
  if (!sem_path.empty()) {
    if (const auto b = linear_truth(read_json_file(sem_path))) m.frobenius_to_truth = frobenius_diff(a, *b);
  }
  const fs::path out = ensure_dir(o.out);
  json report = to_json(m);
  report["threshold"] = {{"scheme", scheme_name}, {"cutoff", cutoff}};
  write_json_file((out / "metrics.json").string(), report);
  write_text_file((out / "metrics.csv").string(), metrics_csv_header() + "\n" + to_csv_row(m) + "\n");
  write_json_file((out / "graph.json").string(), to_json(est));
  std::cout << report.dump() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchSuite {
  std::vector<int> d;
  double edges_per_node = 4.0;
  GenConfig gen;
  int trials = 10;
  std::uint64_t seed = 0;
  std::map<std::string, FitConfig> methods;  // ordered by name
  std::string scheme = "raw";
  double threshold = 0.25;
  json resolved;
};

BenchSuite bench_suite_from_json(const json& j, const CommonOptions& o, const std::optional<double>& cutoff,
                                 const std::optional<std::string>& scheme, bool standardize_flag) {
  check_schema(j, "bench config");
  for (const auto& item : j.items()) {
    static const std::set<std::string> known{"schema_version", "kind", "name", "d", "edges_per_node", "mechanism",
                                             "n", "trials", "seed", "gen", "methods", "threshold", "scheme"};
    if (!known.count(item.key())) throw UsageError("bench config: unknown key '" + item.key() + "'");
  }
  BenchSuite s;
  try {
    s.d = j.at("d").get<std::vector<int>>();
    s.trials = j.value("trials", 10);
    s.edges_per_node = j.value("edges_per_node", 4.0);
    s.seed = j.value("seed", std::uint64_t{0});
    s.threshold = j.value("threshold", 0.25);
    s.scheme = j.value("scheme", std::string("raw"));
  } catch (const json::exception& e) {
    throw UsageError(std::string("bench config: ") + e.what());
  }
  if (o.seed) s.seed = *o.seed;
  if (cutoff) s.threshold = *cutoff;
  if (scheme) s.scheme = *scheme;
  (void)parse_scheme(s.scheme, s.threshold);

  json gen = j.value("gen", json::object());
  gen["mechanism"] = j.value("mechanism", std::string("mlp"));
  gen["n"] = j.value("n", 1000);
  gen["d"] = 2;  // placeholder, set per trial
  s.gen = gen_config_from_json(gen);

  const json methods = j.value("methods", json::array());
  if (methods.is_array()) {
    for (const auto& m : methods) s.methods[m.get<std::string>()] = fit_config_from_json(json::object(), m.get<std::string>());
  } else if (methods.is_object()) {
    for (const auto& item : methods.items()) s.methods[item.key()] = fit_config_from_json(item.value(), item.key());
  } else {
    throw UsageError("bench config: 'methods' must be an array or object");
  }
  if (standardize_flag)
    for (auto& [name, fc] : s.methods) fc.standardize = true;
  if (s.d.empty() || s.trials < 1 || s.methods.empty()) {
    throw UsageError("empty bench suite: need at least one d, one trial and one method");
  }
  for (int d : s.d) {
    if (d < 2) throw UsageError("bench config: every d must be >= 2");
  }

  json resolved_methods = json::object();
  for (const auto& [name, fc] : s.methods) resolved_methods[name] = to_json(fc);
  json resolved_gen = to_json(s.gen);
  for (const char* k : {"schema_version", "kind", "d", "edges", "seed", "n", "mechanism"}) resolved_gen.erase(k);
  s.resolved = {{"schema_version", kSchemaVersion},
                {"kind", "bench"},
                {"name", j.value("name", std::string("bench"))},
                {"d", s.d},
                {"edges_per_node", s.edges_per_node},
                {"mechanism", s.gen.mechanism},
                {"n", s.gen.n},
                {"trials", s.trials},
                {"seed", s.seed},
                {"gen", resolved_gen},
                {"methods", resolved_methods},
                {"threshold", s.threshold},
                {"scheme", s.scheme}};
  return s;
}

struct MethodOutcome {
  bool ok = false;
  std::string error;
  MetricsReport metrics;
  WeightedAdjacency reported;
  WeightedAdjacency dce_adjacency;
  double wall_time_s = 0.0;
};

struct TrialOutcome {
  int d = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  std::string gen_error;
  std::map<std::string, MethodOutcome> methods;
  std::optional<double> tau_b;
  std::optional<double> rho;
};

TrialOutcome run_trial(const BenchSuite& s, int d, int trial, const fs::path& dir) {
  TrialOutcome t;
  t.d = d;
  t.trial = trial;
  t.seed = derive_seed(s.seed, static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(trial));
  GenConfig gc = s.gen;
  gc.d = d;
  gc.edges = s.edges_per_node * d;
  gc.seed = t.seed;
  Generated g;
  try {
    g = generate(gc);
  } catch (const std::exception& e) {
    t.gen_error = e.what();
    return t;
  }
  fs::create_directories(dir);
  write_json_file((dir / "truth.json").string(), to_json(g.truth));
  json sem = to_json(g.sem);
  sem["config"] = to_json(gc);
  write_json_file((dir / "sem.json").string(), sem);
  write_csv_matrix((dir / "data.csv").string(), g.data.x, data_header(d));
  std::optional<Eigen::MatrixXd> b;
  if (const auto* lin = std::get_if<LinearMechanism>(&g.sem.mechanism)) b = lin->coefficients.cwiseAbs();

  const ThresholdScheme scheme = parse_scheme(s.scheme, s.threshold);
  json timing = json::object();
  for (const auto& [name, base] : s.methods) {
    MethodOutcome mo;
    FitConfig fc = base;
    fc.seed = derive_seed(t.seed, 0x6d6f64656cULL, 0);
    const fs::path mdir = dir / name;
    try {
      fs::create_directories(mdir);
      const DiscoveryResult r = run_fit(g.data.x, fc);
      mo.reported = r.reported_adjacency();
      mo.dce_adjacency = r.adjacency;
      mo.wall_time_s = r.wall_time_s;
      const Eigen::MatrixXd& fit_x = fc.standardize ? standardize(g.data.x) : g.data.x;
      const BinaryDag est = threshold(mo.reported, scheme, column_variances(fit_x));
      mo.metrics = evaluate_graph(est, g.truth);
      if (b) mo.metrics.frobenius_to_truth = frobenius_diff(mo.reported, *b);
      mo.ok = true;
      write_json_file((mdir / "result.json").string(), result_to_json(r, fc));
      write_json_file((mdir / "graph.json").string(), to_json(est));
      timing[name] = r.wall_time_s;
      if (b) {
        write_text_file((mdir / "heatmap.svg").string(),
                        svg_heatmap(mo.reported, *b,
                                    name + ": |A_est| - |B| (d=" + std::to_string(d) + ", trial " +
                                        std::to_string(trial) + ")"));
      }
    } catch (const std::exception& e) {
      mo.error = e.what();
    }
    t.methods[name] = std::move(mo);
  }

  const auto base = t.methods.find("dagma");
  const auto dce = t.methods.find("dagma-dce");
  if (base != t.methods.end() && dce != t.methods.end() && base->second.ok && dce->second.ok) {
    t.tau_b = kendall_tau_b(base->second.reported, dce->second.reported);
    t.rho = spearman_rho(base->second.reported, dce->second.reported);
    for (auto* mo : {&base->second, &dce->second}) {
      mo->metrics.kendall_tau_b = t.tau_b;
      mo->metrics.spearman_rho = t.rho;
    }
  }
  for (const auto& [name, mo] : t.methods) {
    if (mo.ok) write_json_file((dir / name / "metrics.json").string(), to_json(mo.metrics));
  }
  write_json_file((dir / "timing.json").string(), timing);
  return t;
}

std::string csv_escape(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += (c == '\n' ? ' ' : c);
  }
  return out + "\"";
}

int cmd_bench(const std::string& config_path, const std::optional<double>& cutoff,
              const std::optional<std::string>& scheme, bool standardize_flag, const CommonOptions& o) {
  const BenchSuite s = bench_suite_from_json(read_json_file(config_path), o, cutoff, scheme, standardize_flag);
  const int threads = resolve_threads(o);
  const fs::path out = ensure_dir(o.out);
  write_json_file((out / "suite.json").string(), s.resolved);

  std::vector<std::pair<int, int>> tasks;
  for (int d : s.d)
    for (int t = 0; t < s.trials; ++t) tasks.emplace_back(d, t);
  std::vector<TrialOutcome> outcomes(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&]() {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      const auto [d, t] = tasks[k];
      char name[48];
      std::snprintf(name, sizeof(name), "d%d_t%03d", d, t);
      outcomes[k] = run_trial(s, d, t, out / "trials" / name);
      std::lock_guard<std::mutex> lock(log_mutex);
      std::cerr << "trial " << name << " done\n";
    }
  };
  std::vector<std::thread> pool;
  const int n_workers = std::min<int>(threads, static_cast<int>(tasks.size()));
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  // Aggregation, in task order.
  std::string csv = "d,trial,seed,method,status,error," + metrics_csv_header() + "\n";
  std::string timing_csv = "d,trial,method,wall_time_s\n";
  bool any_failed = false;
  json groups = json::array();
  json timing_groups = json::array();
  json rank = json::array();
  std::vector<BoxPanel> panels{{"SID", {}}, {"SHD", {}}, {"F1", {}}};
  BoxPanel minutes_panel{"minutes", {}};
  std::string table = "| d | n | Kendall tau-b | Spearman rho |\n|---|---|---|---|\n";

  for (int d : s.d) {
    std::vector<double> taus, rhos;
    for (const auto& [name, fc] : s.methods) {
      std::vector<double> shd_v, sid_v, f1_v, prec_v, rec_v, fm_v, frob_v, minutes_v;
      int ok = 0, failed = 0;
      for (const auto& t : outcomes) {
        if (t.d != d) continue;
        const std::string prefix = std::to_string(d) + "," + std::to_string(t.trial) + "," +
                                   std::to_string(t.seed) + "," + name + ",";
        if (!t.gen_error.empty()) {
          csv += prefix + "failed," + csv_escape("generation: " + t.gen_error) + ",,,,,,,,,,,,\n";
          ++failed;
          continue;
        }
        const MethodOutcome& mo = t.methods.at(name);
        if (!mo.ok) {
          csv += prefix + "failed," + csv_escape(mo.error) + ",,,,,,,,,,,,\n";
          ++failed;
          continue;
        }
        ++ok;
        csv += prefix + "ok,," + to_csv_row(mo.metrics) + "\n";
        timing_csv += std::to_string(d) + "," + std::to_string(t.trial) + "," + name + "," +
                      format_double(mo.wall_time_s) + "\n";
        shd_v.push_back(mo.metrics.shd);
        sid_v.push_back(mo.metrics.sid);
        f1_v.push_back(mo.metrics.f1);
        prec_v.push_back(mo.metrics.precision);
        rec_v.push_back(mo.metrics.recall);
        fm_v.push_back(mo.metrics.fm_index);
        if (mo.metrics.frobenius_to_truth) frob_v.push_back(*mo.metrics.frobenius_to_truth);
        minutes_v.push_back(mo.wall_time_s / 60.0);
      }
      any_failed = any_failed || failed > 0;
      json metrics = {{"shd", to_json(box_stats(shd_v))},
                      {"sid", to_json(box_stats(sid_v))},
                      {"f1", to_json(box_stats(f1_v))},
                      {"precision", to_json(box_stats(prec_v))},
                      {"recall", to_json(box_stats(rec_v))},
                      {"fm_index", to_json(box_stats(fm_v))}};
      if (!frob_v.empty()) metrics["frobenius_to_truth"] = to_json(box_stats(frob_v));
      groups.push_back({{"d", d}, {"method", name}, {"succeeded", ok}, {"failed", failed}, {"metrics", metrics}});
      timing_groups.push_back({{"d", d}, {"method", name}, {"minutes", to_json(box_stats(minutes_v))}});
      const std::string label = name + " d=" + std::to_string(d);
      panels[0].boxes.push_back({label, box_stats(sid_v)});
      panels[1].boxes.push_back({label, box_stats(shd_v)});
      panels[2].boxes.push_back({label, box_stats(f1_v)});
      minutes_panel.boxes.push_back({label, box_stats(minutes_v)});
    }
    for (const auto& t : outcomes) {
      if (t.d != d) continue;
      if (t.tau_b) taus.push_back(*t.tau_b);
      if (t.rho) rhos.push_back(*t.rho);
    }
    if (!taus.empty() || !rhos.empty()) {
      const BoxStats bt = box_stats(taus), br = box_stats(rhos);
      rank.push_back({{"d", d},
                      {"kendall_tau_b", to_json(bt)},
                      {"spearman_rho", to_json(br)},
                      {"summary", {{"kendall_tau_b", format_mean_std(bt)}, {"spearman_rho", format_mean_std(br)}}},
                      {"per_trial", {{"kendall_tau_b", taus}, {"spearman_rho", rhos}}}});
      table += "| " + std::to_string(d) + " | " + std::to_string(taus.size()) + " | " + format_mean_std(bt) +
               " | " + format_mean_std(br) + " |\n";
    }
  }

  write_text_file((out / "trials.csv").string(), csv);
  write_text_file((out / "timing_trials.csv").string(), timing_csv);
  write_json_file((out / "aggregate.json").string(),
                  {{"suite", s.resolved}, {"groups", groups}, {"rank_correlation", rank}});
  write_json_file((out / "timing_aggregate.json").string(), {{"groups", timing_groups}});
  write_text_file((out / "boxplots.svg").string(), svg_box_panels(panels));
  std::vector<BoxPanel> four = panels;
  four.push_back(minutes_panel);
  write_text_file((out / "timing_boxplots.svg").string(), svg_box_panels(four));
  if (!rank.empty()) write_text_file((out / "rank_correlation.md").string(), table);
  std::cerr << "bench finished: " << tasks.size() << " trials" << (any_failed ? " (with failures)" : "") << "\n";
  return any_failed ? kPartial : kOk;
}

// ---------------------------------------------------------------------------
// lemma

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--s: cannot parse '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError("--s: empty grid");
  return out;
}

int cmd_lemma(double eps, double delta, const std::string& grid, int d, int hidden, const CommonOptions& o) {
  const EdgeWitness w = construct_lemma1_mlp(eps, delta, 0, d, hidden);
  json report = {{"eps", eps},
                 {"delta", delta},
                 {"first_layer_norm", w.first_layer_norm},
                 {"dce_entry", w.dce_entry},
                 {"input", w.input},
                 {"output", w.output},
                 {"holds", w.first_layer_norm < eps && w.dce_entry > delta}};

  MlpSemModel relu(d, {hidden, Activation::Relu, true});
  Rng rng(o.seed.value_or(0));
  std::normal_distribution<double> normal;
  relu.set_params(Eigen::VectorXd::NullaryExpr(relu.num_params(), [&]() { return normal(rng); }));
  Eigen::MatrixXd x(1000, d);
  for (Eigen::Index c = 0; c < d; ++c)
    for (Eigen::Index r = 0; r < 1000; ++r) x(r, c) = normal(rng);
  const Eigen::MatrixXd f0 = relu.forward(x);
  const WeightedAdjacency a0 = dce_adjacency(relu.jacobian_batch(x));
  json rescaled = json::array();
  for (double s : parse_grid(grid)) {
    const MlpSemModel r = rescale_relu_mlp(relu, s, 0, 1);
    rescaled.push_back({{"s", s},
                        {"first_layer_norm", first_layer_norms(r)(0, 1)},
                        {"dce_entry", dce_adjacency(r.jacobian_batch(x))(0, 1)},
                        {"max_output_change", (r.forward(x) - f0).cwiseAbs().maxCoeff()},
                        {"max_dce_adjacency_change", (dce_adjacency(r.jacobian_batch(x)) - a0).cwiseAbs().maxCoeff()}});
  }
  report["rescaling"] = {{"input", 0}, {"output", 1}, {"original_first_layer_norm", first_layer_norms(relu)(0, 1)},
                         {"grid", rescaled}};
  const fs::path out = ensure_dir(o.out);
  write_json_file((out / "lemma.json").string(), report);
  std::cout << report.dump(2) << "\n";
  return kOk;
}

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--seed", o.seed, "Seed override (U64)");
  sub->add_option("--threads", o.threads, "Worker cap (falls back to DCE_THREADS)");
  sub->add_option("--out", o.out, "Output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dce: causal discovery with differential causal effects"};
  app.require_subcommand(1);
  CommonOptions common;

  std::string config, data, method, result, truth, scheme = "raw", sem, grid = "1e-3,1,1e3";
  double cutoff = 0.25, eps = 1e-3, delta = 10.0;
  int lemma_d = 2, lemma_hidden = 8;
  bool standardize_flag = false;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
  gen->add_option("--config", config, "Generation config (JSON)")->required();
  add_common(gen, common);

  auto* fit = app.add_subcommand("fit", "Fit a causal model to a dataset");
  fit->add_option("--data", data, "Dataset CSV")->required();
  fit->add_option("--config", config, "Fit config (JSON)");
  fit->add_option("--method", method, "dagma-dce | dagma | linear-dce");
  fit->add_flag("--standardize", standardize_flag, "Standardize columns before fitting");
  add_common(fit, common);

  auto* eval = app.add_subcommand("eval", "Threshold a result and compute metrics");
  eval->add_option("--result", result, "result.json or weighted adjacency JSON")->required();
  eval->add_option("--truth", truth, "Ground-truth graph JSON")->required();
  eval->add_option("--threshold", cutoff, "Threshold cutoff")->capture_default_str();
  eval->add_option("--scheme", scheme, "raw | var | colsum")->capture_default_str();
  eval->add_option("--data", data, "Dataset CSV (needed by --scheme var)");
  eval->add_option("--sem", sem, "SEM JSON; linear coefficients give frobenius_to_truth");
  add_common(eval, common);

  std::optional<double> bench_cutoff;
  std::optional<std::string> bench_scheme;
  auto* bench = app.add_subcommand("bench", "Run a benchmark suite");
  bench->add_option("--config", config, "Suite config (JSON)")->required();
  bench->add_option("--threshold", bench_cutoff, "Threshold cutoff override");
  bench->add_option("--scheme", bench_scheme, "Threshold scheme override");
  bench->add_flag("--standardize", standardize_flag, "Standardize every dataset before fitting");
  add_common(bench, common);

  auto* lemma = app.add_subcommand("lemma", "Print first-layer-norm vs DCE witnesses");
  lemma->add_option("--eps", eps, "First-layer norm bound")->capture_default_str();
  lemma->add_option("--delta", delta, "Derivative norm target")->capture_default_str();
  lemma->add_option("--s", grid, "Comma-separated rescaling targets")->capture_default_str();
  lemma->add_option("--d", lemma_d, "Number of nodes")->capture_default_str();
  lemma->add_option("--hidden", lemma_hidden, "Hidden units")->capture_default_str();
  add_common(lemma, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (common.threads && *common.threads < 1) throw UsageError("--threads must be >= 1");
    if (*gen) return cmd_gen(config, common);
    if (*fit) return cmd_fit(data, config, method, standardize_flag, common);
    if (*eval) return cmd_eval(result, truth, cutoff, scheme, data, sem, common);
    if (*bench) return cmd_bench(config, bench_cutoff, bench_scheme, standardize_flag, common);
    if (*lemma) return cmd_lemma(eps, delta, grid, lemma_d, lemma_hidden, common);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParameterError& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kUsage;
  } catch (const UnsupportedModelError& e) {
    std::cerr << "unsupported: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIo;
  } catch (const std::runtime_error& e) {
    // SolverError, FeasibilityError, NumericError, SimulationError
    std::cerr << "solver error: " << e.what() << "\n";
    return kSolver;
  }
  return kUsage;
}
