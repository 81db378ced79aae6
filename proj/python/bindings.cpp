#include <optional>
#include <string>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dagma_dce/acyclicity.hpp"
#include "dagma_dce/error.hpp"
#include "dagma_dce/graphs.hpp"
#include "dagma_dce/json_io.hpp"
#include "dagma_dce/lemmas.hpp"
#include "dagma_dce/metrics.hpp"
#include "run_config.hpp"

namespace py = pybind11;
using namespace dce;
using nlohmann::json;

namespace {

Eigen::MatrixXi to_matrix(const BinaryDag& g) {
  Eigen::MatrixXi m = Eigen::MatrixXi::Zero(g.d(), g.d());
  for (const auto& e : g.edges()) m(e.first, e.second) = 1;
  return m;
}

BinaryDag from_matrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw ParameterError("graph matrix must be square");
  BinaryDag g(static_cast<int>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) g.add_edge(static_cast<int>(i), static_cast<int>(j));
  return g;
}

ThresholdScheme scheme(const std::string& name, double cutoff) {
  if (name == "raw") return ThresholdScheme::raw(cutoff);
  if (name == "var") return ThresholdScheme::variance_normalized(cutoff);
  if (name == "colsum") return ThresholdScheme::column_sum_normalized(cutoff);
  throw ParameterError("scheme must be raw, var or colsum");
}

}  // namespace

PYBIND11_MODULE(_dagma_dce, m) {
  m.doc() = "Causal discovery with differential causal effects";

  py::register_exception<cli::UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<FeasibilityError>(m, "FeasibilityError", PyExc_RuntimeError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def(
      "generate",
      [](const std::string& config) {
        const cli::Generated g = cli::generate(cli::gen_config_from_json(json::parse(config)));
        py::dict out;
        out["data"] = g.data.x;
        out["truth"] = to_matrix(g.truth);
        out["sem"] = to_json(g.sem).dump();
        return out;
      },
      py::arg("config_json"));

  m.def(
      "fit",
      [](const Eigen::MatrixXd& x, const std::string& config) {
        const cli::FitConfig c = cli::fit_config_from_json(json::parse(config), std::nullopt);
        DiscoveryResult r;
        {
          py::gil_scoped_release release;
          r = cli::run_fit(x, c);
        }
        return cli::result_to_json(r, c).dump();
      },
      py::arg("x"), py::arg("config_json"));

  m.def(
      "h_dagma",
      [](const Eigen::MatrixXd& a, double s) -> std::optional<double> { return h_dagma(a, s).value; },
      py::arg("a"), py::arg("s") = 1.0);
  m.def(
      "grad_h_dagma", [](const Eigen::MatrixXd& a, double s) { return grad_h_dagma(a, s); }, py::arg("a"),
      py::arg("s") = 1.0);

  m.def(
      "threshold",
      [](const Eigen::MatrixXd& a, double cutoff, const std::string& name,
         const std::optional<Eigen::VectorXd>& variances) {
        return to_matrix(threshold(a, scheme(name, cutoff), variances));
      },
      py::arg("a"), py::arg("cutoff") = 0.25, py::arg("scheme") = "raw", py::arg("variances") = py::none());

  m.def(
      "evaluate",
      [](const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth) {
        return to_json(evaluate_graph(from_matrix(est), from_matrix(truth))).dump();
      },
      py::arg("est"), py::arg("truth"));
  m.def(
      "shd", [](const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth) { return shd(from_matrix(est), from_matrix(truth)); },
      py::arg("est"), py::arg("truth"));
  m.def(
      "sid", [](const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth) { return sid(from_matrix(est), from_matrix(truth)); },
      py::arg("est"), py::arg("truth"));
  m.def(
      "kendall_tau_b",
      [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return kendall_tau_b(a, b); }, py::arg("a"),
      py::arg("b"));
  m.def(
      "spearman_rho",
      [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return spearman_rho(a, b); }, py::arg("a"),
      py::arg("b"));

  m.def(
      "lemma_witness",
      [](double eps, double delta, int d, int hidden) {
        const EdgeWitness w = construct_lemma1_mlp(eps, delta, 0, d, hidden);
        py::dict out;
        out["eps"] = eps;
        out["delta"] = delta;
        out["first_layer_norm"] = w.first_layer_norm;
        out["dce_entry"] = w.dce_entry;
        return out;
      },
      py::arg("eps"), py::arg("delta"), py::arg("d") = 2, py::arg("hidden") = 8);
}
