#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dagma_dce/graphs.hpp"

namespace dce {

// Missing + extra edges, evaluated per unordered node pair; a reversed edge
// costs 1. Pairs carrying both directions (possible in a cyclic estimate) cost
// the number of single edge edits to reach the other state.
int shd(const BinaryDag& est, const BinaryDag& truth);

struct PrecisionRecall {
  double precision = 1.0;  // 1 by convention when est has no edges
  double recall = 1.0;     // 1 by convention when truth has no edges
  double f1 = 0.0;         // harmonic mean, 0 when p + r = 0
  double fm_index = 0.0;   // geometric mean sqrt(p r)
};

PrecisionRecall precision_recall_f1(const BinaryDag& est, const BinaryDag& truth);

// Structural intervention distance. Both graphs must be acyclic.
int sid(const BinaryDag& est, const BinaryDag& truth);

// True when x and y are d-separated by z in g (moralized ancestral graph test).
// x, y, z must be disjoint.
bool d_separated(const BinaryDag& g, const std::vector<int>& x, const std::vector<int>& y,
                 const std::vector<int>& z);

// Off-diagonal entries in row-major order.
std::vector<double> off_diagonal(const Eigen::MatrixXd& a);

// Rank correlations over paired off-diagonal entries. nullopt when a side is
// constant (the coefficient is undefined). Throws for fewer than 2 pairs.
std::optional<double> kendall_tau_b(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
std::optional<double> kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y);
std::optional<double> spearman_rho(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
std::optional<double> spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

// 1-based ranks, ties get the average rank.
std::vector<double> average_ranks(const std::vector<double>& v);

double frobenius_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

struct MetricsReport {
  int shd = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double fm_index = 0.0;
  int sid = 0;
  int predicted_edges = 0;
  int true_edges = 0;
  std::optional<double> frobenius_to_truth;
  std::optional<double> kendall_tau_b;
  std::optional<double> spearman_rho;
  std::optional<double> wall_time_s;
};

MetricsReport evaluate_graph(const BinaryDag& est, const BinaryDag& truth);

nlohmann::json to_json(const MetricsReport& r);
MetricsReport metrics_report_from_json(const nlohmann::json& j);
std::string metrics_csv_header();
std::string to_csv_row(const MetricsReport& r);

struct BoxStats {
  std::size_t n = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

// Quartiles by linear interpolation between order statistics. Empty input gives n = 0.
BoxStats box_stats(std::vector<double> values);
nlohmann::json to_json(const BoxStats& b);

// "0.55 ± 0.06" with the given number of decimals.
std::string format_mean_std(const BoxStats& b, int decimals = 2);

}  // namespace dce
