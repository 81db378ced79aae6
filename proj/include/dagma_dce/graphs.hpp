#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace dce {

using Rng = std::mt19937_64;
using Edge = std::pair<int, int>;

// Directed graph on d nodes. Entry (i, j) of the dense form means i -> j.
// Construction does not enforce acyclicity; use topological_order to check.
class BinaryDag {
 public:
  BinaryDag() = default;
  explicit BinaryDag(int d);
  BinaryDag(int d, const std::vector<Edge>& edges);

  int d() const { return d_; }
  bool has_edge(int from, int to) const { return adj_[index(from, to)] != 0; }
  void add_edge(int from, int to);
  void remove_edge(int from, int to);
  std::size_t edge_count() const;

  // Sorted lexicographically.
  std::vector<Edge> edges() const;
  std::vector<int> parents(int node) const;
  std::vector<int> children(int node) const;

  friend bool operator==(const BinaryDag&, const BinaryDag&) = default;

 private:
  std::size_t index(int from, int to) const;

  int d_ = 0;
  std::vector<std::uint8_t> adj_;
};

// d x d matrix, entry (i, j) is the weight of i -> j.
using WeightedAdjacency = Eigen::MatrixXd;

struct ThresholdScheme {
  enum class Kind { Raw, VarianceNormalized, ColumnSumNormalized };
  Kind kind = Kind::Raw;
  double cutoff = 0.25;

  static ThresholdScheme raw(double c) { return {Kind::Raw, c}; }
  static ThresholdScheme variance_normalized(double c) { return {Kind::VarianceNormalized, c}; }
  static ThresholdScheme column_sum_normalized(double c) { return {Kind::ColumnSumNormalized, c}; }
};

// Either a topological order or a directed cycle (node sequence, first node not repeated).
struct TopologicalResult {
  std::optional<std::vector<int>> order;
  std::vector<int> cycle;

  bool acyclic() const { return order.has_value(); }
};

// Each pair below a uniformly random node permutation is an edge with
// probability expected_edges / (d(d-1)/2).
BinaryDag sample_er_dag(int d, double expected_edges, Rng& rng);

TopologicalResult topological_order(const BinaryDag& g);

// DFS cycle search on the support {(i, j) : |m_ij| > tol}; self-loops count as cycles.
bool is_acyclic_bruteforce(const Eigen::Ref<const Eigen::MatrixXd>& m, double tol);

BinaryDag threshold(const WeightedAdjacency& a, const ThresholdScheme& scheme,
                    const std::optional<Eigen::VectorXd>& column_variances = std::nullopt);

// Reachability closure: result(i, j) is true when a directed path i -> ... -> j exists.
std::vector<std::vector<bool>> descendants_matrix(const BinaryDag& g);

}  // namespace dce
