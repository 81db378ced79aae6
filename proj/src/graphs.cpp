#include "dagma_dce/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <queue>
#include <string>

#include "dagma_dce/error.hpp"

namespace dce {

BinaryDag::BinaryDag(int d) : d_(d) {
  if (d < 0) throw ParameterError("BinaryDag: negative node count");
  adj_.assign(static_cast<std::size_t>(d) * d, 0);
}

BinaryDag::BinaryDag(int d, const std::vector<Edge>& edges) : BinaryDag(d) {
  for (const auto& [from, to] : edges) add_edge(from, to);
}

std::size_t BinaryDag::index(int from, int to) const {
  if (from < 0 || to < 0 || from >= d_ || to >= d_) {
    throw ParameterError("BinaryDag: edge (" + std::to_string(from) + ", " + std::to_string(to) +
                         ") out of range for d=" + std::to_string(d_));
  }
  return static_cast<std::size_t>(from) * d_ + to;
}

void BinaryDag::add_edge(int from, int to) {
  if (from == to) throw ParameterError("BinaryDag: self-loop on node " + std::to_string(from));
  adj_[index(from, to)] = 1;
}

void BinaryDag::remove_edge(int from, int to) { adj_[index(from, to)] = 0; }

std::size_t BinaryDag::edge_count() const {
  return static_cast<std::size_t>(std::count(adj_.begin(), adj_.end(), std::uint8_t{1}));
}

std::vector<Edge> BinaryDag::edges() const {
  std::vector<Edge> out;
  for (int i = 0; i < d_; ++i)
    for (int j = 0; j < d_; ++j)
      if (has_edge(i, j)) out.emplace_back(i, j);
  return out;
}

std::vector<int> BinaryDag::parents(int node) const {
  std::vector<int> out;
  for (int i = 0; i < d_; ++i)
    if (has_edge(i, node)) out.push_back(i);
  return out;
}

std::vector<int> BinaryDag::children(int node) const {
  std::vector<int> out;
  for (int j = 0; j < d_; ++j)
    if (has_edge(node, j)) out.push_back(j);
  return out;
}

BinaryDag sample_er_dag(int d, double expected_edges, Rng& rng) {
  if (d < 2) throw ParameterError("sample_er_dag: d must be at least 2");
  if (!(expected_edges > 0.0)) throw ParameterError("sample_er_dag: expected_edges must be positive");
  const double pairs = 0.5 * d * (d - 1);
  const double p = expected_edges / pairs;
  if (p > 1.0) {
    throw ParameterError("sample_er_dag: edge probability " + std::to_string(p) +
                         " exceeds 1 (expected_edges > d(d-1)/2)");
  }
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  BinaryDag g(d);
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b)
      if (unif(rng) < p) g.add_edge(perm[a], perm[b]);
  return g;
}

TopologicalResult topological_order(const BinaryDag& g) {
  const int d = g.d();
  std::vector<int> indegree(d, 0);
  for (const auto& [i, j] : g.edges()) ++indegree[j];

  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int v = 0; v < d; ++v)
    if (indegree[v] == 0) ready.push(v);

  std::vector<int> order;
  order.reserve(d);
  while (!ready.empty()) {
    const int v = ready.top();
    ready.pop();
    order.push_back(v);
    for (int c : g.children(v))
      if (--indegree[c] == 0) ready.push(c);
  }

  TopologicalResult result;
  if (static_cast<int>(order.size()) == d) {
    result.order = std::move(order);
    return result;
  }

  // Every node left with positive in-degree lies on or downstream of a cycle.
  std::vector<bool> remaining(d, false);
  for (int v = 0; v < d; ++v) remaining[v] = indegree[v] > 0;

  enum Color : std::uint8_t { White, Grey, Black };
  std::vector<Color> color(d, White);
  std::vector<int> stack;

  std::function<bool(int)> dfs = [&](int v) -> bool {
    color[v] = Grey;
    stack.push_back(v);
    for (int c : g.children(v)) {
      if (!remaining[c]) continue;
      if (color[c] == Grey) {
        auto it = std::find(stack.begin(), stack.end(), c);
        result.cycle.assign(it, stack.end());
        return true;
      }
      if (color[c] == White && dfs(c)) return true;
    }
    stack.pop_back();
    color[v] = Black;
    return false;
  };
  for (int v = 0; v < d; ++v)
    if (remaining[v] && color[v] == White && dfs(v)) break;
  return result;
}

bool is_acyclic_bruteforce(const Eigen::Ref<const Eigen::MatrixXd>& m, double tol) {
  const int d = static_cast<int>(m.rows());
  std::vector<std::uint8_t> color(d, 0);  // 0 unvisited, 1 on stack, 2 done
  std::function<bool(int)> has_cycle = [&](int v) -> bool {
    color[v] = 1;
    for (int w = 0; w < d; ++w) {
      if (!(std::abs(m(v, w)) > tol)) continue;
      if (color[w] == 1) return true;
      if (color[w] == 0 && has_cycle(w)) return true;
    }
    color[v] = 2;
    return false;
  };
  for (int v = 0; v < d; ++v)
    if (color[v] == 0 && has_cycle(v)) return false;
  return true;
}

BinaryDag threshold(const WeightedAdjacency& a, const ThresholdScheme& scheme,
                    const std::optional<Eigen::VectorXd>& column_variances) {
  if (a.rows() != a.cols()) throw ParameterError("threshold: adjacency must be square");
  if (scheme.cutoff < 0.0) throw ParameterError("threshold: cutoff must be nonnegative");
  if ((a.array() < 0.0).any()) throw ParameterError("threshold: adjacency has negative entries");
  const int d = static_cast<int>(a.rows());

  Eigen::VectorXd scale = Eigen::VectorXd::Ones(d);
  switch (scheme.kind) {
    case ThresholdScheme::Kind::Raw:
      break;
    case ThresholdScheme::Kind::VarianceNormalized:
      if (!column_variances) {
        throw ParameterError("threshold: variance-normalized scheme needs column variances");
      }
      if (column_variances->size() != d || (column_variances->array() <= 0.0).any()) {
        throw ParameterError("threshold: column variances must be d strictly positive values");
      }
      scale = *column_variances;
      break;
    case ThresholdScheme::Kind::ColumnSumNormalized:
      scale = a.colwise().sum().transpose();
      break;
  }

  BinaryDag g(d);
  for (int j = 0; j < d; ++j) {
    if (!(scale(j) > 0.0)) continue;
    for (int i = 0; i < d; ++i) {
      if (i == j) continue;
      if (a(i, j) / scale(j) > scheme.cutoff) g.add_edge(i, j);
    }
  }
  return g;
}

std::vector<std::vector<bool>> descendants_matrix(const BinaryDag& g) {
  const int d = g.d();
  std::vector<std::vector<bool>> reach(d, std::vector<bool>(d, false));
  for (int s = 0; s < d; ++s) {
    std::vector<int> frontier{s};
    while (!frontier.empty()) {
      const int v = frontier.back();
      frontier.pop_back();
      for (int c : g.children(v)) {
        if (!reach[s][c]) {
          reach[s][c] = true;
          frontier.push_back(c);
        }
      }
    }
  }
  return reach;
}

}  // namespace dce
