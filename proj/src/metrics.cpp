#include "dagma_dce/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "dagma_dce/error.hpp"

namespace dce {

using nlohmann::json;

namespace {

void check_same_d(const BinaryDag& a, const BinaryDag& b, const char* who) {
  if (a.d() != b.d()) {
    throw ParameterError(std::string(who) + ": graphs have different node counts (" +
                         std::to_string(a.d()) + " vs " + std::to_string(b.d()) + ")");
  }
}

void require_acyclic(const BinaryDag& g, const char* who) {
  if (!topological_order(g).acyclic()) throw ParameterError(std::string(who) + ": graph has a cycle");
}

}  // namespace

int shd(const BinaryDag& est, const BinaryDag& truth) {
  check_same_d(est, truth, "shd");
  // Pair states: bit 0 = a->b, bit 1 = b->a. Edit distance with add, delete, reverse.
  static constexpr int kCost[4][4] = {{0, 1, 1, 2}, {1, 0, 1, 1}, {1, 1, 0, 1}, {2, 1, 1, 0}};
  int total = 0;
  for (int a = 0; a < est.d(); ++a) {
    for (int b = a + 1; b < est.d(); ++b) {
      const int se = (est.has_edge(a, b) ? 1 : 0) | (est.has_edge(b, a) ? 2 : 0);
      const int st = (truth.has_edge(a, b) ? 1 : 0) | (truth.has_edge(b, a) ? 2 : 0);
      total += kCost[se][st];
    }
  }
  return total;
}

PrecisionRecall precision_recall_f1(const BinaryDag& est, const BinaryDag& truth) {
  check_same_d(est, truth, "precision_recall_f1");
  std::size_t tp = 0;
  for (const auto& [i, j] : est.edges())
    if (truth.has_edge(i, j)) ++tp;
  const std::size_t n_est = est.edge_count();
  const std::size_t n_true = truth.edge_count();
  PrecisionRecall r;
  r.precision = n_est == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(n_est);
  r.recall = n_true == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(n_true);
  const double sum = r.precision + r.recall;
  r.f1 = sum > 0.0 ? 2.0 * r.precision * r.recall / sum : 0.0;
  r.fm_index = std::sqrt(r.precision * r.recall);
  return r;
}

bool d_separated(const BinaryDag& g, const std::vector<int>& x, const std::vector<int>& y,
                 const std::vector<int>& z) {
  const int d = g.d();
  std::vector<char> in_z(d, 0);
  for (int v : z) in_z.at(v) = 1;

  // Ancestral closure of x, y, z.
  std::vector<char> anc(d, 0);
  std::vector<int> stack;
  for (const auto* set : {&x, &y, &z})
    for (int v : *set)
      if (!anc.at(v)) {
        anc[v] = 1;
        stack.push_back(v);
      }
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int p : g.parents(v))
      if (!anc[p]) {
        anc[p] = 1;
        stack.push_back(p);
      }
  }

  // Moral graph on the ancestral set.
  std::vector<std::vector<char>> und(d, std::vector<char>(d, 0));
  for (int v = 0; v < d; ++v) {
    if (!anc[v]) continue;
    const std::vector<int> pa = g.parents(v);
    for (std::size_t a = 0; a < pa.size(); ++a) {
      und[pa[a]][v] = und[v][pa[a]] = 1;
      for (std::size_t b = a + 1; b < pa.size(); ++b) und[pa[a]][pa[b]] = und[pa[b]][pa[a]] = 1;
    }
  }

  std::vector<char> seen(d, 0);
  for (int v : x)
    if (!in_z[v]) {
      seen[v] = 1;
      stack.push_back(v);
    }
  std::vector<char> in_y(d, 0);
  for (int v : y) in_y.at(v) = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (in_y[v]) return false;
    for (int w = 0; w < d; ++w)
      if (und[v][w] && anc[w] && !in_z[w] && !seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
  }
  return true;
}

int sid(const BinaryDag& est, const BinaryDag& truth) {
  check_same_d(est, truth, "sid");
  require_acyclic(est, "sid (estimate)");
  require_acyclic(truth, "sid (truth)");
  const int d = truth.d();
  const auto reach = descendants_matrix(truth);  // reach[a][b]: directed path a -> b

  int count = 0;
  for (int i = 0; i < d; ++i) {
    const std::vector<int> z = est.parents(i);
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      if (est.has_edge(j, i)) {
        // The estimate asserts no effect of i on j.
        if (reach[i][j]) ++count;
        continue;
      }

      // Nodes w != i on a directed path i -> j: descendants of i that reach j (j included).
      std::vector<char> forbidden(d, 0);
      if (reach[i][j]) {
        for (int w = 0; w < d; ++w) {
          if (w == i || !reach[i][w] || !(w == j || reach[w][j])) continue;
          forbidden[w] = 1;
          for (int u = 0; u < d; ++u)
            if (reach[w][u]) forbidden[u] = 1;
        }
      }
      bool valid = true;
      for (int v : z)
        if (forbidden[v]) valid = false;

      if (valid) {
        // Drop the first edge of every directed path i -> j, then test i _||_ j | z.
        BinaryDag cut = truth;
        for (int c : truth.children(i))
          if (c == j || reach[c][j]) cut.remove_edge(i, c);
        valid = d_separated(cut, {i}, {j}, z);
      }
      if (!valid) ++count;
    }
  }
  return count;
}

std::vector<double> off_diagonal(const Eigen::MatrixXd& a) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(a.size()));
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c)
      if (r != c) out.push_back(a(r, c));
  return out;
}

namespace {

void check_pairs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* who) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ParameterError(std::string(who) + ": shape mismatch");
  }
}

void check_pairs(const std::vector<double>& x, const std::vector<double>& y, const char* who) {
  if (x.size() != y.size()) throw ParameterError(std::string(who) + ": length mismatch");
  if (x.size() < 2) throw ParameterError(std::string(who) + ": need at least 2 pairs");
}

// Number of tied pairs among runs of equal values in a sorted sequence.
template <typename It, typename Eq>
std::int64_t tied_pairs(It first, It last, Eq eq) {
  std::int64_t total = 0;
  while (first != last) {
    It run = first;
    std::int64_t len = 0;
    while (run != last && eq(*run, *first)) {
      ++run;
      ++len;
    }
    total += len * (len - 1) / 2;
    first = run;
  }
  return total;
}

// Sorts v and returns the number of inversions.
std::int64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                         std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace

std::optional<double> kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  check_pairs(x, y, "kendall_tau_b");
  const std::size_t n = x.size();
  std::vector<std::pair<double, double>> p(n);
  for (std::size_t k = 0; k < n; ++k) p[k] = {x[k], y[k]};
  std::sort(p.begin(), p.end());

  const auto n0 = static_cast<std::int64_t>(n * (n - 1) / 2);
  const std::int64_t n1 = tied_pairs(p.begin(), p.end(), [](auto& a, auto& b) { return a.first == b.first; });
  const std::int64_t n3 = tied_pairs(p.begin(), p.end(), [](auto& a, auto& b) { return a == b; });

  std::vector<double> ys(n), buf(n);
  for (std::size_t k = 0; k < n; ++k) ys[k] = p[k].second;
  const std::int64_t swaps = merge_count(ys, buf, 0, n);
  const std::int64_t n2 = tied_pairs(ys.begin(), ys.end(), [](double a, double b) { return a == b; });

  const double denom = std::sqrt(static_cast<double>(n0 - n1)) * std::sqrt(static_cast<double>(n0 - n2));
  if (!(denom > 0.0)) return std::nullopt;
  // concordant - discordant = n0 - n1 - n2 + n3 - 2 * swaps
  const double num = static_cast<double>(n0 - n1 - n2 + n3 - 2 * swaps);
  return std::clamp(num / denom, -1.0, 1.0);
}

std::optional<double> kendall_tau_b(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  check_pairs(a, b, "kendall_tau_b");
  return kendall_tau_b(off_diagonal(a), off_diagonal(b));
}

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t k = 0;
  while (k < idx.size()) {
    std::size_t e = k;
    while (e + 1 < idx.size() && v[idx[e + 1]] == v[idx[k]]) ++e;
    const double r = 0.5 * static_cast<double>(k + e) + 1.0;
    for (std::size_t t = k; t <= e; ++t) ranks[idx[t]] = r;
    k = e + 1;
  }
  return ranks;
}

std::optional<double> spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  check_pairs(x, y, "spearman_rho");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const Eigen::Map<const Eigen::VectorXd> a(rx.data(), static_cast<Eigen::Index>(rx.size()));
  const Eigen::Map<const Eigen::VectorXd> b(ry.data(), static_cast<Eigen::Index>(ry.size()));
  const Eigen::VectorXd ca = a.array() - a.mean();
  const Eigen::VectorXd cb = b.array() - b.mean();
  const double denom = ca.norm() * cb.norm();
  if (!(denom > 0.0)) return std::nullopt;
  return std::clamp(ca.dot(cb) / denom, -1.0, 1.0);
}

std::optional<double> spearman_rho(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  check_pairs(a, b, "spearman_rho");
  return spearman_rho(off_diagonal(a), off_diagonal(b));
}

double frobenius_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ParameterError("frobenius_diff: shape mismatch");
  return (a - b).norm();
}

MetricsReport evaluate_graph(const BinaryDag& est, const BinaryDag& truth) {
  MetricsReport r;
  r.shd = shd(est, truth);
  const PrecisionRecall pr = precision_recall_f1(est, truth);
  r.precision = pr.precision;
  r.recall = pr.recall;
  r.f1 = pr.f1;
  r.fm_index = pr.fm_index;
  r.sid = sid(est, truth);
  r.predicted_edges = static_cast<int>(est.edge_count());
  r.true_edges = static_cast<int>(truth.edge_count());
  return r;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

}  // namespace

json to_json(const MetricsReport& r) {
  return {{"shd", r.shd},
          {"precision", r.precision},
          {"recall", r.recall},
          {"f1", r.f1},
          {"fm_index", r.fm_index},
          {"sid", r.sid},
          {"predicted_edges", r.predicted_edges},
          {"true_edges", r.true_edges},
          {"frobenius_to_truth", opt(r.frobenius_to_truth)},
          {"kendall_tau_b", opt(r.kendall_tau_b)},
          {"spearman_rho", opt(r.spearman_rho)},
          {"wall_time_s", opt(r.wall_time_s)}};
}

MetricsReport metrics_report_from_json(const json& j) {
  MetricsReport r;
  r.shd = j.at("shd").get<int>();
  r.precision = j.at("precision").get<double>();
  r.recall = j.at("recall").get<double>();
  r.f1 = j.at("f1").get<double>();
  r.fm_index = j.value("fm_index", std::sqrt(r.precision * r.recall));
  r.sid = j.at("sid").get<int>();
  r.predicted_edges = j.value("predicted_edges", 0);
  r.true_edges = j.value("true_edges", 0);
  r.frobenius_to_truth = opt_from(j, "frobenius_to_truth");
  r.kendall_tau_b = opt_from(j, "kendall_tau_b");
  r.spearman_rho = opt_from(j, "spearman_rho");
  r.wall_time_s = opt_from(j, "wall_time_s");
  return r;
}

std::string metrics_csv_header() {
  return "shd,precision,recall,f1,fm_index,sid,predicted_edges,true_edges,frobenius_to_truth,"
         "kendall_tau_b,spearman_rho,wall_time_s";
}

std::string to_csv_row(const MetricsReport& r) {
  std::ostringstream os;
  os << r.shd << ',' << fmt(r.precision) << ',' << fmt(r.recall) << ',' << fmt(r.f1) << ','
     << fmt(r.fm_index) << ',' << r.sid << ',' << r.predicted_edges << ',' << r.true_edges << ','
     << fmt(r.frobenius_to_truth) << ',' << fmt(r.kendall_tau_b) << ',' << fmt(r.spearman_rho)
     << ',' << fmt(r.wall_time_s);
  return os.str();
}

BoxStats box_stats(std::vector<double> values) {
  BoxStats b;
  b.n = values.size();
  if (values.empty()) return b;
  std::sort(values.begin(), values.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  b.min = values.front();
  b.max = values.back();
  b.q1 = quantile(0.25);
  b.median = quantile(0.5);
  b.q3 = quantile(0.75);
  const double n = static_cast<double>(values.size());
  b.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - b.mean) * (v - b.mean);
  b.std = std::sqrt(ss / n);
  return b;
}

json to_json(const BoxStats& b) {
  return {{"n", b.n},           {"min", b.min},   {"q1", b.q1},   {"median", b.median},
          {"q3", b.q3},         {"max", b.max},   {"mean", b.mean}, {"std", b.std}};
}

std::string format_mean_std(const BoxStats& b, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f ± %.*f", decimals, b.mean, decimals, b.std);
  return buf;
}

}  // namespace dce
