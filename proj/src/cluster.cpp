#include "okbc/cluster.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>
#include <tuple>
#include <unordered_map>

#include "okbc/error.hpp"
#include "okbc/evalx.hpp"
#include "okbc/kernels.hpp"

namespace okbc::cluster {

std::string_view linkage_name(Linkage l) noexcept {
  switch (l) {
    case Linkage::single: return "single";
    case Linkage::complete: return "complete";
    case Linkage::average: return "average";
  }
  return "?";
}

Linkage parse_linkage(std::string_view name) {
  if (name == "single") return Linkage::single;
  if (name == "complete") return Linkage::complete;
  if (name == "average") return Linkage::average;
  throw Error(Errc::invalid_config, "unknown linkage '" + std::string(name) + "'");
}

Clustering from_labels(const std::vector<std::int64_t>& labels) {
  Clustering c;
  c.assignment.resize(labels.size());
  std::unordered_map<std::int64_t, std::size_t> ids;  // first-appearance order
  for (std::uint32_t i = 0; i < labels.size(); ++i) {
    const auto [it, fresh] = ids.emplace(labels[i], c.clusters.size());
    if (fresh) c.clusters.emplace_back();
    const std::size_t id = it->second;
    c.assignment[i] = id;
    c.clusters[id].push_back(i);
  }
  return c;
}

namespace {

bool is_sentinel(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

struct UnionFind {
  std::vector<std::uint32_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  // Root is always the smallest member.
  void join(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent[b] = a;
  }
};

std::vector<double> point_distances(const Matrix& z) {
  const std::size_t n = z.rows();
  std::vector<char> sentinel(n);
  for (std::size_t i = 0; i < n; ++i) sentinel[i] = is_sentinel(z.row(i));
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double x = sentinel[i] || sentinel[j] ? 2.0 : 1.0 - kernels::dot(z.row(i), z.row(j));
      d[i * n + j] = d[j * n + i] = x;
    }
  }
  return d;
}

}  // namespace

double distance(std::span<const double> u, std::span<const double> v) {
  if (is_sentinel(u) || is_sentinel(v)) return 2.0;
  return 1.0 - kernels::dot(u, v);
}

std::vector<Merge> agglomerate(const Matrix& z, Linkage linkage) {
  const std::size_t n = z.rows();
  if (n == 0) throw Error(Errc::empty_input, "nothing to cluster");
  // Cluster state is keyed by the smallest member, which never changes for
  // the surviving side of a merge.
  std::vector<double> link = point_distances(z);  // linkage value, or distance sum for average
  std::vector<std::size_t> size(n, 1);
  std::vector<char> alive(n, 1);
  std::vector<std::uint32_t> version(n, 0);
  const auto value = [&](std::size_t i, std::size_t j) {
    const double v = link[i * n + j];
    return linkage == Linkage::average ? v / static_cast<double>(size[i] * size[j]) : v;
  };

  struct Entry {
    double d;
    std::uint32_t a, b, va, vb;
    bool operator>(const Entry& o) const { return std::tie(d, a, b) > std::tie(o.d, o.a, o.b); }
  };
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) heap.push({value(i, j), i, j, 0, 0});
  }

  std::vector<Merge> merges;
  merges.reserve(n - 1);
  while (merges.size() + 1 < n) {
    const Entry e = heap.top();
    heap.pop();
    if (!alive[e.a] || !alive[e.b] || version[e.a] != e.va || version[e.b] != e.vb) continue;
    merges.push_back({e.a, e.b, e.d});
    const std::uint32_t keep = e.a, gone = e.b;
    alive[gone] = 0;
    ++version[keep];
    for (std::uint32_t k = 0; k < n; ++k) {
      if (!alive[k] || k == keep) continue;
      double& x = link[keep * n + k];
      const double y = link[gone * n + k];
      switch (linkage) {
        case Linkage::single: x = std::min(x, y); break;
        case Linkage::complete: x = std::max(x, y); break;
        case Linkage::average: x = x + y; break;
      }
      link[k * n + keep] = x;
    }
    size[keep] += size[gone];
    for (std::uint32_t k = 0; k < n; ++k) {
      if (!alive[k] || k == keep) continue;
      const auto a = std::min(keep, k), b = std::max(keep, k);
      heap.push({value(a, b), a, b, version[a], version[b]});
    }
  }
  return merges;
}

Clustering cut(const std::vector<Merge>& merges, std::size_t n, double threshold) {
  UnionFind uf(n);
  for (const auto& m : merges) {
    if (m.distance > threshold) break;
    uf.join(m.a, m.b);
  }
  std::vector<std::int64_t> labels(n);
  for (std::uint32_t i = 0; i < n; ++i) labels[i] = uf.find(i);
  return from_labels(labels);
}

Clustering hac(const Matrix& z, Linkage linkage, double threshold) {
  return cut(agglomerate(z, linkage), z.rows(), threshold);
}

Clustering hac_naive_oracle(const Matrix& z, Linkage linkage, double threshold) {
  const std::size_t n = z.rows();
  if (n == 0) throw Error(Errc::empty_input, "nothing to cluster");
  if (n > kNaiveOracleLimit) throw Error(Errc::too_large, "naive HAC is limited to 512 points");
  std::vector<std::vector<std::uint32_t>> groups(n);
  for (std::uint32_t i = 0; i < n; ++i) groups[i] = {i};
  while (groups.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
      for (std::size_t j = i + 1; j < groups.size(); ++j) {
        double agg = linkage == Linkage::single ? std::numeric_limits<double>::infinity()
                                                : linkage == Linkage::complete ? -1.0 : 0.0;
        for (auto u : groups[i]) {
          for (auto v : groups[j]) {
            const double d = distance(z.row(u), z.row(v));
            if (linkage == Linkage::single) agg = std::min(agg, d);
            else if (linkage == Linkage::complete) agg = std::max(agg, d);
            else agg += d;
          }
        }
        if (linkage == Linkage::average) agg /= static_cast<double>(groups[i].size() * groups[j].size());
        // groups stay sorted by smallest member, so (i, j) order is the tie order
        if (agg < best) {
          best = agg;
          bi = i;
          bj = j;
        }
      }
    }
    if (best > threshold) break;
    auto& into = groups[bi];
    into.insert(into.end(), groups[bj].begin(), groups[bj].end());
    std::sort(into.begin(), into.end());
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  std::vector<std::int64_t> labels(n);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (auto u : groups[g]) labels[u] = static_cast<std::int64_t>(g);
  }
  return from_labels(labels);
}

TuneResult tune_threshold(const Matrix& z, const std::vector<std::int64_t>& gold, Linkage linkage,
                          std::vector<double> grid) {
  if (grid.empty()) throw Error(Errc::empty_grid, "threshold grid is empty");
  if (gold.size() != z.rows()) throw Error(Errc::coverage_mismatch, "gold labels do not cover the rows");
  std::sort(grid.begin(), grid.end());
  const auto merges = agglomerate(z, linkage);
  TuneResult best{grid.front(), -1.0};
  for (double t : grid) {
    const auto c = cut(merges, z.rows(), t);
    std::vector<std::int64_t> pred(c.assignment.begin(), c.assignment.end());
    const double f = evalx::report(pred, gold).average_f1;
    if (f > best.average_f1) best = {t, f};
  }
  return best;
}

std::vector<double> default_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 100; ++i) g.push_back(0.02 * i);
  return g;
}

}  // namespace okbc::cluster
