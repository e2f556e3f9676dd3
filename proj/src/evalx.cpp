#include "okbc/evalx.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include "json.hpp"
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "okbc/error.hpp"

namespace okbc::evalx {

double f1_of(double p, double r) noexcept { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

namespace {

void check_coverage(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  if (a.size() != b.size()) {
    throw Error(Errc::coverage_mismatch, "predicted clustering covers " + std::to_string(a.size()) +
                                             " elements, gold covers " + std::to_string(b.size()));
  }
}

// Dense relabeling 0..k-1 in first-appearance order.
std::vector<std::size_t> dense(const std::vector<std::int64_t>& labels, std::size_t& k) {
  std::unordered_map<std::int64_t, std::size_t> ids;
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (auto l : labels) out.push_back(ids.emplace(l, ids.size()).first->second);
  k = ids.size();
  return out;
}

// Contingency counts between the two partitions.
struct Table {
  std::size_t ka = 0, kb = 0;
  std::vector<std::size_t> a, b;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> cell;
  std::vector<std::size_t> size_a, size_b;

  Table(const std::vector<std::int64_t>& pa, const std::vector<std::int64_t>& pb)
      : a(dense(pa, ka)), b(dense(pb, kb)), size_a(ka), size_b(kb) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      ++cell[{a[i], b[i]}];
      ++size_a[a[i]];
      ++size_b[b[i]];
    }
  }
};

// Share of `a` clusters lying inside one `b` cluster.
double purity_share(const Table& t, bool swap) {
  const std::size_t k = swap ? t.kb : t.ka;
  if (k == 0) return 1.0;
  std::vector<std::size_t> touched(k, 0);
  for (const auto& [key, n] : t.cell) ++touched[swap ? key.second : key.first];
  const auto pure = std::count(touched.begin(), touched.end(), std::size_t{1});
  return static_cast<double>(pure) / static_cast<double>(k);
}

double max_overlap_share(const Table& t, bool swap) {
  const std::size_t k = swap ? t.kb : t.ka;
  if (t.a.empty()) return 1.0;
  std::vector<std::size_t> best(k, 0);
  for (const auto& [key, n] : t.cell) {
    auto& slot = best[swap ? key.second : key.first];
    slot = std::max(slot, n);
  }
  std::size_t total = 0;
  for (auto x : best) total += x;
  return static_cast<double>(total) / static_cast<double>(t.a.size());
}

double pairs_of(std::size_t n) { return static_cast<double>(n) * static_cast<double>(n - (n > 0)) / 2.0; }

double ratio(double hits, double denom, double other_denom) {
  if (denom == 0.0) return other_denom == 0.0 ? 1.0 : 0.0;
  return hits / denom;
}

}  // namespace

Prf macro_prf(const std::vector<std::int64_t>& pred, const std::vector<std::int64_t>& gold) {
  check_coverage(pred, gold);
  const Table t(pred, gold);
  Prf out{purity_share(t, false), purity_share(t, true)};
  out.f1 = f1_of(out.p, out.r);
  return out;
}

Prf micro_prf(const std::vector<std::int64_t>& pred, const std::vector<std::int64_t>& gold) {
  check_coverage(pred, gold);
  const Table t(pred, gold);
  Prf out{max_overlap_share(t, false), max_overlap_share(t, true)};
  out.f1 = f1_of(out.p, out.r);
  return out;
}

Prf pairwise_prf(const std::vector<std::int64_t>& pred, const std::vector<std::int64_t>& gold) {
  check_coverage(pred, gold);
  const Table t(pred, gold);
  double hits = 0.0, pp = 0.0, gp = 0.0;
  for (const auto& [key, n] : t.cell) hits += pairs_of(n);
  for (auto n : t.size_a) pp += pairs_of(n);
  for (auto n : t.size_b) gp += pairs_of(n);
  Prf out{ratio(hits, pp, gp), ratio(hits, gp, pp)};
  out.f1 = f1_of(out.p, out.r);
  return out;
}

EvalReport report(const std::vector<std::int64_t>& pred, const std::vector<std::int64_t>& gold) {
  EvalReport r;
  r.macro = macro_prf(pred, gold);
  r.micro = micro_prf(pred, gold);
  r.pair = pairwise_prf(pred, gold);
  r.average_f1 = (r.macro.f1 + r.micro.f1 + r.pair.f1) / 3.0;
  r.elements = pred.size();
  return r;
}

EvalReport report(const Assignment& pred, const Assignment& gold) {
  if (pred.size() != gold.size()) {
    throw Error(Errc::coverage_mismatch, "predicted clustering covers " + std::to_string(pred.size()) +
                                             " elements, gold covers " + std::to_string(gold.size()));
  }
  std::map<std::string, std::int64_t> pred_ids, gold_ids;
  std::vector<std::int64_t> p, g;
  auto it = gold.begin();
  for (const auto& [key, label] : pred) {
    if (it->first != key) throw Error(Errc::coverage_mismatch, "element '" + key + "' missing from gold");
    p.push_back(pred_ids.emplace(label, static_cast<std::int64_t>(pred_ids.size())).first->second);
    g.push_back(gold_ids.emplace(it->second, static_cast<std::int64_t>(gold_ids.size())).first->second);
    ++it;
  }
  return report(p, g);
}

Assignment load_assignment(const std::filesystem::path& path, const std::string& kind) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  Assignment out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, '\t');) cols.push_back(c);
    if (cols.size() < 3) {
      throw Error(Errc::parse_error, path.string() + ":" + std::to_string(lineno) + ": expected at least 3 columns");
    }
    if (!kind.empty() && cols[1] != kind) continue;
    const std::string key = cols[1] + ":" + cols[2];
    if (!out.emplace(key, cols[0]).second) {
      throw Error(Errc::duplicate_id, path.string() + ":" + std::to_string(lineno) + ": element " + key +
                                          " listed twice");
    }
  }
  return out;
}

void print_table(const EvalReport& r, std::ostream& out) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-6s %8s %8s %8s %8s\n", "", "Macro", "Micro", "Pair", "Aver.");
  out << buf;
  std::snprintf(buf, sizeof buf, "%-6s %8.4f %8.4f %8.4f\n", "P", r.macro.p, r.micro.p, r.pair.p);
  out << buf;
  std::snprintf(buf, sizeof buf, "%-6s %8.4f %8.4f %8.4f\n", "R", r.macro.r, r.micro.r, r.pair.r);
  out << buf;
  std::snprintf(buf, sizeof buf, "%-6s %8.4f %8.4f %8.4f %8.4f\n", "F1", r.macro.f1, r.micro.f1, r.pair.f1,
                r.average_f1);
  out << buf;
}

std::string to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["macro_p"] = r.macro.p;
  j["macro_r"] = r.macro.r;
  j["macro_f1"] = r.macro.f1;
  j["micro_p"] = r.micro.p;
  j["micro_r"] = r.micro.r;
  j["micro_f1"] = r.micro.f1;
  j["pair_p"] = r.pair.p;
  j["pair_r"] = r.pair.r;
  j["pair_f1"] = r.pair.f1;
  j["average_f1"] = r.average_f1;
  j["elements"] = r.elements;
  return j.dump(2);
}

}  // namespace okbc::evalx
