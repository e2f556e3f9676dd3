#pragma once

// Clustering quality against a gold partition.
//
// macro:    P = share of predicted clusters that are pure w.r.t. gold
// micro:    P = Σ_c max_g |c ∩ g| / N
// pairwise: P = co-clustered pairs shared with gold / co-clustered pairs in pred
// Recall swaps the roles of the two partitions.
//
// Worked case, gold {a1,a2},{b1,b2} and pred {a1,a2,b1},{b2}:
//   macro (0.5, 0.5)  micro (0.75, 0.75)  pairwise (1/3, 1/2)  average F1 0.55

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace okbc::evalx {

struct Prf {
  double p = 0.0;
  double r = 0.0;
  double f1 = 0.0;
};

// Harmonic mean; 0 when p + r = 0.
double f1_of(double p, double r) noexcept;

// Element i belongs to pred[i] / gold[i]; label values are arbitrary.
// Throws CoverageMismatch when the vectors differ in length.
Prf macro_prf(const std::vector<std::int64_t>& pred, const std::vector<std::int64_t>& gold);
Prf micro_prf(const std::vector<std::int64_t>& pred, const std::vector<std::int64_t>& gold);
Prf pairwise_prf(const std::vector<std::int64_t>& pred, const std::vector<std::int64_t>& gold);

struct EvalReport {
  Prf macro, micro, pair;
  double average_f1 = 0.0;
  std::size_t elements = 0;
};

EvalReport report(const std::vector<std::int64_t>& pred, const std::vector<std::int64_t>& gold);

// Keyed clusterings (element -> cluster label). Keys must match exactly,
// otherwise CoverageMismatch.
using Assignment = std::map<std::string, std::string>;
EvalReport report(const Assignment& pred, const Assignment& gold);

// Reads `cluster_id \t kind \t node_id [\t surface]` rows of one kind
// (empty kind = all rows); the element key is kind:node_id.
Assignment load_assignment(const std::filesystem::path& path, const std::string& kind = "NP");

// Table with the columns Macro, Micro, Pair, Aver.
void print_table(const EvalReport& r, std::ostream& out);
std::string to_json(const EvalReport& r);

}  // namespace okbc::evalx
