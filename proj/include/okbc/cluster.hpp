#pragma once

// Hierarchical agglomerative clustering of unit embeddings.
// d(u, v) = 1 − u·v, and 2 whenever either side is the zero sentinel.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "okbc/matrix.hpp"

namespace okbc::cluster {

enum class Linkage : std::uint8_t { single, complete, average };

std::string_view linkage_name(Linkage l) noexcept;
Linkage parse_linkage(std::string_view name);

// Clusters are listed by ascending smallest member; cluster ids are the
// positions in that list.
struct Clustering {
  std::vector<std::size_t> assignment;           // node -> cluster id
  std::vector<std::vector<std::uint32_t>> clusters;  // ascending members

  friend bool operator==(const Clustering&, const Clustering&) = default;
};

// Canonical form of an arbitrary labeling.
Clustering from_labels(const std::vector<std::int64_t>& labels);

struct Merge {
  std::uint32_t a = 0;  // smallest member of the first cluster (a < b)
  std::uint32_t b = 0;  // smallest member of the second cluster
  double distance = 0.0;
};

double distance(std::span<const double> u, std::span<const double> v);

// Full merge sequence (n − 1 merges). Each step joins the pair with the
// smallest linkage distance; ties go to the smaller (a, b).
std::vector<Merge> agglomerate(const Matrix& z, Linkage linkage);

// Replays merges in order up to the first one above `threshold`.
Clustering cut(const std::vector<Merge>& merges, std::size_t n, double threshold);

// Throws EmptyInput for zero rows.
Clustering hac(const Matrix& z, Linkage linkage, double threshold);

inline constexpr std::size_t kNaiveOracleLimit = 512;

// Direct O(n³) reference: recomputes every cluster distance from the point
// distances before each merge. Throws TooLarge above kNaiveOracleLimit.
Clustering hac_naive_oracle(const Matrix& z, Linkage linkage, double threshold);

// Grid value maximizing (macro F1 + micro F1 + pairwise F1) / 3 against
// `gold` (one label per row of z); ties keep the smaller threshold.
// Throws EmptyGrid.
struct TuneResult {
  double threshold = 0.0;
  double average_f1 = 0.0;
};
TuneResult tune_threshold(const Matrix& z, const std::vector<std::int64_t>& gold, Linkage linkage,
                          std::vector<double> grid);

// Default grid 0.02, 0.04, ..., 2.0.
std::vector<double> default_grid();

}  // namespace okbc::cluster
