#pragma once

// Run configuration: flat `section.key = value` lines, `#` comments.
// Unknown keys are rejected; every key has a default and the resolved set is
// written next to the outputs.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "okbc/cluster.hpp"
#include "okbc/embed.hpp"
#include "okbc/metagraph.hpp"
#include "okbc/train.hpp"

namespace okbc::config {

class KeyValues {
 public:
  // Starts from the built-in defaults.
  KeyValues();

  // Throws InvalidConfig for unknown keys or malformed lines.
  void set(const std::string& key, const std::string& value);
  void merge_file(const std::filesystem::path& path);
  void merge_text(const std::string& text, const std::string& origin = "<text>");
  // `key=value`
  void merge_assignment(const std::string& assignment);

  const std::string& get(const std::string& key) const;
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  // Sorted `key = value` lines.
  std::string dump() const;

 private:
  std::map<std::string, std::string> values_;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  std::filesystem::path corpus_dir;
  std::filesystem::path tuples, sentences, gold;  // override corpus_dir entries
  std::filesystem::path np_embeddings, rp_embeddings, sentence_embeddings;
  std::filesystem::path out = "out";

  std::size_t d0 = 32;
  embed::BowSvdConfig svd;

  metagraph::PairConfig pairs;
  train::LossConfig loss;
  train::TrainConfig train;

  cluster::Linkage linkage = cluster::Linkage::complete;
  std::optional<double> np_threshold;  // empty = tune on validation entities
  std::optional<double> rp_threshold;  // empty = same as NP
  double fallback_threshold = 0.3;
  double validation_fraction = 0.2;
  std::vector<double> grid;

  bool write_graph = false;
  bool write_pairs = false;
  bool write_model = false;

  KeyValues resolved;
};

// Typed view; throws InvalidConfig on unparsable values.
RunConfig resolve(const KeyValues& kv);

}  // namespace okbc::config
