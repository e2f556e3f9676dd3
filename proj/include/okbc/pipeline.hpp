#pragma once

// End-to-end runs shared by the CLI and the tests.

#include <filesystem>
#include <optional>

#include "okbc/cluster.hpp"
#include "okbc/config.hpp"
#include "okbc/corpus.hpp"
#include "okbc/evalx.hpp"
#include "okbc/metagraph.hpp"
#include "okbc/mlgraph.hpp"
#include "okbc/train.hpp"

namespace okbc::pipeline {

corpus::Corpus load_inputs(const config::RunConfig& cfg);

// Embeds the corpus per the config and builds the graph.
mlgraph::MultiLayeredGraph prepare_graph(const config::RunConfig& cfg, corpus::Corpus corpus);

struct CanonicalizeResult {
  mlgraph::MultiLayeredGraph graph;
  metagraph::PairSets pairs;
  train::TrainResult trained;
  cluster::Clustering np, rp;
  double np_threshold = 0.0;
  double rp_threshold = 0.0;
  bool tuned = false;
  std::optional<evalx::EvalReport> np_report;  // against gold, when present
};

// load -> embed -> graph -> pairs -> train -> forward -> HAC per kind. When
// `write` is set, artifacts go to cfg.out.
CanonicalizeResult run_canonicalize(const config::RunConfig& cfg, bool write = true);

// Gold entity per NP node (row 2*t + role); nullopt for unlinked mentions.
std::vector<std::optional<std::int64_t>> np_gold(const mlgraph::MultiLayeredGraph& g);

// `cluster_id \t kind \t node_id \t surface`, NP clusters then RP clusters.
void write_clusters_tsv(const mlgraph::MultiLayeredGraph& g, const cluster::Clustering& np,
                        const cluster::Clustering& rp, const std::filesystem::path& path);

}  // namespace okbc::pipeline
