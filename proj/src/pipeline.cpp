#include "okbc/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "okbc/error.hpp"
#include "okbc/gnn.hpp"
#include "okbc/log.hpp"
#include "okbc/parallel.hpp"

namespace okbc::pipeline {

namespace fs = std::filesystem;

corpus::Corpus load_inputs(const config::RunConfig& cfg) {
  const auto pick = [&](const fs::path& explicit_path, const char* name) -> fs::path {
    if (!explicit_path.empty()) return explicit_path;
    if (cfg.corpus_dir.empty()) {
      throw Error(Errc::invalid_config, std::string("set paths.corpus_dir or paths.") + name);
    }
    return cfg.corpus_dir / (std::string(name) + ".tsv");
  };
  const fs::path tuples = pick(cfg.tuples, "tuples");
  const fs::path sentences = pick(cfg.sentences, "sentences");
  std::optional<fs::path> gold;
  if (!cfg.gold.empty()) {
    gold = cfg.gold;
  } else if (!cfg.corpus_dir.empty() && fs::exists(cfg.corpus_dir / "gold.tsv")) {
    gold = cfg.corpus_dir / "gold.tsv";
  }
  for (const auto& p : {tuples, sentences}) {
    if (!fs::exists(p)) throw Error(Errc::io_error, "missing input file " + p.string());
  }
  auto c = corpus::load_corpus(tuples, sentences, gold);
  log::info("corpus: " + std::to_string(c.tuples.size()) + " tuples, " + std::to_string(c.sentences.size()) +
            " sentences" + (c.gold ? ", " + std::to_string(c.gold->size()) + " gold links" : ""));
  return c;
}

mlgraph::MultiLayeredGraph prepare_graph(const config::RunConfig& cfg, corpus::Corpus c) {
  const auto load = [&](const fs::path& p) {
    if (p.empty()) return embed::EmbeddingTable(cfg.d0);
    if (!fs::exists(p)) throw Error(Errc::io_error, "embedding table not found: " + p.string());
    return embed::EmbeddingTable::load(p);
  };
  const auto np_table = load(cfg.np_embeddings);
  const auto rp_table = cfg.rp_embeddings.empty() ? load(cfg.np_embeddings) : load(cfg.rp_embeddings);
  std::optional<embed::EmbeddingTable> sent_table;
  embed::SentenceSource source = embed::BowSvdSource{cfg.svd};
  if (!cfg.sentence_embeddings.empty()) {
    sent_table = load(cfg.sentence_embeddings);
    source = &*sent_table;
  }
  auto emb = embed::attach_embeddings(c, np_table, rp_table, source, cfg.d0);
  if (emb.degenerate > 0) log::info(std::to_string(emb.degenerate) + " embeddings fell back to hash vectors");
  auto g = mlgraph::build_graph(std::move(c), std::move(emb));
  log::info("graph: " + std::to_string(g.size(mlgraph::Layer::np)) + " NP, " +
            std::to_string(g.size(mlgraph::Layer::rp)) + " RP, " + std::to_string(g.size(mlgraph::Layer::sent)) +
            " sentence nodes");
  return g;
}

std::vector<std::optional<std::int64_t>> np_gold(const mlgraph::MultiLayeredGraph& g) {
  const auto& c = g.corpus();
  std::vector<std::optional<std::int64_t>> out(g.size(mlgraph::Layer::np));
  if (!c.gold) return out;
  const corpus::CorpusIndex index(c);
  for (std::size_t t = 0; t < c.tuples.size(); ++t) {
    for (auto role : {corpus::Role::subject, corpus::Role::object}) {
      out[mlgraph::MultiLayeredGraph::np_of(t, role)] = index.gold_of(c.tuples[t].tuple_id, role);
    }
  }
  return out;
}

void write_clusters_tsv(const mlgraph::MultiLayeredGraph& g, const cluster::Clustering& np,
                        const cluster::Clustering& rp, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  const auto& c = g.corpus();
  for (std::size_t id = 0; id < np.clusters.size(); ++id) {
    for (auto v : np.clusters[id]) {
      const auto& node = g.np_node(v);
      out << id << "\tNP\t" << g.node_label({mlgraph::Layer::np, v}) << '\t'
          << c.tuples[node.tuple_pos].np(node.role) << '\n';
    }
  }
  for (std::size_t id = 0; id < rp.clusters.size(); ++id) {
    for (auto v : rp.clusters[id]) {
      out << id << "\tRP\t" << g.node_label({mlgraph::Layer::rp, v}) << '\t' << g.rp_surface(v) << '\n';
    }
  }
}

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

// Tunes the NP threshold on the NP nodes of validation entities. Returns
// nullopt when there is no gold or too few entities to sample from.
std::optional<cluster::TuneResult> tune_on_validation(const config::RunConfig& cfg,
                                                      const mlgraph::MultiLayeredGraph& g,
                                                      const train::CanonicalEmbeddings& z) {
  if (!g.corpus().gold) return std::nullopt;
  corpus::Split split;
  try {
    split = corpus::split_validation(g.corpus(), cfg.validation_fraction, sub_seed(cfg.seed, "split"));
  } catch (const Error& e) {
    log::info(std::string("threshold tuning skipped: ") + e.what());
    return std::nullopt;
  }
  const std::set<std::int64_t> entities(split.validation_entities.begin(), split.validation_entities.end());
  const auto gold = np_gold(g);
  std::vector<std::uint32_t> rows;
  std::vector<std::int64_t> labels;
  for (std::uint32_t v = 0; v < gold.size(); ++v) {
    if (gold[v] && entities.count(*gold[v])) {
      rows.push_back(v);
      labels.push_back(*gold[v]);
    }
  }
  if (rows.empty()) return std::nullopt;
  Matrix zv(rows.size(), z.np.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = z.np.row(rows[i]);
    std::copy(src.begin(), src.end(), zv.row(i).begin());
  }
  auto best = cluster::tune_threshold(zv, labels, cfg.linkage, cfg.grid);
  log::info("tuned NP threshold " + fmt(best.threshold) + " on " + std::to_string(entities.size()) +
            " validation entities (" + std::to_string(rows.size()) + " mentions, average F1 " +
            fmt(best.average_f1) + ")");
  return best;
}

}  // namespace

CanonicalizeResult run_canonicalize(const config::RunConfig& cfg, bool write) {
  set_thread_cap(cfg.threads);
  auto g = prepare_graph(cfg, load_inputs(cfg));
  auto pairs = metagraph::generate_pairs(g, cfg.pairs);
  log::info("pairs: meta+ " + std::to_string(pairs.meta_pos.size()) + ", meta- " +
            std::to_string(pairs.meta_neg.size()) + ", intra+ " + std::to_string(pairs.intra_pos.size()) +
            ", intra- " + std::to_string(pairs.intra_neg.size()));

  auto trained = train::train(g, pairs, cfg.loss, cfg.train);
  for (const auto& e : trained.history) {
    log::debug("epoch " + std::to_string(e.epoch) + " loss " + fmt(e.loss) + " active " + fmt(e.active_fraction));
  }
  if (trained.z.degenerate > 0) {
    log::info(std::to_string(trained.z.degenerate) + " canonical embeddings collapsed to the zero sentinel");
  }

  CanonicalizeResult r{std::move(g), std::move(pairs), std::move(trained), {}, {}, 0.0, 0.0, false, std::nullopt};
  const auto& z = r.trained.z;
  if (cfg.np_threshold) {
    r.np_threshold = *cfg.np_threshold;
  } else if (auto tuned = tune_on_validation(cfg, r.graph, z)) {
    r.np_threshold = tuned->threshold;
    r.tuned = true;
  } else {
    r.np_threshold = cfg.fallback_threshold;
  }
  r.rp_threshold = cfg.rp_threshold.value_or(r.np_threshold);
  if (z.np.rows() > 0) r.np = cluster::hac(z.np, cfg.linkage, r.np_threshold);
  if (z.rp.rows() > 0) r.rp = cluster::hac(z.rp, cfg.linkage, r.rp_threshold);
  log::info("clusters: " + std::to_string(r.np.clusters.size()) + " NP (threshold " + fmt(r.np_threshold) + "), " +
            std::to_string(r.rp.clusters.size()) + " RP (threshold " + fmt(r.rp_threshold) + ")");

  const auto gold = np_gold(r.graph);
  std::vector<std::int64_t> pred_labels, gold_labels;
  for (std::size_t v = 0; v < gold.size(); ++v) {
    if (!gold[v]) continue;
    pred_labels.push_back(static_cast<std::int64_t>(r.np.assignment[v]));
    gold_labels.push_back(*gold[v]);
  }
  if (!gold_labels.empty()) r.np_report = evalx::report(pred_labels, gold_labels);

  if (write) {
    fs::create_directories(cfg.out);
    write_clusters_tsv(r.graph, r.np, r.rp, cfg.out / "clusters.tsv");
    gnn::write_embeddings_tsv(r.graph, z, cfg.out / "embeddings.tsv");
    train::write_history_csv(r.trained.history, cfg.out / "loss_history.csv");
    {
      std::ofstream f(cfg.out / "run_config_resolved", std::ios::binary);
      if (!f) throw Error(Errc::io_error, "cannot write " + (cfg.out / "run_config_resolved").string());
      f << cfg.resolved.dump();
    }
    if (cfg.write_graph) mlgraph::write_graph_tsv(r.graph, cfg.out / "graph.tsv");
    if (cfg.write_pairs) {
      std::ofstream f(cfg.out / "pairs.tsv", std::ios::binary);
      metagraph::write_pairs_tsv(r.graph, r.pairs, f);
    }
    if (cfg.write_model && cfg.train.use_gnn) gnn::save_checkpoint(r.trained.params, cfg.out / "model.bin");
    if (r.np_report) {
      std::ofstream f(cfg.out / "report.json", std::ios::binary);
      f << evalx::to_json(*r.np_report) << '\n';
    }
  }
  return r;
}

}  // namespace okbc::pipeline
