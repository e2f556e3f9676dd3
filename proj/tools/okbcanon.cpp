// okbcanon: command-line front end for the canonicalization pipeline.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "okbc/cluster.hpp"
#include "okbc/config.hpp"
#include "okbc/corpus.hpp"
#include "okbc/error.hpp"
#include "okbc/evalx.hpp"
#include "okbc/log.hpp"
#include "okbc/metagraph.hpp"
#include "okbc/parallel.hpp"
#include "okbc/pipeline.hpp"
#include "okbc/train.hpp"

namespace fs = std::filesystem;
using namespace okbc;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::string out;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c, bool with_config = true) {
  if (with_config) {
    cmd->add_option("--config", c.config, "Run configuration (key = value lines)");
    cmd->add_option("--set", c.sets, "Override one config entry, key=value (repeatable)");
  }
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--threads", c.threads, "Worker thread cap")->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "Output directory");
}

config::RunConfig load_config(const Common& c) {
  config::KeyValues kv;
  if (!c.config.empty()) kv.merge_file(c.config);
  for (const auto& s : c.sets) kv.merge_assignment(s);
  if (c.seed) kv.set("seed", std::to_string(*c.seed));
  if (c.threads) kv.set("threads", std::to_string(*c.threads));
  if (!c.out.empty()) kv.set("paths.out", c.out);
  return config::resolve(kv);
}

int cmd_canonicalize(const Common& c) {
  const auto cfg = load_config(c);
  const auto r = pipeline::run_canonicalize(cfg, true);
  if (r.np_report) evalx::print_table(*r.np_report, std::cout);
  log::info("wrote " + cfg.out.string());
  return 0;
}

int cmd_evaluate(const std::string& pred, const std::string& gold, const std::string& kind, const Common& c) {
  const auto report = evalx::report(evalx::load_assignment(pred, kind), evalx::load_assignment(gold, kind));
  evalx::print_table(report, std::cout);
  if (!c.out.empty()) {
    fs::create_directories(c.out);
    std::ofstream f(fs::path(c.out) / "report.json", std::ios::binary);
    f << evalx::to_json(report) << '\n';
  }
  return 0;
}

int cmd_gradcheck(const train::GradCheckConfig& dims, std::uint64_t seed, std::size_t seeds) {
  double worst = 0.0;
  for (std::size_t s = 0; s < seeds; ++s) {
    const auto r = train::grad_check(dims, seed + s);
    std::printf("seed %llu max_rel_error %.3e at layer %zu row %zu col %zu (%zu entries, loss %.6f)\n",
                static_cast<unsigned long long>(seed + s), r.max_rel_error, r.layer, r.row, r.col, r.entries,
                r.loss);
    worst = std::max(worst, r.max_rel_error);
  }
  std::printf("max_rel_error %.3e\n", worst);
  return worst <= 1e-4 ? 0 : 1;
}

int cmd_synth(const corpus::SynthConfig& sc, const Common& c) {
  const auto out = corpus::generate_synthetic(sc, c.seed.value_or(0));
  const fs::path dir = c.out.empty() ? fs::path("synth") : fs::path(c.out);
  fs::create_directories(dir);
  corpus::write_synthetic(out, dir);
  log::info("wrote " + std::to_string(out.corpus.tuples.size()) + " tuples to " + dir.string());
  return 0;
}

int cmd_pairs(const Common& c, bool exhaustive) {
  const auto cfg = load_config(c);
  set_thread_cap(cfg.threads);
  const auto g = pipeline::prepare_graph(cfg, pipeline::load_inputs(cfg));
  const auto pairs = exhaustive ? metagraph::exhaustive_pairs(g, cfg.pairs) : metagraph::generate_pairs(g, cfg.pairs);
  if (c.out.empty()) {
    metagraph::write_pairs_tsv(g, pairs, std::cout);
  } else {
    fs::create_directories(c.out);
    std::ofstream f(fs::path(c.out) / "pairs.tsv", std::ios::binary);
    metagraph::write_pairs_tsv(g, pairs, f);
  }
  return 0;
}

int cmd_split(const Common& c, double fraction) {
  const auto cfg = load_config(c);
  const auto corpus = pipeline::load_inputs(cfg);
  const auto split = corpus::split_validation(corpus, fraction, cfg.seed);
  fs::create_directories(cfg.out / "train");
  fs::create_directories(cfg.out / "validation");
  corpus::write_corpus(split.train, cfg.out / "train");
  corpus::write_corpus(split.validation, cfg.out / "validation");
  std::cout << "validation entities:";
  for (auto e : split.validation_entities) std::cout << ' ' << e;
  std::cout << "\ntrain tuples " << split.train.tuples.size() << ", validation tuples "
            << split.validation.tuples.size() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (!log::init_from_env()) {
    std::cerr << "OKB_CANON_LOG must be one of error, info, debug\n";
    return 2;
  }
  CLI::App app{"Open KB noun/relation phrase canonicalization"};
  app.require_subcommand(1);

  Common canon_opts;
  auto* canon = app.add_subcommand("canonicalize", "Run the full pipeline and write clusters");
  add_common(canon, canon_opts);

  Common eval_opts;
  std::string pred, gold, kind = "NP";
  auto* eval = app.add_subcommand("evaluate", "Score a clustering file against a gold clustering file");
  eval->add_option("pred", pred, "Predicted clusters (cluster_id, kind, node_id[, surface])")->required();
  eval->add_option("gold", gold, "Gold clusters, same format")->required();
  eval->add_option("--kind", kind, "Row kind to compare (NP, RP; empty = all)");
  add_common(eval, eval_opts, false);

  Common gc_opts;
  train::GradCheckConfig dims;
  std::size_t seeds = 1;
  std::string act = "tanh";
  auto* gc = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  add_common(gc, gc_opts, false);
  gc->add_option("--d0", dims.d0)->check(CLI::Range(1, 32));
  gc->add_option("--d", dims.d)->check(CLI::Range(1, 32));
  gc->add_option("--K", dims.K)->check(CLI::Range(0, 4));
  gc->add_option("--tuples", dims.n_tuples, "Tuples in the random instance")->check(CLI::Range(2, 16));
  gc->add_option("--nonlinearity", act)->check(CLI::IsMember({"relu", "sigmoid", "tanh"}));
  gc->add_option("--step", dims.step);
  gc->add_option("--seeds", seeds, "Number of consecutive seeds")->check(CLI::PositiveNumber);

  Common synth_opts;
  corpus::SynthConfig sc;
  auto* synth = app.add_subcommand("synth", "Write a synthetic corpus with planted clusters");
  add_common(synth, synth_opts, false);
  synth->add_option("--entities", sc.n_entities);
  synth->add_option("--mentions", sc.mentions_per_entity);
  synth->add_option("--relations", sc.n_relations);
  synth->add_option("--tuples", sc.n_tuples, "0 = entities * mentions / 2");
  synth->add_option("--ambiguity", sc.ambiguity_pairs, "Planted same-surface pairs");
  synth->add_option("--noise", sc.noise_sigma);
  synth->add_option("--dim", sc.embedding_dim, "Token vector dimension");
  synth->add_option("--aliases", sc.aliases_per_entity);
  synth->add_option("--paraphrases", sc.paraphrases_per_relation);

  Common pairs_opts;
  bool exhaustive = false;
  auto* pairs = app.add_subcommand("pairs", "Write the four training pair sets");
  add_common(pairs, pairs_opts);
  pairs->add_flag("--exhaustive", exhaustive, "Use the O(N^2) reference enumeration");

  Common split_opts;
  double fraction = 0.2;
  auto* split = app.add_subcommand("split", "Entity-level train/validation split");
  add_common(split, split_opts);
  split->add_option("--fraction", fraction)->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*canon) return cmd_canonicalize(canon_opts);
    if (*eval) return cmd_evaluate(pred, gold, kind, eval_opts);
    if (*gc) {
      dims.act = gnn::parse_nonlinearity(act);
      if (gc_opts.threads) set_thread_cap(*gc_opts.threads);
      return cmd_gradcheck(dims, gc_opts.seed.value_or(0), seeds);
    }
    if (*synth) return cmd_synth(sc, synth_opts);
    if (*pairs) return cmd_pairs(pairs_opts, exhaustive);
    if (*split) return cmd_split(split_opts, fraction);
  } catch (const Error& e) {
    log::error(std::string(errc_name(e.code())) + ": " + e.what());
    return 1;
  } catch (const std::exception& e) {
    log::error(e.what());
    return 1;
  }
  return 1;
}
