#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "okbc/config.hpp"
#include "okbc/corpus.hpp"
#include "okbc/embed.hpp"
#include "okbc/kernels.hpp"
#include "okbc/mlgraph.hpp"
#include "okbc/pipeline.hpp"
#include "okbc/rng.hpp"

namespace fixtures {

namespace fs = std::filesystem;

// Fresh per-test scratch directory under the system temp dir.
inline fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("okbc_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

inline void write_file(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline okbc::Matrix rows(std::initializer_list<std::vector<double>> list) {
  const std::size_t cols = list.size() ? list.begin()->size() : 0;
  okbc::Matrix m(list.size(), cols);
  std::size_t r = 0;
  for (const auto& v : list) {
    std::copy(v.begin(), v.end(), m.row(r++).begin());
  }
  return m;
}

inline okbc::Matrix random_unit_rows(std::size_t n, std::size_t dim, okbc::Rng& rng) {
  okbc::Matrix m(n, dim);
  for (std::size_t r = 0; r < n; ++r) {
    for (double& x : m.row(r)) x = rng.normal();
    okbc::kernels::normalize(m.row(r));
  }
  return m;
}

// Corpus with one sentence per tuple; surfaces given as {subj, rel, obj}.
inline okbc::corpus::Corpus make_corpus(const std::vector<std::vector<std::string>>& triples) {
  okbc::corpus::Corpus c;
  for (std::size_t t = 0; t < triples.size(); ++t) {
    const auto id = static_cast<std::int64_t>(t);
    c.tuples.push_back({id, id, triples[t][0], triples[t][1], triples[t][2]});
    c.sentences.push_back({id, triples[t][0] + " " + triples[t][1] + " " + triples[t][2]});
  }
  return c;
}

// Graph with random unit embeddings of the given dimension.
inline okbc::mlgraph::MultiLayeredGraph random_graph(okbc::corpus::Corpus c, std::size_t dim, okbc::Rng& rng) {
  okbc::embed::SemanticEmbeddings e;
  e.dim = dim;
  e.np = random_unit_rows(2 * c.tuples.size(), dim, rng);
  e.rp = random_unit_rows(okbc::corpus::relation_phrases(c).size(), dim, rng);
  e.sent = random_unit_rows(c.sentences.size(), dim, rng);
  return okbc::mlgraph::build_graph(std::move(c), std::move(e));
}

// Random corpus: n tuples over small NP/RP vocabularies, sentences shared
// by consecutive tuples now and then.
inline okbc::corpus::Corpus random_corpus(std::size_t n, std::size_t n_np, std::size_t n_rp, okbc::Rng& rng) {
  okbc::corpus::Corpus c;
  std::int64_t sid = -1;
  for (std::size_t t = 0; t < n; ++t) {
    if (t == 0 || rng.uniform01() < 0.7) {
      ++sid;
      c.sentences.push_back({sid, "sentence " + std::to_string(sid)});
    }
    c.tuples.push_back({static_cast<std::int64_t>(t), sid, "np" + std::to_string(rng.uniform_index(n_np)),
                        "rp" + std::to_string(rng.uniform_index(n_rp)),
                        "np" + std::to_string(rng.uniform_index(n_np))});
  }
  return c;
}

// Synthetic corpus written to a scratch dir, with a run config pointing at it.
inline okbc::config::KeyValues synth_config(const std::string& name, const okbc::corpus::SynthConfig& sc,
                                            std::uint64_t seed) {
  const auto dir = scratch(name);
  okbc::corpus::write_synthetic(okbc::corpus::generate_synthetic(sc, seed), dir / "data");
  okbc::config::KeyValues kv;
  kv.set("paths.corpus_dir", (dir / "data").string());
  kv.set("paths.np_embeddings", (dir / "data" / "tokens.vec").string());
  kv.set("paths.out", (dir / "out").string());
  return kv;
}

inline okbc::mlgraph::MultiLayeredGraph synth_graph(const okbc::corpus::SynthConfig& sc, std::uint64_t seed) {
  const auto cfg = okbc::config::resolve(synth_config("graph", sc, seed));
  return okbc::pipeline::prepare_graph(cfg, okbc::pipeline::load_inputs(cfg));
}

}  // namespace fixtures
