#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "okbc/error.hpp"
#include "okbc/mlgraph.hpp"

using namespace okbc;
using namespace okbc::mlgraph;

namespace {

MultiLayeredGraph graph_with(corpus::Corpus c, Matrix np, Matrix rp, Matrix sent) {
  embed::SemanticEmbeddings e;
  e.dim = np.cols();
  e.np = std::move(np);
  e.rp = std::move(rp);
  e.sent = std::move(sent);
  return build_graph(std::move(c), std::move(e));
}

}  // namespace

TEST_CASE("same surface in two tuples gives two NP nodes") {
  Rng rng(1);
  const auto g = fixtures::random_graph(
      fixtures::make_corpus({{"jordan", "be president of", "us"}, {"jordan", "be born in", "leeds"}}), 4, rng);
  CHECK(g.size(Layer::np) == 4);
  CHECK(g.np_node(0).tuple_pos == 0);
  CHECK(g.np_node(2).tuple_pos == 1);
  CHECK(g.np_node(2).role == corpus::Role::subject);
  CHECK(g.node_label({Layer::np, 3}) == "1:obj");
}

TEST_CASE("shared relation phrase is one RP node with both sentences") {
  Rng rng(2);
  const auto g = fixtures::random_graph(
      fixtures::make_corpus({{"smith", "be president of", "us"}, {"jones", "be president of", "us"}}), 4, rng);
  CHECK(g.size(Layer::rp) == 1);
  CHECK(g.sentences_of_rp(0).size() == 2);
  CHECK(g.tuples_of_rp(0).size() == 2);
}

TEST_CASE("empty corpus gives an empty graph") {
  embed::SemanticEmbeddings e;
  e.dim = 4;
  const auto g = build_graph({}, e);
  CHECK(g.size(Layer::np) == 0);
  CHECK(g.size(Layer::rp) == 0);
  CHECK(g.size(Layer::sent) == 0);
  CHECK(g.e_23().empty());
}

TEST_CASE("build_graph rejects embeddings that do not cover the nodes") {
  auto c = fixtures::make_corpus({{"a", "r", "b"}});
  try {
    graph_with(c, Matrix(1, 2), Matrix(1, 2), Matrix(1, 2));
    FAIL("expected MissingEmbedding");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::missing_embedding);
  }
}

TEST_CASE("phi hand values") {
  auto c = fixtures::make_corpus({{"a", "r", "b"}, {"c", "q", "d"}});
  const auto g = graph_with(c, fixtures::rows({{1, 0}, {0, 1}, {0.6, 0.8}, {0.8, 0.6}}),
                            fixtures::rows({{1, 0}, {0, 1}}), fixtures::rows({{1, 0}, {0, 1}}));
  CHECK(phi(g, {Layer::np, 0}, {Layer::np, 0}) == 1.0);
  CHECK(phi(g, {Layer::np, 0}, {Layer::np, 1}) == 0.0);
  CHECK(phi(g, {Layer::np, 2}, {Layer::np, 3}) == doctest::Approx(0.96).epsilon(1e-12));
  try {
    phi(g, {Layer::np, 0}, {Layer::rp, 0});
    FAIL("expected CrossLayer");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::cross_layer);
  }
}

TEST_CASE("inter_neighbors examples") {
  auto c = fixtures::make_corpus({{"a", "r", "b"}, {"c", "r", "d"}, {"e", "r", "f"}, {"g", "q", "h"}});
  c.sentences.push_back({99, "orphan sentence"});
  c.tuples[1].sentence_id = 0;  // tuples 0 and 1 share a sentence
  Rng rng(3);
  const auto g = fixtures::random_graph(c, 4, rng);
  const auto np = inter_neighbors(g, {Layer::np, 5});
  REQUIRE(np.size() == 1);
  CHECK(np[0] == NodeId{Layer::rp, 0});
  const auto rp = inter_neighbors(g, {Layer::rp, 0});
  const auto n_np = std::count_if(rp.begin(), rp.end(), [](NodeId v) { return v.layer == Layer::np; });
  const auto n_s = std::count_if(rp.begin(), rp.end(), [](NodeId v) { return v.layer == Layer::sent; });
  CHECK(n_np == 6);
  CHECK(n_s == 2);
  CHECK(inter_neighbors(g, {Layer::sent, 4}).empty());
}

TEST_CASE("graph properties on random corpora") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = fixtures::random_corpus(1 + rng.uniform_index(30), 6, 4, rng);
    const auto g = fixtures::random_graph(c, 5, rng);
    CHECK(g.e_subj_12().size() == c.tuples.size());
    CHECK(g.e_obj_12().size() == c.tuples.size());
    std::set<std::pair<std::uint32_t, std::uint32_t>> incidences;
    for (std::size_t t = 0; t < c.tuples.size(); ++t) incidences.emplace(g.rp_of_tuple(t), g.sent_of_tuple(t));
    CHECK(g.e_23().size() == incidences.size());

    for (auto layer : {Layer::np, Layer::rp, Layer::sent}) {
      for (std::uint32_t u = 0; u < g.size(layer); ++u) {
        for (const auto& v : inter_neighbors(g, {layer, u})) {
          const auto back = inter_neighbors(g, v);
          CHECK(std::find(back.begin(), back.end(), NodeId{layer, u}) != back.end());
        }
        for (std::uint32_t w = 0; w < g.size(layer); ++w) {
          const double a = phi(g, {layer, u}, {layer, w}), b = phi(g, {layer, w}, {layer, u});
          CHECK(a == b);
          CHECK(std::abs(a) <= 1.0 + 1e-9);
        }
      }
    }
    for (std::uint32_t v = 0; v < g.size(Layer::np); ++v) CHECK(inter_neighbors(g, {Layer::np, v}).size() == 1);
  }
}
