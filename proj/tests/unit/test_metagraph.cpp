#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "okbc/error.hpp"
#include "okbc/metagraph.hpp"

using namespace okbc;
using namespace okbc::metagraph;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double dotv(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Brute-force scores straight from the corpus and the embedding matrices.
struct Oracle {
  const corpus::Corpus& c;
  const embed::SemanticEmbeddings& e;
  std::map<std::int64_t, std::size_t> sent_row;
  std::vector<std::string> rels;

  Oracle(const corpus::Corpus& c_, const embed::SemanticEmbeddings& e_) : c(c_), e(e_) {
    for (std::size_t s = 0; s < c.sentences.size(); ++s) sent_row[c.sentences[s].sentence_id] = s;
    rels = corpus::relation_phrases(c);
  }

  std::size_t rp_row(const std::string& rel) const {
    return static_cast<std::size_t>(std::find(rels.begin(), rels.end(), rel) - rels.begin());
  }

  double mean_dot(const Matrix& m, const std::set<std::size_t>& a, const std::set<std::size_t>& b) const {
    double s = 0;
    for (auto i : a) {
      for (auto j : b) s += dotv(m.row(i), m.row(j));
    }
    return s / static_cast<double>(a.size() * b.size());
  }

  std::set<std::size_t> np_sentences(std::size_t t) const {
    std::set<std::size_t> out;
    const auto& x = c.tuples[t];
    for (const auto& y : c.tuples) {
      if (y.subj == x.subj && y.rel == x.rel && y.obj == x.obj) out.insert(sent_row.at(y.sentence_id));
    }
    return out;
  }

  NpComponents np(std::uint32_t e1, std::uint32_t e2) const {
    const std::size_t t1 = e1 / 2, t2 = e2 / 2;
    NpComponents k;
    k.sentences = mean_dot(e.sent, np_sentences(t1), np_sentences(t2));
    k.relation = dotv(e.rp.row(rp_row(c.tuples[t1].rel)), e.rp.row(rp_row(c.tuples[t2].rel)));
    k.opposite = dotv(e.np.row(e1 ^ 1u), e.np.row(e2 ^ 1u));
    k.self = dotv(e.np.row(e1), e.np.row(e2));
    return k;
  }

  RpComponents rp(std::uint32_t r1, std::uint32_t r2) const {
    std::set<std::size_t> s[2], subj[2], obj[2];
    const std::uint32_t rs[2] = {r1, r2};
    for (int i = 0; i < 2; ++i) {
      for (std::size_t t = 0; t < c.tuples.size(); ++t) {
        if (rp_row(c.tuples[t].rel) != rs[i]) continue;
        s[i].insert(sent_row.at(c.tuples[t].sentence_id));
        subj[i].insert(2 * t);
        obj[i].insert(2 * t + 1);
      }
    }
    RpComponents k;
    k.sentences = mean_dot(e.sent, s[0], s[1]);
    k.relation = dotv(e.rp.row(r1), e.rp.row(r2));
    k.subjects = mean_dot(e.np, subj[0], subj[1]);
    k.objects = mean_dot(e.np, obj[0], obj[1]);
    return k;
  }

  double psi(const NpComponents& k) const { return (k.sentences + k.relation + k.opposite + k.self) / 4; }
  double psi(const RpComponents& k) const { return (k.sentences + k.relation + k.subjects + k.objects) / 4; }
  double neg(const NpComponents& k) const {
    return sig(-2 * k.opposite / std::max(k.sentences + k.relation, 0.1));
  }
  double neg(const RpComponents& k) const {
    const double a = k.subjects, b = k.objects;
    return sig(-2 * std::min(a, b) / std::max(k.sentences + std::max(a, b), 0.1));
  }
};

mlgraph::MultiLayeredGraph graph_with(corpus::Corpus c, Matrix np, Matrix rp, Matrix sent) {
  embed::SemanticEmbeddings e;
  e.dim = np.cols();
  e.np = std::move(np);
  e.rp = std::move(rp);
  e.sent = std::move(sent);
  return mlgraph::build_graph(std::move(c), std::move(e));
}

}  // namespace

TEST_CASE("phi_hat examples") {
  const auto c = fixtures::make_corpus({{"a", "r", "b"}});
  const auto g = graph_with(c, fixtures::rows({{1, 0}, {0, 1}}), fixtures::rows({{1, 0}}), fixtures::rows({{1, 0}}));
  const NodeId u{Layer::np, 0}, v{Layer::np, 1};
  const std::vector<NodeId> A{u}, B{u, v}, none;
  CHECK(phi_hat(g, A, A) == 1.0);
  CHECK(phi_hat(g, A, B) == doctest::Approx(0.5).epsilon(1e-15));
  try {
    phi_hat(g, none, B);
    FAIL("expected EmptySet");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::empty_set);
  }
}

TEST_CASE("formula-level values") {
  CHECK(canonical_weight(NpComponents{0.8, 0.6, 0.4, 0.2}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(canonical_weight(RpComponents{1.0, 0.5, 0.0, -0.5}) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(canonical_weight(NpComponents{1, 1, 1, 1}) == 1.0);
  CHECK(negative_probability(NpComponents{0.9, 0.9, -0.9, 0}) == doctest::Approx(0.7310586).epsilon(1e-7));
  CHECK(negative_probability(NpComponents{0.9, 0.9, 0.9, 0}) == doctest::Approx(0.268941).epsilon(1e-6));
  CHECK(negative_probability(NpComponents{0.5, 0.5, 0.0, 0}) == 0.5);
  // sigma(1.8 / 1.4); exact value 0.78342090...
  CHECK(std::abs(negative_probability(RpComponents{0.8, 0.0, 0.6, -0.9}) - 0.7834209042) <= 1e-9);
  CHECK(negative_probability(RpComponents{0.5, 0.0, 0.0, 0.7}) == 0.5);
  // Strictly decreasing in the opposite-NP similarity.
  double prev = 1.0;
  for (double x = -1.0; x <= 1.0; x += 0.125) {
    const double p = negative_probability(NpComponents{0.6, 0.3, x, 0});
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("meta-graph construction errors") {
  Rng rng(5);
  const auto g = fixtures::random_graph(fixtures::make_corpus({{"a", "r", "b"}, {"c", "q", "d"}}), 3, rng);
  const auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::io_error;
  };
  CHECK(code([&] { np_metagraph(g, {Layer::np, 0}, {Layer::np, 3}); }) == Errc::role_mismatch);
  CHECK(code([&] { np_metagraph(g, {Layer::np, 0}, {Layer::np, 0}); }) == Errc::same_pair);
  CHECK(code([&] { rp_metagraph(g, {Layer::rp, 1}, {Layer::rp, 1}); }) == Errc::same_pair);
  CHECK(code([&] { psi_np(g, {Layer::rp, 0}, {Layer::np, 0}); }) == Errc::wrong_node_kind);
}

TEST_CASE("psi and psi_neg equal a brute-force recomputation") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    auto c = fixtures::random_corpus(4 + rng.uniform_index(12), 5, 3, rng);
    // duplicate a triple so sentence sets hold more than one sentence
    auto dup = c.tuples.front();
    dup.tuple_id = 1000;
    dup.sentence_id = c.sentences.back().sentence_id;
    c.tuples.push_back(dup);
    const auto g = fixtures::random_graph(c, 4, rng);
    const Oracle o(g.corpus(), g.embeddings());
    const MetaScorer fast(g);
    for (std::uint32_t a = 0; a < g.size(Layer::np); ++a) {
      for (std::uint32_t b = a + 2; b < g.size(Layer::np); b += 2) {
        const NodeId u{Layer::np, a}, v{Layer::np, b};
        const auto k = o.np(a, b);
        CHECK(std::abs(psi_np(g, u, v) - o.psi(k)) <= 1e-12);
        CHECK(std::abs(psi_neg_np(g, u, v) - o.neg(k)) <= 1e-12);
        CHECK(psi_np(g, u, v) == psi_np(g, v, u));
        CHECK(psi_neg_np(g, u, v) == psi_neg_np(g, v, u));
        CHECK(std::abs(canonical_weight(fast.np(a, b)) - o.psi(k)) <= 1e-12);
        CHECK(std::abs(psi_np(g, u, v)) <= 1.0 + 1e-12);
      }
    }
    for (std::uint32_t a = 0; a < g.size(Layer::rp); ++a) {
      for (std::uint32_t b = a + 1; b < g.size(Layer::rp); ++b) {
        const NodeId u{Layer::rp, a}, v{Layer::rp, b};
        const auto k = o.rp(a, b);
        CHECK(std::abs(psi_rp(g, u, v) - o.psi(k)) <= 1e-12);
        CHECK(std::abs(psi_neg_rp(g, u, v) - o.neg(k)) <= 1e-12);
        CHECK(psi_neg_rp(g, u, v) == doctest::Approx(psi_neg_rp(g, v, u)).epsilon(1e-15));
        CHECK(std::abs(canonical_weight(fast.rp(a, b)) - o.psi(k)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("psi_rp on a hand-built 4-tuple fixture") {
  const auto c = fixtures::make_corpus(
      {{"a", "born in", "x"}, {"b", "born in", "y"}, {"c", "native of", "x"}, {"d", "native of", "z"}});
  Rng rng(7);
  const auto g = fixtures::random_graph(c, 3, rng);
  const Oracle o(g.corpus(), g.embeddings());
  const auto k = o.rp(0, 1);
  CHECK(std::abs(psi_rp(g, {Layer::rp, 0}, {Layer::rp, 1}) - o.psi(k)) <= 1e-12);
}

TEST_CASE("ambiguous same-surface subjects land in meta_neg") {
  const auto c = fixtures::make_corpus({{"jordan", "be born in", "leeds"}, {"jordan", "be born in", "york"}});
  const double y = std::sqrt(1.0 - 0.81);
  const auto g = graph_with(c,
                            fixtures::rows({{1, 0, 0}, {0, 1, 0}, {1, 0, 0}, {0, -0.9, y}}),
                            fixtures::rows({{0, 0, 1}}), fixtures::rows({{0, 1, 0}, {0, 1, 0}}));
  const NodeId e1{Layer::np, 0}, e2{Layer::np, 2};
  CHECK(phi(g, {Layer::np, 1}, {Layer::np, 3}) == doctest::Approx(-0.9));
  CHECK(psi_neg_np(g, e1, e2) > 0.7);
  const auto pairs = generate_pairs(g, PairConfig{});
  bool found = false;
  for (const auto& p : pairs.meta_neg) found = found || (p.kind == PhraseKind::np && p.a == 0 && p.b == 2);
  CHECK(found);
  for (const auto& p : pairs.meta_pos) CHECK(!(p.a == 0 && p.b == 2 && p.kind == PhraseKind::np));
}

TEST_CASE("generate_pairs edge cases") {
  Rng rng(8);
  const auto g = fixtures::random_graph(fixtures::random_corpus(12, 4, 3, rng), 3, rng);
  PairConfig cfg;
  cfg.theta_meta_pos = 1.01;
  CHECK(generate_pairs(g, cfg).meta_pos.empty());

  embed::SemanticEmbeddings e;
  e.dim = 3;
  const auto empty = mlgraph::build_graph({}, e);
  CHECK(exhaustive_pairs(empty, PairConfig{}) == PairSets{});
  const auto single = fixtures::random_graph(fixtures::make_corpus({{"a", "r", "b"}}), 3, rng);
  const auto s = exhaustive_pairs(single, PairConfig{});
  CHECK(s.meta_pos.empty());
  CHECK(s.meta_neg.empty());
  CHECK(s.meta_scored.empty());

  const auto full = exhaustive_pairs(g, PairConfig{});
  std::set<std::tuple<int, std::uint32_t, std::uint32_t>> pos;
  for (const auto& p : full.intra_pos) pos.emplace(int(p.kind), p.a, p.b);
  for (const auto& p : full.intra_neg) CHECK(pos.count({int(p.kind), p.a, p.b}) == 0);
}

TEST_CASE("conservative pruning equals the exhaustive enumeration") {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(60);
    const auto g = fixtures::random_graph(fixtures::random_corpus(n, 3 + n / 3, 2 + n / 8, rng), 3, rng);
    PairConfig cfg;
    cfg.tau_prune = trial % 2 ? -1.0 : cfg.theta_intra_neg;
    cfg.top_l = 0;
    CHECK(generate_pairs(g, cfg) == exhaustive_pairs(g, cfg));
  }
}
