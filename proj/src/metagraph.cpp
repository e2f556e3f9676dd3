#include "okbc/metagraph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "okbc/error.hpp"
#include "okbc/kernels.hpp"
#include "okbc/parallel.hpp"

namespace okbc::metagraph {
namespace {

void require_layer(NodeId v, Layer layer, const char* what) {
  if (v.layer != layer) throw Error(Errc::wrong_node_kind, std::string(what) + " expects " +
                                                              std::string(mlgraph::layer_name(layer)) + " nodes");
}

void check_node(const MultiLayeredGraph& g, NodeId v) {
  if (v.index >= g.size(v.layer)) {
    throw Error(Errc::unknown_node,
                std::string(mlgraph::layer_name(v.layer)) + " node " + std::to_string(v.index));
  }
}

std::vector<NodeId> as_nodes(Layer layer, std::span<const std::uint32_t> idx) {
  std::vector<NodeId> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back({layer, i});
  return out;
}

void add_row(std::span<double> acc, std::span<const double> v) { kernels::axpy(1.0, v, acc); }

}  // namespace

double phi_hat(const MultiLayeredGraph& g, std::span<const NodeId> a, std::span<const NodeId> b) {
  if (a.empty() || b.empty()) throw Error(Errc::empty_set, "phi_hat needs two non-empty node sets");
  const Layer layer = a.front().layer;
  for (const auto& v : a) {
    if (v.layer != layer) throw Error(Errc::cross_layer, "phi_hat sets must share one layer");
  }
  for (const auto& v : b) {
    if (v.layer != layer) throw Error(Errc::cross_layer, "phi_hat sets must share one layer");
  }
  double total = 0.0;
  for (const auto& u : a) {
    for (const auto& v : b) total += mlgraph::phi(g, u, v);
  }
  return total / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

NpMetaGraph np_metagraph(const MultiLayeredGraph& g, NodeId e1, NodeId e2) {
  require_layer(e1, Layer::np, "np_metagraph");
  require_layer(e2, Layer::np, "np_metagraph");
  check_node(g, e1);
  check_node(g, e2);
  if (e1 == e2) throw Error(Errc::same_pair, "NP meta-graph needs two distinct nodes");
  const auto& n1 = g.np_node(e1.index);
  const auto& n2 = g.np_node(e2.index);
  if (n1.role != n2.role) throw Error(Errc::role_mismatch, "NP meta-graph needs two subjects or two objects");
  const auto other = n1.role == corpus::Role::subject ? corpus::Role::object : corpus::Role::subject;
  NpMetaGraph m;
  m.role = n1.role;
  m.e1 = e1;
  m.e2 = e2;
  m.sentences1 = as_nodes(Layer::sent, g.sentences_of_np(e1.index));
  m.sentences2 = as_nodes(Layer::sent, g.sentences_of_np(e2.index));
  m.r1 = {Layer::rp, g.rp_of_tuple(n1.tuple_pos)};
  m.r2 = {Layer::rp, g.rp_of_tuple(n2.tuple_pos)};
  m.opposite1 = {Layer::np, MultiLayeredGraph::np_of(n1.tuple_pos, other)};
  m.opposite2 = {Layer::np, MultiLayeredGraph::np_of(n2.tuple_pos, other)};
  return m;
}

RpMetaGraph rp_metagraph(const MultiLayeredGraph& g, NodeId r1, NodeId r2) {
  require_layer(r1, Layer::rp, "rp_metagraph");
  require_layer(r2, Layer::rp, "rp_metagraph");
  check_node(g, r1);
  check_node(g, r2);
  if (r1 == r2) throw Error(Errc::same_pair, "RP meta-graph needs two distinct nodes");
  RpMetaGraph m;
  m.r1 = r1;
  m.r2 = r2;
  m.sentences1 = as_nodes(Layer::sent, g.sentences_of_rp(r1.index));
  m.sentences2 = as_nodes(Layer::sent, g.sentences_of_rp(r2.index));
  for (auto t : g.tuples_of_rp(r1.index)) {
    m.subjects1.push_back({Layer::np, MultiLayeredGraph::np_of(t, corpus::Role::subject)});
    m.objects1.push_back({Layer::np, MultiLayeredGraph::np_of(t, corpus::Role::object)});
  }
  for (auto t : g.tuples_of_rp(r2.index)) {
    m.subjects2.push_back({Layer::np, MultiLayeredGraph::np_of(t, corpus::Role::subject)});
    m.objects2.push_back({Layer::np, MultiLayeredGraph::np_of(t, corpus::Role::object)});
  }
  return m;
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double canonical_weight(const NpComponents& c) noexcept {
  return 0.25 * (c.sentences + c.relation + c.opposite + c.self);
}

double canonical_weight(const RpComponents& c) noexcept {
  return 0.25 * (c.sentences + c.relation + c.subjects + c.objects);
}

double negative_denominator(const NpComponents& c) noexcept { return c.sentences + c.relation; }

double negative_denominator(const RpComponents& c) noexcept {
  return c.sentences + std::max(c.subjects, c.objects);
}

double negative_probability(const NpComponents& c, double eps_den) noexcept {
  return sigmoid(-2.0 * c.opposite / std::max(negative_denominator(c), eps_den));
}

double negative_probability(const RpComponents& c, double eps_den) noexcept {
  return sigmoid(-2.0 * std::min(c.subjects, c.objects) / std::max(negative_denominator(c), eps_den));
}

NpComponents np_components(const MultiLayeredGraph& g, NodeId e1, NodeId e2) {
  const auto m = np_metagraph(g, e1, e2);
  return {phi_hat(g, m.sentences1, m.sentences2), mlgraph::phi(g, m.r1, m.r2),
          mlgraph::phi(g, m.opposite1, m.opposite2), mlgraph::phi(g, e1, e2)};
}

RpComponents rp_components(const MultiLayeredGraph& g, NodeId r1, NodeId r2) {
  const auto m = rp_metagraph(g, r1, r2);
  return {phi_hat(g, m.sentences1, m.sentences2), mlgraph::phi(g, r1, r2),
          phi_hat(g, m.subjects1, m.subjects2), phi_hat(g, m.objects1, m.objects2)};
}

double psi_np(const MultiLayeredGraph& g, NodeId e1, NodeId e2) {
  return canonical_weight(np_components(g, e1, e2));
}

double psi_rp(const MultiLayeredGraph& g, NodeId r1, NodeId r2) {
  return canonical_weight(rp_components(g, r1, r2));
}

double psi_neg_np(const MultiLayeredGraph& g, NodeId e1, NodeId e2, double eps_den) {
  return negative_probability(np_components(g, e1, e2), eps_den);
}

double psi_neg_rp(const MultiLayeredGraph& g, NodeId r1, NodeId r2, double eps_den) {
  return negative_probability(rp_components(g, r1, r2), eps_den);
}

// ---------------------------------------------------------------------------

MetaScorer::MetaScorer(const MultiLayeredGraph& g) : g_(g) {
  const std::size_t d = g.embeddings().dim;
  const std::size_t n_np = g.size(Layer::np);
  const std::size_t n_rp = g.size(Layer::rp);
  np_sentence_mean_ = Matrix(n_np, d);
  for (std::uint32_t e = 0; e < n_np; ++e) {
    const auto sents = g.sentences_of_np(e);
    auto row = np_sentence_mean_.row(e);
    for (auto s : sents) add_row(row, g.vec({Layer::sent, s}));
    kernels::scale(1.0 / static_cast<double>(sents.size()), row);
  }
  rp_sentence_mean_ = Matrix(n_rp, d);
  rp_subject_mean_ = Matrix(n_rp, d);
  rp_object_mean_ = Matrix(n_rp, d);
  for (std::uint32_t r = 0; r < n_rp; ++r) {
    const auto sents = g.sentences_of_rp(r);
    for (auto s : sents) add_row(rp_sentence_mean_.row(r), g.vec({Layer::sent, s}));
    kernels::scale(1.0 / static_cast<double>(sents.size()), rp_sentence_mean_.row(r));
    const auto tuples = g.tuples_of_rp(r);
    for (auto t : tuples) {
      add_row(rp_subject_mean_.row(r), g.vec({Layer::np, MultiLayeredGraph::np_of(t, corpus::Role::subject)}));
      add_row(rp_object_mean_.row(r), g.vec({Layer::np, MultiLayeredGraph::np_of(t, corpus::Role::object)}));
    }
    kernels::scale(1.0 / static_cast<double>(tuples.size()), rp_subject_mean_.row(r));
    kernels::scale(1.0 / static_cast<double>(tuples.size()), rp_object_mean_.row(r));
  }
}

NpComponents MetaScorer::np(std::uint32_t e1, std::uint32_t e2) const {
  if (e2 < e1) std::swap(e1, e2);
  const auto& n1 = g_.np_node(e1);
  const auto& n2 = g_.np_node(e2);
  const auto other = n1.role == corpus::Role::subject ? corpus::Role::object : corpus::Role::subject;
  return {kernels::dot(np_sentence_mean_.row(e1), np_sentence_mean_.row(e2)),
          mlgraph::phi(g_, {Layer::rp, g_.rp_of_tuple(n1.tuple_pos)}, {Layer::rp, g_.rp_of_tuple(n2.tuple_pos)}),
          mlgraph::phi(g_, {Layer::np, MultiLayeredGraph::np_of(n1.tuple_pos, other)},
                       {Layer::np, MultiLayeredGraph::np_of(n2.tuple_pos, other)}),
          mlgraph::phi(g_, {Layer::np, e1}, {Layer::np, e2})};
}

RpComponents MetaScorer::rp(std::uint32_t r1, std::uint32_t r2) const {
  if (r2 < r1) std::swap(r1, r2);
  return {kernels::dot(rp_sentence_mean_.row(r1), rp_sentence_mean_.row(r2)),
          mlgraph::phi(g_, {Layer::rp, r1}, {Layer::rp, r2}),
          kernels::dot(rp_subject_mean_.row(r1), rp_subject_mean_.row(r2)),
          kernels::dot(rp_object_mean_.row(r1), rp_object_mean_.row(r2))};
}

// ---------------------------------------------------------------------------

std::string_view kind_name(PhraseKind kind) noexcept { return kind == PhraseKind::np ? "NP" : "RP"; }

void validate(const PairConfig& cfg) {
  const double values[] = {cfg.theta_meta_pos, cfg.theta_neg, cfg.theta_intra_pos,
                           cfg.theta_intra_neg, cfg.tau_prune, cfg.eps_den};
  for (double v : values) {
    if (!std::isfinite(v)) throw Error(Errc::invalid_config, "pair thresholds must be finite");
  }
  if (!(cfg.theta_intra_pos > cfg.theta_intra_neg)) {
    throw Error(Errc::invalid_config, "theta_intra_pos must exceed theta_intra_neg");
  }
  if (!(cfg.eps_den > 0.0)) throw Error(Errc::invalid_config, "eps_den must be positive");
}

namespace {

using Candidate = std::pair<std::uint32_t, std::uint32_t>;  // (a, b), a < b

struct Classified {
  bool intra_pos = false, intra_neg = false, scored = false, meta_pos = false, meta_neg = false;
  double phi = 0.0, psi = 0.0, psi_neg = 0.0;
};

Classified classify(const MultiLayeredGraph& g, const MetaScorer& scorer, PhraseKind kind, Candidate c,
                    const PairConfig& cfg) {
  Classified out;
  const Layer layer = layer_of(kind);
  out.phi = mlgraph::phi(g, {layer, c.first}, {layer, c.second});
  out.intra_pos = out.phi >= cfg.theta_intra_pos;
  out.intra_neg = out.phi <= cfg.theta_intra_neg;
  if (out.intra_neg) return out;
  double denominator = 0.0;
  if (kind == PhraseKind::np) {
    if (g.np_node(c.first).role != g.np_node(c.second).role) return out;
    const auto comp = scorer.np(c.first, c.second);
    out.psi = canonical_weight(comp);
    out.psi_neg = negative_probability(comp, cfg.eps_den);
    denominator = negative_denominator(comp);
  } else {
    const auto comp = scorer.rp(c.first, c.second);
    out.psi = canonical_weight(comp);
    out.psi_neg = negative_probability(comp, cfg.eps_den);
    denominator = negative_denominator(comp);
  }
  out.scored = true;
  out.meta_pos = out.psi >= cfg.theta_meta_pos;
  out.meta_neg = denominator > 0.0 && out.psi_neg >= cfg.theta_neg;
  if (out.meta_pos && out.meta_neg) out.meta_pos = out.meta_neg = false;
  return out;
}

void append_classified(const MultiLayeredGraph& g, const MetaScorer& scorer, PhraseKind kind,
                       const std::vector<Candidate>& candidates, const PairConfig& cfg, PairSets& out) {
  std::vector<Classified> results(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) {
    results[i] = classify(g, scorer, kind, candidates[i], cfg);
  });
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& r = results[i];
    const auto [a, b] = candidates[i];
    if (r.intra_pos) out.intra_pos.push_back({kind, a, b, r.phi});
    if (r.intra_neg) out.intra_neg.push_back({kind, a, b, r.phi});
    if (r.scored) out.meta_scored.push_back({kind, a, b, r.psi});
    if (r.meta_pos) out.meta_pos.push_back({kind, a, b, r.psi});
    if (r.meta_neg) out.meta_neg.push_back({kind, a, b, r.psi_neg});
  }
}

bool by_pair(const ScoredPair& x, const ScoredPair& y) {
  return std::tie(x.kind, x.a, x.b) < std::tie(y.kind, y.a, y.b);
}

void finalize(PairSets& out, const PairConfig& cfg) {
  const auto strongest_first = [](bool descending) {
    return [descending](const ScoredPair& x, const ScoredPair& y) {
      if (x.score != y.score) return descending ? x.score > y.score : x.score < y.score;
      return by_pair(x, y);
    };
  };
  const auto trim = [&](std::vector<ScoredPair>& set, bool descending) {
    std::sort(set.begin(), set.end(), strongest_first(descending));
    if (cfg.max_pairs_per_set > 0 && set.size() > cfg.max_pairs_per_set) set.resize(cfg.max_pairs_per_set);
  };
  trim(out.meta_pos, true);
  trim(out.meta_neg, true);
  trim(out.intra_pos, true);
  trim(out.intra_neg, false);  // most dissimilar first
  std::sort(out.meta_scored.begin(), out.meta_scored.end(), by_pair);
}

bool sim_desc(const std::pair<std::uint32_t, double>& x, const std::pair<std::uint32_t, double>& y) {
  return x.second != y.second ? x.second > y.second : x.first < y.first;
}

bool sim_asc(const std::pair<std::uint32_t, double>& x, const std::pair<std::uint32_t, double>& y) {
  return x.second != y.second ? x.second < y.second : x.first < y.first;
}

// Similarities of node u to every other node of the layer.
std::vector<std::pair<std::uint32_t, double>> similarity_row(const MultiLayeredGraph& g, Layer layer,
                                                            std::uint32_t u) {
  const std::size_t n = g.size(layer);
  const auto& m = layer == Layer::np ? g.embeddings().np : g.embeddings().rp;
  std::vector<double> sims(n);
  kernels::dot_rows(m.row(u), m.flat(), sims);
  std::vector<std::pair<std::uint32_t, double>> row;
  row.reserve(n ? n - 1 : 0);
  for (std::uint32_t v = 0; v < n; ++v) {
    if (v != u) row.emplace_back(v, sims[v]);
  }
  return row;
}

void take_sorted(std::vector<std::pair<std::uint32_t, double>>& row, std::size_t limit, bool descending) {
  const auto cmp = descending ? sim_desc : sim_asc;
  if (limit > 0 && limit < row.size()) {
    std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(limit), row.end(), cmp);
    row.resize(limit);
  } else {
    std::sort(row.begin(), row.end(), cmp);
  }
}

void collect_layer(const MultiLayeredGraph& g, const MetaScorer& scorer, PhraseKind kind,
                   const PairConfig& cfg, PairSets& out) {
  const Layer layer = layer_of(kind);
  const std::size_t n = g.size(layer);
  std::vector<std::vector<Candidate>> per_node(n);
  parallel_for(n, [&](std::size_t ui) {
    const auto u = static_cast<std::uint32_t>(ui);
    auto top = similarity_row(g, layer, u);
    auto bottom = top;
    take_sorted(top, cfg.top_l, true);
    for (const auto& [v, s] : top) {
      if (s < cfg.tau_prune) break;
      per_node[ui].emplace_back(std::min(u, v), std::max(u, v));
    }
    take_sorted(bottom, cfg.top_l, false);
    for (const auto& [v, s] : bottom) {
      if (s > cfg.theta_intra_neg) break;
      per_node[ui].emplace_back(std::min(u, v), std::max(u, v));
    }
  });
  std::vector<Candidate> candidates;
  for (auto& v : per_node) candidates.insert(candidates.end(), v.begin(), v.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  append_classified(g, scorer, kind, candidates, cfg, out);
}

}  // namespace

std::vector<std::vector<std::pair<std::uint32_t, double>>> similarity_lists(const MultiLayeredGraph& g,
                                                                          Layer layer, double tau_prune,
                                                                          std::size_t top_l) {
  if (layer == Layer::sent) throw Error(Errc::wrong_node_kind, "similarity lists cover phrase layers only");
  const std::size_t n = g.size(layer);
  std::vector<std::vector<std::pair<std::uint32_t, double>>> lists(n);
  parallel_for(n, [&](std::size_t u) {
    auto row = similarity_row(g, layer, static_cast<std::uint32_t>(u));
    take_sorted(row, top_l, true);
    auto cut = std::find_if(row.begin(), row.end(), [&](const auto& e) { return e.second < tau_prune; });
    row.erase(cut, row.end());
    lists[u] = std::move(row);
  });
  return lists;
}

PairSets generate_pairs(const MultiLayeredGraph& g, const PairConfig& cfg) {
  validate(cfg);
  PairSets out;
  const MetaScorer scorer(g);
  collect_layer(g, scorer, PhraseKind::np, cfg, out);
  collect_layer(g, scorer, PhraseKind::rp, cfg, out);
  finalize(out, cfg);
  return out;
}

PairSets exhaustive_pairs(const MultiLayeredGraph& g, const PairConfig& cfg) {
  validate(cfg);
  if (g.size(Layer::np) + g.size(Layer::rp) > kExhaustiveLimit) {
    throw Error(Errc::too_large, "exhaustive pair enumeration is limited to " +
                                     std::to_string(kExhaustiveLimit) + " phrase nodes");
  }
  PairSets out;
  const MetaScorer scorer(g);
  for (auto kind : {PhraseKind::np, PhraseKind::rp}) {
    const auto n = static_cast<std::uint32_t>(g.size(layer_of(kind)));
    std::vector<Candidate> all;
    for (std::uint32_t a = 0; a < n; ++a) {
      for (std::uint32_t b = a + 1; b < n; ++b) all.emplace_back(a, b);
    }
    append_classified(g, scorer, kind, all, cfg, out);
  }
  finalize(out, cfg);
  return out;
}

void write_pairs_tsv(const MultiLayeredGraph& g, const PairSets& pairs, std::ostream& out) {
  char buf[32];
  const auto dump = [&](const char* name, const std::vector<ScoredPair>& set) {
    for (const auto& p : set) {
      const Layer layer = layer_of(p.kind);
      std::snprintf(buf, sizeof buf, "%.17g", p.score);
      out << name << '\t' << kind_name(p.kind) << '\t' << g.node_label({layer, p.a}) << '\t'
          << g.node_label({layer, p.b}) << '\t' << buf << '\n';
    }
  };
  dump("meta_pos", pairs.meta_pos);
  dump("meta_neg", pairs.meta_neg);
  dump("intra_pos", pairs.intra_pos);
  dump("intra_neg", pairs.intra_neg);
}

}  // namespace okbc::metagraph
