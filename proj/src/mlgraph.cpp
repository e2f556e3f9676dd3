#include "okbc/mlgraph.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_map>

#include "okbc/error.hpp"
#include "okbc/kernels.hpp"

namespace okbc::mlgraph {

std::string_view layer_name(Layer layer) noexcept {
  switch (layer) {
    case Layer::np: return "NP";
    case Layer::rp: return "RP";
    case Layer::sent: return "SENT";
  }
  return "?";
}

std::size_t MultiLayeredGraph::size(Layer layer) const noexcept {
  switch (layer) {
    case Layer::np: return np_nodes_.size();
    case Layer::rp: return rp_surfaces_.size();
    case Layer::sent: return sentence_ids_.size();
  }
  return 0;
}

std::span<const double> MultiLayeredGraph::vec(NodeId v) const {
  if (v.index >= size(v.layer)) {
    throw Error(Errc::unknown_node, std::string(layer_name(v.layer)) + " node " + std::to_string(v.index));
  }
  switch (v.layer) {
    case Layer::np: return emb_.np.row(v.index);
    case Layer::rp: return emb_.rp.row(v.index);
    case Layer::sent: return emb_.sent.row(v.index);
  }
  return {};
}

std::string MultiLayeredGraph::node_label(NodeId v) const {
  if (v.layer == Layer::np) {
    const auto& n = np_nodes_.at(v.index);
    return std::to_string(corpus_.tuples[n.tuple_pos].tuple_id) + ":" + std::string(corpus::role_name(n.role));
  }
  return std::to_string(v.index);
}

MultiLayeredGraph build_graph(corpus::Corpus corpus, embed::SemanticEmbeddings embeddings) {
  MultiLayeredGraph g;
  g.rp_surfaces_ = corpus::relation_phrases(corpus);
  const std::size_t n_tuples = corpus.tuples.size();
  if (embeddings.np.rows() != 2 * n_tuples || embeddings.rp.rows() != g.rp_surfaces_.size() ||
      embeddings.sent.rows() != corpus.sentences.size()) {
    throw Error(Errc::missing_embedding, "semantic embeddings do not cover every graph node");
  }
  if (n_tuples > 0 && (embeddings.np.cols() != embeddings.dim || embeddings.rp.cols() != embeddings.dim ||
                       embeddings.sent.cols() != embeddings.dim)) {
    throw Error(Errc::missing_embedding, "semantic embedding layers disagree on dimension");
  }

  std::unordered_map<std::string, std::uint32_t> rp_index;
  for (std::uint32_t r = 0; r < g.rp_surfaces_.size(); ++r) rp_index[g.rp_surfaces_[r]] = r;
  std::unordered_map<std::int64_t, std::uint32_t> sent_index;
  for (std::uint32_t s = 0; s < corpus.sentences.size(); ++s) {
    g.sentence_ids_.push_back(corpus.sentences[s].sentence_id);
    sent_index[corpus.sentences[s].sentence_id] = s;
  }

  std::unordered_map<std::string, std::uint32_t> triple_index;
  g.tuple_triple_.resize(n_tuples);
  g.np_nodes_.resize(2 * n_tuples);
  g.tuple_rp_.resize(n_tuples);
  g.tuple_sent_.resize(n_tuples);
  g.rp_tuples_.resize(g.rp_surfaces_.size());
  g.rp_sents_.resize(g.rp_surfaces_.size());
  g.sent_rps_.resize(corpus.sentences.size());
  for (std::size_t t = 0; t < n_tuples; ++t) {
    const auto& tuple = corpus.tuples[t];
    const auto s_it = sent_index.find(tuple.sentence_id);
    if (s_it == sent_index.end()) {
      throw Error(Errc::dangling_reference, "sentence_id " + std::to_string(tuple.sentence_id));
    }
    const std::uint32_t r = rp_index.at(tuple.rel);
    const std::uint32_t s = s_it->second;
    g.np_nodes_[2 * t] = {t, corpus::Role::subject};
    g.np_nodes_[2 * t + 1] = {t, corpus::Role::object};
    g.tuple_rp_[t] = r;
    g.tuple_sent_[t] = s;
    const std::string key = tuple.subj + '\t' + tuple.rel + '\t' + tuple.obj;
    const auto [it, fresh] = triple_index.try_emplace(key, static_cast<std::uint32_t>(g.triple_sents_.size()));
    if (fresh) g.triple_sents_.emplace_back();
    g.tuple_triple_[t] = it->second;
    g.triple_sents_[it->second].push_back(s);
    g.rp_tuples_[r].push_back(static_cast<std::uint32_t>(t));
    g.rp_sents_[r].push_back(s);
    g.sent_rps_[s].push_back(r);
    g.e_subj_12_.emplace_back(MultiLayeredGraph::np_of(t, corpus::Role::subject), r);
    g.e_obj_12_.emplace_back(MultiLayeredGraph::np_of(t, corpus::Role::object), r);
  }
  const auto dedupe = [](std::vector<std::uint32_t>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  for (auto& v : g.triple_sents_) dedupe(v);
  for (auto& v : g.rp_sents_) dedupe(v);
  for (auto& v : g.sent_rps_) dedupe(v);
  for (std::uint32_t r = 0; r < g.rp_sents_.size(); ++r) {
    for (auto s : g.rp_sents_[r]) g.e_23_.emplace_back(r, s);
  }
  g.corpus_ = std::move(corpus);
  g.emb_ = std::move(embeddings);
  return g;
}

double phi(const MultiLayeredGraph& g, NodeId u, NodeId v) {
  if (u.layer != v.layer) throw Error(Errc::cross_layer, "phi is defined only within one layer");
  if (u == v) return kernels::dot(g.vec(u), g.vec(u));
  // Order the operands so phi(u,v) and phi(v,u) run the identical computation.
  if (v < u) std::swap(u, v);
  return kernels::dot(g.vec(u), g.vec(v));
}

std::vector<NodeId> inter_neighbors(const MultiLayeredGraph& g, NodeId v) {
  if (v.index >= g.size(v.layer)) {
    throw Error(Errc::unknown_node, std::string(layer_name(v.layer)) + " node " + std::to_string(v.index));
  }
  std::vector<NodeId> out;
  switch (v.layer) {
    case Layer::np:
      out.push_back({Layer::rp, g.rp_of_tuple(g.np_node(v.index).tuple_pos)});
      break;
    case Layer::rp:
      for (auto t : g.tuples_of_rp(v.index)) {
        out.push_back({Layer::np, MultiLayeredGraph::np_of(t, corpus::Role::subject)});
        out.push_back({Layer::np, MultiLayeredGraph::np_of(t, corpus::Role::object)});
      }
      for (auto s : g.sentences_of_rp(v.index)) out.push_back({Layer::sent, s});
      break;
    case Layer::sent:
      for (auto r : g.rps_of_sentence(v.index)) out.push_back({Layer::rp, r});
      break;
  }
  return out;
}

void write_graph_tsv(const MultiLayeredGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  for (const auto& [np, rp] : g.e_subj_12()) out << "subj_np-rp\t" << np << '\t' << rp << '\n';
  for (const auto& [np, rp] : g.e_obj_12()) out << "obj_np-rp\t" << np << '\t' << rp << '\n';
  for (const auto& [rp, s] : g.e_23()) out << "rp-sent\t" << rp << '\t' << s << '\n';
}

}  // namespace okbc::mlgraph
