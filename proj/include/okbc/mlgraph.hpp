#pragma once

// Three-layer graph over an Open KB: NP occurrences (L1), distinct relation
// phrases (L2) and sentences (L3). Intra-layer links are implicit and fully
// connected; their weight is the dot product of unit semantic embeddings.
// Inter-layer links come from the tuples.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "okbc/corpus.hpp"
#include "okbc/embed.hpp"

namespace okbc::mlgraph {

enum class Layer : std::uint8_t { np = 0, rp = 1, sent = 2 };

std::string_view layer_name(Layer layer) noexcept;

struct NodeId {
  Layer layer = Layer::np;
  std::uint32_t index = 0;

  friend bool operator==(const NodeId&, const NodeId&) = default;
  friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

struct NpNode {
  std::size_t tuple_pos = 0;
  corpus::Role role = corpus::Role::subject;
};

class MultiLayeredGraph {
 public:
  std::size_t size(Layer layer) const noexcept;

  const NpNode& np_node(std::uint32_t i) const { return np_nodes_[i]; }
  const std::string& rp_surface(std::uint32_t i) const { return rp_surfaces_[i]; }
  std::int64_t sentence_id(std::uint32_t i) const { return sentence_ids_[i]; }
  const corpus::Corpus& corpus() const noexcept { return corpus_; }
  const embed::SemanticEmbeddings& embeddings() const noexcept { return emb_; }

  // Unit semantic embedding of a node.
  std::span<const double> vec(NodeId v) const;

  // NP node of tuple position t in the given role.
  static std::uint32_t np_of(std::size_t tuple_pos, corpus::Role role) {
    return static_cast<std::uint32_t>(2 * tuple_pos + static_cast<std::size_t>(role));
  }
  std::uint32_t rp_of_tuple(std::size_t tuple_pos) const { return tuple_rp_[tuple_pos]; }
  std::uint32_t sent_of_tuple(std::size_t tuple_pos) const { return tuple_sent_[tuple_pos]; }

  // S^e of an NP node: distinct sentences of every tuple that shares this
  // node's (subject, relation, object) surface triple, ascending.
  std::span<const std::uint32_t> sentences_of_np(std::uint32_t np) const {
    return triple_sents_[tuple_triple_[np_nodes_[np].tuple_pos]];
  }

  // Tuple positions using relation phrase r.
  std::span<const std::uint32_t> tuples_of_rp(std::uint32_t r) const { return rp_tuples_[r]; }
  // Distinct sentences linked to RP r (E_{2,3}), ascending.
  std::span<const std::uint32_t> sentences_of_rp(std::uint32_t r) const { return rp_sents_[r]; }
  // Distinct RPs linked to sentence s, ascending.
  std::span<const std::uint32_t> rps_of_sentence(std::uint32_t s) const { return sent_rps_[s]; }

  // Inter-layer link lists, one entry per tuple for the NP ones.
  const std::vector<std::pair<std::uint32_t, std::uint32_t>>& e_subj_12() const { return e_subj_12_; }
  const std::vector<std::pair<std::uint32_t, std::uint32_t>>& e_obj_12() const { return e_obj_12_; }
  const std::vector<std::pair<std::uint32_t, std::uint32_t>>& e_23() const { return e_23_; }

  // Stable identifier used in every output file: "<tuple_id>:subj|obj" for NP
  // nodes, the node index for RP and sentence nodes.
  std::string node_label(NodeId v) const;

  friend MultiLayeredGraph build_graph(corpus::Corpus corpus, embed::SemanticEmbeddings embeddings);

 private:
  corpus::Corpus corpus_;
  embed::SemanticEmbeddings emb_;
  std::vector<NpNode> np_nodes_;
  std::vector<std::string> rp_surfaces_;
  std::vector<std::int64_t> sentence_ids_;
  std::vector<std::uint32_t> tuple_rp_;
  std::vector<std::uint32_t> tuple_sent_;
  std::vector<std::uint32_t> tuple_triple_;
  std::vector<std::vector<std::uint32_t>> triple_sents_;
  std::vector<std::vector<std::uint32_t>> rp_tuples_;
  std::vector<std::vector<std::uint32_t>> rp_sents_;
  std::vector<std::vector<std::uint32_t>> sent_rps_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> e_subj_12_, e_obj_12_, e_23_;
};

// Throws MissingEmbedding when the embedding matrices do not cover the nodes.
MultiLayeredGraph build_graph(corpus::Corpus corpus, embed::SemanticEmbeddings embeddings);

// Intra-layer link weight; throws CrossLayer for nodes of different layers.
double phi(const MultiLayeredGraph& g, NodeId u, NodeId v);

// NP -> [its RP]; RP -> linked NP nodes then sentence nodes; sentence -> RPs.
std::vector<NodeId> inter_neighbors(const MultiLayeredGraph& g, NodeId v);

// Debug dump: `layer_pair \t src_index \t dst_index`.
void write_graph_tsv(const MultiLayeredGraph& g, const std::filesystem::path& path);

}  // namespace okbc::mlgraph
