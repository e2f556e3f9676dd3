#pragma once

// Meta-graph scoring of phrase pairs and generation of the four training
// pair sets.
//
// For a pair of same-role NP nodes e1, e2 with tuples (s_i, r_i, e_i, ê_i):
//
//   Ψ(e1,e2)  = ¼ (Φ̂(S1,S2) + Φ(r1,r2) + Φ(ê1,ê2) + Φ(e1,e2))
//   Ψ⁻(e1,e2) = σ(-2 Φ(ê1,ê2) / max(Φ̂(S1,S2) + Φ(r1,r2), ε))
//
// and for RP nodes r1, r2 with subject sets E1ˢ, E2ˢ and object sets E1ᵒ, E2ᵒ:
//
//   Ψ(r1,r2)  = ¼ (Φ̂(S1,S2) + Φ(r1,r2) + Φ̂(E1ˢ,E2ˢ) + Φ̂(E1ᵒ,E2ᵒ))
//   Ψ⁻(r1,r2) = σ(-2 min(a,b) / max(Φ̂(S1,S2) + max(a,b), ε)),
//               a = Φ̂(E1ˢ,E2ˢ), b = Φ̂(E1ᵒ,E2ᵒ)
//
// where Φ̂(A,B) is the mean link weight over A × B.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "okbc/matrix.hpp"
#include "okbc/mlgraph.hpp"

namespace okbc::metagraph {

using mlgraph::Layer;
using mlgraph::MultiLayeredGraph;
using mlgraph::NodeId;

double phi_hat(const MultiLayeredGraph& g, std::span<const NodeId> a, std::span<const NodeId> b);

struct NpMetaGraph {
  corpus::Role role = corpus::Role::subject;
  NodeId e1, e2;
  std::vector<NodeId> sentences1, sentences2;
  NodeId r1, r2;
  NodeId opposite1, opposite2;  // the other NP of each tuple
};

struct RpMetaGraph {
  NodeId r1, r2;
  std::vector<NodeId> sentences1, sentences2;
  std::vector<NodeId> subjects1, subjects2;
  std::vector<NodeId> objects1, objects2;
};

// Throws RoleMismatch / SamePair / WrongNodeKind.
NpMetaGraph np_metagraph(const MultiLayeredGraph& g, NodeId e1, NodeId e2);
RpMetaGraph rp_metagraph(const MultiLayeredGraph& g, NodeId r1, NodeId r2);

struct NpComponents {
  double sentences = 0, relation = 0, opposite = 0, self = 0;
};

struct RpComponents {
  double sentences = 0, relation = 0, subjects = 0, objects = 0;
};

inline constexpr double kDefaultDenominatorFloor = 0.1;

double sigmoid(double x) noexcept;

// Formula-level evaluation from the link-weight components.
double canonical_weight(const NpComponents& c) noexcept;
double canonical_weight(const RpComponents& c) noexcept;
double negative_probability(const NpComponents& c, double eps_den = kDefaultDenominatorFloor) noexcept;
double negative_probability(const RpComponents& c, double eps_den = kDefaultDenominatorFloor) noexcept;
// Raw (unclamped) denominators; pairs with a denominator <= 0 never qualify as
// meta-graph negatives.
double negative_denominator(const NpComponents& c) noexcept;
double negative_denominator(const RpComponents& c) noexcept;

NpComponents np_components(const MultiLayeredGraph& g, NodeId e1, NodeId e2);
RpComponents rp_components(const MultiLayeredGraph& g, NodeId r1, NodeId r2);

double psi_np(const MultiLayeredGraph& g, NodeId e1, NodeId e2);
double psi_rp(const MultiLayeredGraph& g, NodeId r1, NodeId r2);
double psi_neg_np(const MultiLayeredGraph& g, NodeId e1, NodeId e2,
                  double eps_den = kDefaultDenominatorFloor);
double psi_neg_rp(const MultiLayeredGraph& g, NodeId r1, NodeId r2,
                  double eps_den = kDefaultDenominatorFloor);

// Fast path for bulk scoring: Φ̂(A,B) = mean(A) · mean(B), so every set term
// reduces to one dot product of cached mean vectors.
class MetaScorer {
 public:
  explicit MetaScorer(const MultiLayeredGraph& g);

  NpComponents np(std::uint32_t e1, std::uint32_t e2) const;
  RpComponents rp(std::uint32_t r1, std::uint32_t r2) const;

 private:
  const MultiLayeredGraph& g_;
  Matrix np_sentence_mean_;
  Matrix rp_sentence_mean_;
  Matrix rp_subject_mean_;
  Matrix rp_object_mean_;
};

enum class PhraseKind : std::uint8_t { np = 0, rp = 1 };

std::string_view kind_name(PhraseKind kind) noexcept;

inline Layer layer_of(PhraseKind kind) noexcept { return kind == PhraseKind::np ? Layer::np : Layer::rp; }

struct ScoredPair {
  PhraseKind kind = PhraseKind::np;
  std::uint32_t a = 0;  // a < b
  std::uint32_t b = 0;
  double score = 0.0;

  friend bool operator==(const ScoredPair&, const ScoredPair&) = default;
};

struct PairSets {
  std::vector<ScoredPair> meta_pos;   // score = Ψ
  std::vector<ScoredPair> meta_neg;   // score = Ψ⁻
  std::vector<ScoredPair> intra_pos;  // score = Φ
  std::vector<ScoredPair> intra_neg;  // score = Φ
  // Every pair that received a meta-graph score, with its Ψ; sorted by
  // (kind, a, b). Feeds the meta-graph neighbor distribution.
  std::vector<ScoredPair> meta_scored;

  friend bool operator==(const PairSets&, const PairSets&) = default;
};

struct PairConfig {
  double theta_meta_pos = 0.75;
  double theta_neg = 0.7;
  double theta_intra_pos = 0.8;
  double theta_intra_neg = 0.0;
  // Early stop: a node's descending similarity list is scanned until
  // Φ < tau_prune or top_l entries were taken (0 = no count limit).
  double tau_prune = 0.0;
  std::size_t top_l = 50;
  std::size_t max_pairs_per_set = 20000;  // 0 = unlimited
  double eps_den = kDefaultDenominatorFloor;
};

void validate(const PairConfig& cfg);

// Candidate enumeration over sorted per-node similarity lists. Meta-graph
// scores are computed for candidate pairs whose Φ exceeds theta_intra_neg
// (pairs at or below it are already semantic negatives); intra-layer
// negatives are collected by scanning each list from its low end.
PairSets generate_pairs(const MultiLayeredGraph& g, const PairConfig& cfg);

inline constexpr std::size_t kExhaustiveLimit = 2000;

// Reference O(N²) enumeration over all pairs; same semantics as
// generate_pairs without pruning. Throws TooLarge above kExhaustiveLimit
// phrase nodes.
PairSets exhaustive_pairs(const MultiLayeredGraph& g, const PairConfig& cfg);

// Per-node candidate list: other nodes of the same layer sorted by
// (Φ desc, index asc), cut at tau_prune / top_l.
std::vector<std::vector<std::pair<std::uint32_t, double>>> similarity_lists(
    const MultiLayeredGraph& g, Layer layer, double tau_prune, std::size_t top_l);

// `set \t kind \t id1 \t id2 \t score`
void write_pairs_tsv(const MultiLayeredGraph& g, const PairSets& pairs, std::ostream& out);

}  // namespace okbc::metagraph
