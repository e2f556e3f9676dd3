#pragma once

// Sampling-and-aggregation GNN over the phrase layers.
//
//   h⁰ₓ = vₓ
//   hᵏₓ = normalize(σ(Wᵏᵀ · [hᵏ⁻¹ₓ ; mean_{y ∈ N(x)} hᵏ⁻¹_y]))
//
// N(x) is drawn from the meta-graph canonical weights Ψ(x,·) and the
// intra-layer weights Φ(x,·). Sentence nodes never get updated; when they are
// neighbors their h⁰ is used at every depth.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "okbc/matrix.hpp"
#include "okbc/metagraph.hpp"
#include "okbc/mlgraph.hpp"
#include "okbc/rng.hpp"

namespace okbc::gnn {

using mlgraph::Layer;
using mlgraph::MultiLayeredGraph;
using mlgraph::NodeId;

enum class Nonlinearity : std::uint8_t { relu, sigmoid, tanh };

std::string_view nonlinearity_name(Nonlinearity f) noexcept;
Nonlinearity parse_nonlinearity(std::string_view name);

struct ModelParams {
  std::size_t K = 2;
  std::size_t d0 = 32;
  std::size_t d = 32;
  Nonlinearity act = Nonlinearity::relu;
  // W[k] has shape (2 * in_dim(k)) x d, in_dim(0) = d0, in_dim(k>0) = d.
  std::vector<Matrix> W;

  std::size_t in_dim(std::size_t layer) const noexcept { return layer == 0 ? d0 : d; }
  std::size_t out_dim() const noexcept { return K == 0 ? d0 : d; }
};

// Throws ShapeMismatch when W does not match (K, d0, d) or has non-finite entries.
void validate(const ModelParams& p);

// Symmetric uniform entries in ±1/sqrt(fan_in), fan_in = 2 * in_dim.
ModelParams init_params(std::size_t K, std::size_t d0, std::size_t d, Nonlinearity act, std::uint64_t seed);

// Checkpoint: one text header line `okbc-model K d0 d nonlinearity` followed by
// the row-major entries of W[0..K) as little-endian 64-bit floats.
void save_checkpoint(const ModelParams& p, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

// Phrase nodes (NP then RP) share one index space inside the network.
struct PhraseIndex {
  std::size_t n_np = 0;
  std::size_t n_rp = 0;

  explicit PhraseIndex(const MultiLayeredGraph& g)
      : n_np(g.size(Layer::np)), n_rp(g.size(Layer::rp)) {}
  std::size_t size() const noexcept { return n_np + n_rp; }
  std::size_t of(NodeId v) const { return v.layer == Layer::np ? v.index : n_np + v.index; }
  NodeId node(std::size_t p) const {
    return p < n_np ? NodeId{Layer::np, static_cast<std::uint32_t>(p)}
                    : NodeId{Layer::rp, static_cast<std::uint32_t>(p - n_np)};
  }
};

struct SamplerConfig {
  std::size_t m_meta = 10;
  std::size_t m_intra = 10;
  bool resample_each_epoch = true;
  // Intra-layer candidate budget per node (0 = whole layer).
  std::size_t top_l = 50;
  // Off reproduces the "without meta-graph neighbors" ablation.
  bool use_meta_neighbors = true;
};

void validate(const SamplerConfig& cfg);

// Weighted neighbor pools per phrase node. Meta pool: partners that received
// a meta-graph score, weight max(Ψ, 0). Intra pool: top-L same-layer nodes by
// Φ, weight max(Φ, 0). Partners flagged as meta-graph negatives are left out
// of both pools.
class NeighborSampler {
 public:
  NeighborSampler(const MultiLayeredGraph& g, const metagraph::PairSets& pairs, std::size_t top_l);

  // Up to m_meta draws from the meta pool and m_intra from the intra pool,
  // each without replacement and proportional to weight; union in draw order.
  // A node with no positive-weight candidate gets [v]. Throws WrongNodeKind
  // for sentence nodes.
  std::vector<NodeId> sample(NodeId v, const SamplerConfig& cfg, Rng& rng) const;

  using Pool = std::vector<std::pair<NodeId, double>>;
  const Pool& meta_pool(NodeId v) const { return meta_[index_.of(v)]; }
  const Pool& intra_pool(NodeId v) const { return intra_[index_.of(v)]; }

 private:
  PhraseIndex index_;
  std::vector<Pool> meta_;
  std::vector<Pool> intra_;
};

// Draws up to `count` distinct pool entries, each draw proportional to the
// remaining weights. Ties in the cumulative scan resolve to the lower pool
// position, and pools are kept in ascending node order.
std::vector<NodeId> weighted_sample_without_replacement(const NeighborSampler::Pool& pool, std::size_t count,
                                                        Rng& rng);

std::vector<NodeId> sample_neighbors(const NeighborSampler& sampler, NodeId v, const SamplerConfig& cfg,
                                     Rng& rng);

// Neighbor lists for every phrase node (PhraseIndex order). Each node draws
// from its own stream seeded by (seed, node), so the result is independent
// of thread scheduling.
using NeighborSets = std::vector<std::vector<NodeId>>;
NeighborSets sample_all(const MultiLayeredGraph& g, const NeighborSampler& sampler, const SamplerConfig& cfg,
                        std::uint64_t seed);

// Column-wise mean. Throws EmptyMatrix for zero rows.
std::vector<double> aggregate_mean(const Matrix& rows);

struct CanonicalEmbeddings {
  Matrix np;  // one row per NP node
  Matrix rp;  // one row per RP node
  std::size_t degenerate = 0;  // zero-vector sentinels

  std::span<const double> z(NodeId v) const { return v.layer == Layer::np ? np.row(v.index) : rp.row(v.index); }
};

// Intermediate values kept for the backward pass.
struct ForwardCache {
  std::vector<Matrix> h;          // K+1 entries, phrase rows
  std::vector<Matrix> neigh;      // K entries, neighbor means per phrase row
  std::vector<Matrix> pre;        // K entries, Wᵀ·concat before σ
  std::vector<std::vector<double>> norm;  // K entries, ‖σ(pre)‖ per row (0 = sentinel)
};

struct ForwardResult {
  CanonicalEmbeddings z;
  ForwardCache cache;
};

inline constexpr double kSentinelNorm = 1e-12;

ForwardResult forward(const ModelParams& params, const MultiLayeredGraph& g, const NeighborSets& neighbors);

// Samples neighbors once (reused at every depth) and runs the network.
CanonicalEmbeddings forward_all(const ModelParams& params, const MultiLayeredGraph& g,
                                const metagraph::PairSets& pairs, const SamplerConfig& cfg, std::uint64_t seed);

// Reverse pass: given dL/dz (phrase rows, out_dim columns), returns dL/dW[k].
std::vector<Matrix> backward(const ModelParams& params, const MultiLayeredGraph& g, const NeighborSets& neighbors,
                             const ForwardCache& cache, const Matrix& dz);

// `kind \t node_id \t v1 ... vd`
void write_embeddings_tsv(const MultiLayeredGraph& g, const CanonicalEmbeddings& z,
                          const std::filesystem::path& path);

}  // namespace okbc::gnn
