#pragma once

// Hybrid margin loss over the four pair sets and the optimization loop.
//
//   L  = w1·L1 + w2·L2 + w3·L3,  (w1, w2, w3) = (α, β, 1−α−β)
//   L1 = mean max(0, z_x2·z_y2 − z_x1·z_y1 + γ1), (x1,y1) ∈ meta+, (x2,y2) ∈ intra+
//   L2 = same with intra+ against intra−, γ2
//   L3 = same with intra− against meta−,  γ3
//
// Cross-pairs are formed within one phrase kind; each term sums the per-kind
// means.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "okbc/gnn.hpp"
#include "okbc/metagraph.hpp"
#include "okbc/mlgraph.hpp"

namespace okbc::train {

using gnn::CanonicalEmbeddings;
using gnn::ModelParams;
using metagraph::PairSets;
using metagraph::PhraseKind;
using mlgraph::MultiLayeredGraph;

struct LossConfig {
  double alpha = 0.4;
  double beta = 0.4;
  double gamma1 = 0.1;
  double gamma2 = 0.1;
  double gamma3 = 0.1;
  std::size_t pairs_per_term = 256;
};

void validate(const LossConfig& cfg);

enum class Optimizer : std::uint8_t { sgd, sgd_momentum, adam };

std::string_view optimizer_name(Optimizer o) noexcept;
Optimizer parse_optimizer(std::string_view name);

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t steps_per_epoch = 10;
  double learning_rate = 0.01;
  Optimizer optimizer = Optimizer::sgd_momentum;
  std::uint64_t seed = 0;
  bool use_L1 = true;
  bool use_L2 = true;
  bool use_L3 = true;
  bool use_gnn = true;
  // Network shape; d0 comes from the graph.
  std::size_t K = 2;
  std::size_t d = 32;
  gnn::Nonlinearity act = gnn::Nonlinearity::relu;
  gnn::SamplerConfig sampler;
};

void validate(const TrainConfig& cfg);

using TermMask = std::array<bool, 3>;

// Effective term weights: disabled terms get 0 and the rest are rescaled to
// sum to 1 (uniform over the enabled terms when their base weights sum to 0).
std::array<double, 3> term_weights(const LossConfig& cfg, const TermMask& mask);

struct CrossPair {
  PhraseKind kind = PhraseKind::np;
  std::uint32_t x1 = 0, y1 = 0;  // pair from the higher-ranked set
  std::uint32_t x2 = 0, y2 = 0;  // pair from the lower-ranked set
};

struct Batch {
  std::array<std::vector<CrossPair>, 3> terms;
};

// Per term and kind: the full product when it has at most pairs_per_term
// elements, otherwise pairs_per_term uniform draws with replacement.
Batch sample_batch(const PairSets& pairs, const LossConfig& cfg, const TermMask& mask, Rng& rng);

struct LossValue {
  double loss = 0.0;
  double active_fraction = 0.0;  // active hinges / cross-pairs
};

LossValue hybrid_loss(const CanonicalEmbeddings& z, const Batch& batch, const LossConfig& cfg,
                      const TermMask& mask = {true, true, true});

// dL/dz for the phrase rows (PhraseIndex order, NP then RP).
Matrix loss_grad_z(const CanonicalEmbeddings& z, const Batch& batch, const LossConfig& cfg, const TermMask& mask);

struct Gradients {
  LossValue value;
  std::vector<Matrix> dW;
};

// Exact reverse-mode gradients with the neighbor samples held fixed.
Gradients loss_gradients(const ModelParams& params, const MultiLayeredGraph& g, const gnn::NeighborSets& neighbors,
                         const Batch& batch, const LossConfig& cfg, const TermMask& mask);

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  double active_fraction = 0.0;
};

struct TrainResult {
  ModelParams params;  // W is empty when use_gnn = false
  CanonicalEmbeddings z;
  std::vector<EpochStats> history;
};

TrainResult train(const MultiLayeredGraph& g, const PairSets& pairs, const LossConfig& loss_cfg,
                  const TrainConfig& train_cfg);

void write_history_csv(const std::vector<EpochStats>& history, const std::filesystem::path& path);

// ---------------------------------------------------------------------------

struct GradCheckConfig {
  std::size_t d0 = 8;
  std::size_t d = 8;
  std::size_t K = 2;
  std::size_t n_tuples = 6;  // 2 NP nodes + at most 1 RP node per tuple
  // Smooth by default: ReLU instances can put activations a hair above the
  // kink, leaving ~1e-9 gradient entries that central differences cannot
  // resolve against double round-off.
  gnn::Nonlinearity act = gnn::Nonlinearity::tanh;
  double step = 1e-5;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t layer = 0, row = 0, col = 0;
  std::size_t entries = 0;
  double loss = 0.0;
};

// Entry-wise comparison of loss_gradients against central differences,
// rel = |a − f| / max(|a|, |f|, 1e-8).
GradCheckReport grad_check(const ModelParams& params, const MultiLayeredGraph& g, const gnn::NeighborSets& neighbors,
                           const Batch& batch, const LossConfig& cfg, const TermMask& mask, double step = 1e-5);

// Same on a random instance drawn from the seed.
GradCheckReport grad_check(const GradCheckConfig& dims, std::uint64_t seed);

}  // namespace okbc::train
