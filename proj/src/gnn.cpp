#include "okbc/gnn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "okbc/error.hpp"
#include "okbc/kernels.hpp"
#include "okbc/parallel.hpp"

namespace okbc::gnn {

std::string_view nonlinearity_name(Nonlinearity f) noexcept {
  switch (f) {
    case Nonlinearity::relu: return "relu";
    case Nonlinearity::sigmoid: return "sigmoid";
    case Nonlinearity::tanh: return "tanh";
  }
  return "?";
}

Nonlinearity parse_nonlinearity(std::string_view name) {
  if (name == "relu") return Nonlinearity::relu;
  if (name == "sigmoid") return Nonlinearity::sigmoid;
  if (name == "tanh") return Nonlinearity::tanh;
  throw Error(Errc::invalid_config, "unknown nonlinearity '" + std::string(name) + "'");
}

void validate(const ModelParams& p) {
  if (p.d0 == 0 || p.d == 0) throw Error(Errc::shape_mismatch, "d0 and d must be positive");
  if (p.K == 0 && p.d != p.d0) throw Error(Errc::shape_mismatch, "K = 0 requires d == d0");
  if (p.W.size() != p.K) throw Error(Errc::shape_mismatch, "expected " + std::to_string(p.K) + " weight matrices");
  for (std::size_t k = 0; k < p.K; ++k) {
    if (p.W[k].rows() != 2 * p.in_dim(k) || p.W[k].cols() != p.d) {
      throw Error(Errc::shape_mismatch, "W[" + std::to_string(k) + "] must be " +
                                            std::to_string(2 * p.in_dim(k)) + "x" + std::to_string(p.d));
    }
    for (double x : p.W[k].flat()) {
      if (!std::isfinite(x)) throw Error(Errc::shape_mismatch, "non-finite weight");
    }
  }
}

ModelParams init_params(std::size_t K, std::size_t d0, std::size_t d, Nonlinearity act, std::uint64_t seed) {
  ModelParams p;
  p.K = K;
  p.d0 = d0;
  p.d = d;
  p.act = act;
  Rng rng(sub_seed(seed, "init"));
  for (std::size_t k = 0; k < K; ++k) {
    const std::size_t fan_in = 2 * p.in_dim(k);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Matrix w(fan_in, d);
    for (double& x : w.flat()) x = rng.uniform(-bound, bound);
    p.W.push_back(std::move(w));
  }
  validate(p);
  return p;
}

void save_checkpoint(const ModelParams& p, const std::filesystem::path& path) {
  validate(p);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out << "okbc-model " << p.K << ' ' << p.d0 << ' ' << p.d << ' ' << nonlinearity_name(p.act) << '\n';
  for (const auto& w : p.W) {
    for (double x : w.flat()) {
      auto bits = std::bit_cast<std::uint64_t>(x);
      unsigned char bytes[8];
      for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
      out.write(reinterpret_cast<const char*>(bytes), 8);
    }
  }
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic, act;
  ModelParams p;
  if (!(hs >> magic >> p.K >> p.d0 >> p.d >> act) || magic != "okbc-model") {
    throw Error(Errc::parse_error, path.string() + ": bad checkpoint header");
  }
  p.act = parse_nonlinearity(act);
  for (std::size_t k = 0; k < p.K; ++k) {
    Matrix w(2 * p.in_dim(k), p.d);
    for (double& x : w.flat()) {
      unsigned char bytes[8];
      if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
        throw Error(Errc::parse_error, path.string() + ": truncated checkpoint");
      }
      std::uint64_t bits = 0;
      for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
      x = std::bit_cast<double>(bits);
    }
    p.W.push_back(std::move(w));
  }
  validate(p);
  return p;
}

// ---------------------------------------------------------------------------

void validate(const SamplerConfig& cfg) {
  if (cfg.m_meta + cfg.m_intra < 1) throw Error(Errc::invalid_config, "m_meta + m_intra must be >= 1");
}

NeighborSampler::NeighborSampler(const MultiLayeredGraph& g, const metagraph::PairSets& pairs, std::size_t top_l)
    : index_(g), meta_(index_.size()), intra_(index_.size()) {
  using metagraph::layer_of;
  std::set<std::tuple<int, std::uint32_t, std::uint32_t>> negatives;
  for (const auto& p : pairs.meta_neg) negatives.emplace(static_cast<int>(p.kind), p.a, p.b);
  const auto is_negative = [&](metagraph::PhraseKind kind, std::uint32_t a, std::uint32_t b) {
    if (b < a) std::swap(a, b);
    return negatives.count({static_cast<int>(kind), a, b}) > 0;
  };

  for (const auto& p : pairs.meta_scored) {
    if (!(p.score > 0.0) || is_negative(p.kind, p.a, p.b)) continue;
    const Layer layer = layer_of(p.kind);
    meta_[index_.of({layer, p.a})].push_back({{layer, p.b}, p.score});
    meta_[index_.of({layer, p.b})].push_back({{layer, p.a}, p.score});
  }
  for (auto kind : {metagraph::PhraseKind::np, metagraph::PhraseKind::rp}) {
    const Layer layer = layer_of(kind);
    const auto lists = metagraph::similarity_lists(g, layer, 0.0, top_l);
    for (std::uint32_t u = 0; u < lists.size(); ++u) {
      auto& pool = intra_[index_.of({layer, u})];
      for (const auto& [v, phi] : lists[u]) {
        if (phi > 0.0 && !is_negative(kind, u, v)) pool.push_back({{layer, v}, phi});
      }
    }
  }
  const auto by_node = [](const auto& x, const auto& y) { return x.first < y.first; };
  for (auto& pool : meta_) std::sort(pool.begin(), pool.end(), by_node);
  for (auto& pool : intra_) std::sort(pool.begin(), pool.end(), by_node);
}

std::vector<NodeId> weighted_sample_without_replacement(const NeighborSampler::Pool& pool, std::size_t count,
                                                        Rng& rng) {
  std::vector<double> w;
  w.reserve(pool.size());
  std::size_t positive = 0;
  for (const auto& [node, weight] : pool) {
    w.push_back(weight > 0.0 ? weight : 0.0);
    positive += weight > 0.0;
  }
  std::vector<NodeId> out;
  const std::size_t draws = std::min(count, positive);
  for (std::size_t d = 0; d < draws; ++d) {
    double total = 0.0;
    for (double x : w) total += x;
    const double target = rng.uniform01() * total;
    double cum = 0.0;
    std::size_t pick = pool.size();
    std::size_t last_positive = pool.size();
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (w[i] <= 0.0) continue;
      last_positive = i;
      cum += w[i];
      if (target < cum) {
        pick = i;
        break;
      }
    }
    if (pick == pool.size()) pick = last_positive;
    out.push_back(pool[pick].first);
    w[pick] = 0.0;
  }
  return out;
}

std::vector<NodeId> NeighborSampler::sample(NodeId v, const SamplerConfig& cfg, Rng& rng) const {
  if (v.layer == Layer::sent) throw Error(Errc::wrong_node_kind, "neighbors are sampled for NP/RP nodes only");
  if (index_.of(v) >= index_.size() || (v.layer == Layer::np && v.index >= index_.n_np) ||
      (v.layer == Layer::rp && v.index >= index_.n_rp)) {
    throw Error(Errc::unknown_node, "phrase node out of range");
  }
  std::vector<NodeId> out;
  if (cfg.use_meta_neighbors) out = weighted_sample_without_replacement(meta_pool(v), cfg.m_meta, rng);
  for (const auto& n : weighted_sample_without_replacement(intra_pool(v), cfg.m_intra, rng)) {
    if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
  }
  if (out.empty()) out.push_back(v);
  return out;
}

std::vector<NodeId> sample_neighbors(const NeighborSampler& sampler, NodeId v, const SamplerConfig& cfg,
                                     Rng& rng) {
  return sampler.sample(v, cfg, rng);
}

NeighborSets sample_all(const MultiLayeredGraph& g, const NeighborSampler& sampler, const SamplerConfig& cfg,
                        std::uint64_t seed) {
  validate(cfg);
  const PhraseIndex index(g);
  NeighborSets out(index.size());
  parallel_for(index.size(), [&](std::size_t p) {
    Rng rng(sub_seed(seed, static_cast<std::uint64_t>(p)));
    out[p] = sampler.sample(index.node(p), cfg, rng);
  });
  return out;
}

std::vector<double> aggregate_mean(const Matrix& rows) {
  if (rows.rows() == 0) throw Error(Errc::empty_matrix, "mean of zero rows");
  std::vector<double> out(rows.cols(), 0.0);
  for (std::size_t r = 0; r < rows.rows(); ++r) kernels::axpy(1.0, rows.row(r), out);
  kernels::scale(1.0 / static_cast<double>(rows.rows()), out);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double activate(Nonlinearity f, double x) {
  switch (f) {
    case Nonlinearity::relu: return x > 0.0 ? x : 0.0;
    case Nonlinearity::sigmoid: return metagraph::sigmoid(x);
    case Nonlinearity::tanh: return std::tanh(x);
  }
  return x;
}

double activate_grad(Nonlinearity f, double x) {
  switch (f) {
    case Nonlinearity::relu: return x > 0.0 ? 1.0 : 0.0;
    case Nonlinearity::sigmoid: {
      const double s = metagraph::sigmoid(x);
      return s * (1.0 - s);
    }
    case Nonlinearity::tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

// Feature of a neighbor at depth k (phrase: hᵏ, sentence: h⁰ fitted to width).
void add_neighbor_feature(const MultiLayeredGraph& g, const PhraseIndex& index, const Matrix& h, NodeId y,
                          std::span<double> acc) {
  if (y.layer == Layer::sent) {
    const auto v = g.vec(y);
    const std::size_t n = std::min(v.size(), acc.size());
    kernels::axpy(1.0, v.first(n), acc.first(n));
  } else {
    kernels::axpy(1.0, h.row(index.of(y)), acc);
  }
}

}  // namespace

ForwardResult forward(const ModelParams& params, const MultiLayeredGraph& g, const NeighborSets& neighbors) {
  validate(params);
  const PhraseIndex index(g);
  const std::size_t P = index.size();
  if (neighbors.size() != P) throw Error(Errc::shape_mismatch, "one neighbor list per phrase node required");
  if (P > 0 && g.embeddings().dim != params.d0) {
    throw Error(Errc::shape_mismatch, "model d0 = " + std::to_string(params.d0) + " but embeddings have dim " +
                                          std::to_string(g.embeddings().dim));
  }
  ForwardResult res;
  auto& c = res.cache;
  c.h.emplace_back(P, params.d0);
  for (std::size_t p = 0; p < P; ++p) {
    const auto v = g.vec(index.node(p));
    std::copy(v.begin(), v.end(), c.h[0].row(p).begin());
  }
  for (std::size_t p = 0; p < P; ++p) {
    if (neighbors[p].empty()) throw Error(Errc::empty_matrix, "empty neighbor list");
    for (const auto& y : neighbors[p]) {
      if (y.index >= g.size(y.layer)) throw Error(Errc::unknown_node, "neighbor out of range");
    }
  }

  for (std::size_t k = 0; k < params.K; ++k) {
    const std::size_t in = params.in_dim(k);
    const Matrix& h = c.h[k];
    const Matrix& W = params.W[k];
    Matrix neigh(P, in), pre(P, params.d), next(P, params.d);
    std::vector<double> norms(P);
    parallel_for(P, [&](std::size_t p) {
      auto m = neigh.row(p);
      for (const auto& y : neighbors[p]) add_neighbor_feature(g, index, h, y, m);
      kernels::scale(1.0 / static_cast<double>(neighbors[p].size()), m);
      auto out = pre.row(p);
      const auto self = h.row(p);
      for (std::size_t i = 0; i < in; ++i) {
        if (self[i] != 0.0) kernels::axpy(self[i], W.row(i), out);
      }
      for (std::size_t i = 0; i < in; ++i) {
        if (m[i] != 0.0) kernels::axpy(m[i], W.row(in + i), out);
      }
      auto q = next.row(p);
      for (std::size_t j = 0; j < params.d; ++j) q[j] = activate(params.act, out[j]);
      const double n = kernels::norm2(q);
      if (n < kSentinelNorm) {
        std::fill(q.begin(), q.end(), 0.0);
        norms[p] = 0.0;
      } else {
        kernels::scale(1.0 / n, q);
        norms[p] = n;
      }
    });
    c.neigh.push_back(std::move(neigh));
    c.pre.push_back(std::move(pre));
    c.norm.push_back(std::move(norms));
    c.h.push_back(std::move(next));
  }

  const Matrix& z = c.h.back();
  const std::size_t width = z.cols();
  res.z.np = Matrix(index.n_np, width);
  res.z.rp = Matrix(index.n_rp, width);
  for (std::size_t p = 0; p < P; ++p) {
    const auto row = z.row(p);
    auto dst = p < index.n_np ? res.z.np.row(p) : res.z.rp.row(p - index.n_np);
    std::copy(row.begin(), row.end(), dst.begin());
    if (params.K > 0 && c.norm.back()[p] == 0.0) ++res.z.degenerate;
  }
  return res;
}

CanonicalEmbeddings forward_all(const ModelParams& params, const MultiLayeredGraph& g,
                                const metagraph::PairSets& pairs, const SamplerConfig& cfg, std::uint64_t seed) {
  const NeighborSampler sampler(g, pairs, cfg.top_l);
  const auto neighbors = sample_all(g, sampler, cfg, seed);
  return forward(params, g, neighbors).z;
}

std::vector<Matrix> backward(const ModelParams& params, const MultiLayeredGraph& g, const NeighborSets& neighbors,
                             const ForwardCache& cache, const Matrix& dz) {
  const PhraseIndex index(g);
  const std::size_t P = index.size();
  if (dz.rows() != P || dz.cols() != params.out_dim()) throw Error(Errc::shape_mismatch, "dz shape");
  std::vector<Matrix> grads;
  for (std::size_t k = 0; k < params.K; ++k) grads.emplace_back(2 * params.in_dim(k), params.d);

  Matrix upstream = dz;
  std::vector<double> dp(params.d), da;
  for (std::size_t k = params.K; k-- > 0;) {
    const std::size_t in = params.in_dim(k);
    const Matrix& W = params.W[k];
    const Matrix& h_in = cache.h[k];
    const Matrix& h_out = cache.h[k + 1];
    Matrix down(P, in);
    da.assign(2 * in, 0.0);
    for (std::size_t p = 0; p < P; ++p) {
      const double n = cache.norm[k][p];
      if (n == 0.0) continue;
      const auto hz = h_out.row(p);
      const auto gz = upstream.row(p);
      const double proj = kernels::dot(hz, gz);
      const auto pre = cache.pre[k].row(p);
      bool any = false;
      for (std::size_t j = 0; j < params.d; ++j) {
        dp[j] = (gz[j] - hz[j] * proj) / n * activate_grad(params.act, pre[j]);
        any = any || dp[j] != 0.0;
      }
      if (!any) continue;
      const auto self = h_in.row(p);
      const auto mean = cache.neigh[k].row(p);
      for (std::size_t i = 0; i < in; ++i) {
        if (self[i] != 0.0) kernels::axpy(self[i], dp, grads[k].row(i));
        if (mean[i] != 0.0) kernels::axpy(mean[i], dp, grads[k].row(in + i));
        da[i] = kernels::dot(W.row(i), dp);
        da[in + i] = kernels::dot(W.row(in + i), dp);
      }
      if (k == 0) continue;  // h⁰ is a constant input
      auto own = down.row(p);
      kernels::axpy(1.0, std::span<const double>(da).first(in), own);
      const double share = 1.0 / static_cast<double>(neighbors[p].size());
      const auto from_mean = std::span<const double>(da).subspan(in, in);
      for (const auto& y : neighbors[p]) {
        if (y.layer == Layer::sent) continue;
        kernels::axpy(share, from_mean, down.row(index.of(y)));
      }
    }
    upstream = std::move(down);
  }
  return grads;
}

void write_embeddings_tsv(const MultiLayeredGraph& g, const CanonicalEmbeddings& z,
                          const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  char buf[32];
  const auto dump = [&](Layer layer, const Matrix& m) {
    for (std::uint32_t i = 0; i < m.rows(); ++i) {
      out << mlgraph::layer_name(layer) << '\t' << g.node_label({layer, i});
      for (double x : m.row(i)) {
        std::snprintf(buf, sizeof buf, "\t%.17g", x);
        out << buf;
      }
      out << '\n';
    }
  };
  dump(Layer::np, z.np);
  dump(Layer::rp, z.rp);
}

}  // namespace okbc::gnn
