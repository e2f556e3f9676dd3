#include "okbc/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "okbc/error.hpp"
#include "okbc/kernels.hpp"

namespace okbc::train {

void validate(const LossConfig& cfg) {
  const bool ok = cfg.alpha >= 0.0 && cfg.beta >= 0.0 && cfg.alpha + cfg.beta <= 1.0 + 1e-12 &&
                  cfg.gamma1 >= 0.0 && cfg.gamma2 >= 0.0 && cfg.gamma3 >= 0.0 && cfg.pairs_per_term >= 1;
  if (!ok) throw Error(Errc::invalid_config, "loss config: need alpha, beta >= 0, alpha + beta <= 1, gammas >= 0");
}

std::string_view optimizer_name(Optimizer o) noexcept {
  switch (o) {
    case Optimizer::sgd: return "sgd";
    case Optimizer::sgd_momentum: return "sgd_momentum";
    case Optimizer::adam: return "adam";
  }
  return "?";
}

Optimizer parse_optimizer(std::string_view name) {
  if (name == "sgd") return Optimizer::sgd;
  if (name == "sgd_momentum") return Optimizer::sgd_momentum;
  if (name == "adam") return Optimizer::adam;
  throw Error(Errc::invalid_config, "unknown optimizer '" + std::string(name) + "'");
}

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw Error(Errc::invalid_config, "epochs must be >= 1");
  if (cfg.steps_per_epoch < 1) throw Error(Errc::invalid_config, "steps_per_epoch must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw Error(Errc::invalid_config, "learning_rate must be > 0");
  if (cfg.d < 1) throw Error(Errc::invalid_config, "d must be >= 1");
  gnn::validate(cfg.sampler);
}

std::array<double, 3> term_weights(const LossConfig& cfg, const TermMask& mask) {
  std::array<double, 3> w{cfg.alpha, cfg.beta, std::max(0.0, 1.0 - cfg.alpha - cfg.beta)};
  double total = 0.0;
  std::size_t enabled = 0;
  for (int t = 0; t < 3; ++t) {
    if (!mask[t]) w[t] = 0.0;
    total += w[t];
    enabled += mask[t];
  }
  for (int t = 0; t < 3; ++t) {
    if (!mask[t]) continue;
    w[t] = total > 0.0 ? w[t] / total : 1.0 / static_cast<double>(enabled);
  }
  return w;
}

namespace {

// Higher-ranked and lower-ranked set of each term.
std::pair<const std::vector<metagraph::ScoredPair>*, const std::vector<metagraph::ScoredPair>*> term_sets(
    const PairSets& pairs, int t) {
  switch (t) {
    case 0: return {&pairs.meta_pos, &pairs.intra_pos};
    case 1: return {&pairs.intra_pos, &pairs.intra_neg};
    default: return {&pairs.intra_neg, &pairs.meta_neg};
  }
}

double gamma_of(const LossConfig& cfg, int t) { return t == 0 ? cfg.gamma1 : t == 1 ? cfg.gamma2 : cfg.gamma3; }

std::vector<metagraph::ScoredPair> of_kind(const std::vector<metagraph::ScoredPair>& set, PhraseKind kind) {
  std::vector<metagraph::ScoredPair> out;
  for (const auto& p : set) {
    if (p.kind == kind) out.push_back(p);
  }
  return out;
}

std::span<const double> z_row(const CanonicalEmbeddings& z, PhraseKind kind, std::uint32_t i) {
  const Matrix& m = kind == PhraseKind::np ? z.np : z.rp;
  if (i >= m.rows()) throw Error(Errc::unknown_node, "batch references node " + std::to_string(i) + " outside z");
  return m.row(i);
}

// Per (term, kind) cross-pair counts, used for the per-kind means.
std::array<std::array<std::size_t, 2>, 3> kind_counts(const Batch& batch) {
  std::array<std::array<std::size_t, 2>, 3> n{};
  for (int t = 0; t < 3; ++t) {
    for (const auto& c : batch.terms[t]) ++n[t][static_cast<int>(c.kind)];
  }
  return n;
}

}  // namespace

Batch sample_batch(const PairSets& pairs, const LossConfig& cfg, const TermMask& mask, Rng& rng) {
  Batch batch;
  for (int t = 0; t < 3; ++t) {
    if (!mask[t]) continue;
    const auto [hi_all, lo_all] = term_sets(pairs, t);
    for (auto kind : {PhraseKind::np, PhraseKind::rp}) {
      const auto hi = of_kind(*hi_all, kind);
      const auto lo = of_kind(*lo_all, kind);
      if (hi.empty() || lo.empty()) continue;
      auto& out = batch.terms[t];
      const auto add = [&](const metagraph::ScoredPair& p, const metagraph::ScoredPair& q) {
        out.push_back({kind, p.a, p.b, q.a, q.b});
      };
      if (hi.size() <= cfg.pairs_per_term / lo.size()) {
        for (const auto& p : hi) {
          for (const auto& q : lo) add(p, q);
        }
      } else {
        for (std::size_t s = 0; s < cfg.pairs_per_term; ++s) {
          const auto& p = hi[rng.uniform_index(hi.size())];
          const auto& q = lo[rng.uniform_index(lo.size())];
          add(p, q);
        }
      }
    }
  }
  return batch;
}

LossValue hybrid_loss(const CanonicalEmbeddings& z, const Batch& batch, const LossConfig& cfg, const TermMask& mask) {
  const auto w = term_weights(cfg, mask);
  const auto n = kind_counts(batch);
  LossValue v;
  std::size_t total = 0, active = 0;
  for (int t = 0; t < 3; ++t) {
    if (!mask[t]) continue;
    for (const auto& c : batch.terms[t]) {
      const double hinge = kernels::dot(z_row(z, c.kind, c.x2), z_row(z, c.kind, c.y2)) -
                           kernels::dot(z_row(z, c.kind, c.x1), z_row(z, c.kind, c.y1)) + gamma_of(cfg, t);
      ++total;
      if (hinge > 0.0) {
        ++active;
        v.loss += w[t] * hinge / static_cast<double>(n[t][static_cast<int>(c.kind)]);
      }
    }
  }
  v.active_fraction = total == 0 ? 0.0 : static_cast<double>(active) / static_cast<double>(total);
  return v;
}

Matrix loss_grad_z(const CanonicalEmbeddings& z, const Batch& batch, const LossConfig& cfg, const TermMask& mask) {
  const auto w = term_weights(cfg, mask);
  const auto n = kind_counts(batch);
  const std::size_t n_np = z.np.rows();
  Matrix dz(n_np + z.rp.rows(), z.np.cols() ? z.np.cols() : z.rp.cols());
  const auto row_of = [&](PhraseKind kind, std::uint32_t i) {
    return dz.row(kind == PhraseKind::np ? i : n_np + i);
  };
  for (int t = 0; t < 3; ++t) {
    if (!mask[t]) continue;
    for (const auto& c : batch.terms[t]) {
      const auto x1 = z_row(z, c.kind, c.x1), y1 = z_row(z, c.kind, c.y1);
      const auto x2 = z_row(z, c.kind, c.x2), y2 = z_row(z, c.kind, c.y2);
      const double hinge = kernels::dot(x2, y2) - kernels::dot(x1, y1) + gamma_of(cfg, t);
      if (!(hinge > 0.0)) continue;
      const double s = w[t] / static_cast<double>(n[t][static_cast<int>(c.kind)]);
      kernels::axpy(s, y2, row_of(c.kind, c.x2));
      kernels::axpy(s, x2, row_of(c.kind, c.y2));
      kernels::axpy(-s, y1, row_of(c.kind, c.x1));
      kernels::axpy(-s, x1, row_of(c.kind, c.y1));
    }
  }
  return dz;
}

Gradients loss_gradients(const ModelParams& params, const MultiLayeredGraph& g, const gnn::NeighborSets& neighbors,
                         const Batch& batch, const LossConfig& cfg, const TermMask& mask) {
  const auto fwd = gnn::forward(params, g, neighbors);
  Gradients out;
  out.value = hybrid_loss(fwd.z, batch, cfg, mask);
  const Matrix dz = loss_grad_z(fwd.z, batch, cfg, mask);
  out.dW = gnn::backward(params, g, neighbors, fwd.cache, dz);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

class Stepper {
 public:
  Stepper(Optimizer kind, double lr) : kind_(kind), lr_(lr) {}

  void step(std::vector<Matrix>& params, const std::vector<Matrix>& grads) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(p.rows(), p.cols());
        v_.emplace_back(p.rows(), p.cols());
      }
    }
    ++t_;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto p = params[k].flat();
      const auto g = grads[k].flat();
      auto m = m_[k].flat();
      auto v = v_[k].flat();
      for (std::size_t i = 0; i < p.size(); ++i) {
        switch (kind_) {
          case Optimizer::sgd:
            p[i] -= lr_ * g[i];
            break;
          case Optimizer::sgd_momentum:
            m[i] = 0.9 * m[i] + g[i];
            p[i] -= lr_ * m[i];
            break;
          case Optimizer::adam:
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
            break;
        }
      }
    }
  }

 private:
  Optimizer kind_;
  double lr_;
  std::size_t t_ = 0;
  std::vector<Matrix> m_, v_;
};

Matrix phrase_inputs(const MultiLayeredGraph& g) {
  const gnn::PhraseIndex index(g);
  Matrix h(index.size(), g.embeddings().dim);
  for (std::size_t p = 0; p < index.size(); ++p) {
    const auto v = g.vec(index.node(p));
    std::copy(v.begin(), v.end(), h.row(p).begin());
  }
  return h;
}

// z = normalize(u) row-wise, split into NP / RP blocks.
CanonicalEmbeddings free_embeddings(const Matrix& u, std::size_t n_np, std::vector<double>* norms = nullptr) {
  CanonicalEmbeddings z;
  z.np = Matrix(n_np, u.cols());
  z.rp = Matrix(u.rows() - n_np, u.cols());
  if (norms) norms->assign(u.rows(), 0.0);
  for (std::size_t p = 0; p < u.rows(); ++p) {
    auto dst = p < n_np ? z.np.row(p) : z.rp.row(p - n_np);
    std::copy(u.row(p).begin(), u.row(p).end(), dst.begin());
    const double n = kernels::normalize(dst);
    if (n < gnn::kSentinelNorm) {
      std::fill(dst.begin(), dst.end(), 0.0);
      ++z.degenerate;
    } else if (norms) {
      (*norms)[p] = n;
    }
  }
  return z;
}

bool has_objective(const PairSets& pairs, const TermMask& mask) {
  for (int t = 0; t < 3; ++t) {
    if (!mask[t]) continue;
    const auto [hi, lo] = term_sets(pairs, t);
    for (auto kind : {PhraseKind::np, PhraseKind::rp}) {
      if (!of_kind(*hi, kind).empty() && !of_kind(*lo, kind).empty()) return true;
    }
  }
  return false;
}

}  // namespace

TrainResult train(const MultiLayeredGraph& g, const PairSets& pairs, const LossConfig& loss_cfg,
                  const TrainConfig& cfg) {
  validate(loss_cfg);
  validate(cfg);
  const TermMask mask{cfg.use_L1, cfg.use_L2, cfg.use_L3};
  if (!has_objective(pairs, mask)) {
    throw Error(Errc::empty_pair_sets, "no enabled loss term has pairs on both sides");
  }
  const std::size_t d0 = g.embeddings().dim;
  const std::size_t n_np = g.size(mlgraph::Layer::np);
  Rng batch_rng(sub_seed(cfg.seed, "batches"));
  Stepper stepper(cfg.optimizer, cfg.learning_rate);
  TrainResult result;

  if (!cfg.use_gnn) {
    std::vector<Matrix> u{phrase_inputs(g)};
    std::vector<double> norms;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
      EpochStats stats{epoch + 1, 0.0, 0.0};
      for (std::size_t s = 0; s < cfg.steps_per_epoch; ++s) {
        const auto batch = sample_batch(pairs, loss_cfg, mask, batch_rng);
        const auto z = free_embeddings(u[0], n_np, &norms);
        const auto value = hybrid_loss(z, batch, loss_cfg, mask);
        stats.loss += value.loss;
        stats.active_fraction += value.active_fraction;
        Matrix du = loss_grad_z(z, batch, loss_cfg, mask);
        for (std::size_t p = 0; p < du.rows(); ++p) {
          auto gp = du.row(p);
          if (norms[p] == 0.0) {
            std::fill(gp.begin(), gp.end(), 0.0);
            continue;
          }
          const auto zp = p < n_np ? z.np.row(p) : z.rp.row(p - n_np);
          const double proj = kernels::dot(zp, gp);
          kernels::axpy(-proj, zp, gp);
          kernels::scale(1.0 / norms[p], gp);
        }
        stepper.step(u, {du});
      }
      stats.loss /= static_cast<double>(cfg.steps_per_epoch);
      stats.active_fraction /= static_cast<double>(cfg.steps_per_epoch);
      result.history.push_back(stats);
    }
    result.params.K = 0;
    result.params.d0 = result.params.d = d0;
    result.z = free_embeddings(u[0], n_np);
    return result;
  }

  result.params = gnn::init_params(cfg.K, d0, cfg.K == 0 ? d0 : cfg.d, cfg.act, cfg.seed);
  const gnn::NeighborSampler sampler(g, pairs, cfg.sampler.top_l);
  const std::uint64_t neighbor_seed = sub_seed(cfg.seed, "neighbors");
  gnn::NeighborSets neighbors;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (epoch == 0 || cfg.sampler.resample_each_epoch) {
      neighbors = gnn::sample_all(g, sampler, cfg.sampler, sub_seed(neighbor_seed, static_cast<std::uint64_t>(epoch)));
    }
    EpochStats stats{epoch + 1, 0.0, 0.0};
    for (std::size_t s = 0; s < cfg.steps_per_epoch; ++s) {
      const auto batch = sample_batch(pairs, loss_cfg, mask, batch_rng);
      const auto grads = loss_gradients(result.params, g, neighbors, batch, loss_cfg, mask);
      stats.loss += grads.value.loss;
      stats.active_fraction += grads.value.active_fraction;
      stepper.step(result.params.W, grads.dW);
    }
    stats.loss /= static_cast<double>(cfg.steps_per_epoch);
    stats.active_fraction /= static_cast<double>(cfg.steps_per_epoch);
    result.history.push_back(stats);
  }
  result.z = gnn::forward(result.params, g, neighbors).z;
  return result;
}

void write_history_csv(const std::vector<EpochStats>& history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
  out << "epoch,loss,active_hinge_fraction\n";
  char buf[96];
  for (const auto& e : history) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", e.epoch, e.loss, e.active_fraction);
    out << buf;
  }
}

// ---------------------------------------------------------------------------

GradCheckReport grad_check(const ModelParams& params, const MultiLayeredGraph& g, const gnn::NeighborSets& neighbors,
                           const Batch& batch, const LossConfig& cfg, const TermMask& mask, double step) {
  GradCheckReport report;
  const auto analytic = loss_gradients(params, g, neighbors, batch, cfg, mask);
  report.loss = analytic.value.loss;
  ModelParams probe = params;
  const auto loss_at = [&]() { return hybrid_loss(gnn::forward(probe, g, neighbors).z, batch, cfg, mask).loss; };
  for (std::size_t k = 0; k < params.K; ++k) {
    for (std::size_t r = 0; r < params.W[k].rows(); ++r) {
      for (std::size_t c = 0; c < params.W[k].cols(); ++c) {
        const double w0 = params.W[k](r, c);
        probe.W[k](r, c) = w0 + step;
        const double up = loss_at();
        probe.W[k](r, c) = w0 - step;
        const double down = loss_at();
        probe.W[k](r, c) = w0;
        const double f = (up - down) / (2.0 * step);
        const double a = analytic.dW[k](r, c);
        const double rel = std::abs(a - f) / std::max({std::abs(a), std::abs(f), 1e-8});
        ++report.entries;
        if (rel > report.max_rel_error) {
          report.max_rel_error = rel;
          report.layer = k;
          report.row = r;
          report.col = c;
        }
      }
    }
  }
  return report;
}

GradCheckReport grad_check(const GradCheckConfig& dims, std::uint64_t seed) {
  Rng rng(sub_seed(seed, "gradcheck"));
  const std::size_t n = std::max<std::size_t>(dims.n_tuples, 2);
  corpus::Corpus c;
  for (std::size_t t = 0; t < n; ++t) {
    const auto id = static_cast<std::int64_t>(t);
    c.tuples.push_back({id, id, "n" + std::to_string(2 * t), "r" + std::to_string(t % 3),
                        "n" + std::to_string(2 * t + 1)});
    c.sentences.push_back({id, "s" + std::to_string(t)});
  }
  const std::size_t n_rp = corpus::relation_phrases(c).size();
  const auto random_unit = [&](std::size_t rows) {
    Matrix m(rows, dims.d0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (double& x : m.row(r)) x = rng.normal();
      kernels::normalize(m.row(r));
    }
    return m;
  };
  embed::SemanticEmbeddings emb;
  emb.dim = dims.d0;
  emb.np = random_unit(2 * n);
  emb.rp = random_unit(n_rp);
  emb.sent = random_unit(n);
  const auto g = mlgraph::build_graph(std::move(c), std::move(emb));
  const gnn::PhraseIndex index(g);

  PairSets pairs;
  const auto random_pairs = [&](PhraseKind kind, std::size_t count) {
    const std::size_t size = kind == PhraseKind::np ? index.n_np : index.n_rp;
    std::vector<metagraph::ScoredPair> out;
    if (size < 2) return out;
    for (std::size_t i = 0; i < count; ++i) {
      auto a = static_cast<std::uint32_t>(rng.uniform_index(size));
      auto b = static_cast<std::uint32_t>(rng.uniform_index(size - 1));
      if (b >= a) ++b;
      out.push_back({kind, std::min(a, b), std::max(a, b), 0.0});
    }
    return out;
  };
  for (auto* set : {&pairs.meta_pos, &pairs.intra_pos, &pairs.intra_neg, &pairs.meta_neg}) {
    for (auto kind : {PhraseKind::np, PhraseKind::rp}) {
      for (const auto& p : random_pairs(kind, 3)) set->push_back(p);
    }
  }

  gnn::NeighborSets neighbors(index.size());
  for (std::size_t p = 0; p < index.size(); ++p) {
    const auto self = index.node(p);
    const std::size_t count = 1 + rng.uniform_index(3);
    for (std::size_t i = 0; i < count; ++i) {
      if (rng.uniform01() < 0.15) {
        neighbors[p].push_back({mlgraph::Layer::sent, static_cast<std::uint32_t>(rng.uniform_index(n))});
      } else {
        const std::size_t size = g.size(self.layer);
        neighbors[p].push_back({self.layer, static_cast<std::uint32_t>(rng.uniform_index(size))});
      }
    }
  }

  LossConfig cfg;
  cfg.gamma1 = cfg.gamma2 = cfg.gamma3 = 0.5;
  cfg.pairs_per_term = 1u << 20;
  const TermMask mask{true, true, true};
  const auto batch = sample_batch(pairs, cfg, mask, rng);
  const auto params = gnn::init_params(dims.K, dims.d0, dims.K == 0 ? dims.d0 : dims.d, dims.act, seed);
  return grad_check(params, g, neighbors, batch, cfg, mask, dims.step);
}

}  // namespace okbc::train
