#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "okbc/corpus.hpp"
#include "okbc/error.hpp"
#include "okbc/rng.hpp"

namespace okbc::corpus {
namespace {

using Vec = std::vector<double>;

double dotv(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize_in_place(Vec& v) {
  const double n = std::sqrt(dotv(v, v));
  if (n > 0.0) {
    for (double& x : v) x /= n;
  }
}

Vec random_unit(Rng& rng, std::size_t dim) {
  Vec v(dim);
  for (double& x : v) x = rng.normal();
  normalize_in_place(v);
  return v;
}

// `count` unit directions; the first min(count, dim) are mutually orthogonal
// (Gram-Schmidt over Gaussian draws), the rest are plain random.
std::vector<Vec> make_centers(Rng& rng, std::size_t count, std::size_t dim) {
  std::vector<Vec> centers;
  centers.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    Vec v = random_unit(rng, dim);
    if (c < dim) {
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t p = 0; p < c; ++p) {
          const double proj = dotv(v, centers[p]);
          for (std::size_t i = 0; i < dim; ++i) v[i] -= proj * centers[p][i];
        }
      }
      normalize_in_place(v);
    }
    centers.push_back(std::move(v));
  }
  return centers;
}

Vec jitter(Rng& rng, const Vec& center, double sigma) {
  Vec v = center;
  const double per_component = sigma / std::sqrt(static_cast<double>(center.size()));
  for (double& x : v) x += per_component * rng.normal();
  return v;
}

}  // namespace

SynthOutput generate_synthetic(const SynthConfig& cfg, std::uint64_t seed) {
  const std::size_t n_mentions = cfg.n_entities * cfg.mentions_per_entity;
  if (cfg.mentions_per_entity < 1) throw Error(Errc::invalid_config, "mentions_per_entity must be >= 1");
  if (n_mentions % 2 != 0) {
    throw Error(Errc::invalid_config, "n_entities * mentions_per_entity must be even (two NPs per tuple)");
  }
  const std::size_t n_tuples = n_mentions / 2;
  if (cfg.n_tuples != 0 && cfg.n_tuples != n_tuples) {
    throw Error(Errc::invalid_config, "n_tuples must equal n_entities * mentions_per_entity / 2 = " +
                                          std::to_string(n_tuples));
  }
  if (n_tuples > 0 && cfg.n_relations < 1) throw Error(Errc::invalid_config, "n_relations must be >= 1");
  if (!(cfg.noise_sigma >= 0.0)) throw Error(Errc::invalid_config, "noise_sigma must be >= 0");
  if (cfg.embedding_dim < 2) throw Error(Errc::invalid_config, "embedding_dim must be >= 2");
  if (cfg.aliases_per_entity < 1 || cfg.paraphrases_per_relation < 1) {
    throw Error(Errc::invalid_config, "aliases/paraphrases per item must be >= 1");
  }

  Rng rng(sub_seed(seed, "synth"));
  const std::size_t dim = cfg.embedding_dim;
  auto centers = make_centers(rng, cfg.n_entities + cfg.n_relations, dim);
  std::vector<Vec> entity_center(centers.begin(), centers.begin() + static_cast<std::ptrdiff_t>(cfg.n_entities));
  std::vector<Vec> relation_center(centers.begin() + static_cast<std::ptrdiff_t>(cfg.n_entities), centers.end());

  // Mention slots, interleaved by round so consecutive slots pair different
  // entities: tuple t takes slots 2t (subject) and 2t+1 (object).
  std::vector<std::size_t> slot_entity;
  slot_entity.reserve(n_mentions);
  for (std::size_t j = 0; j < cfg.mentions_per_entity; ++j) {
    for (std::size_t e = 0; e < cfg.n_entities; ++e) slot_entity.push_back(e);
  }

  std::vector<std::size_t> subj_entity(n_tuples), obj_entity(n_tuples);
  for (std::size_t t = 0; t < n_tuples; ++t) {
    subj_entity[t] = slot_entity[2 * t];
    obj_entity[t] = slot_entity[2 * t + 1];
  }

  // Each subject entity has a home relation and context token.
  std::vector<std::size_t> entity_relation(cfg.n_entities);
  for (std::size_t e = 0; e < cfg.n_entities; ++e) {
    entity_relation[e] = cfg.n_relations ? (e / 2) % cfg.n_relations : 0;
  }

  // Ambiguity pairs: subject entities A, B share one surface form in one tuple
  // each, B adopts A's relation, and the two tuples' objects are made
  // anti-correlated.
  std::vector<std::size_t> subject_entities;
  for (std::size_t t = 0; t < n_tuples; ++t) {
    if (std::find(subject_entities.begin(), subject_entities.end(), subj_entity[t]) ==
        subject_entities.end()) {
      subject_entities.push_back(subj_entity[t]);
    }
  }
  if (2 * cfg.ambiguity_pairs > subject_entities.size()) {
    throw Error(Errc::invalid_config, "not enough subject entities for the requested ambiguity pairs");
  }
  struct Ambiguity {
    std::size_t tuple_a, tuple_b;
    std::string surface;
  };
  std::vector<Ambiguity> ambiguities;
  std::map<std::string, Vec> extra_tokens;
  for (std::size_t i = 0; i < cfg.ambiguity_pairs; ++i) {
    const std::size_t a = subject_entities[2 * i];
    const std::size_t b = subject_entities[2 * i + 1];
    entity_relation[b] = entity_relation[a];
    const auto first_with_subject = [&](std::size_t e) {
      for (std::size_t t = 0; t < n_tuples; ++t) {
        if (subj_entity[t] == e) return t;
      }
      return n_tuples;
    };
    const std::size_t ta = first_with_subject(a);
    const std::size_t tb = first_with_subject(b);
    const std::size_t oa = obj_entity[ta];
    const std::size_t ob = obj_entity[tb];
    if (oa != ob) {
      Vec& target = entity_center[ob];
      const double keep = std::sqrt(1.0 - 0.9 * 0.9);
      for (std::size_t k = 0; k < dim; ++k) target[k] = -0.9 * entity_center[oa][k] + keep * target[k];
      normalize_in_place(target);
    }
    const std::string surface = "amb" + std::to_string(i);
    Vec v(dim);
    for (std::size_t k = 0; k < dim; ++k) v[k] = entity_center[a][k] + entity_center[b][k];
    normalize_in_place(v);
    extra_tokens[surface] = jitter(rng, v, cfg.noise_sigma);
    ambiguities.push_back({ta, tb, surface});
  }

  SynthOutput out;
  for (std::size_t e = 0; e < cfg.n_entities; ++e) {
    for (std::size_t k = 0; k < cfg.aliases_per_entity; ++k) {
      out.token_vectors.emplace_back("ent" + std::to_string(e) + "v" + std::to_string(k),
                                     jitter(rng, entity_center[e], cfg.noise_sigma));
    }
  }
  for (const auto& [tok, vec] : extra_tokens) out.token_vectors.emplace_back(tok, vec);
  for (std::size_t r = 0; r < cfg.n_relations; ++r) {
    for (std::size_t k = 0; k < cfg.paraphrases_per_relation; ++k) {
      out.token_vectors.emplace_back("rel" + std::to_string(r) + "p" + std::to_string(k),
                                     jitter(rng, relation_center[r], cfg.noise_sigma));
    }
  }

  const auto alias = [&](std::size_t e) {
    return "ent" + std::to_string(e) + "v" + std::to_string(rng.uniform_index(cfg.aliases_per_entity));
  };
  Corpus& corpus = out.corpus;
  corpus.gold.emplace();
  for (std::size_t t = 0; t < n_tuples; ++t) {
    const auto id = static_cast<std::int64_t>(t);
    const std::size_t rel = entity_relation[subj_entity[t]];
    TupleRecord tuple;
    tuple.tuple_id = id;
    tuple.sentence_id = id;
    tuple.subj = alias(subj_entity[t]);
    tuple.rel = "rel" + std::to_string(rel) + "p" +
                std::to_string(rng.uniform_index(cfg.paraphrases_per_relation));
    tuple.obj = alias(obj_entity[t]);
    for (const auto& amb : ambiguities) {
      if (amb.tuple_a == t || amb.tuple_b == t) tuple.subj = amb.surface;
    }
    const std::string context = "ctx" + std::to_string(subj_entity[t]);
    corpus.sentences.push_back({id, tuple.subj + " " + tuple.rel + " " + tuple.obj + " in " + context});
    corpus.gold->push_back({id, Role::subject, static_cast<std::int64_t>(subj_entity[t])});
    corpus.gold->push_back({id, Role::object, static_cast<std::int64_t>(obj_entity[t])});
    corpus.tuples.push_back(std::move(tuple));
  }
  for (const auto& amb : ambiguities) out.ambiguous_surfaces.push_back(amb.surface);

  for (const auto& g : *corpus.gold) {
    const auto& t = corpus.tuples[static_cast<std::size_t>(g.tuple_id)];
    out.gold_clusters.push_back({g.tuple_id, g.role, g.gold_entity_id, t.np(g.role)});
  }
  std::sort(out.gold_clusters.begin(), out.gold_clusters.end(), [](const auto& x, const auto& y) {
    return std::tie(x.gold_entity_id, x.tuple_id, x.role) < std::tie(y.gold_entity_id, y.tuple_id, y.role);
  });
  return out;
}

void write_synthetic(const SynthOutput& out, const std::filesystem::path& dir) {
  write_corpus(out.corpus, dir);
  {
    std::ofstream f(dir / "gold_clusters.tsv", std::ios::binary);
    if (!f) throw Error(Errc::io_error, "cannot write " + (dir / "gold_clusters.tsv").string());
    for (const auto& m : out.gold_clusters) {
      f << m.gold_entity_id << "\tNP\t" << m.tuple_id << ':' << role_name(m.role) << '\t' << m.surface
        << '\n';
    }
  }
  std::ofstream f(dir / "tokens.vec", std::ios::binary);
  if (!f) throw Error(Errc::io_error, "cannot write " + (dir / "tokens.vec").string());
  const std::size_t dim = out.token_vectors.empty() ? 0 : out.token_vectors.front().second.size();
  f << out.token_vectors.size() << ' ' << dim << '\n';
  char buf[32];
  for (const auto& [tok, vec] : out.token_vectors) {
    f << tok;
    for (double x : vec) {
      std::snprintf(buf, sizeof buf, " %.17g", x);
      f << buf;
    }
    f << '\n';
  }
}

}  // namespace okbc::corpus
