#pragma once

// Open KB corpus: relation tuples, their source sentences, and optional gold
// entity links for the NP mentions.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace okbc::corpus {

enum class Role : std::uint8_t { subject = 0, object = 1 };

std::string_view role_name(Role role) noexcept;  // "subj" / "obj"

struct TupleRecord {
  std::int64_t tuple_id = 0;
  std::int64_t sentence_id = 0;
  std::string subj;
  std::string rel;
  std::string obj;

  const std::string& np(Role role) const { return role == Role::subject ? subj : obj; }
  friend bool operator==(const TupleRecord&, const TupleRecord&) = default;
};

struct SentenceRecord {
  std::int64_t sentence_id = 0;
  std::string text;
  friend bool operator==(const SentenceRecord&, const SentenceRecord&) = default;
};

struct GoldLink {
  std::int64_t tuple_id = 0;
  Role role = Role::subject;
  std::int64_t gold_entity_id = 0;
  friend bool operator==(const GoldLink&, const GoldLink&) = default;
};

struct Corpus {
  std::vector<TupleRecord> tuples;
  std::vector<SentenceRecord> sentences;
  std::optional<std::vector<GoldLink>> gold;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Lowercases ASCII letters and collapses whitespace runs to one space,
// trimming both ends.
std::string normalize_surface(std::string_view s);

// Checks every invariant (unique ids, resolved references, non-empty fields).
// Throws okbc::Error with DuplicateId / DanglingReference / ParseError.
void validate(const Corpus& corpus);

Corpus load_corpus(const std::filesystem::path& tuple_path,
                   const std::filesystem::path& sentence_path,
                   const std::optional<std::filesystem::path>& gold_path = std::nullopt);

// Loads `tuples.tsv`, `sentences.tsv` and, if present, `gold.tsv` from dir.
Corpus load_corpus_dir(const std::filesystem::path& dir);

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

// Distinct relation phrases in order of first appearance; this order defines
// RP node indices everywhere downstream.
std::vector<std::string> relation_phrases(const Corpus& corpus);

// Lookup helpers over a validated corpus.
class CorpusIndex {
 public:
  explicit CorpusIndex(const Corpus& corpus);

  std::size_t tuple_pos(std::int64_t tuple_id) const;
  std::size_t sentence_pos(std::int64_t sentence_id) const;
  // Gold entity of the mention, if linked.
  std::optional<std::int64_t> gold_of(std::int64_t tuple_id, Role role) const;

 private:
  std::unordered_map<std::int64_t, std::size_t> tuple_pos_;
  std::unordered_map<std::int64_t, std::size_t> sentence_pos_;
  std::unordered_map<std::int64_t, std::int64_t> gold_subj_;
  std::unordered_map<std::int64_t, std::int64_t> gold_obj_;
};

// ---------------------------------------------------------------------------
// Synthetic corpora with planted canonical clusters.

struct SynthConfig {
  std::size_t n_entities = 20;
  std::size_t mentions_per_entity = 5;
  std::size_t n_relations = 10;
  // 0 derives n_entities * mentions_per_entity / 2; otherwise must match it.
  std::size_t n_tuples = 0;
  std::size_t ambiguity_pairs = 0;
  double noise_sigma = 0.1;
  // Dimension of the emitted token embedding table.
  std::size_t embedding_dim = 32;
  std::size_t aliases_per_entity = 3;
  std::size_t paraphrases_per_relation = 3;
};

// One gold cluster member: the NP mention (tuple_id, role).
struct GoldMember {
  std::int64_t tuple_id = 0;
  Role role = Role::subject;
  std::int64_t gold_entity_id = 0;
  std::string surface;
  friend bool operator==(const GoldMember&, const GoldMember&) = default;
};

struct SynthOutput {
  Corpus corpus;
  std::vector<GoldMember> gold_clusters;  // sorted by (entity, tuple_id, role)
  // word2vec-style token table (token -> vector) that makes the planted
  // entities separable; written alongside the corpus as tokens.vec.
  std::vector<std::pair<std::string, std::vector<double>>> token_vectors;
  // Surface forms shared by two gold entities, one per ambiguity pair.
  std::vector<std::string> ambiguous_surfaces;
};

SynthOutput generate_synthetic(const SynthConfig& cfg, std::uint64_t seed);

// Writes tuples.tsv, sentences.tsv, gold.tsv, gold_clusters.tsv, tokens.vec.
void write_synthetic(const SynthOutput& out, const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Entity-level validation split.

struct Split {
  Corpus train;
  Corpus validation;
  std::vector<std::int64_t> validation_entities;  // sorted
};

// Samples round(fraction * #entities) gold entities; every tuple that mentions
// one of them goes to validation. Links of non-sampled entities inside such
// tuples are dropped so the two gold entity sets stay disjoint.
Split split_validation(const Corpus& corpus, double fraction, std::uint64_t seed);

}  // namespace okbc::corpus
