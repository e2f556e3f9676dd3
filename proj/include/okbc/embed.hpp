#pragma once

// Unit-norm semantic embeddings for NP, RP and sentence nodes.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "okbc/corpus.hpp"
#include "okbc/matrix.hpp"

namespace okbc::embed {

// Pre-learned token vectors (word2vec text format).
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }

  // Throws DimensionMismatch on wrong length, InvalidConfig on NaN/Inf.
  void insert(std::string token, std::vector<double> vec);
  const std::vector<double>* find(std::string_view token) const;

  static EmbeddingTable load(const std::filesystem::path& path);

 private:
  std::size_t dim_;
  std::unordered_map<std::string, std::vector<double>> entries_;
};

// Splits on whitespace and underscores.
std::vector<std::string> phrase_tokens(std::string_view phrase);

// Deterministic pseudo-random unit vector seeded by the token's FNV-1a hash.
// Uses plain scalar arithmetic so the values are identical on every platform.
std::vector<double> hash_vector(std::string_view token, std::size_t dim);

struct PhraseVector {
  std::vector<double> vec;
  bool degenerate = false;  // token mean was ~0 and the phrase-hash fallback was used
};

PhraseVector embed_phrase_checked(const EmbeddingTable& table, std::string_view phrase);

// Mean of the token vectors (OOV tokens use hash_vector), L2-normalized.
// Throws EmptyPhrase when the phrase has no tokens.
std::vector<double> embed_phrase(const EmbeddingTable& table, std::string_view phrase);

// Lowercased alphanumeric runs.
std::vector<std::string> sentence_tokens(std::string_view text);

struct TfIdf {
  std::vector<std::string> vocab;  // sorted
  Matrix weights;                  // sentences x vocab, tf * (ln((1+N)/(1+df)) + 1)
};

TfIdf tfidf_matrix(const std::vector<corpus::SentenceRecord>& sentences);

struct BowSvdConfig {
  std::size_t rank = 32;
  std::size_t oversampling = 10;
  std::size_t power_iterations = 8;
  std::uint64_t seed = 0x5eed5eedULL;
};

struct BowSvdResult {
  Matrix vectors;  // sentences x effective_rank, unit rows
  std::vector<double> singular_values;
  std::size_t effective_rank = 0;
  std::size_t degenerate = 0;  // rows with no vocabulary mass (hash fallback)
};

// TF-IDF followed by a randomized truncated SVD; each sentence is its row of
// U * Sigma, normalized. Throws EmptyCorpus with no sentences.
BowSvdResult embed_sentences_bow_svd(const std::vector<corpus::SentenceRecord>& sentences,
                                     const BowSvdConfig& cfg);

struct SemanticEmbeddings {
  std::size_t dim = 0;
  Matrix np;    // row 2*t + role for tuple position t
  Matrix rp;    // row per corpus::relation_phrases order
  Matrix sent;  // row per corpus.sentences order
  std::size_t degenerate = 0;
};

struct BowSvdSource {
  BowSvdConfig cfg;
};

using SentenceSource = std::variant<const EmbeddingTable*, BowSvdSource>;

// Truncates or zero-pads to `dim`, then re-normalizes. Returns false when
// the result has no mass (caller substitutes a fallback).
bool fit_dimension(std::vector<double>& vec, std::size_t dim);

SemanticEmbeddings attach_embeddings(const corpus::Corpus& corpus, const EmbeddingTable& np_table,
                                     const EmbeddingTable& rp_table, const SentenceSource& sent_source,
                                     std::size_t d0);

}  // namespace okbc::embed
