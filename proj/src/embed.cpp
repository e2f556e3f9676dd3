#include "okbc/embed.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "okbc/error.hpp"
#include "okbc/kernels.hpp"
#include "okbc/rng.hpp"

namespace okbc::embed {

EmbeddingTable::EmbeddingTable(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error(Errc::invalid_config, "embedding dimension must be positive");
}

void EmbeddingTable::insert(std::string token, std::vector<double> vec) {
  if (vec.size() != dim_) {
    throw Error(Errc::dimension_mismatch, "token '" + token + "' has " + std::to_string(vec.size()) +
                                              " components, table dim is " + std::to_string(dim_));
  }
  for (double x : vec) {
    if (!std::isfinite(x)) throw Error(Errc::invalid_config, "non-finite component for token '" + token + "'");
  }
  entries_[std::move(token)] = std::move(vec);
}

const std::vector<double>* EmbeddingTable::find(std::string_view token) const {
  const auto it = entries_.find(std::string(token));
  return it == entries_.end() ? nullptr : &it->second;
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open embedding table " + path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw Error(Errc::parse_error, path.string() + ":1: missing header");
  std::istringstream header(line);
  std::size_t count = 0, dim = 0;
  if (!(header >> count >> dim) || dim == 0) {
    throw Error(Errc::parse_error, path.string() + ":1: header must be 'count dim'");
  }
  EmbeddingTable table(dim);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    std::string token;
    row >> token;
    std::vector<double> vec;
    vec.reserve(dim);
    double x;
    while (row >> x) vec.push_back(x);
    if (!row.eof() || vec.size() != dim) {
      throw Error(Errc::parse_error, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                         std::to_string(dim) + " numbers after the token");
    }
    table.insert(std::move(token), std::move(vec));
  }
  if (table.size() != count) {
    throw Error(Errc::parse_error, path.string() + ": header declares " + std::to_string(count) +
                                       " entries, found " + std::to_string(table.size()));
  }
  return table;
}

std::vector<std::string> phrase_tokens(std::string_view phrase) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : phrase) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '_') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<double> hash_vector(std::string_view token, std::size_t dim) {
  std::vector<double> v(dim);
  std::uint64_t state = fnv1a64(token);
  double sq = 0.0;
  for (double& x : v) {
    state = splitmix64(state);
    x = static_cast<double>(state >> 11) * 0x1.0p-52 - 1.0;
    sq += x * x;
  }
  if (sq == 0.0) {
    v[0] = 1.0;
    return v;
  }
  const double n = std::sqrt(sq);
  for (double& x : v) x /= n;
  return v;
}

PhraseVector embed_phrase_checked(const EmbeddingTable& table, std::string_view phrase) {
  const auto tokens = phrase_tokens(phrase);
  if (tokens.empty()) throw Error(Errc::empty_phrase, "phrase '" + std::string(phrase) + "' has no tokens");
  std::vector<double> mean(table.dim(), 0.0);
  for (const auto& tok : tokens) {
    if (const auto* v = table.find(tok)) {
      kernels::axpy(1.0, *v, mean);
    } else {
      kernels::axpy(1.0, hash_vector(tok, table.dim()), mean);
    }
  }
  kernels::scale(1.0 / static_cast<double>(tokens.size()), mean);
  if (kernels::normalize(mean) < 1e-12) return {hash_vector(phrase, table.dim()), true};
  return {std::move(mean), false};
}

std::vector<double> embed_phrase(const EmbeddingTable& table, std::string_view phrase) {
  return embed_phrase_checked(table, phrase).vec;
}

std::vector<std::string> sentence_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    const bool word = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
    if (word) {
      cur.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

TfIdf tfidf_matrix(const std::vector<corpus::SentenceRecord>& sentences) {
  std::vector<std::map<std::string, double>> counts(sentences.size());
  std::map<std::string, std::size_t> df;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    for (auto& tok : sentence_tokens(sentences[i].text)) counts[i][std::move(tok)] += 1.0;
    for (const auto& [tok, c] : counts[i]) ++df[tok];
  }
  TfIdf out;
  std::map<std::string, std::size_t> column;
  for (const auto& [tok, d] : df) {
    column[tok] = out.vocab.size();
    out.vocab.push_back(tok);
  }
  const double n = static_cast<double>(sentences.size());
  out.weights = Matrix(sentences.size(), out.vocab.size());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    for (const auto& [tok, c] : counts[i]) {
      const double idf = std::log((1.0 + n) / (1.0 + static_cast<double>(df[tok]))) + 1.0;
      out.weights(i, column[tok]) = c * idf;
    }
  }
  return out;
}

namespace {

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& y) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

}  // namespace

BowSvdResult embed_sentences_bow_svd(const std::vector<corpus::SentenceRecord>& sentences,
                                     const BowSvdConfig& cfg) {
  if (sentences.empty()) throw Error(Errc::empty_corpus, "no sentences to embed");
  if (cfg.rank < 1) throw Error(Errc::invalid_config, "SVD rank must be >= 1");

  const TfIdf tfidf = tfidf_matrix(sentences);
  const auto n = static_cast<Eigen::Index>(sentences.size());
  const auto v = static_cast<Eigen::Index>(tfidf.vocab.size());

  BowSvdResult result;
  if (v == 0) {
    result.vectors = Matrix(sentences.size(), 1, 0.0);
    result.degenerate = sentences.size();
    for (std::size_t i = 0; i < sentences.size(); ++i) result.vectors(i, 0) = 1.0;
    result.effective_rank = 1;
    return result;
  }

  std::vector<Eigen::Triplet<double>> entries;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < v; ++j) {
      const double w = tfidf.weights(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      if (w != 0.0) entries.emplace_back(i, j, w);
    }
  }
  Eigen::SparseMatrix<double> a(n, v);
  a.setFromTriplets(entries.begin(), entries.end());

  const Eigen::Index sketch =
      std::min<Eigen::Index>(static_cast<Eigen::Index>(cfg.rank + cfg.oversampling), std::min(n, v));
  Rng rng(cfg.seed);
  Eigen::MatrixXd omega(v, sketch);
  for (Eigen::Index c = 0; c < sketch; ++c) {
    for (Eigen::Index r = 0; r < v; ++r) omega(r, c) = rng.normal();
  }
  Eigen::MatrixXd q = orthonormal_basis(a * omega);
  for (std::size_t it = 0; it < cfg.power_iterations; ++it) {
    const Eigen::MatrixXd z = orthonormal_basis(a.transpose() * q);
    q = orthonormal_basis(a * z);
  }
  const Eigen::MatrixXd b = q.transpose() * a;  // sketch x v
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU);
  const Eigen::VectorXd& sigma = svd.singularValues();

  std::size_t r = 0;
  const double cutoff = sigma.size() > 0 ? sigma(0) * 1e-10 : 0.0;
  while (r < cfg.rank && static_cast<Eigen::Index>(r) < sigma.size() && sigma(static_cast<Eigen::Index>(r)) > cutoff) {
    ++r;
  }
  r = std::max<std::size_t>(r, 1);
  const auto rr = static_cast<Eigen::Index>(r);
  const Eigen::MatrixXd us = q * svd.matrixU().leftCols(rr) * sigma.head(rr).asDiagonal();

  result.effective_rank = r;
  result.singular_values.assign(sigma.data(), sigma.data() + rr);
  result.vectors = Matrix(sentences.size(), r);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto row = result.vectors.row(static_cast<std::size_t>(i));
    for (Eigen::Index c = 0; c < rr; ++c) row[static_cast<std::size_t>(c)] = us(i, c);
    if (kernels::normalize(row) < 1e-12) {
      const auto fallback = hash_vector(sentences[static_cast<std::size_t>(i)].text, r);
      std::copy(fallback.begin(), fallback.end(), row.begin());
      ++result.degenerate;
    }
  }
  return result;
}

bool fit_dimension(std::vector<double>& vec, std::size_t dim) {
  vec.resize(dim, 0.0);
  return kernels::normalize(vec) >= 1e-12;
}

namespace {

void store_row(Matrix& m, std::size_t r, std::vector<double> vec, std::string_view fallback_key,
               std::size_t& degenerate) {
  if (!fit_dimension(vec, m.cols())) {
    vec = hash_vector(fallback_key, m.cols());
    ++degenerate;
  }
  std::copy(vec.begin(), vec.end(), m.row(r).begin());
}

}  // namespace

SemanticEmbeddings attach_embeddings(const corpus::Corpus& corpus, const EmbeddingTable& np_table,
                                     const EmbeddingTable& rp_table, const SentenceSource& sent_source,
                                     std::size_t d0) {
  if (d0 == 0) throw Error(Errc::invalid_config, "d0 must be positive");
  SemanticEmbeddings out;
  out.dim = d0;
  out.np = Matrix(2 * corpus.tuples.size(), d0);
  for (std::size_t t = 0; t < corpus.tuples.size(); ++t) {
    for (auto role : {corpus::Role::subject, corpus::Role::object}) {
      const auto& surface = corpus.tuples[t].np(role);
      auto pv = embed_phrase_checked(np_table, surface);
      out.degenerate += pv.degenerate;
      store_row(out.np, 2 * t + static_cast<std::size_t>(role), std::move(pv.vec), surface, out.degenerate);
    }
  }
  const auto rels = corpus::relation_phrases(corpus);
  out.rp = Matrix(rels.size(), d0);
  for (std::size_t r = 0; r < rels.size(); ++r) {
    auto pv = embed_phrase_checked(rp_table, rels[r]);
    out.degenerate += pv.degenerate;
    store_row(out.rp, r, std::move(pv.vec), rels[r], out.degenerate);
  }
  out.sent = Matrix(corpus.sentences.size(), d0);
  if (const auto* table = std::get_if<const EmbeddingTable*>(&sent_source)) {
    for (std::size_t s = 0; s < corpus.sentences.size(); ++s) {
      const auto& text = corpus.sentences[s].text;
      auto tokens = sentence_tokens(text);
      std::string joined;
      for (const auto& tok : tokens) joined += tok + " ";
      if (joined.empty()) joined = text;
      auto pv = embed_phrase_checked(**table, joined);
      out.degenerate += pv.degenerate;
      store_row(out.sent, s, std::move(pv.vec), text, out.degenerate);
    }
  } else if (!corpus.sentences.empty()) {
    const auto& cfg = std::get<BowSvdSource>(sent_source).cfg;
    auto svd = embed_sentences_bow_svd(corpus.sentences, cfg);
    out.degenerate += svd.degenerate;
    for (std::size_t s = 0; s < corpus.sentences.size(); ++s) {
      const auto row = svd.vectors.row(s);
      store_row(out.sent, s, std::vector<double>(row.begin(), row.end()), corpus.sentences[s].text,
                out.degenerate);
    }
  }
  return out;
}

}  // namespace okbc::embed
