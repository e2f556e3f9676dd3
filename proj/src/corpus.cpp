#include "okbc/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

#include "okbc/error.hpp"
#include "okbc/rng.hpp"

namespace okbc::corpus {
namespace fs = std::filesystem;

std::string_view role_name(Role role) noexcept { return role == Role::subject ? "subj" : "obj"; }

std::string normalize_surface(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch);
  }
  return out;
}

namespace {

struct LineReader {
  std::ifstream in;
  fs::path path;
  std::size_t line_no = 0;

  explicit LineReader(const fs::path& p) : in(p), path(p) {
    if (!in) throw Error(Errc::io_error, "cannot open " + p.string());
  }

  // Next non-comment, non-blank line split on tabs.
  bool next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      fields.clear();
      std::size_t start = 0;
      while (true) {
        const auto tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
      }
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw Error(Errc::parse_error, path.string() + ":" + std::to_string(line_no) + ": " + why);
  }

  std::int64_t integer(const std::string& field) const {
    std::int64_t v = 0;
    const auto trimmed = normalize_surface(field);
    const auto* end = trimmed.data() + trimmed.size();
    const auto [ptr, ec] = std::from_chars(trimmed.data(), end, v);
    if (trimmed.empty() || ec != std::errc() || ptr != end) fail("expected integer, got '" + field + "'");
    return v;
  }
};

Role parse_role(const LineReader& r, const std::string& field) {
  const auto s = normalize_surface(field);
  if (s == "subj" || s == "subject") return Role::subject;
  if (s == "obj" || s == "object") return Role::object;
  r.fail("role must be subj or obj, got '" + field + "'");
}

}  // namespace

void validate(const Corpus& corpus) {
  std::unordered_set<std::int64_t> sentence_ids;
  for (const auto& s : corpus.sentences) {
    if (!sentence_ids.insert(s.sentence_id).second) {
      throw Error(Errc::duplicate_id, "sentence_id " + std::to_string(s.sentence_id));
    }
    if (s.text.empty()) throw Error(Errc::parse_error, "empty text for sentence " + std::to_string(s.sentence_id));
  }
  std::unordered_set<std::int64_t> tuple_ids;
  for (const auto& t : corpus.tuples) {
    if (!tuple_ids.insert(t.tuple_id).second) {
      throw Error(Errc::duplicate_id, "tuple_id " + std::to_string(t.tuple_id));
    }
    if (!sentence_ids.count(t.sentence_id)) {
      throw Error(Errc::dangling_reference, "tuple " + std::to_string(t.tuple_id) +
                                                " references missing sentence_id " +
                                                std::to_string(t.sentence_id));
    }
    if (t.subj.empty() || t.rel.empty() || t.obj.empty()) {
      throw Error(Errc::parse_error, "tuple " + std::to_string(t.tuple_id) + " has an empty field");
    }
  }
  if (corpus.gold) {
    std::set<std::pair<std::int64_t, int>> seen;
    for (const auto& g : *corpus.gold) {
      if (!tuple_ids.count(g.tuple_id)) {
        throw Error(Errc::dangling_reference,
                    "gold link references missing tuple_id " + std::to_string(g.tuple_id));
      }
      if (!seen.insert({g.tuple_id, static_cast<int>(g.role)}).second) {
        throw Error(Errc::duplicate_id, "gold link for tuple " + std::to_string(g.tuple_id) + " " +
                                            std::string(role_name(g.role)) + " appears twice");
      }
    }
  }
}

Corpus load_corpus(const fs::path& tuple_path, const fs::path& sentence_path,
                   const std::optional<fs::path>& gold_path) {
  Corpus corpus;
  std::vector<std::string> f;
  {
    LineReader r(sentence_path);
    while (r.next(f)) {
      if (f.size() != 2) r.fail("expected 2 tab-separated fields, got " + std::to_string(f.size()));
      SentenceRecord s{r.integer(f[0]), f[1]};
      if (normalize_surface(s.text).empty()) r.fail("empty sentence text");
      corpus.sentences.push_back(std::move(s));
    }
  }
  {
    LineReader r(tuple_path);
    while (r.next(f)) {
      if (f.size() != 5) r.fail("expected 5 tab-separated fields, got " + std::to_string(f.size()));
      TupleRecord t{r.integer(f[0]), r.integer(f[1]), normalize_surface(f[2]),
                    normalize_surface(f[3]), normalize_surface(f[4])};
      if (t.subj.empty() || t.rel.empty() || t.obj.empty()) r.fail("empty subject/relation/object");
      corpus.tuples.push_back(std::move(t));
    }
  }
  if (gold_path) {
    LineReader r(*gold_path);
    std::vector<GoldLink> gold;
    while (r.next(f)) {
      if (f.size() != 3) r.fail("expected 3 tab-separated fields, got " + std::to_string(f.size()));
      gold.push_back(GoldLink{r.integer(f[0]), parse_role(r, f[1]), r.integer(f[2])});
    }
    corpus.gold = std::move(gold);
  }
  validate(corpus);
  return corpus;
}

Corpus load_corpus_dir(const fs::path& dir) {
  std::optional<fs::path> gold;
  if (fs::exists(dir / "gold.tsv")) gold = dir / "gold.tsv";
  return load_corpus(dir / "tuples.tsv", dir / "sentences.tsv", gold);
}

namespace {

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + p.string());
  return out;
}

}  // namespace

void write_corpus(const Corpus& corpus, const fs::path& dir) {
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "tuples.tsv");
    for (const auto& t : corpus.tuples) {
      out << t.tuple_id << '\t' << t.sentence_id << '\t' << t.subj << '\t' << t.rel << '\t' << t.obj
          << '\n';
    }
  }
  {
    auto out = open_out(dir / "sentences.tsv");
    for (const auto& s : corpus.sentences) out << s.sentence_id << '\t' << s.text << '\n';
  }
  if (corpus.gold) {
    auto out = open_out(dir / "gold.tsv");
    for (const auto& g : *corpus.gold) {
      out << g.tuple_id << '\t' << role_name(g.role) << '\t' << g.gold_entity_id << '\n';
    }
  }
}

std::vector<std::string> relation_phrases(const Corpus& corpus) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& t : corpus.tuples) {
    if (seen.insert(t.rel).second) out.push_back(t.rel);
  }
  return out;
}

CorpusIndex::CorpusIndex(const Corpus& corpus) {
  for (std::size_t i = 0; i < corpus.tuples.size(); ++i) tuple_pos_[corpus.tuples[i].tuple_id] = i;
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    sentence_pos_[corpus.sentences[i].sentence_id] = i;
  }
  if (corpus.gold) {
    for (const auto& g : *corpus.gold) {
      (g.role == Role::subject ? gold_subj_ : gold_obj_)[g.tuple_id] = g.gold_entity_id;
    }
  }
}

std::size_t CorpusIndex::tuple_pos(std::int64_t tuple_id) const {
  const auto it = tuple_pos_.find(tuple_id);
  if (it == tuple_pos_.end()) throw Error(Errc::dangling_reference, "tuple_id " + std::to_string(tuple_id));
  return it->second;
}

std::size_t CorpusIndex::sentence_pos(std::int64_t sentence_id) const {
  const auto it = sentence_pos_.find(sentence_id);
  if (it == sentence_pos_.end()) {
    throw Error(Errc::dangling_reference, "sentence_id " + std::to_string(sentence_id));
  }
  return it->second;
}

std::optional<std::int64_t> CorpusIndex::gold_of(std::int64_t tuple_id, Role role) const {
  const auto& m = role == Role::subject ? gold_subj_ : gold_obj_;
  const auto it = m.find(tuple_id);
  if (it == m.end()) return std::nullopt;
  return it->second;
}

Split split_validation(const Corpus& corpus, double fraction, std::uint64_t seed) {
  if (!corpus.gold) throw Error(Errc::missing_gold, "validation split needs gold links");
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(Errc::invalid_config, "validation fraction must be in (0,1)");
  }
  std::set<std::int64_t> entity_set;
  for (const auto& g : *corpus.gold) entity_set.insert(g.gold_entity_id);
  std::vector<std::int64_t> entities(entity_set.begin(), entity_set.end());
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(entities.size())));
  if (n_val < 1) throw Error(Errc::invalid_config, "fraction * #entities < 1");

  Rng rng(sub_seed(seed, "split"));
  rng.shuffle(entities.begin(), entities.end());
  std::vector<std::int64_t> val_entities(entities.begin(), entities.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::sort(val_entities.begin(), val_entities.end());
  const std::unordered_set<std::int64_t> val_set(val_entities.begin(), val_entities.end());

  const CorpusIndex index(corpus);
  std::unordered_set<std::int64_t> val_tuples;
  for (const auto& g : *corpus.gold) {
    if (val_set.count(g.gold_entity_id)) val_tuples.insert(g.tuple_id);
  }

  Split split;
  split.validation_entities = val_entities;
  split.train.gold.emplace();
  split.validation.gold.emplace();
  std::unordered_set<std::int64_t> train_sents, val_sents;
  for (const auto& t : corpus.tuples) {
    const bool to_val = val_tuples.count(t.tuple_id) > 0;
    (to_val ? split.validation : split.train).tuples.push_back(t);
    (to_val ? val_sents : train_sents).insert(t.sentence_id);
  }
  for (const auto& g : *corpus.gold) {
    const bool tuple_in_val = val_tuples.count(g.tuple_id) > 0;
    const bool entity_in_val = val_set.count(g.gold_entity_id) > 0;
    if (tuple_in_val && entity_in_val) split.validation.gold->push_back(g);
    if (!tuple_in_val) split.train.gold->push_back(g);
  }
  for (const auto& s : corpus.sentences) {
    if (train_sents.count(s.sentence_id)) split.train.sentences.push_back(s);
    if (val_sents.count(s.sentence_id)) split.validation.sentences.push_back(s);
  }
  return split;
}

}  // namespace okbc::corpus
