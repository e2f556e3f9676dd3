#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace okbc {

enum class Errc {
  parse_error,
  dangling_reference,
  duplicate_id,
  invalid_config,
  missing_gold,
  empty_phrase,
  empty_corpus,
  dimension_mismatch,
  missing_embedding,
  cross_layer,
  unknown_node,
  empty_set,
  role_mismatch,
  same_pair,
  too_large,
  wrong_node_kind,
  empty_matrix,
  shape_mismatch,
  empty_pair_sets,
  empty_input,
  empty_grid,
  coverage_mismatch,
  io_error,
};

std::string_view errc_name(Errc code) noexcept;

// Every failure raised by the library carries one of the codes above so
// callers (and tests) can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::parse_error: return "ParseError";
    case Errc::dangling_reference: return "DanglingReference";
    case Errc::duplicate_id: return "DuplicateId";
    case Errc::invalid_config: return "InvalidConfig";
    case Errc::missing_gold: return "MissingGold";
    case Errc::empty_phrase: return "EmptyPhrase";
    case Errc::empty_corpus: return "EmptyCorpus";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::missing_embedding: return "MissingEmbedding";
    case Errc::cross_layer: return "CrossLayer";
    case Errc::unknown_node: return "UnknownNode";
    case Errc::empty_set: return "EmptySet";
    case Errc::role_mismatch: return "RoleMismatch";
    case Errc::same_pair: return "SamePair";
    case Errc::too_large: return "TooLarge";
    case Errc::wrong_node_kind: return "WrongNodeKind";
    case Errc::empty_matrix: return "EmptyMatrix";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::empty_pair_sets: return "EmptyPairSets";
    case Errc::empty_input: return "EmptyInput";
    case Errc::empty_grid: return "EmptyGrid";
    case Errc::coverage_mismatch: return "CoverageMismatch";
    case Errc::io_error: return "IoError";
  }
  return "Unknown";
}

}  // namespace okbc
