#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "editgloss/dsl.hpp"
#include "editgloss/executor.hpp"
#include "editgloss/minedit.hpp"

namespace editgloss {

/// Malformed input data; `line` is 1-based, 0 when not line-specific.
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& where, std::size_t line, const std::string& message);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Token inventory shared by sentences and glosses. Ids 0..2 are reserved.
class SharedVocabulary {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::int32_t kBop = 2;
  static constexpr std::int32_t kNumReserved = 3;

  SharedVocabulary();

  /// Returns the id, inserting the token if it is new.
  std::int32_t add(std::string_view surface);
  /// Id of `surface`, or kUnk.
  std::int32_t id(std::string_view surface) const;
  bool contains(std::string_view surface) const;
  const std::string& surface(std::int32_t id) const;
  std::size_t size() const { return tokens_.size(); }

  /// Sets ids on tokens in place (unknown surfaces become kUnk).
  void map(std::vector<Token>& tokens) const;
  Token token(std::string_view surface) const { return Token{std::string(surface), id(surface)}; }

  /// Non-reserved tokens, one per line, in id order.
  void save(const std::filesystem::path& path) const;
  static SharedVocabulary load(const std::filesystem::path& path);

  const std::vector<std::string>& tokens() const { return tokens_; }

  friend bool operator==(const SharedVocabulary& a, const SharedVocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

struct ParallelPair {
  Sentence sentence;
  GlossSequence glosses;
  std::optional<Program> minimal_program;
};

struct Corpus {
  std::vector<ParallelPair> pairs;
  SharedVocabulary vocabulary;
};

struct LoadOptions {
  bool lowercase = false;
};

/// Reads `sentence<TAB>glosses` lines. Without `vocabulary` a new one is
/// built from the file; with it, unknown tokens map to UNK.
Corpus load_corpus(const std::filesystem::path& path, const SharedVocabulary* vocabulary = nullptr,
                   const LoadOptions& options = {});
Corpus parse_corpus(std::string_view text, const std::string& source_name,
                    const SharedVocabulary* vocabulary = nullptr, const LoadOptions& options = {});

std::string format_corpus(const std::vector<ParallelPair>& pairs);
void write_corpus(const std::filesystem::path& path, const std::vector<ParallelPair>& pairs);

struct DerivationReport {
  std::size_t pairs = 0;
  /// Statement counts per kind (ADD, DEL, COPY, SKIP).
  std::array<std::size_t, kNumActionKinds> statements{};
  /// Action applications per kind, FOR repetitions unrolled.
  std::array<std::size_t, kNumActionKinds> applications{};
  std::size_t loop_statements = 0;
  double mean_program_length = 0.0;
  std::size_t max_program_length = 0;
  double mean_sentence_length = 0.0;
  double mean_gloss_length = 0.0;

  std::string to_text() const;
};

/// Fills every pair's minimal program and summarises the action distribution.
DerivationReport derive_all(std::vector<ParallelPair>& pairs, const MinEditOptions& options = {});

struct SyntheticConfig {
  std::size_t size = 200;
  std::size_t vocab_size = 60;
  double deletion_rate = 0.4;
  double reorder_rate = 0.1;
  double insertion_rate = 0.1;
  std::size_t min_length = 5;
  std::size_t max_length = 15;
  std::uint64_t seed = 1;
};

/// Synthetic parallel corpus. Every sentence word type gets a fixed rule
/// drawn from the seed: dropped (deletion_rate), moved one slot left past its
/// kept predecessor (reorder_rate), or followed by an inserted marker gloss
/// (insertion_rate). Glosses are therefore a deterministic function of the
/// sentence. A sentence whose glosses would be empty is redrawn, unless
/// every type is dropped.
std::vector<ParallelPair> generate_synthetic_pairs(const SyntheticConfig& config);

/// generate_synthetic_pairs() rendered in corpus file format.
std::string make_synthetic_corpus(const SyntheticConfig& config);

}  // namespace editgloss
