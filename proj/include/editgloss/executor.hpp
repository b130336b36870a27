#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "editgloss/dsl.hpp"

namespace editgloss {

using Sentence = std::vector<Token>;
using GlossSequence = std::vector<Token>;

/// Splits on whitespace; ids stay unmapped.
std::vector<Token> tokenize(std::string_view text);
std::string join(const std::vector<Token>& tokens);

class ExecutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Executor state. `pointer` is the 1-based index of the next sentence word
/// DEL/COPY act on; `pointer == m + 1` means the sentence is exhausted.
struct ExecutionState {
  std::size_t pointer = 1;
  GlossSequence output;
  bool terminated = false;

  std::size_t gloss_len() const { return output.size(); }
  /// Words DEL/COPY may still consume.
  std::size_t remaining(std::size_t sentence_len) const { return sentence_len + 1 - pointer; }
};

/// Glosses a statement emits (r for ADD/COPY, 0 otherwise).
std::size_t emitted_glosses(const Statement& s);
/// Sentence words a statement consumes (r for DEL/COPY, 0 otherwise).
std::size_t consumed_words(const Statement& s);

ExecutionState step(const ExecutionState& state, const Statement& s, const Sentence& x);

/// In-place variant used on hot paths.
void apply(ExecutionState& state, const Statement& s, const Sentence& x);

GlossSequence execute(const Program& program, const Sentence& x);

std::pair<GlossSequence, ExecutionState> execute_prefix(std::span<const Statement> prefix,
                                                        const Sentence& x);

/// visible[t] = glosses emitted by statements 1..t-1 (0-based vector).
struct MaskSchedule {
  std::vector<std::size_t> visible;

  friend bool operator==(const MaskSchedule&, const MaskSchedule&) = default;
};

MaskSchedule mask_schedule(std::span<const Statement> statements);
inline MaskSchedule mask_schedule(const Program& p) { return mask_schedule(std::span(p.statements)); }

}  // namespace editgloss
