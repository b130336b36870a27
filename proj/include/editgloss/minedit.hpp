#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "editgloss/dsl.hpp"
#include "editgloss/executor.hpp"

namespace editgloss {

/// Substitution-free edit-distance table over sentence/gloss prefixes.
/// cost(i, j) is the fewest ADD+DEL actions turning x[1..i] into y[1..j].
class EditDpTable {
 public:
  EditDpTable(const Sentence& x, const GlossSequence& y);

  std::size_t rows() const { return m_ + 1; }
  std::size_t cols() const { return n_ + 1; }
  std::size_t cost(std::size_t i, std::size_t j) const { return cells_[i * (n_ + 1) + j]; }

 private:
  std::size_t m_;
  std::size_t n_;
  std::vector<std::size_t> cells_;
};

struct MinEditOptions {
  /// Longest run folded into a single FOR statement; longer runs are split.
  int max_repeat = 5;
  /// COPY(k) then COPY(k+1) act on different words, so COPY runs stay
  /// unrolled unless this is set.
  bool fold_copies = false;
};

std::size_t min_edit_distance(const Sentence& x, const GlossSequence& y);

/// Deterministic minimal program: execute(result, x) == y, ADD precedes DEL
/// among equal-cost alignments, runs of DEL and of identical ADD are folded
/// into FOR statements, trailing deletions are left to the final SKIP.
Program minimal_program(const Sentence& x, const GlossSequence& y, const MinEditOptions& options = {});

/// ADD+DEL applications of a program run on a sentence of length m, counting
/// the words the final SKIP discards as deletions.
std::size_t edit_action_count(const Program& program, std::size_t sentence_len);

class InstanceTooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr std::size_t kBruteForceLimit = 6;

/// Exhaustive search over which sentence words are copied; independent of
/// the DP. Requires m, n <= 6.
std::size_t brute_force_oracle(const Sentence& x, const GlossSequence& y);

}  // namespace editgloss
