#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "editgloss/dsl.hpp"
#include "editgloss/executor.hpp"

namespace editgloss {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Statement-level Levenshtein distance divided by the reference length.
/// Statements match iff kind, ADD token and repetitions all agree.
double per(const Program& predicted, const Program& reference);

/// Corpus BLEU: clipped n-gram counts pooled over all pairs, uniform
/// weights, brevity penalty. Result maps n -> BLEU-n for n in 1..max_n.
std::map<int, double> bleu(std::span<const GlossSequence> candidates,
                           std::span<const GlossSequence> references, int max_n = 4);

/// Sentence BLEU-4 for rewards: add-one smoothing on precisions of order >= 2.
double smoothed_sentence_bleu(const GlossSequence& candidate, const GlossSequence& reference, int max_n = 4);

std::size_t lcs_length(const std::vector<Token>& a, const std::vector<Token>& b);

/// LCS-based F1 (beta = 1).
double rouge_l(const GlossSequence& candidate, const GlossSequence& reference);

/// Same as rouge_l but returns 0 instead of throwing when either side is empty.
double rouge_l_or_zero(const GlossSequence& candidate, const GlossSequence& reference);

struct EvalReport {
  double per = 0.0;
  std::map<int, double> bleu;
  double rouge_l = 0.0;
  std::size_t num_pairs = 0;

  /// key=value lines: per, bleu1..bleu4, rougeL, pairs.
  std::string to_key_value() const;
  std::string to_tsv() const;
};

/// Corpus report. PER pools statement edits over pairs and divides by the
/// total reference statement count; it is only computed when both program
/// lists are given. ROUGE-L is the mean over pairs (a pair with one empty
/// side scores 0, two empty sides score 1).
EvalReport evaluate(std::span<const GlossSequence> candidates, std::span<const GlossSequence> references,
                    std::span<const Program> predicted_programs = {},
                    std::span<const Program> reference_programs = {});

}  // namespace editgloss
