#include "editgloss/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace editgloss {

namespace {

std::size_t statement_distance(const std::vector<Statement>& a, const std::vector<Statement>& b) {
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const GlossSequence& seq, std::size_t n) {
  NgramCounts counts;
  if (seq.size() < n) return counts;
  std::vector<std::string> gram(n);
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    for (std::size_t k = 0; k < n; ++k) gram[k] = seq[i + k].surface;
    ++counts[gram];
  }
  return counts;
}

// Clipped matches and candidate n-gram total for one pair.
std::pair<std::size_t, std::size_t> clipped_matches(const GlossSequence& cand, const GlossSequence& ref,
                                                    std::size_t n) {
  const NgramCounts c = ngrams(cand, n);
  const NgramCounts r = ngrams(ref, n);
  std::size_t matched = 0;
  std::size_t total = 0;
  for (const auto& [gram, count] : c) {
    total += count;
    auto it = r.find(gram);
    if (it != r.end()) matched += std::min(count, it->second);
  }
  return {matched, total};
}

double brevity_penalty(std::size_t cand_len, std::size_t ref_len) {
  if (cand_len == 0) return 0.0;
  if (cand_len >= ref_len) return 1.0;
  return std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
}

}  // namespace

double per(const Program& predicted, const Program& reference) {
  if (reference.statements.empty()) throw MetricError("PER needs a non-empty reference program");
  return static_cast<double>(statement_distance(predicted.statements, reference.statements)) /
         static_cast<double>(reference.statements.size());
}

std::map<int, double> bleu(std::span<const GlossSequence> candidates, std::span<const GlossSequence> references,
                           int max_n) {
  if (candidates.size() != references.size()) throw MetricError("BLEU: candidate/reference count mismatch");
  if (candidates.empty()) throw MetricError("BLEU: empty corpus");
  if (max_n < 1 || max_n > 4) throw MetricError("BLEU: max_n must be in 1..4");

  std::vector<std::size_t> matched(static_cast<std::size_t>(max_n) + 1, 0);
  std::vector<std::size_t> total(static_cast<std::size_t>(max_n) + 1, 0);
  std::vector<std::size_t> ref_total(static_cast<std::size_t>(max_n) + 1, 0);
  std::size_t cand_len = 0;
  std::size_t ref_len = 0;
  for (std::size_t p = 0; p < candidates.size(); ++p) {
    cand_len += candidates[p].size();
    ref_len += references[p].size();
    for (int n = 1; n <= max_n; ++n) {
      auto [m, t] = clipped_matches(candidates[p], references[p], static_cast<std::size_t>(n));
      matched[static_cast<std::size_t>(n)] += m;
      total[static_cast<std::size_t>(n)] += t;
      if (references[p].size() >= static_cast<std::size_t>(n)) {
        ref_total[static_cast<std::size_t>(n)] += references[p].size() + 1 - static_cast<std::size_t>(n);
      }
    }
  }

  // An order with no n-grams on either side carries no evidence and is
  // skipped, so identical corpora of short sequences still score 1.
  const double bp = cand_len == 0 && ref_len == 0 ? 1.0 : brevity_penalty(cand_len, ref_len);
  std::map<int, double> scores;
  double log_sum = 0.0;
  bool zero = false;
  for (int n = 1; n <= max_n; ++n) {
    const auto k = static_cast<std::size_t>(n);
    if (total[k] == 0 && ref_total[k] == 0) {
      // no evidence at this order
    } else if (matched[k] == 0) {
      zero = true;
    } else {
      log_sum += std::log(static_cast<double>(matched[k]) / static_cast<double>(total[k]));
    }
    scores[n] = zero ? 0.0 : bp * std::exp(log_sum / n);
  }
  return scores;
}

double smoothed_sentence_bleu(const GlossSequence& candidate, const GlossSequence& reference, int max_n) {
  if (candidate.empty() || reference.empty()) return candidate.empty() && reference.empty() ? 1.0 : 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    auto [m, t] = clipped_matches(candidate, reference, static_cast<std::size_t>(n));
    double p;
    if (n == 1) {
      if (m == 0) return 0.0;
      p = static_cast<double>(m) / static_cast<double>(t);
    } else {
      p = static_cast<double>(m + 1) / static_cast<double>(t + 1);
    }
    log_sum += std::log(p);
  }
  return brevity_penalty(candidate.size(), reference.size()) * std::exp(log_sum / max_n);
}

std::size_t lcs_length(const std::vector<Token>& a, const std::vector<Token>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const GlossSequence& candidate, const GlossSequence& reference) {
  if (candidate.empty() || reference.empty()) throw MetricError("ROUGE-L needs non-empty sequences");
  const auto lcs = static_cast<double>(lcs_length(candidate, reference));
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(candidate.size());
  const double r = lcs / static_cast<double>(reference.size());
  return 2.0 * p * r / (p + r);
}

double rouge_l_or_zero(const GlossSequence& candidate, const GlossSequence& reference) {
  if (candidate.empty() || reference.empty()) return candidate.empty() && reference.empty() ? 1.0 : 0.0;
  return rouge_l(candidate, reference);
}

std::string EvalReport::to_key_value() const {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "per=" << per << '\n';
  for (int n = 1; n <= 4; ++n) {
    auto it = bleu.find(n);
    out << "bleu" << n << '=' << (it == bleu.end() ? 0.0 : it->second) << '\n';
  }
  out << "rougeL=" << rouge_l << '\n';
  out << "pairs=" << num_pairs << '\n';
  return out.str();
}

std::string EvalReport::to_tsv() const {
  std::ostringstream out;
  out << std::setprecision(10);
  out << "per\tbleu1\tbleu2\tbleu3\tbleu4\trougeL\tpairs\n";
  out << per;
  for (int n = 1; n <= 4; ++n) {
    auto it = bleu.find(n);
    out << '\t' << (it == bleu.end() ? 0.0 : it->second);
  }
  out << '\t' << rouge_l << '\t' << num_pairs << '\n';
  return out.str();
}

EvalReport evaluate(std::span<const GlossSequence> candidates, std::span<const GlossSequence> references,
                    std::span<const Program> predicted_programs, std::span<const Program> reference_programs) {
  EvalReport report;
  report.num_pairs = candidates.size();
  report.bleu = bleu(candidates, references, 4);
  double rouge_sum = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) rouge_sum += rouge_l_or_zero(candidates[i], references[i]);
  report.rouge_l = rouge_sum / static_cast<double>(candidates.size());
  if (!predicted_programs.empty() || !reference_programs.empty()) {
    if (predicted_programs.size() != reference_programs.size() || predicted_programs.size() != candidates.size()) {
      throw MetricError("PER: program list sizes do not match the corpus");
    }
    std::size_t edits = 0;
    std::size_t ref_statements = 0;
    for (std::size_t i = 0; i < predicted_programs.size(); ++i) {
      if (reference_programs[i].statements.empty()) throw MetricError("PER needs non-empty reference programs");
      edits += statement_distance(predicted_programs[i].statements, reference_programs[i].statements);
      ref_statements += reference_programs[i].statements.size();
    }
    report.per = static_cast<double>(edits) / static_cast<double>(ref_statements);
  }
  return report;
}

}  // namespace editgloss
