// Independent reference implementations used only by the tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "editgloss/dsl.hpp"
#include "editgloss/executor.hpp"

namespace oracle {

inline const char* const kWeatherSentence =
    "montag und dienstag wechselhaft hier und da zeigt sich aber auch die sonne .";
inline const char* const kWeatherPrediction =
    "COPY; DEL; COPY; ADD(wechselhaft); ADD(mal); FOR(5) DEL; FOR(2) DEL; COPY; COPY; COPY; SKIP";
inline const char* const kWeatherReference =
    "COPY; DEL; COPY; COPY; ADD(mal); FOR(5) DEL; DEL; COPY; DEL; COPY; SKIP";
inline const char* const kWeatherPredictionGlosses = "montag dienstag wechselhaft mal auch die sonne";
inline const char* const kWeatherReferenceGlosses = "montag dienstag wechselhaft mal auch sonne";

inline std::vector<std::string> words(const std::vector<editgloss::Token>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

inline std::vector<editgloss::Token> tokens(const std::vector<std::string>& words) {
  std::vector<editgloss::Token> out;
  for (const auto& w : words) out.push_back(editgloss::Token{w, editgloss::kUnmappedId});
  return out;
}

// Levenshtein distance with substitutions over any comparable elements.
template <typename T>
std::size_t levenshtein(const std::vector<T>& a, const std::vector<T>& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == 0) return j;
    if (j == 0) return i;
    auto it = memo.find({i, j});
    if (it != memo.end()) return it->second;
    std::size_t best = go(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1);
    best = std::min({best, go(i - 1, j) + 1, go(i, j - 1) + 1});
    memo[{i, j}] = best;
    return best;
  };
  return go(a.size(), b.size());
}

inline std::size_t lcs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size() || j == b.size()) return 0;
    auto it = memo.find({i, j});
    if (it != memo.end()) return it->second;
    const std::size_t r = a[i] == b[j] ? 1 + go(i + 1, j + 1) : std::max(go(i + 1, j), go(i, j + 1));
    memo[{i, j}] = r;
    return r;
  };
  return go(0, 0);
}

inline std::map<std::string, int> ngram_counts(const std::vector<std::string>& s, int n) {
  std::map<std::string, int> counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= s.size(); ++i) {
    std::string key;
    for (int k = 0; k < n; ++k) key += s[i + static_cast<std::size_t>(k)] + '\x1f';
    ++counts[key];
  }
  return counts;
}

// (matched, total) clipped n-gram counts of one pair.
inline std::pair<double, double> clipped(const std::vector<std::string>& cand, const std::vector<std::string>& ref,
                                         int n) {
  const auto c = ngram_counts(cand, n);
  const auto r = ngram_counts(ref, n);
  double matched = 0;
  double total = 0;
  for (const auto& [g, count] : c) {
    total += count;
    auto it = r.find(g);
    if (it != r.end()) matched += std::min(count, it->second);
  }
  return {matched, total};
}

// Corpus BLEU-N with uniform weights; an order with no candidate and no
// reference n-grams counts as precision 1.
inline double corpus_bleu(const std::vector<std::vector<std::string>>& cands,
                          const std::vector<std::vector<std::string>>& refs, int max_n) {
  double c_len = 0;
  double r_len = 0;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    c_len += static_cast<double>(cands[i].size());
    r_len += static_cast<double>(refs[i].size());
  }
  double log_sum = 0;
  for (int n = 1; n <= max_n; ++n) {
    double matched = 0;
    double total = 0;
    double ref_total = 0;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      const auto [m, t] = clipped(cands[i], refs[i], n);
      matched += m;
      total += t;
      ref_total += std::max(0.0, static_cast<double>(refs[i].size()) - n + 1);
    }
    if (total == 0 && ref_total == 0) continue;
    if (matched == 0) return 0.0;
    log_sum += std::log(matched / total);
  }
  double bp = 1.0;
  if (c_len == 0 && r_len > 0) return 0.0;
  if (c_len < r_len) bp = std::exp(1.0 - r_len / c_len);
  return bp * std::exp(log_sum / max_n);
}

inline double rouge_l(const std::vector<std::string>& cand, const std::vector<std::string>& ref) {
  const double l = static_cast<double>(lcs(cand, ref));
  if (l == 0) return 0.0;
  const double p = l / static_cast<double>(cand.size());
  const double r = l / static_cast<double>(ref.size());
  return 2 * p * r / (p + r);
}

// Runs a program after rewriting FOR(r) s into r copies of s.
inline std::vector<std::string> unrolled_execute(const editgloss::Program& p, const std::vector<std::string>& x) {
  std::vector<editgloss::Statement> flat;
  for (const auto& s : p.statements) {
    for (int i = 0; i < s.repetitions; ++i) {
      editgloss::Statement one = s;
      one.repetitions = 1;
      flat.push_back(one);
    }
  }
  std::vector<std::string> out;
  std::size_t k = 0;
  for (const auto& s : flat) {
    switch (s.kind) {
      case editgloss::ActionKind::Add: out.push_back(s.token->surface); break;
      case editgloss::ActionKind::Del: ++k; break;
      case editgloss::ActionKind::Copy: out.push_back(x.at(k++)); break;
      case editgloss::ActionKind::Skip: return out;
    }
  }
  return out;
}

// A random program that is valid for a sentence of length m.
inline editgloss::Program random_program(std::mt19937_64& rng, std::size_t m, int max_repeat = 5,
                                         std::size_t max_statements = 12) {
  editgloss::Program p;
  std::size_t remaining = m;
  std::uniform_int_distribution<int> kind(0, 2);
  const std::size_t len = std::uniform_int_distribution<std::size_t>(0, max_statements)(rng);
  for (std::size_t i = 0; i < len; ++i) {
    int k = kind(rng);
    if (remaining == 0) k = 0;
    const int cap = k == 0 ? max_repeat : std::min<int>(max_repeat, static_cast<int>(remaining));
    const int r = std::uniform_int_distribution<int>(1, cap)(rng);
    if (k == 0) {
      p.statements.push_back(editgloss::Statement::add("g" + std::to_string(rng() % 4), r));
    } else {
      p.statements.push_back(k == 1 ? editgloss::Statement::del(r) : editgloss::Statement::copy(r));
      remaining -= static_cast<std::size_t>(r);
    }
  }
  p.statements.push_back(editgloss::Statement::skip());
  return p;
}

inline std::vector<std::string> random_words(std::mt19937_64& rng, std::size_t len, int alphabet) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < len; ++i) out.push_back(std::string(1, static_cast<char>('a' + rng() % alphabet)));
  return out;
}

}  // namespace oracle
