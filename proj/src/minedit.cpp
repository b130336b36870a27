#include "editgloss/minedit.hpp"

#include <algorithm>
#include <cstdint>

namespace editgloss {

EditDpTable::EditDpTable(const Sentence& x, const GlossSequence& y)
    : m_(x.size()), n_(y.size()), cells_((x.size() + 1) * (y.size() + 1)) {
  auto at = [this](std::size_t i, std::size_t j) -> std::size_t& { return cells_[i * (n_ + 1) + j]; };
  for (std::size_t i = 0; i <= m_; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= n_; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= m_; ++i) {
    for (std::size_t j = 1; j <= n_; ++j) {
      at(i, j) = x[i - 1] == y[j - 1] ? at(i - 1, j - 1) : std::min(at(i - 1, j), at(i, j - 1)) + 1;
    }
  }
}

std::size_t min_edit_distance(const Sentence& x, const GlossSequence& y) {
  return EditDpTable(x, y).cost(x.size(), y.size());
}

namespace {

bool same_action(const Statement& a, const Statement& b) {
  return a.kind == b.kind && a.token == b.token;
}

}  // namespace

Program minimal_program(const Sentence& x, const GlossSequence& y, const MinEditOptions& options) {
  const EditDpTable table(x, y);
  // Backtrace from (m, n). At equal cost a match is taken first, then DEL,
  // then ADD; reversed, this puts ADD ahead of DEL in program order.
  std::vector<Statement> reversed;
  std::size_t i = x.size();
  std::size_t j = y.size();
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && x[i - 1] == y[j - 1]) {
      reversed.push_back(Statement::copy());
      --i;
      --j;
    } else if (i > 0 && table.cost(i, j) == table.cost(i - 1, j) + 1) {
      reversed.push_back(Statement::del());
      --i;
    } else {
      reversed.push_back(Statement::add(y[j - 1]));
      --j;
    }
  }
  std::vector<Statement> actions(reversed.rbegin(), reversed.rend());
  while (!actions.empty() && actions.back().kind == ActionKind::Del) actions.pop_back();

  const int max_repeat = std::max(1, options.max_repeat);
  Program program;
  for (std::size_t a = 0; a < actions.size();) {
    std::size_t b = a + 1;
    const bool foldable = actions[a].kind != ActionKind::Copy || options.fold_copies;
    while (foldable && b < actions.size() && same_action(actions[a], actions[b])) ++b;
    auto run = static_cast<int>(b - a);
    while (run > 0) {
      Statement s = actions[a];
      s.repetitions = std::min(run, max_repeat);
      run -= s.repetitions;
      program.statements.push_back(std::move(s));
    }
    a = b;
  }
  program.statements.push_back(Statement::skip());
  return program;
}

std::size_t edit_action_count(const Program& program, std::size_t sentence_len) {
  std::size_t count = 0;
  std::size_t consumed = 0;
  for (const Statement& s : program.statements) {
    if (s.kind == ActionKind::Add || s.kind == ActionKind::Del) count += static_cast<std::size_t>(s.repetitions);
    consumed += consumed_words(s);
  }
  return count + (sentence_len > consumed ? sentence_len - consumed : 0);
}

std::size_t brute_force_oracle(const Sentence& x, const GlossSequence& y) {
  if (x.size() > kBruteForceLimit || y.size() > kBruteForceLimit) {
    throw InstanceTooLarge("brute_force_oracle supports m, n <= 6");
  }
  const std::size_t m = x.size();
  const std::size_t n = y.size();
  std::size_t best_copies = 0;
  // Every choice of copied sentence words is feasible iff those words, in
  // order, embed into y as a subsequence; the rest of x is deleted and the
  // rest of y added.
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    std::size_t copies = 0;
    std::size_t pos = 0;
    bool embeds = true;
    for (std::size_t i = 0; i < m && embeds; ++i) {
      if ((mask & (1u << i)) == 0) continue;
      while (pos < n && !(y[pos] == x[i])) ++pos;
      if (pos == n) {
        embeds = false;
      } else {
        ++pos;
        ++copies;
      }
    }
    if (embeds) best_copies = std::max(best_copies, copies);
  }
  return m + n - 2 * best_copies;
}

}  // namespace editgloss
