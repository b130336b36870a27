#include "editgloss/executor.hpp"

#include <sstream>

namespace editgloss {

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::string word;
  std::istringstream in{std::string(text)};
  while (in >> word) out.push_back(Token{word, kUnmappedId});
  return out;
}

std::string join(const std::vector<Token>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i].surface;
  }
  return out;
}

std::size_t emitted_glosses(const Statement& s) {
  return (s.kind == ActionKind::Add || s.kind == ActionKind::Copy) ? static_cast<std::size_t>(s.repetitions) : 0;
}

std::size_t consumed_words(const Statement& s) {
  return (s.kind == ActionKind::Del || s.kind == ActionKind::Copy) ? static_cast<std::size_t>(s.repetitions) : 0;
}

void apply(ExecutionState& state, const Statement& s, const Sentence& x) {
  if (state.terminated) throw ExecutionError("statement " + print_statement(s) + " after SKIP");
  if (s.repetitions < 1) throw ExecutionError("repetition count must be >= 1");
  const auto r = static_cast<std::size_t>(s.repetitions);
  switch (s.kind) {
    case ActionKind::Add:
      if (!s.token) throw ExecutionError("ADD without token");
      state.output.insert(state.output.end(), r, *s.token);
      break;
    case ActionKind::Del:
    case ActionKind::Copy:
      if (state.pointer + r - 1 > x.size()) {
        throw ExecutionError(print_statement(s) + " at pointer " + std::to_string(state.pointer) +
                             " runs past sentence length " + std::to_string(x.size()));
      }
      if (s.kind == ActionKind::Copy) {
        const auto first = x.begin() + static_cast<std::ptrdiff_t>(state.pointer - 1);
        state.output.insert(state.output.end(), first, first + static_cast<std::ptrdiff_t>(r));
      }
      state.pointer += r;
      break;
    case ActionKind::Skip:
      state.terminated = true;
      break;
  }
}

ExecutionState step(const ExecutionState& state, const Statement& s, const Sentence& x) {
  ExecutionState next = state;
  apply(next, s, x);
  return next;
}

GlossSequence execute(const Program& program, const Sentence& x) {
  return execute_prefix(std::span(program.statements), x).first;
}

std::pair<GlossSequence, ExecutionState> execute_prefix(std::span<const Statement> prefix,
                                                        const Sentence& x) {
  ExecutionState state;
  for (const Statement& s : prefix) apply(state, s, x);
  return {state.output, std::move(state)};
}

MaskSchedule mask_schedule(std::span<const Statement> statements) {
  MaskSchedule schedule;
  schedule.visible.reserve(statements.size());
  std::size_t j = 0;
  for (const Statement& s : statements) {
    schedule.visible.push_back(j);
    j += emitted_glosses(s);
  }
  return schedule;
}

}  // namespace editgloss
