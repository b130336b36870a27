#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace editgloss {

/// Largest repetition count a FOR statement may carry unless configured otherwise.
inline constexpr int kDefaultMaxRepeat = 32;

/// Id carried by tokens that have not been mapped through a vocabulary.
inline constexpr std::int32_t kUnmappedId = -1;

/// A single whitespace-free word. Equality compares surfaces only.
struct Token {
  std::string surface;
  std::int32_t id = kUnmappedId;

  friend bool operator==(const Token& a, const Token& b) { return a.surface == b.surface; }
};

enum class ActionKind : std::uint8_t { Add = 0, Del = 1, Copy = 2, Skip = 3 };

inline constexpr int kNumActionKinds = 4;

std::string_view to_string(ActionKind kind);

/// One editing statement: an atomic action optionally wrapped in FOR(r).
/// `repetitions == 1` means no loop.
struct Statement {
  ActionKind kind = ActionKind::Skip;
  std::optional<Token> token;  // present iff kind == Add
  int repetitions = 1;

  static Statement add(std::string word, int r = 1);
  static Statement add(Token token, int r = 1);
  static Statement del(int r = 1) { return {ActionKind::Del, std::nullopt, r}; }
  static Statement copy(int r = 1) { return {ActionKind::Copy, std::nullopt, r}; }
  static Statement skip() { return {ActionKind::Skip, std::nullopt, 1}; }

  friend bool operator==(const Statement& a, const Statement& b) = default;
};

struct Program {
  std::vector<Statement> statements;

  std::size_t size() const { return statements.size(); }
  friend bool operator==(const Program& a, const Program& b) = default;
};

/// Thrown for malformed program text or programs that break the structural
/// invariants. `position` is a byte offset into the parsed text (0 for
/// errors raised on an already-built AST).
class DslError : public std::runtime_error {
 public:
  DslError(std::size_t position, const std::string& message);
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Parses the concrete syntax: statements separated by ';' or newline,
/// atomics `ADD(word)`, `DEL`, `COPY`, `SKIP`, loops `FOR(r) atomic`.
/// Blank statements are ignored. The result satisfies check_program().
Program parse_program(std::string_view text, int max_repeat = kDefaultMaxRepeat);

/// Statements without the SKIP-terminated program requirement (for prefixes).
std::vector<Statement> parse_statements(std::string_view text, int max_repeat = kDefaultMaxRepeat);

/// Canonical form: statements joined by "; ".
std::string print_program(const Program& program);
std::string print_statement(const Statement& statement);

/// Throws DslError if `program` is empty, SKIP is missing or not last,
/// a token is present on a non-ADD statement, or a repetition is out of range.
void check_program(const Program& program, int max_repeat = kDefaultMaxRepeat);
void check_statement(const Statement& statement, int max_repeat = kDefaultMaxRepeat);

struct ValidationReport {
  bool ok = true;
  std::size_t statement_index = 0;  // 1-based index of the first offender
  std::string message;

  explicit operator bool() const { return ok; }
};

/// Static bound check: execution never moves the pointer past the sentence.
ValidationReport validate(const Program& program, std::size_t sentence_len);

}  // namespace editgloss
