#include "editgloss/dsl.hpp"

#include <cctype>
#include <charconv>
#include <sstream>

namespace editgloss {

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::Add: return "ADD";
    case ActionKind::Del: return "DEL";
    case ActionKind::Copy: return "COPY";
    case ActionKind::Skip: return "SKIP";
  }
  return "?";
}

Statement Statement::add(std::string word, int r) {
  return {ActionKind::Add, Token{std::move(word), kUnmappedId}, r};
}

Statement Statement::add(Token token, int r) { return {ActionKind::Add, std::move(token), r}; }

DslError::DslError(std::size_t position, const std::string& message)
    : std::runtime_error("at offset " + std::to_string(position) + ": " + message),
      position_(position) {}

namespace {

bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\r'; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

class Parser {
 public:
  Parser(std::string_view text, int max_repeat) : text_(text), max_repeat_(max_repeat) {}

  std::vector<Statement> statements() {
    std::vector<Statement> out;
    while (true) {
      skip_blanks();
      if (at_end()) break;
      if (at_separator()) {
        ++pos_;
        continue;
      }
      out.push_back(statement());
      skip_blanks();
      if (!at_end() && !at_separator()) fail("expected ';' or newline after statement");
    }
    return out;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  bool at_separator() const { return !at_end() && (text_[pos_] == ';' || text_[pos_] == '\n'); }
  void skip_blanks() {
    while (!at_end() && is_blank(text_[pos_])) ++pos_;
  }

  [[noreturn]] void fail(const std::string& message) const { throw DslError(pos_, message); }

  bool consume(std::string_view keyword) {
    if (text_.substr(pos_, keyword.size()) != keyword) return false;
    pos_ += keyword.size();
    return true;
  }

  void expect(char c) {
    if (at_end() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  Statement statement() {
    if (consume("FOR")) {
      skip_blanks();
      expect('(');
      skip_blanks();
      const std::size_t start = pos_;
      int value = 0;
      const char* first = text_.data() + pos_;
      const char* last = text_.data() + text_.size();
      auto [ptr, ec] = std::from_chars(first, last, value);
      if (ec == std::errc::result_out_of_range) fail("repetition count out of range");
      if (ec != std::errc() || ptr == first) fail("expected repetition count");
      pos_ += static_cast<std::size_t>(ptr - first);
      skip_blanks();
      expect(')');
      if (at_end() || !is_blank(text_[pos_])) fail("expected whitespace after FOR(r)");
      skip_blanks();
      Statement s = atomic();
      if (value < 1) throw DslError(start, "repetition count must be >= 1");
      if (value > max_repeat_) {
        throw DslError(start, "repetition count exceeds maximum " + std::to_string(max_repeat_));
      }
      if (s.kind == ActionKind::Skip) throw DslError(start, "SKIP cannot be repeated");
      s.repetitions = value;
      return s;
    }
    return atomic();
  }

  Statement atomic() {
    if (consume("ADD")) {
      expect('(');
      const std::size_t start = pos_;
      // The word ends at the ')' that closes the statement, so words may
      // themselves contain parentheses or semicolons.
      while (!at_end() && !is_space(text_[pos_])) {
        if (text_[pos_] == ')' && closes_statement(pos_ + 1)) {
          if (pos_ == start) fail("expected word inside ADD()");
          std::string word(text_.substr(start, pos_ - start));
          ++pos_;
          return Statement::add(std::move(word));
        }
        ++pos_;
      }
      fail("expected ')' closing ADD(");
    }
    Statement s;
    if (consume("DEL")) {
      s = Statement::del();
    } else if (consume("COPY")) {
      s = Statement::copy();
    } else if (consume("SKIP")) {
      s = Statement::skip();
    } else {
      fail("expected ADD(word), DEL, COPY, SKIP or FOR(r)");
    }
    if (!at_end() && !is_blank(text_[pos_]) && !at_separator()) fail("unexpected character after keyword");
    return s;
  }

  bool closes_statement(std::size_t at) const {
    while (at < text_.size() && is_blank(text_[at])) ++at;
    return at >= text_.size() || text_[at] == ';' || text_[at] == '\n';
  }

  std::string_view text_;
  int max_repeat_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<Statement> parse_statements(std::string_view text, int max_repeat) {
  return Parser(text, max_repeat).statements();
}

Program parse_program(std::string_view text, int max_repeat) {
  Program program{parse_statements(text, max_repeat)};
  try {
    check_program(program, max_repeat);
  } catch (const DslError& e) {
    throw DslError(text.size(), e.what());
  }
  return program;
}

std::string print_statement(const Statement& s) {
  std::string out;
  if (s.repetitions != 1) out = "FOR(" + std::to_string(s.repetitions) + ") ";
  out += to_string(s.kind);
  if (s.kind == ActionKind::Add && s.token) out += "(" + s.token->surface + ")";
  return out;
}

std::string print_program(const Program& program) {
  std::string out;
  for (std::size_t i = 0; i < program.statements.size(); ++i) {
    if (i > 0) out += "; ";
    out += print_statement(program.statements[i]);
  }
  return out;
}

void check_statement(const Statement& s, int max_repeat) {
  if (s.token.has_value() != (s.kind == ActionKind::Add)) {
    throw DslError(0, "token must be present exactly on ADD statements");
  }
  if (s.token) {
    const std::string& w = s.token->surface;
    if (w.empty()) throw DslError(0, "ADD token is empty");
    for (char c : w) {
      if (is_space(c)) throw DslError(0, "ADD token contains whitespace");
    }
  }
  if (s.repetitions < 1 || s.repetitions > max_repeat) {
    throw DslError(0, "repetition count " + std::to_string(s.repetitions) + " outside [1, " +
                          std::to_string(max_repeat) + "]");
  }
  if (s.kind == ActionKind::Skip && s.repetitions != 1) throw DslError(0, "SKIP cannot be repeated");
}

void check_program(const Program& program, int max_repeat) {
  if (program.statements.empty()) throw DslError(0, "program is empty");
  for (std::size_t i = 0; i < program.statements.size(); ++i) {
    const Statement& s = program.statements[i];
    try {
      check_statement(s, max_repeat);
    } catch (const DslError& e) {
      throw DslError(0, "statement " + std::to_string(i + 1) + ": " + e.what());
    }
    const bool last = i + 1 == program.statements.size();
    if (s.kind == ActionKind::Skip && !last) {
      throw DslError(0, "statement " + std::to_string(i + 1) + ": SKIP must be the final statement");
    }
    if (last && s.kind != ActionKind::Skip) throw DslError(0, "program must end with SKIP");
  }
}

ValidationReport validate(const Program& program, std::size_t sentence_len) {
  std::size_t advanced = 0;
  for (std::size_t i = 0; i < program.statements.size(); ++i) {
    const Statement& s = program.statements[i];
    if (s.kind != ActionKind::Del && s.kind != ActionKind::Copy) continue;
    advanced += static_cast<std::size_t>(s.repetitions);
    if (advanced > sentence_len) {
      std::ostringstream msg;
      msg << "statement " << (i + 1) << " (" << print_statement(s) << ") moves the pointer to "
          << (advanced + 1) << " past sentence length " << sentence_len;
      return {false, i + 1, msg.str()};
    }
  }
  return {};
}

}  // namespace editgloss
