#include <doctest.h>

#include <random>

#include "editgloss/dsl.hpp"
#include "oracles.hpp"

using namespace editgloss;

TEST_SUITE("dsl") {

TEST_CASE("parse the weather example prediction program") {
  const Program p = parse_program(oracle::kWeatherPrediction);
  REQUIRE(p.size() == 11);
  CHECK(p.statements[0] == Statement::copy());
  CHECK(p.statements[1] == Statement::del());
  CHECK(p.statements[3] == Statement::add("wechselhaft"));
  CHECK(p.statements[4] == Statement::add("mal"));
  CHECK(p.statements[5] == Statement::del(5));
  CHECK(p.statements[6] == Statement::del(2));
  CHECK(p.statements[10] == Statement::skip());
}

TEST_CASE("smallest program") {
  const Program p = parse_program("SKIP");
  REQUIRE(p.size() == 1);
  CHECK(p.statements[0].kind == ActionKind::Skip);
  CHECK(print_program(p) == "SKIP");
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse_program("FOR(0) DEL; SKIP"), DslError);
  CHECK_THROWS_AS(parse_program("COPY"), DslError);  // no SKIP
  CHECK_THROWS_AS(parse_program("SKIP; COPY; SKIP"), DslError);
  CHECK_THROWS_AS(parse_program("FOR(2) SKIP"), DslError);
  CHECK_THROWS_AS(parse_program("FOR(33) COPY; SKIP"), DslError);
  CHECK_THROWS_AS(parse_program("ADD(); SKIP"), DslError);
  CHECK_THROWS_AS(parse_program("MOVE; SKIP"), DslError);
  CHECK_THROWS_AS(parse_program(""), DslError);
  CHECK_THROWS_AS(parse_program("FOR(6) COPY; SKIP", 5), DslError);
  try {
    parse_program("COPY; FOR(x) DEL; SKIP");
    FAIL("expected an error");
  } catch (const DslError& e) {
    CHECK(e.position() >= 6);
  }
}

TEST_CASE("separators and whitespace") {
  CHECK(parse_program("COPY\nDEL\nSKIP") == parse_program("COPY; DEL; SKIP"));
  CHECK(parse_program("  COPY ;DEL;  SKIP  ") == parse_program("COPY; DEL; SKIP"));
  CHECK(parse_program("ADD(a;b); SKIP").statements[0].token->surface == "a;b");
}

TEST_CASE("canonical printing") {
  Program p;
  p.statements = {Statement::copy(3), Statement::skip()};
  CHECK(print_program(p) == "FOR(3) COPY; SKIP");
  CHECK(print_program(parse_program(oracle::kWeatherReference)) == oracle::kWeatherReference);
  CHECK(print_statement(Statement::add("mal", 2)) == "FOR(2) ADD(mal)");
}

TEST_CASE("validate") {
  CHECK(validate(parse_program("COPY; SKIP"), 1).ok);
  const ValidationReport bad = validate(parse_program("COPY; COPY; SKIP"), 1);
  CHECK_FALSE(bad.ok);
  CHECK(bad.statement_index == 2);
  CHECK(validate(parse_program(oracle::kWeatherPrediction), 14).ok);
  CHECK_FALSE(validate(parse_program(oracle::kWeatherPrediction), 12).ok);
  CHECK(validate(parse_program("FOR(3) ADD(x); SKIP"), 0).ok);
}

TEST_CASE("statement invariants") {
  Statement s = Statement::copy();
  s.token = Token{"x", kUnmappedId};
  CHECK_THROWS_AS(check_statement(s), DslError);
  Statement a = Statement::add("x");
  a.token.reset();
  CHECK_THROWS_AS(check_statement(a), DslError);
  Statement r = Statement::skip();
  r.repetitions = 2;
  CHECK_THROWS_AS(check_statement(r), DslError);
}

TEST_CASE("print/parse round trip on random programs") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 500; ++i) {
    const Program p = oracle::random_program(rng, rng() % 10);
    const std::string text = print_program(p);
    CHECK(parse_program(text) == p);
    CHECK(print_program(parse_program(text)) == text);
  }
}

}
