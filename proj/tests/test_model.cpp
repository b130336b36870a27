#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "editgloss/model.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace editgloss;
using fixtures::param;

namespace {

Sentence mapped(const SharedVocabulary& v, const char* text) {
  Sentence s = tokenize(text);
  v.map(s);
  return s;
}

Program mapped_program(const SharedVocabulary& v, const char* text) {
  Program p = parse_program(text);
  for (auto& s : p.statements) {
    if (s.token) s.token->id = v.id(s.token->surface);
  }
  return p;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("shapes") {
  const SharedVocabulary v = fixtures::letters();
  const GlossModel m(fixtures::tiny_config(static_cast<int>(v.size())));
  const std::vector<int> one{3};
  CHECK(m.encode_sentence(one).rows() == 1);
  CHECK(m.encode_sentence(one).cols() == 8);
  CHECK(m.encode_gloss_history({}).rows() == 0);
  CHECK(m.encode_gloss_history({}).cols() == 8);
  const std::vector<int> three{3, 4, 5};
  CHECK(m.encode_gloss_history(three).rows() == 3);
  const ad::Var h = m.encode_sentence(three);
  CHECK(m.decode_statements({}, h).rows() == 1);
  const Program p = mapped_program(v, "COPY; ADD(a); DEL; SKIP");
  const HeadLogits logits = m.forward(mapped(v, "a b c"), p.statements);
  CHECK(logits.kind.rows() == 4);
  CHECK(logits.kind.cols() == 4);
  CHECK(logits.token.cols() == static_cast<Eigen::Index>(v.size()));
  CHECK(logits.repeat.cols() == 12);
}

TEST_CASE("invalid inputs") {
  const SharedVocabulary v = fixtures::letters();
  const GlossModel m(fixtures::tiny_config(static_cast<int>(v.size())));
  const std::vector<int> bad{99};
  CHECK_THROWS_AS(m.encode_sentence(bad), ModelError);
  const std::vector<int> too_long(40, 3);
  CHECK_THROWS_AS(m.encode_sentence(too_long), ModelError);
  CHECK_THROWS_AS(token_ids(tokenize("a b")), ModelError);
}

TEST_CASE("positional table follows the sinusoid") {
  const ad::Matrix p = sinusoidal_table(5, 6);
  CHECK(p(0, 0) == 0.0);
  CHECK(p(0, 1) == 1.0);
  CHECK(p(3, 2) == doctest::Approx(std::sin(3.0 / std::pow(10000.0, 2.0 / 6.0))));
  CHECK(p(3, 5) == doctest::Approx(std::cos(3.0 / std::pow(10000.0, 4.0 / 6.0))));
}

TEST_CASE("sentence encoder is permutation equivariant without positions") {
  const SharedVocabulary v = fixtures::letters();
  ModelConfig c = fixtures::tiny_config(static_cast<int>(v.size()));
  c.positional_encoding = false;
  const GlossModel m(c);
  const std::vector<int> x{3, 4, 5, 6};
  const std::vector<int> swapped{3, 6, 5, 4};
  const ad::Matrix h = m.encode_sentence(x).value();
  const ad::Matrix hs = m.encode_sentence(swapped).value();
  CHECK((h.row(1) - hs.row(3)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((h.row(3) - hs.row(1)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((h.row(0) - hs.row(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("seeded determinism") {
  const SharedVocabulary v = fixtures::letters();
  const GlossModel a(fixtures::tiny_config(static_cast<int>(v.size()), 7));
  const GlossModel b(fixtures::tiny_config(static_cast<int>(v.size()), 7));
  const GlossModel other(fixtures::tiny_config(static_cast<int>(v.size()), 8));
  REQUIRE(a.parameters().size() == b.parameters().size());
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    CHECK(a.parameters()[i].var.value() == b.parameters()[i].var.value());
  }
  CHECK(a.parameters()[0].var.value() != other.parameters()[0].var.value());
  const std::vector<int> y{4, 3, 5};
  CHECK(a.encode_gloss_history(y).value() == a.encode_gloss_history(y).value());
  CHECK(a.encode_gloss_history(y).value() == b.encode_gloss_history(y).value());
}

TEST_CASE("golden checksums") {
  const SharedVocabulary v = fixtures::letters();
  const GlossModel m(fixtures::tiny_config(static_cast<int>(v.size()), 3));
  const std::vector<int> x{3, 5, 4};
  const ad::Var h = m.encode_sentence(x);
  const Program p = mapped_program(v, "COPY; ADD(b); FOR(2) DEL; SKIP");
  const ad::Var e = m.decode_statements(std::span(p.statements).first(3), h);
  const double hs = fixtures::checksum(h.value());
  const double es = fixtures::checksum(e.value());
  CHECK(hs == doctest::Approx(2.3838665868622102).epsilon(1e-12));
  CHECK(es == doctest::Approx(2.2089049999970269).epsilon(1e-12));
}

TEST_CASE("decoder is causal") {
  const SharedVocabulary v = fixtures::letters();
  const GlossModel m(fixtures::tiny_config(static_cast<int>(v.size())));
  const std::vector<int> x{3, 4, 5, 6, 7, 8};
  const ad::Var h = m.encode_sentence(x);
  const Program p = mapped_program(v, "COPY; DEL; ADD(c); COPY; COPY; DEL; SKIP");
  Program q = p;
  q.statements[4] = Statement::add(Token{"f", v.id("f")}, 3);
  const ad::Matrix ep = m.decode_statements(p.statements, h).value();
  const ad::Matrix eq = m.decode_statements(q.statements, h).value();
  CHECK(ep.topRows(5) == eq.topRows(5));
  CHECK(ep.row(5) != eq.row(5));
}

TEST_CASE("editing causal attention") {
  const SharedVocabulary v = fixtures::letters();
  GlossModel m(fixtures::tiny_config(static_cast<int>(v.size())));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n;
  ad::Matrix e(3, 8), row(1, 8);
  for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = n(rng);
  for (Eigen::Index i = 0; i < row.size(); ++i) row.data()[i] = n(rng);
  const ad::Matrix g = row.replicate(4, 1);
  const std::vector<std::size_t> visible{0, 2, 4};
  const ad::Matrix ctx = m.editing_causal_attention(ad::constant(e), ad::constant(g), visible).value();
  CHECK(ctx.row(0).isZero());
  const ad::Matrix expected = row * param(m, "editing_attn.wv").value() * param(m, "editing_attn.wo").value();
  CHECK((ctx.row(1) - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((ctx.row(2) - expected).cwiseAbs().maxCoeff() < 1e-12);

  const std::vector<std::size_t> too_many{0, 5, 5};
  CHECK_THROWS_AS(m.editing_causal_attention(ad::constant(e), ad::constant(g), too_many), ModelError);
}

TEST_CASE("attention rows see exactly the executed prefix") {
  const Program p = parse_program("COPY; DEL; ADD(w); SKIP");
  CHECK(mask_schedule(p).visible == std::vector<std::size_t>{0, 1, 1, 2});
}

TEST_CASE("feasibility masks and distribution validity") {
  const SharedVocabulary v = fixtures::letters();
  const GlossModel m(fixtures::tiny_config(static_cast<int>(v.size())));
  const Sentence x = mapped(v, "a b c");
  const Program p = mapped_program(v, "COPY; ADD(d); SKIP");
  const StatementDistribution mid = m.predict_step(x, std::span(p.statements).first(1));
  double total = 0.0;
  for (double q : mid.kind) total += q;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  for (const auto& reps : mid.repeat) {
    double s = 0.0;
    for (double q : reps) s += q;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
  }
  double tok = 0.0;
  for (double q : mid.token) tok += q;
  CHECK(tok == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(mid.token[SharedVocabulary::kPad] == 0.0);
  CHECK(mid.token[SharedVocabulary::kBop] == 0.0);
  // two words remain: DEL/COPY repetitions 3 and 4 are masked
  for (ActionKind k : {ActionKind::Del, ActionKind::Copy}) {
    CHECK(mid.repeat_for(k)[2] == 0.0);
    CHECK(mid.repeat_for(k)[3] == 0.0);
    CHECK(mid.repeat_for(k)[0] + mid.repeat_for(k)[1] == doctest::Approx(1.0));
  }
  CHECK(mid.repeat_for(ActionKind::Add)[3] > 0.0);

  const Program all = mapped_program(v, "FOR(3) COPY; SKIP");
  const StatementDistribution end = m.predict_step(x, std::span(all.statements).first(1));
  CHECK(end.kind[static_cast<int>(ActionKind::Del)] == 0.0);
  CHECK(end.kind[static_cast<int>(ActionKind::Copy)] == 0.0);
  CHECK(end.kind[static_cast<int>(ActionKind::Skip)] > 0.0);

  const Statement add_d = Statement::add(Token{"d", v.id("d")}, 2);
  CHECK(mid.probability(add_d) ==
        doctest::Approx(mid.kind[0] * mid.token[static_cast<std::size_t>(v.id("d"))] * mid.repeat[0][1]));
}

TEST_CASE("session matches predict_step and teacher forcing") {
  const SharedVocabulary v = fixtures::letters();
  const GlossModel m(fixtures::tiny_config(static_cast<int>(v.size()), 5));
  const Sentence x = mapped(v, "a b c d");
  const Program p = mapped_program(v, "COPY; ADD(e); DEL; FOR(2) COPY; SKIP");
  const GlossModel::Session session(m, x);
  const HeadLogits logits = m.forward(x, p.statements);
  for (std::size_t t = 0; t < p.size(); ++t) {
    const auto prefix = std::span(p.statements).first(t);
    const auto [out, state] = execute_prefix(prefix, x);
    const StatementDistribution a = session.distribution(prefix, state);
    const StatementDistribution b = m.predict_step(x, prefix);
    const StatementDistribution c = m.distribution_from_logits(logits, static_cast<Eigen::Index>(t), state.remaining(x.size()));
    for (int k = 0; k < kNumActionKinds; ++k) {
      CHECK(a.kind[static_cast<std::size_t>(k)] == doctest::Approx(b.kind[static_cast<std::size_t>(k)]).epsilon(1e-12));
      CHECK(a.kind[static_cast<std::size_t>(k)] == doctest::Approx(c.kind[static_cast<std::size_t>(k)]).epsilon(1e-12));
    }
  }
}

TEST_CASE("sequence NLL equals summed step log probabilities") {
  const SharedVocabulary v = fixtures::letters();
  const GlossModel m(fixtures::tiny_config(static_cast<int>(v.size()), 6));
  const Sentence x = mapped(v, "a b c d");
  const Program p = mapped_program(v, "COPY; ADD(e); DEL; FOR(2) COPY; SKIP");
  double expected = 0.0;
  for (std::size_t t = 0; t < p.size(); ++t) {
    expected -= std::log(m.predict_step(x, std::span(p.statements).first(t)).probability(p.statements[t]));
  }
  CHECK(m.sequence_nll(x, p.statements).scalar() == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("decoding") {
  const SharedVocabulary v = fixtures::letters();
  GlossModel m(fixtures::tiny_config(static_cast<int>(v.size()), 2));
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    Sentence x = oracle::tokens(oracle::random_words(rng, 1 + rng() % 6, 6));
    v.map(x);
    const Transcription g = transcribe(m, x, v);
    DecodeOptions beam1;
    beam1.mode = DecodeMode::Beam;
    beam1.beam_width = 1;
    const Transcription b = transcribe(m, x, v, beam1);
    CHECK(g.program == b.program);
    CHECK(g.glosses == b.glosses);
    CHECK(g.log_prob == b.log_prob);
    CHECK(execute(g.program, x) == g.glosses);
    CHECK(g.program.size() <= step_budget(x.size()));
    DecodeOptions beam3 = beam1;
    beam3.beam_width = 3;
    const Transcription b3 = transcribe(m, x, v, beam3);
    CHECK(execute(b3.program, x) == b3.glosses);
  }

  ad::Matrix bias = ad::Matrix::Zero(1, 4);
  bias(0, 3) = 1000.0;
  fixtures::pin_kind_head(m, bias);
  const Transcription skip = transcribe(m, mapped(v, "a b c"), v);
  CHECK(print_program(skip.program) == "SKIP");
  CHECK(skip.glosses.empty());
  CHECK_FALSE(skip.truncated);
}

TEST_CASE("step budget forces SKIP") {
  const SharedVocabulary v = fixtures::letters();
  GlossModel m(fixtures::tiny_config(static_cast<int>(v.size())));
  ad::Matrix bias = ad::Matrix::Zero(1, 4);
  bias(0, 0) = 1000.0;  // always ADD
  fixtures::pin_kind_head(m, bias);
  const Sentence x = mapped(v, "a");
  const Transcription t = transcribe(m, x, v);
  CHECK(t.truncated);
  CHECK(t.program.size() == step_budget(1));
  CHECK(t.program.statements.back().kind == ActionKind::Skip);
}

TEST_CASE("checkpoint round trip") {
  const SharedVocabulary v = fixtures::letters();
  const GlossModel m(fixtures::tiny_config(static_cast<int>(v.size()), 11));
  const auto dir = std::filesystem::temp_directory_path() / "editgloss_tests";
  std::filesystem::create_directories(dir);
  m.save(dir / "m.ckpt", v);
  const auto [loaded, vocab] = GlossModel::load(dir / "m.ckpt");
  CHECK(vocab == v);
  REQUIRE(loaded.parameters().size() == m.parameters().size());
  for (std::size_t i = 0; i < m.parameters().size(); ++i) {
    CHECK(loaded.parameters()[i].name == m.parameters()[i].name);
    CHECK(loaded.parameters()[i].var.value() == m.parameters()[i].var.value());
  }
  CHECK(loaded.config().d_model == 8);
  {
    std::ofstream bad(dir / "bad.ckpt", std::ios::binary);
    bad << "not a checkpoint";
  }
  CHECK_THROWS_AS(GlossModel::load(dir / "bad.ckpt"), ModelError);
}

TEST_CASE("embedding loader") {
  const SharedVocabulary v = fixtures::letters();
  GlossModel m(fixtures::tiny_config(static_cast<int>(v.size())));
  const auto path = std::filesystem::temp_directory_path() / "editgloss_tests" / "emb.txt";
  std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream out(path);
    out << "a 1 2 3 4 5 6 7 8\nzzz 0 0 0 0 0 0 0 0\n";
  }
  CHECK(m.load_embeddings(path, v) == 1);
  CHECK(m.token_table().value()(v.id("a"), 7) == 8.0);
  {
    std::ofstream out(path);
    out << "a 1 2 3\n";
  }
  CHECK_THROWS_AS(m.load_embeddings(path, v), ModelError);
}

}
