#include <algorithm>
#include <cmath>
#include <limits>

#include "editgloss/model.hpp"

namespace editgloss {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

// Indices of the `count` largest entries, ties broken by lower index.
std::vector<std::size_t> top_indices(const std::vector<double>& probs, std::size_t count) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) order.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  if (order.size() > count) order.resize(count);
  return order;
}

Statement make_statement(ActionKind kind, int token_id, int repetitions, const SharedVocabulary& vocabulary) {
  switch (kind) {
    case ActionKind::Add:
      return Statement::add(Token{vocabulary.surface(token_id), token_id}, repetitions);
    case ActionKind::Del: return Statement::del(repetitions);
    case ActionKind::Copy: return Statement::copy(repetitions);
    case ActionKind::Skip: break;
  }
  return Statement::skip();
}

struct Candidate {
  Statement statement;
  double log_prob = 0.0;  // log P(statement | history)
};

// Candidates in a fixed generation order: kinds ascending, then tokens and
// repetitions by descending probability (lower index first on ties).
std::vector<Candidate> expand(const StatementDistribution& dist, std::size_t width, const SharedVocabulary& vocabulary) {
  std::vector<Candidate> out;
  for (int k = 0; k < kNumActionKinds; ++k) {
    const auto kind = static_cast<ActionKind>(k);
    const double lk = safe_log(dist.kind[static_cast<std::size_t>(k)]);
    if (lk == kNegInf) continue;
    if (kind == ActionKind::Skip) {
      out.push_back({Statement::skip(), lk});
      continue;
    }
    const auto& reps = dist.repeat_for(kind);
    const auto best_reps = top_indices(reps, width);
    if (kind == ActionKind::Add) {
      for (std::size_t tok : top_indices(dist.token, width)) {
        for (std::size_t r : best_reps) {
          out.push_back({make_statement(kind, static_cast<int>(tok), static_cast<int>(r + 1), vocabulary),
                         lk + std::log(dist.token[tok]) + std::log(reps[r])});
        }
      }
    } else {
      for (std::size_t r : best_reps) {
        out.push_back({make_statement(kind, 0, static_cast<int>(r + 1), vocabulary), lk + std::log(reps[r])});
      }
    }
  }
  return out;
}

Candidate best_statement(const StatementDistribution& dist, const SharedVocabulary& vocabulary) {
  Candidate best{Statement::skip(), kNegInf};
  bool found = false;
  for (int k = 0; k < kNumActionKinds; ++k) {
    const auto kind = static_cast<ActionKind>(k);
    const double lk = safe_log(dist.kind[static_cast<std::size_t>(k)]);
    if (lk == kNegInf) continue;
    Candidate c;
    if (kind == ActionKind::Skip) {
      c = {Statement::skip(), lk};
    } else {
      const auto& reps = dist.repeat_for(kind);
      const std::size_t r = static_cast<std::size_t>(std::max_element(reps.begin(), reps.end()) - reps.begin());
      if (kind == ActionKind::Add) {
        const std::size_t tok =
            static_cast<std::size_t>(std::max_element(dist.token.begin(), dist.token.end()) - dist.token.begin());
        c = {make_statement(kind, static_cast<int>(tok), static_cast<int>(r + 1), vocabulary),
             lk + std::log(dist.token[tok]) + std::log(reps[r])};
      } else {
        c = {make_statement(kind, 0, static_cast<int>(r + 1), vocabulary), lk + std::log(reps[r])};
      }
    }
    if (!found || c.log_prob > best.log_prob) {
      best = std::move(c);
      found = true;
    }
  }
  return best;
}

Transcription greedy(const GlossModel& model, const Sentence& x, const SharedVocabulary& vocabulary) {
  const GlossModel::Session session(model, x);
  Transcription out;
  ExecutionState state;
  const std::size_t budget = step_budget(x.size());
  while (!state.terminated) {
    if (out.program.statements.size() + 1 >= budget) {
      out.program.statements.push_back(Statement::skip());
      out.truncated = true;
      apply(state, Statement::skip(), x);
      break;
    }
    const Candidate c = best_statement(session.distribution(out.program.statements, state), vocabulary);
    apply(state, c.statement, x);
    out.log_prob += c.log_prob;
    out.program.statements.push_back(c.statement);
  }
  out.glosses = state.output;
  return out;
}

struct Beam {
  std::vector<Statement> statements;
  ExecutionState state;
  double log_prob = 0.0;
  bool truncated = false;
};

Transcription beam_search(const GlossModel& model, const Sentence& x, const SharedVocabulary& vocabulary,
                          std::size_t width) {
  const GlossModel::Session session(model, x);
  const std::size_t budget = step_budget(x.size());
  std::vector<Beam> beams(1);
  while (true) {
    const bool all_done = std::all_of(beams.begin(), beams.end(), [](const Beam& b) { return b.state.terminated; });
    if (all_done) break;
    std::vector<Beam> next;
    for (const Beam& beam : beams) {
      if (beam.state.terminated) {
        next.push_back(beam);
        continue;
      }
      if (beam.statements.size() + 1 >= budget) {
        Beam forced = beam;
        forced.statements.push_back(Statement::skip());
        apply(forced.state, Statement::skip(), x);
        forced.truncated = true;
        next.push_back(std::move(forced));
        continue;
      }
      for (Candidate& c : expand(session.distribution(beam.statements, beam.state), width, vocabulary)) {
        Beam b = beam;
        apply(b.state, c.statement, x);
        b.statements.push_back(std::move(c.statement));
        b.log_prob += c.log_prob;
        next.push_back(std::move(b));
      }
    }
    std::stable_sort(next.begin(), next.end(), [](const Beam& a, const Beam& b) { return a.log_prob > b.log_prob; });
    if (next.size() > width) next.resize(width);
    beams = std::move(next);
  }
  const Beam& best = beams.front();
  Transcription out;
  out.program.statements = best.statements;
  out.glosses = best.state.output;
  out.truncated = best.truncated;
  out.log_prob = best.log_prob;
  return out;
}

std::size_t draw_index(const std::vector<double>& probs, std::mt19937_64& rng) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cumulative += probs[i];
    last_positive = i;
    if (u < cumulative) return i;
  }
  return last_positive;
}

}  // namespace

Transcription transcribe(const GlossModel& model, const Sentence& x, const SharedVocabulary& vocabulary,
                         const DecodeOptions& options) {
  if (options.mode == DecodeMode::Beam) {
    if (options.beam_width < 1) throw ModelError("beam width must be >= 1");
    return beam_search(model, x, vocabulary, static_cast<std::size_t>(options.beam_width));
  }
  return greedy(model, x, vocabulary);
}

SampledProgram sample_program(const GlossModel& model, const Sentence& x, const SharedVocabulary& vocabulary,
                              std::mt19937_64& rng) {
  const GlossModel::Session session(model, x);
  SampledProgram out;
  ExecutionState state;
  const std::size_t budget = step_budget(x.size());
  while (!state.terminated) {
    if (out.program.statements.size() + 1 >= budget) {
      out.program.statements.push_back(Statement::skip());
      apply(state, Statement::skip(), x);
      out.truncated = true;
      break;
    }
    const StatementDistribution dist = session.distribution(out.program.statements, state);
    std::vector<double> kinds(dist.kind.begin(), dist.kind.end());
    const auto kind = static_cast<ActionKind>(draw_index(kinds, rng));
    int token = 0;
    int reps = 1;
    if (kind == ActionKind::Add) token = static_cast<int>(draw_index(dist.token, rng));
    if (kind != ActionKind::Skip) reps = static_cast<int>(draw_index(dist.repeat_for(kind), rng)) + 1;
    Statement s = make_statement(kind, token, reps, vocabulary);
    out.step_log_probs.push_back(std::log(dist.probability(s)));
    apply(state, s, x);
    out.program.statements.push_back(std::move(s));
  }
  out.glosses = state.output;
  return out;
}

}  // namespace editgloss
