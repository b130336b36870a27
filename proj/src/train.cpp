#include "editgloss/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

namespace editgloss {

using ad::Var;

std::vector<TrainingExample> make_examples(const std::vector<ParallelPair>& pairs, int program_max_repeat) {
  std::vector<TrainingExample> out;
  out.reserve(pairs.size());
  MinEditOptions options;
  options.max_repeat = program_max_repeat;
  for (const ParallelPair& p : pairs) {
    TrainingExample ex{p.sentence, p.glosses, minimal_program(p.sentence, p.glosses, options)};
    out.push_back(std::move(ex));
  }
  return out;
}

RewardBatch peer_baseline(std::span<const double> rewards) {
  const std::size_t k = rewards.size();
  if (k < 2) throw TrainingError("peer baseline needs at least two samples");
  RewardBatch batch;
  batch.rewards.assign(rewards.begin(), rewards.end());
  // r_i - mean_{j != i} r_j as a sum of differences, so equal rewards give exactly 0.
  for (std::size_t i = 0; i < k; ++i) {
    double diff = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j != i) diff += rewards[i] - rewards[j];
    }
    const double advantage = diff / static_cast<double>(k - 1);
    batch.advantages.push_back(advantage);
    batch.baselines.push_back(rewards[i] - advantage);
  }
  return batch;
}

double sequence_reward(const GlossSequence& candidate, const GlossSequence& reference, RewardKind kind) {
  switch (kind) {
    case RewardKind::Bleu4: return smoothed_sentence_bleu(candidate, reference, 4);
    case RewardKind::RougeL: return rouge_l_or_zero(candidate, reference);
    case RewardKind::Sum:
      // Halved so the reward stays in [0, 1].
      return 0.5 * (smoothed_sentence_bleu(candidate, reference, 4) + rouge_l_or_zero(candidate, reference));
  }
  return 0.0;
}

Var program_nll(const GlossModel& model, const Sentence& x, std::span<const Statement> statements,
                std::size_t scored_steps, const ForwardOptions& opts) {
  if (scored_steps >= statements.size()) return model.sequence_nll(x, statements, opts);
  GlossModel::Targets t = model.targets(x, statements);
  auto keep = [&](std::vector<ad::NllTerm>& terms) {
    std::erase_if(terms, [&](const ad::NllTerm& term) { return static_cast<std::size_t>(term.row) >= scored_steps; });
  };
  keep(t.kind);
  keep(t.token);
  keep(t.repeat);
  if (t.kind.empty()) return ad::constant(ad::Matrix::Zero(1, 1));
  const HeadLogits logits = model.forward(x, statements, opts);
  std::vector<Var> parts{ad::nll(logits.kind, t.kind)};
  if (!t.token.empty()) parts.push_back(ad::nll(logits.token, t.token));
  if (!t.repeat.empty()) parts.push_back(ad::nll(logits.repeat, t.repeat));
  return ad::sum(parts);
}

Var imitation_loss(const GlossModel& model, std::span<const TrainingExample> batch, const ForwardOptions& opts) {
  if (batch.empty()) throw TrainingError("imitation loss over an empty batch");
  std::vector<Var> terms;
  terms.reserve(batch.size());
  for (const TrainingExample& ex : batch) terms.push_back(model.sequence_nll(ex.sentence, ex.program.statements, opts));
  return ad::scale(ad::sum(terms), 1.0 / static_cast<double>(batch.size()));
}

Var reinforce_loss(const GlossModel& model, const Sentence& x, std::span<const SampledProgram> samples,
                   std::span<const double> advantages, const ForwardOptions& opts) {
  if (samples.size() != advantages.size() || samples.empty()) throw TrainingError("one advantage per sample required");
  std::vector<Var> terms;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (advantages[i] == 0.0) continue;
    const SampledProgram& s = samples[i];
    const Var nll = program_nll(model, x, s.program.statements, s.step_log_probs.size(), opts);
    terms.push_back(ad::scale(nll, advantages[i]));
  }
  if (terms.empty()) return ad::constant(ad::Matrix::Zero(1, 1));
  return ad::scale(ad::sum(terms), 1.0 / static_cast<double>(samples.size()));
}

std::vector<SampledProgram> sample_programs(const GlossModel& model, const Sentence& x,
                                            const SharedVocabulary& vocabulary, std::span<std::mt19937_64> rngs) {
  std::vector<SampledProgram> out;
  out.reserve(rngs.size());
  for (std::mt19937_64& rng : rngs) out.push_back(sample_program(model, x, vocabulary, rng));
  return out;
}

PeerCriticResult peer_critic_loss(const GlossModel& model, const TrainingExample& example,
                                  const SharedVocabulary& vocabulary, const TrainConfig& config,
                                  std::span<std::mt19937_64> rngs, const ForwardOptions& opts) {
  if (static_cast<int>(rngs.size()) != config.samples_k) throw TrainingError("one random stream per sample required");
  PeerCriticResult out;
  out.samples = sample_programs(model, example.sentence, vocabulary, rngs);
  std::vector<double> rewards;
  for (const SampledProgram& s : out.samples) rewards.push_back(sequence_reward(s.glosses, example.glosses, config.reward));
  out.rewards = peer_baseline(rewards);
  out.loss = reinforce_loss(model, example.sentence, out.samples, out.rewards.advantages, opts);
  return out;
}

AdamW::AdamW(const TrainConfig& config, std::size_t parameter_count)
    : lr_(config.learning_rate),
      wd_(config.weight_decay),
      beta1_(config.adam_beta1),
      beta2_(config.adam_beta2),
      eps_(config.adam_eps),
      m_(parameter_count),
      v_(parameter_count) {}

void AdamW::step(std::vector<NamedParameter>& params) {
  if (params.size() != m_.size()) throw TrainingError("optimizer/parameter count mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Var& p = params[i].var;
    ad::Matrix& value = p.mutable_value();
    if (m_[i].size() == 0) {
      m_[i] = ad::Matrix::Zero(value.rows(), value.cols());
      v_[i] = ad::Matrix::Zero(value.rows(), value.cols());
    }
    value *= (1.0 - lr_ * wd_);
    if (p.grad().size() == 0) continue;
    const ad::Matrix& g = p.grad();
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    value.array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

std::string EpochMetrics::to_log_line() const {
  std::ostringstream out;
  out.precision(10);
  out << epoch << '\t' << split << '\t' << loss_il << '\t' << loss_rl << '\t' << report.per;
  for (int n = 1; n <= 4; ++n) {
    auto it = report.bleu.find(n);
    out << '\t' << (it == report.bleu.end() ? 0.0 : it->second);
  }
  out << '\t' << report.rouge_l;
  return out.str();
}

EvaluationOutput evaluate_model(const GlossModel& model, const SharedVocabulary& vocabulary,
                                std::span<const TrainingExample> examples, const DecodeOptions& decode) {
  EvaluationOutput out;
  std::vector<GlossSequence> candidates;
  std::vector<GlossSequence> references;
  std::vector<Program> predicted;
  std::vector<Program> targets;
  for (const TrainingExample& ex : examples) {
    out.transcriptions.push_back(transcribe(model, ex.sentence, vocabulary, decode));
    candidates.push_back(out.transcriptions.back().glosses);
    references.push_back(ex.glosses);
    predicted.push_back(out.transcriptions.back().program);
    targets.push_back(ex.program);
  }
  out.report = evaluate(candidates, references, predicted, targets);
  return out;
}

std::mt19937_64 derived_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  // splitmix64 over the coordinates
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(seed);
  h = mix(h ^ a);
  h = mix(h ^ b);
  h = mix(h ^ c);
  return std::mt19937_64(h);
}

namespace {

std::vector<ad::Matrix> snapshot(const std::vector<NamedParameter>& params) {
  std::vector<ad::Matrix> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.var.value());
  return out;
}

void restore(std::vector<NamedParameter>& params, const std::vector<ad::Matrix>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i].var.mutable_value() = values[i];
}

void clip_gradients(std::vector<NamedParameter>& params, double max_norm) {
  if (max_norm <= 0.0) return;
  double total = 0.0;
  for (const auto& p : params) {
    if (p.var.grad().size() != 0) total += p.var.grad().squaredNorm();
  }
  const double norm = std::sqrt(total);
  if (norm <= max_norm) return;
  const double factor = max_norm / norm;
  for (auto& p : params) {
    if (p.var.grad().size() != 0) p.var.mutable_grad() *= factor;
  }
}

}  // namespace

TrainResult train(GlossModel& model, const SharedVocabulary& vocabulary, std::span<const TrainingExample> training,
                  std::span<const TrainingExample> validation, const TrainConfig& config, std::ostream* metrics_log,
                  const TrainHooks& hooks) {
  config.check();
  if (training.empty()) throw TrainingError("training set is empty");
  if (validation.empty()) validation = training;

  auto& params = model.parameters();
  AdamW optimizer(config, params.size());
  std::mt19937_64 order_rng = derived_stream(config.seed, 0x5eed, 0, 0);
  std::mt19937_64 dropout_rng = derived_stream(config.seed, 0xd209, 0, 0);
  ForwardOptions opts;
  opts.rng = model.config().dropout > 0.0 ? &dropout_rng : nullptr;

  std::vector<std::size_t> order(training.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  std::vector<ad::Matrix> best = snapshot(params);
  int since_best = 0;
  if (metrics_log) *metrics_log << "epoch\tsplit\tloss_il\tloss_rl\tper\tbleu1\tbleu2\tbleu3\tbleu4\trouge_l\n";

  for (int epoch = 1; epoch <= config.total_epochs; ++epoch) {
    const bool use_rl = epoch > config.il_warmup_epochs;
    std::shuffle(order.begin(), order.end(), order_rng);
    EpochMetrics metrics;
    metrics.epoch = epoch;
    double il_sum = 0.0;
    double rl_sum = 0.0;
    double total_sum = 0.0;

    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      for (auto& p : params) p.var.zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        const TrainingExample& ex = training[order[b]];
        const Var il = model.sequence_nll(ex.sentence, ex.program.statements, opts);
        std::vector<Var> parts{ad::scale(il, config.lambda_il)};
        double rl_value = 0.0;
        if (use_rl) {
          std::vector<std::mt19937_64> streams;
          for (int k = 0; k < config.samples_k; ++k) {
            streams.push_back(derived_stream(config.seed, static_cast<std::uint64_t>(epoch), order[b],
                                             static_cast<std::uint64_t>(k)));
          }
          const PeerCriticResult rl = peer_critic_loss(model, ex, vocabulary, config, streams, opts);
          ++metrics.rl_evaluations;
          rl_value = rl.loss.scalar();
          parts.push_back(rl.loss);
        }
        const Var loss = ad::sum(parts);
        if (!std::isfinite(loss.scalar())) {
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch));
        }
        il_sum += il.scalar();
        rl_sum += rl_value;
        total_sum += loss.scalar();
        ad::backward(ad::scale(loss, inv_batch));
      }
      clip_gradients(params, config.grad_clip);
      optimizer.step(params);
    }

    const auto n = static_cast<double>(training.size());
    metrics.loss_il = il_sum / n;
    metrics.loss_rl = rl_sum / n;
    metrics.loss_total = total_sum / n;
    metrics.report = evaluate_model(model, vocabulary, validation).report;
    result.epochs.push_back(metrics);
    if (metrics_log) *metrics_log << metrics.to_log_line() << '\n' << std::flush;
    if (hooks.on_epoch) hooks.on_epoch(metrics);

    const double bleu4 = metrics.report.bleu.at(4);
    if (bleu4 > result.best_bleu4) {
      result.best_bleu4 = bleu4;
      result.best_epoch = epoch;
      best = snapshot(params);
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      result.stopped_early = true;
      break;
    }
  }
  restore(params, best);
  return result;
}

std::vector<SweepResult> lambda_sweep(const ModelConfig& model_config, const SharedVocabulary& vocabulary,
                                      std::span<const TrainingExample> training,
                                      std::span<const TrainingExample> validation, TrainConfig base,
                                      std::span<const double> lambdas) {
  std::vector<SweepResult> out;
  for (double lambda : lambdas) {
    GlossModel model(model_config);
    base.lambda_il = lambda;
    SweepResult r;
    r.lambda_il = lambda;
    r.result = train(model, vocabulary, training, validation, base);
    r.final_report = evaluate_model(model, vocabulary, validation.empty() ? training : validation).report;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace editgloss
