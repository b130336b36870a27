#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "editgloss/config.hpp"
#include "editgloss/corpus.hpp"
#include "editgloss/metrics.hpp"
#include "editgloss/model.hpp"

namespace editgloss {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A pair with its target program; every id mapped.
struct TrainingExample {
  Sentence sentence;
  GlossSequence glosses;
  Program program;
};

/// Derives minimal programs (ids taken from the pair's tokens).
std::vector<TrainingExample> make_examples(const std::vector<ParallelPair>& pairs, int program_max_repeat);

/// Peer-critic advantages: each sample's baseline is the mean reward of the
/// other K-1 samples.
struct RewardBatch {
  std::vector<double> rewards;
  std::vector<double> baselines;
  std::vector<double> advantages;
};

RewardBatch peer_baseline(std::span<const double> rewards);

double sequence_reward(const GlossSequence& candidate, const GlossSequence& reference, RewardKind kind);

/// Mean over the batch of the teacher-forced sequence NLL of each target program.
ad::Var imitation_loss(const GlossModel& model, std::span<const TrainingExample> batch,
                       const ForwardOptions& opts = {});

/// -sum_t log P(statement_t | history) for the first `scored_steps` statements
/// (all when scored_steps == npos).
ad::Var program_nll(const GlossModel& model, const Sentence& x, std::span<const Statement> statements,
                    std::size_t scored_steps = static_cast<std::size_t>(-1), const ForwardOptions& opts = {});

/// One independent ancestral sample per stream.
std::vector<SampledProgram> sample_programs(const GlossModel& model, const Sentence& x,
                                            const SharedVocabulary& vocabulary, std::span<std::mt19937_64> rngs);

struct PeerCriticResult {
  ad::Var loss;  // (1/K) sum_i advantage_i * NLL_i
  RewardBatch rewards;
  std::vector<SampledProgram> samples;
};

/// Draws K programs (sample i uses rngs[i]) and builds the REINFORCE loss
/// with the peer baseline. Advantages are constants.
PeerCriticResult peer_critic_loss(const GlossModel& model, const TrainingExample& example,
                                  const SharedVocabulary& vocabulary, const TrainConfig& config,
                                  std::span<std::mt19937_64> rngs, const ForwardOptions& opts = {});

/// Same loss for programs that were already sampled.
ad::Var reinforce_loss(const GlossModel& model, const Sentence& x, std::span<const SampledProgram> samples,
                       std::span<const double> advantages, const ForwardOptions& opts = {});

/// Adam with decoupled weight decay.
class AdamW {
 public:
  AdamW(const TrainConfig& config, std::size_t parameter_count);
  void step(std::vector<NamedParameter>& params);
  std::size_t steps() const { return t_; }

 private:
  double lr_, wd_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
  std::vector<ad::Matrix> m_;
  std::vector<ad::Matrix> v_;
};

struct EpochMetrics {
  int epoch = 0;
  std::string split = "val";
  double loss_il = 0.0;  // mean per-example IL term (before lambda)
  double loss_rl = 0.0;  // mean per-example RL term
  double loss_total = 0.0;  // mean of lambda * IL + RL
  EvalReport report;
  std::size_t rl_evaluations = 0;

  /// epoch, split, loss_il, loss_rl, per, bleu1..4, rouge_l (tab-separated).
  std::string to_log_line() const;
};

struct TrainResult {
  std::vector<EpochMetrics> epochs;
  int best_epoch = 0;
  double best_bleu4 = -1.0;
  bool stopped_early = false;
};

struct TrainHooks {
  /// Called after each epoch's metrics are computed.
  std::function<void(const EpochMetrics&)> on_epoch;
};

struct EvaluationOutput {
  EvalReport report;
  std::vector<Transcription> transcriptions;
};

/// Greedy transcription of every example, scored against its glosses and
/// target program.
EvaluationOutput evaluate_model(const GlossModel& model, const SharedVocabulary& vocabulary,
                                std::span<const TrainingExample> examples, const DecodeOptions& decode = {});

/// Imitation warm-up for il_warmup_epochs, then lambda * IL + peer-critic RL.
/// Keeps the parameters of the best validation BLEU-4 epoch in `model`.
/// If `validation` is empty the training set is used for validation.
TrainResult train(GlossModel& model, const SharedVocabulary& vocabulary, std::span<const TrainingExample> training,
                  std::span<const TrainingExample> validation, const TrainConfig& config,
                  std::ostream* metrics_log = nullptr, const TrainHooks& hooks = {});

struct SweepResult {
  double lambda_il = 0.0;
  TrainResult result;
  EvalReport final_report;
};

/// Trains one fresh model per lambda (same seeds) and reports validation scores.
std::vector<SweepResult> lambda_sweep(const ModelConfig& model_config, const SharedVocabulary& vocabulary,
                                      std::span<const TrainingExample> training,
                                      std::span<const TrainingExample> validation, TrainConfig base,
                                      std::span<const double> lambdas);

/// Per-sample random stream derived from the master seed.
std::mt19937_64 derived_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace editgloss
