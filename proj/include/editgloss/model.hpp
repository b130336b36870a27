#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "editgloss/autodiff.hpp"
#include "editgloss/config.hpp"
#include "editgloss/corpus.hpp"
#include "editgloss/dsl.hpp"
#include "editgloss/executor.hpp"

namespace editgloss {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-step forward options. Dropout is applied only when `rng` is set.
struct ForwardOptions {
  std::mt19937_64* rng = nullptr;
};

/// Feasible part of the factorised action space at one decoding step.
struct FeasibleActions {
  std::array<char, kNumActionKinds> kinds{};
  std::vector<char> tokens;        // ADD targets; reserved ids masked
  std::vector<char> del_copy_reps; // index r-1
  std::vector<char> add_reps;

  static FeasibleActions at(std::size_t remaining_words, int vocab_size, int max_repeat);
};

/// Factorised conditional over the next statement.
struct StatementDistribution {
  std::array<double, kNumActionKinds> kind{};
  std::vector<double> token;  // P(token | ADD)
  std::array<std::vector<double>, 3> repeat;  // P(r | kind) for ADD, DEL, COPY; index r-1

  const std::vector<double>& repeat_for(ActionKind kind) const;
  /// kind x token-if-ADD x repeat-if-not-SKIP. Token ids must be mapped.
  double probability(const Statement& s) const;
};

/// Learnable tensor handle with a stable name (checkpoint key).
struct NamedParameter {
  std::string name;
  ad::Var var;
};

/// Outputs of the three classifier heads for every decoded row.
struct HeadLogits {
  ad::Var kind;    // T x 4
  ad::Var token;   // T x |V|
  ad::Var repeat;  // T x 3*R_max, window per repeatable kind
};

/// The generator/executor network. Token ids on Statement/Token values must
/// already be mapped through the shared vocabulary.
class GlossModel {
 public:
  explicit GlossModel(const ModelConfig& config);
  // Parameters are shared handles; copies would alias them.
  GlossModel(const GlossModel&) = delete;
  GlossModel& operator=(const GlossModel&) = delete;
  GlossModel(GlossModel&&) = default;
  GlossModel& operator=(GlossModel&&) = default;

  const ModelConfig& config() const { return config_; }
  std::vector<NamedParameter>& parameters() { return params_; }
  const std::vector<NamedParameter>& parameters() const { return params_; }
  std::size_t parameter_count() const;

  /// m x d. Bidirectional encoder over E[x] + P.
  ad::Var encode_sentence(std::span<const int> sentence_ids, const ForwardOptions& opts = {}) const;
  /// j x d, causal encoder over E[y] + P; zero rows for an empty history.
  ad::Var encode_gloss_history(std::span<const int> gloss_ids, const ForwardOptions& opts = {}) const;
  /// (|prefix| + 1) x d: row 0 encodes the begin-of-program symbol, row t
  /// encodes statement t; causal self-attention then attention over h.
  ad::Var decode_statements(std::span<const Statement> prefix, const ad::Var& h,
                            const ForwardOptions& opts = {}) const;
  /// Multi-head attention from decoder rows to the first visible[t] gloss
  /// rows; rows with visible[t] == 0 give zero.
  ad::Var editing_causal_attention(const ad::Var& e, const ad::Var& g, std::span<const std::size_t> visible,
                                   const ForwardOptions& opts = {}) const;
  /// LayerNorm(e + editing_causal_attention) followed by the linear heads.
  HeadLogits heads(const ad::Var& e, const ad::Var& g, std::span<const std::size_t> visible,
                   const ForwardOptions& opts = {}) const;

  /// Teacher-forced logits for the given statements on sentence x (ids mapped).
  HeadLogits forward(const Sentence& x, std::span<const Statement> statements, const ForwardOptions& opts = {}) const;

  /// Distribution of the statement following `prefix`, with infeasible
  /// actions masked. Throws ExecutionError if the prefix is not executable.
  StatementDistribution predict_step(const Sentence& x, std::span<const Statement> prefix) const;

  /// Incremental decoding session: the sentence is encoded once.
  class Session {
   public:
    Session(const GlossModel& model, const Sentence& x);
    StatementDistribution distribution(std::span<const Statement> prefix, const ExecutionState& state) const;

   private:
    const GlossModel& model_;
    const Sentence& x_;
    ad::Var h_;
  };

  StatementDistribution distribution_from_logits(const HeadLogits& logits, Eigen::Index row,
                                                 std::size_t remaining_words) const;

  /// Masked NLL terms for `statements` (the targets) given teacher forcing.
  struct Targets {
    std::vector<ad::NllTerm> kind;
    std::vector<ad::NllTerm> token;
    std::vector<ad::NllTerm> repeat;
  };
  Targets targets(const Sentence& x, std::span<const Statement> statements) const;

  /// Sum over steps of -log P(statement_t | history) under the heads.
  ad::Var sequence_nll(const Sentence& x, std::span<const Statement> statements, const ForwardOptions& opts = {}) const;

  void save(const std::filesystem::path& path, const SharedVocabulary& vocabulary) const;
  static std::pair<GlossModel, SharedVocabulary> load(const std::filesystem::path& path);

  /// Loads `token v1 ... vd` lines into rows of the token table; returns the
  /// number of rows set. Tokens missing from the vocabulary are skipped.
  std::size_t load_embeddings(const std::filesystem::path& path, const SharedVocabulary& vocabulary);

  const ad::Matrix& positional_table() const { return positional_; }
  ad::Var token_table() const { return token_embedding_; }

 private:
  struct Linear {
    ad::Var weight;  // in x out
    ad::Var bias;    // 1 x out, may be undefined
    ad::Var operator()(const ad::Var& x) const;
  };
  struct Norm {
    ad::Var gain;
    ad::Var bias;
    ad::Var operator()(const ad::Var& x) const { return ad::layer_norm(x, gain, bias); }
  };
  struct Attention {
    ad::Var wq, wk, wv, wo;
    int heads = 1;
    ad::Var operator()(const ad::Var& query, const ad::Var& memory, std::span<const std::size_t> limits) const;
  };
  struct FeedForward {
    Linear in;
    Linear out;
  };
  struct EncoderLayer {
    Attention self_attention;
    Norm norm1;
    FeedForward ffn;
    Norm norm2;
  };
  struct DecoderLayer {
    Attention self_attention;
    Norm norm1;
    Attention cross_attention;
    Norm norm2;
    FeedForward ffn;
    Norm norm3;
  };

  ad::Var parameter(const std::string& name, ad::Matrix init);
  Linear make_linear(const std::string& name, int in, int out, bool bias);
  Norm make_norm(const std::string& name);
  Attention make_attention(const std::string& name);
  FeedForward make_ffn(const std::string& name);

  ad::Var embed_tokens(std::span<const int> ids) const;
  ad::Var encoder_stack(const std::vector<EncoderLayer>& layers, ad::Var x, bool causal,
                        const ForwardOptions& opts) const;
  ad::Var feed_forward(const FeedForward& ffn, const ad::Var& x, const ForwardOptions& opts) const;
  ad::Var maybe_dropout(const ad::Var& x, const ForwardOptions& opts) const;
  void check_ids(std::span<const int> ids, const char* what) const;

  ModelConfig config_;
  std::mt19937_64 init_rng_;
  std::vector<NamedParameter> params_;

  ad::Matrix positional_;
  ad::Var token_embedding_;
  ad::Var kind_embedding_;
  ad::Var repeat_embedding_;
  std::vector<EncoderLayer> sentence_encoder_;
  std::vector<EncoderLayer> gloss_encoder_;
  std::vector<DecoderLayer> decoder_;
  Attention editing_attention_;
  Norm editing_norm_;
  Linear kind_head_;
  Linear token_head_;
  Linear repeat_head_;
};

/// Sinusoidal positional table: even columns sine, odd columns cosine.
ad::Matrix sinusoidal_table(int rows, int d_model);

/// Ids of a token sequence; throws ModelError on unmapped tokens.
std::vector<int> token_ids(const std::vector<Token>& tokens);

enum class DecodeMode { Greedy, Beam };

struct DecodeOptions {
  DecodeMode mode = DecodeMode::Greedy;
  int beam_width = 1;
};

struct Transcription {
  Program program;
  GlossSequence glosses;
  /// True when the step budget ran out and SKIP was forced.
  bool truncated = false;
  double log_prob = 0.0;
};

/// Step budget for a sentence of length m.
inline std::size_t step_budget(std::size_t m) { return 2 * m + 8; }

Transcription transcribe(const GlossModel& model, const Sentence& x, const SharedVocabulary& vocabulary,
                         const DecodeOptions& options = {});

/// One ancestral sample with per-step log-probabilities.
struct SampledProgram {
  Program program;
  GlossSequence glosses;
  std::vector<double> step_log_probs;
  bool truncated = false;
};

SampledProgram sample_program(const GlossModel& model, const Sentence& x, const SharedVocabulary& vocabulary,
                              std::mt19937_64& rng);

}  // namespace editgloss
