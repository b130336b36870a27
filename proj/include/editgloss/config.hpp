#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

#include "editgloss/dsl.hpp"

namespace editgloss {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  int d_model = 160;
  int num_heads = 10;
  int gen_encoder_layers = 3;
  int gen_decoder_layers = 1;
  int exec_encoder_layers = 1;
  int ff_dim = 320;
  int max_len = 128;  // L_max: longest sentence, gloss history or program
  int max_repeat = kDefaultMaxRepeat;  // R_max
  int vocab_size = 0;
  double dropout = 0.1;
  std::uint64_t seed = 1;
  /// Off only for tests of permutation equivariance.
  bool positional_encoding = true;

  void check() const;
};

enum class RewardKind { Bleu4, RougeL, Sum };

std::string_view to_string(RewardKind kind);

struct TrainConfig {
  double lambda_il = 0.5;
  int samples_k = 5;
  int il_warmup_epochs = 25;
  int total_epochs = 150;
  double learning_rate = 1e-4;
  double weight_decay = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 0.0;  // global norm; 0 disables
  int batch_size = 16;
  RewardKind reward = RewardKind::Bleu4;
  /// Epochs without validation BLEU-4 improvement before stopping; 0 disables.
  int patience = 20;
  /// Longest FOR run in derived target programs.
  int program_max_repeat = 5;
  std::uint64_t seed = 1;

  void check() const;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
};

/// Parses `key=value` lines ('#' starts a comment, blank lines ignored).
/// Keys are `model.<field>` or `train.<field>`; unknown keys are errors.
RunConfig parse_run_config(std::string_view text, const std::string& source_name = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);
std::string format_run_config(const RunConfig& config);

/// Raw key=value map with duplicate and syntax checks.
std::map<std::string, std::string> parse_key_values(std::string_view text, const std::string& source_name);

}  // namespace editgloss
