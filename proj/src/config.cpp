#include "editgloss/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

namespace editgloss {

void ModelConfig::check() const {
  if (d_model < 1 || num_heads < 1 || d_model % num_heads != 0) {
    throw ConfigError("model.d_model must be a positive multiple of model.num_heads");
  }
  if (gen_encoder_layers < 1 || gen_decoder_layers < 1 || exec_encoder_layers < 1) {
    throw ConfigError("layer counts must be >= 1");
  }
  if (ff_dim < 1 || max_len < 1 || max_repeat < 1) throw ConfigError("ff_dim, max_len and max_repeat must be >= 1");
  if (vocab_size < 4) throw ConfigError("model.vocab_size must cover the reserved ids plus at least one token");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("model.dropout must lie in [0, 1)");
}

std::string_view to_string(RewardKind kind) {
  switch (kind) {
    case RewardKind::Bleu4: return "bleu4";
    case RewardKind::RougeL: return "rougeL";
    case RewardKind::Sum: return "sum";
  }
  return "?";
}

void TrainConfig::check() const {
  if (samples_k < 2) throw ConfigError("train.samples_k must be >= 2 (the peer baseline needs a peer)");
  if (lambda_il < 0.0) throw ConfigError("train.lambda_il must be >= 0");
  if (il_warmup_epochs < 0 || total_epochs < 0) throw ConfigError("epoch counts must be >= 0");
  if (learning_rate <= 0.0 || weight_decay < 0.0) throw ConfigError("learning rate must be > 0, weight decay >= 0");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (patience < 0) throw ConfigError("train.patience must be >= 0");
  if (program_max_repeat < 1) throw ConfigError("train.program_max_repeat must be >= 1");
}

std::map<std::string, std::string> parse_key_values(std::string_view text, const std::string& source_name) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  auto trim = [](std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return std::string();
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
  };
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source_name + ":" + std::to_string(number) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected key=value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "empty key");
    if (!out.emplace(key, value).second) throw ConfigError(where + "duplicate key '" + key + "'");
  }
  return out;
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T result{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(first, last, result);
  if (ec != std::errc() || ptr != last) throw ConfigError("bad value '" + value + "' for " + key);
  return result;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("bad boolean '" + value + "' for " + key);
}

RewardKind parse_reward(const std::string& key, const std::string& value) {
  if (value == "bleu4") return RewardKind::Bleu4;
  if (value == "rougeL") return RewardKind::RougeL;
  if (value == "sum") return RewardKind::Sum;
  throw ConfigError("bad reward '" + value + "' for " + key + " (expected bleu4, rougeL or sum)");
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
std::string format_value(const T& v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

#define EG_FIELD(section, name, type)                                                              \
  {#section "." #name,                                                                                 \
   Field{[](RunConfig& c, const std::string& k, const std::string& v) { c.section.name = parse_number<type>(k, v); }, \
         [](const RunConfig& c) { return format_value(c.section.name); }}}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      EG_FIELD(model, d_model, int),
      EG_FIELD(model, num_heads, int),
      EG_FIELD(model, gen_encoder_layers, int),
      EG_FIELD(model, gen_decoder_layers, int),
      EG_FIELD(model, exec_encoder_layers, int),
      EG_FIELD(model, ff_dim, int),
      EG_FIELD(model, max_len, int),
      EG_FIELD(model, max_repeat, int),
      EG_FIELD(model, vocab_size, int),
      EG_FIELD(model, dropout, double),
      EG_FIELD(model, seed, std::uint64_t),
      {"model.positional_encoding",
       Field{[](RunConfig& c, const std::string& k, const std::string& v) { c.model.positional_encoding = parse_bool(k, v); },
             [](const RunConfig& c) { return std::string(c.model.positional_encoding ? "true" : "false"); }}},
      EG_FIELD(train, lambda_il, double),
      EG_FIELD(train, samples_k, int),
      EG_FIELD(train, il_warmup_epochs, int),
      EG_FIELD(train, total_epochs, int),
      EG_FIELD(train, learning_rate, double),
      EG_FIELD(train, weight_decay, double),
      EG_FIELD(train, adam_beta1, double),
      EG_FIELD(train, adam_beta2, double),
      EG_FIELD(train, adam_eps, double),
      EG_FIELD(train, grad_clip, double),
      EG_FIELD(train, batch_size, int),
      {"train.reward",
       Field{[](RunConfig& c, const std::string& k, const std::string& v) { c.train.reward = parse_reward(k, v); },
             [](const RunConfig& c) { return std::string(to_string(c.train.reward)); }}},
      EG_FIELD(train, patience, int),
      EG_FIELD(train, program_max_repeat, int),
      EG_FIELD(train, seed, std::uint64_t),
  };
  return table;
}

#undef EG_FIELD

}  // namespace

RunConfig parse_run_config(std::string_view text, const std::string& source_name) {
  RunConfig config;
  for (const auto& [key, value] : parse_key_values(text, source_name)) {
    bool known = false;
    for (const auto& [name, field] : fields()) {
      if (name == key) {
        try {
          field.set(config, key, value);
        } catch (const ConfigError& e) {
          throw ConfigError(source_name + ": " + e.what());
        }
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError(source_name + ": unknown key '" + key + "'");
  }
  config.train.check();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), path.string());
}

std::string format_run_config(const RunConfig& config) {
  std::string out;
  for (const auto& [name, field] : fields()) out += name + "=" + field.get(config) + "\n";
  return out;
}

}  // namespace editgloss
