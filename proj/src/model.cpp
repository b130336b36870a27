#include "editgloss/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace editgloss {

using ad::Matrix;
using ad::Var;

namespace {

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Matrix uniform_matrix(std::mt19937_64& rng, int rows, int cols, double bound) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = (2.0 * unit(rng) - 1.0) * bound;
  return m;
}

Matrix xavier(std::mt19937_64& rng, int in, int out) {
  return uniform_matrix(rng, in, out, std::sqrt(6.0 / static_cast<double>(in + out)));
}

std::size_t repeat_slot(ActionKind kind) {
  switch (kind) {
    case ActionKind::Add: return 0;
    case ActionKind::Del: return 1;
    case ActionKind::Copy: return 2;
    case ActionKind::Skip: break;
  }
  throw ModelError("SKIP has no repetition head");
}

std::vector<std::size_t> all_visible(std::size_t rows, std::size_t cols) { return std::vector<std::size_t>(rows, cols); }

std::vector<std::size_t> causal_limits(std::size_t rows) {
  std::vector<std::size_t> limits(rows);
  for (std::size_t i = 0; i < rows; ++i) limits[i] = i + 1;
  return limits;
}

}  // namespace

std::vector<int> token_ids(const std::vector<Token>& tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const Token& t : tokens) {
    if (t.id < 0) throw ModelError("token '" + t.surface + "' has no vocabulary id");
    ids.push_back(t.id);
  }
  return ids;
}

Matrix sinusoidal_table(int rows, int d_model) {
  Matrix p(rows, d_model);
  for (int pos = 0; pos < rows; ++pos) {
    for (int i = 0; i < d_model; ++i) {
      const double rate = std::pow(10000.0, static_cast<double>(2 * (i / 2)) / static_cast<double>(d_model));
      const double angle = static_cast<double>(pos) / rate;
      p(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return p;
}

FeasibleActions FeasibleActions::at(std::size_t remaining_words, int vocab_size, int max_repeat) {
  FeasibleActions f;
  f.kinds = {1, static_cast<char>(remaining_words > 0), static_cast<char>(remaining_words > 0), 1};
  f.tokens.assign(static_cast<std::size_t>(vocab_size), 1);
  f.tokens[SharedVocabulary::kPad] = 0;
  f.tokens[SharedVocabulary::kBop] = 0;
  f.add_reps.assign(static_cast<std::size_t>(max_repeat), 1);
  f.del_copy_reps.assign(static_cast<std::size_t>(max_repeat), 0);
  for (std::size_t r = 1; r <= std::min<std::size_t>(remaining_words, static_cast<std::size_t>(max_repeat)); ++r) {
    f.del_copy_reps[r - 1] = 1;
  }
  return f;
}

const std::vector<double>& StatementDistribution::repeat_for(ActionKind kind) const {
  return repeat[repeat_slot(kind)];
}

double StatementDistribution::probability(const Statement& s) const {
  double p = kind[static_cast<std::size_t>(s.kind)];
  if (s.kind == ActionKind::Skip) return p;
  if (s.kind == ActionKind::Add) {
    if (!s.token || s.token->id < 0 || static_cast<std::size_t>(s.token->id) >= token.size()) return 0.0;
    p *= token[static_cast<std::size_t>(s.token->id)];
  }
  const auto& reps = repeat_for(s.kind);
  if (s.repetitions < 1 || static_cast<std::size_t>(s.repetitions) > reps.size()) return 0.0;
  return p * reps[static_cast<std::size_t>(s.repetitions - 1)];
}

Var GlossModel::Linear::operator()(const Var& x) const {
  Var y = ad::matmul(x, weight);
  return bias.defined() ? ad::add_row(y, bias) : y;
}

Var GlossModel::Attention::operator()(const Var& query, const Var& memory, std::span<const std::size_t> limits) const {
  const Var q = ad::matmul(query, wq);
  const Var k = ad::matmul(memory, wk);
  const Var v = ad::matmul(memory, wv);
  const Eigen::Index d = q.cols();
  const Eigen::Index dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> per_head;
  per_head.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const Var qh = ad::slice_cols(q, h * dh, dh);
    const Var kh = ad::slice_cols(k, h * dh, dh);
    const Var vh = ad::slice_cols(v, h * dh, dh);
    const Var weights = ad::softmax_prefix_rows(ad::scale(ad::matmul_nt(qh, kh), inv_sqrt), limits);
    per_head.push_back(ad::matmul(weights, vh));
  }
  return ad::matmul(heads == 1 ? per_head.front() : ad::concat_cols(per_head), wo);
}

GlossModel::GlossModel(const ModelConfig& config) : config_(config), init_rng_(config.seed) {
  config_.check();
  const int d = config_.d_model;
  positional_ = sinusoidal_table(config_.max_len + 1, d);
  if (!config_.positional_encoding) positional_.setZero();

  token_embedding_ = parameter("embed.token", uniform_matrix(init_rng_, config_.vocab_size, d, std::sqrt(3.0)));
  kind_embedding_ = parameter("embed.kind", uniform_matrix(init_rng_, kNumActionKinds, d, std::sqrt(3.0)));
  repeat_embedding_ = parameter("embed.repeat", uniform_matrix(init_rng_, config_.max_repeat, d, std::sqrt(3.0)));

  auto make_encoder = [this](const std::string& prefix, int count) {
    std::vector<EncoderLayer> layers;
    for (int l = 0; l < count; ++l) {
      const std::string name = prefix + "." + std::to_string(l);
      EncoderLayer layer;
      layer.self_attention = make_attention(name + ".self_attn");
      layer.norm1 = make_norm(name + ".norm1");
      layer.ffn = make_ffn(name + ".ffn");
      layer.norm2 = make_norm(name + ".norm2");
      layers.push_back(std::move(layer));
    }
    return layers;
  };
  sentence_encoder_ = make_encoder("sentence_encoder", config_.gen_encoder_layers);
  gloss_encoder_ = make_encoder("gloss_encoder", config_.exec_encoder_layers);
  for (int l = 0; l < config_.gen_decoder_layers; ++l) {
    const std::string name = "decoder." + std::to_string(l);
    DecoderLayer layer;
    layer.self_attention = make_attention(name + ".self_attn");
    layer.norm1 = make_norm(name + ".norm1");
    layer.cross_attention = make_attention(name + ".cross_attn");
    layer.norm2 = make_norm(name + ".norm2");
    layer.ffn = make_ffn(name + ".ffn");
    layer.norm3 = make_norm(name + ".norm3");
    decoder_.push_back(std::move(layer));
  }
  editing_attention_ = make_attention("editing_attn");
  editing_norm_ = make_norm("editing_norm");
  kind_head_ = make_linear("head.kind", d, kNumActionKinds, true);
  token_head_ = make_linear("head.token", d, config_.vocab_size, true);
  repeat_head_ = make_linear("head.repeat", d, 3 * config_.max_repeat, true);
}

Var GlossModel::parameter(const std::string& name, Matrix init) {
  Var v(std::move(init), true);
  params_.push_back({name, v});
  return v;
}

GlossModel::Linear GlossModel::make_linear(const std::string& name, int in, int out, bool bias) {
  Linear l;
  l.weight = parameter(name + ".weight", xavier(init_rng_, in, out));
  if (bias) l.bias = parameter(name + ".bias", Matrix::Zero(1, out));
  return l;
}

GlossModel::Norm GlossModel::make_norm(const std::string& name) {
  return {parameter(name + ".gain", Matrix::Ones(1, config_.d_model)),
          parameter(name + ".bias", Matrix::Zero(1, config_.d_model))};
}

GlossModel::Attention GlossModel::make_attention(const std::string& name) {
  const int d = config_.d_model;
  Attention a;
  a.wq = parameter(name + ".wq", xavier(init_rng_, d, d));
  a.wk = parameter(name + ".wk", xavier(init_rng_, d, d));
  a.wv = parameter(name + ".wv", xavier(init_rng_, d, d));
  a.wo = parameter(name + ".wo", xavier(init_rng_, d, d));
  a.heads = config_.num_heads;
  return a;
}

GlossModel::FeedForward GlossModel::make_ffn(const std::string& name) {
  return {make_linear(name + ".in", config_.d_model, config_.ff_dim, true),
          make_linear(name + ".out", config_.ff_dim, config_.d_model, true)};
}

std::size_t GlossModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.var.value().size());
  return n;
}

void GlossModel::check_ids(std::span<const int> ids, const char* what) const {
  if (ids.size() > static_cast<std::size_t>(config_.max_len)) {
    throw ModelError(std::string(what) + " length " + std::to_string(ids.size()) + " exceeds max_len " +
                     std::to_string(config_.max_len));
  }
  for (int id : ids) {
    if (id < 0 || id >= config_.vocab_size) throw ModelError(std::string(what) + ": token id out of range");
  }
}

Var GlossModel::maybe_dropout(const Var& x, const ForwardOptions& opts) const {
  if (opts.rng == nullptr || config_.dropout <= 0.0) return x;
  return ad::dropout(x, config_.dropout, *opts.rng);
}

Var GlossModel::embed_tokens(std::span<const int> ids) const {
  const Var e = ad::gather_rows(token_embedding_, ids);
  return ad::add_const(e, positional_.topRows(static_cast<Eigen::Index>(ids.size())));
}

Var GlossModel::feed_forward(const FeedForward& ffn, const Var& x, const ForwardOptions& opts) const {
  return ffn.out(maybe_dropout(ad::relu(ffn.in(x)), opts));
}

Var GlossModel::encoder_stack(const std::vector<EncoderLayer>& layers, Var x, bool causal,
                              const ForwardOptions& opts) const {
  const auto n = static_cast<std::size_t>(x.rows());
  const std::vector<std::size_t> limits = causal ? causal_limits(n) : all_visible(n, n);
  x = maybe_dropout(x, opts);
  for (const EncoderLayer& layer : layers) {
    x = layer.norm1(ad::add(x, maybe_dropout(layer.self_attention(x, x, limits), opts)));
    x = layer.norm2(ad::add(x, maybe_dropout(feed_forward(layer.ffn, x, opts), opts)));
  }
  return x;
}

Var GlossModel::encode_sentence(std::span<const int> sentence_ids, const ForwardOptions& opts) const {
  check_ids(sentence_ids, "sentence");
  if (sentence_ids.empty()) throw ModelError("sentence is empty");
  return encoder_stack(sentence_encoder_, embed_tokens(sentence_ids), false, opts);
}

Var GlossModel::encode_gloss_history(std::span<const int> gloss_ids, const ForwardOptions& opts) const {
  check_ids(gloss_ids, "gloss history");
  if (gloss_ids.empty()) return ad::constant(Matrix::Zero(0, config_.d_model));
  return encoder_stack(gloss_encoder_, embed_tokens(gloss_ids), true, opts);
}

Var GlossModel::decode_statements(std::span<const Statement> prefix, const Var& h, const ForwardOptions& opts) const {
  const std::size_t rows = prefix.size() + 1;
  if (rows > static_cast<std::size_t>(config_.max_len)) {
    throw ModelError("program prefix length " + std::to_string(prefix.size()) + " exceeds max_len");
  }
  const int d = config_.d_model;
  std::vector<int> kind_ids(rows, 0);
  std::vector<int> token_ids_(rows, SharedVocabulary::kPad);
  std::vector<int> repeat_ids(rows, 0);
  Matrix kind_gate = Matrix::Zero(static_cast<Eigen::Index>(rows), d);
  Matrix token_gate = Matrix::Zero(static_cast<Eigen::Index>(rows), d);
  Matrix repeat_gate = Matrix::Zero(static_cast<Eigen::Index>(rows), d);
  token_ids_[0] = SharedVocabulary::kBop;
  token_gate.row(0).setOnes();
  for (std::size_t t = 0; t < prefix.size(); ++t) {
    const Statement& s = prefix[t];
    const auto row = static_cast<Eigen::Index>(t + 1);
    kind_ids[t + 1] = static_cast<int>(s.kind);
    kind_gate.row(row).setOnes();
    if (s.kind == ActionKind::Add) {
      if (!s.token || s.token->id < 0 || s.token->id >= config_.vocab_size) {
        throw ModelError("ADD statement without a valid token id");
      }
      token_ids_[t + 1] = s.token->id;
      token_gate.row(row).setOnes();
    }
    if (s.kind != ActionKind::Skip) {
      if (s.repetitions < 1 || s.repetitions > config_.max_repeat) throw ModelError("repetition outside 1..R_max");
      repeat_ids[t + 1] = s.repetitions - 1;
      repeat_gate.row(row).setOnes();
    }
  }
  Var x = ad::mul_const(ad::gather_rows(kind_embedding_, kind_ids), kind_gate);
  x = ad::add(x, ad::mul_const(ad::gather_rows(token_embedding_, token_ids_), token_gate));
  x = ad::add(x, ad::mul_const(ad::gather_rows(repeat_embedding_, repeat_ids), repeat_gate));
  x = ad::add_const(x, positional_.topRows(static_cast<Eigen::Index>(rows)));
  x = maybe_dropout(x, opts);

  const std::vector<std::size_t> self_limits = causal_limits(rows);
  const std::vector<std::size_t> cross_limits = all_visible(rows, static_cast<std::size_t>(h.rows()));
  for (const DecoderLayer& layer : decoder_) {
    x = layer.norm1(ad::add(x, maybe_dropout(layer.self_attention(x, x, self_limits), opts)));
    x = layer.norm2(ad::add(x, maybe_dropout(layer.cross_attention(x, h, cross_limits), opts)));
    x = layer.norm3(ad::add(x, maybe_dropout(feed_forward(layer.ffn, x, opts), opts)));
  }
  return x;
}

Var GlossModel::editing_causal_attention(const Var& e, const Var& g, std::span<const std::size_t> visible,
                                         const ForwardOptions&) const {
  if (static_cast<Eigen::Index>(visible.size()) != e.rows()) {
    throw ModelError("mask schedule length does not match decoder rows");
  }
  for (std::size_t v : visible) {
    if (static_cast<Eigen::Index>(v) > g.rows()) throw ModelError("mask schedule exceeds gloss history rows");
  }
  return editing_attention_(e, g, visible);
}

HeadLogits GlossModel::heads(const Var& e, const Var& g, std::span<const std::size_t> visible,
                             const ForwardOptions& opts) const {
  const Var context = editing_causal_attention(e, g, visible, opts);
  const Var o = editing_norm_(ad::add(e, maybe_dropout(context, opts)));
  return {kind_head_(o), token_head_(o), repeat_head_(o)};
}

HeadLogits GlossModel::forward(const Sentence& x, std::span<const Statement> statements,
                               const ForwardOptions& opts) const {
  if (statements.empty()) throw ModelError("forward needs at least one statement");
  const std::vector<int> x_ids = token_ids(x);
  const Var h = encode_sentence(x_ids, opts);
  const auto history = statements.first(statements.size() - 1);
  const auto [glosses, state] = execute_prefix(history, x);
  const Var g = encode_gloss_history(token_ids(glosses), opts);
  const Var e = decode_statements(history, h, opts);
  const MaskSchedule schedule = mask_schedule(statements);
  return heads(e, g, schedule.visible, opts);
}

StatementDistribution GlossModel::distribution_from_logits(const HeadLogits& logits, Eigen::Index row,
                                                           std::size_t remaining_words) const {
  const FeasibleActions feasible = FeasibleActions::at(remaining_words, config_.vocab_size, config_.max_repeat);
  StatementDistribution dist;
  const auto kind = ad::masked_softmax(logits.kind.value(), row, 0, kNumActionKinds, feasible.kinds);
  std::copy(kind.begin(), kind.end(), dist.kind.begin());
  dist.token = ad::masked_softmax(logits.token.value(), row, 0, config_.vocab_size, feasible.tokens);
  const Eigen::Index r = config_.max_repeat;
  dist.repeat[0] = ad::masked_softmax(logits.repeat.value(), row, 0, r, feasible.add_reps);
  if (remaining_words > 0) {
    dist.repeat[1] = ad::masked_softmax(logits.repeat.value(), row, r, r, feasible.del_copy_reps);
    dist.repeat[2] = ad::masked_softmax(logits.repeat.value(), row, 2 * r, r, feasible.del_copy_reps);
  } else {
    dist.repeat[1].assign(static_cast<std::size_t>(r), 0.0);
    dist.repeat[2].assign(static_cast<std::size_t>(r), 0.0);
  }
  return dist;
}

GlossModel::Session::Session(const GlossModel& model, const Sentence& x) : model_(model), x_(x) {
  ad::NoGradGuard no_grad;
  h_ = model_.encode_sentence(token_ids(x));
}

StatementDistribution GlossModel::Session::distribution(std::span<const Statement> prefix,
                                                        const ExecutionState& state) const {
  ad::NoGradGuard no_grad;
  const Var g = model_.encode_gloss_history(token_ids(state.output));
  const Var e = model_.decode_statements(prefix, h_);
  const Var last = ad::constant(e.value().bottomRows(1));
  const std::size_t visible[] = {state.gloss_len()};
  const HeadLogits logits = model_.heads(last, g, visible);
  return model_.distribution_from_logits(logits, 0, state.remaining(x_.size()));
}

StatementDistribution GlossModel::predict_step(const Sentence& x, std::span<const Statement> prefix) const {
  for (std::size_t t = 0; t < prefix.size(); ++t) {
    if (prefix[t].kind == ActionKind::Skip) throw ExecutionError("prefix continues after SKIP");
  }
  const auto [glosses, state] = execute_prefix(prefix, x);
  return Session(*this, x).distribution(prefix, state);
}

GlossModel::Targets GlossModel::targets(const Sentence& x, std::span<const Statement> statements) const {
  Targets out;
  ExecutionState state;
  const Eigen::Index r_max = config_.max_repeat;
  for (std::size_t t = 0; t < statements.size(); ++t) {
    const Statement& s = statements[t];
    const auto row = static_cast<Eigen::Index>(t);
    const FeasibleActions feasible = FeasibleActions::at(state.remaining(x.size()), config_.vocab_size, config_.max_repeat);
    const auto kind_index = static_cast<std::size_t>(s.kind);
    if (!feasible.kinds[kind_index]) throw ExecutionError("target statement " + print_statement(s) + " is infeasible");
    out.kind.push_back({row, 0, kNumActionKinds, std::vector<char>(feasible.kinds.begin(), feasible.kinds.end()),
                        static_cast<Eigen::Index>(kind_index), 1.0});
    if (s.kind == ActionKind::Add) {
      if (!s.token || s.token->id < 0 || s.token->id >= config_.vocab_size ||
          !feasible.tokens[static_cast<std::size_t>(s.token->id)]) {
        throw ModelError("ADD target token has no usable id");
      }
      out.token.push_back({row, 0, config_.vocab_size, feasible.tokens, s.token->id, 1.0});
    }
    if (s.kind != ActionKind::Skip) {
      if (s.repetitions < 1 || s.repetitions > config_.max_repeat) throw ModelError("target repetition outside 1..R_max");
      const auto& reps = s.kind == ActionKind::Add ? feasible.add_reps : feasible.del_copy_reps;
      if (!reps[static_cast<std::size_t>(s.repetitions - 1)]) {
        throw ExecutionError("target statement " + print_statement(s) + " runs past the sentence");
      }
      out.repeat.push_back({row, static_cast<Eigen::Index>(repeat_slot(s.kind)) * r_max, r_max, reps,
                            s.repetitions - 1, 1.0});
    }
    apply(state, s, x);
  }
  return out;
}

Var GlossModel::sequence_nll(const Sentence& x, std::span<const Statement> statements,
                             const ForwardOptions& opts) const {
  const Targets t = targets(x, statements);
  const HeadLogits logits = forward(x, statements, opts);
  std::vector<Var> parts{ad::nll(logits.kind, t.kind)};
  if (!t.token.empty()) parts.push_back(ad::nll(logits.token, t.token));
  if (!t.repeat.empty()) parts.push_back(ad::nll(logits.repeat, t.repeat));
  return ad::sum(parts);
}

// Checkpoint container, little-endian:
//   "EGCK" | u32 version | u64 len + config text (key=value)
//   | u64 count + (u32 len + bytes) vocabulary tokens in id order
//   | u64 count + (u32 len + name | u64 rows | u64 cols | f64 values row-major)
namespace {

constexpr char kMagic[4] = {'E', 'G', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void write_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::uint64_t bits = 0;
  if constexpr (std::is_floating_point_v<T>) {
    std::memcpy(&bits, &value, sizeof(T));
  } else {
    bits = static_cast<std::uint64_t>(value);
  }
  for (std::size_t i = 0; i < sizeof(T); ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const std::string& where) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw ModelError(where + ": truncated checkpoint");
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  if constexpr (std::is_floating_point_v<T>) {
    T value;
    std::memcpy(&value, &bits, sizeof(T));
    return value;
  } else {
    return static_cast<T>(bits);
  }
}

void write_string(std::ostream& out, const std::string& s) {
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in, const std::string& where, std::uint64_t limit = 1u << 20) {
  const auto n = read_le<std::uint32_t>(in, where);
  if (n > limit) throw ModelError(where + ": string length out of range");
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw ModelError(where + ": truncated checkpoint");
  return s;
}

}  // namespace

void GlossModel::save(const std::filesystem::path& path, const SharedVocabulary& vocabulary) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelError(path.string() + ": cannot open for writing");
  out.write(kMagic, 4);
  write_le<std::uint32_t>(out, kCheckpointVersion);
  RunConfig run;
  run.model = config_;
  const std::string config_text = format_run_config(run);
  write_le<std::uint64_t>(out, config_text.size());
  out.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));
  write_le<std::uint64_t>(out, vocabulary.size());
  for (const std::string& token : vocabulary.tokens()) write_string(out, token);
  write_le<std::uint64_t>(out, params_.size());
  for (const NamedParameter& p : params_) {
    write_string(out, p.name);
    const Matrix& m = p.var.value();
    write_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    write_le<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.size(); ++i) write_le<double>(out, m.data()[i]);
  }
  if (!out) throw ModelError(path.string() + ": write failed");
}

std::pair<GlossModel, SharedVocabulary> GlossModel::load(const std::filesystem::path& path) {
  const std::string where = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError(where + ": cannot open checkpoint");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw ModelError(where + ": not a checkpoint file");
  const auto version = read_le<std::uint32_t>(in, where);
  if (version != kCheckpointVersion) throw ModelError(where + ": unsupported checkpoint version " + std::to_string(version));
  const auto config_len = read_le<std::uint64_t>(in, where);
  if (config_len > (1u << 20)) throw ModelError(where + ": config block too large");
  std::string config_text(config_len, '\0');
  if (!in.read(config_text.data(), static_cast<std::streamsize>(config_len))) throw ModelError(where + ": truncated checkpoint");
  const RunConfig run = parse_run_config(config_text, where);

  SharedVocabulary vocabulary;
  const auto vocab_count = read_le<std::uint64_t>(in, where);
  for (std::uint64_t i = 0; i < vocab_count; ++i) {
    const std::string token = read_string(in, where);
    if (i < static_cast<std::uint64_t>(SharedVocabulary::kNumReserved)) {
      if (token != vocabulary.surface(static_cast<std::int32_t>(i))) throw ModelError(where + ": reserved ids differ");
      continue;
    }
    if (vocabulary.add(token) != static_cast<std::int32_t>(i)) throw ModelError(where + ": duplicate vocabulary token");
  }
  if (static_cast<int>(vocabulary.size()) != run.model.vocab_size) throw ModelError(where + ": vocabulary size mismatch");

  GlossModel model(run.model);
  const auto count = read_le<std::uint64_t>(in, where);
  if (count != model.params_.size()) throw ModelError(where + ": parameter count mismatch");
  for (NamedParameter& p : model.params_) {
    const std::string name = read_string(in, where);
    if (name != p.name) throw ModelError(where + ": expected tensor '" + p.name + "', found '" + name + "'");
    const auto rows = read_le<std::uint64_t>(in, where);
    const auto cols = read_le<std::uint64_t>(in, where);
    Matrix& m = p.var.mutable_value();
    if (rows != static_cast<std::uint64_t>(m.rows()) || cols != static_cast<std::uint64_t>(m.cols())) {
      throw ModelError(where + ": shape mismatch for '" + name + "'");
    }
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = read_le<double>(in, where);
  }
  return {std::move(model), std::move(vocabulary)};
}

std::size_t GlossModel::load_embeddings(const std::filesystem::path& path, const SharedVocabulary& vocabulary) {
  std::ifstream in(path);
  if (!in) throw ModelError(path.string() + ": cannot open embedding file");
  Matrix& table = token_embedding_.mutable_value();
  std::string line;
  std::size_t number = 0;
  std::size_t loaded = 0;
  while (std::getline(in, line)) {
    ++number;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    std::vector<double> values;
    double v;
    while (fields >> v) values.push_back(v);
    if (!fields.eof()) throw ModelError(path.string() + ":" + std::to_string(number) + ": non-numeric value");
    if (values.size() != static_cast<std::size_t>(config_.d_model)) {
      throw ModelError(path.string() + ":" + std::to_string(number) + ": expected " +
                       std::to_string(config_.d_model) + " values");
    }
    if (!vocabulary.contains(token)) continue;
    const auto id = vocabulary.id(token);
    for (int c = 0; c < config_.d_model; ++c) table(id, c) = values[static_cast<std::size_t>(c)];
    ++loaded;
  }
  return loaded;
}

}  // namespace editgloss
