#pragma once

#include <cmath>
#include <string>

#include "editgloss/model.hpp"

namespace fixtures {

inline editgloss::SharedVocabulary letters() {
  editgloss::SharedVocabulary v;
  for (const char* w : {"a", "b", "c", "d", "e", "f"}) v.add(w);
  return v;
}

inline editgloss::ModelConfig tiny_config(int vocab_size, std::uint64_t seed = 1) {
  editgloss::ModelConfig c;
  c.d_model = 8;
  c.num_heads = 2;
  c.gen_encoder_layers = 1;
  c.gen_decoder_layers = 1;
  c.exec_encoder_layers = 1;
  c.ff_dim = 16;
  c.max_len = 32;
  c.max_repeat = 4;
  c.vocab_size = vocab_size;
  c.dropout = 0.0;
  c.seed = seed;
  return c;
}

inline editgloss::ad::Var& param(editgloss::GlossModel& m, const std::string& name) {
  for (auto& p : m.parameters()) {
    if (p.name == name) return p.var;
  }
  throw std::out_of_range("no parameter " + name);
}

// Zero all head weights and set the kind bias, so the kind distribution is
// softmax(bias) over feasible kinds regardless of the input.
inline void pin_kind_head(editgloss::GlossModel& m, const editgloss::ad::Matrix& bias) {
  for (const char* name : {"head.kind.weight", "head.token.weight", "head.repeat.weight", "head.token.bias",
                           "head.repeat.bias"}) {
    param(m, name).mutable_value().setZero();
  }
  param(m, "head.kind.bias").mutable_value() = bias;
}

inline double checksum(const editgloss::ad::Matrix& m) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) s += m.data()[i] * std::sin(static_cast<double>(i + 1));
  return s;
}

}  // namespace fixtures
