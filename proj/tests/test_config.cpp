#include <doctest.h>

#include "editgloss/config.hpp"

using namespace editgloss;

TEST_SUITE("config") {

TEST_CASE("defaults") {
  const RunConfig c;
  CHECK(c.model.d_model == 160);
  CHECK(c.model.num_heads == 10);
  CHECK(c.model.gen_encoder_layers == 3);
  CHECK(c.model.gen_decoder_layers == 1);
  CHECK(c.model.exec_encoder_layers == 1);
  CHECK(c.train.lambda_il == 0.5);
  CHECK(c.train.samples_k == 5);
  CHECK(c.train.il_warmup_epochs == 25);
  CHECK(c.train.total_epochs == 150);
  CHECK(c.train.learning_rate == 1e-4);
  CHECK(c.train.weight_decay == 1e-4);
  CHECK(c.train.patience == 20);
}

TEST_CASE("parse and format round trip") {
  const RunConfig c = parse_run_config(
      "# comment\nmodel.d_model = 40\nmodel.num_heads=4\ntrain.reward=rougeL\ntrain.lambda_il=0.1\n"
      "model.positional_encoding=false\n",
      "mem");
  CHECK(c.model.d_model == 40);
  CHECK(c.model.num_heads == 4);
  CHECK(c.train.reward == RewardKind::RougeL);
  CHECK(c.train.lambda_il == 0.1);
  CHECK_FALSE(c.model.positional_encoding);
  const RunConfig again = parse_run_config(format_run_config(c), "mem");
  CHECK(format_run_config(again) == format_run_config(c));
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(parse_run_config("model.width=3\n", "mem"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("model.d_model\n", "mem"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("model.d_model=abc\n", "mem"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("train.samples_k=1\n", "mem"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("train.lambda_il=-1\n", "mem"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("train.reward=meteor\n", "mem"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("train.seed=1\ntrain.seed=2\n", "mem"), ConfigError);
  try {
    parse_run_config("\n\nmodel.bogus=1\n", "run.cfg");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("run.cfg") != std::string::npos);
    CHECK(std::string(e.what()).find("model.bogus") != std::string::npos);
  }
  ModelConfig m;
  m.vocab_size = 10;
  m.num_heads = 3;
  CHECK_THROWS_AS(m.check(), ConfigError);
}

}
