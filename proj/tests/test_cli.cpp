#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "editgloss/cli.hpp"
#include "editgloss/corpus.hpp"
#include "oracles.hpp"

using namespace editgloss;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "editgloss_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("execute and schedule") {
  const Result e = run({"execute", "--sentence", oracle::kWeatherSentence, "--program", oracle::kWeatherPrediction});
  CHECK(e.code == 0);
  CHECK(e.out == std::string(oracle::kWeatherPredictionGlosses) + "\n");
  const Result s = run({"schedule", "--program", "COPY; DEL; ADD(w); SKIP"});
  CHECK(s.code == 0);
  CHECK(s.out == "0 1 1 2\n");
}

TEST_CASE("exit codes") {
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"frobnicate"}).code == cli::kUsage);
  CHECK(run({"schedule"}).code == cli::kUsage);
  CHECK(run({"schedule", "--program", "SKIP", "--colour", "red"}).code == cli::kUsage);
  const Result bad = run({"schedule", "--program", "FOR(0) DEL; SKIP"});
  CHECK(bad.code == cli::kDataError);
  CHECK(bad.err.find("--program") != std::string::npos);
  const Result overrun = run({"execute", "--sentence", "a", "--program", "COPY; COPY; SKIP"});
  CHECK(overrun.code == cli::kDataError);
  const Result missing = run({"derive", "--corpus", scratch("nope.tsv").string()});
  CHECK(missing.code == cli::kDataError);
  CHECK(missing.err.find("nope.tsv") != std::string::npos);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("malformed corpus names the line") {
  const fs::path f = scratch("broken.tsv");
  {
    std::ofstream out(f, std::ios::binary);
    out << "a b\ta\nno tab\n";
  }
  const Result r = run({"derive", "--corpus", f.string()});
  CHECK(r.code == cli::kDataError);
  CHECK(r.err.find("broken.tsv:2") != std::string::npos);
}

TEST_CASE("make-synthetic, derive, execute, score") {
  const fs::path corpus = scratch("syn.tsv");
  REQUIRE(run({"make-synthetic", "--out", corpus.string(), "--size", "40", "--seed", "5"}).code == 0);
  const fs::path programs = scratch("syn.prog");
  const Result d = run({"derive", "--corpus", corpus.string(), "--out", programs.string()});
  REQUIRE(d.code == 0);
  CHECK(d.err.find("pairs=40") != std::string::npos);

  std::istringstream lines(slurp(corpus));
  std::istringstream progs(slurp(programs));
  std::string line, prog, pred, ref;
  while (std::getline(lines, line) && std::getline(progs, prog)) {
    const auto tab = line.find('\t');
    const Result e = run({"execute", "--sentence", line.substr(0, tab), "--program", prog});
    REQUIRE(e.code == 0);
    CHECK(e.out == line.substr(tab + 1) + "\n");
    pred += e.out;
    ref += line.substr(tab + 1) + "\n";
  }
  const fs::path pf = scratch("pred.txt"), rf = scratch("ref.txt");
  std::ofstream(pf, std::ios::binary) << pred;
  std::ofstream(rf, std::ios::binary) << ref;
  const Result s = run({"score", "--pred", pf.string(), "--ref", rf.string(), "--programs", programs.string(),
                        programs.string()});
  CHECK(s.code == 0);
  CHECK(s.out == "per=0\nbleu1=1\nbleu2=1\nbleu3=1\nbleu4=1\nrougeL=1\npairs=40\n");
  const Result tsv = run({"score", "--pred", pf.string(), "--ref", rf.string(), "--tsv"});
  CHECK(tsv.out.rfind("per\tbleu1", 0) == 0);

  std::ofstream(pf, std::ios::binary) << "a\n";
  CHECK(run({"score", "--pred", pf.string(), "--ref", rf.string()}).code == cli::kDataError);
}

TEST_CASE("make-synthetic is deterministic") {
  const Result a = run({"make-synthetic", "--size", "10", "--seed", "3"});
  const Result b = run({"make-synthetic", "--size", "10", "--seed", "3"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
}

TEST_CASE("train, transcribe, eval") {
  const fs::path corpus = scratch("tiny.tsv");
  std::ofstream(corpus, std::ios::binary) << "a b c\ta c\nb c d\tb d\nc d a\tc a\n";
  const fs::path config = scratch("tiny.cfg");
  std::ofstream(config, std::ios::binary)
      << "model.d_model=8\nmodel.num_heads=2\nmodel.gen_encoder_layers=1\nmodel.ff_dim=16\nmodel.max_repeat=5\n"
         "model.dropout=0\ntrain.total_epochs=3\ntrain.il_warmup_epochs=2\ntrain.samples_k=2\n"
         "train.learning_rate=0.01\n";
  const fs::path out = scratch("run");
  const Result t = run({"train", "--corpus", corpus.string(), "--val", corpus.string(), "--config", config.string(),
                        "--out", out.string(), "--seed", "4"});
  REQUIRE(t.code == 0);
  CHECK(fs::exists(out / "model.ckpt"));
  CHECK(fs::exists(out / "vocab.txt"));
  const std::string log = slurp(out / "metrics.tsv");
  CHECK(std::count(log.begin(), log.end(), '\n') == 4);

  const fs::path input = scratch("tiny.in");
  std::ofstream(input, std::ios::binary) << "a b c\nd a\n";
  const Result tr = run({"transcribe", "--checkpoint", out.string(), "--input", input.string(), "--beam", "2"});
  REQUIRE(tr.code == 0);
  std::istringstream rows(tr.out);
  std::string row;
  int count = 0;
  while (std::getline(rows, row)) {
    ++count;
    CHECK(row.find('\t') != std::string::npos);
    CHECK_NOTHROW(parse_program(row.substr(0, row.find('\t'))));
  }
  CHECK(count == 2);

  const Result ev = run({"eval", "--checkpoint", out.string(), "--corpus", corpus.string()});
  CHECK(ev.code == 0);
  CHECK(ev.out.find("bleu4=") != std::string::npos);
  CHECK(ev.out.find("pairs=3") != std::string::npos);

  std::ofstream(config, std::ios::binary) << "model.colour=blue\n";
  const Result badcfg = run({"train", "--corpus", corpus.string(), "--val", corpus.string(), "--config",
                             config.string(), "--out", out.string()});
  CHECK(badcfg.code == cli::kDataError);
  CHECK(badcfg.err.find("model.colour") != std::string::npos);
}

}
