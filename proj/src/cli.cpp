#include "editgloss/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "editgloss/corpus.hpp"
#include "editgloss/train.hpp"

namespace editgloss::cli {

namespace fs = std::filesystem;

namespace {

// Reports a problem with user-supplied data (exit code 2).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path.string() + ": cannot open file");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

std::vector<GlossSequence> read_gloss_file(const fs::path& path) {
  std::vector<GlossSequence> out;
  for (const std::string& line : read_lines(path)) out.push_back(tokenize(line));
  return out;
}

std::vector<Program> read_program_file(const fs::path& path) {
  std::vector<Program> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      out.push_back(parse_program(lines[i]));
    } catch (const DslError& e) {
      throw InputError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(path.string() + ": cannot write file");
  out << text;
}

fs::path checkpoint_file(const fs::path& p) { return fs::is_directory(p) ? p / "model.ckpt" : p; }

Program parse_flag_program(const std::string& text) {
  try {
    return parse_program(text);
  } catch (const DslError& e) {
    throw InputError(std::string("--program: ") + e.what());
  }
}

void print_report(std::ostream& out, const EvalReport& report, bool tsv) {
  out << (tsv ? report.to_tsv() : report.to_key_value());
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Edit-program sign language gloss transcription", "editgloss"};
  app.require_subcommand(1);

  // derive
  auto* derive = app.add_subcommand("derive", "Minimal editing program per corpus line");
  std::string derive_corpus, derive_out;
  int derive_repeat = MinEditOptions{}.max_repeat;
  bool derive_fold = false;
  derive->add_option("--corpus", derive_corpus, "Parallel corpus (sentence<TAB>glosses)")->required();
  derive->add_option("--out", derive_out, "Program file (default: standard output)");
  derive->add_option("--max-repeat", derive_repeat, "Longest FOR loop")->check(CLI::PositiveNumber);
  derive->add_flag("--fold-copies", derive_fold, "Fold runs of COPY into FOR loops too");

  // execute
  auto* exec = app.add_subcommand("execute", "Run a program on a sentence");
  std::string exec_sentence, exec_program;
  exec->add_option("--sentence", exec_sentence)->required();
  exec->add_option("--program", exec_program)->required();

  // schedule
  auto* sched = app.add_subcommand("schedule", "Visible gloss prefix length per decoding step");
  std::string sched_program;
  sched->add_option("--program", sched_program)->required();

  // score
  auto* score = app.add_subcommand("score", "Score predicted glosses against references");
  std::string score_pred, score_ref;
  std::vector<std::string> score_programs;
  bool score_tsv = false;
  score->add_option("--pred", score_pred, "Predicted glosses, one sequence per line")->required();
  score->add_option("--ref", score_ref, "Reference glosses, one sequence per line")->required();
  score->add_option("--programs", score_programs, "Predicted and reference program files")->expected(2);
  score->add_flag("--tsv", score_tsv, "Tab-separated output");

  // make-synthetic
  auto* synth = app.add_subcommand("make-synthetic", "Write a synthetic parallel corpus");
  SyntheticConfig synth_config;
  std::string synth_out;
  synth->add_option("--out", synth_out, "Output file (default: standard output)");
  synth->add_option("--size", synth_config.size);
  synth->add_option("--vocab-size", synth_config.vocab_size);
  synth->add_option("--deletion-rate", synth_config.deletion_rate);
  synth->add_option("--reorder-rate", synth_config.reorder_rate);
  synth->add_option("--insertion-rate", synth_config.insertion_rate);
  synth->add_option("--min-length", synth_config.min_length);
  synth->add_option("--max-length", synth_config.max_length);
  synth->add_option("--seed", synth_config.seed);

  // train
  auto* trn = app.add_subcommand("train", "Train a transcription model");
  std::string train_corpus, train_val, train_config, train_out, train_embeddings;
  std::optional<std::uint64_t> train_seed;
  trn->add_option("--corpus", train_corpus)->required();
  trn->add_option("--val", train_val)->required();
  trn->add_option("--config", train_config, "key=value run configuration")->required();
  trn->add_option("--out", train_out, "Output directory")->required();
  trn->add_option("--embeddings", train_embeddings, "Pretrained word vectors (token v1 ... vd)");
  trn->add_option("--seed", train_seed, "Overrides model.seed and train.seed");

  // transcribe
  auto* trans = app.add_subcommand("transcribe", "Transcribe sentences with a trained model");
  std::string trans_ckpt, trans_input;
  int trans_beam = 1;
  trans->add_option("--checkpoint", trans_ckpt)->required();
  trans->add_option("--input", trans_input, "One sentence per line")->required();
  trans->add_option("--beam", trans_beam)->check(CLI::PositiveNumber);

  // eval
  auto* ev = app.add_subcommand("eval", "Transcribe a corpus and score it");
  std::string eval_ckpt, eval_corpus;
  int eval_beam = 1;
  bool eval_tsv = false;
  ev->add_option("--checkpoint", eval_ckpt)->required();
  ev->add_option("--corpus", eval_corpus)->required();
  ev->add_option("--beam", eval_beam)->check(CLI::PositiveNumber);
  ev->add_flag("--tsv", eval_tsv);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*derive) {
      Corpus corpus = load_corpus(derive_corpus);
      MinEditOptions options;
      options.max_repeat = derive_repeat;
      options.fold_copies = derive_fold;
      const DerivationReport report = derive_all(corpus.pairs, options);
      std::string text;
      for (const ParallelPair& p : corpus.pairs) text += print_program(*p.minimal_program) + "\n";
      if (derive_out.empty()) {
        out << text;
      } else {
        write_text(derive_out, text);
      }
      err << report.to_text();
    } else if (*exec) {
      const Program program = parse_flag_program(exec_program);
      try {
        out << join(execute(program, tokenize(exec_sentence))) << "\n";
      } catch (const ExecutionError& e) {
        throw InputError(std::string("--program: ") + e.what());
      }
    } else if (*sched) {
      const MaskSchedule schedule = mask_schedule(parse_flag_program(sched_program));
      for (std::size_t i = 0; i < schedule.visible.size(); ++i) out << (i ? " " : "") << schedule.visible[i];
      out << "\n";
    } else if (*score) {
      const auto pred = read_gloss_file(score_pred);
      const auto ref = read_gloss_file(score_ref);
      if (pred.size() != ref.size()) {
        throw InputError("--pred " + score_pred + " has " + std::to_string(pred.size()) + " lines but --ref " +
                         score_ref + " has " + std::to_string(ref.size()));
      }
      std::vector<Program> pred_programs, ref_programs;
      if (!score_programs.empty()) {
        pred_programs = read_program_file(score_programs[0]);
        ref_programs = read_program_file(score_programs[1]);
        if (pred_programs.size() != pred.size() || ref_programs.size() != ref.size()) {
          throw InputError("--programs: program files must have one line per gloss line");
        }
      }
      print_report(out, evaluate(pred, ref, pred_programs, ref_programs), score_tsv);
    } else if (*synth) {
      const std::string text = make_synthetic_corpus(synth_config);
      if (synth_out.empty()) {
        out << text;
      } else {
        write_text(synth_out, text);
      }
    } else if (*trn) {
      RunConfig config = load_run_config(train_config);
      if (train_seed) {
        config.model.seed = *train_seed;
        config.train.seed = *train_seed;
      }
      Corpus corpus = load_corpus(train_corpus);
      SharedVocabulary vocabulary = corpus.vocabulary;
      {
        // Validation tokens join the shared vocabulary so they keep their surface ids.
        const Corpus val_raw = load_corpus(train_val);
        for (const ParallelPair& p : val_raw.pairs) {
          for (const Token& t : p.sentence) vocabulary.add(t.surface);
          for (const Token& t : p.glosses) vocabulary.add(t.surface);
        }
      }
      corpus = load_corpus(train_corpus, &vocabulary);
      const Corpus val = load_corpus(train_val, &vocabulary);
      config.model.vocab_size = static_cast<int>(vocabulary.size());
      config.model.check();
      if (config.train.program_max_repeat > config.model.max_repeat) {
        throw ConfigError(train_config + ": train.program_max_repeat exceeds model.max_repeat");
      }
      GlossModel model(config.model);
      if (!train_embeddings.empty()) {
        const std::size_t rows = model.load_embeddings(train_embeddings, vocabulary);
        err << "loaded " << rows << " embedding rows\n";
      }
      const auto training = make_examples(corpus.pairs, config.train.program_max_repeat);
      const auto validation = make_examples(val.pairs, config.train.program_max_repeat);
      fs::create_directories(train_out);
      std::ofstream log(fs::path(train_out) / "metrics.tsv", std::ios::binary);
      if (!log) throw InputError(train_out + ": cannot write metrics.tsv");
      const TrainResult result = train(model, vocabulary, training, validation, config.train, &log);
      model.save(fs::path(train_out) / "model.ckpt", vocabulary);
      vocabulary.save(fs::path(train_out) / "vocab.txt");
      write_text(fs::path(train_out) / "config.txt", format_run_config(config));
      err << "best epoch " << result.best_epoch << " bleu4 " << result.best_bleu4 << "\n";
    } else if (*trans || *ev) {
      auto [model, vocabulary] = GlossModel::load(checkpoint_file(*trans ? trans_ckpt : eval_ckpt));
      DecodeOptions decode;
      const int beam = *trans ? trans_beam : eval_beam;
      if (beam > 1) {
        decode.mode = DecodeMode::Beam;
        decode.beam_width = beam;
      }
      if (*trans) {
        for (const std::string& line : read_lines(trans_input)) {
          Sentence x = tokenize(line.substr(0, line.find('\t')));
          if (x.empty()) throw InputError(trans_input + ": empty sentence");
          vocabulary.map(x);
          const Transcription t = transcribe(model, x, vocabulary, decode);
          out << print_program(t.program) << "\t" << join(t.glosses) << "\n";
        }
      } else {
        const Corpus corpus = load_corpus(eval_corpus, &vocabulary);
        const auto examples = make_examples(corpus.pairs, MinEditOptions{}.max_repeat);
        print_report(out, evaluate_model(model, vocabulary, examples, decode).report, eval_tsv);
      }
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const DataError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const ModelError& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kOk;
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace editgloss::cli
