#include "editgloss/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace editgloss {

DataError::DataError(const std::string& where, std::size_t line, const std::string& message)
    : std::runtime_error(where + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + message),
      line_(line) {}

SharedVocabulary::SharedVocabulary() {
  for (const char* reserved : {"<pad>", "<unk>", "<bop>"}) add(reserved);
}

std::int32_t SharedVocabulary::add(std::string_view surface) {
  auto it = index_.find(std::string(surface));
  if (it != index_.end()) return it->second;
  const auto id = static_cast<std::int32_t>(tokens_.size());
  tokens_.emplace_back(surface);
  index_.emplace(tokens_.back(), id);
  return id;
}

std::int32_t SharedVocabulary::id(std::string_view surface) const {
  auto it = index_.find(std::string(surface));
  return it == index_.end() ? kUnk : it->second;
}

bool SharedVocabulary::contains(std::string_view surface) const { return index_.contains(std::string(surface)); }

const std::string& SharedVocabulary::surface(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("vocabulary id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

void SharedVocabulary::map(std::vector<Token>& tokens) const {
  for (Token& t : tokens) t.id = id(t.surface);
}

void SharedVocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string(), 0, "cannot open for writing");
  for (std::size_t i = kNumReserved; i < tokens_.size(); ++i) out << tokens_[i] << '\n';
}

SharedVocabulary SharedVocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string(), 0, "cannot open vocabulary file");
  SharedVocabulary vocab;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line.find_first_of(" \t\r") != std::string::npos) {
      throw DataError(path.string(), number, "vocabulary lines must hold exactly one token");
    }
    if (vocab.contains(line)) throw DataError(path.string(), number, "duplicate token '" + line + "'");
    vocab.add(line);
  }
  return vocab;
}

namespace {

std::vector<Token> split_tokens(std::string_view text, bool lowercase) {
  std::vector<Token> out = tokenize(text);
  if (lowercase) {
    for (Token& t : out) {
      std::transform(t.surface.begin(), t.surface.end(), t.surface.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    }
  }
  return out;
}

}  // namespace

Corpus parse_corpus(std::string_view text, const std::string& source_name, const SharedVocabulary* vocabulary,
                    const LoadOptions& options) {
  Corpus corpus;
  if (vocabulary) corpus.vocabulary = *vocabulary;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++number;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos) throw DataError(source_name, number, "missing TAB between sentence and glosses");
    if (line.find('\t', tab + 1) != std::string_view::npos) throw DataError(source_name, number, "more than one TAB");
    ParallelPair pair;
    pair.sentence = split_tokens(line.substr(0, tab), options.lowercase);
    pair.glosses = split_tokens(line.substr(tab + 1), options.lowercase);
    if (pair.sentence.empty()) throw DataError(source_name, number, "empty sentence");
    if (pair.glosses.empty()) throw DataError(source_name, number, "empty gloss sequence");
    if (!vocabulary) {
      for (const Token& t : pair.sentence) corpus.vocabulary.add(t.surface);
      for (const Token& t : pair.glosses) corpus.vocabulary.add(t.surface);
    }
    corpus.pairs.push_back(std::move(pair));
  }
  if (corpus.pairs.empty()) throw DataError(source_name, 0, "corpus is empty");
  for (ParallelPair& pair : corpus.pairs) {
    corpus.vocabulary.map(pair.sentence);
    corpus.vocabulary.map(pair.glosses);
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const SharedVocabulary* vocabulary, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path.string(), 0, "cannot open corpus file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_corpus(buffer.str(), path.string(), vocabulary, options);
}

std::string format_corpus(const std::vector<ParallelPair>& pairs) {
  std::string out;
  for (const ParallelPair& p : pairs) {
    out += join(p.sentence);
    out += '\t';
    out += join(p.glosses);
    out += '\n';
  }
  return out;
}

void write_corpus(const std::filesystem::path& path, const std::vector<ParallelPair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string(), 0, "cannot open for writing");
  out << format_corpus(pairs);
}

DerivationReport derive_all(std::vector<ParallelPair>& pairs, const MinEditOptions& options) {
  DerivationReport report;
  report.pairs = pairs.size();
  std::size_t total_statements = 0;
  std::size_t total_sentence = 0;
  std::size_t total_gloss = 0;
  for (ParallelPair& pair : pairs) {
    pair.minimal_program = minimal_program(pair.sentence, pair.glosses, options);
    const Program& p = *pair.minimal_program;
    for (const Statement& s : p.statements) {
      const auto k = static_cast<std::size_t>(s.kind);
      ++report.statements[k];
      report.applications[k] += static_cast<std::size_t>(s.repetitions);
      if (s.repetitions > 1) ++report.loop_statements;
    }
    total_statements += p.size();
    report.max_program_length = std::max(report.max_program_length, p.size());
    total_sentence += pair.sentence.size();
    total_gloss += pair.glosses.size();
  }
  if (!pairs.empty()) {
    const auto n = static_cast<double>(pairs.size());
    report.mean_program_length = static_cast<double>(total_statements) / n;
    report.mean_sentence_length = static_cast<double>(total_sentence) / n;
    report.mean_gloss_length = static_cast<double>(total_gloss) / n;
  }
  return report;
}

std::string DerivationReport::to_text() const {
  std::ostringstream out;
  out << std::fixed << std::setprecision(3);
  out << "pairs=" << pairs << '\n';
  for (int k = 0; k < kNumActionKinds; ++k) {
    const auto name = to_string(static_cast<ActionKind>(k));
    out << "statements." << name << '=' << statements[static_cast<std::size_t>(k)] << '\n';
    out << "applications." << name << '=' << applications[static_cast<std::size_t>(k)] << '\n';
  }
  out << "loop_statements=" << loop_statements << '\n';
  out << "mean_program_length=" << mean_program_length << '\n';
  out << "max_program_length=" << max_program_length << '\n';
  out << "mean_sentence_length=" << mean_sentence_length << '\n';
  out << "mean_gloss_length=" << mean_gloss_length << '\n';
  return out.str();
}

namespace {

// Platform-independent draws so generated files are byte-identical everywhere.
struct Draw {
  std::mt19937_64 engine;
  double unit() { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine() % n); }
  bool chance(double p) { return p >= 1.0 || unit() < p; }
};

constexpr std::size_t kMarkerTypes = 3;

}  // namespace

std::vector<ParallelPair> generate_synthetic_pairs(const SyntheticConfig& config) {
  if (config.deletion_rate < 0.0 || config.deletion_rate > 1.0 || config.reorder_rate < 0.0 ||
      config.reorder_rate > 1.0 || config.insertion_rate < 0.0 || config.insertion_rate > 1.0) {
    throw std::invalid_argument("synthetic corpus rates must lie in [0, 1]");
  }
  if (config.vocab_size == 0 || config.min_length == 0 || config.min_length > config.max_length) {
    throw std::invalid_argument("synthetic corpus needs vocab_size >= 1 and 1 <= min_length <= max_length");
  }
  Draw draw{std::mt19937_64(config.seed)};
  std::vector<char> dropped(config.vocab_size);
  std::vector<char> mover(config.vocab_size);
  std::vector<char> trigger(config.vocab_size);
  for (std::size_t w = 0; w < config.vocab_size; ++w) {
    dropped[w] = config.deletion_rate > 0.0 && draw.chance(config.deletion_rate);
    mover[w] = config.reorder_rate > 0.0 && draw.chance(config.reorder_rate);
    trigger[w] = config.insertion_rate > 0.0 && draw.chance(config.insertion_rate);
  }

  std::vector<ParallelPair> pairs;
  pairs.reserve(config.size);
  const bool any_kept = std::find(dropped.begin(), dropped.end(), 0) != dropped.end();
  for (std::size_t line = 0; line < config.size; ++line) {
    std::vector<std::size_t> words;
    std::vector<std::size_t> kept;
    // Sentences whose glosses would be empty are redrawn (unless every type is dropped).
    do {
      const std::size_t len = config.min_length + draw.below(config.max_length - config.min_length + 1);
      words.assign(len, 0);
      for (auto& w : words) w = draw.below(config.vocab_size);
      kept.clear();
      for (std::size_t w : words) {
        if (!dropped[w]) kept.push_back(w);
      }
    } while (kept.empty() && any_kept);
    for (std::size_t i = 1; i < kept.size(); ++i) {
      if (mover[kept[i]] && !mover[kept[i - 1]]) std::swap(kept[i - 1], kept[i]);
    }
    ParallelPair pair;
    for (std::size_t w : words) pair.sentence.push_back(Token{"w" + std::to_string(w), kUnmappedId});
    for (std::size_t w : kept) {
      pair.glosses.push_back(Token{"w" + std::to_string(w), kUnmappedId});
      if (trigger[w]) pair.glosses.push_back(Token{"x" + std::to_string(w % kMarkerTypes), kUnmappedId});
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::string make_synthetic_corpus(const SyntheticConfig& config) {
  return format_corpus(generate_synthetic_pairs(config));
}

}  // namespace editgloss
