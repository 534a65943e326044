// Command-line entry point: stats, train, eval, analyze, sample.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hclm/checkpoint.hpp"
#include "hclm/evaluator.hpp"
#include "hclm/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hclm;

namespace {

constexpr const char* kCodeVersion = "hclm 1.0.0";

// Exit codes: 0 success, 1 usage, 2 I/O, 3 numeric/model failure.
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumeric = 3;

std::string fnv1a64_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file for digest: " + path.string());
  std::uint64_t hash = 1469598103934665603ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ULL;
    }
    if (!in) break;
  }
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << hash;
  return os.str();
}

CorpusFormat parse_format(const std::string& name) {
  if (name == "ptb") return CorpusFormat::Ptb;
  if (name == "raw") return CorpusFormat::Raw;
  throw ConfigError("unknown corpus format: " + name);
}

DocBoundary parse_boundary(const std::string& name, CorpusFormat format) {
  if (name.empty()) return default_boundary(format);
  if (name == "file") return DocBoundary::PerFile;
  if (name == "blank") return DocBoundary::BlankLine;
  throw ConfigError("unknown document boundary: " + name);
}

std::string format_pct(double pct) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << pct << "%";
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write file: " + path.string());
  out << text;
  if (!out) throw IoError("write failure on " + path.string());
}

json config_json(const TrainConfig& c) {
  return json{{"model", c.model},       {"d", c.d},
              {"lr", c.lr},             {"clip", c.clip},
              {"dropout", c.dropout},   {"batch", c.batch},
              {"trunc", c.trunc},       {"cache_size", c.cache_size},
              {"epochs", c.epochs},     {"min_count", c.min_count},
              {"seed", c.seed},         {"threads", c.threads}};
}

TrainConfig manifest_config(const json& j) {
  TrainConfig c;
  c.model = j.at("model").get<std::string>();
  c.d = j.at("d").get<int>();
  c.lr = j.at("lr").get<double>();
  c.clip = j.at("clip").get<double>();
  c.dropout = j.at("dropout").get<double>();
  c.batch = j.at("batch").get<int>();
  c.trunc = j.at("trunc").get<int>();
  c.cache_size = j.at("cache_size").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.min_count = j.at("min_count").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.threads = j.at("threads").get<int>();
  return c;
}

fs::path resolve_run_dir(const std::string& run_dir, const std::string& out_root,
                         std::uint64_t seed) {
  if (!run_dir.empty()) return run_dir;
  fs::path root = out_root;
  if (root.empty()) {
    if (const char* env = std::getenv("HCLM_RUN_DIR")) root = env;
  }
  if (root.empty()) root = "runs";
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream name;
  name << std::put_time(&tm, "%Y%m%d-%H%M%S") << "-seed" << seed;
  return root / name.str();
}

struct CorpusArgs {
  std::string train, dev, test;
  std::string format = "ptb";
  std::string boundary;  // empty -> format default
};

void add_corpus_options(CLI::App* cmd, CorpusArgs& args, bool need_train) {
  auto* train = cmd->add_option("--train", args.train, "training corpus path");
  if (need_train) train->required();
  cmd->add_option("--dev", args.dev, "validation corpus path");
  cmd->add_option("--test", args.test, "test corpus path");
  cmd->add_option("--format", args.format, "corpus format: ptb | raw")
      ->check(CLI::IsMember({"ptb", "raw"}));
  cmd->add_option("--boundary", args.boundary,
                  "document boundary: file | blank (default per format)")
      ->check(CLI::IsMember({"file", "blank"}));
}

void add_config_overrides(CLI::App* cmd,
                          std::vector<std::pair<std::string, std::string>>& kv) {
  static const char* keys[] = {"model",      "d",      "lr",        "clip",
                               "dropout",    "batch",  "trunc",     "cache_size",
                               "epochs",     "min_count", "seed",   "threads"};
  for (const char* key : keys) {
    std::string flag = "--" + std::string(key);
    for (auto& ch : flag)
      if (ch == '_') ch = '-';
    cmd->add_option_function<std::string>(
        flag, [&kv, key](const std::string& value) { kv.emplace_back(key, value); },
        "override config key " + std::string(key));
  }
}

// --- stats -------------------------------------------------------------------

int cmd_stats(const CorpusArgs& corpus, const std::string& reference,
              const std::string& out_path) {
  const CorpusFormat format = parse_format(corpus.format);
  const DocBoundary boundary = parse_boundary(corpus.boundary, format);

  std::optional<std::unordered_set<std::string>> ref_types;
  const std::string ref_path = reference.empty() ? corpus.train : reference;
  if (!ref_path.empty()) ref_types = word_types(load_corpus(ref_path, format, boundary));

  std::ostringstream table;
  table << "split\tchar_types\tword_types\toov_rate\tword_tokens\tcharacters\n";
  auto emit = [&](const std::string& split, const std::string& path, bool against_ref) {
    if (path.empty()) return;
    auto docs = load_corpus(path, format, boundary);
    const auto* ref = (ref_types && against_ref) ? &*ref_types : nullptr;
    CorpusStats s = compute_stats(docs, ref);
    table << split << "\t" << s.char_types << "\t" << s.word_types << "\t"
          << (s.oov_rate_pct ? format_pct(*s.oov_rate_pct) : "-") << "\t" << s.word_tokens
          << "\t" << s.characters << "\n";
  };
  // The training split is the reference, so its OOV column stays empty; dev
  // and test always measure against the reference, even for the same file.
  emit("train", corpus.train, false);
  emit("dev", corpus.dev, true);
  emit("test", corpus.test, true);
  std::cout << table.str();
  if (!out_path.empty()) write_text(out_path, table.str());
  return 0;
}

// --- train -------------------------------------------------------------------

int cmd_train(const std::string& config_path, const std::string& manifest_path,
              const std::vector<std::pair<std::string, std::string>>& overrides,
              CorpusArgs corpus, const std::string& run_dir_flag,
              const std::string& out_root) {
  TrainConfig config;
  if (!manifest_path.empty()) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open manifest: " + manifest_path);
    json manifest;
    try {
      manifest = json::parse(in);
      config = manifest_config(manifest.at("config"));
      corpus.format = manifest.at("corpus_format").get<std::string>();
      corpus.boundary = manifest.at("doc_boundary").get<std::string>();
      const json& paths = manifest.at("corpus");
      corpus.train = paths.at("train").at("path").get<std::string>();
      corpus.dev = paths.contains("dev") ? paths.at("dev").at("path").get<std::string>() : "";
      for (const auto& [split, entry] : paths.items()) {
        const std::string recorded = entry.at("digest").get<std::string>();
        const std::string actual = fnv1a64_file(entry.at("path").get<std::string>());
        if (recorded != actual)
          throw IoError("manifest replay: digest mismatch for " + split + " corpus");
      }
    } catch (const json::exception& e) {
      throw FormatError("corrupt manifest: " + std::string(e.what()));
    }
  } else if (!config_path.empty()) {
    config = parse_config_file(config_path);
  }
  for (const auto& [key, value] : overrides) apply_config_entry(config, key, value);
  if (corpus.train.empty()) throw ConfigError("train: no training corpus given");

  const CorpusFormat format = parse_format(corpus.format);
  const DocBoundary boundary = parse_boundary(corpus.boundary, format);
  const fs::path run_dir = resolve_run_dir(run_dir_flag, out_root, config.seed);
  fs::create_directories(run_dir);

  // Record the manifest before training starts.
  json manifest;
  manifest["format"] = "hclm-run-manifest";
  manifest["version"] = 1;
  manifest["code_version"] = kCodeVersion;
  manifest["config"] = config_json(config);
  manifest["corpus_format"] = corpus.format;
  manifest["doc_boundary"] = boundary == DocBoundary::PerFile ? "file" : "blank";
  json paths;
  paths["train"] = json{{"path", corpus.train}, {"digest", fnv1a64_file(corpus.train)}};
  if (!corpus.dev.empty())
    paths["dev"] = json{{"path", corpus.dev}, {"digest", fnv1a64_file(corpus.dev)}};
  manifest["corpus"] = paths;
  manifest["run_dir"] = run_dir.string();
  write_text(run_dir / "manifest.json", manifest.dump(2) + "\n");
  write_text(run_dir / "config.txt", config_to_text(config));

  auto train_docs = load_corpus(corpus.train, format, boundary);
  std::vector<Document> dev_docs;
  if (!corpus.dev.empty()) dev_docs = load_corpus(corpus.dev, format, boundary);

  std::ostringstream log;
  log << "epoch\ttrain_bpc\tdev_bpc\twall_seconds\n";
  std::cout << "epoch\ttrain_bpc\tdev_bpc\twall_seconds\n";

  TrainResult result = train(config, train_docs, dev_docs);
  for (const EpochLog& e : result.log) {
    std::ostringstream line;
    line << e.epoch << "\t" << std::setprecision(6) << std::fixed << e.train_bpc << "\t"
         << e.dev_bpc << "\t" << std::setprecision(1) << e.wall_seconds << "\n";
    log << line.str();
    std::cout << line.str() << std::flush;
  }
  write_text(run_dir / "train_log.tsv", log.str());
  save_checkpoint(run_dir / "checkpoint.hclm", result.best);
  std::cout << "best epoch " << result.best_epoch << ", dev bpc " << std::setprecision(6)
            << std::fixed << result.best_dev_bpc << "\n"
            << "checkpoint: " << (run_dir / "checkpoint.hclm").string() << "\n";
  return 0;
}

// --- eval --------------------------------------------------------------------

std::string report_tsv(const EvalReport& r) {
  std::ostringstream os;
  os << "nll_nats\tcharacters\ttokens\tbpc\tword_perplexity\n";
  os << std::setprecision(12) << r.nll_nats << "\t" << r.characters << "\t" << r.tokens
     << "\t" << r.bpc << "\t" << r.word_perplexity << "\n";
  return os.str();
}

int cmd_eval(const std::string& checkpoint_path, const std::string& corpus_path,
             const CorpusArgs& corpus, std::size_t trunc, int threads,
             const std::string& out_path) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const CorpusFormat format = parse_format(corpus.format);
  auto docs = load_corpus(corpus_path, format, parse_boundary(corpus.boundary, format));
  EvalOptions opts;
  opts.trunc = trunc;
  opts.threads = threads;
  EvalResult res = evaluate(ckpt.model, docs, opts);
  const std::string table = report_tsv(res.report);
  std::cout << table;
  if (!out_path.empty()) write_text(out_path, table);
  return 0;
}

// --- analyze -----------------------------------------------------------------

int cmd_analyze(const std::string& checkpoint_path, const std::string& corpus_path,
                const CorpusArgs& corpus, std::size_t max_train_count, std::size_t top_n,
                const std::string& out_dir, const std::string& steps_path, int threads) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  const CorpusFormat format = parse_format(corpus.format);
  const DocBoundary boundary = parse_boundary(corpus.boundary, format);
  auto docs = load_corpus(corpus_path, format, boundary);

  std::unordered_map<std::string, std::size_t> train_counts;
  std::unordered_set<std::string> train_types;
  if (!corpus.train.empty()) {
    auto train_docs = load_corpus(corpus.train, format, boundary);
    train_counts = word_counts(train_docs);
    train_types = word_types(train_docs);
  }

  EvalOptions opts;
  opts.record_steps = true;
  opts.threads = threads;
  EvalResult res = evaluate(ckpt.model, docs, opts);

  const fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
  fs::create_directories(dir);

  if (!steps_path.empty()) {
    std::ostringstream lines;
    for (const auto& rec : res.steps) {
      json j{{"word", rec.out.word},
             {"doc", rec.doc},
             {"pos", rec.pos},
             {"log_p_lm", rec.out.log_p_lm},
             {"lambda", rec.out.lambda},
             {"log_p_mix", rec.out.log_p_mix},
             {"copied_posterior", rec.out.copied_posterior}};
      j["log_p_ptr"] = std::isfinite(rec.out.log_p_ptr) ? json(rec.out.log_p_ptr)
                                                        : json(nullptr);  // JSON has no -inf
      lines << j.dump() << "\n";
    }
    write_text(steps_path, lines.str());
  }

  auto posteriors = type_posteriors(res.steps, train_counts);
  auto dump_table = [&](const std::vector<TypePosterior>& rows, const fs::path& path) {
    std::ostringstream t;
    t << "word\tcount\ttrain_count\tmean_posterior\n";
    for (const auto& tp : rows)
      t << tp.word << "\t" << tp.count << "\t" << tp.train_count << "\t"
        << std::setprecision(6) << std::fixed << tp.mean_posterior << "\n";
    write_text(path, t.str());
  };
  dump_table(posteriors, dir / "type_posteriors.tsv");
  RareWordTables tables = rare_word_table(posteriors, max_train_count, top_n);
  dump_table(tables.top, dir / "rare_top.tsv");
  dump_table(tables.bottom, dir / "rare_bottom.tsv");

  auto test_counts = word_counts(docs);
  auto scatter = posterior_frequency_scatter(posteriors, test_counts, train_types);
  {
    std::ostringstream t;
    t << "test_frequency\tmean_posterior\n";
    for (const auto& [freq, post] : scatter)
      t << freq << "\t" << std::setprecision(6) << std::fixed << post << "\n";
    write_text(dir / "oov_scatter.tsv", t.str());
  }
  std::cout << "analyzed " << res.steps.size() << " tokens, " << posteriors.size()
            << " repeated types, " << scatter.size() << " OOV scatter points\n"
            << "reports in " << dir.string() << "\n";
  return 0;
}

// --- sample ------------------------------------------------------------------

int cmd_sample(const std::string& checkpoint_path, int n_words, double temperature,
               std::uint64_t seed, int max_word_len) {
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  Rng rng(seed);
  auto words = sample_text(ckpt.model, n_words, temperature, max_word_len, rng);
  for (std::size_t i = 0; i < words.size(); ++i) {
    std::cout << words[i];
    std::cout << ((i + 1) % 20 == 0 || i + 1 == words.size() ? '\n' : ' ');
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical character-level language model with a word cache"};
  app.require_subcommand(1);

  // stats
  auto* stats = app.add_subcommand("stats", "corpus statistics per split");
  CorpusArgs stats_corpus;
  std::string stats_reference, stats_out;
  add_corpus_options(stats, stats_corpus, false);
  stats->add_option("--reference", stats_reference,
                    "reference training corpus for OOV rates (default: --train)");
  stats->add_option("--out", stats_out, "write the report to this file");

  // train
  auto* tr = app.add_subcommand("train", "train a model");
  CorpusArgs train_corpus;
  std::string config_path, manifest_path, run_dir, out_root;
  std::vector<std::pair<std::string, std::string>> overrides;
  tr->add_option("--config", config_path, "config file (key = value lines)");
  tr->add_option("--manifest", manifest_path, "replay a recorded run manifest");
  add_corpus_options(tr, train_corpus, false);
  add_config_overrides(tr, overrides);
  tr->add_option("--run-dir", run_dir, "exact output directory");
  tr->add_option("--out-root", out_root,
                 "base directory for timestamped runs (default $HCLM_RUN_DIR or ./runs)");

  // eval
  auto* ev = app.add_subcommand("eval", "bits-per-character evaluation");
  CorpusArgs eval_corpus;
  std::string eval_ckpt, eval_path, eval_out;
  std::size_t eval_trunc = 0;
  int eval_threads = 1;
  ev->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
  ev->add_option("--corpus", eval_path, "corpus to score")->required();
  ev->add_option("--format", eval_corpus.format, "corpus format: ptb | raw")
      ->check(CLI::IsMember({"ptb", "raw"}));
  ev->add_option("--boundary", eval_corpus.boundary, "document boundary: file | blank")
      ->check(CLI::IsMember({"file", "blank"}));
  ev->add_option("--trunc", eval_trunc, "evaluate in carried segments of this many words");
  ev->add_option("--threads", eval_threads, "parallel documents (default 1)");
  ev->add_option("--out", eval_out, "write the report to this file");

  // analyze
  auto* an = app.add_subcommand("analyze", "cache-usage posterior analyses");
  CorpusArgs analyze_corpus;
  std::string an_ckpt, an_path, an_out_dir, an_steps;
  std::size_t an_max_train = 5, an_top = 20;
  int an_threads = 1;
  an->add_option("--checkpoint", an_ckpt, "model checkpoint")->required();
  an->add_option("--corpus", an_path, "corpus to analyze")->required();
  add_corpus_options(an, analyze_corpus, false);
  an->add_option("--max-train-count", an_max_train,
                 "rare-word filter: train count strictly below this");
  an->add_option("--top-n", an_top, "rows per ranked table");
  an->add_option("--out-dir", an_out_dir, "directory for the TSV reports");
  an->add_option("--steps", an_steps, "write per-token records as JSON lines");
  an->add_option("--threads", an_threads, "parallel documents (default 1)");

  // sample
  auto* sa = app.add_subcommand("sample", "generate text from a checkpoint");
  std::string sa_ckpt;
  int sa_words = 100, sa_maxlen = 30;
  double sa_temp = 1.0;
  std::uint64_t sa_seed = 1;
  sa->add_option("--checkpoint", sa_ckpt, "model checkpoint")->required();
  sa->add_option("--num-words", sa_words, "words to generate");
  sa->add_option("--temperature", sa_temp, "softmax temperature; 0 = argmax");
  sa->add_option("--seed", sa_seed, "sampling seed");
  sa->add_option("--max-word-len", sa_maxlen, "character cap per word");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (stats->parsed()) return cmd_stats(stats_corpus, stats_reference, stats_out);
    if (tr->parsed())
      return cmd_train(config_path, manifest_path, overrides, train_corpus, run_dir, out_root);
    if (ev->parsed())
      return cmd_eval(eval_ckpt, eval_path, eval_corpus, eval_trunc, eval_threads, eval_out);
    if (an->parsed())
      return cmd_analyze(an_ckpt, an_path, analyze_corpus, an_max_train, an_top, an_out_dir,
                         an_steps, an_threads);
    if (sa->parsed()) return cmd_sample(sa_ckpt, sa_words, sa_temp, sa_seed, sa_maxlen);
  } catch (const ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitUsage;
}
