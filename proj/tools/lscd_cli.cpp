// lscd: command-line driver for the change-detection pipeline.
//
// Every subcommand except gen-bench reads an INI config (--config). The
// step-by-step subcommands exchange files under output_dir:
//   ingest/summary.tsv
//   static/t1.vec static/t2.vec
//   align/t1.vec align/t2.vec align/rotation.tsv
//   clf/dataset.tsv clf/classifier.txt clf/metrics.tsv
//   uses/uses.tsv
//   scores.tsv, answer/task{1,2}/..., eval.tsv
// run-all does the same work in one process with content-hashed caches.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <unordered_set>

#include "lscd/align.hpp"
#include "lscd/context.hpp"
#include "lscd/corpus.hpp"
#include "lscd/ensemble.hpp"
#include "lscd/error.hpp"
#include "lscd/eval.hpp"
#include "lscd/pipeline.hpp"
#include "lscd/rng.hpp"
#include "lscd/scoring.hpp"
#include "lscd/sgns.hpp"
#include "lscd/text.hpp"

namespace fs = std::filesystem;
using namespace lscd;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
  std::optional<double> theta;
  bool no_mask = false;
  std::optional<std::uint64_t> pair_budget;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "pipeline config (INI)")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "global seed");
  sub->add_flag("--deterministic", o.deterministic, "single worker everywhere");
  sub->add_option("--theta", o.theta, "fixed ensemble weight in [0, 1]");
  sub->add_flag("--no-mask", o.no_mask, "keep corpus-unique tokens in the classification data");
  sub->add_option("--pair-budget", o.pair_budget, "sample at most N pairs per MPE distance (0: exact)");
}

PipelineConfig resolve(const Overrides& o) {
  PipelineConfig c = load_pipeline_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.deterministic) c.deterministic = true;
  if (o.theta) c.theta = *o.theta;
  if (o.no_mask) c.masked = false;
  if (o.pair_budget) c.pair_budget = *o.pair_budget;
  if (c.deterministic) c.sgns.workers = 1;
  c.validate();
  return c;
}

fs::path step_path(const PipelineConfig& c, const std::string& rel) {
  const fs::path p = fs::path(c.output_dir) / rel;
  fs::create_directories(p.parent_path());
  return p;
}

std::string kv(const std::string& k, const std::string& v) { return k + "\t" + v + "\n"; }

struct Inputs {
  Corpus t1, t2;
  TargetList targets;
};

Inputs ingest(const PipelineConfig& c) {
  Inputs in{load_corpus(c.corpus_t1, Period::T1), load_corpus(c.corpus_t2, Period::T2), load_targets(c.targets)};
  if (in.targets.size() == 0) throw InvalidArgument("target list is empty");
  return in;
}

void cmd_ingest(const PipelineConfig& c) {
  const auto in = ingest(c);
  const auto threshold = frequency_threshold(in.t1.sentence_count() + in.t2.sentence_count());
  const auto vocab = Vocabulary::build(in.t1, in.t2);
  std::size_t present = 0;
  for (const auto& w : in.targets.words()) present += vocab.id(w).has_value();
  std::string out = "metric\tvalue\n";
  out += kv("t1_sentences", std::to_string(in.t1.sentence_count()));
  out += kv("t2_sentences", std::to_string(in.t2.sentence_count()));
  out += kv("t1_tokens", std::to_string(in.t1.token_count()));
  out += kv("t2_tokens", std::to_string(in.t2.token_count()));
  out += kv("vocabulary", std::to_string(vocab.size()));
  out += kv("targets", std::to_string(in.targets.size()));
  out += kv("targets_in_vocabulary", std::to_string(present));
  out += kv("frequency_threshold", threshold ? std::to_string(*threshold) : "none");
  write_file(step_path(c, "ingest/summary.tsv").string(), out);
  std::cout << out;
}

void cmd_train_static(const PipelineConfig& c) {
  auto in = ingest(c);
  if (const auto th = frequency_threshold(in.t1.sentence_count() + in.t2.sentence_count())) {
    const auto vocab = Vocabulary::build(in.t1, in.t2);
    in.t1 = apply_threshold(in.t1, vocab, *th, in.targets);
    in.t2 = apply_threshold(in.t2, vocab, *th, in.targets);
  }
  for (const auto& [corpus, stream, name] : {std::tuple{&in.t1, SeedStream::SgnsT1, "t1"},
                                             std::tuple{&in.t2, SeedStream::SgnsT2, "t2"}}) {
    SgnsConfig sc = c.sgns;
    sc.seed = stage_seed(c.seed, stream);
    const auto space = train_sgns(*corpus, sc);
    save_embeddings(space, step_path(c, std::string("static/") + name + ".vec").string());
    std::cout << name << ": " << space.size() << " words, final loss "
              << (space.epoch_losses.empty() ? 0.0 : space.epoch_losses.back()) << "\n";
  }
}

void cmd_align(const PipelineConfig& c) {
  const auto t1 = load_embeddings(step_path(c, "static/t1.vec").string());
  const auto t2 = load_embeddings(step_path(c, "static/t2.vec").string());
  const auto pair = align_spaces(t1, t2, c.align);
  save_embeddings(pair.space_t1, step_path(c, "align/t1.vec").string());
  save_embeddings(pair.space_t2, step_path(c, "align/t2.vec").string());
  save_rotation_tsv(pair.rotation, step_path(c, "align/rotation.tsv").string());
  std::cout << "aligned over " << pair.shared_vocabulary.size() << " shared words (" << pair.svd_sweeps
            << " SVD sweeps)\n";
}

void cmd_build_clf(const PipelineConfig& c) {
  const auto in = ingest(c);
  ClfDatasetOptions opts;
  opts.masked = c.masked;
  const auto ds = build_clf_dataset(in.t1, in.t2, opts, stage_seed(c.seed, SeedStream::Dataset));
  export_dataset_tsv(ds, step_path(c, "clf/dataset.tsv").string());
  std::cout << ds.count(Split::Train) << " train / " << ds.count(Split::Test) << " test examples, "
            << ds.masked_words.size() << " masked word types\n";
}

std::string format_metrics(const ClfMetrics& m) {
  std::string out;
  out += kv("accuracy", format_double(m.accuracy));
  out += kv("accuracy_t1", format_double(m.accuracy_t1));
  out += kv("accuracy_t2", format_double(m.accuracy_t2));
  out += kv("test_examples", std::to_string(m.test_examples));
  out += kv("train_examples", std::to_string(m.train_examples));
  out += kv("mean_train_loss", format_double(m.mean_train_loss));
  return out;
}

void cmd_train_clf(const PipelineConfig& c) {
  const auto ds = import_dataset_tsv(step_path(c, "clf/dataset.tsv").string());
  EncoderConfig ec = c.encoder;
  ec.seed = stage_seed(c.seed, SeedStream::Encoder);
  const auto [model, metrics] = train_time_classifier(ds, ec);
  save_classifier(model, step_path(c, "clf/classifier.txt").string());
  write_file(step_path(c, "clf/metrics.tsv").string(), format_metrics(metrics));
  std::cout << "held-out accuracy " << format_double(metrics.accuracy) << " on " << metrics.test_examples
            << " examples\n";
}

void cmd_extract(const PipelineConfig& c) {
  const auto in = ingest(c);
  const auto ds = import_dataset_tsv(step_path(c, "clf/dataset.tsv").string());
  const auto model = load_classifier(step_path(c, "clf/classifier.txt").string());
  const std::unordered_set<std::string> masked(ds.masked_words.begin(), ds.masked_words.end());
  std::vector<UseSet> uses;
  for (const Corpus* corpus : {&in.t1, &in.t2}) {
    const Corpus view = ds.masked ? mask_corpus(*corpus, masked, ds.mask_token) : *corpus;
    auto u = extract_uses(model, view, in.targets);
    uses.insert(uses.end(), std::make_move_iterator(u.begin()), std::make_move_iterator(u.end()));
  }
  export_uses(uses, step_path(c, "uses/uses.tsv").string());
  std::size_t rows = 0;
  for (const auto& u : uses) rows += u.size();
  std::cout << rows << " use vectors for " << in.targets.size() << " targets\n";
}

void cmd_score(const PipelineConfig& c) {
  const auto targets = load_targets(c.targets);
  AlignedPair pair;
  pair.space_t1 = load_embeddings(step_path(c, "align/t1.vec").string());
  pair.space_t2 = load_embeddings(step_path(c, "align/t2.vec").string());
  pair.rotation = load_rotation_tsv(step_path(c, "align/rotation.tsv").string());
  const auto cf = static_score(pair, targets);

  std::vector<UseSet> u1, u2;
  for (auto& u : import_uses(step_path(c, "uses/uses.tsv").string())) {
    (u.period == Period::T1 ? u1 : u2).push_back(std::move(u));
  }
  const auto cd = contextual_score(u1, u2, targets, PairBudget{c.pair_budget, stage_seed(c.seed, SeedStream::Pairs)});
  const std::vector<ChangeScores> both{cf, cd};
  save_scores_tsv(both, step_path(c, "scores.tsv").string());
  std::cout << "scored " << targets.size() << " targets; unscorable: " << cf.unscorable_count()
            << " context-free, " << cd.unscorable_count() << " context-dependent\n";
}

void cmd_ensemble(const PipelineConfig& c) {
  const auto scores = load_scores_tsv(step_path(c, "scores.tsv").string());
  const ChangeScores* cf = nullptr;
  const ChangeScores* cd = nullptr;
  for (const auto& s : scores) {
    if (s.model == ModelTag::ContextFree) cf = &s;
    if (s.model == ModelTag::ContextDependent) cd = &s;
  }
  if (!cf || !cd) throw FormatError("scores.tsv needs context_free and context_dependent rows");
  Theta theta;
  if (c.theta) {
    theta = manual_theta(*c.theta);
  } else {
    theta = theta_from_accuracy(load_word_values(step_path(c, "clf/metrics.tsv").string()).at("accuracy"));
  }
  const auto r_cf = ranks_from_scores(*cf);
  const auto r_cd = ranks_from_scores(*cd);
  const auto r_circe = combine(r_cf, r_cd, theta);
  write_file(step_path(c, "answer/task2/context_free.txt").string(), format_graded_answer(r_cf));
  write_file(step_path(c, "answer/task2/context_dependent.txt").string(), format_graded_answer(r_cd));
  write_file(step_path(c, "answer/task2/circe.txt").string(), format_graded_answer(r_circe));
  write_file(step_path(c, "answer/task1/circe.txt").string(), format_binary_answer(r_circe, binarize(r_circe)));
  std::cout << "theta " << format_double(theta.value) << " (" << (c.theta ? "manual" : "heuristic") << ")\n";
}

std::map<std::string, double> read_answer(const fs::path& p) { return load_word_values(p.string()); }

void cmd_evaluate(const PipelineConfig& c, const std::string& binary_gold) {
  if (c.gold.empty()) throw InvalidArgument("evaluate needs paths.gold in the config");
  const auto gold = load_gold(c.gold, binary_gold);
  std::string out = "model\tmetric\tvalue\n";
  for (const char* model : {"context_free", "context_dependent", "circe"}) {
    const auto pred = read_answer(fs::path(c.output_dir) / "answer" / "task2" / (std::string(model) + ".txt"));
    Ranking r;
    for (const auto& [w, v] : pred) {
      r.words.push_back(w);
      r.ranks.push_back(v);
    }
    const double rho = spearman(r, gold.graded);
    out += std::string(model) + "\tspearman\t" + format_double(rho) + "\n";
    std::cout << model << ": rho " << format_double(rho) << "\n";
  }
  if (gold.binary) {
    std::map<std::string, bool> pred;
    for (const auto& [w, v] : read_answer(fs::path(c.output_dir) / "answer" / "task1" / "circe.txt")) {
      pred[w] = v == 1.0;
    }
    const double acc = binary_accuracy(pred, *gold.binary);
    out += "circe\taccuracy\t" + format_double(acc) + "\n";
    std::cout << "circe: binary accuracy " << format_double(acc) << "\n";
  }
  write_file(step_path(c, "eval.tsv").string(), out);
}

void cmd_run_all(const PipelineConfig& c) {
  const auto report = run_pipeline(c);
  std::cout << "classifier accuracy " << format_double(report.accuracy) << ", theta " << format_double(report.theta)
            << "\n";
  if (report.static_cache_hit) std::cout << "static embeddings: cached\n";
  if (report.context_cache_hit) std::cout << "use vectors: cached\n";
  if (report.rho_cf) {
    std::cout << "rho context_free " << format_double(*report.rho_cf) << ", context_dependent "
              << format_double(*report.rho_cd) << ", circe " << format_double(*report.rho_circe) << "\n";
  }
  std::cout << "outputs in " << c.output_dir << "\n";
}

struct BenchArgs {
  std::string out;
  std::size_t targets = 8;
  std::size_t sentences = 20'000;
  std::uint64_t seed = 1;
  std::vector<double> degrees;
};

void cmd_gen_bench(const BenchArgs& a) {
  std::vector<double> degrees = a.degrees;
  if (degrees.empty()) {
    for (std::size_t i = 0; i < a.targets; ++i) {
      degrees.push_back(a.targets == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(a.targets - 1));
    }
  }
  const auto bench = generate_shift_benchmark(a.targets, degrees, a.sentences, a.seed);
  const auto files = save_benchmark(bench, a.out);
  std::string ini;
  ini += "[paths]\n";
  ini += "corpus_t1 = t1.txt\ncorpus_t2 = t2.txt\ntargets = targets.txt\ngold = gold.txt\noutput_dir = out\n";
  ini += "\n[run]\nseed = " + std::to_string(a.seed) + "\n";
  write_file((fs::path(a.out) / "config.ini").string(), ini);
  std::cout << "wrote " << files.corpus_t1 << ", " << files.corpus_t2 << ", " << files.targets << ", " << files.gold
            << " and config.ini\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lexical semantic change detection: context-free, context-dependent and ensemble rankings"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Overrides o;
  std::string binary_gold;
  BenchArgs bench;
  std::map<std::string, std::function<void(const PipelineConfig&)>> steps{
      {"ingest", cmd_ingest},
      {"train-static", cmd_train_static},
      {"align", cmd_align},
      {"build-clf", cmd_build_clf},
      {"train-clf", cmd_train_clf},
      {"extract", cmd_extract},
      {"score", cmd_score},
      {"ensemble", cmd_ensemble},
      {"evaluate", [&](const PipelineConfig& c) { cmd_evaluate(c, binary_gold); }},
      {"run-all", cmd_run_all},
  };
  const std::map<std::string, std::string> help{
      {"ingest", "load corpora and targets, print statistics"},
      {"train-static", "train one SGNS space per period"},
      {"align", "normalize, center and rotate the t1 space onto t2"},
      {"build-clf", "build the balanced time classification dataset"},
      {"train-clf", "train the sentence time classifier"},
      {"extract", "write one contextual vector per target occurrence"},
      {"score", "context-free and context-dependent change scores"},
      {"ensemble", "rank, combine and binarize"},
      {"evaluate", "Spearman (and binary accuracy) against gold"},
      {"run-all", "the whole pipeline with cached stages"},
  };
  for (const auto& [name, fn] : steps) {
    auto* sub = app.add_subcommand(name, help.at(name));
    add_common(sub, o);
    if (name == "evaluate") sub->add_option("--binary-gold", binary_gold, "word<TAB>0|1 file")->check(CLI::ExistingFile);
  }
  auto* gen = app.add_subcommand("gen-bench", "write a synthetic benchmark with planted shifts");
  gen->add_option("--out", bench.out, "output directory")->required();
  gen->add_option("--targets", bench.targets, "number of pseudo-targets")->check(CLI::PositiveNumber);
  gen->add_option("--sentences", bench.sentences, "sentences per corpus")->check(CLI::PositiveNumber);
  gen->add_option("--seed", bench.seed, "generator seed");
  gen->add_option("--degrees", bench.degrees, "shift degree per target (default evenly spaced 0..1)");

  CLI11_PARSE(app, argc, argv);

  std::string stage_name = "config";
  try {
    if (gen->parsed()) {
      stage_name = "gen-bench";
      cmd_gen_bench(bench);
      return 0;
    }
    for (const auto& [name, fn] : steps) {
      if (!app.got_subcommand(name)) continue;
      const auto cfg = resolve(o);
      stage_name = name;
      fn(cfg);
    }
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << stage_name << ": " << e.what() << "\n";
    return 2;
  }
  return 0;
}
