#include "lscd/pipeline.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_set>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "lscd/ensemble.hpp"
#include "lscd/eval.hpp"
#include "lscd/rng.hpp"
#include "lscd/text.hpp"

namespace fs = std::filesystem;

namespace lscd {

namespace {

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw InvalidArgument("config key '" + key + "' expects a boolean, got '" + v + "'");
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

}  // namespace

std::uint64_t stage_seed(std::uint64_t seed, SeedStream stream) {
  return derive_seed(seed, static_cast<std::uint64_t>(stream));
}

void PipelineConfig::validate() const {
  for (const auto& [name, p] : {std::pair<const char*, const std::string&>{"paths.corpus_t1", corpus_t1},
                                {"paths.corpus_t2", corpus_t2},
                                {"paths.targets", targets}}) {
    if (p.empty()) throw InvalidArgument(std::string(name) + " is required");
    if (!fs::exists(p)) throw InvalidArgument(std::string(name) + " does not exist: " + p);
  }
  if (!gold.empty() && !fs::exists(gold)) throw InvalidArgument("paths.gold does not exist: " + gold);
  if (output_dir.empty()) throw InvalidArgument("paths.output_dir is required");
  sgns.validate();
  encoder.validate();
  if (theta && !(*theta >= 0.0 && *theta <= 1.0)) throw InvalidArgument("ensemble.theta must lie in [0, 1]");
}

std::string PipelineConfig::manifest() const {
  std::map<std::string, std::string> kv;
  kv["paths.corpus_t1"] = corpus_t1;
  kv["paths.corpus_t2"] = corpus_t2;
  kv["paths.targets"] = targets;
  kv["paths.gold"] = gold;
  kv["sgns.dimension"] = std::to_string(sgns.dimension);
  kv["sgns.window"] = std::to_string(sgns.window);
  kv["sgns.negatives"] = std::to_string(sgns.negatives);
  kv["sgns.epochs"] = std::to_string(sgns.epochs);
  kv["sgns.learning_rate"] = format_double(sgns.initial_learning_rate);
  kv["sgns.min_learning_rate_fraction"] = format_double(sgns.min_learning_rate_fraction);
  kv["sgns.noise_exponent"] = format_double(sgns.noise_exponent);
  kv["sgns.subsample_threshold"] = sgns.subsample_threshold ? format_double(*sgns.subsample_threshold) : "none";
  kv["sgns.workers"] = std::to_string(deterministic ? 1 : sgns.workers);
  kv["align.normalize"] = bool_str(align.normalize);
  kv["align.center"] = bool_str(align.center);
  kv["align.renormalize"] = bool_str(align.renormalize);
  kv["encoder.dimension"] = std::to_string(encoder.dimension);
  kv["encoder.context_radius"] = std::to_string(encoder.context_radius);
  kv["encoder.epochs"] = std::to_string(encoder.epochs);
  kv["encoder.learning_rate"] = format_double(encoder.learning_rate);
  kv["encoder.min_learning_rate_fraction"] = format_double(encoder.min_learning_rate_fraction);
  kv["dataset.masked"] = bool_str(masked);
  kv["scoring.pair_budget"] = std::to_string(pair_budget);
  kv["ensemble.theta"] = theta ? format_double(*theta) : "heuristic";
  kv["run.seed"] = std::to_string(seed);
  kv["run.deterministic"] = bool_str(deterministic);
  kv["seed.sgns_t1"] = std::to_string(stage_seed(seed, SeedStream::SgnsT1));
  kv["seed.sgns_t2"] = std::to_string(stage_seed(seed, SeedStream::SgnsT2));
  kv["seed.dataset"] = std::to_string(stage_seed(seed, SeedStream::Dataset));
  kv["seed.encoder"] = std::to_string(stage_seed(seed, SeedStream::Encoder));
  kv["seed.pairs"] = std::to_string(stage_seed(seed, SeedStream::Pairs));
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

PipelineConfig parse_pipeline_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw FormatError(e.message(), e.line());
  }

  PipelineConfig c;
  auto as_int = [](const std::string& k, const std::string& v) {
    try {
      return static_cast<int>(parse_int(v));
    } catch (const FormatError&) {
      throw InvalidArgument("config key '" + k + "' expects an integer, got '" + v + "'");
    }
  };
  auto as_double = [](const std::string& k, const std::string& v) {
    try {
      return parse_double(v);
    } catch (const FormatError&) {
      throw InvalidArgument("config key '" + k + "' expects a number, got '" + v + "'");
    }
  };
  std::map<std::string, std::function<void(const std::string&, const std::string&)>> keys{
      {"paths.corpus_t1", [&](auto&, auto& v) { c.corpus_t1 = v; }},
      {"paths.corpus_t2", [&](auto&, auto& v) { c.corpus_t2 = v; }},
      {"paths.targets", [&](auto&, auto& v) { c.targets = v; }},
      {"paths.gold", [&](auto&, auto& v) { c.gold = v; }},
      {"paths.output_dir", [&](auto&, auto& v) { c.output_dir = v; }},
      {"sgns.dimension", [&](auto& k, auto& v) { c.sgns.dimension = as_int(k, v); }},
      {"sgns.window", [&](auto& k, auto& v) { c.sgns.window = as_int(k, v); }},
      {"sgns.negatives", [&](auto& k, auto& v) { c.sgns.negatives = as_int(k, v); }},
      {"sgns.epochs", [&](auto& k, auto& v) { c.sgns.epochs = as_int(k, v); }},
      {"sgns.learning_rate", [&](auto& k, auto& v) { c.sgns.initial_learning_rate = as_double(k, v); }},
      {"sgns.min_learning_rate_fraction", [&](auto& k, auto& v) { c.sgns.min_learning_rate_fraction = as_double(k, v); }},
      {"sgns.noise_exponent", [&](auto& k, auto& v) { c.sgns.noise_exponent = as_double(k, v); }},
      {"sgns.subsample_threshold",
       [&](auto& k, auto& v) {
         if (v == "none" || v.empty()) {
           c.sgns.subsample_threshold.reset();
         } else {
           c.sgns.subsample_threshold = as_double(k, v);
         }
       }},
      {"sgns.workers", [&](auto& k, auto& v) { c.sgns.workers = as_int(k, v); }},
      {"align.normalize", [&](auto& k, auto& v) { c.align.normalize = parse_bool(k, v); }},
      {"align.center", [&](auto& k, auto& v) { c.align.center = parse_bool(k, v); }},
      {"align.renormalize", [&](auto& k, auto& v) { c.align.renormalize = parse_bool(k, v); }},
      {"encoder.dimension", [&](auto& k, auto& v) { c.encoder.dimension = as_int(k, v); }},
      {"encoder.context_radius", [&](auto& k, auto& v) { c.encoder.context_radius = as_int(k, v); }},
      {"encoder.epochs", [&](auto& k, auto& v) { c.encoder.epochs = as_int(k, v); }},
      {"encoder.learning_rate", [&](auto& k, auto& v) { c.encoder.learning_rate = as_double(k, v); }},
      {"encoder.min_learning_rate_fraction",
       [&](auto& k, auto& v) { c.encoder.min_learning_rate_fraction = as_double(k, v); }},
      {"dataset.masked", [&](auto& k, auto& v) { c.masked = parse_bool(k, v); }},
      {"scoring.pair_budget", [&](auto& k, auto& v) { c.pair_budget = static_cast<std::uint64_t>(as_int(k, v)); }},
      {"ensemble.theta",
       [&](auto& k, auto& v) {
         if (v == "heuristic" || v.empty()) {
           c.theta.reset();
         } else {
           c.theta = as_double(k, v);
         }
       }},
      {"run.seed", [&](auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(as_int(k, v)); }},
      {"run.deterministic", [&](auto& k, auto& v) { c.deterministic = parse_bool(k, v); }},
      {"run.cache", [&](auto& k, auto& v) { c.use_cache = parse_bool(k, v); }},
  };

  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw InvalidArgument("config key '" + section + "' must appear inside a [section]");
    }
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      auto it = keys.find(full);
      if (it == keys.end()) throw InvalidArgument("unknown config key '" + full + "'");
      it->second(full, std::string(trim(value.data())));
    }
  }
  return c;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  auto c = parse_pipeline_config(read_file(path));
  // relative paths are taken relative to the config file
  const fs::path base = fs::path(path).parent_path();
  for (auto* p : {&c.corpus_t1, &c.corpus_t2, &c.targets, &c.gold, &c.output_dir}) {
    if (!p->empty() && fs::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  }
  return c;
}

namespace {

template <typename F>
auto stage(const char* name, F&& f) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

bool cache_ready(const fs::path& dir) { return fs::exists(dir / kCompleteSentinel); }

void mark_ready(const fs::path& dir) { write_file((dir / kCompleteSentinel).string(), ""); }

std::string metrics_line(const std::string& k, const std::string& v) { return k + "\t" + v + "\n"; }

}  // namespace

RunReport run_pipeline(const PipelineConfig& input) {
  PipelineConfig cfg = input;
  stage("config", [&] {
    cfg.validate();
    return 0;
  });
  if (cfg.deterministic) cfg.sgns.workers = 1;

  const fs::path out = cfg.output_dir;
  stage("output", [&] {
    fs::create_directories(out);
    fs::remove(out / kCompleteSentinel);
    return 0;
  });

  RunReport report;
  struct Inputs {
    Corpus t1, t2;
    TargetList targets;
    std::string fp;
  };
  auto in = stage("ingest", [&] {
    Inputs x;
    const std::string raw1 = read_file(cfg.corpus_t1);
    const std::string raw2 = read_file(cfg.corpus_t2);
    const std::string rawt = read_file(cfg.targets);
    x.t1 = parse_corpus(raw1, Period::T1);
    x.t2 = parse_corpus(raw2, Period::T2);
    x.targets = load_targets(cfg.targets);
    if (x.targets.size() == 0) throw InvalidArgument("target list is empty");
    x.fp = Fingerprint().add(raw1).add(raw2).add(rawt).hex();
    return x;
  });

  // context-free model
  const auto threshold = frequency_threshold(in.t1.sentence_count() + in.t2.sentence_count());
  if (threshold) report.threshold = static_cast<double>(*threshold);

  std::string static_key;
  {
    Fingerprint fp;
    fp.add(kVersion).add(in.fp).add(static_cast<std::uint64_t>(threshold.value_or(0)));
    fp.add(static_cast<std::uint64_t>(cfg.sgns.dimension)).add(static_cast<std::uint64_t>(cfg.sgns.window));
    fp.add(static_cast<std::uint64_t>(cfg.sgns.negatives)).add(static_cast<std::uint64_t>(cfg.sgns.epochs));
    fp.add(cfg.sgns.initial_learning_rate).add(cfg.sgns.min_learning_rate_fraction).add(cfg.sgns.noise_exponent);
    fp.add(cfg.sgns.subsample_threshold.value_or(-1.0)).add(static_cast<std::uint64_t>(cfg.sgns.workers));
    fp.add(cfg.seed);
    static_key = fp.hex();
  }
  const fs::path static_dir = out / "static" / static_key;
  EmbeddingSpace space_t1, space_t2;
  if (cfg.use_cache && cfg.sgns.workers == 1 && cache_ready(static_dir)) {
    stage("train-static", [&] {
      space_t1 = load_embeddings((static_dir / "t1.vec").string());
      space_t2 = load_embeddings((static_dir / "t2.vec").string());
      return 0;
    });
    report.static_cache_hit = true;
  } else {
    stage("threshold", [&] {
      if (threshold) {
        const auto vocab = Vocabulary::build(in.t1, in.t2);
        in.t1 = apply_threshold(in.t1, vocab, *threshold, in.targets);
        in.t2 = apply_threshold(in.t2, vocab, *threshold, in.targets);
      }
      return 0;
    });
    stage("train-static", [&] {
      SgnsConfig c1 = cfg.sgns, c2 = cfg.sgns;
      c1.seed = stage_seed(cfg.seed, SeedStream::SgnsT1);
      c2.seed = stage_seed(cfg.seed, SeedStream::SgnsT2);
      space_t1 = train_sgns(in.t1, c1);
      space_t2 = train_sgns(in.t2, c2);
      fs::create_directories(static_dir);
      save_embeddings(space_t1, (static_dir / "t1.vec").string());
      save_embeddings(space_t2, (static_dir / "t2.vec").string());
      mark_ready(static_dir);
      return 0;
    });
    // scoring must not depend on whether the spaces came from the cache
    space_t1 = load_embeddings((static_dir / "t1.vec").string());
    space_t2 = load_embeddings((static_dir / "t2.vec").string());
  }

  auto aligned = stage("align", [&] {
    auto a = align_spaces(space_t1, space_t2, cfg.align);
    fs::create_directories(out / "align");
    save_rotation_tsv(a.rotation, (out / "align" / "rotation.tsv").string());
    return a;
  });
  auto cf_scores = stage("score-static", [&] { return static_score(aligned, in.targets); });

  // context-dependent model; corpora are reloaded unthresholded
  Corpus raw_t1 = parse_corpus(read_file(cfg.corpus_t1), Period::T1);
  Corpus raw_t2 = parse_corpus(read_file(cfg.corpus_t2), Period::T2);

  std::string context_key;
  {
    Fingerprint fp;
    fp.add(kVersion).add(in.fp).add(static_cast<std::uint64_t>(cfg.masked));
    fp.add(static_cast<std::uint64_t>(cfg.encoder.dimension)).add(static_cast<std::uint64_t>(cfg.encoder.context_radius));
    fp.add(static_cast<std::uint64_t>(cfg.encoder.epochs)).add(cfg.encoder.learning_rate);
    fp.add(cfg.encoder.min_learning_rate_fraction).add(cfg.seed);
    context_key = fp.hex();
  }
  const fs::path context_dir = out / "context" / context_key;
  std::vector<UseSet> uses;
  ClfMetrics metrics;
  if (cfg.use_cache && cache_ready(context_dir)) {
    stage("extract", [&] {
      uses = import_uses((context_dir / "uses.tsv").string());
      const auto m = load_word_values((context_dir / "classifier.tsv").string());
      metrics.accuracy = m.at("accuracy");
      metrics.accuracy_t1 = m.at("accuracy_t1");
      metrics.accuracy_t2 = m.at("accuracy_t2");
      metrics.test_examples = static_cast<std::size_t>(m.at("test_examples"));
      metrics.train_examples = static_cast<std::size_t>(m.at("train_examples"));
      metrics.mean_train_loss = m.at("mean_train_loss");
      return 0;
    });
    report.context_cache_hit = true;
  } else {
    auto dataset = stage("build-clf", [&] {
      ClfDatasetOptions opts;
      opts.masked = cfg.masked;
      auto ds = build_clf_dataset(raw_t1, raw_t2, opts, stage_seed(cfg.seed, SeedStream::Dataset));
      fs::create_directories(context_dir);
      export_dataset_tsv(ds, (context_dir / "dataset.tsv").string());
      return ds;
    });
    auto trained = stage("train-clf", [&] {
      EncoderConfig ec = cfg.encoder;
      ec.seed = stage_seed(cfg.seed, SeedStream::Encoder);
      return train_time_classifier(dataset, ec);
    });
    const TimeClassifier& model = trained.first;
    metrics = trained.second;
    stage("extract", [&] {
      std::unordered_set<std::string> masked(dataset.masked_words.begin(), dataset.masked_words.end());
      for (const Corpus* c : {&raw_t1, &raw_t2}) {
        const Corpus view = dataset.masked ? mask_corpus(*c, masked, dataset.mask_token) : *c;
        auto u = extract_uses(model, view, in.targets);
        uses.insert(uses.end(), std::make_move_iterator(u.begin()), std::make_move_iterator(u.end()));
      }
      export_uses(uses, (context_dir / "uses.tsv").string());
      std::string clf;
      clf += metrics_line("accuracy", format_double(metrics.accuracy));
      clf += metrics_line("accuracy_t1", format_double(metrics.accuracy_t1));
      clf += metrics_line("accuracy_t2", format_double(metrics.accuracy_t2));
      clf += metrics_line("test_examples", std::to_string(metrics.test_examples));
      clf += metrics_line("train_examples", std::to_string(metrics.train_examples));
      clf += metrics_line("mean_train_loss", format_double(metrics.mean_train_loss));
      write_file((context_dir / "classifier.tsv").string(), clf);
      mark_ready(context_dir);
      // same float values as a cache hit would produce
      uses = import_uses((context_dir / "uses.tsv").string());
      return 0;
    });
  }

  auto cd_scores = stage("score-context", [&] {
    std::vector<UseSet> u1, u2;
    for (const auto& u : uses) (u.period == Period::T1 ? u1 : u2).push_back(u);
    return contextual_score(u1, u2, in.targets, PairBudget{cfg.pair_budget, stage_seed(cfg.seed, SeedStream::Pairs)});
  });

  report.accuracy = metrics.accuracy;
  report.unscorable_cf = cf_scores.unscorable_count();
  report.unscorable_cd = cd_scores.unscorable_count();

  stage("ensemble", [&] {
    const Theta theta = cfg.theta ? manual_theta(*cfg.theta) : theta_from_accuracy(metrics.accuracy);
    report.theta = theta.value;
    const auto r_cf = ranks_from_scores(cf_scores);
    const auto r_cd = ranks_from_scores(cd_scores);
    const auto r_circe = combine(r_cf, r_cd, theta);
    const auto labels = binarize(r_circe);

    fs::create_directories(out / "answer" / "task1");
    fs::create_directories(out / "answer" / "task2");
    auto put = [&](const fs::path& p, const std::string& s) {
      write_file(p.string(), s);
      report.written.push_back(p.string());
    };
    put(out / "answer" / "task2" / "context_free.txt", format_graded_answer(r_cf));
    put(out / "answer" / "task2" / "context_dependent.txt", format_graded_answer(r_cd));
    put(out / "answer" / "task2" / "circe.txt", format_graded_answer(r_circe));
    put(out / "answer" / "task1" / "circe.txt", format_binary_answer(r_circe, labels));

    const std::vector<ChangeScores> both{cf_scores, cd_scores};
    put(out / "scores.tsv", format_scores_tsv(both));

    if (!cfg.gold.empty()) {
      const auto gold = load_word_values(cfg.gold);
      report.rho_cf = spearman(r_cf, gold);
      report.rho_cd = spearman(r_cd, gold);
      report.rho_circe = spearman(r_circe, gold);
    }

    std::string metrics_tsv = "metric\tvalue\n";
    metrics_tsv += metrics_line("clf_accuracy", format_double(metrics.accuracy));
    metrics_tsv += metrics_line("clf_accuracy_t1", format_double(metrics.accuracy_t1));
    metrics_tsv += metrics_line("clf_accuracy_t2", format_double(metrics.accuracy_t2));
    metrics_tsv += metrics_line("clf_test_examples", std::to_string(metrics.test_examples));
    metrics_tsv += metrics_line("clf_train_examples", std::to_string(metrics.train_examples));
    metrics_tsv += metrics_line("theta", format_double(theta.value));
    metrics_tsv += metrics_line("theta_source", cfg.theta ? "manual" : "heuristic");
    metrics_tsv += metrics_line("frequency_threshold", threshold ? std::to_string(*threshold) : "none");
    metrics_tsv += metrics_line("shared_vocabulary", std::to_string(aligned.shared_vocabulary.size()));
    metrics_tsv += metrics_line("unscorable_context_free", std::to_string(report.unscorable_cf));
    metrics_tsv += metrics_line("unscorable_context_dependent", std::to_string(report.unscorable_cd));
    if (report.rho_cf) {
      metrics_tsv += metrics_line("spearman_context_free", format_double(*report.rho_cf));
      metrics_tsv += metrics_line("spearman_context_dependent", format_double(*report.rho_cd));
      metrics_tsv += metrics_line("spearman_circe", format_double(*report.rho_circe));
    }
    put(out / "metrics.tsv", metrics_tsv);

    std::string manifest = "version=" + std::string(kVersion) + "\n" + cfg.manifest();
    manifest += "input.fingerprint=" + in.fp + "\n";
    manifest += "cache.static=" + static_key + "\n";
    manifest += "cache.context=" + context_key + "\n";
    put(out / "manifest.txt", manifest);
    return 0;
  });

  write_file((out / kCompleteSentinel).string(), "");
  return report;
}

}  // namespace lscd
