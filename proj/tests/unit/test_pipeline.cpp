#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "../support/tmpdir.hpp"
#include "lscd/error.hpp"
#include "lscd/eval.hpp"
#include "lscd/pipeline.hpp"

using namespace lscd;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_run(const TempDir& dir, const std::string& out) {
  static const std::vector<double> degrees{0.0, 0.3, 0.7, 1.0};
  BenchmarkOptions opts;
  opts.pool_topics = 4;
  opts.words_per_topic = 10;
  opts.shared_words = 10;
  auto bench = generate_shift_benchmark(4, degrees, 800, 5, opts);
  auto files = save_benchmark(bench, dir.file("bench"));
  PipelineConfig c;
  c.corpus_t1 = files.corpus_t1;
  c.corpus_t2 = files.corpus_t2;
  c.targets = files.targets;
  c.gold = files.gold;
  c.output_dir = dir.file(out);
  c.sgns.dimension = 10;
  c.sgns.epochs = 2;
  c.encoder.dimension = 8;
  c.encoder.context_radius = 2;
  c.deterministic = true;
  return c;
}

std::string answer(const PipelineConfig& c, const std::string& name) {
  return read_file((fs::path(c.output_dir) / "answer" / name).string());
}

}  // namespace

TEST_CASE("config parsing") {
  auto c = parse_pipeline_config(
      "; comment\n[paths]\ncorpus_t1 = a.txt\n[sgns]\ndimension = 50\nsubsample_threshold = 1e-5\n"
      "[ensemble]\ntheta = 0.25\n[run]\nseed = 9\ndeterministic = true\n");
  CHECK(c.corpus_t1 == "a.txt");
  CHECK(c.sgns.dimension == 50);
  CHECK(*c.sgns.subsample_threshold == 1e-5);
  CHECK(*c.theta == 0.25);
  CHECK(c.seed == 9);
  CHECK(c.deterministic);
  CHECK(c.masked);

  CHECK_THROWS_WITH_AS(parse_pipeline_config("[sgns]\ndimensions = 5\n"), "unknown config key 'sgns.dimensions'",
                       InvalidArgument);
  CHECK_THROWS_AS(parse_pipeline_config("[sgns]\ndimension = five\n"), InvalidArgument);
  CHECK_THROWS_AS(parse_pipeline_config("[run]\ndeterministic = maybe\n"), InvalidArgument);

  TempDir dir;
  fs::create_directories(dir.path() / "cfg");
  auto loaded = load_pipeline_config(dir.write("cfg/run.ini", "[paths]\ncorpus_t1 = ../data/t1.txt\noutput_dir = out\n"));
  CHECK(loaded.corpus_t1 == (dir.path() / "data" / "t1.txt").string());
  CHECK(loaded.output_dir == (dir.path() / "cfg" / "out").string());
}

TEST_CASE("config validation") {
  PipelineConfig c;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  TempDir dir;
  c = small_run(dir, "out");
  CHECK_NOTHROW(c.validate());
  c.theta = 1.5;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("manifest covers every tunable") {
  const auto m = PipelineConfig{}.manifest();
  for (const char* key : {"sgns.dimension", "sgns.window", "sgns.negatives", "sgns.epochs", "sgns.learning_rate",
                          "sgns.noise_exponent", "sgns.subsample_threshold", "align.normalize", "align.center",
                          "encoder.dimension", "encoder.context_radius", "encoder.learning_rate", "dataset.masked",
                          "scoring.pair_budget", "ensemble.theta", "run.seed", "seed.encoder"}) {
    CHECK_MESSAGE(m.find(std::string(key) + "=") != std::string::npos, key);
  }
}

TEST_CASE("run_pipeline") {
  TempDir dir;
  auto cfg = small_run(dir, "a");
  auto report = run_pipeline(cfg);
  const fs::path out = cfg.output_dir;
  CHECK(fs::exists(out / kCompleteSentinel));
  for (const char* f : {"answer/task2/context_free.txt", "answer/task2/context_dependent.txt",
                        "answer/task2/circe.txt", "answer/task1/circe.txt", "scores.tsv", "metrics.tsv",
                        "manifest.txt", "align/rotation.tsv"}) {
    CHECK_MESSAGE(fs::exists(out / f), f);
  }
  CHECK_FALSE(report.static_cache_hit);
  CHECK(report.rho_cf.has_value());
  CHECK(report.theta >= 0.0);
  CHECK(report.theta <= 1.0);

  SUBCASE("cached rerun gives identical outputs") {
    auto again = run_pipeline(cfg);
    CHECK(again.static_cache_hit);
    CHECK(again.context_cache_hit);
    for (const char* f : {"task2/context_free.txt", "task2/context_dependent.txt", "task2/circe.txt", "task1/circe.txt"}) {
      CHECK(answer(cfg, f) == read_file((out / "answer" / f).string()));
    }
    CHECK(again.theta == report.theta);
  }

  SUBCASE("deterministic rerun into a fresh directory is byte-identical") {
    auto fresh = cfg;
    fresh.output_dir = dir.file("b");
    fresh.use_cache = false;
    run_pipeline(fresh);
    for (const char* f : {"task2/context_free.txt", "task2/context_dependent.txt", "task2/circe.txt", "task1/circe.txt"}) {
      CHECK(answer(fresh, f) == answer(cfg, f));
    }
    CHECK(read_file(dir.file("b/manifest.txt")) == read_file(dir.file("a/manifest.txt")));
    CHECK(read_file(dir.file("b/scores.tsv")) == read_file(dir.file("a/scores.tsv")));
  }

  SUBCASE("theta 0 reproduces the context-free answers") {
    auto zero = cfg;
    zero.output_dir = dir.file("zero");
    zero.theta = 0.0;
    run_pipeline(zero);
    CHECK(answer(zero, "task2/circe.txt") == answer(zero, "task2/context_free.txt"));
    CHECK(answer(zero, "task2/context_free.txt") == answer(cfg, "task2/context_free.txt"));
  }

  SUBCASE("unmasked dataset keeps corpus-unique tokens") {
    write_file(cfg.corpus_t1, read_file(cfg.corpus_t1) + "oldonly target0 fn1\n");
    write_file(cfg.corpus_t2, read_file(cfg.corpus_t2) + "newonly target0 fn1\n");
    auto dataset_in = [&](const PipelineConfig& c) {
      for (const auto& e : fs::recursive_directory_iterator(fs::path(c.output_dir) / "context")) {
        if (e.path().filename() == "dataset.tsv") return import_dataset_tsv(e.path().string());
      }
      FAIL("no dataset.tsv under " << c.output_dir);
      return TimeClfDataset{};
    };
    auto count = [](const TimeClfDataset& ds, const std::string& word) {
      std::size_t n = 0;
      for (const auto& ex : ds.examples) n += static_cast<std::size_t>(std::count(ex.tokens.begin(), ex.tokens.end(), word));
      return n;
    };
    auto plain = cfg;
    plain.output_dir = dir.file("plain");
    plain.masked = false;
    run_pipeline(plain);
    auto ds = dataset_in(plain);
    CHECK_FALSE(ds.masked);
    CHECK(count(ds, "oldonly") == 1);
    CHECK(count(ds, "newonly") == 1);

    auto masked = cfg;
    masked.output_dir = dir.file("masked");
    run_pipeline(masked);
    auto mds = dataset_in(masked);
    CHECK(mds.masked);
    CHECK(count(mds, "oldonly") == 0);
    CHECK(count(mds, "newonly") == 0);
    CHECK(count(mds, std::string(kDefaultMaskToken)) >= 2);
  }
}

TEST_CASE("stage errors carry the stage name and leave no sentinel") {
  TempDir dir;
  auto cfg = small_run(dir, "bad");
  write_file(cfg.targets, "target0\ntarget0\n");
  try {
    run_pipeline(cfg);
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "ingest");
    CHECK(std::string(e.what()).rfind("ingest: ", 0) == 0);
  }
  CHECK_FALSE(fs::exists(fs::path(cfg.output_dir) / kCompleteSentinel));

  cfg.corpus_t1 = dir.file("missing.txt");
  CHECK_THROWS_WITH_AS(run_pipeline(cfg), doctest::Contains("config: "), StageError);
}
