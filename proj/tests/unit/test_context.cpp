#include <doctest.h>

#include <cmath>

#include "../support/oracles.hpp"
#include "../support/synthetic.hpp"
#include "../support/tmpdir.hpp"
#include "lscd/context.hpp"
#include "lscd/error.hpp"
#include "lscd/text.hpp"

using namespace lscd;

namespace {

EncoderConfig small_encoder(int dim = 16, int radius = 2) {
  EncoderConfig c;
  c.dimension = dim;
  c.context_radius = radius;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("classifier gradient matches finite differences") {
  std::vector<std::string> vocab;
  for (int i = 0; i < 12; ++i) vocab.push_back("t" + std::to_string(i));
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto cfg = small_encoder(6, 1 + trial % 3);
    cfg.seed = static_cast<std::uint64_t>(trial);
    TimeClassifier model(vocab, cfg);
    // move away from the symmetric initialization
    for (Eigen::Index i = 0; i < model.offset_weights.size(); ++i) model.offset_weights.data()[i] = rng.uniform(-1, 1);
    for (Eigen::Index i = 0; i < model.bias.size(); ++i) model.bias(i) = rng.uniform(-0.3, 0.3);
    for (Eigen::Index i = 0; i < model.head_weights.size(); ++i) model.head_weights(i) = rng.uniform(-1, 1);
    for (Eigen::Index i = 0; i < model.embeddings.size(); ++i) model.embeddings.data()[i] = rng.uniform(-1, 1);
    model.head_bias = rng.uniform(-0.5, 0.5);

    std::vector<int> ids;
    const auto len = 1 + rng.index(7);
    for (std::uint64_t k = 0; k < len; ++k) ids.push_back(static_cast<int>(rng.index(6)));  // repeats likely
    const double label = trial % 2;
    auto g = model.gradient(ids, label);
    CHECK(g.loss == doctest::Approx(model.loss(ids, label)).epsilon(1e-12));

    auto check = [&](double* data, Eigen::Index n, const Eigen::VectorXd& analytic) {
      Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(data, n);
      auto f = [&](const Eigen::VectorXd& p) {
        Eigen::Map<Eigen::VectorXd>(data, n) = p;
        const double l = model.loss(ids, label);
        Eigen::Map<Eigen::VectorXd>(data, n) = x;
        return l;
      };
      CHECK(oracle::relative_error(analytic, oracle::central_difference(f, x)) <= 1e-4);
    };
    check(model.head_weights.data(), model.head_weights.size(), g.head_weights);
    check(&model.head_bias, 1, Eigen::VectorXd::Constant(1, g.head_bias));
    check(model.bias.data(), model.bias.size(), g.bias);
    check(model.offset_weights.data(), model.offset_weights.size(),
          Eigen::Map<const Eigen::VectorXd>(g.offset_weights.data(), g.offset_weights.size()));
    for (const auto& [id, grad] : g.embeddings) check(model.embeddings.row(id).data(), model.dimension(), grad);
  }
}

TEST_CASE("planted marker is learned when unmasked") {
  Rng rng(1);
  auto c1 = synth::random_corpus(rng, 1500, Period::T1);
  auto c2 = synth::random_corpus(rng, 1500, Period::T2, "marker");
  auto ds = build_clf_dataset(c1, c2, {.masked = false}, 2);
  auto [model, m] = train_time_classifier(ds, EncoderConfig{});
  CHECK(m.accuracy >= 0.95);
  CHECK(m.test_examples == 600);
  CHECK(m.accuracy == doctest::Approx((m.accuracy_t1 * m.test_t1 + m.accuracy_t2 * m.test_t2) / m.test_examples));
}

TEST_CASE("masking removes corpus-unique markers") {
  // Each corpus carries its own unique marker, so after masking both
  // periods share the same mask token and nothing separates them.
  Rng rng(2);
  auto c1 = synth::random_corpus(rng, 1500, Period::T1, "oldmarker");
  auto c2 = synth::random_corpus(rng, 1500, Period::T2, "newmarker");
  auto unmasked = train_time_classifier(build_clf_dataset(c1, c2, {.masked = false}, 3), EncoderConfig{});
  auto masked = train_time_classifier(build_clf_dataset(c1, c2, {.masked = true}, 3), EncoderConfig{});
  CHECK(unmasked.second.accuracy >= 0.95);
  CHECK(masked.second.accuracy <= 0.6);
}

TEST_CASE("label-shuffled data classifies at chance") {
  Rng rng(4);
  auto c1 = synth::random_corpus(rng, 3000, Period::T1);
  auto c2 = synth::random_corpus(rng, 3000, Period::T2, "marker");
  auto ds = build_clf_dataset(c1, c2, {.masked = false}, 5);
  std::vector<Period> labels;
  for (const auto& ex : ds.examples) labels.push_back(ex.label);
  rng.shuffle(labels);
  for (std::size_t i = 0; i < labels.size(); ++i) ds.examples[i].label = labels[i];
  auto [model, m] = train_time_classifier(ds, EncoderConfig{});
  CHECK(m.test_examples >= 500);
  CHECK(m.accuracy >= 0.4);
  CHECK(m.accuracy <= 0.6);
}

TEST_CASE("training errors") {
  TimeClfDataset ds;
  ds.examples.push_back({{"a"}, Period::T1, Split::Train});
  ds.examples.push_back({{"b"}, Period::T2, Split::Train});
  CHECK_THROWS_AS(train_time_classifier(ds, small_encoder()), InvalidArgument);
  ds.examples[1].split = Split::Test;
  ds.examples[0].split = Split::Test;
  CHECK_THROWS_AS(train_time_classifier(ds, small_encoder()), InvalidArgument);
  ds.examples[0].split = Split::Train;
  auto cfg = small_encoder();
  cfg.learning_rate = 1e308;
  for (int i = 0; i < 40; ++i) {
    ds.examples.push_back({{"a", "c", "a"}, Period::T1, Split::Train});
    ds.examples.push_back({{"b", "c", "b"}, Period::T2, Split::Train});
  }
  CHECK_THROWS_AS(train_time_classifier(ds, cfg), NumericError);
}

TEST_CASE("extract_uses") {
  Rng rng(6);
  auto c1 = synth::random_corpus(rng, 200, Period::T1);
  auto c2 = synth::random_corpus(rng, 200, Period::T2, "marker");
  auto [model, m] = train_time_classifier(build_clf_dataset(c1, c2, {.masked = false}, 7), small_encoder());

  SUBCASE("one entry per occurrence, absent targets empty") {
    Corpus c = parse_corpus("v1 v2 v1\nv3\nv4 v5\n", Period::T2);
    auto uses = extract_uses(model, c, TargetList({"v1", "nothere", "v3"}));
    REQUIRE(uses.size() == 3);
    CHECK(uses[0].word == "v1");
    CHECK(uses[0].period == Period::T2);
    CHECK(uses[0].size() == 2);
    CHECK(uses[0].sentence_indices == std::vector<std::size_t>{0, 0});
    CHECK(uses[1].empty());
    CHECK(uses[2].size() == 1);
    CHECK(uses[0].dimension() == model.dimension());
  }
  SUBCASE("single-token sentence gives the self-weighted representation") {
    Corpus c = parse_corpus("v7\n", Period::T1);
    auto uses = extract_uses(model, c, TargetList({"v7"}));
    const auto id = model.encode({"v7"})[0];
    const int r = model.context_radius();
    Eigen::RowVectorXd expect =
        (model.bias.transpose().array() + model.offset_weights.row(r).array() * model.embeddings.row(id).array()).tanh();
    CHECK((uses[0].vectors.row(0).cast<double>() - expect).norm() <= 1e-6);
  }
  SUBCASE("extraction is deterministic") {
    auto a = extract_uses(model, c1, TargetList({"v1", "v2"}));
    auto b = extract_uses(model, c1, TargetList({"v1", "v2"}));
    CHECK(a[0].vectors == b[0].vectors);
    CHECK(a[1].vectors == b[1].vectors);
  }
  SUBCASE("different contexts give more distant vectors than identical ones") {
    Corpus c = parse_corpus("v1 v2 v3 tgt v4 v5 v6\nv1 v2 v3 tgt v4 v5 v6\nv200 v201 v202 tgt v203 v204 v205\n",
                            Period::T1);
    auto uses = extract_uses(model, c, TargetList({"tgt"}));
    const auto& v = uses[0].vectors;
    const double same = (v.row(0) - v.row(1)).norm();
    const double diff = (v.row(0) - v.row(2)).norm();
    CHECK(diff > same);
  }
}

TEST_CASE("pool_pieces averages") {
  Matrix pieces(2, 2);
  pieces << 1, 2, 3, 6;
  auto v = pool_pieces(pieces);
  CHECK(v(0) == 2.0f);
  CHECK(v(1) == 4.0f);
}

TEST_CASE("use set TSV") {
  TempDir dir;
  SUBCASE("rows group by word and period") {
    auto uses = parse_uses("w\tt1\t0\t1 2\nw\tt1\t3\t3 4\nw\tt2\t1\t5 6\n");
    REQUIRE(uses.size() == 2);
    CHECK(uses[0].size() == 2);
    CHECK(uses[0].sentence_indices == std::vector<std::size_t>{0, 3});
    CHECK(uses[1].period == Period::T2);
  }
  SUBCASE("ragged dimensions name the line") {
    try {
      parse_uses("w\tt1\t0\t1 2\nw\tt1\t1\t1 2\nx\tt2\t0\t1 2 3\n");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("export then import is bit exact") {
    Rng rng(9);
    std::vector<UseSet> uses(3);
    for (std::size_t k = 0; k < uses.size(); ++k) {
      uses[k].word = "w" + std::to_string(k);
      uses[k].period = k % 2 ? Period::T2 : Period::T1;
      uses[k].vectors.resize(4, 5);
      for (Eigen::Index i = 0; i < uses[k].vectors.size(); ++i) {
        uses[k].vectors.data()[i] = static_cast<float>(rng.uniform(-1e3, 1e3) * std::pow(10.0, rng.uniform(-8, 3)));
      }
      uses[k].sentence_indices = {0, 1, 2, 9};
    }
    export_uses(uses, dir.file("u.tsv"));
    auto back = import_uses(dir.file("u.tsv"));
    REQUIRE(back.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(back[k].word == uses[k].word);
      CHECK(back[k].vectors == uses[k].vectors);
      CHECK(back[k].sentence_indices == uses[k].sentence_indices);
    }
    CHECK(format_uses(back) == read_file(dir.file("u.tsv")));
  }
}

TEST_CASE("classifier file round trip") {
  TempDir dir;
  Rng rng(10);
  auto c1 = synth::random_corpus(rng, 100, Period::T1);
  auto c2 = synth::random_corpus(rng, 100, Period::T2, "marker");
  auto [model, m] = train_time_classifier(build_clf_dataset(c1, c2, {.masked = false}, 1), small_encoder());
  save_classifier(model, dir.file("m.txt"));
  auto back = load_classifier(dir.file("m.txt"));
  CHECK(back.words() == model.words());
  CHECK(back.embeddings == model.embeddings);
  CHECK(back.offset_weights == model.offset_weights);
  CHECK(back.head_weights == model.head_weights);
  auto ids = model.encode(c1.sentences[0]);
  CHECK(back.predict_t2(ids) == model.predict_t2(ids));
}
