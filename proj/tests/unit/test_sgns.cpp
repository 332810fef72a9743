#include <doctest.h>

#include <cmath>
#include <random>

#include "../support/oracles.hpp"
#include "../support/tmpdir.hpp"
#include "lscd/error.hpp"
#include "lscd/rng.hpp"
#include "lscd/sgns.hpp"

using namespace lscd;

namespace {

SgnsConfig small_config(int dim = 20) {
  SgnsConfig c;
  c.dimension = dim;
  c.window = 3;
  c.negatives = 2;
  c.epochs = 3;
  c.seed = 42;
  return c;
}

Corpus clustered_corpus(std::uint64_t seed, std::size_t sentences) {
  Rng rng(seed);
  Corpus c;
  for (std::size_t i = 0; i < sentences; ++i) {
    const char cluster = rng.uniform01() < 0.5 ? 'x' : 'y';
    Sentence s;
    for (int k = 0; k < 8; ++k) s.push_back(std::string(1, cluster) + std::to_string(rng.index(5)));
    c.sentences.push_back(s);
  }
  return c;
}

double cosine(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) { return a.dot(b) / (a.norm() * b.norm()); }

}  // namespace

TEST_CASE("pair gradient matches central finite differences") {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> nd(0.0, 0.5);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 5 + trial % 20;
    const int k = 1 + trial % 4;
    auto rnd = [&] {
      Vector v(d);
      for (int i = 0; i < d; ++i) v(i) = nd(gen);
      return v;
    };
    Vector center = rnd(), context = rnd();
    std::vector<Vector> negs;
    for (int i = 0; i < k; ++i) negs.push_back(rnd());

    auto g = sgns::pair_gradient(center, context, negs);
    CHECK(g.loss == doctest::Approx(sgns::pair_loss(center, context, negs)).epsilon(1e-12));

    auto fc = [&](const Eigen::VectorXd& x) { return sgns::pair_loss(x, context, negs); };
    CHECK(oracle::relative_error(g.center, oracle::central_difference(fc, center)) <= 1e-4);
    auto fx = [&](const Eigen::VectorXd& x) { return sgns::pair_loss(center, x, negs); };
    CHECK(oracle::relative_error(g.context, oracle::central_difference(fx, context)) <= 1e-4);
    for (int n = 0; n < k; ++n) {
      auto fn = [&](const Eigen::VectorXd& x) {
        auto copy = negs;
        copy[static_cast<std::size_t>(n)] = x;
        return sgns::pair_loss(center, context, copy);
      };
      CHECK(oracle::relative_error(g.negatives[static_cast<std::size_t>(n)],
                                   oracle::central_difference(fn, negs[static_cast<std::size_t>(n)])) <= 1e-4);
    }
  }
}

TEST_CASE("training update equals a gradient step") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd(0.0, 0.3);
  const int d = 12;
  const double lr = 0.05;
  Matrix out(3, d);
  Eigen::RowVectorXd v(d);
  for (int j = 0; j < d; ++j) {
    v(j) = nd(gen);
    for (int i = 0; i < 3; ++i) out(i, j) = nd(gen);
  }
  std::vector<Vector> negs{out.row(1).transpose(), out.row(2).transpose()};
  auto g = sgns::pair_gradient(v.transpose(), out.row(0).transpose(), negs);

  Matrix updated = out;
  Eigen::RowVectorXd step = Eigen::RowVectorXd::Zero(d);
  double loss = sgns::logistic_update(updated.row(0), v, 1.0, lr, step);
  loss += sgns::logistic_update(updated.row(1), v, 0.0, lr, step);
  loss += sgns::logistic_update(updated.row(2), v, 0.0, lr, step);

  CHECK(loss == doctest::Approx(g.loss).epsilon(1e-12));
  CHECK((step.transpose() + lr * g.center).norm() <= 1e-12);
  CHECK((updated.row(0).transpose() - (out.row(0).transpose() - lr * g.context)).norm() <= 1e-12);
  CHECK((updated.row(1).transpose() - (out.row(1).transpose() - lr * g.negatives[0])).norm() <= 1e-12);
  CHECK((updated.row(2).transpose() - (out.row(2).transpose() - lr * g.negatives[1])).norm() <= 1e-12);
}

TEST_CASE("zero epochs leaves the initialization") {
  auto c = clustered_corpus(1, 20);
  auto cfg = small_config(16);
  cfg.epochs = 0;
  auto a = train_sgns(c, cfg);
  auto b = train_sgns(c, cfg);
  CHECK(a.input == b.input);
  CHECK(a.output.isZero(0.0));
  CHECK(a.input.maxCoeff() <= 0.5 / 16);
  CHECK(a.input.minCoeff() >= -0.5 / 16);
  CHECK(a.epoch_losses.empty());
}

TEST_CASE("deterministic mode reproduces matrices exactly") {
  auto c = clustered_corpus(2, 200);
  auto a = train_sgns(c, small_config());
  auto b = train_sgns(c, small_config());
  CHECK(a.input == b.input);
  CHECK(a.output == b.output);
  auto other = small_config();
  other.seed = 43;
  CHECK(train_sgns(c, other).input != a.input);
}

TEST_CASE("alternating a b corpus: a is closer to b than to a random control") {
  // Holds at the default window of 10. With very narrow windows the
  // alternation itself is learned and a, b drift apart.
  Corpus c;
  Sentence s;
  for (int i = 0; i < 20; ++i) s.push_back(i % 2 ? "b" : "a");
  for (int i = 0; i < 200; ++i) c.sentences.push_back(s);
  for (std::uint64_t seed : {1, 2, 3}) {
    SgnsConfig cfg;
    cfg.seed = seed;
    auto space = train_sgns(c, cfg);
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    Eigen::RowVectorXd r(cfg.dimension);
    for (int j = 0; j < cfg.dimension; ++j) r(j) = nd(gen);
    const auto a = space.input.row(static_cast<Eigen::Index>(*space.id("a")));
    const auto b = space.input.row(static_cast<Eigen::Index>(*space.id("b")));
    CHECK(cosine(a, b) > cosine(a, r));
  }
}

TEST_CASE("words sharing contexts end up close") {
  // a and b never co-occur but share the p-pool contexts; c lives in the q pool.
  Corpus c;
  std::mt19937_64 gen(9);
  for (int i = 0; i < 600; ++i) {
    const char* word = i % 3 == 0 ? "a" : i % 3 == 1 ? "b" : "c";
    const std::string pool = i % 3 == 2 ? "q" : "p";
    Sentence s;
    for (int k = 0; k < 8; ++k) s.push_back(pool + std::to_string(gen() % 10));
    s.insert(s.begin() + 4, word);
    c.sentences.push_back(s);
  }
  auto cfg = small_config(20);
  cfg.epochs = 5;
  auto space = train_sgns(c, cfg);
  const auto a = space.input.row(static_cast<Eigen::Index>(*space.id("a")));
  const auto b = space.input.row(static_cast<Eigen::Index>(*space.id("b")));
  const auto q = space.input.row(static_cast<Eigen::Index>(*space.id("c")));
  CHECK(cosine(a, b) > cosine(a, q) + 0.2);
}

TEST_CASE("nearest_neighbors") {
  SUBCASE("two-word vocabulary") {
    auto c = parse_corpus("p q\nq p\n", Period::T1);
    auto space = train_sgns(c, small_config(8));
    auto nn = nearest_neighbors(space, "p", 1);
    REQUIRE(nn.size() == 1);
    CHECK(nn[0].first == "q");
  }
  SUBCASE("query excluded, sorted descending, cluster recovered") {
    auto space = train_sgns(clustered_corpus(3, 600), small_config(30));
    for (const auto& w : space.words()) {
      auto nn = nearest_neighbors(space, w, 9);
      REQUIRE(nn.size() == 9);
      for (std::size_t i = 0; i < nn.size(); ++i) {
        CHECK(nn[i].first != w);
        if (i) CHECK(nn[i - 1].second >= nn[i].second);
      }
      CHECK(nn[0].first[0] == w[0]);
    }
  }
  SUBCASE("errors") {
    auto space = train_sgns(parse_corpus("p q\n", Period::T1), small_config(4));
    CHECK_THROWS_AS(nearest_neighbors(space, "zzz", 1), InvalidArgument);
    CHECK_THROWS_AS(nearest_neighbors(space, "p", 0), InvalidArgument);
  }
}

TEST_CASE("average loss does not increase over the first two epochs") {
  auto c = clustered_corpus(4, 300);
  auto cfg = small_config(20);
  cfg.epochs = 2;
  cfg.initial_learning_rate = 0.01;
  auto space = train_sgns(c, cfg);
  REQUIRE(space.epoch_losses.size() == 2);
  CHECK(space.epoch_losses[1] <= space.epoch_losses[0]);
}

TEST_CASE("fuzzed corpora train to finite vectors") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    Corpus c;
    const auto n = 1 + rng.index(40);
    for (std::uint64_t i = 0; i < n; ++i) {
      Sentence s;
      const auto len = 1 + rng.index(15);
      for (std::uint64_t k = 0; k < len; ++k) s.push_back("w" + std::to_string(rng.index(1 + rng.index(30))));
      c.sentences.push_back(s);
    }
    auto cfg = small_config(10);
    cfg.seed = seed;
    cfg.subsample_threshold = seed % 2 ? std::optional<double>(1e-3) : std::nullopt;
    auto space = train_sgns(c, cfg);
    CHECK(space.input.allFinite());
    CHECK(space.output.allFinite());
  }
}

TEST_CASE("training errors") {
  CHECK_THROWS_AS(train_sgns(Corpus{}, small_config()), EmptyCorpusError);
  auto cfg = small_config();
  cfg.initial_learning_rate = 1e300;
  cfg.dimension = 4;
  auto c = clustered_corpus(5, 50);
  CHECK_THROWS_AS(train_sgns(c, cfg), NumericError);
  cfg = small_config();
  cfg.window = 0;
  CHECK_THROWS_AS(train_sgns(c, cfg), InvalidArgument);
}

TEST_CASE("multi-worker training stays finite") {
  auto cfg = small_config();
  cfg.workers = 3;
  auto space = train_sgns(clustered_corpus(6, 300), cfg);
  CHECK(space.input.allFinite());
}

TEST_CASE("noise distribution follows counts^0.75") {
  std::vector<std::uint64_t> counts{1, 16, 81};
  sgns::NoiseDistribution nd(counts, 0.75);
  const double z = 1 + 8 + 27;
  CHECK(nd.probability(0) == doctest::Approx(1 / z));
  CHECK(nd.probability(2) == doctest::Approx(27 / z));
  CHECK(nd.sample(0.0) == 0);
  CHECK(nd.sample(0.999999) == 2);
  CHECK(nd.sample(2.0 / z) == 1);
}

TEST_CASE("embedding text format round trip") {
  TempDir dir;
  auto space = train_sgns(clustered_corpus(7, 50), small_config(6));
  save_embeddings(space, dir.file("e.vec"));
  auto back = load_embeddings(dir.file("e.vec"));
  CHECK(back.words() == space.words());
  CHECK(back.input == space.input);

  CHECK_THROWS_AS(load_embeddings(dir.write("bad.vec", "2 3\na 1 2 3\nb 1 2\n")), FormatError);
  CHECK_THROWS_AS(load_embeddings(dir.write("short.vec", "3 1\na 1\n")), FormatError);
}
