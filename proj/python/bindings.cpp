#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lscd/align.hpp"
#include "lscd/ensemble.hpp"
#include "lscd/error.hpp"
#include "lscd/eval.hpp"
#include "lscd/pipeline.hpp"
#include "lscd/scoring.hpp"

namespace py = pybind11;
using namespace lscd;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

UseSet to_uses(const RowMatrix& rows) {
  UseSet u;
  u.vectors = rows.cast<float>();
  return u;
}

Ranking to_ranking(const std::vector<std::string>& words, const std::vector<double>& ranks) {
  if (words.size() != ranks.size()) throw InvalidArgument("words and ranks differ in length");
  return Ranking{words, ranks, "python"};
}

py::dict report_dict(const RunReport& r) {
  py::dict d;
  d["accuracy"] = r.accuracy;
  d["theta"] = r.theta;
  d["threshold"] = r.threshold;
  d["unscorable_context_free"] = r.unscorable_cf;
  d["unscorable_context_dependent"] = r.unscorable_cd;
  d["rho_context_free"] = r.rho_cf;
  d["rho_context_dependent"] = r.rho_cd;
  d["rho_circe"] = r.rho_circe;
  d["static_cache_hit"] = r.static_cache_hit;
  d["context_cache_hit"] = r.context_cache_hit;
  d["written"] = r.written;
  return d;
}

}  // namespace

PYBIND11_MODULE(_lscd, m) {
  m.doc() = "Lexical semantic change detection core";
  m.attr("__version__") = std::string(kVersion);

  static py::exception<Error> error(m, "LscdError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InvalidArgument& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  m.def("theta_from_accuracy", [](double acc) { return theta_from_accuracy(acc).value; }, py::arg("accuracy"),
        "Ensemble weight 2 * (accuracy - 0.5), clamped to [0, 1].");

  m.def("average_ranks", [](const std::vector<double>& v) { return average_ranks(v); }, py::arg("values"),
        "1-based ranks, ascending, ties share their average rank.");

  m.def(
      "combine",
      [](const std::vector<std::string>& words, const std::vector<double>& r_cf, const std::vector<double>& r_cd,
         double theta) {
        return combine(to_ranking(words, r_cf), to_ranking(words, r_cd), manual_theta(theta)).ranks;
      },
      py::arg("words"), py::arg("r_cf"), py::arg("r_cd"), py::arg("theta"),
      "theta * r_cd + (1 - theta) * r_cf, re-ranked with average ties.");

  m.def("spearman", [](const std::vector<double>& x, const std::vector<double>& y) { return spearman_rho(x, y); },
        py::arg("x"), py::arg("y"), "Tie-corrected Spearman correlation.");

  m.def(
      "mpe_distance",
      [](const RowMatrix& a, const RowMatrix& b, std::uint64_t max_pairs, std::uint64_t seed) {
        return mpe_distance(to_uses(a), to_uses(b), PairBudget{max_pairs, seed});
      },
      py::arg("a"), py::arg("b"), py::arg("max_pairs") = 0, py::arg("seed") = 1,
      "Mean pairwise Euclidean distance between the rows of a and b (stored as float32).");

  m.def("procrustes", [](const RowMatrix& a, const RowMatrix& b) { return procrustes_rotation(a, b); },
        py::arg("a"), py::arg("b"), "Orthogonal W minimizing ||a W - b||_F.");

  m.def(
      "generate_benchmark",
      [](std::size_t n_targets, const std::vector<double>& degrees, std::size_t sentences, std::uint64_t seed,
         const std::string& out_dir) {
        const auto bench = generate_shift_benchmark(n_targets, degrees, sentences, seed);
        py::dict d;
        d["t1"] = bench.t1.sentences;
        d["t2"] = bench.t2.sentences;
        d["targets"] = bench.targets.words();
        d["degrees"] = bench.degrees;
        d["realized"] = bench.realized_b_fraction;
        if (!out_dir.empty()) {
          const auto files = save_benchmark(bench, out_dir);
          d["files"] = py::dict(py::arg("corpus_t1") = files.corpus_t1, py::arg("corpus_t2") = files.corpus_t2,
                                py::arg("targets") = files.targets, py::arg("gold") = files.gold);
        }
        return d;
      },
      py::arg("n_targets"), py::arg("degrees"), py::arg("sentences"), py::arg("seed") = 1, py::arg("out_dir") = "",
      "Synthetic two-period corpora with planted context shifts.");

  m.def(
      "run_pipeline",
      [](const std::string& config, std::optional<std::uint64_t> seed, bool deterministic, std::optional<double> theta,
         bool masked, std::optional<std::string> output_dir, std::optional<int> sgns_dimension,
         std::optional<int> sgns_epochs, std::optional<int> encoder_dimension) {
        auto c = load_pipeline_config(config);
        if (seed) c.seed = *seed;
        c.deterministic = c.deterministic || deterministic;
        if (theta) c.theta = *theta;
        if (!masked) c.masked = false;
        if (output_dir) c.output_dir = *output_dir;
        if (sgns_dimension) c.sgns.dimension = *sgns_dimension;
        if (sgns_epochs) c.sgns.epochs = *sgns_epochs;
        if (encoder_dimension) c.encoder.dimension = *encoder_dimension;
        RunReport r;
        {
          py::gil_scoped_release release;
          r = run_pipeline(c);
        }
        return report_dict(r);
      },
      py::arg("config"), py::kw_only(), py::arg("seed") = py::none(), py::arg("deterministic") = false,
      py::arg("theta") = py::none(), py::arg("masked") = true, py::arg("output_dir") = py::none(),
      py::arg("sgns_dimension") = py::none(), py::arg("sgns_epochs") = py::none(),
      py::arg("encoder_dimension") = py::none(), "Run the full pipeline from an INI config file.");
}
