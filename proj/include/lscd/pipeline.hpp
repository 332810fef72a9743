#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lscd/align.hpp"
#include "lscd/context.hpp"
#include "lscd/error.hpp"
#include "lscd/corpus.hpp"
#include "lscd/scoring.hpp"
#include "lscd/sgns.hpp"

namespace lscd {

inline constexpr std::string_view kVersion = "0.3.0";

struct PipelineConfig {
  std::string corpus_t1;
  std::string corpus_t2;
  std::string targets;
  std::string gold;  // optional
  std::string output_dir = "lscd_out";

  SgnsConfig sgns;
  AlignConfig align;
  EncoderConfig encoder;
  bool masked = true;
  std::optional<double> theta;  // overrides the accuracy heuristic
  std::uint64_t pair_budget = 0;
  std::uint64_t seed = 1;
  bool deterministic = false;
  bool use_cache = true;

  /// Throws InvalidArgument for missing paths or invalid settings.
  void validate() const;

  /// Every setting that affects output, one "section.key=value" per line.
  std::string manifest() const;
};

/// Per-stage seed streams derived from the global seed.
enum class SeedStream : std::uint64_t {
  SgnsT1 = 11,
  SgnsT2 = 12,
  Dataset = 21,
  Encoder = 22,
  Pairs = 31,
};

std::uint64_t stage_seed(std::uint64_t seed, SeedStream stream);

/// Reads "[section]" headers and "key = value" lines. Unknown keys are errors.
PipelineConfig load_pipeline_config(const std::string& path);
PipelineConfig parse_pipeline_config(const std::string& text);

struct RunReport {
  double accuracy = 0.0;
  double theta = 0.0;
  std::optional<double> threshold;
  std::size_t unscorable_cf = 0;
  std::size_t unscorable_cd = 0;
  std::optional<double> rho_cf, rho_cd, rho_circe;
  bool static_cache_hit = false;
  bool context_cache_hit = false;
  std::vector<std::string> written;
};

/// Stage failure with the stage name prefixed to the message.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause)
      : Error(stage + ": " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

inline constexpr std::string_view kCompleteSentinel = "_COMPLETE";

/// Full context-free + context-dependent + ensemble run. Outputs land in
/// config.output_dir; the completion sentinel is written last.
RunReport run_pipeline(const PipelineConfig& config);

}  // namespace lscd
