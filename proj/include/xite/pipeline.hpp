#pragma once

#include <optional>
#include <string>
#include <vector>

#include "xite/evaluator.hpp"
#include "xite/synth.hpp"

namespace xite {

struct PipelineConfig {
  // Dataset stores (binary .xite files).
  std::string source_train;
  std::string target_train;
  std::string target_dev;
  std::string target_test;
  std::string source_dev;
  std::string source_test;
  std::string mapping_view;  // optional alternate mapping embeddings
  std::string basis_corpus;  // required for xite-reg-lda

  std::string system = "baseline-ps";
  std::size_t m = 5;
  std::string mapping_mode = "similarity";
  std::string pair_policy = "all_m";
  std::uint32_t basis_k = 4;
  double basis_shrinkage = 1e-4;
  std::string source_lang = "en";
  std::string target_lang = "xx";
  TrainConfig train;
  std::uint64_t seed = 42;
  std::string out_dir = "out";

  std::string canonical() const;  // digest input
};

PipelineConfig load_pipeline_config(const std::string& path);

struct PipelineResult {
  MetricsReport report;
  std::string manifest_path;
  std::string report_digest;  // digest of report.csv bytes
};

// map -> (basis) -> augment -> train -> eval. Artifacts land in out_dir:
// map.jsonl, basis.xb, trainset.xite, model.xm, history.csv, report.csv,
// manifest.json. Identical config => bit-identical artifacts. On failure an
// INCOMPLETE marker naming the stage is left behind.
PipelineResult run_pipeline(const PipelineConfig& cfg);

std::string file_digest(const std::string& path);

// Figure-1 analog: raw and (optionally) basis-projected views of a bilingual
// dataset, each reduced to its top-2 principal axes. CSV rows are
// view,x,y,lang; a trailing comment-free "fisher" block gives one
// separability number per view (best coordinate axis for raw, best basis
// axis for projected).
struct VizResult {
  double raw_fisher = 0.0;
  std::optional<double> projected_fisher;
  std::size_t rows = 0;
};

VizResult emit_projection_2d(const Dataset& data, const std::string& source_lang,
                             const std::string& target_lang, const LanguageBasis* basis,
                             const std::string& out_csv);

}  // namespace xite
