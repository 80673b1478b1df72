#pragma once

#include <string>
#include <vector>

#include "xite/basis.hpp"
#include "xite/dataset.hpp"
#include "xite/interpolate.hpp"
#include "xite/mapper.hpp"
#include "xite/trainer.hpp"

namespace xite {

// All numbers from this artifact come from frozen embeddings + a linear head,
// so they are not comparable to fine-tuned encoder results. Every report
// carries this string.
extern const char* kFrozenEmbeddingCaveat;

enum class System { kSkyline, kBaselinePS, kXiteRegReg, kXiteRegLda };

std::string system_name(System s);
System parse_system(const std::string& name);

struct ProjectionAccuracy {
  double top1 = 0.0;
  double all_m = 0.0;  // pair-level: each neighbor judged against gold
  double any_m = 0.0;  // hit rate: any neighbor carries the gold label
};

struct MetricsReport {
  std::string system;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  double target_dev = 0.0;
  double target_test = 0.0;
  double source_dev = 0.0;
  double source_test = 0.0;
  double proj_top1 = 0.0;
  double proj_allm = 0.0;
  double proj_anym = 0.0;
  std::uint32_t selected_epoch = 0;
  std::string config_digest;
  std::string caveat = kFrozenEmbeddingCaveat;
};

struct ForgettingReport {
  double source_dev = 0.0;
  double source_test = 0.0;
  std::string provenance;
};

double accuracy(const HeadModel& model, const Dataset& split);

ProjectionAccuracy label_projection_accuracy(const MappingTable& table, const Dataset& gold);

// Rejects checkpoints not selected on the target dev split — source-language
// numbers must always come from the target-selected model.
ForgettingReport forgetting_report(const Checkpoint& ckpt, const Dataset& source_dev,
                                   const Dataset& source_test);

struct SystemInputs {
  const Dataset* source_train = nullptr;  // labeled
  const Dataset* target_train = nullptr;  // gold labels used only by Skyline / proj metrics
  const Dataset* target_dev = nullptr;
  const Dataset* target_test = nullptr;
  const Dataset* source_dev = nullptr;
  const Dataset* source_test = nullptr;
  const Dataset* mapping_view = nullptr;  // optional alternate mapping embeddings
  const LanguageBasis* basis = nullptr;   // required for reg-lda
};

struct RunOptions {
  System system = System::kBaselinePS;
  std::size_t m = 5;
  MappingMode mapping_mode = MappingMode::kSimilarity;
  PairPolicy pair_policy = PairPolicy::kAllM;
  TrainConfig train_cfg;
  std::uint64_t seed = 42;
};

struct SystemRun {
  MetricsReport report;
  Checkpoint checkpoint;
};

// Full map -> augment -> train -> eval for one system at one seed.
SystemRun run_single_system(const SystemInputs& in, const RunOptions& opts);

// One full run per (m, system, seed); cells are bit-identical to independent
// single runs with the same seed.
std::vector<MetricsReport> m_sweep(const SystemInputs& in, const std::vector<std::size_t>& m_list,
                                   const std::vector<System>& systems,
                                   const std::vector<std::uint64_t>& seeds,
                                   const RunOptions& base);

void write_report_csv(const std::vector<MetricsReport>& rows, const std::string& path);

}  // namespace xite
