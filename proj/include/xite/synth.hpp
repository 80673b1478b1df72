#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "xite/dataset.hpp"
#include "xite/evaluator.hpp"

namespace xite {

// Bilingual Gaussian-cluster generator: shared class means, a fixed rank-r
// language-offset subspace added to the target side, isotropic noise. The
// offset coordinate along axis j is N(gamma * w_j, tau_j^2) with
//   c_j  = jitter_lo + (jitter_hi - jitter_lo) * j / max(r-1, 1)   (linear)
//        = jitter_lo * (jitter_hi/jitter_lo)^(j / max(r-1, 1))     (geometric)
//   tau_j = c_j * gamma / sqrt(r)
//   w     = normalize((1 + tau^2/2)^mean_power)
// Distinct per-axis variances are what make the deflated-LDA recovery
// well-posed beyond the first axis (the axes are identifiable only through
// their second moments once the shared mean direction is removed).
struct SynthConfig {
  std::uint32_t d = 64;
  std::uint32_t C = 3;
  double delta = 2.0;  // pairwise class-mean separation
  std::uint32_t r = 4;
  double gamma = 3.0;  // offset magnitude
  double sigma = 0.5;  // isotropic noise
  std::size_t n_src = 3000;
  std::size_t n_tgt = 600;
  std::uint64_t seed = 42;

  // When structured, the offset axes lean into the class-mean plane by
  // `class_overlap` (cosine), so language offset and semantics interact the
  // way misaligned real embeddings do. Unstructured axes are plain QR of a
  // Gaussian matrix (used by the basis-recovery oracle tests).
  bool structured_axes = true;
  double class_overlap = 0.3;

  double jitter_lo = 0.15;
  double jitter_hi = 0.6;
  bool jitter_geometric = false;
  double mean_power = 0.0;

  // The mapping view shares class means but no language offset, standing in
  // for a mapping-oriented encoder on both sides. Lower noise than the task
  // view: mapping encoders are trained for retrieval, so their neighborhoods
  // are cleaner than the raw task embeddings.
  double map_sigma = 0.6;

  std::string source_lang = "en";
  std::string target_lang = "xx";

  void validate() const;
};

struct SynthData {
  Dataset source;    // labeled
  Dataset target;    // labeled (gold quarantined: evaluation/Skyline only)
  Dataset map_view;  // one record per source/target id, mapping embeddings
};

// The exact offset subspace (d x r, orthonormal) — depends only on cfg.seed.
Eigen::MatrixXd analytic_language_axis(const SynthConfig& cfg);

SynthData generate_synthetic(const SynthConfig& cfg);

// Same axes (pinned by cfg.seed), independent sample draws — used for the
// per-run train/dev/test sets of the benchmark.
SynthData generate_synthetic(const SynthConfig& cfg, std::uint64_t sample_seed,
                             std::size_t n_src, std::size_t n_tgt,
                             const std::string& id_prefix);

struct BenchOptions {
  std::size_t m = 5;
  MappingMode mapping_mode = MappingMode::kSimilarity;
  PairPolicy pair_policy = PairPolicy::kAllM;
  std::uint32_t basis_k = 5;
  double basis_shrinkage = 1e-4;
  TrainConfig train_cfg;  // desk defaults: 30 epochs, batch 64, lr 0.05
  std::size_t tgt_dev = 200;
  std::size_t tgt_test = 2000;  // large test splits: system gaps are small
  std::size_t src_dev = 300;
  std::size_t src_test = 1000;
};

// One full pipeline per (system, seed). Rows come back in (seed-major,
// system-minor) order; aggregation is left to the caller.
std::vector<MetricsReport> run_benchmark(const SynthConfig& cfg,
                                         const std::vector<System>& systems,
                                         const std::vector<std::uint64_t>& seeds,
                                         const BenchOptions& opts);

}  // namespace xite
