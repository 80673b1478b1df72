#include "xite/synth.hpp"

#include <cmath>

#include <Eigen/QR>

#include "xite/error.hpp"
#include "xite/rng.hpp"

namespace xite {

namespace {

constexpr std::uint64_t kAxesStream = 0xA9E5;
// Per-run sample streams, mirroring the six splits of one benchmark cell.
constexpr std::uint64_t kSrcTrain = 1, kTgtTrain = 2, kTgtDev = 3, kTgtTest = 4, kSrcDev = 5,
                        kSrcTest = 6;

Eigen::MatrixXd gaussian_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) M(i, j) = rng.gaussian();
  }
  return M;
}

Eigen::MatrixXd thin_q(const Eigen::MatrixXd& A) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(A.rows(), A.cols());
  return Q;
}

std::vector<double> jitter_factors(const SynthConfig& cfg) {
  std::vector<double> c(cfg.r);
  const double span = static_cast<double>(std::max<std::uint32_t>(cfg.r - 1, 1));
  for (std::uint32_t j = 0; j < cfg.r; ++j) {
    const double t = static_cast<double>(j) / span;
    c[j] = cfg.jitter_geometric ? cfg.jitter_lo * std::pow(cfg.jitter_hi / cfg.jitter_lo, t)
                                : cfg.jitter_lo + (cfg.jitter_hi - cfg.jitter_lo) * t;
  }
  return c;
}

struct OffsetModel {
  Eigen::MatrixXd B;      // d x r orthonormal axes
  Eigen::VectorXd mean;   // offset-coordinate means (gamma * w)
  Eigen::VectorXd stdev;  // offset-coordinate stdevs (tau)
};

OffsetModel offset_model(const SynthConfig& cfg) {
  OffsetModel om;
  om.B = analytic_language_axis(cfg);
  const auto c = jitter_factors(cfg);
  om.mean.resize(cfg.r);
  om.stdev.resize(cfg.r);
  Eigen::VectorXd w(cfg.r);
  for (std::uint32_t j = 0; j < cfg.r; ++j) {
    om.stdev[j] = c[j] * cfg.gamma / std::sqrt(static_cast<double>(cfg.r));
    w[j] = std::pow(1.0 + om.stdev[j] * om.stdev[j] / 2.0, cfg.mean_power);
  }
  const double wn = w.norm();
  om.mean = cfg.gamma * (w / (wn > 0 ? wn : 1.0));
  return om;
}

Eigen::VectorXd class_mean(const SynthConfig& cfg, std::int32_t label) {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(cfg.d);
  mu[label] = cfg.delta / std::sqrt(2.0);  // pairwise distance = delta
  return mu;
}

// One language's samples: labels round-robin over classes, then for each
// record the task vector, the mapping-view vector, and (target only) the
// subspace offset, all from one stream.
void sample_language(const SynthConfig& cfg, const OffsetModel& om, bool is_target,
                     std::size_t n, std::uint64_t stream_seed, const std::string& id_prefix,
                     Dataset& out, Dataset* map_view) {
  Rng rng(stream_seed);
  const std::string& lang = is_target ? cfg.target_lang : cfg.source_lang;
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = static_cast<std::int32_t>(i % cfg.C);
    Eigen::VectorXd x = class_mean(cfg, label);
    for (std::uint32_t j = 0; j < cfg.d; ++j) x[j] += cfg.sigma * rng.gaussian();

    Eigen::VectorXd xm;
    if (map_view) {
      xm = class_mean(cfg, label);
      for (std::uint32_t j = 0; j < cfg.d; ++j) xm[j] += cfg.map_sigma * rng.gaussian();
    }

    if (is_target) {
      Eigen::VectorXd s(cfg.r);
      for (std::uint32_t j = 0; j < cfg.r; ++j) s[j] = om.mean[j] + om.stdev[j] * rng.gaussian();
      x += om.B * s;
    }

    EmbeddingRecord rec;
    rec.id = id_prefix + std::to_string(i);
    rec.lang = lang;
    rec.label = label;
    rec.vec.resize(cfg.d);
    for (std::uint32_t j = 0; j < cfg.d; ++j) rec.vec[j] = static_cast<float>(x[j]);
    out.records.push_back(std::move(rec));

    if (map_view) {
      EmbeddingRecord mv;
      mv.id = id_prefix + std::to_string(i);
      mv.lang = lang;
      mv.vec.resize(cfg.d);
      for (std::uint32_t j = 0; j < cfg.d; ++j) mv.vec[j] = static_cast<float>(xm[j]);
      map_view->records.push_back(std::move(mv));
    }
  }
}

Dataset empty_dataset(const SynthConfig& cfg, const std::string& name, DatasetRole role) {
  Dataset ds;
  ds.name = name;
  ds.d = cfg.d;
  ds.num_classes = cfg.C;
  ds.role = role;
  return ds;
}

}  // namespace

void SynthConfig::validate() const {
  if (d == 0 || C == 0) throw ValidationError("synth: d and C must be positive");
  if (C > d) throw ValidationError("synth: C must not exceed d (class means are axis-aligned)");
  if (r == 0 || r > d) throw ValidationError("synth: require 1 <= r <= d");
  if (delta < 0 || gamma < 0 || sigma < 0 || map_sigma < 0) {
    throw ValidationError("synth: delta, gamma, sigma, map_sigma must be >= 0");
  }
  if (n_src == 0 || n_tgt == 0) throw ValidationError("synth: n_src and n_tgt must be positive");
  if (jitter_lo <= 0 || jitter_hi < jitter_lo) {
    throw ValidationError("synth: require 0 < jitter_lo <= jitter_hi");
  }
  if (class_overlap < 0 || class_overlap > 1) {
    throw ValidationError("synth: class_overlap must lie in [0, 1]");
  }
  if (source_lang == target_lang) throw ValidationError("synth: languages must differ");
}

Eigen::MatrixXd analytic_language_axis(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(Rng::mix(cfg.seed, kAxesStream));
  if (!cfg.structured_axes || cfg.C >= cfg.d) {
    return thin_q(gaussian_matrix(rng, cfg.d, cfg.r));
  }
  // Lean each axis into the class-mean plane (dims < C) by `class_overlap`.
  Eigen::MatrixXd Gc = gaussian_matrix(rng, cfg.d, cfg.r);
  Eigen::MatrixXd Gw = gaussian_matrix(rng, cfg.d, cfg.r);
  Gc.bottomRows(cfg.d - cfg.C).setZero();
  Gw.topRows(cfg.C).setZero();
  Eigen::MatrixXd A(cfg.d, cfg.r);
  for (std::uint32_t j = 0; j < cfg.r; ++j) {
    const double nc = Gc.col(j).norm();
    const double nw = Gw.col(j).norm();
    if (nc < 1e-12 || nw < 1e-12) throw ComputeError("degenerate axis draw");
    A.col(j) = cfg.class_overlap * Gc.col(j) / nc +
               std::sqrt(1.0 - cfg.class_overlap * cfg.class_overlap) * Gw.col(j) / nw;
  }
  return thin_q(A);
}

SynthData generate_synthetic(const SynthConfig& cfg) {
  return generate_synthetic(cfg, cfg.seed, cfg.n_src, cfg.n_tgt, "");
}

SynthData generate_synthetic(const SynthConfig& cfg, std::uint64_t sample_seed,
                             std::size_t n_src, std::size_t n_tgt,
                             const std::string& id_prefix) {
  cfg.validate();
  const OffsetModel om = offset_model(cfg);

  SynthData data;
  data.source = empty_dataset(cfg, "synth." + id_prefix + "src", DatasetRole::kSource);
  data.target = empty_dataset(cfg, "synth." + id_prefix + "tgt", DatasetRole::kTarget);
  data.map_view = empty_dataset(cfg, "synth." + id_prefix + "map", DatasetRole::kMappingView);

  sample_language(cfg, om, false, n_src, Rng::mix(sample_seed, kSrcTrain),
                  id_prefix + "src-", data.source, &data.map_view);
  sample_language(cfg, om, true, n_tgt, Rng::mix(sample_seed, kTgtTrain),
                  id_prefix + "tgt-", data.target, &data.map_view);
  data.source.validate();
  data.target.validate();
  return data;
}

std::vector<MetricsReport> run_benchmark(const SynthConfig& cfg,
                                         const std::vector<System>& systems,
                                         const std::vector<std::uint64_t>& seeds,
                                         const BenchOptions& opts) {
  cfg.validate();
  if (systems.empty() || seeds.empty()) {
    throw ValidationError("benchmark needs at least one system and one seed");
  }
  const OffsetModel om = offset_model(cfg);

  std::vector<MetricsReport> rows;
  rows.reserve(systems.size() * seeds.size());
  for (std::uint64_t seed : seeds) {
    // Axes stay pinned by cfg.seed; each run seed redraws every split.
    auto stream = [&](std::uint64_t which) { return Rng::mix(cfg.seed ^ (seed * 0x10), which); };

    SynthData train;
    train.source = empty_dataset(cfg, "synth.src", DatasetRole::kSource);
    train.target = empty_dataset(cfg, "synth.tgt", DatasetRole::kTarget);
    train.map_view = empty_dataset(cfg, "synth.map", DatasetRole::kMappingView);
    sample_language(cfg, om, false, cfg.n_src, stream(kSrcTrain), "src-", train.source,
                    &train.map_view);
    sample_language(cfg, om, true, cfg.n_tgt, stream(kTgtTrain), "tgt-", train.target,
                    &train.map_view);

    Dataset tgt_dev = empty_dataset(cfg, "synth.tgt.dev", DatasetRole::kTarget);
    Dataset tgt_test = empty_dataset(cfg, "synth.tgt.test", DatasetRole::kTarget);
    Dataset src_dev = empty_dataset(cfg, "synth.src.dev", DatasetRole::kSource);
    Dataset src_test = empty_dataset(cfg, "synth.src.test", DatasetRole::kSource);
    sample_language(cfg, om, true, opts.tgt_dev, stream(kTgtDev), "tgtdev-", tgt_dev, nullptr);
    sample_language(cfg, om, true, opts.tgt_test, stream(kTgtTest), "tgttest-", tgt_test,
                    nullptr);
    sample_language(cfg, om, false, opts.src_dev, stream(kSrcDev), "srcdev-", src_dev, nullptr);
    sample_language(cfg, om, false, opts.src_test, stream(kSrcTest), "srctest-", src_test,
                    nullptr);

    // Balanced bilingual basis corpus from the head of each train split.
    const std::size_t nb = std::min(cfg.n_src, cfg.n_tgt);
    Dataset corpus = empty_dataset(cfg, "synth.basis-corpus", DatasetRole::kBasisCorpus);
    corpus.records.insert(corpus.records.end(), train.source.records.begin(),
                          train.source.records.begin() + static_cast<std::ptrdiff_t>(nb));
    corpus.records.insert(corpus.records.end(), train.target.records.begin(),
                          train.target.records.begin() + static_cast<std::ptrdiff_t>(nb));
    const LanguageBasis basis = derive_basis_from_corpus(
        corpus, cfg.source_lang, cfg.target_lang, opts.basis_k, opts.basis_shrinkage);

    SystemInputs in;
    in.source_train = &train.source;
    in.target_train = &train.target;
    in.target_dev = &tgt_dev;
    in.target_test = &tgt_test;
    in.source_dev = &src_dev;
    in.source_test = &src_test;
    in.mapping_view = &train.map_view;
    in.basis = &basis;

    for (System s : systems) {
      RunOptions ro;
      ro.system = s;
      ro.m = opts.m;
      ro.mapping_mode = opts.mapping_mode;
      ro.pair_policy = opts.pair_policy;
      ro.train_cfg = opts.train_cfg;
      ro.seed = seed;
      rows.push_back(run_single_system(in, ro).report);
    }
  }
  return rows;
}

}  // namespace xite
