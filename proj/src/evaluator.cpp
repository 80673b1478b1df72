#include "xite/evaluator.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "xite/digest.hpp"
#include "xite/error.hpp"

namespace xite {

const char* kFrozenEmbeddingCaveat =
    "frozen-embedding linear-head results; not comparable to fine-tuned encoders";

std::string system_name(System s) {
  switch (s) {
    case System::kSkyline: return "skyline";
    case System::kBaselinePS: return "baseline-ps";
    case System::kXiteRegReg: return "xite-reg-reg";
    case System::kXiteRegLda: return "xite-reg-lda";
  }
  throw ValidationError("unknown system");
}

System parse_system(const std::string& name) {
  if (name == "skyline") return System::kSkyline;
  if (name == "baseline-ps") return System::kBaselinePS;
  if (name == "xite-reg-reg") return System::kXiteRegReg;
  if (name == "xite-reg-lda") return System::kXiteRegLda;
  throw ValidationError("unknown system '" + name + "'");
}

double accuracy(const HeadModel& model, const Dataset& split) {
  if (split.size() == 0) throw ValidationError("accuracy over empty split");
  std::size_t correct = 0;
  Eigen::VectorXd x(split.d);
  for (const auto& rec : split.records) {
    if (!rec.label) throw ValidationError("record '" + rec.id + "' is unlabeled");
    for (std::uint32_t j = 0; j < split.d; ++j) x[j] = rec.vec[j];
    if (predict(model, x).first == *rec.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(split.size());
}

ProjectionAccuracy label_projection_accuracy(const MappingTable& table, const Dataset& gold) {
  if (table.entries.empty()) throw ValidationError("empty mapping table");
  const auto idx = gold.index_by_id();
  std::size_t top1_hits = 0, pair_hits = 0, pairs = 0, any_hits = 0;
  for (const auto& entry : table.entries) {
    auto it = idx.find(entry.target_id);
    if (it == idx.end() || !gold.records[it->second].label) {
      throw ValidationError("no gold label for target '" + entry.target_id + "'");
    }
    const std::int32_t g = *gold.records[it->second].label;
    if (entry.neighbors.empty()) {
      throw ValidationError("mapping entry '" + entry.target_id + "' has no neighbors");
    }
    top1_hits += (entry.neighbors.front().label == g);
    bool any = false;
    for (const auto& nb : entry.neighbors) {
      pair_hits += (nb.label == g);
      any |= (nb.label == g);
      ++pairs;
    }
    any_hits += any;
  }
  const double n = static_cast<double>(table.entries.size());
  return {static_cast<double>(top1_hits) / n, static_cast<double>(pair_hits) / pairs,
          static_cast<double>(any_hits) / n};
}

ForgettingReport forgetting_report(const Checkpoint& ckpt, const Dataset& source_dev,
                                   const Dataset& source_test) {
  if (ckpt.selection_provenance != "target-dev") {
    throw ValidationError("forgetting report requires a target-dev-selected checkpoint, got '" +
                          ckpt.selection_provenance + "'");
  }
  return {accuracy(ckpt.model, source_dev), accuracy(ckpt.model, source_test),
          ckpt.selection_provenance};
}

namespace {

std::string run_digest(const SystemInputs& in, const RunOptions& opts) {
  std::ostringstream os;
  os << system_name(opts.system) << '|' << opts.m << '|'
     << (opts.mapping_mode == MappingMode::kSimilarity ? "sim" : "rnd") << '|'
     << (opts.pair_policy == PairPolicy::kTop1 ? "top1" : "all_m") << '|' << opts.seed << '|'
     << opts.train_cfg.epochs << ':' << opts.train_cfg.batch_size << ':' << opts.train_cfg.lr
     << ':' << opts.train_cfg.momentum << '|' << in.source_train->name << ':'
     << in.source_train->size() << '|' << in.target_train->name << ':' << in.target_train->size();
  if (in.basis) os << "|k=" << in.basis->k;
  return hex64(fnv1a64(os.str()));
}

bool all_labeled(const Dataset& ds) {
  for (const auto& rec : ds.records) {
    if (!rec.label) return false;
  }
  return true;
}

}  // namespace

SystemRun run_single_system(const SystemInputs& in, const RunOptions& opts) {
  if (!in.source_train || !in.target_train || !in.target_dev || !in.target_test ||
      !in.source_dev || !in.source_test) {
    throw ValidationError("run_single_system: all six dataset splits are required");
  }
  if (opts.system == System::kXiteRegLda && !in.basis) {
    throw ValidationError("xite-reg-lda requires a basis");
  }

  const MappingTable table = build_mapping(*in.target_train, *in.source_train, opts.m,
                                           opts.mapping_mode, opts.seed, in.mapping_view);

  AssembleOptions aopts;
  aopts.pair_policy = opts.pair_policy;
  switch (opts.system) {
    case System::kSkyline:
      aopts.mode = MixMode::kTargetOnly;
      aopts.pair_policy = PairPolicy::kTop1;  // one gold example per target
      aopts.use_gold_target_labels = true;
      break;
    case System::kBaselinePS:
      aopts.mode = MixMode::kTargetOnly;
      break;
    case System::kXiteRegReg:
      aopts.mode = MixMode::kRegReg;
      break;
    case System::kXiteRegLda:
      aopts.mode = MixMode::kRegLda;
      break;
  }
  const auto examples =
      assemble_training_set(table, *in.source_train, *in.target_train, aopts, in.basis);
  const Dataset trainset = examples_to_dataset(examples, in.source_train->d,
                                               in.source_train->num_classes,
                                               system_name(opts.system) + ".trainset");

  TrainConfig cfg = opts.train_cfg;
  cfg.seed = opts.seed;
  cfg.selection_split = "target-dev";
  const TrainResult tr = train(trainset, *in.target_dev, cfg);

  SystemRun run;
  run.checkpoint = tr.best;
  auto& rep = run.report;
  rep.system = system_name(opts.system);
  rep.m = opts.m;
  rep.seed = opts.seed;
  rep.selected_epoch = tr.best.epoch;
  rep.target_dev = tr.best.dev_accuracy;
  rep.target_test = accuracy(tr.best.model, *in.target_test);
  const ForgettingReport fg = forgetting_report(tr.best, *in.source_dev, *in.source_test);
  rep.source_dev = fg.source_dev;
  rep.source_test = fg.source_test;
  if (all_labeled(*in.target_train)) {
    const ProjectionAccuracy pa = label_projection_accuracy(table, *in.target_train);
    rep.proj_top1 = pa.top1;
    rep.proj_allm = pa.all_m;
    rep.proj_anym = pa.any_m;
  } else {
    rep.proj_top1 = rep.proj_allm = rep.proj_anym = std::numeric_limits<double>::quiet_NaN();
  }
  rep.config_digest = run_digest(in, opts);
  return run;
}

std::vector<MetricsReport> m_sweep(const SystemInputs& in, const std::vector<std::size_t>& m_list,
                                   const std::vector<System>& systems,
                                   const std::vector<std::uint64_t>& seeds,
                                   const RunOptions& base) {
  std::vector<MetricsReport> rows;
  rows.reserve(m_list.size() * systems.size() * seeds.size());
  for (std::size_t m : m_list) {
    for (System s : systems) {
      for (std::uint64_t seed : seeds) {
        RunOptions opts = base;
        opts.m = m;
        opts.system = s;
        opts.seed = seed;
        rows.push_back(run_single_system(in, opts).report);
      }
    }
  }
  return rows;
}

void write_report_csv(const std::vector<MetricsReport>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << "system,m,seed,target_dev,target_test,source_dev,source_test,"
         "proj_top1,proj_allm,selected_epoch,proj_anym,config_digest,caveat\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << r.system << ',' << r.m << ',' << r.seed << ',' << r.target_dev << ','
        << r.target_test << ',' << r.source_dev << ',' << r.source_test << ',' << r.proj_top1
        << ',' << r.proj_allm << ',' << r.selected_epoch << ',' << r.proj_anym << ','
        << r.config_digest << ",\"" << r.caveat << "\"\n";
  }
  if (!out) throw ValidationError("write failed for '" + path + "'");
}

}  // namespace xite
