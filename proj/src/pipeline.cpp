#include "xite/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "xite/digest.hpp"
#include "xite/error.hpp"
#include "xite/store.hpp"

namespace fs = std::filesystem;

namespace xite {

namespace {

// Re-throw stage failures with the stage name, preserving the error class so
// the CLI exit code (2 validation / 3 compute) survives.
template <typename Fn>
auto stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError("stage " + name + ": " + e.what());
  } catch (const ComputeError& e) {
    throw ComputeError("stage " + name + ": " + e.what());
  } catch (const std::exception& e) {
    throw ComputeError("stage " + name + ": " + e.what());
  }
}

void mark_incomplete(const std::string& out_dir, const std::string& why) {
  std::ofstream out(fs::path(out_dir) / "INCOMPLETE");
  out << why << '\n';
}

}  // namespace

std::string PipelineConfig::canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << "v1|" << source_train << '|' << target_train << '|' << target_dev << '|' << target_test
     << '|' << source_dev << '|' << source_test << '|' << mapping_view << '|' << basis_corpus
     << '|' << system << '|' << m << '|' << mapping_mode << '|' << pair_policy << '|' << basis_k
     << '|' << basis_shrinkage << '|' << source_lang << '|' << target_lang << '|' << train.epochs
     << '|' << train.batch_size << '|' << train.lr << '|' << train.momentum << '|'
     << train.patience << '|' << seed;
  return os.str();
}

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": bad JSON: " + e.what());
  }
  PipelineConfig cfg;
  try {
    const auto& ds = j.at("datasets");
    cfg.source_train = ds.at("source_train").get<std::string>();
    cfg.target_train = ds.at("target_train").get<std::string>();
    cfg.target_dev = ds.at("target_dev").get<std::string>();
    cfg.target_test = ds.at("target_test").get<std::string>();
    cfg.source_dev = ds.at("source_dev").get<std::string>();
    cfg.source_test = ds.at("source_test").get<std::string>();
    cfg.mapping_view = ds.value("mapping_view", std::string{});
    cfg.basis_corpus = ds.value("basis_corpus", std::string{});
    cfg.system = j.value("system", cfg.system);
    cfg.m = j.value("m", cfg.m);
    cfg.mapping_mode = j.value("mapping_mode", cfg.mapping_mode);
    cfg.pair_policy = j.value("pair_policy", cfg.pair_policy);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
    if (j.contains("basis")) {
      const auto& b = j["basis"];
      cfg.basis_k = b.value("k", cfg.basis_k);
      cfg.basis_shrinkage = b.value("shrinkage", cfg.basis_shrinkage);
      cfg.source_lang = b.value("source_lang", cfg.source_lang);
      cfg.target_lang = b.value("target_lang", cfg.target_lang);
    }
    if (j.contains("train")) {
      const auto& t = j["train"];
      cfg.train.epochs = t.value("epochs", cfg.train.epochs);
      cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
      cfg.train.lr = t.value("lr", cfg.train.lr);
      cfg.train.momentum = t.value("momentum", cfg.train.momentum);
      cfg.train.patience = t.value("patience", cfg.train.patience);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return cfg;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "' for digest");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  return hex64(h);
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  const System system = parse_system(cfg.system);
  fs::create_directories(cfg.out_dir);
  const fs::path out(cfg.out_dir);
  std::error_code ec;
  fs::remove(out / "INCOMPLETE", ec);

  try {
    // load
    Dataset source_train, target_train, target_dev, target_test, source_dev, source_test;
    Dataset mapping_view, basis_corpus;
    stage("load", [&] {
      source_train = load_store(cfg.source_train);
      source_train.role = DatasetRole::kSource;
      source_train.validate();
      target_train = load_store(cfg.target_train);
      target_dev = load_store(cfg.target_dev);
      target_test = load_store(cfg.target_test);
      source_dev = load_store(cfg.source_dev);
      source_test = load_store(cfg.source_test);
      if (!cfg.mapping_view.empty()) mapping_view = load_store(cfg.mapping_view);
      if (!cfg.basis_corpus.empty()) basis_corpus = load_store(cfg.basis_corpus);
      return 0;
    });

    // map
    MappingTable table = stage("map", [&] {
      const MappingMode mode = cfg.mapping_mode == "similarity" ? MappingMode::kSimilarity
                               : cfg.mapping_mode == "random"
                                   ? MappingMode::kRandom
                                   : throw ValidationError("unknown mapping_mode '" +
                                                           cfg.mapping_mode + "'");
      MappingTable t = build_mapping(target_train, source_train, cfg.m, mode, cfg.seed,
                                     cfg.mapping_view.empty() ? nullptr : &mapping_view);
      save_mapping_jsonl(t, (out / "map.jsonl").string());
      return t;
    });

    // basis
    LanguageBasis basis;
    bool have_basis = false;
    if (!cfg.basis_corpus.empty()) {
      basis = stage("basis", [&] {
        LanguageBasis b = derive_basis_from_corpus(basis_corpus, cfg.source_lang,
                                                   cfg.target_lang, cfg.basis_k,
                                                   cfg.basis_shrinkage);
        save_basis(b, (out / "basis.xb").string());
        return b;
      });
      have_basis = true;
    }

    // augment
    Dataset trainset = stage("augment", [&] {
      AssembleOptions a;
      if (cfg.pair_policy == "top1") a.pair_policy = PairPolicy::kTop1;
      else if (cfg.pair_policy == "all_m") a.pair_policy = PairPolicy::kAllM;
      else throw ValidationError("unknown pair_policy '" + cfg.pair_policy + "'");
      switch (system) {
        case System::kSkyline:
          a.mode = MixMode::kTargetOnly;
          a.pair_policy = PairPolicy::kTop1;
          a.use_gold_target_labels = true;
          break;
        case System::kBaselinePS: a.mode = MixMode::kTargetOnly; break;
        case System::kXiteRegReg: a.mode = MixMode::kRegReg; break;
        case System::kXiteRegLda: a.mode = MixMode::kRegLda; break;
      }
      const auto examples = assemble_training_set(table, source_train, target_train, a,
                                                  have_basis ? &basis : nullptr);
      Dataset ts = examples_to_dataset(examples, source_train.d, source_train.num_classes,
                                       cfg.system + ".trainset");
      persist_store(ts, (out / "trainset.xite").string());
      return ts;
    });

    // train
    TrainResult tr = stage("train", [&] {
      TrainConfig tc = cfg.train;
      tc.seed = cfg.seed;
      tc.selection_split = "target-dev";
      TrainResult res = train(trainset, target_dev, tc);
      save_model(res.best, (out / "model.xm").string());
      save_history_csv(res.history, (out / "history.csv").string());
      return res;
    });

    // eval
    PipelineResult result;
    stage("eval", [&] {
      MetricsReport rep;
      rep.system = cfg.system;
      rep.m = cfg.m;
      rep.seed = cfg.seed;
      rep.selected_epoch = tr.best.epoch;
      rep.target_dev = tr.best.dev_accuracy;
      rep.target_test = accuracy(tr.best.model, target_test);
      const ForgettingReport fg = forgetting_report(tr.best, source_dev, source_test);
      rep.source_dev = fg.source_dev;
      rep.source_test = fg.source_test;
      bool gold = true;
      for (const auto& r : target_train.records) gold &= r.label.has_value();
      if (gold) {
        const ProjectionAccuracy pa = label_projection_accuracy(table, target_train);
        rep.proj_top1 = pa.top1;
        rep.proj_allm = pa.all_m;
        rep.proj_anym = pa.any_m;
      } else {
        rep.proj_top1 = rep.proj_allm = rep.proj_anym =
            std::numeric_limits<double>::quiet_NaN();
      }
      rep.config_digest = hex64(fnv1a64(cfg.canonical()));
      write_report_csv({rep}, (out / "report.csv").string());
      result.report = rep;
      return 0;
    });

    // manifest
    stage("manifest", [&] {
      nlohmann::json man;
      man["config_digest"] = hex64(fnv1a64(cfg.canonical()));
      auto add = [&](const char* key, const std::string& path) {
        if (!path.empty()) man[key][fs::path(path).filename().string()] = file_digest(path);
      };
      add("inputs", cfg.source_train);
      add("inputs", cfg.target_train);
      add("inputs", cfg.target_dev);
      add("inputs", cfg.target_test);
      add("inputs", cfg.source_dev);
      add("inputs", cfg.source_test);
      add("inputs", cfg.mapping_view);
      add("inputs", cfg.basis_corpus);
      for (const char* f : {"map.jsonl", "trainset.xite", "model.xm", "history.csv",
                            "report.csv"}) {
        add("outputs", (out / f).string());
      }
      if (have_basis) add("outputs", (out / "basis.xb").string());
      std::ofstream mf(out / "manifest.json");
      if (!mf) throw ValidationError("cannot write manifest");
      mf << man.dump(2) << '\n';
      return 0;
    });

    result.manifest_path = (out / "manifest.json").string();
    result.report_digest = file_digest((out / "report.csv").string());
    return result;
  } catch (const std::exception& e) {
    mark_incomplete(cfg.out_dir, e.what());
    throw;
  }
}

VizResult emit_projection_2d(const Dataset& data, const std::string& source_lang,
                             const std::string& target_lang, const LanguageBasis* basis,
                             const std::string& out_csv) {
  Eigen::MatrixXd X;
  std::vector<int> y;
  corpus_matrix(data, source_lang, target_lang, X, y);
  std::size_t n0 = 0, n1 = 0;
  for (int v : y) (v == 0 ? n0 : n1) += 1;
  if (n0 < 2 || n1 < 2) {
    throw ValidationError("viz needs at least 2 records per language");
  }

  std::ofstream out(out_csv);
  if (!out) throw ValidationError("cannot write '" + out_csv + "'");
  out << "view,x,y,lang\n";
  out.precision(17);

  VizResult result;
  auto emit_view = [&](const char* view, const Eigen::MatrixXd& M) {
    const Eigen::VectorXd mean = M.rowwise().mean();
    const Eigen::MatrixXd Mc = M.colwise() - mean;
    const Eigen::MatrixXd cov = Mc * Mc.transpose() / static_cast<double>(M.cols() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success) throw ComputeError("viz: eigendecomposition failed");
    const Eigen::Index d = M.rows();
    if (d < 2 || es.eigenvalues()[d - 1] <= 1e-18) {
      throw ComputeError("viz: degenerate covariance");
    }
    const Eigen::VectorXd p1 = es.eigenvectors().col(d - 1);
    const Eigen::VectorXd p2 = es.eigenvectors().col(d - 2);
    for (Eigen::Index i = 0; i < M.cols(); ++i) {
      out << view << ',' << p1.dot(Mc.col(i)) << ',' << p2.dot(Mc.col(i)) << ','
          << (y[static_cast<std::size_t>(i)] == 0 ? source_lang : target_lang) << '\n';
      ++result.rows;
    }
  };

  emit_view("raw", X);
  double raw_best = 0.0;
  for (std::uint32_t j = 0; j < data.d; ++j) {
    raw_best = std::max(raw_best,
                        fisher_ratio(X, y, Eigen::VectorXd::Unit(data.d, j)));
  }
  result.raw_fisher = raw_best;

  if (basis) {
    const Eigen::MatrixXd Xp = basis->V * (basis->V.transpose() * X);
    emit_view("projected", Xp);
    double best = 0.0;
    for (Eigen::Index j = 0; j < basis->V.cols(); ++j) {
      best = std::max(best, fisher_ratio(Xp, y, basis->V.col(j)));
    }
    result.projected_fisher = best;
  }
  if (!out) throw ValidationError("write failed for '" + out_csv + "'");

  std::ofstream fout(out_csv + ".fisher.csv");
  if (!fout) throw ValidationError("cannot write '" + out_csv + ".fisher.csv'");
  fout.precision(17);
  fout << "view,fisher\n";
  fout << "raw," << result.raw_fisher << '\n';
  if (result.projected_fisher) fout << "projected," << *result.projected_fisher << '\n';
  return result;
}

}  // namespace xite
