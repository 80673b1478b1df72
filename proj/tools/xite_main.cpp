#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "xite/basis.hpp"
#include "xite/digest.hpp"
#include "xite/error.hpp"
#include "xite/evaluator.hpp"
#include "xite/interpolate.hpp"
#include "xite/mapper.hpp"
#include "xite/pipeline.hpp"
#include "xite/store.hpp"
#include "xite/synth.hpp"
#include "xite/trainer.hpp"

namespace {

using namespace xite;

DatasetRole parse_role(const std::string& s) {
  if (s == "source") return DatasetRole::kSource;
  if (s == "target") return DatasetRole::kTarget;
  if (s == "basis-corpus") return DatasetRole::kBasisCorpus;
  if (s == "mapping-view") return DatasetRole::kMappingView;
  throw ValidationError("unknown role '" + s + "'");
}

MappingMode parse_mapping_mode(const std::string& s) {
  if (s == "similarity") return MappingMode::kSimilarity;
  if (s == "random") return MappingMode::kRandom;
  throw ValidationError("unknown mapping mode '" + s + "'");
}

PairPolicy parse_pair_policy(const std::string& s) {
  if (s == "top1") return PairPolicy::kTop1;
  if (s == "all_m") return PairPolicy::kAllM;
  throw ValidationError("unknown pair policy '" + s + "'");
}

SynthConfig load_synth_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": bad JSON: " + e.what());
  }
  SynthConfig cfg;
  cfg.d = j.value("d", cfg.d);
  cfg.C = j.value("C", cfg.C);
  cfg.delta = j.value("delta", cfg.delta);
  cfg.r = j.value("r", cfg.r);
  cfg.gamma = j.value("gamma", cfg.gamma);
  cfg.sigma = j.value("sigma", cfg.sigma);
  cfg.n_src = j.value("n_src", cfg.n_src);
  cfg.n_tgt = j.value("n_tgt", cfg.n_tgt);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.structured_axes = j.value("structured_axes", cfg.structured_axes);
  cfg.class_overlap = j.value("class_overlap", cfg.class_overlap);
  cfg.jitter_lo = j.value("jitter_lo", cfg.jitter_lo);
  cfg.jitter_hi = j.value("jitter_hi", cfg.jitter_hi);
  cfg.jitter_geometric = j.value("jitter_geometric", cfg.jitter_geometric);
  cfg.mean_power = j.value("mean_power", cfg.mean_power);
  cfg.map_sigma = j.value("map_sigma", cfg.map_sigma);
  cfg.source_lang = j.value("source_lang", cfg.source_lang);
  cfg.target_lang = j.value("target_lang", cfg.target_lang);
  cfg.validate();
  return cfg;
}

std::vector<System> parse_systems(const std::string& s) {
  if (s == "all") {
    return {System::kSkyline, System::kBaselinePS, System::kXiteRegReg, System::kXiteRegLda};
  }
  std::vector<System> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_system(item));
  if (out.empty()) throw ValidationError("no systems given");
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& s) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(static_cast<T>(std::stoull(item)));
  }
  if (out.empty()) throw ValidationError("empty list");
  return out;
}

void print_bench_summary(const std::vector<MetricsReport>& rows) {
  std::map<std::string, std::vector<double>> tt, st;
  for (const auto& r : rows) {
    tt[r.system].push_back(r.target_test);
    st[r.system].push_back(r.source_test);
  }
  auto mean_sd = [](const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
    double var = 0;
    for (double x : v) var += (x - m) * (x - m);
    var = v.size() > 1 ? var / (v.size() - 1) : 0.0;
    return std::pair<double, double>(m, std::sqrt(var));
  };
  std::cout << "system            target_test        source_test\n";
  for (const auto& [name, v] : tt) {
    const auto [tm, ts] = mean_sd(v);
    const auto [sm, ss] = mean_sd(st[name]);
    std::cout << name;
    for (std::size_t i = name.size(); i < 18; ++i) std::cout << ' ';
    std::cout.setf(std::ios::fixed);
    std::cout.precision(4);
    std::cout << tm << " +/- " << ts << "   " << sm << " +/- " << ss << '\n';
  }
  std::cout << "note: " << kFrozenEmbeddingCaveat << '\n';
}

int dispatch(int argc, char** argv) {
  CLI::App app{"xite: cross-lingual embedding augmentation toolkit"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "JSONL -> binary store");
  std::string in_path, out_path, role = "target";
  std::uint32_t opt_d = 0, opt_classes = 0;
  ingest->add_option("--in", in_path)->required();
  ingest->add_option("--out", out_path)->required();
  ingest->add_option("--d", opt_d, "expected dimension (0 = infer)");
  ingest->add_option("--classes", opt_classes, "class count (0 = infer)");
  ingest->add_option("--role", role, "source|target|basis-corpus|mapping-view");
  ingest->callback([&] {
    Dataset ds = ingest_jsonl(in_path, opt_d, opt_classes);
    ds.role = parse_role(role);
    ds.validate();
    persist_store(ds, out_path);
    std::cout << "ingested " << ds.size() << " records (d=" << ds.d << ", C=" << ds.num_classes
              << ") -> " << out_path << '\n';
  });

  // split
  auto* split = app.add_subcommand("split", "deterministic train/dev/test split");
  SplitSpec spec;
  std::string split_in, split_prefix;
  split->add_option("--in", split_in)->required();
  split->add_option("--train", spec.train)->required();
  split->add_option("--dev", spec.dev)->required();
  split->add_option("--test", spec.test)->required();
  split->add_option("--seed", spec.seed);
  split->add_flag("--hide-train-labels", spec.hide_train_labels);
  split->add_option("--out-prefix", split_prefix)->required();
  split->callback([&] {
    const Splits s = make_splits(load_store(split_in), spec);
    persist_store(s.train, split_prefix + ".train.xite");
    persist_store(s.dev, split_prefix + ".dev.xite");
    persist_store(s.test, split_prefix + ".test.xite");
    std::cout << "split " << spec.train << '/' << spec.dev << '/' << spec.test << " -> "
              << split_prefix << ".{train,dev,test}.xite\n";
  });

  // map
  auto* map_cmd = app.add_subcommand("map", "top-m label-projected mapping");
  std::string map_targets, map_source, map_emb, map_mode = "similarity", map_out;
  std::size_t map_m = 5;
  std::uint64_t map_seed = 42;
  map_cmd->add_option("--targets", map_targets)->required();
  map_cmd->add_option("--source", map_source)->required();
  map_cmd->add_option("--map-emb", map_emb, "alternate mapping embeddings, keyed by id");
  map_cmd->add_option("--m", map_m);
  map_cmd->add_option("--mode", map_mode, "similarity|random");
  map_cmd->add_option("--seed", map_seed);
  map_cmd->add_option("--out", map_out)->required();
  map_cmd->callback([&] {
    const Dataset targets = load_store(map_targets);
    Dataset source = load_store(map_source);
    source.role = DatasetRole::kSource;
    source.validate();
    Dataset view;
    if (!map_emb.empty()) view = load_store(map_emb);
    const MappingTable table = build_mapping(targets, source, map_m,
                                             parse_mapping_mode(map_mode), map_seed,
                                             map_emb.empty() ? nullptr : &view);
    save_mapping_jsonl(table, map_out);
    std::cout << "mapped " << table.entries.size() << " targets (m=" << map_m << ") -> "
              << map_out << '\n';
  });

  // basis
  auto* basis_cmd = app.add_subcommand("basis", "derive language-separability basis");
  std::string basis_corpus, basis_out, basis_src_lang = "en", basis_tgt_lang = "xx",
              neutral_out;
  std::uint32_t basis_k = 400;
  double basis_shrinkage = 1e-4;
  basis_cmd->add_option("--corpus", basis_corpus)->required();
  basis_cmd->add_option("--k", basis_k);
  basis_cmd->add_option("--shrinkage", basis_shrinkage);
  basis_cmd->add_option("--source-lang", basis_src_lang);
  basis_cmd->add_option("--target-lang", basis_tgt_lang);
  basis_cmd->add_option("--out", basis_out)->required();
  basis_cmd->add_option("--neutral-out", neutral_out,
                        "experimental: also write the language-neutral complement basis");
  basis_cmd->callback([&] {
    const Dataset corpus = load_store(basis_corpus);
    const std::uint32_t k = std::min<std::uint32_t>(basis_k, corpus.d);
    LanguageBasis b = derive_basis_from_corpus(corpus, basis_src_lang, basis_tgt_lang, k,
                                               basis_shrinkage);
    save_basis(b, basis_out);
    std::cout << "basis k=" << b.k << " (requested " << basis_k << ") d=" << b.d() << " -> "
              << basis_out << '\n';
    if (!neutral_out.empty()) {
      LanguageBasis neutral = b;
      neutral.V = neutral_complement(b);
      neutral.k = static_cast<std::uint32_t>(neutral.V.cols());
      neutral.axis_fisher.assign(neutral.k, 0.0);
      save_basis(neutral, neutral_out);
      std::cout << "neutral complement k=" << neutral.k << " -> " << neutral_out << '\n';
    }
  });

  // basis-stats
  auto* stats_cmd = app.add_subcommand("basis-stats", "per-axis Fisher ratios on held-out data");
  std::string stats_basis, stats_eval, stats_out;
  stats_cmd->add_option("--basis", stats_basis)->required();
  stats_cmd->add_option("--eval", stats_eval)->required();
  stats_cmd->add_option("--out", stats_out)->required();
  stats_cmd->callback([&] {
    const LanguageBasis b = load_basis(stats_basis);
    const Dataset held = load_store(stats_eval);
    Eigen::MatrixXd X;
    std::vector<int> y;
    corpus_matrix(held, b.source_lang, b.target_lang, X, y);
    std::ofstream out(stats_out);
    if (!out) throw ValidationError("cannot write '" + stats_out + "'");
    out << "axis,extraction_fisher,eval_fisher\n";
    out.precision(17);
    for (std::uint32_t i = 0; i < b.k; ++i) {
      out << i << ',' << b.axis_fisher[i] << ',' << fisher_ratio(X, y, b.V.col(i)) << '\n';
    }
    std::cout << "wrote " << b.k << " axis rows -> " << stats_out << '\n';
  });

  // augment
  auto* aug_cmd = app.add_subcommand("augment", "assemble interpolated training set");
  std::string aug_map, aug_source, aug_targets, aug_mode = "reg-reg", aug_basis,
              aug_pairs = "all_m", aug_out;
  bool aug_gold = false, aug_renorm = false;
  aug_cmd->add_option("--map", aug_map)->required();
  aug_cmd->add_option("--source", aug_source)->required();
  aug_cmd->add_option("--targets", aug_targets)->required();
  aug_cmd->add_option("--mode", aug_mode, "reg-reg|reg-lda|target-only|source-only");
  aug_cmd->add_option("--basis", aug_basis);
  aug_cmd->add_option("--pairs", aug_pairs, "top1|all_m");
  aug_cmd->add_flag("--gold-labels", aug_gold, "use gold target labels (Skyline assembly)");
  aug_cmd->add_flag("--renormalize", aug_renorm, "ablation: unit-normalize mixed vectors");
  aug_cmd->add_option("--out", aug_out)->required();
  aug_cmd->callback([&] {
    const MappingTable table = load_mapping_jsonl(aug_map);
    Dataset source = load_store(aug_source);
    source.role = DatasetRole::kSource;
    source.validate();
    const Dataset targets = load_store(aug_targets);
    AssembleOptions a;
    a.mode = parse_mix_mode(aug_mode);
    a.pair_policy = parse_pair_policy(aug_pairs);
    a.use_gold_target_labels = aug_gold;
    a.renormalize = aug_renorm;
    LanguageBasis b;
    const bool have_basis = !aug_basis.empty();
    if (have_basis) b = load_basis(aug_basis);
    const auto examples =
        assemble_training_set(table, source, targets, a, have_basis ? &b : nullptr);
    persist_store(examples_to_dataset(examples, source.d, source.num_classes, aug_out),
                  aug_out);
    std::cout << "assembled " << examples.size() << " examples (" << aug_mode << ") -> "
              << aug_out << '\n';
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "train the softmax head");
  std::string tr_trainset, tr_dev, tr_out, tr_history;
  TrainConfig tc;
  bool paper_scale = false;
  train_cmd->add_option("--trainset", tr_trainset)->required();
  train_cmd->add_option("--dev", tr_dev)->required();
  train_cmd->add_option("--epochs", tc.epochs);
  train_cmd->add_option("--batch", tc.batch_size);
  train_cmd->add_option("--lr", tc.lr);
  train_cmd->add_option("--momentum", tc.momentum);
  train_cmd->add_option("--patience", tc.patience);
  train_cmd->add_option("--seed", tc.seed);
  train_cmd->add_flag("--paper-scale", paper_scale,
                      "use the documented full-scale preset (head-only here)");
  train_cmd->add_option("--out", tr_out)->required();
  train_cmd->add_option("--history", tr_history);
  train_cmd->callback([&] {
    if (paper_scale) {
      const auto seed = tc.seed;
      tc = paper_scale_preset();
      tc.seed = seed;
    }
    tc.selection_split = "target-dev";
    const TrainResult res = train(load_store(tr_trainset), load_store(tr_dev), tc);
    save_model(res.best, tr_out);
    if (!tr_history.empty()) save_history_csv(res.history, tr_history);
    std::cout << "best epoch " << res.best.epoch << " dev_acc " << res.best.dev_accuracy
              << " -> " << tr_out << '\n';
  });

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained model");
  std::string ev_model, ev_tdev, ev_ttest, ev_sdev, ev_stest, ev_map, ev_targets, ev_system,
      ev_out;
  std::size_t ev_m = 5;
  std::uint64_t ev_seed = 42;
  eval_cmd->add_option("--model", ev_model)->required();
  eval_cmd->add_option("--target-dev", ev_tdev)->required();
  eval_cmd->add_option("--target-test", ev_ttest)->required();
  eval_cmd->add_option("--source-dev", ev_sdev)->required();
  eval_cmd->add_option("--source-test", ev_stest)->required();
  eval_cmd->add_option("--map", ev_map, "mapping table for projection accuracies");
  eval_cmd->add_option("--targets", ev_targets, "gold-labeled targets for projection accuracies");
  eval_cmd->add_option("--system", ev_system)->required();
  eval_cmd->add_option("--m", ev_m);
  eval_cmd->add_option("--seed", ev_seed);
  eval_cmd->add_option("--out", ev_out)->required();
  eval_cmd->callback([&] {
    const Checkpoint ckpt = load_model(ev_model);
    MetricsReport rep;
    rep.system = ev_system;
    rep.m = ev_m;
    rep.seed = ev_seed;
    rep.selected_epoch = ckpt.epoch;
    rep.target_dev = accuracy(ckpt.model, load_store(ev_tdev));
    rep.target_test = accuracy(ckpt.model, load_store(ev_ttest));
    const ForgettingReport fg =
        forgetting_report(ckpt, load_store(ev_sdev), load_store(ev_stest));
    rep.source_dev = fg.source_dev;
    rep.source_test = fg.source_test;
    if (!ev_map.empty() && !ev_targets.empty()) {
      const ProjectionAccuracy pa =
          label_projection_accuracy(load_mapping_jsonl(ev_map), load_store(ev_targets));
      rep.proj_top1 = pa.top1;
      rep.proj_allm = pa.all_m;
      rep.proj_anym = pa.any_m;
    } else {
      rep.proj_top1 = rep.proj_allm = rep.proj_anym = std::numeric_limits<double>::quiet_NaN();
    }
    rep.config_digest = hex64(fnv1a64(ev_model + "|" + ev_system + "|" + std::to_string(ev_m)));
    write_report_csv({rep}, ev_out);
    std::cout << "target_test " << rep.target_test << " source_test " << rep.source_test
              << " -> " << ev_out << '\n';
  });

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "m-sweep over systems and seeds");
  std::string sw_src, sw_tgt, sw_tdev, sw_ttest, sw_sdev, sw_stest, sw_view, sw_corpus;
  std::string sw_m = "1,3,5,7,10,15", sw_systems = "all", sw_seeds = "1,2,3", sw_out,
              sw_pairs = "all_m", sw_src_lang = "en", sw_tgt_lang = "xx";
  std::uint32_t sw_k = 4;
  double sw_shrinkage = 1e-4;
  TrainConfig sw_tc;
  sweep_cmd->add_option("--source-train", sw_src)->required();
  sweep_cmd->add_option("--target-train", sw_tgt)->required();
  sweep_cmd->add_option("--target-dev", sw_tdev)->required();
  sweep_cmd->add_option("--target-test", sw_ttest)->required();
  sweep_cmd->add_option("--source-dev", sw_sdev)->required();
  sweep_cmd->add_option("--source-test", sw_stest)->required();
  sweep_cmd->add_option("--map-emb", sw_view);
  sweep_cmd->add_option("--basis-corpus", sw_corpus);
  sweep_cmd->add_option("--k", sw_k);
  sweep_cmd->add_option("--shrinkage", sw_shrinkage);
  sweep_cmd->add_option("--source-lang", sw_src_lang);
  sweep_cmd->add_option("--target-lang", sw_tgt_lang);
  sweep_cmd->add_option("--m", sw_m, "comma list");
  sweep_cmd->add_option("--systems", sw_systems, "all or comma list");
  sweep_cmd->add_option("--seeds", sw_seeds, "comma list");
  sweep_cmd->add_option("--pairs", sw_pairs);
  sweep_cmd->add_option("--epochs", sw_tc.epochs);
  sweep_cmd->add_option("--batch", sw_tc.batch_size);
  sweep_cmd->add_option("--lr", sw_tc.lr);
  sweep_cmd->add_option("--out", sw_out)->required();
  sweep_cmd->callback([&] {
    Dataset src = load_store(sw_src);
    src.role = DatasetRole::kSource;
    src.validate();
    const Dataset tgt = load_store(sw_tgt);
    const Dataset tdev = load_store(sw_tdev), ttest = load_store(sw_ttest);
    const Dataset sdev = load_store(sw_sdev), stest = load_store(sw_stest);
    Dataset view;
    LanguageBasis basis;
    SystemInputs in;
    in.source_train = &src;
    in.target_train = &tgt;
    in.target_dev = &tdev;
    in.target_test = &ttest;
    in.source_dev = &sdev;
    in.source_test = &stest;
    if (!sw_view.empty()) {
      view = load_store(sw_view);
      in.mapping_view = &view;
    }
    if (!sw_corpus.empty()) {
      basis = derive_basis_from_corpus(load_store(sw_corpus), sw_src_lang, sw_tgt_lang,
                                       std::min<std::uint32_t>(sw_k, src.d), sw_shrinkage);
      in.basis = &basis;
    }
    RunOptions base;
    base.pair_policy = parse_pair_policy(sw_pairs);
    base.train_cfg = sw_tc;
    const auto rows = m_sweep(in, parse_list<std::size_t>(sw_m), parse_systems(sw_systems),
                              parse_list<std::uint64_t>(sw_seeds), base);
    write_report_csv(rows, sw_out);
    std::cout << rows.size() << " sweep rows -> " << sw_out << '\n';
  });

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic bilingual corpus");
  std::string sy_config, sy_src, sy_tgt, sy_map;
  synth_cmd->add_option("--config", sy_config)->required();
  synth_cmd->add_option("--out-src", sy_src)->required();
  synth_cmd->add_option("--out-tgt", sy_tgt)->required();
  synth_cmd->add_option("--out-map", sy_map, "also write the mapping-view embeddings");
  synth_cmd->callback([&] {
    const SynthData data = generate_synthetic(load_synth_config(sy_config));
    persist_store(data.source, sy_src);
    persist_store(data.target, sy_tgt);
    if (!sy_map.empty()) persist_store(data.map_view, sy_map);
    std::cout << "synth: " << data.source.size() << " source + " << data.target.size()
              << " target records\n";
  });

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "end-to-end synthetic benchmark");
  std::string bn_config, bn_systems = "all", bn_mode = "similarity", bn_out;
  std::size_t bn_seeds = 5, bn_m = 5;
  std::uint32_t bn_k = 4;
  bench_cmd->add_option("--config", bn_config)->required();
  bench_cmd->add_option("--systems", bn_systems);
  bench_cmd->add_option("--seeds", bn_seeds, "number of seeds (1..N)");
  bench_cmd->add_option("--m", bn_m);
  bench_cmd->add_option("--k", bn_k);
  bench_cmd->add_option("--mode", bn_mode, "similarity|random");
  bench_cmd->add_option("--out", bn_out);
  bench_cmd->callback([&] {
    const SynthConfig cfg = load_synth_config(bn_config);
    std::vector<std::uint64_t> seeds(bn_seeds);
    std::iota(seeds.begin(), seeds.end(), 1);
    BenchOptions opts;
    opts.m = bn_m;
    opts.basis_k = bn_k;
    opts.mapping_mode = parse_mapping_mode(bn_mode);
    const auto rows = run_benchmark(cfg, parse_systems(bn_systems), seeds, opts);
    if (!bn_out.empty()) write_report_csv(rows, bn_out);
    print_bench_summary(rows);
  });

  // viz
  auto* viz_cmd = app.add_subcommand("viz", "2D principal-axis projection export");
  std::string vz_in, vz_basis, vz_out, vz_src_lang = "en", vz_tgt_lang = "xx";
  viz_cmd->add_option("--in", vz_in)->required();
  viz_cmd->add_option("--basis", vz_basis);
  viz_cmd->add_option("--source-lang", vz_src_lang);
  viz_cmd->add_option("--target-lang", vz_tgt_lang);
  viz_cmd->add_option("--out", vz_out)->required();
  viz_cmd->callback([&] {
    LanguageBasis b;
    const bool have = !vz_basis.empty();
    if (have) {
      b = load_basis(vz_basis);
      vz_src_lang = b.source_lang.empty() ? vz_src_lang : b.source_lang;
      vz_tgt_lang = b.target_lang.empty() ? vz_tgt_lang : b.target_lang;
    }
    const VizResult res = emit_projection_2d(load_store(vz_in), vz_src_lang, vz_tgt_lang,
                                             have ? &b : nullptr, vz_out);
    std::cout << res.rows << " rows -> " << vz_out << "; raw fisher " << res.raw_fisher;
    if (res.projected_fisher) std::cout << ", projected fisher " << *res.projected_fisher;
    std::cout << '\n';
  });

  // run
  auto* run_cmd = app.add_subcommand("run", "full pipeline from a JSON config");
  std::string run_config;
  run_cmd->add_option("--config", run_config)->required();
  run_cmd->callback([&] {
    const PipelineResult res = run_pipeline(load_pipeline_config(run_config));
    std::cout << "pipeline ok: " << res.report.system << " target_test "
              << res.report.target_test << "; report digest " << res.report_digest << '\n';
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const xite::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
