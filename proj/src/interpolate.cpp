#include "xite/interpolate.hpp"

#include <cmath>

#include "xite/error.hpp"

namespace xite {

std::string mix_mode_name(MixMode mode) {
  switch (mode) {
    case MixMode::kRegReg: return "reg-reg";
    case MixMode::kRegLda: return "reg-lda";
    case MixMode::kTargetOnly: return "target-only";
    case MixMode::kSourceOnly: return "source-only";
  }
  throw ValidationError("unknown mix mode");
}

MixMode parse_mix_mode(const std::string& name) {
  if (name == "reg-reg") return MixMode::kRegReg;
  if (name == "reg-lda") return MixMode::kRegLda;
  if (name == "target-only") return MixMode::kTargetOnly;
  if (name == "source-only") return MixMode::kSourceOnly;
  throw ValidationError("unknown mix mode '" + name + "'");
}

Eigen::VectorXd mix_reg_reg(const Eigen::VectorXd& e_src, const Eigen::VectorXd& e_tgt) {
  if (e_src.size() != e_tgt.size()) {
    throw ValidationError("mix dimension mismatch: " + std::to_string(e_src.size()) + " vs " +
                          std::to_string(e_tgt.size()));
  }
  return e_src + e_tgt;
}

Eigen::VectorXd mix_reg_lda(const Eigen::VectorXd& e_src, const Eigen::VectorXd& e_tgt,
                            const LanguageBasis& basis) {
  if (e_src.size() != e_tgt.size()) {
    throw ValidationError("mix dimension mismatch: " + std::to_string(e_src.size()) + " vs " +
                          std::to_string(e_tgt.size()));
  }
  return e_src + project_onto_basis(basis, e_tgt);
}

std::vector<InterpolatedExample> assemble_training_set(const MappingTable& table,
                                                       const Dataset& source,
                                                       const Dataset& targets,
                                                       const AssembleOptions& opts,
                                                       const LanguageBasis* basis) {
  if (opts.mode == MixMode::kRegLda && !basis) {
    throw ValidationError("reg-lda assembly requires a basis");
  }
  const auto src_idx = source.index_by_id();
  const auto tgt_idx = targets.index_by_id();

  const auto pairs = expand_pairs(table, opts.pair_policy);
  std::string missing;
  for (const auto& p : pairs) {
    if (!src_idx.count(p.source_id)) missing += " source:" + p.source_id;
    if (!tgt_idx.count(p.target_id)) missing += " target:" + p.target_id;
  }
  if (!missing.empty()) throw ValidationError("unresolvable ids in mapping:" + missing);

  std::vector<InterpolatedExample> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    const auto& src = source.records[src_idx.at(p.source_id)];
    const auto& tgt = targets.records[tgt_idx.at(p.target_id)];

    InterpolatedExample ex;
    ex.target_id = p.target_id;
    ex.source_id = p.source_id;
    ex.mode = opts.mode;

    if (opts.use_gold_target_labels) {
      if (!tgt.label) {
        throw ValidationError("gold-label assembly: target '" + tgt.id + "' is unlabeled");
      }
      ex.label = *tgt.label;
    } else if (opts.mode == MixMode::kSourceOnly) {
      ex.label = src.label.value();
    } else {
      ex.label = p.label;
    }

    const Eigen::VectorXd e_src = to_eigen(src.vec);
    const Eigen::VectorXd e_tgt = to_eigen(tgt.vec);
    switch (opts.mode) {
      case MixMode::kRegReg: ex.vec = mix_reg_reg(e_src, e_tgt); break;
      case MixMode::kRegLda: ex.vec = mix_reg_lda(e_src, e_tgt, *basis); break;
      case MixMode::kTargetOnly: ex.vec = e_tgt; break;
      case MixMode::kSourceOnly: ex.vec = e_src; break;
    }
    if (opts.renormalize) {
      const double n = ex.vec.norm();
      if (n > 1e-12) ex.vec /= n;
    }
    out.push_back(std::move(ex));
  }
  return out;
}

Dataset examples_to_dataset(const std::vector<InterpolatedExample>& examples, std::uint32_t d,
                            std::uint32_t num_classes, const std::string& name) {
  Dataset ds;
  ds.name = name;
  ds.d = d;
  ds.num_classes = num_classes;
  ds.role = DatasetRole::kSource;  // every record labeled
  ds.records.reserve(examples.size());
  for (const auto& ex : examples) {
    EmbeddingRecord rec;
    rec.id = ex.target_id + "|" + ex.source_id;
    rec.lang = "mix";
    rec.label = ex.label;
    rec.vec.resize(d);
    for (std::uint32_t j = 0; j < d; ++j) rec.vec[j] = static_cast<float>(ex.vec[j]);
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

}  // namespace xite
