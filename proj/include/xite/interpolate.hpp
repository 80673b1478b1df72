#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "xite/basis.hpp"
#include "xite/dataset.hpp"
#include "xite/mapper.hpp"

namespace xite {

enum class MixMode { kRegReg, kRegLda, kTargetOnly, kSourceOnly };

std::string mix_mode_name(MixMode mode);
MixMode parse_mix_mode(const std::string& name);

struct InterpolatedExample {
  Eigen::VectorXd vec;
  std::int32_t label = 0;
  std::string target_id;
  std::string source_id;
  MixMode mode = MixMode::kRegReg;
};

Eigen::VectorXd mix_reg_reg(const Eigen::VectorXd& e_src, const Eigen::VectorXd& e_tgt);
Eigen::VectorXd mix_reg_lda(const Eigen::VectorXd& e_src, const Eigen::VectorXd& e_tgt,
                            const LanguageBasis& basis);

struct AssembleOptions {
  MixMode mode = MixMode::kRegReg;
  PairPolicy pair_policy = PairPolicy::kAllM;
  // Skyline: take the target record's gold label instead of the projected one.
  bool use_gold_target_labels = false;
  // Ablation only; the reference formulation is plain unweighted addition.
  bool renormalize = false;
};

// One example per expanded (target, neighbor) pair, in (target order x
// neighbor rank) order. target-only emits raw target vectors with projected
// (or gold) labels; source-only emits source vectors with their own labels.
std::vector<InterpolatedExample> assemble_training_set(const MappingTable& table,
                                                       const Dataset& source,
                                                       const Dataset& targets,
                                                       const AssembleOptions& opts,
                                                       const LanguageBasis* basis = nullptr);

// Training sets travel through the binary store (label = mixed label,
// id = "<target_id>|<source_id>").
Dataset examples_to_dataset(const std::vector<InterpolatedExample>& examples, std::uint32_t d,
                            std::uint32_t num_classes, const std::string& name);

}  // namespace xite
