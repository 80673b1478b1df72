#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "xite/dataset.hpp"

namespace xite {

struct Neighbor {
  std::string source_id;
  double cosine = 0.0;
  std::int32_t label = 0;
};

struct MappingEntry {
  std::string target_id;
  std::vector<Neighbor> neighbors;  // cosine descending, ties by ascending id
};

struct MappingTable {
  std::vector<MappingEntry> entries;
  std::size_t m = 0;
  std::string mapping_embedding_name;
  std::string mode = "similarity";
};

enum class MappingMode { kSimilarity, kRandom };
enum class PairPolicy { kTop1, kAllM };

// Exact cosine index: unit-normalized copies of all source vectors.
class CosineIndex {
public:
  explicit CosineIndex(const Dataset& source);

  std::size_t size() const { return static_cast<std::size_t>(rows_.rows()); }
  std::uint32_t dim() const { return static_cast<std::uint32_t>(rows_.cols()); }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  std::int32_t label(std::size_t i) const { return labels_[i]; }
  double row_norm(std::size_t i) const { return rows_.row(static_cast<Eigen::Index>(i)).norm(); }

  // Exact top-m by cosine, descending, ties broken by ascending source_id.
  std::vector<Neighbor> top_m(const Eigen::VectorXd& query, std::size_t m) const;

  double cosine_to(const Eigen::VectorXd& query, std::size_t i) const;

private:
  Eigen::MatrixXd rows_;  // one unit row per source record
  std::vector<std::string> ids_;
  std::vector<std::int32_t> labels_;
};

Eigen::VectorXd to_eigen(const std::vector<float>& v);

// mapping_view, when non-null, supplies the vectors used for similarity on
// both sides, joined by record id (the LaBSE-style pluggable mapping).
MappingTable build_mapping(const Dataset& targets, const Dataset& source, std::size_t m,
                           MappingMode mode, std::uint64_t seed,
                           const Dataset* mapping_view = nullptr);

struct LabeledPair {
  std::string target_id;
  std::string source_id;
  std::int32_t label = 0;
};

std::vector<LabeledPair> expand_pairs(const MappingTable& table, PairPolicy policy);

void save_mapping_jsonl(const MappingTable& table, const std::string& path);
MappingTable load_mapping_jsonl(const std::string& path);

}  // namespace xite
