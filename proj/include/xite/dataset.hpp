#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace xite {

struct EmbeddingRecord {
  std::string id;
  std::string lang;
  std::optional<std::int32_t> label;
  std::vector<float> vec;

  bool operator==(const EmbeddingRecord&) const = default;
};

enum class DatasetRole { kSource, kTarget, kBasisCorpus, kMappingView };

struct Dataset {
  std::string name;
  std::uint32_t d = 0;
  std::uint32_t num_classes = 0;
  DatasetRole role = DatasetRole::kTarget;
  std::vector<EmbeddingRecord> records;

  std::size_t size() const { return records.size(); }
  auto begin() const { return records.begin(); }
  auto end() const { return records.end(); }

  // id -> record index; built lazily by callers that need joins.
  std::unordered_map<std::string, std::size_t> index_by_id() const;

  // Throws ValidationError on any invariant violation (dup id, bad length,
  // non-finite value, label out of range, unlabeled source record).
  void validate() const;
};

struct SplitSpec {
  std::size_t train = 0;
  std::size_t dev = 0;
  std::size_t test = 0;
  std::uint64_t seed = 0;
  bool hide_train_labels = false;
};

struct Splits {
  Dataset train;
  Dataset dev;
  Dataset test;
};

}  // namespace xite
