#include "xite/dataset.hpp"

#include <cmath>

#include "xite/error.hpp"

namespace xite {

std::unordered_map<std::string, std::size_t> Dataset::index_by_id() const {
  std::unordered_map<std::string, std::size_t> idx;
  idx.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) idx.emplace(records[i].id, i);
  return idx;
}

void Dataset::validate() const {
  std::unordered_map<std::string, std::size_t> seen;
  seen.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.vec.size() != d) {
      throw ValidationError("dataset '" + name + "': record '" + r.id +
                            "' has dimension " + std::to_string(r.vec.size()) +
                            ", expected " + std::to_string(d));
    }
    for (float v : r.vec) {
      if (!std::isfinite(v)) {
        throw ValidationError("dataset '" + name + "': record '" + r.id +
                              "' contains a non-finite value");
      }
    }
    if (!seen.emplace(r.id, i).second) {
      throw ValidationError("dataset '" + name + "': duplicate id '" + r.id + "'");
    }
    if (r.label) {
      if (*r.label < 0 || static_cast<std::uint32_t>(*r.label) >= num_classes) {
        throw ValidationError("dataset '" + name + "': record '" + r.id +
                              "' label " + std::to_string(*r.label) +
                              " outside [0, " + std::to_string(num_classes) + ")");
      }
    } else if (role == DatasetRole::kSource) {
      throw ValidationError("dataset '" + name + "': source record '" + r.id +
                            "' is unlabeled");
    }
  }
}

}  // namespace xite
