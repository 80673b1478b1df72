#include "xite/mapper.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "xite/error.hpp"
#include "xite/rng.hpp"

namespace xite {

namespace {

constexpr double kZeroNorm = 1e-12;

Eigen::VectorXd unit(const std::vector<float>& v, const std::string& id) {
  Eigen::VectorXd x = to_eigen(v);
  const double n = x.norm();
  if (n < kZeroNorm) {
    throw ValidationError("record '" + id + "' has (near-)zero vector, cosine undefined");
  }
  return x / n;
}

}  // namespace

Eigen::VectorXd to_eigen(const std::vector<float>& v) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) x[static_cast<Eigen::Index>(i)] = v[i];
  return x;
}

CosineIndex::CosineIndex(const Dataset& source) {
  if (source.size() == 0) throw ValidationError("cosine index over empty source set");
  rows_.resize(static_cast<Eigen::Index>(source.size()), static_cast<Eigen::Index>(source.d));
  ids_.reserve(source.size());
  labels_.reserve(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    const auto& rec = source.records[i];
    if (!rec.label) {
      throw ValidationError("source record '" + rec.id + "' is unlabeled; cannot project");
    }
    rows_.row(static_cast<Eigen::Index>(i)) = unit(rec.vec, rec.id).transpose();
    ids_.push_back(rec.id);
    labels_.push_back(*rec.label);
  }
}

double CosineIndex::cosine_to(const Eigen::VectorXd& query, std::size_t i) const {
  const double n = query.norm();
  if (n < kZeroNorm) throw ValidationError("cosine query has (near-)zero norm");
  return rows_.row(static_cast<Eigen::Index>(i)).dot(query) / n;
}

std::vector<Neighbor> CosineIndex::top_m(const Eigen::VectorXd& query, std::size_t m) const {
  if (m == 0) throw ValidationError("m must be positive");
  if (m > size()) {
    throw ValidationError("m=" + std::to_string(m) + " exceeds source size " +
                          std::to_string(size()));
  }
  const double n = query.norm();
  if (n < kZeroNorm) throw ValidationError("cosine query has (near-)zero norm");
  const Eigen::VectorXd scores = rows_ * (query / n);

  std::vector<std::size_t> order(size());
  for (std::size_t i = 0; i < size(); ++i) order[i] = i;
  auto better = [&](std::size_t a, std::size_t b) {
    const double sa = scores[static_cast<Eigen::Index>(a)];
    const double sb = scores[static_cast<Eigen::Index>(b)];
    if (sa != sb) return sa > sb;
    return ids_[a] < ids_[b];
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m), order.end(),
                    better);

  std::vector<Neighbor> out;
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = order[i];
    out.push_back({ids_[j], scores[static_cast<Eigen::Index>(j)], labels_[j]});
  }
  return out;
}

MappingTable build_mapping(const Dataset& targets, const Dataset& source, std::size_t m,
                           MappingMode mode, std::uint64_t seed, const Dataset* mapping_view) {
  if (m == 0) throw ValidationError("m must be positive");
  if (m > source.size()) {
    throw ValidationError("m=" + std::to_string(m) + " exceeds source size " +
                          std::to_string(source.size()));
  }

  // With a mapping view, similarity runs over the view vectors of both sides,
  // joined to the task datasets by record id. Labels still come from `source`.
  const Dataset* sim_source = &source;
  Dataset source_view;
  std::unordered_map<std::string, std::size_t> view_idx;
  if (mapping_view) {
    view_idx = mapping_view->index_by_id();
    source_view.name = mapping_view->name + ".source-side";
    source_view.d = mapping_view->d;
    source_view.num_classes = source.num_classes;
    source_view.role = DatasetRole::kSource;
    source_view.records.reserve(source.size());
    for (const auto& rec : source.records) {
      auto it = view_idx.find(rec.id);
      if (it == view_idx.end()) {
        throw ValidationError("mapping view is missing source id '" + rec.id + "'");
      }
      EmbeddingRecord r = mapping_view->records[it->second];
      r.label = rec.label;  // carry the task label alongside the view vector
      source_view.records.push_back(std::move(r));
    }
    sim_source = &source_view;
  }

  CosineIndex index(*sim_source);

  MappingTable table;
  table.m = m;
  table.mode = mode == MappingMode::kSimilarity ? "similarity" : "random";
  table.mapping_embedding_name = mapping_view ? mapping_view->name : source.name;
  table.entries.reserve(targets.size());

  Rng rng(Rng::mix(seed, 0xA11));
  for (const auto& rec : targets.records) {
    MappingEntry entry;
    entry.target_id = rec.id;
    if (mode == MappingMode::kSimilarity) {
      Eigen::VectorXd q;
      if (mapping_view) {
        auto it = view_idx.find(rec.id);
        if (it == view_idx.end()) {
          throw ValidationError("mapping view is missing target id '" + rec.id + "'");
        }
        q = to_eigen(mapping_view->records[it->second].vec);
      } else {
        q = to_eigen(rec.vec);
      }
      entry.neighbors = index.top_m(q, m);
    } else {
      // Control arm: m distinct source records chosen uniformly, scored with
      // their true cosine so downstream consumers see the same shape.
      const Eigen::VectorXd q = mapping_view
                                    ? to_eigen(mapping_view->records[view_idx.at(rec.id)].vec)
                                    : to_eigen(rec.vec);
      for (std::size_t j : rng.sample_without_replacement(index.size(), m)) {
        entry.neighbors.push_back({index.id(j), index.cosine_to(q, j), index.label(j)});
      }
      std::sort(entry.neighbors.begin(), entry.neighbors.end(),
                [](const Neighbor& a, const Neighbor& b) {
                  if (a.cosine != b.cosine) return a.cosine > b.cosine;
                  return a.source_id < b.source_id;
                });
    }
    table.entries.push_back(std::move(entry));
  }
  return table;
}

std::vector<LabeledPair> expand_pairs(const MappingTable& table, PairPolicy policy) {
  std::vector<LabeledPair> pairs;
  for (const auto& entry : table.entries) {
    if (entry.neighbors.empty()) {
      throw ValidationError("mapping entry '" + entry.target_id + "' has no neighbors");
    }
    const std::size_t take = policy == PairPolicy::kTop1 ? 1 : entry.neighbors.size();
    for (std::size_t i = 0; i < take; ++i) {
      const auto& nb = entry.neighbors[i];
      pairs.push_back({entry.target_id, nb.source_id, nb.label});
    }
  }
  return pairs;
}

void save_mapping_jsonl(const MappingTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  nlohmann::json meta;
  meta["_meta"] = {{"m", table.m},
                   {"mode", table.mode},
                   {"mapping_embedding_name", table.mapping_embedding_name}};
  out << meta.dump() << '\n';
  for (const auto& entry : table.entries) {
    nlohmann::json obj;
    obj["target_id"] = entry.target_id;
    auto& arr = obj["neighbors"] = nlohmann::json::array();
    for (const auto& nb : entry.neighbors) {
      arr.push_back({{"source_id", nb.source_id}, {"cosine", nb.cosine}, {"label", nb.label}});
    }
    out << obj.dump() << '\n';
  }
  if (!out) throw ValidationError("write failed for '" + path + "'");
}

MappingTable load_mapping_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  MappingTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": bad JSON: " + e.what());
    }
    if (obj.contains("_meta")) {
      const auto& meta = obj["_meta"];
      table.m = meta.value("m", std::size_t{0});
      table.mode = meta.value("mode", std::string{"similarity"});
      table.mapping_embedding_name = meta.value("mapping_embedding_name", std::string{});
      continue;
    }
    MappingEntry entry;
    try {
      entry.target_id = obj.at("target_id").get<std::string>();
      for (const auto& nb : obj.at("neighbors")) {
        entry.neighbors.push_back({nb.at("source_id").get<std::string>(),
                                   nb.at("cosine").get<double>(),
                                   nb.at("label").get<std::int32_t>()});
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    table.entries.push_back(std::move(entry));
  }
  if (table.m == 0) {
    for (const auto& e : table.entries) table.m = std::max(table.m, e.neighbors.size());
  }
  return table;
}

}  // namespace xite
