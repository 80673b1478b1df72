#include "xite/store.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "xite/error.hpp"
#include "xite/rng.hpp"

namespace xite {

namespace {

constexpr char kMagic[4] = {'X', 'I', 'T', 'E'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& what) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ValidationError("truncated store file while reading " + what);
  return value;
}

void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in, const std::string& what) {
  const auto len = read_pod<std::uint32_t>(in, what + " length");
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw ValidationError("truncated store file while reading " + what);
  return s;
}

}  // namespace

Dataset ingest_jsonl(const std::string& path, std::uint32_t expected_d,
                     std::uint32_t expected_classes) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");

  Dataset ds;
  ds.name = path;
  ds.d = expected_d;
  std::int32_t max_label = -1;
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
    EmbeddingRecord rec;
    try {
      rec.id = obj.at("id").get<std::string>();
      rec.lang = obj.at("lang").get<std::string>();
      rec.vec = obj.at("vec").get<std::vector<float>>();
      if (obj.contains("label") && !obj["label"].is_null()) {
        rec.label = obj["label"].get<std::int32_t>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (ds.d == 0) ds.d = static_cast<std::uint32_t>(rec.vec.size());
    if (rec.vec.size() != ds.d) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": vector length " +
                            std::to_string(rec.vec.size()) + " does not match d=" +
                            std::to_string(ds.d));
    }
    for (float v : rec.vec) {
      if (!std::isfinite(v)) {
        throw ValidationError(path + ":" + std::to_string(lineno) + ": non-finite value");
      }
    }
    if (rec.label) max_label = std::max(max_label, *rec.label);
    ds.records.push_back(std::move(rec));
  }
  ds.num_classes = expected_classes ? expected_classes
                                    : static_cast<std::uint32_t>(max_label + 1);
  ds.validate();
  return ds;
}

void persist_store(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out.write(kMagic, 4);
  write_pod(out, kVersion);
  write_pod(out, ds.d);
  write_pod(out, ds.num_classes);
  write_pod<std::uint64_t>(out, ds.records.size());
  for (const auto& rec : ds.records) {
    write_string(out, rec.id);
    write_string(out, rec.lang);
    write_pod<std::uint8_t>(out, rec.label ? 1 : 0);
    write_pod<std::int32_t>(out, rec.label.value_or(0));
    out.write(reinterpret_cast<const char*>(rec.vec.data()),
              static_cast<std::streamsize>(rec.vec.size() * sizeof(float)));
  }
  if (!out) throw ValidationError("write failed for '" + path + "'");
}

Dataset load_store(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw ValidationError("'" + path + "': bad magic, not a XITE store");
  }
  const auto version = read_pod<std::uint16_t>(in, "version");
  if (version != kVersion) {
    throw ValidationError("'" + path + "': unsupported version " + std::to_string(version));
  }
  Dataset ds;
  ds.name = path;
  ds.d = read_pod<std::uint32_t>(in, "d");
  ds.num_classes = read_pod<std::uint32_t>(in, "class count");
  const auto count = read_pod<std::uint64_t>(in, "record count");
  ds.records.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    EmbeddingRecord rec;
    rec.id = read_string(in, "id");
    rec.lang = read_string(in, "lang");
    const auto has_label = read_pod<std::uint8_t>(in, "label flag");
    const auto label = read_pod<std::int32_t>(in, "label");
    if (has_label) rec.label = label;
    rec.vec.resize(ds.d);
    in.read(reinterpret_cast<char*>(rec.vec.data()),
            static_cast<std::streamsize>(ds.d * sizeof(float)));
    if (!in) throw ValidationError("'" + path + "': truncated at record " + std::to_string(i));
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

Splits make_splits(const Dataset& ds, const SplitSpec& spec) {
  const std::size_t total = spec.train + spec.dev + spec.test;
  if (total > ds.size()) {
    throw ValidationError("split " + std::to_string(spec.train) + "/" +
                          std::to_string(spec.dev) + "/" + std::to_string(spec.test) +
                          " infeasible for " + std::to_string(ds.size()) + " records");
  }
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(spec.seed);
  rng.shuffle(order);

  auto take = [&](std::size_t begin, std::size_t n, const std::string& suffix) {
    Dataset out;
    out.name = ds.name + suffix;
    out.d = ds.d;
    out.num_classes = ds.num_classes;
    out.role = ds.role;
    out.records.reserve(n);
    for (std::size_t i = begin; i < begin + n; ++i) out.records.push_back(ds.records[order[i]]);
    return out;
  };

  Splits s{take(0, spec.train, ".train"), take(spec.train, spec.dev, ".dev"),
           take(spec.train + spec.dev, spec.test, ".test")};
  if (spec.hide_train_labels) {
    for (auto& rec : s.train.records) rec.label.reset();
    if (s.train.role == DatasetRole::kSource) s.train.role = DatasetRole::kTarget;
  }
  return s;
}

}  // namespace xite
