#pragma once

#include <string>

#include "xite/dataset.hpp"

namespace xite {

// JSONL ingestion: one object per line with id, lang, vec, optional label.
// d is inferred from the first record unless expected_d is given (> 0).
Dataset ingest_jsonl(const std::string& path, std::uint32_t expected_d = 0,
                     std::uint32_t expected_classes = 0);

// Binary store: header {magic "XITE", u16 version, u32 d, u32 C, u64 count},
// then per record id/lang (u32 length + bytes), label flag + i32, d f32 LE.
void persist_store(const Dataset& ds, const std::string& path);
Dataset load_store(const std::string& path);

Splits make_splits(const Dataset& ds, const SplitSpec& spec);

}  // namespace xite
