#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pcc/common.hpp"
#include "pcc/tensor.hpp"

namespace pcc {

// Flat named-record container used for model checkpoints and trainer state.
// Byte layout is documented in docs/formats.md. All payloads are 8 bytes per
// element, little-endian; records that carry opaque bit-packed data (rng
// state, config text) use the same layout with names under "state/".
struct RecordFile {
  std::map<std::string, std::pair<Shape, std::vector<real>>> records;

  bool has(const std::string& name) const { return records.count(name) != 0; }
  void put(const std::string& name, Shape shape, std::vector<real> data);
  void put_scalar(const std::string& name, real v);
  void put_text(const std::string& name, const std::string& text);
  void put_u64(const std::string& name, const std::vector<std::uint64_t>& v);

  const std::pair<Shape, std::vector<real>>& get(const std::string& name) const;
  real get_scalar(const std::string& name) const;
  std::string get_text(const std::string& name) const;
  std::vector<std::uint64_t> get_u64(const std::string& name) const;

  void save(const std::string& path) const;  // temp-file + rename
  static RecordFile load(const std::string& path);
};

// Stable 64-bit content hash (FNV-1a) used for config fingerprints.
std::uint64_t fnv1a64(const std::string& s);

// Atomically write `bytes` to `path` via a sibling temp file.
void write_file_atomic(const std::string& path, const std::string& bytes);

}  // namespace pcc
