// Binary parameter files: a layout header of (name, rows, cols) entries
// followed by a length-prefixed little-endian float64 vector.
//
//   "QPPGPAR1"                         8 bytes
//   u32 entry count
//   per entry: u32 name length, name bytes, u32 rows, u32 cols
//   u64 value count, then value count * f64
//
// All integers and floats are little-endian.
#pragma once

#include "qppg/policy_net.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace qppg {

struct ParamEntry {
  std::string name;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  bool operator==(const ParamEntry&) const = default;
};

struct ParamFile {
  std::vector<ParamEntry> entries;
  ParamVector values;
};

std::vector<ParamEntry> entries_of(const ParamLayout& layout);

std::string encode_params(const ParamFile& file);
/// Throws std::runtime_error on truncated or malformed input.
ParamFile decode_params(const std::string& bytes);

void save_params(const std::filesystem::path& path, const ParamFile& file);
ParamFile load_params(const std::filesystem::path& path);

}  // namespace qppg
