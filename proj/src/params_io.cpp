#include "qppg/params_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qppg {

namespace {

constexpr char kMagic[8] = {'Q', 'P', 'P', 'G', 'P', 'A', 'R', '1'};

template <typename T>
void put(std::string& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  out.append(reinterpret_cast<const char*>(bytes), sizeof(T));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    unsigned char raw[sizeof(T)];
    take(raw, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      std::reverse(raw, raw + sizeof(T));
    }
    T value;
    std::memcpy(&value, raw, sizeof(T));
    return value;
  }

  std::string string(std::size_t n) {
    std::string s(n, '\0');
    take(s.data(), n);
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void take(void* dst, std::size_t n) {
    if (bytes_.size() - pos_ < n) throw std::runtime_error("parameter file is truncated");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<ParamEntry> entries_of(const ParamLayout& layout) {
  std::vector<ParamEntry> out;
  for (const auto& l : layout.layers()) {
    out.push_back({l.name, static_cast<std::uint32_t>(l.rows), static_cast<std::uint32_t>(l.cols)});
  }
  return out;
}

std::string encode_params(const ParamFile& file) {
  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(file.entries.size()));
  for (const auto& e : file.entries) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out += e.name;
    put<std::uint32_t>(out, e.rows);
    put<std::uint32_t>(out, e.cols);
  }
  put<std::uint64_t>(out, static_cast<std::uint64_t>(file.values.size()));
  for (Eigen::Index i = 0; i < file.values.size(); ++i) put<double>(out, file.values(i));
  return out;
}

ParamFile decode_params(const std::string& bytes) {
  Reader in(bytes);
  if (in.string(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw std::runtime_error("not a parameter file (bad magic)");
  }
  ParamFile file;
  const auto count = in.get<std::uint32_t>();
  std::uint64_t expected = 0;
  for (std::uint32_t k = 0; k < count; ++k) {
    ParamEntry e;
    e.name = in.string(in.get<std::uint32_t>());
    e.rows = in.get<std::uint32_t>();
    e.cols = in.get<std::uint32_t>();
    expected += static_cast<std::uint64_t>(e.rows) * e.cols;
    file.entries.push_back(std::move(e));
  }
  const auto n = in.get<std::uint64_t>();
  if (n != expected) {
    throw std::runtime_error("parameter count " + std::to_string(n) + " does not match layout (" +
                             std::to_string(expected) + ")");
  }
  file.values.resize(static_cast<Eigen::Index>(n));
  for (std::uint64_t i = 0; i < n; ++i) file.values(static_cast<Eigen::Index>(i)) = in.get<double>();
  if (!in.done()) throw std::runtime_error("trailing bytes after parameter vector");
  return file;
}

void save_params(const std::filesystem::path& path, const ParamFile& file) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::string bytes = encode_params(file);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

ParamFile load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return decode_params(buffer.str());
}

}  // namespace qppg
