#include "pcl/io.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

namespace pcl::io {

void append_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

void append_f64(std::string& out, double v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

void append_doubles(std::string& out, std::span<const double> v) {
  const std::size_t n = v.size() * sizeof(double);
  const std::size_t at = out.size();
  out.resize(at + n);
  std::memcpy(out.data() + at, v.data(), n);
}

void Reader::read_bytes(void* dst, std::size_t n) {
  if (pos + n > buf.size()) throw ConfigError("truncated file");
  std::memcpy(dst, buf.data() + pos, n);
  pos += n;
}

std::uint64_t Reader::read_u64() {
  std::uint64_t v;
  read_bytes(&v, 8);
  return v;
}

double Reader::read_f64() {
  double v;
  read_bytes(&v, 8);
  return v;
}

void Reader::read_doubles(std::span<double> dst) {
  read_bytes(dst.data(), dst.size() * sizeof(double));
}

void Reader::expect_end(const std::string& path) const {
  if (pos != buf.size()) throw ConfigError(path + ": trailing bytes in file");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write file: " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ConfigError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace pcl::io
