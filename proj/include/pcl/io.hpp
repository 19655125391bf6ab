#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pcl/common.hpp"

namespace pcl::io {

// Little-endian binary building blocks shared by the file formats.
void append_u64(std::string& out, std::uint64_t v);
void append_f64(std::string& out, double v);
void append_doubles(std::string& out, std::span<const double> v);

struct Reader {
  explicit Reader(std::string bytes) : buf(std::move(bytes)) {}

  void read_bytes(void* dst, std::size_t n);
  std::uint64_t read_u64();
  double read_f64();
  void read_doubles(std::span<double> dst);
  void expect_end(const std::string& path) const;

  std::string buf;
  std::size_t pos = 0;
};

std::string read_file(const std::string& path);

// Writes to a temp file in the same directory, then renames over the target.
void write_file_atomic(const std::string& path, const std::string& bytes);

}  // namespace pcl::io
