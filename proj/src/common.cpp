#include "pcl/common.hpp"

#include <cstdio>

namespace pcl {

bool all_finite(std::span<const double> a) {
  for (double x : a)
    if (!std::isfinite(x)) return false;
  return true;
}

bool all_finite(const Mat& m) { return all_finite(std::span<const double>(m.data)); }

void normalize_row(std::span<double> v, double eps) {
  const double n = norm2(v);
  if (n < eps) throw NumericError("degenerate embedding: norm below " + std::to_string(eps));
  for (double& x : v) x /= n;
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace pcl
