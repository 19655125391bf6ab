#include "pcl/prototypes.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "pcl/io.hpp"

namespace pcl {

double estimate_concentration(std::span<const double> centroid, const Mat& members,
                              double alpha) {
  if (members.rows == 0) throw Error("estimate_concentration: empty cluster");
  if (!(alpha > 0.0)) throw Error("estimate_concentration: alpha must be > 0");
  if (members.cols != centroid.size())
    throw Error("estimate_concentration: dimension mismatch");
  double total = 0.0;
  for (std::size_t z = 0; z < members.rows; ++z)
    total += std::sqrt(distance2(members.row(z), centroid));
  const double Z = static_cast<double>(members.rows);
  return total / (Z * std::log(Z + alpha));
}

std::vector<double> normalize_concentrations(std::vector<double> raw, double tau) {
  if (raw.empty()) throw Error("normalize_concentrations: empty list");
  if (!(tau > 0.0)) throw Error("normalize_concentrations: tau must be > 0");
  double mean = 0.0;
  for (double x : raw) mean += x;
  mean /= static_cast<double>(raw.size());
  const double lo = tau / 10.0;
  const double hi = tau * 10.0;
  if (mean < 1e-12) {
    std::fill(raw.begin(), raw.end(), tau);
    return raw;
  }
  const double scale = tau / mean;
  for (double& x : raw) x = std::clamp(x * scale, lo, hi);
  return raw;
}

PrototypeSet build_prototype_set(const Clustering& clustering, const Mat& momentum_features,
                                 double alpha, double tau, std::size_t granularity) {
  if (clustering.assignment.size() != momentum_features.rows)
    throw Error("build_prototype_set: clustering does not cover the features");
  PrototypeSet p;
  p.centroids = clustering.centroids;
  p.member_count = clustering.member_count;
  p.assignment = clustering.assignment;
  p.granularity = granularity;

  std::vector<double> raw(clustering.k, 0.0);
  for (std::size_t c = 0; c < clustering.k; ++c) {
    Mat members(clustering.member_count[c], momentum_features.cols);
    std::size_t at = 0;
    for (std::size_t i = 0; i < momentum_features.rows; ++i) {
      if (clustering.assignment[i] != c) continue;
      std::copy_n(momentum_features.row(i).data(), momentum_features.cols,
                  members.row(at++).data());
    }
    raw[c] = estimate_concentration(p.centroids.row(c), members, alpha);
  }
  p.phi = normalize_concentrations(std::move(raw), tau);
  return p;
}

namespace {
constexpr char kProtoMagic[5] = {'P', 'C', 'L', 'P', '1'};
}

void save_prototype_sets(const std::vector<PrototypeSet>& psets, const std::string& path) {
  std::string out;
  out.append(kProtoMagic, sizeof(kProtoMagic));
  io::append_u64(out, psets.size());
  for (const PrototypeSet& p : psets) {
    io::append_u64(out, p.granularity);
    io::append_u64(out, p.centroids.rows);
    io::append_u64(out, p.centroids.cols);
    io::append_u64(out, p.assignment.size());
    io::append_doubles(out, p.centroids.data);
    io::append_doubles(out, p.phi);
    for (std::size_t z : p.member_count) io::append_u64(out, z);
    for (std::size_t a : p.assignment) io::append_u64(out, a);
  }
  io::write_file_atomic(path, out);
}

std::vector<PrototypeSet> load_prototype_sets(const std::string& path) {
  io::Reader r(io::read_file(path));
  char magic[5];
  r.read_bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kProtoMagic, sizeof(magic)) != 0)
    throw ConfigError(path + ": not a prototype file");
  std::vector<PrototypeSet> psets(r.read_u64());
  for (PrototypeSet& p : psets) {
    p.granularity = r.read_u64();
    const std::size_t k = r.read_u64();
    const std::size_t d = r.read_u64();
    const std::size_t n = r.read_u64();
    p.centroids = Mat(k, d);
    r.read_doubles(p.centroids.data);
    p.phi.assign(k, 0.0);
    r.read_doubles(p.phi);
    p.member_count.resize(k);
    for (std::size_t& z : p.member_count) z = r.read_u64();
    p.assignment.resize(n);
    for (std::size_t& a : p.assignment) a = r.read_u64();
  }
  r.expect_end(path);
  return psets;
}

}  // namespace pcl
