#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "pcl/common.hpp"

namespace pcl {

struct Clustering {
  std::size_t k = 0;
  Mat centroids;                          // k x d, unit-norm rows
  std::vector<std::size_t> assignment;    // one cluster id per sample
  std::vector<std::size_t> member_count;  // Z per cluster, never zero
  std::vector<double> cost_trace;         // within-cluster cost per Lloyd iteration
  std::size_t iterations = 0;
};

// Spherical k-means over unit-norm features: k-means++ seeding (squared
// chordal distance), assignment by highest cosine with ties to the lowest
// cluster index, centroids re-normalized member means. Empty clusters are
// repaired by promoting the farthest point of the largest cluster. Random
// choices are keyed on point values, not indices, so permuting the input rows
// permutes assignments identically.
Clustering kmeans(const Mat& features, std::size_t k, std::size_t max_iters = 100,
                  double tol = 1e-6, std::uint64_t seed = 0);

// Independent kmeans runs with derived sub-seeds, output order matching K.
std::vector<Clustering> multi_cluster(const Mat& features, const std::vector<std::size_t>& K,
                                      std::size_t max_iters = 100, double tol = 1e-6,
                                      std::uint64_t seed = 0);

// One line per sample: "index,cluster".
void dump_assignments(const Clustering& c, std::ostream& out);

}  // namespace pcl
