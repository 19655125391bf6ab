#pragma once

#include <span>
#include <vector>

#include "pcl/clustering.hpp"
#include "pcl/common.hpp"

namespace pcl {

// One granularity's prototypes: unit-norm centroids with per-prototype
// concentration phi, normalized so mean(phi) = tau and clamped to
// [tau/10, 10*tau].
struct PrototypeSet {
  Mat centroids;                          // k x d
  std::vector<double> phi;                // k
  std::vector<std::size_t> member_count;  // Z per prototype, >= 1
  std::vector<std::size_t> assignment;    // per-sample prototype index
  std::size_t granularity = 0;

  std::size_t k() const { return centroids.rows; }
};

// phi_raw = sum_z ||v_z - c||_2 / (Z * ln(Z + alpha)). Natural log; only
// relative values survive the mean-tau normalization.
double estimate_concentration(std::span<const double> centroid, const Mat& members,
                              double alpha);

// Rescales to mean tau, then clamps each value to [tau/10, 10*tau]. A raw
// mean below 1e-12 degenerates to all-tau.
std::vector<double> normalize_concentrations(std::vector<double> raw, double tau);

PrototypeSet build_prototype_set(const Clustering& clustering, const Mat& momentum_features,
                                 double alpha, double tau, std::size_t granularity = 0);

void save_prototype_sets(const std::vector<PrototypeSet>& psets, const std::string& path);
std::vector<PrototypeSet> load_prototype_sets(const std::string& path);

}  // namespace pcl
