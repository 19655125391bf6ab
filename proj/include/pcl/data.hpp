#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcl/common.hpp"
#include "pcl/rng.hpp"

namespace pcl {

// Hierarchical mixture: n_coarse well-separated coarse centers, each with
// fine_per_coarse sub-centers, each with samples_per_fine points.
struct GeneratorConfig {
  std::size_t n_coarse = 4;
  std::size_t fine_per_coarse = 4;
  std::size_t samples_per_fine = 128;
  std::size_t input_dim = 8;
  double coarse_sep = 6.0;
  double fine_sep = 1.5;
  double noise = 0.5;

  void validate() const;
  std::size_t total_samples() const {
    return n_coarse * fine_per_coarse * samples_per_fine;
  }
};

struct LabeledDataset {
  Mat inputs;
  std::vector<std::size_t> fine_labels;    // c*fine_per_coarse + f
  std::vector<std::size_t> coarse_labels;  // c
  GeneratorConfig gen;                     // config echo
  std::uint64_t seed = 0;

  std::size_t n() const { return inputs.rows; }
  std::size_t n_fine() const { return gen.n_coarse * gen.fine_per_coarse; }
};

LabeledDataset gen_hierarchical_mixture(const GeneratorConfig& cfg, std::uint64_t seed);

struct AugmentConfig {
  double noise = 0.0;      // additive-noise scale
  double mask_prob = 0.0;  // per-coordinate zeroing probability

  void validate() const;
};

// One stochastic view of x; call twice with the same rng for a view pair.
std::vector<double> augment(std::span<const double> x, const AugmentConfig& cfg, Rng& rng);

void save_dataset(const LabeledDataset& ds, const std::string& path);
LabeledDataset load_dataset(const std::string& path);
void export_csv(const LabeledDataset& ds, const std::string& path);

}  // namespace pcl
