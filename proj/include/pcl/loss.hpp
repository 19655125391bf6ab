#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pcl/common.hpp"
#include "pcl/prototypes.hpp"
#include "pcl/rng.hpp"

namespace pcl {

struct LossValue {
  double loss = 0.0;
  Mat grad;                         // d(loss)/d(query embeddings)
  double instance_term = 0.0;       // mean instance contrast term
  std::vector<double> proto_terms;  // mean prototype term per granularity
};

// Momentum features of the full training set; row i is dataset index i.
struct NegativeBank {
  Mat features;

  std::size_t size() const { return features.rows; }
};

// Stable -log softmax of logits[0]; fills probs (same length) when given.
double softmax_nll(std::span<const double> logits, std::span<double> probs);

// Instance contrast: for query i the denominator stacks the positive and
// negatives[i] rows of bank. Mean over the batch; gradient w.r.t. v only.
LossValue info_nce(const Mat& v, const Mat& v_pos, const Mat& bank,
                   const std::vector<std::vector<std::size_t>>& negatives, double tau);

// Uniform sample without replacement from prototype indices != own_cluster;
// everything available is returned when fewer than r exist.
std::vector<std::size_t> sample_negative_prototypes(const PrototypeSet& pset,
                                                    std::size_t own_cluster, std::size_t r,
                                                    Rng& rng);

// One sample's prototype contrast at a single granularity. Each prototype's
// similarity is divided by its own phi. Deterministic given the negative set.
LossValue proto_term(std::span<const double> v, const PrototypeSet& pset,
                     std::size_t sample_index, const std::vector<std::size_t>& neg_protos);
LossValue proto_term(std::span<const double> v, const PrototypeSet& pset,
                     std::size_t sample_index, std::size_t r, Rng& rng);

struct LossConfig {
  double tau = 0.1;
  std::size_t negatives = 256;  // r
  bool use_instance = true;
};

// Pre-drawn negative indices for one batch, so a loss evaluation is a pure
// function of the embeddings (finite-difference checks rely on this).
struct ProtoNcePlan {
  std::vector<std::vector<std::size_t>> instance_negatives;                // [query]
  std::vector<std::vector<std::vector<std::size_t>>> prototype_negatives;  // [m][query]
};

ProtoNcePlan make_plan(std::size_t bank_size, const std::vector<std::size_t>& batch_indices,
                       const std::vector<PrototypeSet>& psets, const LossConfig& cfg, Rng& rng);

// Full objective: instance term (unless disabled) plus the mean over
// granularities of the prototype terms. psets may be empty (warm-up).
LossValue proto_nce(const Mat& v, const Mat& v_pos, const NegativeBank& bank,
                    const std::vector<std::size_t>& batch_indices,
                    const std::vector<PrototypeSet>& psets, const LossConfig& cfg,
                    const ProtoNcePlan& plan);
LossValue proto_nce(const Mat& v, const Mat& v_pos, const NegativeBank& bank,
                    const std::vector<std::size_t>& batch_indices,
                    const std::vector<PrototypeSet>& psets, const LossConfig& cfg, Rng& rng);

}  // namespace pcl
