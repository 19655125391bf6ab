#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pcl/data.hpp"
#include "pcl/encoder.hpp"
#include "pcl/loss.hpp"
#include "pcl/prototypes.hpp"

namespace pcl {

// Step schedule: lr = initial * factor^(#milestones <= epoch).
struct LrSchedule {
  double initial = 0.03;
  std::vector<std::size_t> milestones;
  double factor = 0.1;

  double at(std::size_t epoch) const;
};

struct TrainConfig {
  double tau = 0.1;
  double alpha = 10.0;
  std::size_t negatives = 256;             // r
  std::vector<std::size_t> cluster_counts; // K, one entry per granularity
  double ema_momentum = 0.999;
  std::size_t warmup_epochs = 0;           // W: instance-only epochs before the first clustering
  std::size_t epochs = 0;                  // E
  std::size_t batch_size = 128;
  LrSchedule lr;
  double sgd_momentum = 0.9;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
  bool use_instance = true;  // instance term after warm-up
  bool use_proto = true;     // prototype term (and clustering) after warm-up
  bool fixed_phi = false;    // phi = tau everywhere instead of estimated
  std::size_t kmeans_max_iters = 100;
  double kmeans_tol = 1e-6;

  void validate(std::size_t n_samples) const;
};

// One metrics-log record. Vector fields are per granularity and stay empty
// while no prototypes exist.
struct EpochMetrics {
  std::size_t epoch = 0;
  double lr = 0.0;
  double instance_loss = 0.0;
  std::vector<double> proto_loss;
  std::vector<double> f_before;
  std::vector<double> f_after;
  std::vector<double> cluster_mean;
  std::vector<double> cluster_std;

  std::string to_line() const;
};

struct TrainState {
  EncoderParams params;
  NegativeBank bank;
  std::vector<PrototypeSet> psets;  // empty during warm-up
  std::size_t epoch = 0;
  std::vector<EpochMetrics> history;
};

// Refreshes the bank from the momentum encoder on un-augmented inputs; from
// epoch W on (with the prototype term enabled) also reclusters and rebuilds
// the prototype sets.
void e_step(TrainState& state, const Mat& inputs, const TrainConfig& cfg);

// One epoch of minibatch optimization over shuffled augmented view pairs.
// Returns (mean instance loss, mean prototype loss per granularity).
std::pair<double, std::vector<double>> m_step_epoch(TrainState& state, const Mat& inputs,
                                                    const TrainConfig& cfg,
                                                    const AugmentConfig& aug);

// Jensen lower bound at the hard assignments: sum_i [ln(1/k) + log softmax at
// the assigned prototype], full denominator, main-encoder embeddings.
double surrogate_lower_bound(const EncoderParams& params, const Mat& inputs,
                             const PrototypeSet& pset);

using EpochHook = std::function<void(const TrainState&)>;

// Full training loop. When out_dir is non-empty, writes metrics.log plus
// periodic checkpoints (and the final prototype sets) into it.
TrainState train(const Mat& inputs, const NetSpec& net, const TrainConfig& cfg,
                 const AugmentConfig& aug, const std::string& out_dir = {},
                 const EpochHook& hook = {});

std::string metrics_log_text(const std::vector<EpochMetrics>& history);

}  // namespace pcl
