#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pcl/common.hpp"

namespace pcl {

// Architecture of the embedding network: fully connected layers with a
// rectifier between them and an L2-normalized output.
struct NetSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden;
  std::size_t embed_dim = 0;
  std::string nonlinearity = "relu";
  std::uint64_t seed = 0;

  void validate() const;
  // (out, in) per layer, input to output order.
  std::vector<std::pair<std::size_t, std::size_t>> layer_shapes() const;
  std::size_t layer_count() const { return hidden.size() + 1; }
};

struct Layer {
  Mat w;                  // out x in
  std::vector<double> b;  // out
};

// Main parameters, their momentum (EMA) copy, and SGD velocity buffers. The
// three stacks always share shapes.
struct EncoderParams {
  NetSpec spec;
  std::vector<Layer> main;
  std::vector<Layer> momentum;
  std::vector<Layer> velocity;

  std::size_t param_count() const;
  // Flat views over the main stack, tensors in declaration order. Used by
  // finite-difference checks.
  double get_param(std::size_t flat) const;
  void add_to_param(std::size_t flat, double delta);
};

struct ParamGrads {
  std::vector<Layer> g;

  std::vector<double> flatten() const;
};

// Per-batch activations kept for the backward pass.
struct ForwardCache {
  Mat input;
  std::vector<Mat> pre_act;       // z per layer
  Mat embeddings;                 // normalized output
  std::vector<double> raw_norm;   // per-row norm before normalization
};

EncoderParams init_params(const NetSpec& spec, std::uint64_t seed);

// Returns unit-norm embeddings, one row per input row. With a cache the call
// records what backward() needs; momentum evaluation never caches.
Mat encode(const EncoderParams& params, const Mat& batch, bool use_momentum,
           ForwardCache* cache = nullptr);

// Gradients of a scalar loss w.r.t. every main parameter, given dL/dV for the
// embeddings produced by the cached forward pass. Momentum parameters get none.
ParamGrads backward(const EncoderParams& params, const ForwardCache& cache,
                    const Mat& grad_embeddings);

// velocity <- momentum*velocity + grad + weight_decay*param;
// param <- param - lr*velocity. The momentum encoder is untouched.
void sgd_step(EncoderParams& params, const ParamGrads& grads, double lr, double momentum,
              double weight_decay);

// Every momentum tensor <- m*old + (1-m)*main.
void momentum_update(EncoderParams& params, double m);

void save_checkpoint(const EncoderParams& params, const std::string& path);
EncoderParams load_checkpoint(const std::string& path);

}  // namespace pcl
