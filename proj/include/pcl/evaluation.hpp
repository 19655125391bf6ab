#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pcl/common.hpp"
#include "pcl/prototypes.hpp"

namespace pcl {

// A hard labelling of n samples into `groups` classes/clusters.
struct Partition {
  std::vector<std::size_t> labels;
  std::size_t groups = 0;

  static Partition from_labels(std::vector<std::size_t> labels);
  void validate() const;
  std::size_t size() const { return labels.size(); }
};

// Per-class scores: sum of exp(v.v'/tau) over the query's top-k neighbors
// with that label. Ties in the prediction go to the lowest class index.
std::vector<double> knn_classify(std::span<const double> query, const Mat& bank,
                                 const Partition& bank_labels, std::size_t k, double tau);
std::size_t knn_predict(std::span<const double> query, const Mat& bank,
                        const Partition& bank_labels, std::size_t k, double tau);
double knn_accuracy(const Mat& queries, const Partition& query_labels, const Mat& bank,
                    const Partition& bank_labels, std::size_t k, double tau);

// Adjusted mutual information with the hypergeometric expected-MI model and
// arithmetic-mean normalization; 0 when the denominator degenerates. Nats.
double ami(const Partition& a, const Partition& b);

// Plug-in MI of the joint contingency table, in nats.
double mi_discrete(const Partition& a, const Partition& b);

// Nearest-neighbor MI estimator between continuous features and a discrete
// label: I = psi(n) - <psi(n_label)> + psi(k) - <psi(m_i)>, where m_i counts
// points (self excluded) within the radius of the k-th same-label neighbor,
// radius inclusive. Negative estimates are clamped to 0; *raw_out, when
// given, receives the unclamped value.
double mi_ross(const Mat& features, const Partition& labels, std::size_t k,
               double* raw_out = nullptr);

// digamma at a positive integer: psi(m) = -gamma + H_{m-1}.
double digamma_int(std::size_t m);

// Nearest unit-normalized class mean; ties to the lowest class index.
std::size_t prototypical_classify(const Mat& support, const Partition& support_labels,
                                  std::span<const double> query);

struct ProbeConfig {
  std::size_t iterations = 500;
  double lr = 0.5;
  std::uint64_t seed = 0;
};

// Multinomial logistic regression on fixed features, full-batch gradient
// descent; returns test accuracy.
double linear_probe(const Mat& train_features, const Partition& train_labels,
                    const Mat& test_features, const Partition& test_labels,
                    const ProbeConfig& cfg);

struct ClusterSizeStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
  struct Bin {
    double lo, hi;
    std::size_t count;
  };
  std::vector<Bin> histogram;
};

ClusterSizeStats cluster_size_stats(const PrototypeSet& pset, std::size_t bins = 10);
std::string histogram_lines(const ClusterSizeStats& stats);  // "lo,hi,count" per bin

}  // namespace pcl
