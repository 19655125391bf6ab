#include "pcl/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "pcl/parallel.hpp"
#include "pcl/rng.hpp"

namespace pcl {

Partition Partition::from_labels(std::vector<std::size_t> labels) {
  Partition p;
  p.labels = std::move(labels);
  for (std::size_t l : p.labels) p.groups = std::max(p.groups, l + 1);
  return p;
}

void Partition::validate() const {
  for (std::size_t l : labels)
    if (l >= groups) throw Error("partition: label out of range");
}

namespace {

std::vector<std::size_t> group_counts(const Partition& p) {
  std::vector<std::size_t> c(p.groups, 0);
  for (std::size_t l : p.labels) c[l]++;
  return c;
}

double entropy_nats(const std::vector<std::size_t>& counts, std::size_t n) {
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(n);
    h -= p * std::log(p);
  }
  return h;
}

Mat contingency(const Partition& a, const Partition& b) {
  Mat t(a.groups, b.groups);
  for (std::size_t i = 0; i < a.size(); ++i) t(a.labels[i], b.labels[i]) += 1.0;
  return t;
}

std::size_t argmax_lowest(std::span<const double> scores) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < scores.size(); ++c)
    if (scores[c] > scores[best]) best = c;
  return best;
}

}  // namespace

std::vector<double> knn_classify(std::span<const double> query, const Mat& bank,
                                 const Partition& bank_labels, std::size_t k, double tau) {
  const std::size_t n = bank.rows;
  if (n == 0) throw Error("knn_classify: empty bank");
  if (k > n) throw Error("knn_classify: k exceeds bank size");
  if (bank_labels.size() != n) throw Error("knn_classify: label count mismatch");
  if (!(tau > 0.0)) throw Error("knn_classify: tau must be > 0");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> sims(n);
  for (std::size_t i = 0; i < n; ++i) sims[i] = dot(query, bank.row(i));
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&](std::size_t x, std::size_t y) {
                      if (sims[x] != sims[y]) return sims[x] > sims[y];
                      return x < y;
                    });

  std::vector<double> scores(bank_labels.groups, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t i = order[j];
    scores[bank_labels.labels[i]] += std::exp(sims[i] / tau);
  }
  return scores;
}

std::size_t knn_predict(std::span<const double> query, const Mat& bank,
                        const Partition& bank_labels, std::size_t k, double tau) {
  const auto scores = knn_classify(query, bank, bank_labels, k, tau);
  return argmax_lowest(scores);
}

double knn_accuracy(const Mat& queries, const Partition& query_labels, const Mat& bank,
                    const Partition& bank_labels, std::size_t k, double tau) {
  std::vector<std::size_t> pred(queries.rows);
  parallel_for(queries.rows,
               [&](std::size_t i) { pred[i] = knn_predict(queries.row(i), bank, bank_labels, k, tau); });
  std::size_t hits = 0;
  for (std::size_t i = 0; i < queries.rows; ++i)
    if (pred[i] == query_labels.labels[i]) hits++;
  return static_cast<double>(hits) / static_cast<double>(queries.rows);
}

double mi_discrete(const Partition& a, const Partition& b) {
  if (a.size() != b.size()) throw Error("mi_discrete: partition lengths differ");
  const std::size_t n = a.size();
  if (n == 0) throw Error("mi_discrete: empty partitions");
  const Mat t = contingency(a, b);
  const auto ca = group_counts(a);
  const auto cb = group_counts(b);
  const double nd = static_cast<double>(n);
  double mi = 0.0;
  for (std::size_t i = 0; i < a.groups; ++i)
    for (std::size_t j = 0; j < b.groups; ++j) {
      const double nij = t(i, j);
      if (nij == 0.0) continue;
      mi += (nij / nd) * std::log(nd * nij / (static_cast<double>(ca[i]) * static_cast<double>(cb[j])));
    }
  return mi;
}

double ami(const Partition& a, const Partition& b) {
  if (a.size() != b.size()) throw Error("ami: partition lengths differ");
  const std::size_t n = a.size();
  if (n == 0) throw Error("ami: empty partitions");
  const auto ca = group_counts(a);
  const auto cb = group_counts(b);
  const double mi = mi_discrete(a, b);
  const double ha = entropy_nats(ca, n);
  const double hb = entropy_nats(cb, n);
  const double nd = static_cast<double>(n);

  // Expected MI under the hypergeometric model of random contingency tables
  // with fixed margins.
  double emi = 0.0;
  for (std::size_t ai : ca) {
    if (ai == 0) continue;
    for (std::size_t bj : cb) {
      if (bj == 0) continue;
      const std::size_t lo = ai + bj > n ? ai + bj - n : 1;
      const std::size_t hi = std::min(ai, bj);
      for (std::size_t nij = lo; nij <= hi; ++nij) {
        const double x = static_cast<double>(nij);
        const double log_term =
            std::log(nd * x / (static_cast<double>(ai) * static_cast<double>(bj)));
        const double log_prob =
            std::lgamma(static_cast<double>(ai) + 1.0) + std::lgamma(static_cast<double>(bj) + 1.0) +
            std::lgamma(nd - static_cast<double>(ai) + 1.0) +
            std::lgamma(nd - static_cast<double>(bj) + 1.0) - std::lgamma(nd + 1.0) -
            std::lgamma(x + 1.0) - std::lgamma(static_cast<double>(ai) - x + 1.0) -
            std::lgamma(static_cast<double>(bj) - x + 1.0) -
            std::lgamma(nd - static_cast<double>(ai) - static_cast<double>(bj) + x + 1.0);
        emi += (x / nd) * log_term * std::exp(log_prob);
      }
    }
  }

  const double denom = 0.5 * (ha + hb) - emi;
  if (std::abs(denom) < 1e-12) return 0.0;
  return (mi - emi) / denom;
}

double digamma_int(std::size_t m) {
  if (m == 0) throw Error("digamma_int: argument must be positive");
  constexpr double kEulerGamma = 0.57721566490153286061;
  double h = 0.0;
  for (std::size_t t = 1; t < m; ++t) h += 1.0 / static_cast<double>(t);
  return h - kEulerGamma;
}

double mi_ross(const Mat& features, const Partition& labels, std::size_t k, double* raw_out) {
  const std::size_t n = features.rows;
  if (labels.size() != n) throw Error("mi_ross: label count mismatch");
  if (k < 1) throw Error("mi_ross: k must be >= 1");
  const auto counts = group_counts(labels);
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] > 0 && counts[c] <= k)
      throw Error("mi_ross: class " + std::to_string(c) + " has " + std::to_string(counts[c]) +
                  " members, need > k = " + std::to_string(k));

  // Digamma prefix table up to n.
  std::vector<double> psi(n + 1, 0.0);
  constexpr double kEulerGamma = 0.57721566490153286061;
  psi[1] = -kEulerGamma;
  for (std::size_t m = 2; m <= n; ++m) psi[m] = psi[m - 1] + 1.0 / static_cast<double>(m - 1);

  std::vector<double> psi_m(n, 0.0);
  std::vector<double> psi_label(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    const auto xi = features.row(i);
    std::vector<double> same;
    same.reserve(counts[labels.labels[i]]);
    std::vector<double> d2(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      d2[j] = distance2(features.row(j), xi);
      if (labels.labels[j] == labels.labels[i]) same.push_back(d2[j]);
    }
    std::nth_element(same.begin(), same.begin() + (k - 1), same.end());
    const double radius2 = same[k - 1];
    std::size_t m_i = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && d2[j] <= radius2) m_i++;
    psi_m[i] = psi[m_i];
    psi_label[i] = psi[counts[labels.labels[i]]];
  });

  double mean_psi_label = 0.0, mean_psi_m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_psi_label += psi_label[i];
    mean_psi_m += psi_m[i];
  }
  mean_psi_label /= static_cast<double>(n);
  mean_psi_m /= static_cast<double>(n);

  const double raw = psi[n] - mean_psi_label + digamma_int(k) - mean_psi_m;
  if (raw_out) *raw_out = raw;
  return std::max(0.0, raw);
}

std::size_t prototypical_classify(const Mat& support, const Partition& support_labels,
                                  std::span<const double> query) {
  if (support.rows != support_labels.size())
    throw Error("prototypical_classify: label count mismatch");
  const auto counts = group_counts(support_labels);
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] == 0)
      throw Error("prototypical_classify: class " + std::to_string(c) + " has no support");

  Mat means(support_labels.groups, support.cols);
  for (std::size_t i = 0; i < support.rows; ++i) {
    auto m = means.row(support_labels.labels[i]);
    const auto v = support.row(i);
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += v[j];
  }
  std::vector<double> scores(support_labels.groups, 0.0);
  for (std::size_t c = 0; c < means.rows; ++c) {
    auto m = means.row(c);
    for (double& x : m) x /= static_cast<double>(counts[c]);
    normalize_row(m);
    scores[c] = dot(query, m);
  }
  return argmax_lowest(scores);
}

double linear_probe(const Mat& train_features, const Partition& train_labels,
                    const Mat& test_features, const Partition& test_labels,
                    const ProbeConfig& cfg) {
  if (train_features.rows != train_labels.size() || test_features.rows != test_labels.size())
    throw Error("linear_probe: label count mismatch");
  if (train_features.cols != test_features.cols)
    throw Error("linear_probe: feature dimension mismatch");
  const std::size_t n = train_features.rows;
  const std::size_t d = train_features.cols;
  const std::size_t C = std::max(train_labels.groups, test_labels.groups);

  Mat w(C, d);
  std::vector<double> b(C, 0.0);
  Rng rng(derive_seed(cfg.seed, "linear-probe"));
  for (double& x : w.data) x = 0.01 * rng.normal();

  std::vector<double> logits(C), probs(C);
  Mat gw(C, d);
  std::vector<double> gb(C);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    std::fill(gw.data.begin(), gw.data.end(), 0.0);
    std::fill(gb.begin(), gb.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto x = train_features.row(i);
      for (std::size_t c = 0; c < C; ++c) logits[c] = b[c] + dot(w.row(c), x);
      double m = logits[0];
      for (double l : logits) m = std::max(m, l);
      double se = 0.0;
      for (std::size_t c = 0; c < C; ++c) se += std::exp(logits[c] - m);
      for (std::size_t c = 0; c < C; ++c) probs[c] = std::exp(logits[c] - m) / se;
      for (std::size_t c = 0; c < C; ++c) {
        const double g = (probs[c] - (c == train_labels.labels[i] ? 1.0 : 0.0)) /
                         static_cast<double>(n);
        gb[c] += g;
        auto gr = gw.row(c);
        for (std::size_t j = 0; j < d; ++j) gr[j] += g * x[j];
      }
    }
    for (std::size_t c = 0; c < C; ++c) {
      b[c] -= cfg.lr * gb[c];
      auto wr = w.row(c);
      const auto gr = gw.row(c);
      for (std::size_t j = 0; j < d; ++j) wr[j] -= cfg.lr * gr[j];
    }
  }

  std::size_t hits = 0;
  for (std::size_t i = 0; i < test_features.rows; ++i) {
    const auto x = test_features.row(i);
    for (std::size_t c = 0; c < C; ++c) logits[c] = b[c] + dot(w.row(c), x);
    if (argmax_lowest(logits) == test_labels.labels[i]) hits++;
  }
  return static_cast<double>(hits) / static_cast<double>(test_features.rows);
}

ClusterSizeStats cluster_size_stats(const PrototypeSet& pset, std::size_t bins) {
  ClusterSizeStats s;
  const std::size_t k = pset.member_count.size();
  if (k == 0) return s;
  double mean = 0.0;
  for (std::size_t z : pset.member_count) mean += static_cast<double>(z);
  mean /= static_cast<double>(k);
  double var = 0.0;
  for (std::size_t z : pset.member_count) {
    const double d = static_cast<double>(z) - mean;
    var += d * d;
  }
  s.mean = mean;
  s.stddev = std::sqrt(var / static_cast<double>(k));

  const auto [mn_it, mx_it] = std::minmax_element(pset.member_count.begin(), pset.member_count.end());
  const double lo = static_cast<double>(*mn_it);
  const double hi = static_cast<double>(*mx_it);
  const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
  s.histogram.resize(bins);
  for (std::size_t bidx = 0; bidx < bins; ++bidx)
    s.histogram[bidx] = {lo + width * static_cast<double>(bidx),
                         lo + width * static_cast<double>(bidx + 1), 0};
  for (std::size_t z : pset.member_count) {
    std::size_t bidx = hi > lo ? static_cast<std::size_t>((static_cast<double>(z) - lo) / width)
                               : 0;
    if (bidx >= bins) bidx = bins - 1;  // top edge inclusive
    s.histogram[bidx].count++;
  }
  return s;
}

std::string histogram_lines(const ClusterSizeStats& stats) {
  std::ostringstream out;
  for (const auto& b : stats.histogram)
    out << format_double(b.lo) << "," << format_double(b.hi) << "," << b.count << "\n";
  return out.str();
}

}  // namespace pcl
