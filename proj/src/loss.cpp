#include "pcl/loss.hpp"

#include <algorithm>
#include <cmath>

namespace pcl {

double softmax_nll(std::span<const double> logits, std::span<double> probs) {
  double m = logits[0];
  for (double l : logits) m = std::max(m, l);
  double se = 0.0;
  for (double l : logits) se += std::exp(l - m);
  const double lse = m + std::log(se);
  if (!probs.empty()) {
    for (std::size_t j = 0; j < logits.size(); ++j) probs[j] = std::exp(logits[j] - lse);
  }
  return lse - logits[0];
}

LossValue info_nce(const Mat& v, const Mat& v_pos, const Mat& bank,
                   const std::vector<std::vector<std::size_t>>& negatives, double tau) {
  if (!(tau > 0.0)) throw Error("info_nce: tau must be > 0");
  if (!v.same_shape(v_pos)) throw Error("info_nce: query/positive shape mismatch");
  if (negatives.size() != v.rows) throw Error("info_nce: one negative list per query required");

  const std::size_t n = v.rows;
  LossValue out;
  out.grad = Mat(n, v.cols);
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<double> logits, probs;
  for (std::size_t i = 0; i < n; ++i) {
    const auto q = v.row(i);
    const auto& negs = negatives[i];
    logits.assign(1, dot(q, v_pos.row(i)) / tau);
    for (std::size_t j : negs) logits.push_back(dot(q, bank.row(j)) / tau);
    probs.assign(logits.size(), 0.0);
    out.loss += inv_n * softmax_nll(logits, probs);

    // d/dq = (1/tau) * [ (p0-1)*pos + sum_j pj*neg_j ], scaled by 1/n.
    auto g = out.grad.row(i);
    const double c0 = inv_n * (probs[0] - 1.0) / tau;
    const auto pos = v_pos.row(i);
    for (std::size_t d = 0; d < g.size(); ++d) g[d] += c0 * pos[d];
    for (std::size_t j = 0; j < negs.size(); ++j) {
      const double cj = inv_n * probs[j + 1] / tau;
      const auto nb = bank.row(negs[j]);
      for (std::size_t d = 0; d < g.size(); ++d) g[d] += cj * nb[d];
    }
  }
  out.instance_term = out.loss;
  return out;
}

std::vector<std::size_t> sample_negative_prototypes(const PrototypeSet& pset,
                                                    std::size_t own_cluster, std::size_t r,
                                                    Rng& rng) {
  return sample_distinct(rng, pset.k(), r, own_cluster);
}

LossValue proto_term(std::span<const double> v, const PrototypeSet& pset,
                     std::size_t sample_index, const std::vector<std::size_t>& neg_protos) {
  if (sample_index >= pset.assignment.size())
    throw Error("proto_term: sample " + std::to_string(sample_index) + " has no assignment");
  const std::size_t s = pset.assignment[sample_index];

  std::vector<double> logits(1 + neg_protos.size());
  logits[0] = dot(v, pset.centroids.row(s)) / pset.phi[s];
  for (std::size_t j = 0; j < neg_protos.size(); ++j)
    logits[j + 1] = dot(v, pset.centroids.row(neg_protos[j])) / pset.phi[neg_protos[j]];

  std::vector<double> probs(logits.size());
  LossValue out;
  out.loss = softmax_nll(logits, probs);
  out.grad = Mat(1, v.size());
  auto g = out.grad.row(0);
  const auto cs = pset.centroids.row(s);
  const double c0 = (probs[0] - 1.0) / pset.phi[s];
  for (std::size_t d = 0; d < g.size(); ++d) g[d] += c0 * cs[d];
  for (std::size_t j = 0; j < neg_protos.size(); ++j) {
    const std::size_t pj = neg_protos[j];
    const double cj = probs[j + 1] / pset.phi[pj];
    const auto cp = pset.centroids.row(pj);
    for (std::size_t d = 0; d < g.size(); ++d) g[d] += cj * cp[d];
  }
  return out;
}

LossValue proto_term(std::span<const double> v, const PrototypeSet& pset,
                     std::size_t sample_index, std::size_t r, Rng& rng) {
  if (sample_index >= pset.assignment.size())
    throw Error("proto_term: sample " + std::to_string(sample_index) + " has no assignment");
  const auto negs = sample_negative_prototypes(pset, pset.assignment[sample_index], r, rng);
  return proto_term(v, pset, sample_index, negs);
}

ProtoNcePlan make_plan(std::size_t bank_size, const std::vector<std::size_t>& batch_indices,
                       const std::vector<PrototypeSet>& psets, const LossConfig& cfg, Rng& rng) {
  ProtoNcePlan plan;
  if (cfg.use_instance) {
    plan.instance_negatives.reserve(batch_indices.size());
    for (std::size_t idx : batch_indices)
      plan.instance_negatives.push_back(sample_distinct(rng, bank_size, cfg.negatives, idx));
  }
  plan.prototype_negatives.resize(psets.size());
  for (std::size_t m = 0; m < psets.size(); ++m) {
    plan.prototype_negatives[m].reserve(batch_indices.size());
    for (std::size_t idx : batch_indices) {
      if (idx >= psets[m].assignment.size())
        throw Error("make_plan: sample " + std::to_string(idx) + " has no assignment");
      plan.prototype_negatives[m].push_back(
          sample_negative_prototypes(psets[m], psets[m].assignment[idx], cfg.negatives, rng));
    }
  }
  return plan;
}

LossValue proto_nce(const Mat& v, const Mat& v_pos, const NegativeBank& bank,
                    const std::vector<std::size_t>& batch_indices,
                    const std::vector<PrototypeSet>& psets, const LossConfig& cfg,
                    const ProtoNcePlan& plan) {
  if (batch_indices.size() != v.rows) throw Error("proto_nce: one dataset index per query");
  const std::size_t n = v.rows;
  const std::size_t M = psets.size();

  LossValue out;
  out.grad = Mat(n, v.cols);
  if (cfg.use_instance) {
    LossValue inst = info_nce(v, v_pos, bank.features, plan.instance_negatives, cfg.tau);
    out.loss = inst.loss;
    out.instance_term = inst.instance_term;
    out.grad = std::move(inst.grad);
  }

  if (M > 0) {
    out.proto_terms.assign(M, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n);
    const double inv_m = 1.0 / static_cast<double>(M);
    for (std::size_t m = 0; m < M; ++m) {
      double term = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        LossValue t =
            proto_term(v.row(i), psets[m], batch_indices[i], plan.prototype_negatives[m][i]);
        term += inv_n * t.loss;
        auto g = out.grad.row(i);
        const auto tg = t.grad.row(0);
        for (std::size_t d = 0; d < g.size(); ++d) g[d] += inv_m * inv_n * tg[d];
      }
      out.proto_terms[m] = term;
      out.loss += inv_m * term;
    }
  }
  return out;
}

LossValue proto_nce(const Mat& v, const Mat& v_pos, const NegativeBank& bank,
                    const std::vector<std::size_t>& batch_indices,
                    const std::vector<PrototypeSet>& psets, const LossConfig& cfg, Rng& rng) {
  const ProtoNcePlan plan = make_plan(bank.size(), batch_indices, psets, cfg, rng);
  return proto_nce(v, v_pos, bank, batch_indices, psets, cfg, plan);
}

}  // namespace pcl
