#include "pcl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "pcl/clustering.hpp"
#include "pcl/evaluation.hpp"
#include "pcl/io.hpp"

namespace pcl {

double LrSchedule::at(std::size_t epoch) const {
  if (!(initial > 0.0)) throw ConfigError("lr schedule: initial lr must be > 0");
  double lr = initial;
  for (std::size_t m : milestones)
    if (epoch >= m) lr *= factor;
  return lr;
}

void TrainConfig::validate(std::size_t n_samples) const {
  if (!(tau > 0.0)) throw ConfigError("train: tau must be > 0");
  if (!(alpha > 0.0)) throw ConfigError("train: alpha must be > 0");
  if (warmup_epochs > epochs) throw ConfigError("train: warmup_epochs must be <= epochs");
  if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (!(lr.initial > 0.0)) throw ConfigError("train: lr must be > 0");
  if (!(ema_momentum >= 0.0 && ema_momentum < 1.0))
    throw ConfigError("train: ema_momentum must be in [0,1)");
  if (!(sgd_momentum >= 0.0 && sgd_momentum < 1.0))
    throw ConfigError("train: sgd_momentum must be in [0,1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("train: weight_decay must be >= 0");
  if (!use_instance && !use_proto)
    throw ConfigError("train: at least one loss term must be enabled");
  if (use_proto && cluster_counts.empty())
    throw ConfigError("train: cluster_counts must be non-empty when the prototype term is on");
  for (std::size_t k : cluster_counts) {
    if (k < 1) throw ConfigError("train: cluster counts must be >= 1");
    if (k > n_samples)
      throw ConfigError("train: cluster count " + std::to_string(k) +
                        " exceeds dataset size " + std::to_string(n_samples));
  }
}

std::string EpochMetrics::to_line() const {
  std::ostringstream out;
  out << "epoch=" << epoch << " lr=" << format_double(lr)
      << " instance_loss=" << format_double(instance_loss);
  for (std::size_t m = 0; m < proto_loss.size(); ++m)
    out << " proto_loss_m" << m << "=" << format_double(proto_loss[m]);
  for (std::size_t m = 0; m < f_before.size(); ++m)
    out << " F_before_m" << m << "=" << format_double(f_before[m]);
  for (std::size_t m = 0; m < f_after.size(); ++m)
    out << " F_after_m" << m << "=" << format_double(f_after[m]);
  for (std::size_t m = 0; m < cluster_mean.size(); ++m)
    out << " cluster_mean_m" << m << "=" << format_double(cluster_mean[m])
        << " cluster_std_m" << m << "=" << format_double(cluster_std[m]);
  return out.str();
}

void e_step(TrainState& state, const Mat& inputs, const TrainConfig& cfg) {
  // Clustering sees the un-augmented inputs through the momentum encoder.
  state.bank.features = encode(state.params, inputs, /*use_momentum=*/true);
  state.psets.clear();
  if (!cfg.use_proto || state.epoch < cfg.warmup_epochs || cfg.cluster_counts.empty()) return;

  const auto clusterings =
      multi_cluster(state.bank.features, cfg.cluster_counts, cfg.kmeans_max_iters,
                    cfg.kmeans_tol, derive_seed(cfg.seed, "e-step", state.epoch));
  for (std::size_t m = 0; m < clusterings.size(); ++m) {
    PrototypeSet p =
        build_prototype_set(clusterings[m], state.bank.features, cfg.alpha, cfg.tau, m);
    if (cfg.fixed_phi) std::fill(p.phi.begin(), p.phi.end(), cfg.tau);
    state.psets.push_back(std::move(p));
  }
}

std::pair<double, std::vector<double>> m_step_epoch(TrainState& state, const Mat& inputs,
                                                    const TrainConfig& cfg,
                                                    const AugmentConfig& aug) {
  const std::size_t n = inputs.rows;
  const std::size_t d_in = inputs.cols;
  if (state.epoch >= cfg.warmup_epochs && cfg.use_proto && state.psets.empty())
    throw Error("m_step_epoch: prototype sets missing after warm-up");
  const double lr = cfg.lr.at(state.epoch);

  Rng rng_shuffle(derive_seed(cfg.seed, "shuffle", state.epoch));
  Rng rng_aug(derive_seed(cfg.seed, "augment", state.epoch));
  Rng rng_neg(derive_seed(cfg.seed, "negatives", state.epoch));
  const auto perm = random_permutation(n, rng_shuffle);

  LossConfig lcfg;
  lcfg.tau = cfg.tau;
  lcfg.negatives = cfg.negatives;
  // Warm-up always trains on the instance term, whatever the ablation flags.
  lcfg.use_instance = state.epoch < cfg.warmup_epochs ? true : cfg.use_instance;

  double inst_sum = 0.0;
  std::vector<double> proto_sum(state.psets.size(), 0.0);

  for (std::size_t start = 0; start < n; start += cfg.batch_size) {
    const std::size_t b = std::min(cfg.batch_size, n - start);
    std::vector<std::size_t> batch_indices(perm.begin() + start, perm.begin() + start + b);

    Mat view_q(b, d_in), view_k(b, d_in);
    for (std::size_t i = 0; i < b; ++i) {
      const auto x = inputs.row(batch_indices[i]);
      const auto q = augment(x, aug, rng_aug);
      const auto kview = augment(x, aug, rng_aug);
      std::copy(q.begin(), q.end(), view_q.row(i).data());
      std::copy(kview.begin(), kview.end(), view_k.row(i).data());
    }

    ForwardCache cache;
    const Mat vq = encode(state.params, view_q, /*use_momentum=*/false, &cache);
    const Mat vk = encode(state.params, view_k, /*use_momentum=*/true);

    LossValue lv;
    try {
      lv = proto_nce(vq, vk, state.bank, batch_indices, state.psets, lcfg, rng_neg);
      if (!std::isfinite(lv.loss) || !all_finite(lv.grad)) throw NumericError("non-finite loss");
      const ParamGrads grads = backward(state.params, cache, lv.grad);
      sgd_step(state.params, grads, lr, cfg.sgd_momentum, cfg.weight_decay);
      momentum_update(state.params, cfg.ema_momentum);
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(state.epoch) + ", batch at sample " +
                         std::to_string(start) + ": " + e.what());
    }

    const double w = static_cast<double>(b);
    inst_sum += w * lv.instance_term;
    for (std::size_t m = 0; m < lv.proto_terms.size(); ++m) proto_sum[m] += w * lv.proto_terms[m];
  }

  const double nd = static_cast<double>(n);
  for (double& x : proto_sum) x /= nd;
  return {inst_sum / nd, proto_sum};
}

double surrogate_lower_bound(const EncoderParams& params, const Mat& inputs,
                             const PrototypeSet& pset) {
  if (pset.assignment.size() != inputs.rows)
    throw Error("surrogate_lower_bound: assignments do not cover the dataset");
  const Mat v = encode(params, inputs, /*use_momentum=*/false);
  const std::size_t k = pset.k();
  const double log_prior = -std::log(static_cast<double>(k));

  double f = 0.0;
  std::vector<double> logits(k);
  for (std::size_t i = 0; i < v.rows; ++i) {
    const auto vi = v.row(i);
    for (std::size_t c = 0; c < k; ++c) logits[c] = dot(vi, pset.centroids.row(c)) / pset.phi[c];
    const std::size_t s = pset.assignment[i];
    std::swap(logits[0], logits[s]);  // softmax_nll scores index 0
    f += log_prior - softmax_nll(logits, {});
    std::swap(logits[0], logits[s]);
  }
  return f;
}

TrainState train(const Mat& inputs, const NetSpec& net, const TrainConfig& cfg,
                 const AugmentConfig& aug, const std::string& out_dir, const EpochHook& hook) {
  cfg.validate(inputs.rows);
  aug.validate();

  TrainState state;
  state.params = init_params(net, derive_seed(cfg.seed, "init"));
  state.bank.features = encode(state.params, inputs, /*use_momentum=*/true);

  const bool write_files = !out_dir.empty();
  if (write_files) std::filesystem::create_directories(out_dir);
  const std::size_t ckpt_interval = std::max<std::size_t>(1, cfg.epochs / 10);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    state.epoch = epoch;
    e_step(state, inputs, cfg);

    EpochMetrics m;
    m.epoch = epoch;
    m.lr = cfg.lr.at(epoch);
    for (const PrototypeSet& p : state.psets) {
      m.f_before.push_back(surrogate_lower_bound(state.params, inputs, p));
      const auto stats = cluster_size_stats(p);
      m.cluster_mean.push_back(stats.mean);
      m.cluster_std.push_back(stats.stddev);
    }

    auto [inst, proto] = m_step_epoch(state, inputs, cfg, aug);
    m.instance_loss = inst;
    if (state.psets.empty() && cfg.use_proto && !cfg.cluster_counts.empty()) {
      // Warm-up record: the prototype component is exactly zero.
      m.proto_loss.assign(cfg.cluster_counts.size(), 0.0);
    } else {
      m.proto_loss = std::move(proto);
    }
    for (const PrototypeSet& p : state.psets)
      m.f_after.push_back(surrogate_lower_bound(state.params, inputs, p));

    state.history.push_back(std::move(m));

    if (write_files && ((epoch + 1) % ckpt_interval == 0 || epoch + 1 == cfg.epochs)) {
      char name[64];
      std::snprintf(name, sizeof(name), "checkpoint_ep%04zu.pclk", epoch);
      save_checkpoint(state.params, out_dir + "/" + name);
    }
    if (hook) hook(state);
  }

  if (write_files) {
    save_checkpoint(state.params, out_dir + "/checkpoint_final.pclk");
    if (!state.psets.empty()) save_prototype_sets(state.psets, out_dir + "/prototypes_final.pclp");
    io::write_file_atomic(out_dir + "/metrics.log", metrics_log_text(state.history));
  }
  return state;
}

std::string metrics_log_text(const std::vector<EpochMetrics>& history) {
  std::string out;
  for (const EpochMetrics& m : history) {
    out += m.to_line();
    out += "\n";
  }
  return out;
}

}  // namespace pcl
