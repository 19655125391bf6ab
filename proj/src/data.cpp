#include "pcl/data.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "pcl/io.hpp"

namespace pcl {

void GeneratorConfig::validate() const {
  if (n_coarse < 1 || fine_per_coarse < 1 || samples_per_fine < 1 || input_dim < 1)
    throw ConfigError("data: all counts and dimensions must be >= 1");
  if (!(coarse_sep > fine_sep && fine_sep > noise && noise > 0.0))
    throw ConfigError("data: separations must satisfy coarse_sep > fine_sep > noise > 0");
}

void AugmentConfig::validate() const {
  if (!(noise >= 0.0)) throw ConfigError("augment: noise must be >= 0");
  if (!(mask_prob >= 0.0 && mask_prob < 1.0))
    throw ConfigError("augment: mask_prob must be in [0, 1)");
}

namespace {

std::vector<double> random_direction(std::size_t d, Rng& rng) {
  std::vector<double> v(d);
  double n = 0.0;
  do {
    for (double& x : v) x = rng.normal();
    n = norm2(v);
  } while (n < 1e-12);
  for (double& x : v) x /= n;
  return v;
}

}  // namespace

LabeledDataset gen_hierarchical_mixture(const GeneratorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(derive_seed(seed, "hierarchical-mixture"));

  // Coarse centers at radius coarse_sep, rejected until pairwise distances
  // reach coarse_sep.
  Mat coarse(cfg.n_coarse, cfg.input_dim);
  for (std::size_t c = 0; c < cfg.n_coarse; ++c) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < 100000 && !placed; ++attempt) {
      const auto dir = random_direction(cfg.input_dim, rng);
      for (std::size_t j = 0; j < cfg.input_dim; ++j) coarse(c, j) = cfg.coarse_sep * dir[j];
      placed = true;
      for (std::size_t prev = 0; prev < c; ++prev)
        if (std::sqrt(distance2(coarse.row(c), coarse.row(prev))) < cfg.coarse_sep)
          placed = false;
    }
    if (!placed)
      throw Error("gen_hierarchical_mixture: could not place " + std::to_string(cfg.n_coarse) +
                  " coarse centers at separation " + std::to_string(cfg.coarse_sep));
  }

  Mat fine(cfg.n_coarse * cfg.fine_per_coarse, cfg.input_dim);
  for (std::size_t c = 0; c < cfg.n_coarse; ++c)
    for (std::size_t f = 0; f < cfg.fine_per_coarse; ++f) {
      auto row = fine.row(c * cfg.fine_per_coarse + f);
      for (std::size_t j = 0; j < cfg.input_dim; ++j)
        row[j] = coarse(c, j) + cfg.fine_sep * rng.normal();
    }

  LabeledDataset ds;
  ds.gen = cfg;
  ds.seed = seed;
  ds.inputs = Mat(cfg.total_samples(), cfg.input_dim);
  ds.fine_labels.reserve(cfg.total_samples());
  ds.coarse_labels.reserve(cfg.total_samples());
  std::size_t at = 0;
  for (std::size_t c = 0; c < cfg.n_coarse; ++c)
    for (std::size_t f = 0; f < cfg.fine_per_coarse; ++f) {
      const std::size_t fid = c * cfg.fine_per_coarse + f;
      for (std::size_t s = 0; s < cfg.samples_per_fine; ++s) {
        auto row = ds.inputs.row(at++);
        for (std::size_t j = 0; j < cfg.input_dim; ++j)
          row[j] = fine(fid, j) + cfg.noise * rng.normal();
        ds.fine_labels.push_back(fid);
        ds.coarse_labels.push_back(c);
      }
    }
  return ds;
}

std::vector<double> augment(std::span<const double> x, const AugmentConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<double> out(x.begin(), x.end());
  if (cfg.noise > 0.0)
    for (double& v : out) v += cfg.noise * rng.normal();
  if (cfg.mask_prob > 0.0)
    for (double& v : out)
      if (rng.uniform() < cfg.mask_prob) v = 0.0;
  return out;
}

namespace {
constexpr char kDataMagic[5] = {'P', 'C', 'L', 'D', '1'};
}

void save_dataset(const LabeledDataset& ds, const std::string& path) {
  std::string out;
  out.append(kDataMagic, sizeof(kDataMagic));
  io::append_u64(out, ds.inputs.rows);
  io::append_u64(out, ds.inputs.cols);
  io::append_u64(out, ds.gen.n_coarse);
  io::append_u64(out, ds.gen.fine_per_coarse);
  io::append_u64(out, ds.gen.samples_per_fine);
  io::append_f64(out, ds.gen.coarse_sep);
  io::append_f64(out, ds.gen.fine_sep);
  io::append_f64(out, ds.gen.noise);
  io::append_u64(out, ds.seed);
  io::append_doubles(out, ds.inputs.data);
  for (std::size_t l : ds.fine_labels) io::append_u64(out, l);
  for (std::size_t l : ds.coarse_labels) io::append_u64(out, l);
  io::write_file_atomic(path, out);
}

LabeledDataset load_dataset(const std::string& path) {
  io::Reader r(io::read_file(path));
  char magic[5];
  r.read_bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kDataMagic, sizeof(magic)) != 0)
    throw ConfigError(path + ": not a dataset file");
  LabeledDataset ds;
  const std::size_t n = r.read_u64();
  const std::size_t d = r.read_u64();
  ds.gen.n_coarse = r.read_u64();
  ds.gen.fine_per_coarse = r.read_u64();
  ds.gen.samples_per_fine = r.read_u64();
  ds.gen.input_dim = d;
  ds.gen.coarse_sep = r.read_f64();
  ds.gen.fine_sep = r.read_f64();
  ds.gen.noise = r.read_f64();
  ds.seed = r.read_u64();
  ds.inputs = Mat(n, d);
  r.read_doubles(ds.inputs.data);
  ds.fine_labels.resize(n);
  for (std::size_t& l : ds.fine_labels) l = r.read_u64();
  ds.coarse_labels.resize(n);
  for (std::size_t& l : ds.coarse_labels) l = r.read_u64();
  r.expect_end(path);
  for (std::size_t i = 0; i < n; ++i)
    if (ds.fine_labels[i] / ds.gen.fine_per_coarse != ds.coarse_labels[i])
      throw ConfigError(path + ": fine/coarse label hierarchy is inconsistent");
  return ds;
}

void export_csv(const LabeledDataset& ds, const std::string& path) {
  std::ostringstream out;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const auto row = ds.inputs.row(i);
    for (double x : row) out << format_double(x) << ",";
    out << ds.fine_labels[i] << "," << ds.coarse_labels[i] << "\n";
  }
  io::write_file_atomic(path, out.str());
}

}  // namespace pcl
