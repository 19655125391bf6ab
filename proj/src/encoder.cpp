#include "pcl/encoder.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "pcl/io.hpp"
#include "pcl/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian");

namespace pcl {

void NetSpec::validate() const {
  if (input_dim < 1) throw ConfigError("net: input dimension must be >= 1");
  for (std::size_t h : hidden)
    if (h < 1) throw ConfigError("net: hidden width must be >= 1");
  if (embed_dim < 2) throw ConfigError("net: embedding dimension must be >= 2");
  if (nonlinearity != "relu") throw ConfigError("net: unknown nonlinearity '" + nonlinearity + "'");
}

std::vector<std::pair<std::size_t, std::size_t>> NetSpec::layer_shapes() const {
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  std::size_t in = input_dim;
  for (std::size_t h : hidden) {
    shapes.emplace_back(h, in);
    in = h;
  }
  shapes.emplace_back(embed_dim, in);
  return shapes;
}

std::size_t EncoderParams::param_count() const {
  std::size_t n = 0;
  for (const Layer& l : main) n += l.w.data.size() + l.b.size();
  return n;
}

double EncoderParams::get_param(std::size_t flat) const {
  for (const Layer& l : main) {
    if (flat < l.w.data.size()) return l.w.data[flat];
    flat -= l.w.data.size();
    if (flat < l.b.size()) return l.b[flat];
    flat -= l.b.size();
  }
  throw Error("get_param: index out of range");
}

void EncoderParams::add_to_param(std::size_t flat, double delta) {
  for (Layer& l : main) {
    if (flat < l.w.data.size()) {
      l.w.data[flat] += delta;
      return;
    }
    flat -= l.w.data.size();
    if (flat < l.b.size()) {
      l.b[flat] += delta;
      return;
    }
    flat -= l.b.size();
  }
  throw Error("add_to_param: index out of range");
}

std::vector<double> ParamGrads::flatten() const {
  std::vector<double> out;
  for (const Layer& l : g) {
    out.insert(out.end(), l.w.data.begin(), l.w.data.end());
    out.insert(out.end(), l.b.begin(), l.b.end());
  }
  return out;
}

EncoderParams init_params(const NetSpec& spec, std::uint64_t seed) {
  spec.validate();
  EncoderParams p;
  p.spec = spec;
  Rng rng(derive_seed(seed, "encoder-init"));
  for (auto [out, in] : spec.layer_shapes()) {
    Layer l;
    l.w = Mat(out, in);
    l.b.assign(out, 0.0);
    const double scale = std::sqrt(2.0 / static_cast<double>(in));
    for (double& x : l.w.data) x = scale * rng.normal();
    p.main.push_back(l);
    Layer v;
    v.w = Mat(out, in);
    v.b.assign(out, 0.0);
    p.velocity.push_back(std::move(v));
  }
  p.momentum = p.main;  // momentum encoder starts equal to the encoder
  return p;
}

namespace {

void affine_forward(const Layer& l, const Mat& in, Mat& out) {
  out = Mat(in.rows, l.w.rows);
  for (std::size_t i = 0; i < in.rows; ++i) {
    const auto x = in.row(i);
    auto z = out.row(i);
    for (std::size_t o = 0; o < l.w.rows; ++o) z[o] = l.b[o] + dot(l.w.row(o), x);
  }
}

}  // namespace

Mat encode(const EncoderParams& params, const Mat& batch, bool use_momentum,
           ForwardCache* cache) {
  if (batch.cols != params.spec.input_dim)
    throw Error("encode: batch has " + std::to_string(batch.cols) + " columns, expected " +
                std::to_string(params.spec.input_dim));
  const auto& stack = use_momentum ? params.momentum : params.main;
  const std::size_t L = stack.size();

  if (cache) {
    cache->input = batch;
    cache->pre_act.clear();
    cache->pre_act.reserve(L);
  }

  Mat act = batch;
  for (std::size_t l = 0; l < L; ++l) {
    Mat z;
    affine_forward(stack[l], act, z);
    if (cache) cache->pre_act.push_back(z);
    if (l + 1 < L) {
      for (double& x : z.data) x = x > 0.0 ? x : 0.0;
      act = std::move(z);
    } else {
      act = std::move(z);
    }
  }

  if (cache) cache->raw_norm.assign(act.rows, 0.0);
  for (std::size_t i = 0; i < act.rows; ++i) {
    const double n = norm2(act.row(i));
    if (n < 1e-12) throw NumericError("degenerate embedding at row " + std::to_string(i));
    if (cache) cache->raw_norm[i] = n;
    for (double& x : act.row(i)) x /= n;
  }
  if (cache) cache->embeddings = act;
  return act;
}

ParamGrads backward(const EncoderParams& params, const ForwardCache& cache,
                    const Mat& grad_embeddings) {
  const std::size_t L = params.main.size();
  if (cache.pre_act.size() != L) throw Error("backward: cache does not match encoder depth");
  if (!grad_embeddings.same_shape(cache.embeddings))
    throw Error("backward: gradient shape mismatch");

  const std::size_t n = grad_embeddings.rows;

  // Through the normalization: g_z = (g - (g.v)v)/|z|.
  Mat gz(n, grad_embeddings.cols);
  for (std::size_t i = 0; i < n; ++i) {
    const auto g = grad_embeddings.row(i);
    const auto v = cache.embeddings.row(i);
    const double gv = dot(g, v);
    auto out = gz.row(i);
    for (std::size_t j = 0; j < g.size(); ++j) out[j] = (g[j] - gv * v[j]) / cache.raw_norm[i];
  }

  ParamGrads grads;
  grads.g.resize(L);
  for (std::size_t l = L; l-- > 0;) {
    // Activations feeding layer l.
    Mat prev_act;
    const Mat* prev = nullptr;
    if (l == 0) {
      prev = &cache.input;
    } else {
      prev_act = cache.pre_act[l - 1];
      for (double& x : prev_act.data) x = x > 0.0 ? x : 0.0;
      prev = &prev_act;
    }

    Layer& gl = grads.g[l];
    gl.w = Mat(params.main[l].w.rows, params.main[l].w.cols);
    gl.b.assign(params.main[l].b.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto gzr = gz.row(i);
      const auto a = prev->row(i);
      for (std::size_t o = 0; o < gl.w.rows; ++o) {
        gl.b[o] += gzr[o];
        auto wrow = gl.w.row(o);
        for (std::size_t j = 0; j < wrow.size(); ++j) wrow[j] += gzr[o] * a[j];
      }
    }

    if (l == 0) break;
    Mat gprev(n, params.main[l].w.cols);
    for (std::size_t i = 0; i < n; ++i) {
      const auto gzr = gz.row(i);
      auto out = gprev.row(i);
      for (std::size_t j = 0; j < out.size(); ++j) {
        double s = 0.0;
        for (std::size_t o = 0; o < params.main[l].w.rows; ++o)
          s += gzr[o] * params.main[l].w(o, j);
        out[j] = s;
      }
      // Rectifier gate of the layer below.
      const auto z = cache.pre_act[l - 1].row(i);
      for (std::size_t j = 0; j < out.size(); ++j)
        if (z[j] <= 0.0) out[j] = 0.0;
    }
    gz = std::move(gprev);
  }
  return grads;
}

void sgd_step(EncoderParams& params, const ParamGrads& grads, double lr, double momentum,
              double weight_decay) {
  if (!(lr > 0.0)) throw Error("sgd_step: lr must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw Error("sgd_step: momentum must be in [0,1)");
  if (!(weight_decay >= 0.0)) throw Error("sgd_step: weight_decay must be >= 0");
  if (grads.g.size() != params.main.size()) throw Error("sgd_step: gradient stack mismatch");

  for (std::size_t l = 0; l < params.main.size(); ++l) {
    if (!all_finite(grads.g[l].w) || !all_finite(std::span<const double>(grads.g[l].b)))
      throw NumericError("sgd_step: non-finite gradient in layer " + std::to_string(l));
    auto step = [&](double& p, double& v, double g) {
      v = momentum * v + g + weight_decay * p;
      p -= lr * v;
    };
    Layer& m = params.main[l];
    Layer& v = params.velocity[l];
    for (std::size_t i = 0; i < m.w.data.size(); ++i)
      step(m.w.data[i], v.w.data[i], grads.g[l].w.data[i]);
    for (std::size_t i = 0; i < m.b.size(); ++i) step(m.b[i], v.b[i], grads.g[l].b[i]);
  }
}

void momentum_update(EncoderParams& params, double m) {
  if (!(m >= 0.0 && m < 1.0)) throw Error("momentum_update: coefficient must be in [0,1)");
  for (std::size_t l = 0; l < params.main.size(); ++l) {
    Layer& mm = params.momentum[l];
    const Layer& mn = params.main[l];
    for (std::size_t i = 0; i < mm.w.data.size(); ++i)
      mm.w.data[i] = m * mm.w.data[i] + (1.0 - m) * mn.w.data[i];
    for (std::size_t i = 0; i < mm.b.size(); ++i)
      mm.b[i] = m * mm.b[i] + (1.0 - m) * mn.b[i];
  }
}

namespace {

constexpr char kCheckpointMagic[5] = {'P', 'C', 'L', 'K', '1'};

void write_layers(std::string& out, const std::vector<Layer>& layers) {
  for (const Layer& l : layers) {
    io::append_doubles(out, l.w.data);
    io::append_doubles(out, l.b);
  }
}

void read_layers(io::Reader& r, std::vector<Layer>& layers,
                 const std::vector<std::pair<std::size_t, std::size_t>>& shapes) {
  layers.clear();
  for (auto [outd, ind] : shapes) {
    Layer l;
    l.w = Mat(outd, ind);
    r.read_doubles(l.w.data);
    l.b.assign(outd, 0.0);
    r.read_doubles(l.b);
    layers.push_back(std::move(l));
  }
}

}  // namespace

void save_checkpoint(const EncoderParams& params, const std::string& path) {
  std::string out;
  out.append(kCheckpointMagic, sizeof(kCheckpointMagic));
  io::append_u64(out, params.spec.input_dim);
  io::append_u64(out, params.spec.hidden.size());
  for (std::size_t h : params.spec.hidden) io::append_u64(out, h);
  io::append_u64(out, params.spec.embed_dim);
  io::append_u64(out, 0);  // nonlinearity tag: 0 = relu
  io::append_u64(out, params.spec.seed);
  write_layers(out, params.main);
  write_layers(out, params.momentum);
  write_layers(out, params.velocity);
  io::write_file_atomic(path, out);
}

EncoderParams load_checkpoint(const std::string& path) {
  io::Reader r(io::read_file(path));
  char magic[5];
  r.read_bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw ConfigError(path + ": not a checkpoint file");
  EncoderParams p;
  p.spec.input_dim = r.read_u64();
  const std::size_t nh = r.read_u64();
  p.spec.hidden.resize(nh);
  for (std::size_t i = 0; i < nh; ++i) p.spec.hidden[i] = r.read_u64();
  p.spec.embed_dim = r.read_u64();
  if (r.read_u64() != 0) throw ConfigError(path + ": unknown nonlinearity tag");
  p.spec.seed = r.read_u64();
  p.spec.validate();
  const auto shapes = p.spec.layer_shapes();
  read_layers(r, p.main, shapes);
  read_layers(r, p.momentum, shapes);
  read_layers(r, p.velocity, shapes);
  r.expect_end(path);
  return p;
}

}  // namespace pcl
