// Copyright 2026 The HCEP Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hcep/net.hpp"

#include <cmath>

#include "hcep/errors.hpp"

namespace hcep {

int NetConfig::adapter_width() const {
  return std::max(1, static_cast<int>(std::floor(embed_dim * adapter_bottleneck_ratio)));
}

void NetConfig::validate() const {
  if (patch_size < 1 || image_size < patch_size || image_size % patch_size != 0)
    throw ConfigError("image_size must be a positive multiple of patch_size");
  if (embed_dim < 4 || embed_dim % 4 != 0) throw ConfigError("embed_dim must be a multiple of 4");
  if (heads < 1 || embed_dim % heads != 0) throw ConfigError("embed_dim must be divisible by heads");
  if (encoder_blocks < 0) throw ConfigError("encoder_blocks must be >= 0");
  if (!(adapter_bottleneck_ratio > 0.0 && adapter_bottleneck_ratio <= 1.0))
    throw ConfigError("adapter_bottleneck_ratio must lie in (0, 1]");
  if (!(mlp_ratio > 0.0)) throw ConfigError("mlp_ratio must be > 0");
}

nlohmann::json NetConfig::to_json() const {
  return {{"image_size", image_size},
          {"embed_dim", embed_dim},
          {"encoder_blocks", encoder_blocks},
          {"heads", heads},
          {"patch_size", patch_size},
          {"adapter_bottleneck_ratio", adapter_bottleneck_ratio},
          {"mlp_ratio", mlp_ratio},
          {"adapters_enabled", adapters_enabled},
          {"use_parent_enhancer", use_parent_enhancer},
          {"detach_parent_logits", detach_parent_logits},
          {"init_seed", init_seed}};
}

NetConfig NetConfig::from_json(const nlohmann::json& j) {
  NetConfig c;
  try {
    c.image_size = j.value("image_size", c.image_size);
    c.embed_dim = j.value("embed_dim", c.embed_dim);
    c.encoder_blocks = j.value("encoder_blocks", c.encoder_blocks);
    c.heads = j.value("heads", c.heads);
    c.patch_size = j.value("patch_size", c.patch_size);
    c.adapter_bottleneck_ratio = j.value("adapter_bottleneck_ratio", c.adapter_bottleneck_ratio);
    c.mlp_ratio = j.value("mlp_ratio", c.mlp_ratio);
    c.adapters_enabled = j.value("adapters_enabled", c.adapters_enabled);
    c.use_parent_enhancer = j.value("use_parent_enhancer", c.use_parent_enhancer);
    c.detach_parent_logits = j.value("detach_parent_logits", c.detach_parent_logits);
    c.init_seed = j.value("init_seed", c.init_seed);
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("bad net config: ") + ex.what());
  }
  c.validate();
  return c;
}

int ParamStore::add(std::string name, Matrix value, bool trainable) {
  if (by_name_.count(name)) throw ConfigError("duplicate parameter name " + name);
  const int slot = static_cast<int>(params_.size());
  by_name_.emplace(name, slot);
  params_.push_back({std::move(name), std::move(value), trainable});
  return slot;
}

int ParamStore::slot(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw ConfigError("unknown parameter " + name);
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

Var ParamStore::on(Tape& t, int slot) const {
  const Parameter& p = (*this)[slot];
  return t.parameter(slot, p.value, p.trainable);
}

Gradients zero_gradients(const ParamStore& ps) {
  Gradients g;
  g.reserve(static_cast<std::size_t>(ps.size()));
  for (const auto& p : ps) g.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  return g;
}

void accumulate_tape_gradients(const Tape& t, Gradients& g) {
  for (const auto& [slot, grad] : t.parameter_grads()) g[static_cast<std::size_t>(slot)] += *grad;
}

Linear Linear::create(ParamStore& ps, const std::string& name, int in, int out, Rng& rng,
                      bool zero_init) {
  Linear l;
  l.in = in;
  l.out = out;
  Matrix w = Matrix::Zero(in, out);
  if (!zero_init) {
    const double bound = std::sqrt(6.0 / (in + out));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (ad::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
  }
  l.weight = ps.add(name + ".weight", std::move(w));
  l.bias = ps.add(name + ".bias", Matrix::Zero(1, out));
  return l;
}

Var Linear::operator()(Tape& t, const ParamStore& ps, Var x) const {
  if (x.cols() != in) throw ShapeError("linear layer expects " + std::to_string(in) + " inputs");
  return ad::add_row(ad::matmul(x, ps.on(t, weight)), ps.on(t, bias));
}

LayerNorm LayerNorm::create(ParamStore& ps, const std::string& name, int dim) {
  return {ps.add(name + ".gamma", Matrix::Ones(1, dim)), ps.add(name + ".beta", Matrix::Zero(1, dim))};
}

Var LayerNorm::operator()(Tape& t, const ParamStore& ps, Var x) const {
  return ad::layer_norm_rows(x, ps.on(t, gamma), ps.on(t, beta));
}

Mlp Mlp::create(ParamStore& ps, const std::string& name, std::vector<int> widths, Rng& rng) {
  Mlp m;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i)
    m.layers.push_back(Linear::create(ps, name + "." + std::to_string(i), widths[i], widths[i + 1], rng));
  return m;
}

Var Mlp::operator()(Tape& t, const ParamStore& ps, Var x) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = layers[i](t, ps, x);
    if (i + 1 < layers.size()) x = ad::gelu(x);
  }
  return x;
}

Adapter Adapter::create(ParamStore& ps, const std::string& name, int dim, int width, Rng& rng) {
  return {Linear::create(ps, name + ".down", dim, width, rng),
          Linear::create(ps, name + ".up", width, dim, rng, /*zero_init=*/true)};
}

Var Adapter::operator()(Tape& t, const ParamStore& ps, Var x) const {
  return ad::add(x, up(t, ps, ad::gelu(down(t, ps, x))));
}

namespace {

Var multi_head(Var q, Var k, Var v, int heads) {
  const ad::Index d = q.cols();
  if (k.cols() != d || v.rows() != k.rows() || heads < 1 || d % heads != 0)
    throw ShapeError("attention operands have inconsistent shapes");
  const ad::Index dh = d / heads;
  const ad::Index dv = v.cols() / heads;
  if (v.cols() % heads != 0) throw ShapeError("value width not divisible by heads");
  const double s = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> outs;
  outs.reserve(static_cast<std::size_t>(heads));
  for (int hd = 0; hd < heads; ++hd) {
    Var qh = heads == 1 ? q : ad::slice_cols(q, hd * dh, dh);
    Var kh = heads == 1 ? k : ad::slice_cols(k, hd * dh, dh);
    Var vh = heads == 1 ? v : ad::slice_cols(v, hd * dv, dv);
    Var p = ad::softmax_rows(ad::scale(ad::matmul_nt(qh, kh), s));
    outs.push_back(ad::matmul(p, vh));
  }
  return heads == 1 ? outs[0] : ad::concat_cols(outs);
}

Var with_pos(Var x, const std::optional<Var>& pos) {
  if (!pos) return x;
  if (pos->rows() != x.rows() || pos->cols() != x.cols())
    throw ShapeError("positional encoding shape mismatch");
  return ad::add(x, *pos);
}

}  // namespace

Var attention(Var q, Var k, Var v, std::optional<Var> pos_q, std::optional<Var> pos_k, int heads) {
  if (v.cols() != q.cols()) throw ShapeError("values must match the query width");
  return ad::add(q, multi_head(with_pos(q, pos_q), with_pos(k, pos_k), v, heads));
}

MultiHeadAttention MultiHeadAttention::create(ParamStore& ps, const std::string& name, int dim,
                                              int heads, Rng& rng) {
  MultiHeadAttention a;
  a.q = Linear::create(ps, name + ".q", dim, dim, rng);
  a.k = Linear::create(ps, name + ".k", dim, dim, rng);
  a.v = Linear::create(ps, name + ".v", dim, dim, rng);
  a.o = Linear::create(ps, name + ".o", dim, dim, rng);
  a.heads = heads;
  return a;
}

Var MultiHeadAttention::operator()(Tape& t, const ParamStore& ps, Var xq, Var xkv,
                                   std::optional<Var> pos_q, std::optional<Var> pos_k) const {
  Var qp = q(t, ps, with_pos(xq, pos_q));
  Var kp = k(t, ps, with_pos(xkv, pos_k));
  Var vp = v(t, ps, xkv);
  return o(t, ps, multi_head(qp, kp, vp, heads));
}

Matrix positional_encoding(int grid, int dim) {
  if (dim % 4 != 0) throw ShapeError("positional encoding needs dim divisible by 4");
  const int half = dim / 2;
  Matrix pe(static_cast<ad::Index>(grid) * grid, dim);
  for (int i = 0; i < grid; ++i)
    for (int j = 0; j < grid; ++j) {
      const ad::Index r = static_cast<ad::Index>(i) * grid + j;
      for (int k = 0; k < half / 2; ++k) {
        const double w = std::pow(10000.0, -2.0 * k / half);
        pe(r, 2 * k) = std::sin(i * w);
        pe(r, 2 * k + 1) = std::cos(i * w);
        pe(r, half + 2 * k) = std::sin(j * w);
        pe(r, half + 2 * k + 1) = std::cos(j * w);
      }
    }
  return pe;
}

Encoder Encoder::create(ParamStore& ps, const NetConfig& cfg, Rng& rng) {
  cfg.validate();
  Encoder e;
  e.cfg_ = cfg;
  const int d = cfg.embed_dim;
  const int p = cfg.patch_size;
  const int hidden = std::max(1, static_cast<int>(std::lround(d * cfg.mlp_ratio)));
  e.patch_embed_ = Linear::create(ps, "encoder/patch_embed", 3 * p * p, d, rng);
  for (int b = 0; b < cfg.encoder_blocks; ++b) {
    const std::string n = "encoder/block" + std::to_string(b);
    EncoderBlock blk;
    blk.norm1 = LayerNorm::create(ps, n + ".norm1", d);
    blk.attn = MultiHeadAttention::create(ps, n + ".attn", d, cfg.heads, rng);
    blk.norm2 = LayerNorm::create(ps, n + ".norm2", d);
    blk.fc1 = Linear::create(ps, n + ".fc1", d, hidden, rng);
    blk.fc2 = Linear::create(ps, n + ".fc2", hidden, d, rng);
    blk.adapter = Adapter::create(ps, n + ".adapter", d, cfg.adapter_width(), rng);
    e.blocks_.push_back(blk);
  }
  e.final_norm_ = LayerNorm::create(ps, "encoder/final_norm", d);
  return e;
}

Var Encoder::operator()(Tape& t, const ParamStore& ps, Var image, Var pos) const {
  const int s = cfg_.image_size;
  if (image.rows() != static_cast<ad::Index>(s) * s || image.cols() != 3)
    throw ShapeError("encoder expects a " + std::to_string(s) + "x" + std::to_string(s) + " RGB image");
  Var x = patch_embed_(t, ps, ad::space_to_depth(image, s, s, cfg_.patch_size));
  x = ad::add(x, pos);
  for (const auto& blk : blocks_) {
    Var n1 = blk.norm1(t, ps, x);
    x = ad::add(x, blk.attn(t, ps, n1, n1, std::nullopt, std::nullopt));
    Var f = blk.fc2(t, ps, ad::gelu(blk.fc1(t, ps, blk.norm2(t, ps, x))));
    if (cfg_.adapters_enabled) f = blk.adapter(t, ps, f);
    x = ad::add(x, f);
  }
  return final_norm_(t, ps, x);
}

PixelDecoder PixelDecoder::create(ParamStore& ps, const std::string& name, int dim, int grid,
                                  Rng& rng) {
  PixelDecoder p;
  p.up1 = Linear::create(ps, name + ".up1", dim, 4 * (dim / 2), rng);
  p.up2 = Linear::create(ps, name + ".up2", dim / 2, 4 * (dim / 4), rng);
  p.grid = grid;
  return p;
}

Var PixelDecoder::operator()(Tape& t, const ParamStore& ps, Var tokens) const {
  if (tokens.rows() != static_cast<ad::Index>(grid) * grid)
    throw ShapeError("pixel decoder expects a " + std::to_string(grid) + "^2 token grid");
  Var x = ad::gelu(ad::depth_to_space(up1(t, ps, tokens), grid, grid, 2));
  return ad::gelu(ad::depth_to_space(up2(t, ps, x), 2 * grid, 2 * grid, 2));
}

Matrix image_matrix(const std::vector<double>& rgb, int size) {
  const auto n = static_cast<std::size_t>(size) * size;
  if (rgb.size() != n * 3) throw ShapeError("image buffer size mismatch");
  Matrix m(static_cast<ad::Index>(n), 3);
  for (std::size_t p = 0; p < n; ++p)
    for (int c = 0; c < 3; ++c) m(static_cast<ad::Index>(p), c) = rgb[p * 3 + c];
  return m;
}

}  // namespace hcep
