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

// Shared fixtures and independent reference implementations for the tests.
// The oracles below use plain loops over std::vector and never call into the
// library's numeric code paths.

#ifndef HCEP_TESTS_SUPPORT_HPP_
#define HCEP_TESTS_SUPPORT_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "hcep/autodiff.hpp"
#include "hcep/hierarchy.hpp"
#include "hcep/net.hpp"

namespace hcep::testing {

using ad::Matrix;

inline ConceptHierarchy tiny_hierarchy() {
  // Two parents; the first has two children, the second one.
  return ConceptHierarchy::build({{1, "a", 0, std::nullopt},
                                  {2, "b", 0, std::nullopt},
                                  {3, "a1", 1, 1},
                                  {4, "a2", 1, 1},
                                  {5, "b1", 1, 2}});
}

/// G = 2, d = 8, 8x8 masks.
inline NetConfig tiny_net_config(std::uint64_t seed = 3) {
  NetConfig c;
  c.image_size = 8;
  c.embed_dim = 8;
  c.encoder_blocks = 1;
  c.heads = 2;
  c.patch_size = 4;
  c.mlp_ratio = 2.0;
  c.init_seed = seed;
  return c;
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

/// Replaces every parameter (biases and zero-initialised layers included)
/// with Gaussian noise so that no path is trivially zero.
inline void randomize_params(ParamStore& ps, std::uint64_t seed, double scale = 0.5) {
  std::mt19937_64 rng(seed);
  for (int s = 0; s < ps.size(); ++s) {
    Matrix& v = ps[s].value;
    v = random_matrix(rng, v.rows(), v.cols(), scale);
  }
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("hcep_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

/// max over entries of |a - n| / max(|a|, |n|, floor) with central differences.
struct FdResult {
  double max_rel = 0.0;
  double max_abs = 0.0;
};

inline FdResult compare_gradient(const Matrix& analytic, const Matrix& numeric, double abs_floor = 1e-7) {
  FdResult r;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double a = analytic.data()[i], n = numeric.data()[i];
    const double diff = std::abs(a - n);
    r.max_abs = std::max(r.max_abs, diff);
    if (diff <= abs_floor) continue;
    r.max_rel = std::max(r.max_rel, diff / std::max({std::abs(a), std::abs(n), 1e-12}));
  }
  return r;
}

/// Central-difference gradient of a scalar function of `x`.
inline Matrix numeric_gradient(const std::function<double(const Matrix&)>& f, Matrix x, double h = 1e-5) {
  Matrix g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double old = x.data()[i];
    x.data()[i] = old + h;
    const double fp = f(x);
    x.data()[i] = old - h;
    const double fm = f(x);
    x.data()[i] = old;
    g.data()[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

namespace oracle {

// ---------------------------------------------------------------- hierarchy

/// Iterative three-colour DFS over parent edges (child -> parent).
inline bool dfs_has_cycle(const std::map<int, std::optional<int>>& parent_of) {
  std::map<int, int> colour;  // 0 white, 1 grey, 2 black
  for (const auto& [start, unused] : parent_of) {
    if (colour[start] != 0) continue;
    std::vector<int> stack{start};
    while (!stack.empty()) {
      const int v = stack.back();
      if (colour[v] == 0) {
        colour[v] = 1;
        auto it = parent_of.find(v);
        if (it != parent_of.end() && it->second) {
          const int p = *it->second;
          if (!parent_of.count(p)) continue;
          if (colour[p] == 1) return true;
          if (colour[p] == 0) {
            stack.push_back(p);
            continue;
          }
        }
      }
      if (colour[v] == 1) colour[v] = 2;
      stack.pop_back();
    }
  }
  return false;
}

// ---------------------------------------------------------------- metrics

inline double dice(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  std::set<std::size_t> sa, sb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i]) sa.insert(i);
    if (b[i]) sb.insert(i);
  }
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (auto i : sa) inter += sb.count(i);
  return 2.0 * static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size());
}

inline std::vector<std::pair<int, int>> boundary(const std::vector<std::uint8_t>& m, int h, int w) {
  std::vector<std::pair<int, int>> pts;
  auto in = [&](int y, int x) { return y >= 0 && y < h && x >= 0 && x < w && m[static_cast<std::size_t>(y * w + x)]; };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!in(y, x)) continue;
      bool edge = false;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (!in(y + dy, x + dx)) edge = true;
      if (edge) pts.emplace_back(y, x);
    }
  return pts;
}

/// All-pairs symmetric Hausdorff distance between boundary sets.
inline double hausdorff(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b, int h, int w) {
  const auto pa = boundary(a, h, w), pb = boundary(b, h, w);
  if (pa.empty() && pb.empty()) return 0.0;
  if (pa.empty() || pb.empty()) return std::sqrt(static_cast<double>(h * h + w * w));
  auto directed = [](const auto& from, const auto& to) {
    double worst = 0.0;
    for (auto [y0, x0] : from) {
      double best = std::numeric_limits<double>::infinity();
      for (auto [y1, x1] : to) best = std::min(best, std::hypot(y0 - y1, x0 - x1));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(pa, pb), directed(pb, pa));
}

// ---------------------------------------------------------------- losses

inline double dice_loss(const Matrix& p, const Matrix& t, double smooth) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    double inter = 0, sp = 0, st = 0;
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      inter += p(r, c) * t(r, c);
      sp += p(r, c);
      st += t(r, c);
    }
    total += 1.0 - (2.0 * inter + smooth) / (sp + st + smooth);
  }
  return total / static_cast<double>(p.rows());
}

inline double bce_loss(const Matrix& p, const Matrix& t, double eps) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double q = std::min(std::max(p.data()[i], eps), 1.0 - eps);
    total -= t.data()[i] * std::log(q) + (1.0 - t.data()[i]) * std::log(1.0 - q);
  }
  return total / static_cast<double>(p.size());
}

inline double hc_loss(const std::vector<Matrix>& probs, const ConceptHierarchy& h, double eps) {
  double total = 0.0;
  for (int l = 0; l + 1 < h.num_levels(); ++l) {
    const auto& parents = h.level(l);
    const auto& kids = h.level(l + 1);
    double level_sum = 0.0;
    for (std::size_t i = 0; i < parents.size(); ++i) {
      std::vector<std::size_t> rows;
      for (std::size_t j = 0; j < kids.size(); ++j)
        if (h.node(kids[j]).parent_id == parents[i]) rows.push_back(j);
      if (rows.empty()) continue;
      double s = 0.0;
      for (Eigen::Index x = 0; x < probs[l].cols(); ++x) {
        double m = 0.0;
        for (auto r : rows) m = std::max(m, probs[l + 1](static_cast<Eigen::Index>(r), x));
        const double p = probs[l](static_cast<Eigen::Index>(i), x);
        s += std::max(0.0, p * (std::log(p + eps) - std::log(m + eps)));
      }
      level_sum += s / static_cast<double>(probs[l].cols());
    }
    total += level_sum / static_cast<double>(parents.size());
  }
  return total;
}

inline double mse_loss(const std::vector<double>& t, const Matrix& logits, const Matrix& gt) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    std::vector<std::uint8_t> a(static_cast<std::size_t>(logits.cols())), b(a.size());
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      a[static_cast<std::size_t>(c)] = logits(r, c) > 0.0;
      b[static_cast<std::size_t>(c)] = gt(r, c) > 0.5;
    }
    const double d = t[static_cast<std::size_t>(r)] - dice(a, b);
    total += d * d;
  }
  return total / static_cast<double>(logits.rows());
}

// ---------------------------------------------------------------- network

/// Dense row-major matrix with loop-only arithmetic.
struct M {
  int r = 0, c = 0;
  std::vector<double> v;
  M() = default;
  M(int rows, int cols) : r(rows), c(cols), v(static_cast<std::size_t>(rows) * cols, 0.0) {}
  double& operator()(int i, int j) { return v[static_cast<std::size_t>(i) * c + j]; }
  double operator()(int i, int j) const { return v[static_cast<std::size_t>(i) * c + j]; }
};

inline M from(const Matrix& m) {
  M o(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int i = 0; i < o.r; ++i)
    for (int j = 0; j < o.c; ++j) o(i, j) = m(i, j);
  return o;
}

inline M param(const ParamStore& ps, const std::string& name) { return from(ps[ps.slot(name)].value); }

inline M plus(const M& a, const M& b) {
  M o = a;
  for (std::size_t i = 0; i < o.v.size(); ++i) o.v[i] += b.v[i];
  return o;
}

inline M linear(const ParamStore& ps, const std::string& name, const M& x) {
  const M w = param(ps, name + ".weight"), b = param(ps, name + ".bias");
  M o(x.r, w.c);
  for (int i = 0; i < x.r; ++i)
    for (int j = 0; j < w.c; ++j) {
      double s = b(0, j);
      for (int k = 0; k < x.c; ++k) s += x(i, k) * w(k, j);
      o(i, j) = s;
    }
  return o;
}

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

inline M gelu(M x) {
  for (double& e : x.v) e = gelu(e);
  return x;
}

inline M mlp(const ParamStore& ps, const std::string& name, int layers, M x) {
  for (int i = 0; i < layers; ++i) {
    x = linear(ps, name + "." + std::to_string(i), x);
    if (i + 1 < layers) x = gelu(x);
  }
  return x;
}

/// Multi-head scaled dot-product attention without projections or residual.
inline M attend(const M& q, const M& k, const M& v, int heads) {
  const int dh = q.c / heads, dv = v.c / heads;
  M o(q.r, v.c);
  for (int hd = 0; hd < heads; ++hd)
    for (int i = 0; i < q.r; ++i) {
      std::vector<double> s(static_cast<std::size_t>(k.r));
      double mx = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < k.r; ++j) {
        double dot = 0.0;
        for (int e = 0; e < dh; ++e) dot += q(i, hd * dh + e) * k(j, hd * dh + e);
        s[static_cast<std::size_t>(j)] = dot / std::sqrt(static_cast<double>(dh));
        mx = std::max(mx, s[static_cast<std::size_t>(j)]);
      }
      double z = 0.0;
      for (double& e : s) z += (e = std::exp(e - mx));
      for (int j = 0; j < k.r; ++j)
        for (int e = 0; e < dv; ++e) o(i, hd * dv + e) += s[static_cast<std::size_t>(j)] / z * v(j, hd * dv + e);
    }
  return o;
}

/// q + attend(q + pos_q, k + pos_k, v).
inline M attention(const M& q, const M& k, const M& v, const M* pos_q, const M* pos_k, int heads) {
  return plus(q, attend(pos_q ? plus(q, *pos_q) : q, pos_k ? plus(k, *pos_k) : k, v, heads));
}

inline M mha(const ParamStore& ps, const std::string& name, const M& xq, const M& xkv, const M* pos_q,
             const M* pos_k, int heads) {
  const M q = linear(ps, name + ".q", pos_q ? plus(xq, *pos_q) : xq);
  const M k = linear(ps, name + ".k", pos_k ? plus(xkv, *pos_k) : xkv);
  const M v = linear(ps, name + ".v", xkv);
  return linear(ps, name + ".o", attend(q, k, v, heads));
}

/// 2x2 stride-2 transposed convolution on a g x g raster (rows = pixels);
/// weight column (dy*2 + dx)*C_out + c.
inline M conv_transpose2x2(const ParamStore& ps, const std::string& name, const M& x, int g) {
  const M w = param(ps, name + ".weight"), b = param(ps, name + ".bias");
  const int cout = w.c / 4;
  M o(4 * g * g, cout);
  for (int y = 0; y < g; ++y)
    for (int xx = 0; xx < g; ++xx)
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx)
          for (int c = 0; c < cout; ++c) {
            const int col = (dy * 2 + dx) * cout + c;
            double s = b(0, col);
            for (int i = 0; i < x.c; ++i) s += x(y * g + xx, i) * w(i, col);
            o((2 * y + dy) * (2 * g) + 2 * xx + dx, c) = s;
          }
  return o;
}

/// 2x2 stride-2 convolution on an s x s raster; weight row (dy*2 + dx)*C_in + c.
inline M conv2x2(const ParamStore& ps, const std::string& name, const M& x, int s) {
  const M w = param(ps, name + ".weight"), b = param(ps, name + ".bias");
  const int half = s / 2;
  M o(half * half, w.c);
  for (int y = 0; y < half; ++y)
    for (int xx = 0; xx < half; ++xx)
      for (int oc = 0; oc < w.c; ++oc) {
        double acc = b(0, oc);
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx)
            for (int c = 0; c < x.c; ++c)
              acc += x((2 * y + dy) * s + 2 * xx + dx, c) * w((dy * 2 + dx) * x.c + c, oc);
        o(y * half + xx, oc) = acc;
      }
  return o;
}

inline M pixel_decode(const ParamStore& ps, const M& tokens, int g) {
  const M a = gelu(conv_transpose2x2(ps, "decoder/pixel.up1", tokens, g));
  return gelu(conv_transpose2x2(ps, "decoder/pixel.up2", a, 2 * g));
}

struct HeadResult {
  M logits;      // n x (4g)^2
  std::vector<double> confidence;
  M tokens;
};

inline HeadResult head(const ParamStore& ps, int level, int n, const M& h_in, const M& pos, int g, int heads) {
  const std::string p = "decoder/level" + std::to_string(level);
  const M qm = param(ps, p + ".queries"), ct = param(ps, p + ".conf_tokens");
  M q(2 * n, qm.c);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < qm.c; ++j) {
      q(i, j) = qm(i, j);
      q(n + i, j) = ct(i, j);
    }
  q = plus(q, mha(ps, p + ".self_attn", q, q, nullptr, nullptr, heads));
  const M h = attention(h_in, q, q, &pos, nullptr, 1);
  q = attention(q, h, h, nullptr, &pos, 1);
  const M pix = pixel_decode(ps, h, g);
  HeadResult r;
  r.tokens = h;
  r.logits = M(n, pix.r);
  for (int k = 0; k < n; ++k) {
    M row(1, q.c);
    for (int j = 0; j < q.c; ++j) row(0, j) = q(k, j);
    const M hyper = mlp(ps, p + ".mask_mlp" + std::to_string(k), 3, row);
    for (int x = 0; x < pix.r; ++x) {
      double s = 0.0;
      for (int c = 0; c < pix.c; ++c) s += hyper(0, c) * pix(x, c);
      r.logits(k, x) = s;
    }
    double mass = 0.0, sq = 0.0, unc = 0.0;
    for (int x = 0; x < pix.r; ++x) {
      const double pr = 1.0 / (1.0 + std::exp(-r.logits(k, x)));
      mass += pr;
      sq += pr * pr;
      unc += 4.0 * pr * (1.0 - pr);
    }
    M crow(1, q.c + 3);
    for (int j = 0; j < q.c; ++j) crow(0, j) = q(n + k, j);
    crow(0, q.c) = mass / (mass + 1.0);
    crow(0, q.c + 1) = sq / (mass + 1.0);
    crow(0, q.c + 2) = unc / (mass + 1.0);
    const M t = mlp(ps, p + ".conf_mlp", 3, crow);
    r.confidence.push_back(1.0 / (1.0 + std::exp(-t(0, 0))));
  }
  return r;
}

inline M enhance(const ParamStore& ps, int level, const M& h, const M& parent_logits, const M& pos, int g,
                 int heads) {
  const std::string p = "decoder/level" + std::to_string(level) + ".enhancer";
  const int s = 4 * g;
  M masks(s * s, parent_logits.r);
  for (int i = 0; i < parent_logits.r; ++i)
    for (int x = 0; x < s * s; ++x) masks(x, i) = 1.0 / (1.0 + std::exp(-parent_logits(i, x)));
  M y = gelu(conv2x2(ps, p + ".conv1", masks, s));
  y = conv2x2(ps, p + ".conv2", y, 2 * g);
  y = plus(y, mha(ps, p + ".self_attn", y, y, &pos, &pos, heads));
  return attention(h, y, y, &pos, nullptr, 1);
}

struct DecoderResult {
  std::vector<M> logits;
  std::vector<std::vector<double>> confidence;
};

inline DecoderResult decoder(const ParamStore& ps, const ConceptHierarchy& hier, const M& h, const M& pos,
                             const NetConfig& cfg) {
  DecoderResult out;
  const int g = cfg.grid();
  HeadResult prev = head(ps, 0, static_cast<int>(hier.level(0).size()), h, pos, g, cfg.heads);
  out.logits.push_back(prev.logits);
  out.confidence.push_back(prev.confidence);
  for (int l = 1; l < hier.num_levels(); ++l) {
    const M hl = cfg.use_parent_enhancer ? enhance(ps, l, prev.tokens, prev.logits, pos, g, cfg.heads)
                                         : prev.tokens;
    prev = head(ps, l, static_cast<int>(hier.level(l).size()), hl, pos, g, cfg.heads);
    out.logits.push_back(prev.logits);
    out.confidence.push_back(prev.confidence);
  }
  return out;
}

}  // namespace oracle

}  // namespace hcep::testing

#endif  // HCEP_TESTS_SUPPORT_HPP_
