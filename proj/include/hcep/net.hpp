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

#ifndef HCEP_NET_HPP_
#define HCEP_NET_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hcep/autodiff.hpp"
#include "json.hpp"

namespace hcep {

using ad::Matrix;
using ad::Tape;
using ad::Var;

struct NetConfig {
  int image_size = 64;
  int embed_dim = 64;
  int encoder_blocks = 2;
  int heads = 4;
  int patch_size = 4;
  double adapter_bottleneck_ratio = 0.25;
  double mlp_ratio = 4.0;
  bool adapters_enabled = false;
  /// Parent-specific feature enhancer on/off (the F ablation axis).
  bool use_parent_enhancer = true;
  /// Stop gradients from the child branch into the parent logits.
  bool detach_parent_logits = false;
  std::uint64_t init_seed = 0;

  int grid() const { return image_size / patch_size; }
  int mask_size() const { return 4 * grid(); }
  int pixel_channels() const { return embed_dim / 4; }
  int adapter_width() const;

  /// Throws ConfigError.
  void validate() const;
  nlohmann::json to_json() const;
  static NetConfig from_json(const nlohmann::json& j);
};

struct Parameter {
  std::string name;
  Matrix value;
  bool trainable = true;
};

/// Named parameters in creation order. Slot indices are stable for the
/// lifetime of a model and define the checkpoint order.
class ParamStore {
 public:
  int add(std::string name, Matrix value, bool trainable = true);
  int slot(const std::string& name) const;
  bool contains(const std::string& name) const { return by_name_.count(name) != 0; }
  Parameter& operator[](int slot) { return params_.at(static_cast<std::size_t>(slot)); }
  const Parameter& operator[](int slot) const { return params_.at(static_cast<std::size_t>(slot)); }
  int size() const { return static_cast<int>(params_.size()); }
  std::size_t scalar_count() const;
  std::vector<Parameter>::const_iterator begin() const { return params_.begin(); }
  std::vector<Parameter>::const_iterator end() const { return params_.end(); }

  /// Places parameter `slot` on the tape.
  Var on(Tape& t, int slot) const;

 private:
  std::vector<Parameter> params_;
  std::map<std::string, int> by_name_;
};

/// Per-slot gradient buffers matching a ParamStore.
using Gradients = std::vector<Matrix>;
Gradients zero_gradients(const ParamStore& ps);
void accumulate_tape_gradients(const Tape& t, Gradients& g);

using Rng = std::mt19937_64;

/// x W + b with W: in x out.
struct Linear {
  int weight = -1;
  int bias = -1;
  int in = 0;
  int out = 0;

  /// Xavier-uniform weights, zero bias; `zero_init` zeroes the weights too.
  static Linear create(ParamStore& ps, const std::string& name, int in, int out, Rng& rng,
                       bool zero_init = false);
  Var operator()(Tape& t, const ParamStore& ps, Var x) const;
};

struct LayerNorm {
  int gamma = -1;
  int beta = -1;

  static LayerNorm create(ParamStore& ps, const std::string& name, int dim);
  Var operator()(Tape& t, const ParamStore& ps, Var x) const;
};

/// Linear layers with GELU between them (none after the last).
struct Mlp {
  std::vector<Linear> layers;

  static Mlp create(ParamStore& ps, const std::string& name, std::vector<int> widths, Rng& rng);
  Var operator()(Tape& t, const ParamStore& ps, Var x) const;
};

/// Bottleneck residual adapter: x + up(gelu(down(x))). `up` starts at zero,
/// so a fresh adapter is an exact identity.
struct Adapter {
  Linear down;
  Linear up;

  static Adapter create(ParamStore& ps, const std::string& name, int dim, int width, Rng& rng);
  Var operator()(Tape& t, const ParamStore& ps, Var x) const;
};

/// Projection-free multi-head attention, added residually to the query stream:
///   q + concat_h softmax((q + pos_q)_h (k + pos_k)_h^T / sqrt(d_h)) v_h
Var attention(Var q, Var k, Var v, std::optional<Var> pos_q, std::optional<Var> pos_k, int heads);

/// Learned-projection multi-head attention. Returns the attended values
/// after the output projection (no residual).
struct MultiHeadAttention {
  Linear q, k, v, o;
  int heads = 1;

  static MultiHeadAttention create(ParamStore& ps, const std::string& name, int dim, int heads,
                                   Rng& rng);
  Var operator()(Tape& t, const ParamStore& ps, Var xq, Var xkv, std::optional<Var> pos_q,
                 std::optional<Var> pos_k) const;
};

/// 2-D sinusoidal encoding for a G x G grid: first d/2 channels encode the
/// row, the rest the column, each as interleaved (sin, cos) pairs.
Matrix positional_encoding(int grid, int dim);

struct EncoderBlock {
  LayerNorm norm1;
  MultiHeadAttention attn;
  LayerNorm norm2;
  Linear fc1;
  Linear fc2;
  Adapter adapter;
};

/// Patch-embedding transformer with FFN adapters.
class Encoder {
 public:
  static Encoder create(ParamStore& ps, const NetConfig& cfg, Rng& rng);

  /// `image` is (H*W) x 3 row-major RGB; returns G*G x d tokens.
  /// Throws ShapeError.
  Var operator()(Tape& t, const ParamStore& ps, Var image, Var pos) const;

  const std::vector<EncoderBlock>& blocks() const { return blocks_; }

 private:
  NetConfig cfg_;
  Linear patch_embed_;
  std::vector<EncoderBlock> blocks_;
  LayerNorm final_norm_;
};

/// Two stride-2 2x2 transposed convolutions (d -> d/2 -> d/4), GELU after each.
struct PixelDecoder {
  Linear up1;
  Linear up2;
  int grid = 0;

  static PixelDecoder create(ParamStore& ps, const std::string& name, int dim, int grid, Rng& rng);
  /// G*G x d tokens -> (4G)*(4G) x d/4 features.
  Var operator()(Tape& t, const ParamStore& ps, Var tokens) const;
};

/// Image (size*size*3 interleaved) -> (size*size) x 3 matrix.
Matrix image_matrix(const std::vector<double>& rgb, int size);

}  // namespace hcep

#endif  // HCEP_NET_HPP_
