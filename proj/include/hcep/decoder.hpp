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

#ifndef HCEP_DECODER_HPP_
#define HCEP_DECODER_HPP_

#include <vector>

#include "hcep/hierarchy.hpp"
#include "hcep/net.hpp"

namespace hcep {

/// Query-based segmentation head for one hierarchy level. Mask queries and
/// their confidence tokens share the self-attention and the bidirectional
/// cross-attention with the image tokens.
struct SegmentationHead {
  int queries = -1;      // n x d
  int conf_tokens = -1;  // n x d
  MultiHeadAttention self_attn;
  std::vector<Mlp> mask_mlps;  // one per concept, d -> d -> d -> d/4
  Mlp conf_mlp;                // d + 3 -> d -> d -> 1
  int count = 0;
};

/// Encodes the parent masks back onto the token grid and injects them into
/// the image tokens.
struct ParentEnhancer {
  Linear conv1;  // 2x2 stride 2: n_P -> d/4 channels
  Linear conv2;  // 2x2 stride 2: d/4 -> d channels
  MultiHeadAttention self_attn;
  int parents = 0;
};

struct HeadOutput {
  Var logits;      // n x (4G)^2
  Var confidence;  // n x 1, in (0, 1)
  Var queries;     // updated mask queries, n x d
  Var conf_states; // updated confidence tokens, n x d
  Var tokens;      // updated image tokens, G^2 x d
};

struct DecoderVars {
  std::vector<Var> logits;      // per level
  std::vector<Var> confidence;  // per level
};

/// Per-mask columns sum(p), sum(p^2) and sum(4p(1-p)), each divided by
/// sum(p) + 1, with p = sigmoid(logits). Differentiable in the logits.
Var mask_statistics(Var logits);
inline constexpr int kMaskStatistics = 3;

class HierDecoder {
 public:
  /// Requires a hierarchy with at least one child level.
  static HierDecoder create(ParamStore& ps, const NetConfig& cfg, const ConceptHierarchy& h, Rng& rng);

  /// Root level: queries self-attend, then token->query and query->token
  /// attention; logits are MLP(q) . pixel_decode(h).
  HeadOutput decode_parent(Tape& t, const ParamStore& ps, Var h, Var pos) const;

  /// h^l = softmax((h + pos) Y^T / sqrt(d)) Y + h, with Y the encoded
  /// (and self-attended) masks of level `level - 1`.
  Var enhance_with_parent(Tape& t, const ParamStore& ps, int level, Var h, Var parent_logits,
                          Var pos) const;

  /// Child level `level` >= 1 decoded from the enhanced tokens.
  HeadOutput decode_child(Tape& t, const ParamStore& ps, int level, Var h_enhanced, Var pos) const;

  /// 3-layer MLP + sigmoid over the confidence-token states of `level`,
  /// each concatenated with the statistics of its own mask.
  Var predict_confidence(Tape& t, const ParamStore& ps, int level, Var conf_states, Var logits) const;

  /// Chains every level: level l+1 is conditioned on level l.
  DecoderVars forward(Tape& t, const ParamStore& ps, Var h, Var pos) const;

  int levels() const { return static_cast<int>(heads_.size()); }
  const SegmentationHead& head(int level) const { return heads_.at(static_cast<std::size_t>(level)); }
  const ParentEnhancer& enhancer(int level) const {
    return enhancers_.at(static_cast<std::size_t>(level));
  }
  const PixelDecoder& pixel_decoder() const { return pixel_; }

 private:
  HeadOutput run_head(Tape& t, const ParamStore& ps, int level, Var h, Var pos) const;

  NetConfig cfg_;
  PixelDecoder pixel_;
  std::vector<SegmentationHead> heads_;
  std::vector<ParentEnhancer> enhancers_;  // index 0 unused
};

/// Parent-gated child maps: p(child) = p(parent(child)) * p(child | parent).
/// `parent_probs` rows follow level(parent_level), `child_probs` rows follow
/// level(parent_level + 1). Throws ShapeMismatchError.
Matrix hierarchical_probability(const Matrix& parent_probs, const Matrix& child_probs,
                                const ConceptHierarchy& h, int parent_level = 0);

}  // namespace hcep

#endif  // HCEP_DECODER_HPP_
