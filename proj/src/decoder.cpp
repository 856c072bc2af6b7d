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

#include "hcep/decoder.hpp"

#include <cmath>

#include "hcep/errors.hpp"

namespace hcep {

HierDecoder HierDecoder::create(ParamStore& ps, const NetConfig& cfg, const ConceptHierarchy& h,
                                Rng& rng) {
  cfg.validate();
  if (h.depth() < 1) throw ConfigError("the hierarchical decoder needs at least two levels");
  HierDecoder dec;
  dec.cfg_ = cfg;
  const int d = cfg.embed_dim;
  const int dp = cfg.pixel_channels();
  dec.pixel_ = PixelDecoder::create(ps, "decoder/pixel", d, cfg.grid(), rng);

  std::normal_distribution<double> normal(0.0, 1.0);
  for (int l = 0; l < h.num_levels(); ++l) {
    const std::string n = "decoder/level" + std::to_string(l);
    const int count = static_cast<int>(h.level(l).size());
    SegmentationHead head;
    head.count = count;
    Matrix q(count, d);
    for (ad::Index i = 0; i < q.size(); ++i) q.data()[i] = normal(rng);
    head.queries = ps.add(n + ".queries", q);
    // Each confidence token starts as a copy of its mask query.
    head.conf_tokens = ps.add(n + ".conf_tokens", q);
    head.self_attn = MultiHeadAttention::create(ps, n + ".self_attn", d, cfg.heads, rng);
    for (int k = 0; k < count; ++k)
      head.mask_mlps.push_back(
          Mlp::create(ps, n + ".mask_mlp" + std::to_string(k), {d, d, d, dp}, rng));
    head.conf_mlp = Mlp::create(ps, n + ".conf_mlp", {d + kMaskStatistics, d, d, 1}, rng);
    dec.heads_.push_back(std::move(head));

    ParentEnhancer enh;
    if (l > 0) {
      const int parents = static_cast<int>(h.level(l - 1).size());
      enh.parents = parents;
      enh.conv1 = Linear::create(ps, n + ".enhancer.conv1", 4 * parents, d / 4, rng);
      enh.conv2 = Linear::create(ps, n + ".enhancer.conv2", d, d, rng);
      enh.self_attn = MultiHeadAttention::create(ps, n + ".enhancer.self_attn", d, cfg.heads, rng);
    }
    dec.enhancers_.push_back(std::move(enh));
  }
  return dec;
}

HeadOutput HierDecoder::run_head(Tape& t, const ParamStore& ps, int level, Var h, Var pos) const {
  const SegmentationHead& head = heads_.at(static_cast<std::size_t>(level));
  const ad::Index g2 = static_cast<ad::Index>(cfg_.grid()) * cfg_.grid();
  if (h.rows() != g2 || h.cols() != cfg_.embed_dim)
    throw ShapeError("decoder head expects a G^2 x d token grid");
  const int n = head.count;

  Var stacked[2] = {ps.on(t, head.queries), ps.on(t, head.conf_tokens)};
  Var q = ad::concat_rows(stacked);
  q = ad::add(q, head.self_attn(t, ps, q, q, std::nullopt, std::nullopt));
  // token -> query, then query -> token; residual on the query side of each.
  h = attention(h, q, q, pos, std::nullopt, 1);
  q = attention(q, h, h, std::nullopt, pos, 1);

  HeadOutput out;
  out.tokens = h;
  out.queries = ad::slice_rows(q, 0, n);
  out.conf_states = ad::slice_rows(q, n, n);
  std::vector<Var> hyper;
  hyper.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) hyper.push_back(head.mask_mlps[k](t, ps, ad::slice_rows(out.queries, k, 1)));
  out.logits = ad::matmul_nt(ad::concat_rows(hyper), pixel_(t, ps, h));
  out.confidence = predict_confidence(t, ps, level, out.conf_states, out.logits);
  return out;
}

HeadOutput HierDecoder::decode_parent(Tape& t, const ParamStore& ps, Var h, Var pos) const {
  return run_head(t, ps, 0, h, pos);
}

HeadOutput HierDecoder::decode_child(Tape& t, const ParamStore& ps, int level, Var h_enhanced,
                                     Var pos) const {
  if (level < 1 || level >= levels()) throw ShapeError("child level out of range");
  return run_head(t, ps, level, h_enhanced, pos);
}

Var mask_statistics(Var logits) {
  Tape& t = *logits.tape();
  const ad::Index n = logits.rows(), px = logits.cols();
  const Var p = ad::sigmoid(logits);
  const Var ones = t.constant(Matrix::Ones(px, 1));
  const Var mass = ad::matmul(p, ones);
  const Var sq = ad::matmul(ad::mul(p, p), ones);
  const Var unc = ad::matmul(ad::scale(ad::mul(p, ad::sub(t.constant(Matrix::Ones(n, px)), p)), 4.0), ones);
  const Var denom = ad::add(mass, t.constant(Matrix::Ones(n, 1)));
  const Var num[kMaskStatistics] = {mass, sq, unc};
  const Var den[kMaskStatistics] = {denom, denom, denom};
  return ad::div(ad::concat_cols(num), ad::concat_cols(den));
}

Var HierDecoder::predict_confidence(Tape& t, const ParamStore& ps, int level, Var conf_states,
                                    Var logits) const {
  const SegmentationHead& head = heads_.at(static_cast<std::size_t>(level));
  if (conf_states.rows() != head.count || logits.rows() != head.count)
    throw ShapeError("one confidence token per mask required");
  const Var in[2] = {conf_states, mask_statistics(logits)};
  return ad::sigmoid(head.conf_mlp(t, ps, ad::concat_cols(in)));
}

Var HierDecoder::enhance_with_parent(Tape& t, const ParamStore& ps, int level, Var h,
                                     Var parent_logits, Var pos) const {
  if (level < 1 || level >= levels()) throw ShapeError("enhancer level out of range");
  const ParentEnhancer& enh = enhancers_[static_cast<std::size_t>(level)];
  const int m = cfg_.mask_size();
  const int g = cfg_.grid();
  if (parent_logits.rows() != enh.parents || parent_logits.cols() != static_cast<ad::Index>(m) * m)
    throw ShapeError("parent logits must be n_P x (4G)^2");
  if (cfg_.detach_parent_logits) parent_logits = ad::detach(parent_logits);

  // Masks as a (4G)^2 x n_P raster, then two stride-2 convolutions.
  Var masks = ad::transpose(ad::sigmoid(parent_logits));
  Var y = ad::gelu(enh.conv1(t, ps, ad::space_to_depth(masks, m, m, 2)));
  y = enh.conv2(t, ps, ad::space_to_depth(y, 2 * g, 2 * g, 2));
  y = ad::add(y, enh.self_attn(t, ps, y, y, pos, pos));
  // Mask tokens act as keys and values; image tokens are the queries.
  return attention(h, y, y, pos, std::nullopt, 1);
}

DecoderVars HierDecoder::forward(Tape& t, const ParamStore& ps, Var h, Var pos) const {
  DecoderVars out;
  HeadOutput prev = decode_parent(t, ps, h, pos);
  out.logits.push_back(prev.logits);
  out.confidence.push_back(prev.confidence);
  for (int l = 1; l < levels(); ++l) {
    Var hl = cfg_.use_parent_enhancer ? enhance_with_parent(t, ps, l, prev.tokens, prev.logits, pos)
                                      : prev.tokens;
    prev = decode_child(t, ps, l, hl, pos);
    out.logits.push_back(prev.logits);
    out.confidence.push_back(prev.confidence);
  }
  return out;
}

Matrix hierarchical_probability(const Matrix& parent_probs, const Matrix& child_probs,
                                const ConceptHierarchy& h, int parent_level) {
  const auto& parents = h.level(parent_level);
  const auto& kids = h.level(parent_level + 1);
  if (parent_probs.rows() != static_cast<ad::Index>(parents.size()) ||
      child_probs.rows() != static_cast<ad::Index>(kids.size()) ||
      parent_probs.cols() != child_probs.cols())
    throw ShapeMismatchError("probability stacks do not match the hierarchy levels");
  Matrix out(child_probs.rows(), child_probs.cols());
  for (std::size_t j = 0; j < kids.size(); ++j) {
    const int p = h.slot(*h.parent(kids[j]));
    out.row(static_cast<ad::Index>(j)) =
        child_probs.row(static_cast<ad::Index>(j)).cwiseProduct(parent_probs.row(p));
  }
  return out;
}

}  // namespace hcep
