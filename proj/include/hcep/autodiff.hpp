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

#ifndef HCEP_AUTODIFF_HPP_
#define HCEP_AUTODIFF_HPP_

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hcep::ad {

/// Row-major dense matrix; token sequences are stored one token per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

class Tape;

/// Handle to a node on a Tape. Cheap to copy; only valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  const Matrix& grad() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* t, int id) : tape_(t), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode tape. Nodes are appended in evaluation order and replayed
/// backwards. A tape is confined to one thread.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

  struct Seed {
    Var var;
    Matrix grad;
  };

  Var constant(Matrix v);
  /// Leaf that receives a gradient (used by gradient checks).
  Var variable(Matrix v);
  /// Leaf bound to parameter `slot`; repeated calls return the same node.
  Var parameter(int slot, const Matrix& v, bool trainable = true);

  /// Appends an op node; `backward` distributes `out_grad` to `inputs`.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Matrix value, std::span<const Var> inputs, Backward backward);

  /// Seeds a 1x1 root with 1 and back-propagates.
  void backward(Var root);
  void backward(std::span<const Seed> seeds);

  const Matrix& value(int id) const { return nodes_[id].value; }
  const Matrix& grad(int id) const;
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }

  /// grad(id) += g, allocating on first use. No-op when `id` needs no gradient.
  template <typename Expr>
  void accumulate(int id, const Expr& g) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  /// (slot, gradient) for every trainable parameter touched by the last backward.
  std::vector<std::pair<int, const Matrix*>> parameter_grads() const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    bool needs_grad = false;
  };
  Var push(Node n);

  std::vector<Node> nodes_;
  std::unordered_map<int, int> param_nodes_;  // slot -> node id
};

// Linear algebra.
Var matmul(Var a, Var b);
/// a * b^T
Var matmul_nt(Var a, Var b);
Var transpose(Var a);

// Elementwise.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double s);
/// Adds a 1 x cols row vector to every row.
Var add_row(Var a, Var row);
Var gelu(Var a);
Var sigmoid(Var a);
Var detach(Var a);

// Row-wise.
Var softmax_rows(Var a);
Var layer_norm_rows(Var x, Var gamma, Var beta, double eps = 1e-5);

// Reductions.
Var sum(Var a);

// Structural.
Var slice_rows(Var a, Index start, Index count);
Var slice_cols(Var a, Index start, Index count);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);

/// (H*W) x C raster -> (H/b * W/b) x (b*b*C); column = (dy*b + dx)*C + c.
Var space_to_depth(Var x, Index height, Index width, Index block);
/// Inverse of space_to_depth; `height`, `width` are the coarse grid dimensions.
Var depth_to_space(Var x, Index height, Index width, Index block);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }

// Plain-matrix versions of the structural transforms, shared with the oracles.
Matrix space_to_depth(const Matrix& x, Index height, Index width, Index block);
Matrix depth_to_space(const Matrix& x, Index height, Index width, Index block);
Matrix softmax_rows(const Matrix& a);
double gelu(double x);
double gelu_grad(double x);
double sigmoid(double x);

}  // namespace hcep::ad

#endif  // HCEP_AUTODIFF_HPP_
