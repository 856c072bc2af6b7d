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

#include "hcep/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hcep/errors.hpp"

namespace hcep::ad {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

Tape& tape_of(Var a) {
  require(a.valid(), "operation on an empty Var");
  return *a.tape();
}

void same_tape(Var a, Var b) {
  require(a.valid() && b.valid() && a.tape() == b.tape(), "Vars belong to different tapes");
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }

Var Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Matrix v) { return push({std::move(v), {}, nullptr, false}); }

Var Tape::variable(Matrix v) { return push({std::move(v), {}, nullptr, true}); }

Var Tape::parameter(int slot, const Matrix& v, bool trainable) {
  auto it = param_nodes_.find(slot);
  if (it != param_nodes_.end()) return Var(this, it->second);
  Var p = push({v, {}, nullptr, trainable});
  param_nodes_.emplace(slot, p.id());
  return p;
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::record(Matrix value, std::span<const Var> inputs, Backward backward) {
  bool needs = false;
  for (const Var& v : inputs) {
    require(v.tape() == this, "input recorded on another tape");
    needs = needs || nodes_[v.id()].needs_grad;
  }
  return push({std::move(value), {}, needs ? std::move(backward) : nullptr, needs});
}

const Matrix& Tape::grad(int id) const { return nodes_[id].grad; }

void Tape::backward(Var root) {
  require(root.rows() == 1 && root.cols() == 1, "backward(root) needs a scalar root");
  Seed s{root, Matrix::Ones(1, 1)};
  backward(std::span<const Seed>(&s, 1));
}

void Tape::backward(std::span<const Seed> seeds) {
  int last = -1;
  for (const auto& s : seeds) {
    require(s.var.tape() == this, "seed recorded on another tape");
    require(s.grad.rows() == s.var.rows() && s.grad.cols() == s.var.cols(), "seed shape mismatch");
    accumulate(s.var.id(), s.grad);
    last = std::max(last, s.var.id());
  }
  for (int id = last; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || !n.backward || n.grad.size() == 0) continue;
    n.backward(*this, n.grad);
  }
}

std::vector<std::pair<int, const Matrix*>> Tape::parameter_grads() const {
  std::vector<std::pair<int, const Matrix*>> out;
  for (const auto& [slot, id] : param_nodes_) {
    const Node& n = nodes_[id];
    if (n.needs_grad && n.grad.size() != 0) out.emplace_back(slot, &n.grad);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

Var matmul(Var a, Var b) {
  same_tape(a, b);
  require(a.cols() == b.rows(), "matmul inner dimensions differ");
  Matrix v(a.rows(), b.cols());
  v.noalias() = a.value() * b.value();
  const int ia = a.id(), ib = b.id();
  return tape_of(a).record(std::move(v), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    if (t.needs_grad(ia)) t.accumulate(ia, (g * t.value(ib).transpose()).eval());
    if (t.needs_grad(ib)) t.accumulate(ib, (t.value(ia).transpose() * g).eval());
  });
}

Var matmul_nt(Var a, Var b) {
  same_tape(a, b);
  require(a.cols() == b.cols(), "matmul_nt inner dimensions differ");
  Matrix v(a.rows(), b.rows());
  v.noalias() = a.value() * b.value().transpose();
  const int ia = a.id(), ib = b.id();
  return tape_of(a).record(std::move(v), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    if (t.needs_grad(ia)) t.accumulate(ia, (g * t.value(ib)).eval());
    if (t.needs_grad(ib)) t.accumulate(ib, (g.transpose() * t.value(ia)).eval());
  });
}

Var transpose(Var a) {
  Matrix v = a.value().transpose();
  const int ia = a.id();
  return tape_of(a).record(std::move(v), {a},
                           [ia](Tape& t, const Matrix& g) { t.accumulate(ia, g.transpose()); });
}

Var add(Var a, Var b) {
  same_tape(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "add shape mismatch");
  Matrix v = a.value() + b.value();
  const int ia = a.id(), ib = b.id();
  return tape_of(a).record(std::move(v), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  same_tape(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "sub shape mismatch");
  Matrix v = a.value() - b.value();
  const int ia = a.id(), ib = b.id();
  return tape_of(a).record(std::move(v), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    t.accumulate(ia, g);
    t.accumulate(ib, -g);
  });
}

Var mul(Var a, Var b) {
  same_tape(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "mul shape mismatch");
  Matrix v = a.value().cwiseProduct(b.value());
  const int ia = a.id(), ib = b.id();
  return tape_of(a).record(std::move(v), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    if (t.needs_grad(ia)) t.accumulate(ia, g.cwiseProduct(t.value(ib)));
    if (t.needs_grad(ib)) t.accumulate(ib, g.cwiseProduct(t.value(ia)));
  });
}

Var div(Var a, Var b) {
  same_tape(a, b);
  require(a.rows() == b.rows() && a.cols() == b.cols(), "div shape mismatch");
  Matrix v = a.value().cwiseQuotient(b.value());
  const int ia = a.id(), ib = b.id();
  return tape_of(a).record(std::move(v), {a, b}, [ia, ib](Tape& t, const Matrix& g) {
    const Matrix& bv = t.value(ib);
    if (t.needs_grad(ia)) t.accumulate(ia, g.cwiseQuotient(bv));
    if (t.needs_grad(ib))
      t.accumulate(ib, -g.cwiseProduct(t.value(ia)).cwiseQuotient(bv.cwiseProduct(bv)));
  });
}

Var scale(Var a, double s) {
  Matrix v = a.value() * s;
  const int ia = a.id();
  return tape_of(a).record(std::move(v), {a},
                           [ia, s](Tape& t, const Matrix& g) { t.accumulate(ia, g * s); });
}

Var add_row(Var a, Var row) {
  same_tape(a, row);
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row expects a 1 x cols row");
  Matrix v = a.value().rowwise() + row.value().row(0);
  const int ia = a.id(), ir = row.id();
  return tape_of(a).record(std::move(v), {a, row}, [ia, ir](Tape& t, const Matrix& g) {
    t.accumulate(ia, g);
    if (t.needs_grad(ir)) t.accumulate(ir, g.colwise().sum());
  });
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Var gelu(Var a) {
  Matrix v = a.value().unaryExpr([](double x) { return gelu(x); });
  const int ia = a.id();
  return tape_of(a).record(std::move(v), {a}, [ia](Tape& t, const Matrix& g) {
    t.accumulate(ia, g.cwiseProduct(t.value(ia).unaryExpr([](double x) { return gelu_grad(x); })));
  });
}

Var sigmoid(Var a) {
  Matrix v = a.value().unaryExpr([](double x) { return sigmoid(x); });
  Tape& tape = tape_of(a);
  const int ia = a.id();
  const int self = static_cast<int>(tape.size());
  return tape.record(std::move(v), {a}, [ia, self](Tape& t, const Matrix& g) {
    const Matrix& y = t.value(self);
    t.accumulate(ia, g.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())));
  });
}

Var detach(Var a) { return tape_of(a).constant(a.value()); }

Matrix softmax_rows(const Matrix& a) {
  Matrix p(a.rows(), a.cols());
  for (Index r = 0; r < a.rows(); ++r) {
    const double m = a.row(r).maxCoeff();
    p.row(r) = (a.row(r).array() - m).exp().matrix();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

Var softmax_rows(Var a) {
  Matrix v = softmax_rows(a.value());
  Tape& tape = tape_of(a);
  const int ia = a.id();
  const int self = static_cast<int>(tape.size());
  return tape.record(std::move(v), {a}, [ia, self](Tape& t, const Matrix& g) {
    const Matrix& p = t.value(self);
    Eigen::VectorXd dots = g.cwiseProduct(p).rowwise().sum();
    Matrix d = g;
    d.colwise() -= dots;
    t.accumulate(ia, d.cwiseProduct(p));
  });
}

Var layer_norm_rows(Var x, Var gamma, Var beta, double eps) {
  same_tape(x, gamma);
  same_tape(x, beta);
  const Index n = x.cols();
  require(gamma.rows() == 1 && gamma.cols() == n && beta.rows() == 1 && beta.cols() == n,
          "layer_norm affine shape mismatch");
  const Matrix& xv = x.value();
  Matrix xhat(xv.rows(), n);
  Eigen::VectorXd rstd(xv.rows());
  for (Index r = 0; r < xv.rows(); ++r) {
    const double mu = xv.row(r).mean();
    const double var = (xv.row(r).array() - mu).square().mean();
    rstd(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mu) * rstd(r);
  }
  Matrix v = (xhat.array().rowwise() * gamma.value().row(0).array()).matrix();
  v.rowwise() += beta.value().row(0);
  const int ix = x.id(), ig = gamma.id(), ib = beta.id();
  return tape_of(x).record(
      std::move(v), {x, gamma, beta},
      [ix, ig, ib, xhat = std::move(xhat), rstd = std::move(rstd)](Tape& t, const Matrix& g) {
        if (t.needs_grad(ig)) t.accumulate(ig, g.cwiseProduct(xhat).colwise().sum());
        if (t.needs_grad(ib)) t.accumulate(ib, g.colwise().sum());
        if (!t.needs_grad(ix)) return;
        Matrix dxhat = (g.array().rowwise() * t.value(ig).row(0).array()).matrix();
        Matrix dx(g.rows(), g.cols());
        for (Index r = 0; r < g.rows(); ++r) {
          const double m1 = dxhat.row(r).mean();
          const double m2 = dxhat.row(r).cwiseProduct(xhat.row(r)).mean();
          dx.row(r) = ((dxhat.row(r).array() - m1 - xhat.row(r).array() * m2) * rstd(r)).matrix();
        }
        t.accumulate(ix, dx);
      });
}

Var sum(Var a) {
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  const int ia = a.id();
  const Index r = a.rows(), c = a.cols();
  return tape_of(a).record(std::move(v), {a}, [ia, r, c](Tape& t, const Matrix& g) {
    t.accumulate(ia, Matrix::Constant(r, c, g(0, 0)));
  });
}

Var slice_rows(Var a, Index start, Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows out of range");
  Matrix v = a.value().middleRows(start, count);
  const int ia = a.id();
  const Index r = a.rows(), c = a.cols();
  return tape_of(a).record(std::move(v), {a}, [ia, r, c, start, count](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(r, c);
    full.middleRows(start, count) = g;
    t.accumulate(ia, full);
  });
}

Var slice_cols(Var a, Index start, Index count) {
  require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols out of range");
  Matrix v = a.value().middleCols(start, count);
  const int ia = a.id();
  const Index r = a.rows(), c = a.cols();
  return tape_of(a).record(std::move(v), {a}, [ia, r, c, start, count](Tape& t, const Matrix& g) {
    Matrix full = Matrix::Zero(r, c);
    full.middleCols(start, count) = g;
    t.accumulate(ia, full);
  });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows of nothing");
  const Index c = parts[0].cols();
  Index rows = 0;
  for (const Var& p : parts) {
    same_tape(parts[0], p);
    require(p.cols() == c, "concat_rows column mismatch");
    rows += p.rows();
  }
  Matrix v(rows, c);
  std::vector<std::pair<int, Index>> spans;
  Index off = 0;
  for (const Var& p : parts) {
    v.middleRows(off, p.rows()) = p.value();
    spans.emplace_back(p.id(), off);
    off += p.rows();
  }
  return tape_of(parts[0]).record(std::move(v), parts, [spans](Tape& t, const Matrix& g) {
    for (const auto& [id, start] : spans)
      if (t.needs_grad(id)) t.accumulate(id, g.middleRows(start, t.value(id).rows()));
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols of nothing");
  const Index r = parts[0].rows();
  Index cols = 0;
  for (const Var& p : parts) {
    same_tape(parts[0], p);
    require(p.rows() == r, "concat_cols row mismatch");
    cols += p.cols();
  }
  Matrix v(r, cols);
  std::vector<std::pair<int, Index>> spans;
  Index off = 0;
  for (const Var& p : parts) {
    v.middleCols(off, p.cols()) = p.value();
    spans.emplace_back(p.id(), off);
    off += p.cols();
  }
  return tape_of(parts[0]).record(std::move(v), parts, [spans](Tape& t, const Matrix& g) {
    for (const auto& [id, start] : spans)
      if (t.needs_grad(id)) t.accumulate(id, g.middleCols(start, t.value(id).cols()));
  });
}

Matrix space_to_depth(const Matrix& x, Index height, Index width, Index block) {
  require(block > 0 && height % block == 0 && width % block == 0, "space_to_depth block mismatch");
  require(x.rows() == height * width, "space_to_depth raster size mismatch");
  const Index C = x.cols(), hc = height / block, wc = width / block;
  Matrix out(hc * wc, block * block * C);
  for (Index Y = 0; Y < hc; ++Y)
    for (Index X = 0; X < wc; ++X)
      for (Index dy = 0; dy < block; ++dy)
        for (Index dx = 0; dx < block; ++dx)
          out.block(Y * wc + X, (dy * block + dx) * C, 1, C) =
              x.row((Y * block + dy) * width + X * block + dx);
  return out;
}

Matrix depth_to_space(const Matrix& x, Index height, Index width, Index block) {
  require(block > 0 && x.cols() % (block * block) == 0, "depth_to_space channel mismatch");
  require(x.rows() == height * width, "depth_to_space grid size mismatch");
  const Index C = x.cols() / (block * block), wf = width * block;
  Matrix out(height * width * block * block, C);
  for (Index Y = 0; Y < height; ++Y)
    for (Index X = 0; X < width; ++X)
      for (Index dy = 0; dy < block; ++dy)
        for (Index dx = 0; dx < block; ++dx)
          out.row((Y * block + dy) * wf + X * block + dx) =
              x.block(Y * width + X, (dy * block + dx) * C, 1, C);
  return out;
}

Var space_to_depth(Var x, Index height, Index width, Index block) {
  Matrix v = space_to_depth(x.value(), height, width, block);
  const int ix = x.id();
  return tape_of(x).record(std::move(v), {x}, [=](Tape& t, const Matrix& g) {
    t.accumulate(ix, depth_to_space(g, height / block, width / block, block));
  });
}

Var depth_to_space(Var x, Index height, Index width, Index block) {
  Matrix v = depth_to_space(x.value(), height, width, block);
  const int ix = x.id();
  return tape_of(x).record(std::move(v), {x}, [=](Tape& t, const Matrix& g) {
    t.accumulate(ix, space_to_depth(g, height * block, width * block, block));
  });
}

}  // namespace hcep::ad
