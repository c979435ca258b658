// Copyright 2026 The Promptex Authors
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

// A small reverse-mode automatic differentiation engine over dense
// row-major matrices of doubles. A Graph records operations in creation
// order, which is a topological order, so Backward is one reverse sweep.

#ifndef PROMPTEX_AUTODIFF_H_
#define PROMPTEX_AUTODIFF_H_

#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace promptex::ad {

class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}
  Matrix(int rows, int cols, std::vector<double> data);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const {
    return data_[static_cast<size_t>(r) * cols_ + c];
  }
  std::span<double> row(int r) {
    return {data_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)};
  }
  std::span<const double> row(int r) const {
    return {data_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)};
  }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void Fill(double value);
  // this += other, shapes must match.
  void Accumulate(const Matrix& other);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// A named trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool weight_decay = true;

  void ZeroGrad() { grad = Matrix(value.rows(), value.cols()); }
};

// Owns named parameters with stable addresses, iterated in name order.
class ParameterSet {
 public:
  Parameter& Add(const std::string& name, Matrix value, bool weight_decay = true);
  Parameter& Get(const std::string& name);
  const Parameter& Get(const std::string& name) const;
  bool Contains(const std::string& name) const { return params_.contains(name); }

  std::vector<Parameter*> All();
  std::vector<const Parameter*> All() const;
  size_t size() const { return params_.size(); }

 private:
  std::map<std::string, Parameter> params_;
};

// Gaussian init scaled by `stddev`.
Matrix RandomNormal(int rows, int cols, double stddev, std::mt19937_64& rng);

using NodeId = int;

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  NodeId Constant(Matrix value);
  // Leaf bound to a parameter; Backward adds this node's gradient into
  // parameter->grad. The parameter must outlive the graph.
  NodeId Param(Parameter* parameter);

  const Matrix& Value(NodeId id) const;
  const Matrix& Grad(NodeId id) const;
  int size() const { return static_cast<int>(nodes_.size()); }

  NodeId MatMul(NodeId a, NodeId b);
  // a * b^T.
  NodeId MatMulTransposed(NodeId a, NodeId b);
  NodeId Add(NodeId a, NodeId b);
  // Adds a 1 x cols row to every row of a.
  NodeId AddRow(NodeId a, NodeId row);
  NodeId Scale(NodeId a, double factor);
  // Elementwise product with a constant matrix (dropout masks).
  NodeId MulConstant(NodeId a, Matrix mask);
  // pattern * s for a 1 x 1 node s.
  NodeId ScalarTimesConstant(NodeId scalar, Matrix pattern);
  // Tanh approximation of GELU.
  NodeId Gelu(NodeId a);
  NodeId SoftmaxRows(NodeId a);
  NodeId LayerNormRows(NodeId a, NodeId gain, NodeId bias, double eps = 1e-5);
  NodeId ConcatCols(std::span<const NodeId> parts);
  NodeId ConcatRows(std::span<const NodeId> parts);
  NodeId SliceCols(NodeId a, int begin, int count);
  NodeId SliceRows(NodeId a, int begin, int count);
  NodeId GatherRows(NodeId table, std::vector<int> rows);

  // Seeds d(out) with `seed` and propagates to every node that depends on a
  // parameter, then flushes gradients into the bound parameters.
  void Backward(NodeId out, const Matrix& seed);

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;  // Parameter value, not copied.
    Matrix grad;
    bool needs_grad = false;
    Parameter* parameter = nullptr;
    std::function<void(Graph&, Node&)> backward;
  };

  NodeId Push(Matrix value, bool needs_grad,
              std::function<void(Graph&, Node&)> backward);
  Node& node(NodeId id) { return nodes_[static_cast<size_t>(id)]; }
  const Node& node(NodeId id) const { return nodes_[static_cast<size_t>(id)]; }
  // Returns the gradient buffer of `id`, allocating zeros on first use.
  Matrix& GradBuffer(NodeId id);
  bool NeedsGrad(NodeId id) const { return node(id).needs_grad; }

  std::vector<Node> nodes_;
};

}  // namespace promptex::ad

#endif  // PROMPTEX_AUTODIFF_H_
