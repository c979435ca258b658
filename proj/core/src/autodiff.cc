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

#include "promptex/autodiff.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace promptex::ad {
namespace {

void CheckSameShape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(fmt::format("{}: shape mismatch {}x{} vs {}x{}",
                                            op, a.rows(), a.cols(), b.rows(),
                                            b.cols()));
  }
}

// out += a * b
void GemmAccumulate(const Matrix& a, const Matrix& b, Matrix& out) {
  const int n = a.rows(), k = a.cols(), m = b.cols();
  for (int i = 0; i < n; ++i) {
    double* out_row = out.row(i).data();
    const double* a_row = a.row(i).data();
    for (int p = 0; p < k; ++p) {
      const double av = a_row[p];
      if (av == 0.0) continue;
      const double* b_row = b.row(p).data();
      for (int j = 0; j < m; ++j) out_row[j] += av * b_row[j];
    }
  }
}

// out += a * b^T
void GemmTransposedAccumulate(const Matrix& a, const Matrix& b, Matrix& out) {
  const int n = a.rows(), k = a.cols(), m = b.rows();
  for (int i = 0; i < n; ++i) {
    const double* a_row = a.row(i).data();
    for (int j = 0; j < m; ++j) {
      const double* b_row = b.row(j).data();
      double sum = 0.0;
      for (int p = 0; p < k; ++p) sum += a_row[p] * b_row[p];
      out(i, j) += sum;
    }
  }
}

// out += a^T * b
void GemmLeftTransposedAccumulate(const Matrix& a, const Matrix& b, Matrix& out) {
  const int n = a.rows(), k = a.cols(), m = b.cols();
  for (int i = 0; i < n; ++i) {
    const double* a_row = a.row(i).data();
    const double* b_row = b.row(i).data();
    for (int p = 0; p < k; ++p) {
      const double av = a_row[p];
      if (av == 0.0) continue;
      double* out_row = out.row(p).data();
      for (int j = 0; j < m; ++j) out_row[j] += av * b_row[j];
    }
  }
}

constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluCubic = 0.044715;

}  // namespace

Matrix::Matrix(int rows, int cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != static_cast<size_t>(rows) * cols) {
    throw std::invalid_argument("matrix data size does not match shape");
  }
}

void Matrix::Fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void Matrix::Accumulate(const Matrix& other) {
  CheckSameShape(*this, other, "Accumulate");
  for (size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

Parameter& ParameterSet::Add(const std::string& name, Matrix value,
                             bool weight_decay) {
  auto [it, inserted] = params_.try_emplace(name);
  if (!inserted) throw std::invalid_argument("duplicate parameter " + name);
  it->second.name = name;
  it->second.value = std::move(value);
  it->second.weight_decay = weight_decay;
  it->second.ZeroGrad();
  return it->second;
}

Parameter& ParameterSet::Get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no parameter " + name);
  return it->second;
}

const Parameter& ParameterSet::Get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no parameter " + name);
  return it->second;
}

std::vector<Parameter*> ParameterSet::All() {
  std::vector<Parameter*> out;
  for (auto& [name, p] : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> ParameterSet::All() const {
  std::vector<const Parameter*> out;
  for (const auto& [name, p] : params_) out.push_back(&p);
  return out;
}

Matrix RandomNormal(int rows, int cols, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix m(rows, cols);
  for (auto& x : m.data()) x = dist(rng);
  return m;
}

NodeId Graph::Push(Matrix value, bool needs_grad,
                   std::function<void(Graph&, Node&)> backward) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

NodeId Graph::Constant(Matrix value) { return Push(std::move(value), false, nullptr); }

NodeId Graph::Param(Parameter* parameter) {
  Node n;
  n.external = &parameter->value;
  n.needs_grad = true;
  n.parameter = parameter;
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size() - 1);
}

const Matrix& Graph::Value(NodeId id) const {
  const Node& n = node(id);
  return n.external != nullptr ? *n.external : n.value;
}

const Matrix& Graph::Grad(NodeId id) const { return node(id).grad; }

Matrix& Graph::GradBuffer(NodeId id) {
  Node& n = node(id);
  if (n.grad.empty()) {
    const Matrix& v = Value(id);
    n.grad = Matrix(v.rows(), v.cols());
  }
  return n.grad;
}

NodeId Graph::MatMul(NodeId a, NodeId b) {
  const Matrix& av = Value(a);
  const Matrix& bv = Value(b);
  if (av.cols() != bv.rows()) {
    throw std::invalid_argument(fmt::format("MatMul: {}x{} * {}x{}", av.rows(),
                                            av.cols(), bv.rows(), bv.cols()));
  }
  Matrix out(av.rows(), bv.cols());
  GemmAccumulate(av, bv, out);
  return Push(std::move(out), NeedsGrad(a) || NeedsGrad(b),
              [a, b](Graph& g, Node& self) {
                if (g.NeedsGrad(a)) {
                  GemmTransposedAccumulate(self.grad, g.Value(b), g.GradBuffer(a));
                }
                if (g.NeedsGrad(b)) {
                  GemmLeftTransposedAccumulate(g.Value(a), self.grad, g.GradBuffer(b));
                }
              });
}

NodeId Graph::MatMulTransposed(NodeId a, NodeId b) {
  const Matrix& av = Value(a);
  const Matrix& bv = Value(b);
  if (av.cols() != bv.cols()) {
    throw std::invalid_argument("MatMulTransposed: inner dimension mismatch");
  }
  Matrix out(av.rows(), bv.rows());
  GemmTransposedAccumulate(av, bv, out);
  return Push(std::move(out), NeedsGrad(a) || NeedsGrad(b),
              [a, b](Graph& g, Node& self) {
                if (g.NeedsGrad(a)) GemmAccumulate(self.grad, g.Value(b), g.GradBuffer(a));
                if (g.NeedsGrad(b)) {
                  GemmLeftTransposedAccumulate(self.grad, g.Value(a), g.GradBuffer(b));
                }
              });
}

NodeId Graph::Add(NodeId a, NodeId b) {
  CheckSameShape(Value(a), Value(b), "Add");
  Matrix out = Value(a);
  out.Accumulate(Value(b));
  return Push(std::move(out), NeedsGrad(a) || NeedsGrad(b),
              [a, b](Graph& g, Node& self) {
                if (g.NeedsGrad(a)) g.GradBuffer(a).Accumulate(self.grad);
                if (g.NeedsGrad(b)) g.GradBuffer(b).Accumulate(self.grad);
              });
}

NodeId Graph::AddRow(NodeId a, NodeId row) {
  const Matrix& rv = Value(row);
  Matrix out = Value(a);
  if (rv.rows() != 1 || rv.cols() != out.cols()) {
    throw std::invalid_argument("AddRow: row vector shape mismatch");
  }
  for (int i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (int j = 0; j < out.cols(); ++j) r[j] += rv(0, j);
  }
  return Push(std::move(out), NeedsGrad(a) || NeedsGrad(row),
              [a, row](Graph& g, Node& self) {
                if (g.NeedsGrad(a)) g.GradBuffer(a).Accumulate(self.grad);
                if (g.NeedsGrad(row)) {
                  Matrix& gr = g.GradBuffer(row);
                  for (int i = 0; i < self.grad.rows(); ++i) {
                    for (int j = 0; j < self.grad.cols(); ++j) gr(0, j) += self.grad(i, j);
                  }
                }
              });
}

NodeId Graph::Scale(NodeId a, double factor) {
  Matrix out = Value(a);
  for (auto& x : out.data()) x *= factor;
  return Push(std::move(out), NeedsGrad(a), [a, factor](Graph& g, Node& self) {
    Matrix& ga = g.GradBuffer(a);
    for (size_t i = 0; i < ga.size(); ++i) ga.data()[i] += factor * self.grad.data()[i];
  });
}

NodeId Graph::MulConstant(NodeId a, Matrix mask) {
  CheckSameShape(Value(a), mask, "MulConstant");
  Matrix out = Value(a);
  for (size_t i = 0; i < out.size(); ++i) out.data()[i] *= mask.data()[i];
  return Push(std::move(out), NeedsGrad(a),
              [a, mask = std::move(mask)](Graph& g, Node& self) {
                Matrix& ga = g.GradBuffer(a);
                for (size_t i = 0; i < ga.size(); ++i) {
                  ga.data()[i] += mask.data()[i] * self.grad.data()[i];
                }
              });
}

NodeId Graph::ScalarTimesConstant(NodeId scalar, Matrix pattern) {
  const Matrix& s = Value(scalar);
  if (s.rows() != 1 || s.cols() != 1) {
    throw std::invalid_argument("ScalarTimesConstant: expected a 1x1 node");
  }
  Matrix out = pattern;
  for (auto& x : out.data()) x *= s(0, 0);
  return Push(std::move(out), NeedsGrad(scalar),
              [scalar, pattern = std::move(pattern)](Graph& g, Node& self) {
                double sum = 0.0;
                for (size_t i = 0; i < pattern.size(); ++i) {
                  sum += pattern.data()[i] * self.grad.data()[i];
                }
                g.GradBuffer(scalar)(0, 0) += sum;
              });
}

NodeId Graph::Gelu(NodeId a) {
  Matrix out = Value(a);
  for (auto& x : out.data()) {
    const double u = kGeluScale * (x + kGeluCubic * x * x * x);
    x = 0.5 * x * (1.0 + std::tanh(u));
  }
  return Push(std::move(out), NeedsGrad(a), [a](Graph& g, Node& self) {
    const Matrix& x = g.Value(a);
    Matrix& ga = g.GradBuffer(a);
    for (size_t i = 0; i < ga.size(); ++i) {
      const double v = x.data()[i];
      const double t = std::tanh(kGeluScale * (v + kGeluCubic * v * v * v));
      const double d = 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * kGeluScale *
                                             (1.0 + 3.0 * kGeluCubic * v * v);
      ga.data()[i] += d * self.grad.data()[i];
    }
  });
}

NodeId Graph::SoftmaxRows(NodeId a) {
  Matrix out = Value(a);
  for (int i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    double max = r[0];
    for (double x : r) max = std::max(max, x);
    double sum = 0.0;
    for (auto& x : r) {
      x = std::exp(x - max);
      sum += x;
    }
    for (auto& x : r) x /= sum;
  }
  return Push(std::move(out), NeedsGrad(a), [a](Graph& g, Node& self) {
    Matrix& ga = g.GradBuffer(a);
    for (int i = 0; i < self.value.rows(); ++i) {
      auto y = self.value.row(i);
      auto dy = self.grad.row(i);
      double dot = 0.0;
      for (size_t j = 0; j < y.size(); ++j) dot += y[j] * dy[j];
      auto dx = ga.row(i);
      for (size_t j = 0; j < y.size(); ++j) dx[j] += y[j] * (dy[j] - dot);
    }
  });
}

NodeId Graph::LayerNormRows(NodeId a, NodeId gain, NodeId bias, double eps) {
  const Matrix& x = Value(a);
  const Matrix& gv = Value(gain);
  const Matrix& bv = Value(bias);
  const int n = x.rows(), c = x.cols();
  if (gv.rows() != 1 || gv.cols() != c || bv.rows() != 1 || bv.cols() != c) {
    throw std::invalid_argument("LayerNormRows: gain/bias shape mismatch");
  }
  Matrix normalized(n, c);
  std::vector<double> inv_std(n);
  Matrix out(n, c);
  for (int i = 0; i < n; ++i) {
    auto r = x.row(i);
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= c;
    double var = 0.0;
    for (double v : r) var += (v - mean) * (v - mean);
    var /= c;
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (int j = 0; j < c; ++j) {
      normalized(i, j) = (r[j] - mean) * inv_std[i];
      out(i, j) = normalized(i, j) * gv(0, j) + bv(0, j);
    }
  }
  const bool needs = NeedsGrad(a) || NeedsGrad(gain) || NeedsGrad(bias);
  return Push(std::move(out), needs,
              [a, gain, bias, normalized = std::move(normalized),
               inv_std = std::move(inv_std)](Graph& g, Node& self) {
                const int n = normalized.rows(), c = normalized.cols();
                const Matrix& gv = g.Value(gain);
                if (g.NeedsGrad(gain) || g.NeedsGrad(bias)) {
                  Matrix dg(1, c), db(1, c);
                  for (int i = 0; i < n; ++i) {
                    for (int j = 0; j < c; ++j) {
                      dg(0, j) += self.grad(i, j) * normalized(i, j);
                      db(0, j) += self.grad(i, j);
                    }
                  }
                  if (g.NeedsGrad(gain)) g.GradBuffer(gain).Accumulate(dg);
                  if (g.NeedsGrad(bias)) g.GradBuffer(bias).Accumulate(db);
                }
                if (!g.NeedsGrad(a)) return;
                Matrix& ga = g.GradBuffer(a);
                std::vector<double> dxhat(c);
                for (int i = 0; i < n; ++i) {
                  double mean_d = 0.0, mean_dx = 0.0;
                  for (int j = 0; j < c; ++j) {
                    dxhat[j] = self.grad(i, j) * gv(0, j);
                    mean_d += dxhat[j];
                    mean_dx += dxhat[j] * normalized(i, j);
                  }
                  mean_d /= c;
                  mean_dx /= c;
                  for (int j = 0; j < c; ++j) {
                    ga(i, j) += inv_std[i] *
                                (dxhat[j] - mean_d - normalized(i, j) * mean_dx);
                  }
                }
              });
}

NodeId Graph::ConcatCols(std::span<const NodeId> parts) {
  if (parts.empty()) throw std::invalid_argument("ConcatCols: no inputs");
  const int rows = Value(parts[0]).rows();
  int cols = 0;
  bool needs = false;
  for (NodeId p : parts) {
    if (Value(p).rows() != rows) throw std::invalid_argument("ConcatCols: row mismatch");
    cols += Value(p).cols();
    needs = needs || NeedsGrad(p);
  }
  Matrix out(rows, cols);
  int offset = 0;
  for (NodeId p : parts) {
    const Matrix& v = Value(p);
    for (int i = 0; i < rows; ++i) {
      std::copy(v.row(i).begin(), v.row(i).end(), out.row(i).begin() + offset);
    }
    offset += v.cols();
  }
  std::vector<NodeId> ids(parts.begin(), parts.end());
  return Push(std::move(out), needs, [ids](Graph& g, Node& self) {
    int offset = 0;
    for (NodeId p : ids) {
      const int c = g.Value(p).cols();
      if (g.NeedsGrad(p)) {
        Matrix& gp = g.GradBuffer(p);
        for (int i = 0; i < gp.rows(); ++i) {
          for (int j = 0; j < c; ++j) gp(i, j) += self.grad(i, offset + j);
        }
      }
      offset += c;
    }
  });
}

NodeId Graph::ConcatRows(std::span<const NodeId> parts) {
  if (parts.empty()) throw std::invalid_argument("ConcatRows: no inputs");
  const int cols = Value(parts[0]).cols();
  int rows = 0;
  bool needs = false;
  for (NodeId p : parts) {
    if (Value(p).cols() != cols) throw std::invalid_argument("ConcatRows: col mismatch");
    rows += Value(p).rows();
    needs = needs || NeedsGrad(p);
  }
  Matrix out(rows, cols);
  auto dst = out.data().begin();
  for (NodeId p : parts) dst = std::copy(Value(p).data().begin(), Value(p).data().end(), dst);
  std::vector<NodeId> ids(parts.begin(), parts.end());
  return Push(std::move(out), needs, [ids](Graph& g, Node& self) {
    size_t offset = 0;
    for (NodeId p : ids) {
      const size_t count = g.Value(p).size();
      if (g.NeedsGrad(p)) {
        Matrix& gp = g.GradBuffer(p);
        for (size_t i = 0; i < count; ++i) gp.data()[i] += self.grad.data()[offset + i];
      }
      offset += count;
    }
  });
}

NodeId Graph::SliceCols(NodeId a, int begin, int count) {
  const Matrix& v = Value(a);
  if (begin < 0 || count < 0 || begin + count > v.cols()) {
    throw std::invalid_argument("SliceCols: out of range");
  }
  Matrix out(v.rows(), count);
  for (int i = 0; i < v.rows(); ++i) {
    for (int j = 0; j < count; ++j) out(i, j) = v(i, begin + j);
  }
  return Push(std::move(out), NeedsGrad(a), [a, begin](Graph& g, Node& self) {
    Matrix& ga = g.GradBuffer(a);
    for (int i = 0; i < self.grad.rows(); ++i) {
      for (int j = 0; j < self.grad.cols(); ++j) ga(i, begin + j) += self.grad(i, j);
    }
  });
}

NodeId Graph::SliceRows(NodeId a, int begin, int count) {
  const Matrix& v = Value(a);
  if (begin < 0 || count < 0 || begin + count > v.rows()) {
    throw std::invalid_argument("SliceRows: out of range");
  }
  std::vector<double> data(v.data().begin() + static_cast<size_t>(begin) * v.cols(),
                           v.data().begin() + static_cast<size_t>(begin + count) * v.cols());
  return Push(Matrix(count, v.cols(), std::move(data)), NeedsGrad(a),
              [a, begin](Graph& g, Node& self) {
                Matrix& ga = g.GradBuffer(a);
                const size_t offset = static_cast<size_t>(begin) * ga.cols();
                for (size_t i = 0; i < self.grad.size(); ++i) {
                  ga.data()[offset + i] += self.grad.data()[i];
                }
              });
}

NodeId Graph::GatherRows(NodeId table, std::vector<int> rows) {
  const Matrix& t = Value(table);
  Matrix out(static_cast<int>(rows.size()), t.cols());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= t.rows()) {
      throw std::out_of_range(fmt::format("GatherRows: row {} of {}", rows[i], t.rows()));
    }
    auto src = t.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(static_cast<int>(i)).begin());
  }
  return Push(std::move(out), NeedsGrad(table),
              [table, rows = std::move(rows)](Graph& g, Node& self) {
                Matrix& gt = g.GradBuffer(table);
                for (size_t i = 0; i < rows.size(); ++i) {
                  auto src = self.grad.row(static_cast<int>(i));
                  auto dst = gt.row(rows[i]);
                  for (size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
                }
              });
}

void Graph::Backward(NodeId out, const Matrix& seed) {
  CheckSameShape(Value(out), seed, "Backward");
  if (!NeedsGrad(out)) return;
  GradBuffer(out).Accumulate(seed);
  for (NodeId id = out; id >= 0; --id) {
    Node& n = node(id);
    if (!n.needs_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this, n);
  }
  for (auto& n : nodes_) {
    if (n.parameter == nullptr || n.grad.empty()) continue;
    if (n.parameter->grad.empty()) n.parameter->ZeroGrad();
    n.parameter->grad.Accumulate(n.grad);
  }
}

}  // namespace promptex::ad
