#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "taseq/tensor.hpp"

namespace taseq {

// Handle into a Graph. Invalid refs mark optional inputs (e.g. the topic
// vector of a plain S2SA decoder step).
struct NodeRef {
  std::uint32_t id = UINT32_MAX;
  bool valid() const { return id != UINT32_MAX; }
};

// Reverse-mode tape. Nodes are appended in evaluation order, so walking the
// tape backwards is a topological traversal. Values are computed eagerly;
// backward() fills gradients and adds leaf gradients into their Parameters.
//
// Every op checks shapes strictly (no implicit broadcasting; scalar_mul is
// the one explicit broadcast) and rejects non-finite results.
class Graph {
 public:
  NodeRef input(Tensor v) {
    check_finite_(v, "input");
    return push_(Op::kLeaf, {}, std::move(v));
  }

  NodeRef param(Parameter& p) {
    check_finite_(p.value, "param");
    NodeRef n = push_(Op::kLeaf, {}, p.value);
    params_.emplace_back(n.id, &p);
    return n;
  }

  NodeRef add(NodeRef a, NodeRef b) { return binary_(Op::kAdd, a, b); }
  NodeRef sub(NodeRef a, NodeRef b) { return binary_(Op::kSub, a, b); }
  NodeRef mul(NodeRef a, NodeRef b) { return binary_(Op::kMul, a, b); }

  NodeRef scale(NodeRef a, double c) {
    Tensor out = node_(a).value;
    for (double& v : out.data) v *= c;
    check_finite_(out, "scale");
    NodeRef n = push_(Op::kScale, {a.id}, std::move(out));
    node_(n).caux = c;
    return n;
  }

  // Scalar ({1}) times tensor, the explicit broadcast op.
  NodeRef scalar_mul(NodeRef s, NodeRef v) {
    const Tensor& sv = node_(s).value;
    if (sv.numel() != 1)
      throw DimensionError("scalar_mul: first operand must be a scalar");
    Tensor out = node_(v).value;
    for (double& x : out.data) x *= sv.data[0];
    check_finite_(out, "scalar_mul");
    return push_(Op::kScalarMul, {s.id, v.id}, std::move(out));
  }

  // {m,k} x {k,n} -> {m,n}, or {m,k} x {k} -> {m}.
  NodeRef matmul(NodeRef a, NodeRef b) {
    const Tensor& A = node_(a).value;
    const Tensor& B = node_(b).value;
    if (!A.is_matrix()) throw DimensionError("matmul: lhs must be a matrix");
    if (B.is_vector()) {
      if (A.cols() != B.numel())
        throw DimensionError("matmul: inner dimensions differ");
      Tensor out({A.rows()});
      for (std::size_t i = 0; i < A.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < A.cols(); ++k) acc += A(i, k) * B(k);
        out(i) = acc;
      }
      check_finite_(out, "matmul");
      return push_(Op::kMatVec, {a.id, b.id}, std::move(out));
    }
    if (!B.is_matrix()) throw DimensionError("matmul: rhs rank unsupported");
    if (A.cols() != B.rows())
      throw DimensionError("matmul: inner dimensions differ");
    Tensor out({A.rows(), B.cols()});
    for (std::size_t i = 0; i < A.rows(); ++i)
      for (std::size_t k = 0; k < A.cols(); ++k) {
        const double aik = A(i, k);
        for (std::size_t j = 0; j < B.cols(); ++j) out(i, j) += aik * B(k, j);
      }
    check_finite_(out, "matmul");
    return push_(Op::kMatMul, {a.id, b.id}, std::move(out));
  }

  NodeRef tanh(NodeRef a) {
    Tensor out = node_(a).value;
    for (double& v : out.data) v = std::tanh(v);
    return push_(Op::kTanh, {a.id}, std::move(out));
  }

  NodeRef sigmoid(NodeRef a) {
    Tensor out = node_(a).value;
    for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    return push_(Op::kSigmoid, {a.id}, std::move(out));
  }

  NodeRef concat(const std::vector<NodeRef>& parts) {
    if (parts.empty()) throw DimensionError("concat: no inputs");
    std::size_t total = 0;
    std::vector<std::uint32_t> ids;
    ids.reserve(parts.size());
    for (NodeRef p : parts) {
      if (!node_(p).value.is_vector())
        throw DimensionError("concat: inputs must be vectors");
      total += node_(p).value.numel();
      ids.push_back(p.id);
    }
    Tensor out({total});
    std::size_t off = 0;
    for (NodeRef p : parts) {
      const Tensor& v = node_(p).value;
      std::copy(v.data.begin(), v.data.end(), out.data.begin() + off);
      off += v.numel();
    }
    return push_(Op::kConcat, std::move(ids), std::move(out));
  }

  NodeRef softmax(NodeRef a) {
    const Tensor& v = node_(a).value;
    if (!v.is_vector() || v.numel() == 0)
      throw DimensionError("softmax: non-empty vector required");
    Tensor out = v;
    const double m = *std::max_element(out.data.begin(), out.data.end());
    double z = 0.0;
    for (double& x : out.data) {
      x = std::exp(x - m);
      z += x;
    }
    for (double& x : out.data) x /= z;
    check_finite_(out, "softmax");
    return push_(Op::kSoftmax, {a.id}, std::move(out));
  }

  NodeRef logsumexp(NodeRef a) {
    const Tensor& v = node_(a).value;
    if (!v.is_vector() || v.numel() == 0)
      throw DimensionError("logsumexp: non-empty vector required");
    const double m = *std::max_element(v.data.begin(), v.data.end());
    double z = 0.0;
    for (double x : v.data) z += std::exp(x - m);
    Tensor out = Tensor::scalar(m + std::log(z));
    check_finite_(out, "logsumexp");
    return push_(Op::kLogSumExp, {a.id}, std::move(out));
  }

  NodeRef pick(NodeRef a, std::size_t index) {
    const Tensor& v = node_(a).value;
    if (!v.is_vector()) throw DimensionError("pick: vector required");
    if (index >= v.numel()) throw DimensionError("pick: index out of range");
    NodeRef n = push_(Op::kPick, {a.id}, Tensor::scalar(v(index)));
    node_(n).aux = index;
    return n;
  }

  // Row of a matrix; the embedding lookup.
  NodeRef row(NodeRef m, std::size_t r) {
    const Tensor& M = node_(m).value;
    if (!M.is_matrix()) throw DimensionError("row: matrix required");
    if (r >= M.rows()) throw DimensionError("row: index out of range");
    Tensor out({M.cols()});
    for (std::size_t j = 0; j < M.cols(); ++j) out(j) = M(r, j);
    NodeRef n = push_(Op::kRow, {m.id}, std::move(out));
    node_(n).aux = r;
    return n;
  }

  NodeRef sum(NodeRef a) {
    const Tensor& v = node_(a).value;
    double acc = 0.0;
    for (double x : v.data) acc += x;
    Tensor out = Tensor::scalar(acc);
    check_finite_(out, "sum");
    return push_(Op::kSum, {a.id}, std::move(out));
  }

  const Tensor& value(NodeRef n) const { return node_(n).value; }
  const Tensor& gradient(NodeRef n) const { return node_(n).grad; }
  std::size_t size() const { return nodes_.size(); }

  // Backpropagate from a scalar loss; accumulates into Parameter::grad.
  void backward(NodeRef loss) {
    if (node_(loss).value.numel() != 1)
      throw ContractError("backward: loss must be a scalar");
    for (Node& n : nodes_) {
      n.grad = Tensor::zeros(n.value.shape);
    }
    node_(loss).grad.data[0] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      backward_one_(nodes_[i]);
    }
    for (auto& [id, p] : params_) {
      const Tensor& g = nodes_[id].grad;
      for (std::size_t k = 0; k < g.numel(); ++k) p->grad.data[k] += g.data[k];
    }
  }

 private:
  enum class Op : std::uint8_t {
    kLeaf,
    kAdd,
    kSub,
    kMul,
    kScale,
    kScalarMul,
    kMatVec,
    kMatMul,
    kTanh,
    kSigmoid,
    kConcat,
    kSoftmax,
    kLogSumExp,
    kPick,
    kRow,
    kSum,
  };

  struct Node {
    Op op;
    std::vector<std::uint32_t> parents;
    std::size_t aux = 0;
    double caux = 0.0;
    Tensor value;
    Tensor grad;
  };

  NodeRef binary_(Op op, NodeRef a, NodeRef b) {
    const Tensor& va = node_(a).value;
    const Tensor& vb = node_(b).value;
    if (!va.same_shape(vb))
      throw DimensionError("elementwise op: shape mismatch");
    Tensor out = va;
    switch (op) {
      case Op::kAdd:
        for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += vb.data[i];
        break;
      case Op::kSub:
        for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] -= vb.data[i];
        break;
      case Op::kMul:
        for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] *= vb.data[i];
        break;
      default:
        throw ContractError("binary_: bad op");
    }
    check_finite_(out, "elementwise op");
    return push_(op, {a.id, b.id}, std::move(out));
  }

  NodeRef push_(Op op, std::vector<std::uint32_t> parents, Tensor value) {
    Node n;
    n.op = op;
    n.parents = std::move(parents);
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return NodeRef{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  Node& node_(NodeRef r) { return nodes_.at(r.id); }
  const Node& node_(NodeRef r) const { return nodes_.at(r.id); }

  static void check_finite_(const Tensor& t, const char* where) {
    if (!t.all_finite())
      throw NumericError(std::string(where) + ": non-finite value");
  }

  void backward_one_(Node& n) {
    const Tensor& d = n.grad;
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kAdd: {
        accumulate_(n.parents[0], d);
        accumulate_(n.parents[1], d);
        break;
      }
      case Op::kSub: {
        accumulate_(n.parents[0], d);
        Tensor& gb = nodes_[n.parents[1]].grad;
        for (std::size_t i = 0; i < d.numel(); ++i) gb.data[i] -= d.data[i];
        break;
      }
      case Op::kMul: {
        const Tensor& va = nodes_[n.parents[0]].value;
        const Tensor& vb = nodes_[n.parents[1]].value;
        Tensor& ga = nodes_[n.parents[0]].grad;
        Tensor& gb = nodes_[n.parents[1]].grad;
        for (std::size_t i = 0; i < d.numel(); ++i) {
          ga.data[i] += d.data[i] * vb.data[i];
          gb.data[i] += d.data[i] * va.data[i];
        }
        break;
      }
      case Op::kScale: {
        Tensor& ga = nodes_[n.parents[0]].grad;
        for (std::size_t i = 0; i < d.numel(); ++i)
          ga.data[i] += d.data[i] * n.caux;
        break;
      }
      case Op::kScalarMul: {
        const double s = nodes_[n.parents[0]].value.data[0];
        const Tensor& v = nodes_[n.parents[1]].value;
        Tensor& gs = nodes_[n.parents[0]].grad;
        Tensor& gv = nodes_[n.parents[1]].grad;
        for (std::size_t i = 0; i < d.numel(); ++i) {
          gs.data[0] += d.data[i] * v.data[i];
          gv.data[i] += d.data[i] * s;
        }
        break;
      }
      case Op::kMatVec: {
        const Tensor& A = nodes_[n.parents[0]].value;
        const Tensor& x = nodes_[n.parents[1]].value;
        Tensor& gA = nodes_[n.parents[0]].grad;
        Tensor& gx = nodes_[n.parents[1]].grad;
        for (std::size_t i = 0; i < A.rows(); ++i) {
          const double di = d(i);
          for (std::size_t k = 0; k < A.cols(); ++k) {
            gA(i, k) += di * x(k);
            gx(k) += di * A(i, k);
          }
        }
        break;
      }
      case Op::kMatMul: {
        const Tensor& A = nodes_[n.parents[0]].value;
        const Tensor& B = nodes_[n.parents[1]].value;
        Tensor& gA = nodes_[n.parents[0]].grad;
        Tensor& gB = nodes_[n.parents[1]].grad;
        // dA = dC B^T ; dB = A^T dC
        for (std::size_t i = 0; i < A.rows(); ++i)
          for (std::size_t j = 0; j < B.cols(); ++j) {
            const double dij = d(i, j);
            for (std::size_t k = 0; k < A.cols(); ++k) {
              gA(i, k) += dij * B(k, j);
              gB(k, j) += dij * A(i, k);
            }
          }
        break;
      }
      case Op::kTanh: {
        Tensor& ga = nodes_[n.parents[0]].grad;
        for (std::size_t i = 0; i < d.numel(); ++i) {
          const double y = n.value.data[i];
          ga.data[i] += d.data[i] * (1.0 - y * y);
        }
        break;
      }
      case Op::kSigmoid: {
        Tensor& ga = nodes_[n.parents[0]].grad;
        for (std::size_t i = 0; i < d.numel(); ++i) {
          const double y = n.value.data[i];
          ga.data[i] += d.data[i] * y * (1.0 - y);
        }
        break;
      }
      case Op::kConcat: {
        std::size_t off = 0;
        for (std::uint32_t pid : n.parents) {
          Tensor& gp = nodes_[pid].grad;
          for (std::size_t i = 0; i < gp.numel(); ++i)
            gp.data[i] += d.data[off + i];
          off += gp.numel();
        }
        break;
      }
      case Op::kSoftmax: {
        const Tensor& p = n.value;
        Tensor& ga = nodes_[n.parents[0]].grad;
        double dot = 0.0;
        for (std::size_t i = 0; i < p.numel(); ++i)
          dot += d.data[i] * p.data[i];
        for (std::size_t i = 0; i < p.numel(); ++i)
          ga.data[i] += p.data[i] * (d.data[i] - dot);
        break;
      }
      case Op::kLogSumExp: {
        const Tensor& v = nodes_[n.parents[0]].value;
        Tensor& ga = nodes_[n.parents[0]].grad;
        const double lse = n.value.data[0];
        for (std::size_t i = 0; i < v.numel(); ++i)
          ga.data[i] += d.data[0] * std::exp(v.data[i] - lse);
        break;
      }
      case Op::kPick: {
        nodes_[n.parents[0]].grad.data[n.aux] += d.data[0];
        break;
      }
      case Op::kRow: {
        const Tensor& M = nodes_[n.parents[0]].value;
        Tensor& gM = nodes_[n.parents[0]].grad;
        for (std::size_t j = 0; j < M.cols(); ++j)
          gM.data[n.aux * M.cols() + j] += d.data[j];
        break;
      }
      case Op::kSum: {
        Tensor& ga = nodes_[n.parents[0]].grad;
        for (std::size_t i = 0; i < ga.numel(); ++i) ga.data[i] += d.data[0];
        break;
      }
    }
  }

  void accumulate_(std::uint32_t pid, const Tensor& d) {
    Tensor& g = nodes_[pid].grad;
    for (std::size_t i = 0; i < d.numel(); ++i) g.data[i] += d.data[i];
  }

  std::vector<Node> nodes_;
  std::vector<std::pair<std::uint32_t, Parameter*>> params_;
};

}  // namespace taseq
