#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "clasp/error.hpp"
#include "clasp/numerics/tensor.hpp"

namespace clasp::numerics {

enum class OpTag {
  constant,
  parameter,
  add,
  sub,
  mul_scalar,
  scale,
  exp,
  matmul,
  conv1d,
  relu,
  embedding_lookup,
  mean_over_axis,
  l2_normalize_rows,
  transpose,
  log_softmax_rows,
  gather_diag,
  reshape,
};

const char* op_name(OpTag op);

template <typename T>
using ParamMap = std::map<std::string, BasicTensor<T>>;

template <typename T>
class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  const BasicTensor<T>& value() const { return tape_->value(id_); }
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Tape<T>* tape() const { return tape_; }

 private:
  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode tape. Nodes are appended in evaluation order, which is a
// topological order, so backward is a single reverse sweep.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  struct Node {
    BasicTensor<T> value;
    BasicTensor<T> grad;
    OpTag op = OpTag::constant;
    std::vector<std::size_t> parents;
    BackwardFn backward;
    bool requires_grad = false;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(BasicTensor<T> value) {
    return push(OpTag::constant, std::move(value), {}, nullptr, false);
  }

  Var<T> parameter(const std::string& name, BasicTensor<T> value) {
    if (param_ids_.count(name) != 0) throw ContractError("parameter registered twice: " + name);
    auto var = push(OpTag::parameter, std::move(value), {}, nullptr, true);
    param_ids_.emplace(name, var.id());
    return var;
  }

  std::map<std::string, Var<T>> parameters(const ParamMap<T>& params) {
    std::map<std::string, Var<T>> out;
    for (const auto& [name, tensor] : params) out.emplace(name, parameter(name, tensor));
    return out;
  }

  // Appends an operator node. `backward` runs only if some parent needs a gradient.
  Var<T> record(OpTag op, BasicTensor<T> value, std::vector<std::size_t> parents,
                BackwardFn backward) {
    if (!value.all_finite()) {
      throw NumericalError(std::string("non-finite value produced by ") + op_name(op));
    }
    bool needs = false;
    for (const auto p : parents) needs = needs || nodes_.at(p).requires_grad;
    return push(op, std::move(value), std::move(parents), needs ? std::move(backward) : nullptr,
                needs);
  }

  const BasicTensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }
  const Node& node(std::size_t id) const { return nodes_.at(id); }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient of the node being back-propagated (always present when called from a BackwardFn).
  const BasicTensor<T>& grad(std::size_t id) const { return nodes_.at(id).grad; }

  void accumulate(std::size_t id, BasicTensor<T>&& g) {
    Node& n = nodes_.at(id);
    if (!n.requires_grad) return;
    if (g.shape() != n.value.shape()) {
      throw ShapeError(std::string("gradient shape ") + shape_str(g.shape()) +
                       " does not match value shape " + shape_str(n.value.shape()) + " at " +
                       op_name(n.op));
    }
    if (n.grad.empty()) {
      n.grad = std::move(g);
      return;
    }
    auto dst = n.grad.data();
    auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  }

  // Back-propagates from a scalar loss and returns the gradient of every
  // registered parameter; parameters the loss does not reach get zeros.
  ParamMap<T> backward(const Var<T>& loss) {
    if (loss.tape() != this) throw ContractError("loss belongs to a different tape");
    if (loss.value().size() != 1) {
      throw ContractError("backward requires a scalar loss, got shape " +
                          shape_str(loss.shape()));
    }
    for (auto& n : nodes_) n.grad = BasicTensor<T>();
    if (nodes_[loss.id()].requires_grad) {
      nodes_[loss.id()].grad = BasicTensor<T>::filled(loss.shape(), T{1});
    }
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.backward || n.grad.empty()) continue;
      n.backward(*this, i);
    }
    ParamMap<T> grads;
    for (const auto& [name, id] : param_ids_) {
      const Node& n = nodes_[id];
      grads.emplace(name, n.grad.empty() ? BasicTensor<T>::zeros(n.value.shape()) : n.grad);
    }
    return grads;
  }

 private:
  Var<T> push(OpTag op, BasicTensor<T> value, std::vector<std::size_t> parents, BackwardFn fn,
              bool requires_grad) {
    Node n;
    n.value = std::move(value);
    n.op = op;
    n.parents = std::move(parents);
    n.backward = std::move(fn);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Var<T>(this, nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
  std::map<std::string, std::size_t> param_ids_;
};

// Number of all-zero rows seen by l2_normalize_rows since process start.
std::size_t zero_norm_row_count();
void note_zero_norm_row();

}  // namespace clasp::numerics
