#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mdcs/tensor.hpp"

namespace mdcs {

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;
};

/// Reverse-mode computation tape.
///
/// Nodes are appended in evaluation order, so the node list is already a
/// topological order. Leaves either reference an external tensor (model
/// parameters, whose grad buffer receives dL/dleaf after backward) or own a
/// constant value. Intermediate nodes own their value and a backward rule that
/// adds the node's adjoint, pulled back through the op, into its inputs.
class Tape {
 public:
  /// Pulls the adjoint of `self` back into the adjoints of its inputs.
  using BackwardFn = std::function<void(Tape& tape, std::span<const double> out_adjoint)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor& tensor) {
    Node n;
    n.external = &tensor;
    n.requires_grad = tensor.requires_grad();
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  Var constant(Tensor value) {
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  /// Records an op output. The node requires grad iff any input does.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
    Node n;
    n.value = std::move(value);
    for (const Var& in : inputs) {
      check_owned(in);
      n.requires_grad = n.requires_grad || nodes_[in.id].requires_grad;
    }
    if (n.requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  const Tensor& value(Var v) const {
    check_owned(v);
    const Node& n = nodes_[v.id];
    return n.external ? *n.external : n.value;
  }

  bool requires_grad(Var v) const {
    check_owned(v);
    return nodes_[v.id].requires_grad;
  }

  /// Adjoint buffer of an input during backward; empty when the input does
  /// not require grad, so backward rules can skip that branch entirely.
  std::span<double> adjoint_sink(Var v) {
    Node& n = nodes_[v.id];
    if (!n.requires_grad) return {};
    if (n.adjoint.empty()) n.adjoint.assign(value(v).size(), 0.0);
    return n.adjoint;
  }

  /// Adjoint of a node after the most recent backward call (empty if the node
  /// was not reached or does not require grad).
  std::span<const double> adjoint(Var v) const {
    check_owned(v);
    return nodes_[v.id].adjoint;
  }

  /// Propagates dL/d(node) from a scalar loss node to every node that
  /// requires grad. Leaf adjoints are added into the referenced tensors'
  /// grad buffers, so repeated calls accumulate.
  void backward(Var loss) {
    check_owned(loss);
    const Tensor& lv = value(loss);
    if (lv.size() != 1) {
      throw std::invalid_argument("backward: loss must be scalar, got shape " + shape_string(lv.shape()));
    }
    for (Node& n : nodes_) {
      n.adjoint.clear();
      if (n.external && n.requires_grad) n.external->ensure_grad();
    }
    if (!nodes_[loss.id].requires_grad) return;
    nodes_[loss.id].adjoint.assign(1, 1.0);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.adjoint.empty()) continue;
      if (n.external) {
        auto g = n.external->grad();
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += n.adjoint[k];
      } else if (n.backward) {
        // Rules only touch lower-numbered nodes, whose buffers are distinct.
        n.backward(*this, std::span<const double>(n.adjoint));
      }
    }
  }

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor* external = nullptr;
    bool requires_grad = false;
    std::vector<double> adjoint;
    BackwardFn backward;
  };

  void check_owned(Var v) const {
    if (v.tape != this || v.id >= nodes_.size()) throw std::invalid_argument("variable does not belong to this tape");
  }

  std::vector<Node> nodes_;
};

/// Central-difference gradient of a scalar function at x, one coordinate at
/// a time: (f(x + h e_i) - f(x - h e_i)) / 2h.
inline Tensor finite_difference_grad(const std::function<double(const Tensor&)>& f, const Tensor& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_difference_grad: step must be positive");
  Tensor probe = x;
  Tensor grad(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = f(probe);
    probe[i] = orig - h;
    const double fm = f(probe);
    probe[i] = orig;
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

/// Central difference with respect to a single value held elsewhere (e.g. one
/// model parameter); `f` must read the slot on each call. The slot is restored.
inline double central_difference(const std::function<double()>& f, double& slot, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("central_difference: step must be positive");
  const double orig = slot;
  slot = orig + h;
  const double fp = f();
  slot = orig - h;
  const double fm = f();
  slot = orig;
  return (fp - fm) / (2.0 * h);
}

/// |a - b| / max(|a|, |b|, floor). The floor keeps near-zero gradients from
/// turning round-off into huge relative errors.
inline double relative_error(double analytic, double numeric, double floor = 1e-3) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

inline double max_relative_error(std::span<const double> analytic, std::span<const double> numeric,
                                 double floor = 1e-3) {
  if (analytic.size() != numeric.size()) throw ShapeError("max_relative_error: length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) worst = std::max(worst, relative_error(analytic[i], numeric[i], floor));
  return worst;
}

}  // namespace mdcs
