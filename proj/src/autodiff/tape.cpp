#include "nsn/autodiff/tape.hpp"

#include "nsn/util/errors.hpp"

namespace nsn::ad {

template <typename T>
Var Tape<T>::input(Tensor<T> value, bool requires_grad) {
  if (!value.all_finite()) throw FaultError("tape input contains non-finite values");
  nodes_.push_back(Node{std::move(value), {}, requires_grad && record_, {}, nullptr});
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::parameter(Parameter<T>& p) {
  nodes_.push_back(Node{p.value, {}, record_, {}, &p});
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::push(const char* op, Tensor<T> value, bool requires_grad, Backward fn) {
  if (!value.all_finite()) throw FaultError(std::string("non-finite values in the output of ") + op);
  Node node{std::move(value), {}, requires_grad && record_, {}, nullptr};
  if (node.requires_grad) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var{nodes_.size() - 1};
}

template <typename T>
Tensor<T>& Tape<T>::grad_buffer(Var v) {
  Node& node = nodes_.at(v.id);
  if (node.grad.empty()) node.grad = Tensor<T>(node.value.shape());
  return node.grad;
}

template <typename T>
void Tape<T>::backward(Var loss) {
  if (!record_) throw StateError("backward: tape was created without recording");
  if (consumed_) throw StateError("backward: graph already consumed");
  if (!loss.valid() || loss.id >= nodes_.size()) throw StateError("backward: loss is not on this tape");
  if (nodes_[loss.id].value.size() != 1) throw StateError("backward: loss must be a scalar");
  if (!nodes_[loss.id].requires_grad) throw StateError("backward: loss does not depend on any parameter");
  consumed_ = true;

  grad_buffer(loss)[0] = T(1);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.grad.empty()) continue;
    if (node.backward) node.backward(*this);
    if (node.param != nullptr) {
      auto& dst = node.param->grad;
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += node.grad[k];
    }
  }
  for (const Node& node : nodes_) {
    if (node.param != nullptr && !node.param->grad.all_finite()) {
      throw FaultError("non-finite gradient for parameter " + node.param->name);
    }
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace nsn::ad
