#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "nsn/autodiff/tensor.hpp"

namespace nsn::ad {

// Handle to a value recorded on a Tape.
struct Var {
  static constexpr std::size_t kInvalid = std::numeric_limits<std::size_t>::max();
  std::size_t id = kInvalid;
  bool valid() const { return id != kInvalid; }
};

// Define-by-run reverse-mode tape. Every op appends a node holding its value
// and a closure that pushes the node's gradient into its inputs. A tape is
// single-use: backward() consumes it.
template <typename T>
class Tape {
 public:
  using Backward = std::function<void(Tape&)>;

  // With record == false no closures are kept (inference only).
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const noexcept { return record_; }

  Var input(Tensor<T> value, bool requires_grad = false);
  Var parameter(Parameter<T>& p);
  // Appends an op result. `fn` is dropped when not recording or when no
  // input needs a gradient.
  Var push(const char* op, Tensor<T> value, bool requires_grad, Backward fn);

  const Tensor<T>& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  // Gradient of the loss w.r.t. v; empty tensor if nothing flowed into v.
  const Tensor<T>& grad(Var v) const { return nodes_.at(v.id).grad; }
  // Gradient buffer of v, allocated with zeros on first use.
  Tensor<T>& grad_buffer(Var v);

  // Seeds d loss / d loss = 1 and runs all closures in reverse order, then
  // accumulates into Parameter::grad. Throws StateError when the tape did
  // not record, was already consumed, or `loss` is not a scalar.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    Backward backward;
    Parameter<T>* param = nullptr;
  };

  bool record_;
  bool consumed_ = false;
  std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace nsn::ad
