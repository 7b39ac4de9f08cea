#include "nsn/autodiff/tensor.hpp"

#include "nsn/util/errors.hpp"

namespace nsn::ad {

std::string Shape::str() const {
  return "(" + std::to_string(n) + ", " + std::to_string(c) + ", " + std::to_string(h) + ", " + std::to_string(w) +
         ")";
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(shape), data_(data.begin(), data.end()) {
  if (data_.size() != shape_.size()) {
    throw DimensionError("Tensor: " + std::to_string(data_.size()) + " values for shape " + shape_.str());
  }
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace nsn::ad
