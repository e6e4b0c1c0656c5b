#include "selrcn/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "selrcn/errors.hpp"

namespace selrcn {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void round_in_place(Precision p, std::span<double> values) {
  if (p == Precision::f64) return;
  for (double& v : values) v = static_cast<double>(static_cast<float>(v));
}

namespace {

void check_shape(const Shape& shape) {
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_string(shape));
  }
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : impl_(std::make_shared<Impl>()) {
  check_shape(shape);
  impl_->data.assign(shape_numel(shape), fill);
  impl_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : impl_(std::make_shared<Impl>()) {
  check_shape(shape);
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("shape " + shape_string(shape) + " needs " + std::to_string(shape_numel(shape)) +
                         " values, got " + std::to_string(values.size()));
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(values);
}

Tensor::Tensor(Shape shape, std::initializer_list<double> values)
    : Tensor(std::move(shape), std::vector<double>(values)) {}

Tensor Tensor::scalar(double value) { return Tensor(Shape{1}, value); }

Tensor::Impl& Tensor::impl() const {
  if (!impl_) throw ContractError("use of an undefined tensor");
  return *impl_;
}

const Shape& Tensor::shape() const { return impl().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) {
    throw IndexError("axis " + std::to_string(axis) + " out of range for shape " + shape_string(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return impl().data.size(); }

std::span<const double> Tensor::data() const { return impl().data; }

std::span<double> Tensor::mutable_data() { return impl().data; }

double Tensor::at(std::initializer_list<std::size_t> index) const {
  const Shape& s = shape();
  if (index.size() != s.size()) {
    throw IndexError("index rank " + std::to_string(index.size()) + " does not match shape " + shape_string(s));
  }
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (std::size_t i : index) {
    if (i >= s[axis]) throw IndexError("index out of range for shape " + shape_string(s));
    flat = flat * s[axis] + i;
    ++axis;
  }
  return impl().data[flat];
}

double Tensor::item() const {
  if (numel() != 1) throw ContractError("item() on tensor of shape " + shape_string(shape()));
  return impl().data[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  impl().requires_grad = on;
  return *this;
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::span<const double> Tensor::grad() const { return impl().grad; }

std::span<double> Tensor::mutable_grad() const {
  Impl& i = impl();
  if (i.grad.empty()) i.grad.assign(i.data.size(), 0.0);
  return i.grad;
}

void Tensor::zero_grad() const {
  Impl& i = impl();
  if (!i.grad.empty()) std::fill(i.grad.begin(), i.grad.end(), 0.0);
}

void Tensor::clear_grad() const { impl().grad.clear(); }

Tensor Tensor::clone() const {
  const Impl& i = impl();
  return Tensor(i.shape, i.data);
}

}  // namespace selrcn
