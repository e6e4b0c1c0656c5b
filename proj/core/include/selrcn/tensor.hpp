#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace selrcn {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Storage precision for values and gradients. Arithmetic is carried out in
/// double; in f32 mode every op output, gradient contribution and optimizer
/// update is rounded to the nearest float, so values are always exactly
/// representable in 32 bits.
enum class Precision { f32, f64 };

inline double round_to(Precision p, double v) {
  return p == Precision::f32 ? static_cast<double>(static_cast<float>(v)) : v;
}

void round_in_place(Precision p, std::span<double> values);

/// Dense row-major n-dimensional array with an optional gradient buffer.
///
/// Tensor is a reference-counted handle: copies share storage, so a parameter
/// held by a model and captured by a recorded op are the same object. Use
/// clone() for an independent copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);
  Tensor(Shape shape, std::initializer_list<double> values);

  static Tensor scalar(double value);

  bool defined() const { return impl_ != nullptr; }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();

  /// Flat element access.
  double operator[](std::size_t i) const { return data()[i]; }
  /// Multi-index element access.
  double at(std::initializer_list<std::size_t> index) const;
  /// Value of a single-element tensor.
  double item() const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on);

  bool has_grad() const;
  /// Gradient buffer; empty span if none has been allocated.
  std::span<const double> grad() const;
  /// Gradient buffer, allocated as zeros on first use.
  std::span<double> mutable_grad() const;
  void zero_grad() const;
  void clear_grad() const;

  /// Deep copy of the values. The copy has no gradient and does not require one.
  Tensor clone() const;

  bool is_same(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  struct Impl {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
  };

  Impl& impl() const;

  std::shared_ptr<Impl> impl_;
};

}  // namespace selrcn

namespace selrcn {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

using NamedTensors = std::vector<NamedTensor>;

}  // namespace selrcn
