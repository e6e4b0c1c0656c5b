#include "selrcn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eigen_maps.hpp"
#include "selrcn/errors.hpp"

namespace selrcn::ops {

using detail::cmap;
using detail::map;

namespace {

void require_rank(const char* op, const Tensor& x, std::size_t rank) {
  if (x.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(x.shape()));
  }
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

// Splits a shape around the axis range [begin, end) into outer × mid × inner.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t mid = 1;
  std::size_t inner = 1;
};

AxisSplit split_axes(const Shape& shape, std::size_t begin, std::size_t end) {
  AxisSplit s;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i < begin) {
      s.outer *= shape[i];
    } else if (i < end) {
      s.mid *= shape[i];
    } else {
      s.inner *= shape[i];
    }
  }
  return s;
}

Shape remove_axes(const Shape& shape, std::size_t begin, std::size_t end) {
  Shape out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i < begin || i >= end) out.push_back(shape[i]);
  }
  if (out.empty()) out.push_back(1);
  return out;
}

void check_axis_range(const char* op, const Tensor& x, std::size_t begin, std::size_t end) {
  if (begin >= end || end > x.rank()) {
    throw IndexError(std::string(op) + ": axis range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") invalid for shape " + shape_string(x.shape()));
  }
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const auto m = static_cast<Eigen::Index>(a.dim(0));
  const auto k = static_cast<Eigen::Index>(a.dim(1));
  const auto n = static_cast<Eigen::Index>(b.dim(1));
  if (a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: inner dimensions disagree, " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  Tensor out(Shape{a.dim(0), b.dim(1)});
  map(out.mutable_data().data(), m, n).noalias() = cmap(a.data().data(), m, k) * cmap(b.data().data(), k, n);

  return tape.record(out, {a, b}, [a, b, m, k, n](std::span<const double> g) mutable {
    auto gm = cmap(g.data(), m, n);
    if (a.requires_grad()) {
      map(a.mutable_grad().data(), m, k).noalias() += gm * cmap(b.data().data(), k, n).transpose();
    }
    if (b.requires_grad()) {
      map(b.mutable_grad().data(), k, n).noalias() += cmap(a.data().data(), m, k).transpose() * gm;
    }
  });
}

Tensor linear(Tape& tape, const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank("linear", x, 2);
  require_rank("linear", weight, 2);
  if (x.dim(1) != weight.dim(1)) {
    throw DimensionError("linear: input " + shape_string(x.shape()) + " incompatible with weight " +
                         shape_string(weight.shape()));
  }
  const bool has_bias = bias.defined();
  if (has_bias && (bias.rank() != 1 || bias.dim(0) != weight.dim(0))) {
    throw DimensionError("linear: bias " + shape_string(bias.shape()) + " incompatible with weight " +
                         shape_string(weight.shape()));
  }
  const auto n = static_cast<Eigen::Index>(x.dim(0));
  const auto d = static_cast<Eigen::Index>(x.dim(1));
  const auto o = static_cast<Eigen::Index>(weight.dim(0));
  Tensor out(Shape{x.dim(0), weight.dim(0)});
  auto y = map(out.mutable_data().data(), n, o);
  y.noalias() = cmap(x.data().data(), n, d) * cmap(weight.data().data(), o, d).transpose();
  if (has_bias) {
    y.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.data().data(), o);
  }

  std::vector<Tensor> inputs{x, weight};
  if (has_bias) inputs.push_back(bias);
  return tape.record(out, std::move(inputs), [x, weight, bias, has_bias, n, d, o](std::span<const double> g) mutable {
    auto gm = cmap(g.data(), n, o);
    if (x.requires_grad()) {
      map(x.mutable_grad().data(), n, d).noalias() += gm * cmap(weight.data().data(), o, d);
    }
    if (weight.requires_grad()) {
      map(weight.mutable_grad().data(), o, d).noalias() += gm.transpose() * cmap(x.data().data(), n, d);
    }
    if (has_bias && bias.requires_grad()) {
      Eigen::Map<Eigen::RowVectorXd>(bias.mutable_grad().data(), o) += gm.colwise().sum();
    }
  });
}

Tensor transpose(Tape& tape, const Tensor& a) {
  require_rank("transpose", a, 2);
  const auto r = static_cast<Eigen::Index>(a.dim(0));
  const auto c = static_cast<Eigen::Index>(a.dim(1));
  Tensor out(Shape{a.dim(1), a.dim(0)});
  map(out.mutable_data().data(), c, r) = cmap(a.data().data(), r, c).transpose();
  return tape.record(out, {a}, [a, r, c](std::span<const double> g) mutable {
    map(a.mutable_grad().data(), r, c) += cmap(g.data(), c, r).transpose();
  });
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  Tensor out(a.shape());
  auto o = out.mutable_data();
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] + bv[i];
  return tape.record(out, {a, b}, [a, b](std::span<const double> g) mutable {
    if (a.requires_grad()) {
      auto ga = a.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      auto gb = b.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  });
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  Tensor out(a.shape());
  auto o = out.mutable_data();
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] - bv[i];
  return tape.record(out, {a, b}, [a, b](std::span<const double> g) mutable {
    if (a.requires_grad()) {
      auto ga = a.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      auto gb = b.mutable_grad();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  Tensor out(a.shape());
  auto o = out.mutable_data();
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] * bv[i];
  return tape.record(out, {a, b}, [a, b](std::span<const double> g) mutable {
    if (a.requires_grad()) {
      auto ga = a.mutable_grad();
      auto bv = b.data();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (b.requires_grad()) {
      auto gb = b.mutable_grad();
      auto av = a.data();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Tensor scale(Tape& tape, const Tensor& a, double factor) {
  Tensor out(a.shape());
  auto o = out.mutable_data();
  auto av = a.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] * factor;
  return tape.record(out, {a}, [a, factor](std::span<const double> g) mutable {
    auto ga = a.mutable_grad();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
  });
}

Tensor add_scalar(Tape& tape, const Tensor& a, double value) {
  Tensor out(a.shape());
  auto o = out.mutable_data();
  auto av = a.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = av[i] + value;
  return tape.record(out, {a}, [a](std::span<const double> g) mutable {
    auto ga = a.mutable_grad();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Tensor activation(Tape& tape, const Tensor& x, Activation kind) {
  Tensor out(x.shape());
  auto o = out.mutable_data();
  auto xv = x.data();
  switch (kind) {
    case Activation::relu:
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = xv[i] > 0.0 ? xv[i] : 0.0;
      if (tape.tracks_branches()) {
        for (std::size_t i = 0; i < o.size(); ++i) tape.mix_branch(xv[i] > 0.0 ? 1 : 0);
      }
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < o.size(); ++i) {
        // Branch on sign so exp never overflows.
        if (xv[i] >= 0.0) {
          o[i] = 1.0 / (1.0 + std::exp(-xv[i]));
        } else {
          const double e = std::exp(xv[i]);
          o[i] = e / (1.0 + e);
        }
      }
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < o.size(); ++i) o[i] = std::tanh(xv[i]);
      break;
  }
  // The gradient rules are written in terms of the output. For relu the
  // derivative at exactly 0 is taken as 0.
  Tensor result = out;
  return tape.record(out, {x}, [x, result, kind](std::span<const double> g) mutable {
    auto gx = x.mutable_grad();
    auto y = result.data();
    switch (kind) {
      case Activation::relu:
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += y[i] > 0.0 ? g[i] : 0.0;
        break;
      case Activation::sigmoid:
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
        break;
      case Activation::tanh:
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - y[i] * y[i]);
        break;
    }
  });
}

Tensor dropout(Tape& tape, const Tensor& x, double p, Rng& rng, bool training) {
  if (p < 0.0 || p >= 1.0) throw InputError("dropout probability must be in [0,1), got " + std::to_string(p));
  if (!training || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(x.numel());
  for (double& m : mask) m = rng.bernoulli(p) ? 0.0 : keep_scale;
  Tensor out(x.shape());
  auto o = out.mutable_data();
  auto xv = x.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = xv[i] * mask[i];
  return tape.record(out, {x}, [x, mask = std::move(mask)](std::span<const double> g) mutable {
    auto gx = x.mutable_grad();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
  });
}

Tensor sum(Tape& tape, const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  return tape.record(Tensor::scalar(total), {x}, [x](std::span<const double> g) mutable {
    for (double& v : x.mutable_grad()) v += g[0];
  });
}

Tensor mean(Tape& tape, const Tensor& x) {
  double total = 0.0;
  for (double v : x.data()) total += v;
  const double n = static_cast<double>(x.numel());
  return tape.record(Tensor::scalar(total / n), {x}, [x, n](std::span<const double> g) mutable {
    const double share = g[0] / n;
    for (double& v : x.mutable_grad()) v += share;
  });
}

Tensor mean_axes(Tape& tape, const Tensor& x, std::size_t begin, std::size_t end) {
  check_axis_range("mean_axes", x, begin, end);
  const AxisSplit s = split_axes(x.shape(), begin, end);
  Tensor out(remove_axes(x.shape(), begin, end));
  auto o = out.mutable_data();
  auto xv = x.data();
  const double inv = 1.0 / static_cast<double>(s.mid);
  for (std::size_t a = 0; a < s.outer; ++a) {
    for (std::size_t c = 0; c < s.inner; ++c) {
      double total = 0.0;
      for (std::size_t m = 0; m < s.mid; ++m) total += xv[(a * s.mid + m) * s.inner + c];
      o[a * s.inner + c] = total / static_cast<double>(s.mid);
    }
  }
  return tape.record(out, {x}, [x, s, inv](std::span<const double> g) mutable {
    auto gx = x.mutable_grad();
    for (std::size_t a = 0; a < s.outer; ++a) {
      for (std::size_t m = 0; m < s.mid; ++m) {
        for (std::size_t c = 0; c < s.inner; ++c) gx[(a * s.mid + m) * s.inner + c] += g[a * s.inner + c] * inv;
      }
    }
  });
}

Tensor global_avg_pool(Tape& tape, const Tensor& x) {
  require_rank("global_avg_pool", x, 4);
  return mean_axes(tape, x, 2, 4);
}

Tensor scale_broadcast(Tape& tape, const Tensor& x, const Tensor& s, std::size_t begin, std::size_t end) {
  check_axis_range("scale_broadcast", x, begin, end);
  if (s.shape() != remove_axes(x.shape(), begin, end)) {
    throw DimensionError("scale_broadcast: scale " + shape_string(s.shape()) + " does not match " +
                         shape_string(x.shape()) + " without axes [" + std::to_string(begin) + "," +
                         std::to_string(end) + ")");
  }
  const AxisSplit sp = split_axes(x.shape(), begin, end);
  Tensor out(x.shape());
  auto o = out.mutable_data();
  auto xv = x.data();
  auto sv = s.data();
  for (std::size_t a = 0; a < sp.outer; ++a) {
    for (std::size_t m = 0; m < sp.mid; ++m) {
      for (std::size_t c = 0; c < sp.inner; ++c) {
        const std::size_t i = (a * sp.mid + m) * sp.inner + c;
        o[i] = xv[i] * sv[a * sp.inner + c];
      }
    }
  }
  return tape.record(out, {x, s}, [x, s, sp](std::span<const double> g) mutable {
    auto xv = x.data();
    auto sv = s.data();
    const bool want_x = x.requires_grad();
    const bool want_s = s.requires_grad();
    std::span<double> gx = want_x ? x.mutable_grad() : std::span<double>{};
    std::span<double> gs = want_s ? s.mutable_grad() : std::span<double>{};
    for (std::size_t a = 0; a < sp.outer; ++a) {
      for (std::size_t m = 0; m < sp.mid; ++m) {
        for (std::size_t c = 0; c < sp.inner; ++c) {
          const std::size_t i = (a * sp.mid + m) * sp.inner + c;
          const std::size_t j = a * sp.inner + c;
          if (want_x) gx[i] += g[i] * sv[j];
          if (want_s) gs[j] += g[i] * xv[i];
        }
      }
    }
  });
}

Tensor softmax(Tape& tape, const Tensor& x, int axis) {
  const int rank = static_cast<int>(x.rank());
  const int ax = axis < 0 ? axis + rank : axis;
  if (ax < 0 || ax >= rank) {
    throw IndexError("softmax: axis " + std::to_string(axis) + " invalid for shape " + shape_string(x.shape()));
  }
  const auto uax = static_cast<std::size_t>(ax);
  const AxisSplit s = split_axes(x.shape(), uax, uax + 1);
  Tensor out(x.shape());
  auto o = out.mutable_data();
  auto xv = x.data();
  for (std::size_t a = 0; a < s.outer; ++a) {
    for (std::size_t c = 0; c < s.inner; ++c) {
      const std::size_t base = a * s.mid * s.inner + c;
      double peak = xv[base];
      for (std::size_t m = 1; m < s.mid; ++m) peak = std::max(peak, xv[base + m * s.inner]);
      double total = 0.0;
      for (std::size_t m = 0; m < s.mid; ++m) {
        const double e = std::exp(xv[base + m * s.inner] - peak);
        o[base + m * s.inner] = e;
        total += e;
      }
      for (std::size_t m = 0; m < s.mid; ++m) o[base + m * s.inner] /= total;
    }
  }
  Tensor result = out;
  return tape.record(out, {x}, [x, result, s](std::span<const double> g) mutable {
    auto gx = x.mutable_grad();
    auto y = result.data();
    for (std::size_t a = 0; a < s.outer; ++a) {
      for (std::size_t c = 0; c < s.inner; ++c) {
        const std::size_t base = a * s.mid * s.inner + c;
        double dot = 0.0;
        for (std::size_t m = 0; m < s.mid; ++m) dot += g[base + m * s.inner] * y[base + m * s.inner];
        for (std::size_t m = 0; m < s.mid; ++m) {
          const std::size_t i = base + m * s.inner;
          gx[i] += y[i] * (g[i] - dot);
        }
      }
    }
  });
}

Tensor cross_entropy(Tape& tape, const Tensor& logits, std::span<const std::size_t> labels) {
  require_rank("cross_entropy", logits, 2);
  const std::size_t n = logits.dim(0);
  const std::size_t c = logits.dim(1);
  if (labels.size() != n) {
    throw DimensionError("cross_entropy: " + std::to_string(labels.size()) + " labels for " + std::to_string(n) +
                         " rows");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= c) {
      throw IndexError("cross_entropy: label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                       " out of range for " + std::to_string(c) + " classes");
    }
  }
  auto xv = logits.data();
  std::vector<double> probs(n * c);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = xv.data() + i * c;
    const double peak = *std::max_element(row, row + c);
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(row[j] - peak);
    const double log_z = std::log(z) + peak;
    total += log_z - row[labels[i]];
    for (std::size_t j = 0; j < c; ++j) probs[i * c + j] = std::exp(row[j] - log_z);
  }
  std::vector<std::size_t> label_copy(labels.begin(), labels.end());
  return tape.record(Tensor::scalar(total / static_cast<double>(n)), {logits},
                     [logits, probs = std::move(probs), label_copy = std::move(label_copy), n,
                      c](std::span<const double> g) mutable {
                       auto gl = logits.mutable_grad();
                       const double factor = g[0] / static_cast<double>(n);
                       for (std::size_t i = 0; i < n; ++i) {
                         for (std::size_t j = 0; j < c; ++j) {
                           const double onehot = j == label_copy[i] ? 1.0 : 0.0;
                           gl[i * c + j] += factor * (probs[i * c + j] - onehot);
                         }
                       }
                     });
}

Tensor reshape(Tape& tape, const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
  }
  Tensor out(std::move(shape), std::vector<double>(x.data().begin(), x.data().end()));
  return tape.record(out, {x}, [x](std::span<const double> g) mutable {
    auto gx = x.mutable_grad();
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Tensor slice_cols(Tape& tape, const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank("slice_cols", x, 2);
  const std::size_t rows = x.dim(0);
  const std::size_t cols = x.dim(1);
  if (begin >= end || end > cols) {
    throw IndexError("slice_cols: range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") invalid for shape " + shape_string(x.shape()));
  }
  const std::size_t width = end - begin;
  Tensor out(Shape{rows, width});
  auto o = out.mutable_data();
  auto xv = x.data();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(xv.data() + r * cols + begin, width, o.data() + r * width);
  }
  return tape.record(out, {x}, [x, rows, cols, begin, width](std::span<const double> g) mutable {
    auto gx = x.mutable_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < width; ++j) gx[r * cols + begin + j] += g[r * width + j];
    }
  });
}

Tensor gather_rows(Tape& tape, const Tensor& x, std::span<const std::size_t> rows) {
  if (rows.empty()) throw DimensionError("gather_rows: no rows selected");
  const std::size_t count = x.dim(0);
  const std::size_t width = x.numel() / count;
  for (std::size_t r : rows) {
    if (r >= count) {
      throw IndexError("gather_rows: row " + std::to_string(r) + " out of range for shape " +
                       shape_string(x.shape()));
    }
  }
  Shape shape = x.shape();
  shape[0] = rows.size();
  Tensor out(shape);
  auto o = out.mutable_data();
  auto xv = x.data();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(xv.data() + rows[i] * width, width, o.data() + i * width);
  }
  std::vector<std::size_t> index(rows.begin(), rows.end());
  return tape.record(out, {x}, [x, index = std::move(index), width](std::span<const double> g) mutable {
    auto gx = x.mutable_grad();
    for (std::size_t i = 0; i < index.size(); ++i) {
      for (std::size_t j = 0; j < width; ++j) gx[index[i] * width + j] += g[i * width + j];
    }
  });
}

Tensor concat_rows(Tape& tape, std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: nothing to concatenate");
  Shape trailing(parts[0].shape().begin() + 1, parts[0].shape().end());
  std::size_t rows = 0;
  for (const Tensor& p : parts) {
    if (Shape(p.shape().begin() + 1, p.shape().end()) != trailing) {
      throw DimensionError("concat_rows: " + shape_string(p.shape()) + " incompatible with " +
                           shape_string(parts[0].shape()));
    }
    rows += p.dim(0);
  }
  Shape shape = parts[0].shape();
  shape[0] = rows;
  Tensor out(shape);
  auto o = out.mutable_data();
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    std::copy(p.data().begin(), p.data().end(), o.begin() + static_cast<std::ptrdiff_t>(offset));
    offset += p.numel();
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  std::vector<Tensor> captured = inputs;
  return tape.record(out, std::move(inputs), [captured](std::span<const double> g) mutable {
    std::size_t offset = 0;
    for (Tensor& p : captured) {
      const std::size_t n = p.numel();
      if (p.requires_grad()) {
        auto gp = p.mutable_grad();
        for (std::size_t i = 0; i < n; ++i) gp[i] += g[offset + i];
      }
      offset += n;
    }
  });
}

}  // namespace selrcn::ops
