#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "eigen_maps.hpp"
#include "selrcn/errors.hpp"
#include "selrcn/ops.hpp"

namespace selrcn::ops {

using detail::cmap;
using detail::map;

namespace {

struct ConvGeometry {
  std::size_t n, cin, h, w;
  std::size_t cout, k;
  std::size_t stride, pad;
  std::size_t ho, wo;

  std::size_t patch() const { return cin * k * k; }
  std::size_t positions() const { return ho * wo; }
};

// Column matrix [cin·k·k × ho·wo] for one image.
void im2col(const ConvGeometry& g, const double* image, double* col) {
  const std::size_t positions = g.positions();
  for (std::size_t c = 0; c < g.cin; ++c) {
    const double* plane = image + c * g.h * g.w;
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        double* row = col + ((c * g.k + ky) * g.k + kx) * positions;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
          double* out = row + oy * g.wo;
          if (iy < 0 || iy >= static_cast<long>(g.h)) {
            std::fill_n(out, g.wo, 0.0);
            continue;
          }
          const double* src = plane + static_cast<std::size_t>(iy) * g.w;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
            out[ox] = (ix < 0 || ix >= static_cast<long>(g.w)) ? 0.0 : src[ix];
          }
        }
      }
    }
  }
}

void col2im_add(const ConvGeometry& g, const double* col, double* image) {
  const std::size_t positions = g.positions();
  for (std::size_t c = 0; c < g.cin; ++c) {
    double* plane = image + c * g.h * g.w;
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        const double* row = col + ((c * g.k + ky) * g.k + kx) * positions;
        for (std::size_t oy = 0; oy < g.ho; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.pad);
          if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
          double* dst = plane + static_cast<std::size_t>(iy) * g.w;
          for (std::size_t ox = 0; ox < g.wo; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.pad);
            if (ix >= 0 && ix < static_cast<long>(g.w)) dst[ix] += row[oy * g.wo + ox];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(Tape& tape, const Tensor& x, const Tensor& weight, std::size_t stride, std::size_t pad) {
  if (x.rank() != 4 || weight.rank() != 4) {
    throw DimensionError("conv2d: expected x[N×C×H×W] and w[O×C×k×k], got " + shape_string(x.shape()) + " and " +
                         shape_string(weight.shape()));
  }
  if (weight.dim(2) != weight.dim(3)) {
    throw DimensionError("conv2d: kernel must be square, got " + shape_string(weight.shape()));
  }
  if (x.dim(1) != weight.dim(1)) {
    throw DimensionError("conv2d: input has " + std::to_string(x.dim(1)) + " channels but kernel " +
                         shape_string(weight.shape()) + " expects " + std::to_string(weight.dim(1)));
  }
  if (stride == 0) throw InputError("conv2d: stride must be at least 1");
  ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), weight.dim(0), weight.dim(2), stride, pad, 0, 0};
  if (g.k > g.h + 2 * pad || g.k > g.w + 2 * pad) {
    throw DimensionError("conv2d: kernel " + shape_string(weight.shape()) + " larger than padded input " +
                         shape_string(x.shape()));
  }
  g.ho = (g.h + 2 * pad - g.k) / stride + 1;
  g.wo = (g.w + 2 * pad - g.k) / stride + 1;

  const auto patch = static_cast<Eigen::Index>(g.patch());
  const auto positions = static_cast<Eigen::Index>(g.positions());
  const auto cout = static_cast<Eigen::Index>(g.cout);

  Tensor out(Shape{g.n, g.cout, g.ho, g.wo});
  std::vector<double> col(g.patch() * g.positions());
  auto wmat = cmap(weight.data().data(), cout, patch);
  for (std::size_t i = 0; i < g.n; ++i) {
    im2col(g, x.data().data() + i * g.cin * g.h * g.w, col.data());
    map(out.mutable_data().data() + i * g.cout * g.positions(), cout, positions).noalias() =
        wmat * cmap(col.data(), patch, positions);
  }

  return tape.record(out, {x, weight}, [x, weight, g, patch, positions, cout](std::span<const double> grad) mutable {
    std::vector<double> col(g.patch() * g.positions());
    std::vector<double> dcol;
    const bool want_x = x.requires_grad();
    const bool want_w = weight.requires_grad();
    if (want_x) dcol.resize(col.size());
    auto wmat = cmap(weight.data().data(), cout, patch);
    for (std::size_t i = 0; i < g.n; ++i) {
      auto gout = cmap(grad.data() + i * g.cout * g.positions(), cout, positions);
      if (want_w) {
        im2col(g, x.data().data() + i * g.cin * g.h * g.w, col.data());
        map(weight.mutable_grad().data(), cout, patch).noalias() += gout * cmap(col.data(), patch, positions).transpose();
      }
      if (want_x) {
        map(dcol.data(), patch, positions).noalias() = wmat.transpose() * gout;
        col2im_add(g, dcol.data(), x.mutable_grad().data() + i * g.cin * g.h * g.w);
      }
    }
  });
}

Tensor max_pool2d(Tape& tape, const Tensor& x, std::size_t kernel, std::size_t stride, std::size_t pad) {
  if (x.rank() != 4) throw DimensionError("max_pool2d: expected rank 4, got " + shape_string(x.shape()));
  if (stride == 0 || kernel == 0) throw InputError("max_pool2d: kernel and stride must be positive");
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (kernel > h + 2 * pad || kernel > w + 2 * pad) {
    throw DimensionError("max_pool2d: kernel larger than padded input " + shape_string(x.shape()));
  }
  const std::size_t ho = (h + 2 * pad - kernel) / stride + 1;
  const std::size_t wo = (w + 2 * pad - kernel) / stride + 1;
  Tensor out(Shape{n, c, ho, wo});
  std::vector<std::size_t> argmax(out.numel());
  auto o = out.mutable_data();
  auto xv = x.data();
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const double* src = xv.data() + plane * h * w;
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_index = 0;
        for (std::size_t ky = 0; ky < kernel; ++ky) {
          const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
          if (iy < 0 || iy >= static_cast<long>(h)) continue;
          for (std::size_t kx = 0; kx < kernel; ++kx) {
            const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
            if (ix < 0 || ix >= static_cast<long>(w)) continue;
            const std::size_t idx = static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix);
            if (src[idx] > best) {
              best = src[idx];
              best_index = idx;
            }
          }
        }
        const std::size_t oi = (plane * ho + oy) * wo + ox;
        o[oi] = best;
        argmax[oi] = plane * h * w + best_index;
      }
    }
  }
  if (tape.tracks_branches()) {
    for (std::size_t i : argmax) tape.mix_branch(i);
  }
  return tape.record(out, {x}, [x, argmax = std::move(argmax)](std::span<const double> g) mutable {
    auto gx = x.mutable_grad();
    for (std::size_t i = 0; i < g.size(); ++i) gx[argmax[i]] += g[i];
  });
}

Tensor batch_norm2d(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta, Tensor& running_mean,
                    Tensor& running_var, const BatchNormOptions& options) {
  if (x.rank() != 4) throw DimensionError("batch_norm2d: expected rank 4, got " + shape_string(x.shape()));
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  const Shape channel_shape{c};
  for (const Tensor* t : std::initializer_list<const Tensor*>{&gamma, &beta, &running_mean, &running_var}) {
    if (t->shape() != channel_shape) {
      throw DimensionError("batch_norm2d: per-channel tensor " + shape_string(t->shape()) + " does not match " +
                           std::to_string(c) + " channels");
    }
  }
  const std::size_t count = n * hw;
  auto xv = x.data();
  std::vector<double> mu(c), inv_std(c);
  if (options.training) {
    auto rm = running_mean.mutable_data();
    auto rv = running_var.mutable_data();
    for (std::size_t ch = 0; ch < c; ++ch) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double* p = xv.data() + (i * c + ch) * hw;
        for (std::size_t j = 0; j < hw; ++j) total += p[j];
      }
      const double m = total / static_cast<double>(count);
      double sq = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double* p = xv.data() + (i * c + ch) * hw;
        for (std::size_t j = 0; j < hw; ++j) sq += (p[j] - m) * (p[j] - m);
      }
      const double var = sq / static_cast<double>(count);
      mu[ch] = m;
      inv_std[ch] = 1.0 / std::sqrt(var + options.eps);
      const double unbiased = count > 1 ? sq / static_cast<double>(count - 1) : var;
      rm[ch] = round_to(tape.precision(), (1.0 - options.momentum) * rm[ch] + options.momentum * m);
      rv[ch] = round_to(tape.precision(), (1.0 - options.momentum) * rv[ch] + options.momentum * unbiased);
    }
  } else {
    for (std::size_t ch = 0; ch < c; ++ch) {
      mu[ch] = running_mean[ch];
      inv_std[ch] = 1.0 / std::sqrt(running_var[ch] + options.eps);
    }
  }

  Tensor out(x.shape());
  std::vector<double> xhat(x.numel());
  auto o = out.mutable_data();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t base = (i * c + ch) * hw;
      for (std::size_t j = 0; j < hw; ++j) {
        const double v = (xv[base + j] - mu[ch]) * inv_std[ch];
        xhat[base + j] = v;
        o[base + j] = gamma[ch] * v + beta[ch];
      }
    }
  }

  const bool training = options.training;
  return tape.record(out, {x, gamma, beta},
                     [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std), n, c, hw, count,
                      training](std::span<const double> g) mutable {
                       std::vector<double> dgamma(c, 0.0), dbeta(c, 0.0);
                       for (std::size_t i = 0; i < n; ++i) {
                         for (std::size_t ch = 0; ch < c; ++ch) {
                           const std::size_t base = (i * c + ch) * hw;
                           for (std::size_t j = 0; j < hw; ++j) {
                             dgamma[ch] += g[base + j] * xhat[base + j];
                             dbeta[ch] += g[base + j];
                           }
                         }
                       }
                       if (gamma.requires_grad()) {
                         auto gg = gamma.mutable_grad();
                         for (std::size_t ch = 0; ch < c; ++ch) gg[ch] += dgamma[ch];
                       }
                       if (beta.requires_grad()) {
                         auto gb = beta.mutable_grad();
                         for (std::size_t ch = 0; ch < c; ++ch) gb[ch] += dbeta[ch];
                       }
                       if (!x.requires_grad()) return;
                       auto gx = x.mutable_grad();
                       const double inv_count = 1.0 / static_cast<double>(count);
                       for (std::size_t i = 0; i < n; ++i) {
                         for (std::size_t ch = 0; ch < c; ++ch) {
                           const std::size_t base = (i * c + ch) * hw;
                           const double k = gamma[ch] * inv_std[ch];
                           for (std::size_t j = 0; j < hw; ++j) {
                             if (training) {
                               // dxhat sums: Σ dxhat = γ·Σg, Σ dxhat·xhat = γ·dγ
                               gx[base + j] += k * (g[base + j] - inv_count * dbeta[ch] -
                                                    inv_count * xhat[base + j] * dgamma[ch]);
                             } else {
                               gx[base + j] += k * g[base + j];
                             }
                           }
                         }
                       }
                     });
}

}  // namespace selrcn::ops
