#include "millimamba/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "millimamba/error.hpp"

namespace millimamba::tensor {
namespace {

using Impl = std::shared_ptr<TensorImpl>;

// Gradient buffer of an input, or nullptr when it does not need one.
std::vector<double>* grad_of(const Impl& t) {
  if (!t->requires_grad) return nullptr;
  if (t->grad.size() != t->data.size()) t->grad.assign(t->data.size(), 0.0);
  return &t->grad;
}

Tensor finish(Tensor out, const char* op, std::span<const Tensor> inputs, Tape::BackwardFn fn) {
  check_finite(out, op);
  if (should_record(inputs)) active_tape()->record(inputs, out, std::move(fn));
  return out;
}

Tensor finish(Tensor out, const char* op, std::initializer_list<Tensor> inputs, Tape::BackwardFn fn) {
  return finish(std::move(out), op, std::span<const Tensor>(inputs.begin(), inputs.size()), std::move(fn));
}

enum class Broadcast { kSame, kSuffix };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::kSame;
  if (b.size() == 1) return Broadcast::kSuffix;
  const auto& as = a.shape();
  const auto& bs = b.shape();
  if (bs.size() <= as.size() && std::equal(bs.rbegin(), bs.rend(), as.rbegin())) return Broadcast::kSuffix;
  fail(std::string(op) + ": incompatible shapes " + to_string(as) + " and " + to_string(bs));
}

std::size_t normalize_axis(int axis, std::size_t rank) {
  const int r = static_cast<int>(rank);
  if (axis < 0) axis += r;
  require(axis >= 0 && axis < r, "axis out of range");
  return static_cast<std::size_t>(axis);
}

// outer x axis x inner decomposition around `axis`.
struct AxisSplit {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.n = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

template <typename F, typename DF>
Tensor unary(const Tensor& x, const char* op, F f, DF df) {
  std::vector<double> out(x.size());
  const auto xd = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(xd[i]);
  Tensor y(x.shape(), std::move(out));
  Impl xi = x.shared(), yi = y.shared();
  return finish(y, op, {x}, [xi, yi, df] {
    if (auto* gx = grad_of(xi)) {
      for (std::size_t i = 0; i < yi->data.size(); ++i) (*gx)[i] += yi->grad[i] * df(xi->data[i], yi->data[i]);
    }
  });
}

double sigmoid_of(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  const auto kind = broadcast_kind(a, b, "add");
  const std::size_t nb = b.size();
  std::vector<double> out(a.data().begin(), a.data().end());
  const auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bd[kind == Broadcast::kSame ? i : i % nb];
  Tensor y(a.shape(), std::move(out));
  Impl ai = a.shared(), bi = b.shared(), yi = y.shared();
  return finish(y, "add", {a, b}, [ai, bi, yi, nb] {
    const auto& gy = yi->grad;
    if (auto* ga = grad_of(ai)) {
      for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i];
    }
    if (auto* gb = grad_of(bi)) {
      for (std::size_t i = 0; i < gy.size(); ++i) (*gb)[i % nb] += gy[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const auto kind = broadcast_kind(a, b, "sub");
  const std::size_t nb = b.size();
  std::vector<double> out(a.data().begin(), a.data().end());
  const auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bd[kind == Broadcast::kSame ? i : i % nb];
  Tensor y(a.shape(), std::move(out));
  Impl ai = a.shared(), bi = b.shared(), yi = y.shared();
  return finish(y, "sub", {a, b}, [ai, bi, yi, nb] {
    const auto& gy = yi->grad;
    if (auto* ga = grad_of(ai)) {
      for (std::size_t i = 0; i < gy.size(); ++i) (*ga)[i] += gy[i];
    }
    if (auto* gb = grad_of(bi)) {
      for (std::size_t i = 0; i < gy.size(); ++i) (*gb)[i % nb] -= gy[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  broadcast_kind(a, b, "mul");
  const std::size_t nb = b.size();
  std::vector<double> out(a.size());
  const auto ad = a.data();
  const auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ad[i] * bd[i % nb];
  Tensor y(a.shape(), std::move(out));
  Impl ai = a.shared(), bi = b.shared(), yi = y.shared();
  return finish(y, "mul", {a, b}, [ai, bi, yi, nb] {
    const auto& gy = yi->grad;
    // Read both operands before writing: a and b may alias.
    auto* ga = grad_of(ai);
    auto* gb = grad_of(bi);
    for (std::size_t i = 0; i < gy.size(); ++i) {
      const double av = ai->data[i], bv = bi->data[i % nb];
      if (ga) (*ga)[i] += gy[i] * bv;
      if (gb) (*gb)[i % nb] += gy[i] * av;
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(a, "scale", [factor](double v) { return v * factor; },
               [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double value) {
  return unary(a, "add_scalar", [value](double v) { return v + value; }, [](double, double) { return 1.0; });
}

Tensor exp(const Tensor& x) {
  return unary(x, "exp", [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(x, "sigmoid", sigmoid_of, [](double, double y) { return y * (1.0 - y); });
}

Tensor silu(const Tensor& x) {
  return unary(x, "silu", [](double v) { return v * sigmoid_of(v); },
               [](double v, double) {
                 const double s = sigmoid_of(v);
                 return s * (1.0 + v * (1.0 - s));
               });
}

Tensor softplus(const Tensor& x) {
  return unary(x, "softplus",
               [](double v) { return v > 20.0 ? v : std::log1p(std::exp(v)); },
               [](double v, double) { return sigmoid_of(v); });
}

Tensor square(const Tensor& x) {
  return unary(x, "square", [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Tensor matmul(const Tensor& a, const Tensor& b, bool transpose_b) {
  require(a.rank() >= 2 && b.rank() >= 2, "matmul: operands must have rank >= 2");
  const std::size_t M = a.dim(a.rank() - 2), K = a.dim(a.rank() - 1);
  const std::size_t bk = transpose_b ? b.dim(b.rank() - 1) : b.dim(b.rank() - 2);
  const std::size_t N = transpose_b ? b.dim(b.rank() - 2) : b.dim(b.rank() - 1);
  require(bk == K, "matmul: inner dimensions differ, " + to_string(a.shape()) + " x " + to_string(b.shape()));
  const bool shared_b = b.rank() == 2;
  std::size_t batch = a.size() / (M * K);
  if (!shared_b) {
    require(b.rank() == a.rank() && std::equal(a.shape().begin(), a.shape().end() - 2, b.shape().begin()),
            "matmul: batch dimensions differ");
  } else {
    // A shared weight: fold the batch into rows.
    batch = 1;
  }
  const std::size_t rows = shared_b ? a.size() / K : M;
  Shape out_shape = a.shape();
  out_shape.back() = N;
  std::vector<double> out(numel(out_shape), 0.0);
  const double* A = a.data().data();
  const double* B = b.data().data();
  for (std::size_t bt = 0; bt < batch; ++bt) {
    const double* Ab = A + bt * rows * K;
    const double* Bb = shared_b ? B : B + bt * K * N;
    double* Cb = out.data() + bt * rows * N;
    for (std::size_t m = 0; m < rows; ++m) {
      double* crow = Cb + m * N;
      if (!transpose_b) {
        for (std::size_t k = 0; k < K; ++k) {
          const double av = Ab[m * K + k];
          const double* brow = Bb + k * N;
          for (std::size_t n = 0; n < N; ++n) crow[n] += av * brow[n];
        }
      } else {
        for (std::size_t n = 0; n < N; ++n) {
          const double* brow = Bb + n * K;
          double acc = 0.0;
          for (std::size_t k = 0; k < K; ++k) acc += Ab[m * K + k] * brow[k];
          crow[n] = acc;
        }
      }
    }
  }
  Tensor y(std::move(out_shape), std::move(out));
  Impl ai = a.shared(), bi = b.shared(), yi = y.shared();
  return finish(y, "matmul", {a, b}, [ai, bi, yi, batch, rows, K, N, shared_b, transpose_b] {
    auto* ga = grad_of(ai);
    auto* gb = grad_of(bi);
    const double* A = ai->data.data();
    const double* B = bi->data.data();
    const double* G = yi->grad.data();
    for (std::size_t bt = 0; bt < batch; ++bt) {
      const double* Ab = A + bt * rows * K;
      const double* Bb = shared_b ? B : B + bt * K * N;
      const double* Gb = G + bt * rows * N;
      double* gA = ga ? ga->data() + bt * rows * K : nullptr;
      double* gB = gb ? gb->data() + (shared_b ? 0 : bt * K * N) : nullptr;
      for (std::size_t m = 0; m < rows; ++m) {
        const double* grow = Gb + m * N;
        if (!transpose_b) {
          for (std::size_t k = 0; k < K; ++k) {
            const double* brow = Bb + k * N;
            if (gA) {
              double acc = 0.0;
              for (std::size_t n = 0; n < N; ++n) acc += grow[n] * brow[n];
              gA[m * K + k] += acc;
            }
            if (gB) {
              const double av = Ab[m * K + k];
              double* gbrow = gB + k * N;
              for (std::size_t n = 0; n < N; ++n) gbrow[n] += av * grow[n];
            }
          }
        } else {
          for (std::size_t n = 0; n < N; ++n) {
            const double g = grow[n];
            const double* brow = Bb + n * K;
            if (gA) {
              for (std::size_t k = 0; k < K; ++k) gA[m * K + k] += g * brow[k];
            }
            if (gB) {
              double* gbrow = gB + n * K;
              for (std::size_t k = 0; k < K; ++k) gbrow[k] += g * Ab[m * K + k];
            }
          }
        }
      }
    }
  });
}

Tensor conv3d(const Tensor& x, const Tensor& weight, const Tensor& bias, const Conv3dOptions& o) {
  require(x.rank() == 4, "conv3d: input must be [C][D][H][W], got " + to_string(x.shape()));
  require(weight.rank() == 5, "conv3d: weight must be [Cout][Cin][kd][kh][kw]");
  const std::size_t Ci = x.dim(0);
  require(weight.dim(1) == Ci, "conv3d: channel mismatch");
  const std::size_t Co = weight.dim(0);
  if (bias.defined()) require(bias.size() == Co, "conv3d: bias size mismatch");
  std::array<std::size_t, 3> in{x.dim(1), x.dim(2), x.dim(3)};
  std::array<std::size_t, 3> k{weight.dim(2), weight.dim(3), weight.dim(4)};
  std::array<std::size_t, 3> out{};
  for (int i = 0; i < 3; ++i) {
    require(o.stride[i] > 0, "conv3d: stride must be positive");
    require(k[i] <= in[i] + 2 * o.pad[i], "conv3d: kernel larger than padded input");
    out[i] = (in[i] + 2 * o.pad[i] - k[i]) / o.stride[i] + 1;
  }
  const std::size_t in_vol = in[0] * in[1] * in[2];
  const std::size_t out_vol = out[0] * out[1] * out[2];
  std::vector<double> y(Co * out_vol, 0.0);
  const double* X = x.data().data();
  const double* Wt = weight.data().data();

  // Visits every (output position, input position, weight) triple that
  // contributes; shared by forward and backward.
  auto for_each_tap = [in, k, out, o, in_vol, out_vol, Ci](std::size_t co, auto&& fn) {
    for (std::size_t ci = 0; ci < Ci; ++ci) {
      for (std::size_t kd = 0; kd < k[0]; ++kd) {
        for (std::size_t kh = 0; kh < k[1]; ++kh) {
          for (std::size_t kw = 0; kw < k[2]; ++kw) {
            const std::size_t widx = (((co * Ci + ci) * k[0] + kd) * k[1] + kh) * k[2] + kw;
            for (std::size_t od = 0; od < out[0]; ++od) {
              const long id = static_cast<long>(od * o.stride[0] + kd) - static_cast<long>(o.pad[0]);
              if (id < 0 || id >= static_cast<long>(in[0])) continue;
              for (std::size_t oh = 0; oh < out[1]; ++oh) {
                const long ih = static_cast<long>(oh * o.stride[1] + kh) - static_cast<long>(o.pad[1]);
                if (ih < 0 || ih >= static_cast<long>(in[1])) continue;
                // Valid ow range for this kw.
                const long lo_num = static_cast<long>(o.pad[2]) - static_cast<long>(kw);
                std::size_t ow_lo = 0;
                if (lo_num > 0) ow_lo = static_cast<std::size_t>((lo_num + static_cast<long>(o.stride[2]) - 1) / static_cast<long>(o.stride[2]));
                const std::size_t in_base = ci * in_vol + (static_cast<std::size_t>(id) * in[1] + static_cast<std::size_t>(ih)) * in[2];
                const std::size_t out_base = co * out_vol + (od * out[1] + oh) * out[2];
                for (std::size_t ow = ow_lo; ow < out[2]; ++ow) {
                  const long iw = static_cast<long>(ow * o.stride[2] + kw) - static_cast<long>(o.pad[2]);
                  if (iw >= static_cast<long>(in[2])) break;
                  fn(out_base + ow, in_base + static_cast<std::size_t>(iw), widx);
                }
              }
            }
          }
        }
      }
    }
  };

  for (std::size_t co = 0; co < Co; ++co) {
    if (bias.defined()) std::fill(y.begin() + co * out_vol, y.begin() + (co + 1) * out_vol, bias[co]);
    for_each_tap(co, [&](std::size_t oi, std::size_t ii, std::size_t wi) { y[oi] += Wt[wi] * X[ii]; });
  }

  Tensor result({Co, out[0], out[1], out[2]}, std::move(y));
  Impl xi = x.shared(), wi = weight.shared(), yi = result.shared();
  Impl bi = bias.defined() ? bias.shared() : nullptr;
  std::vector<Tensor> inputs = {x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return finish(result, "conv3d", inputs, [=] {
    auto* gx = grad_of(xi);
    auto* gw = grad_of(wi);
    auto* gb = bi ? grad_of(bi) : nullptr;
    const auto& gy = yi->grad;
    for (std::size_t co = 0; co < Co; ++co) {
      if (gb) {
        double acc = 0.0;
        for (std::size_t i = 0; i < out_vol; ++i) acc += gy[co * out_vol + i];
        (*gb)[co] += acc;
      }
      if (gx && gw) {
        for_each_tap(co, [&](std::size_t oi, std::size_t ii, std::size_t w) {
          (*gx)[ii] += wi->data[w] * gy[oi];
          (*gw)[w] += xi->data[ii] * gy[oi];
        });
      } else if (gx) {
        for_each_tap(co, [&](std::size_t oi, std::size_t ii, std::size_t w) { (*gx)[ii] += wi->data[w] * gy[oi]; });
      } else if (gw) {
        for_each_tap(co, [&](std::size_t oi, std::size_t ii, std::size_t w) { (*gw)[w] += xi->data[ii] * gy[oi]; });
      }
    }
  });
}

Tensor conv3d_same(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require(weight.rank() == 5, "conv3d_same: weight must be rank 5");
  Conv3dOptions o;
  for (int i = 0; i < 3; ++i) {
    const std::size_t kk = weight.dim(2 + i);
    require(kk % 2 == 1, "conv3d_same: kernel sizes must be odd");
    o.pad[i] = kk / 2;
  }
  return conv3d(x, weight, bias, o);
}

Tensor avg_pool3d(const Tensor& x, std::array<std::size_t, 3> kernel) {
  require(x.rank() == 4, "avg_pool3d: input must be [C][D][H][W]");
  const std::size_t C = x.dim(0);
  std::array<std::size_t, 3> in{x.dim(1), x.dim(2), x.dim(3)}, out{};
  for (int i = 0; i < 3; ++i) {
    require(kernel[i] > 0 && in[i] % kernel[i] == 0,
            "avg_pool3d: dims " + to_string(x.shape()) + " not divisible by the pool kernel");
    out[i] = in[i] / kernel[i];
  }
  const double inv = 1.0 / static_cast<double>(kernel[0] * kernel[1] * kernel[2]);
  const std::size_t out_n = C * out[0] * out[1] * out[2];
  std::vector<double> y(out_n, 0.0);
  // Maps each input element to its pooled output element.
  auto out_index = [=](std::size_t idx) {
    const std::size_t w = idx % in[2];
    const std::size_t h = (idx / in[2]) % in[1];
    const std::size_t d = (idx / (in[2] * in[1])) % in[0];
    const std::size_t c = idx / (in[2] * in[1] * in[0]);
    return ((c * out[0] + d / kernel[0]) * out[1] + h / kernel[1]) * out[2] + w / kernel[2];
  };
  const auto xd = x.data();
  for (std::size_t i = 0; i < xd.size(); ++i) y[out_index(i)] += xd[i] * inv;
  Tensor result({C, out[0], out[1], out[2]}, std::move(y));
  Impl xi = x.shared(), yi = result.shared();
  return finish(result, "avg_pool3d", {x}, [xi, yi, out_index, inv] {
    if (auto* gx = grad_of(xi)) {
      for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += yi->grad[out_index(i)] * inv;
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const std::size_t n = x.shape().back();
  require(gamma.size() == n && beta.size() == n, "layer_norm: gamma/beta size must match last dim");
  const std::size_t rows = x.size() / n;
  std::vector<double> y(x.size()), xhat(x.size()), inv_std(rows);
  const auto xd = x.data();
  const auto g = gamma.data();
  const auto b = beta.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xd.data() + r * n;
    double mu = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu += xr[i];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (xr[i] - mu) * (xr[i] - mu);
    var /= static_cast<double>(n);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t i = 0; i < n; ++i) {
      const double h = (xr[i] - mu) * is;
      xhat[r * n + i] = h;
      y[r * n + i] = h * g[i] + b[i];
    }
  }
  Tensor result(x.shape(), std::move(y));
  Impl xi = x.shared(), gi = gamma.shared(), bi = beta.shared(), yi = result.shared();
  return finish(result, "layer_norm", {x, gamma, beta},
                [xi, gi, bi, yi, xhat = std::move(xhat), inv_std = std::move(inv_std), n, rows] {
                  auto* gx = grad_of(xi);
                  auto* gg = grad_of(gi);
                  auto* gb = grad_of(bi);
                  const auto& gy = yi->grad;
                  std::vector<double> dxhat(n);
                  for (std::size_t r = 0; r < rows; ++r) {
                    double m1 = 0.0, m2 = 0.0;
                    for (std::size_t i = 0; i < n; ++i) {
                      const double gyi = gy[r * n + i];
                      if (gg) (*gg)[i] += gyi * xhat[r * n + i];
                      if (gb) (*gb)[i] += gyi;
                      dxhat[i] = gyi * gi->data[i];
                      m1 += dxhat[i];
                      m2 += dxhat[i] * xhat[r * n + i];
                    }
                    if (!gx) continue;
                    m1 /= static_cast<double>(n);
                    m2 /= static_cast<double>(n);
                    for (std::size_t i = 0; i < n; ++i) {
                      (*gx)[r * n + i] += inv_std[r] * (dxhat[i] - m1 - xhat[r * n + i] * m2);
                    }
                  }
                });
}

Tensor softmax(const Tensor& x, int axis) {
  const std::size_t ax = normalize_axis(axis, x.rank());
  const auto sp = split_at(x.shape(), ax);
  std::vector<double> y(x.size());
  const auto xd = x.data();
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t in = 0; in < sp.inner; ++in) {
      const std::size_t base = o * sp.n * sp.inner + in;
      double mx = xd[base];
      for (std::size_t i = 1; i < sp.n; ++i) mx = std::max(mx, xd[base + i * sp.inner]);
      double total = 0.0;
      for (std::size_t i = 0; i < sp.n; ++i) {
        const double e = std::exp(xd[base + i * sp.inner] - mx);
        y[base + i * sp.inner] = e;
        total += e;
      }
      for (std::size_t i = 0; i < sp.n; ++i) y[base + i * sp.inner] /= total;
    }
  }
  Tensor result(x.shape(), std::move(y));
  Impl xi = x.shared(), yi = result.shared();
  return finish(result, "softmax", {x}, [xi, yi, sp] {
    auto* gx = grad_of(xi);
    if (!gx) return;
    const auto& y = yi->data;
    const auto& gy = yi->grad;
    for (std::size_t o = 0; o < sp.outer; ++o) {
      for (std::size_t in = 0; in < sp.inner; ++in) {
        const std::size_t base = o * sp.n * sp.inner + in;
        double dot = 0.0;
        for (std::size_t i = 0; i < sp.n; ++i) dot += gy[base + i * sp.inner] * y[base + i * sp.inner];
        for (std::size_t i = 0; i < sp.n; ++i) {
          const std::size_t p = base + i * sp.inner;
          (*gx)[p] += y[p] * (gy[p] - dot);
        }
      }
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  require(numel(shape) == x.size(),
          "reshape: " + to_string(x.shape()) + " cannot become " + to_string(shape));
  Tensor y(std::move(shape), std::vector<double>(x.data().begin(), x.data().end()));
  Impl xi = x.shared(), yi = y.shared();
  return finish(y, "reshape", {x}, [xi, yi] {
    if (auto* gx = grad_of(xi)) {
      for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += yi->grad[i];
    }
  });
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& order) {
  const std::size_t r = x.rank();
  require(order.size() == r, "permute: order length must equal rank");
  std::vector<bool> seen(r, false);
  for (auto o : order) {
    require(o < r && !seen[o], "permute: order is not a permutation");
    seen[o] = true;
  }
  const auto& in_shape = x.shape();
  std::vector<std::size_t> in_strides(r, 1);
  for (std::size_t i = r - 1; i > 0; --i) in_strides[i - 1] = in_strides[i] * in_shape[i];
  Shape out_shape(r);
  std::vector<std::size_t> strides(r);  // input stride of each output axis
  for (std::size_t i = 0; i < r; ++i) {
    out_shape[i] = in_shape[order[i]];
    strides[i] = in_strides[order[i]];
  }
  // src[i] is the input offset of output element i.
  auto src = std::make_shared<std::vector<std::size_t>>(x.size());
  std::vector<std::size_t> idx(r, 0);
  std::size_t off = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    (*src)[i] = off;
    for (std::size_t d = r; d-- > 0;) {
      ++idx[d];
      off += strides[d];
      if (idx[d] < out_shape[d]) break;
      off -= strides[d] * out_shape[d];
      idx[d] = 0;
    }
  }
  std::vector<double> y(x.size());
  const auto xd = x.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xd[(*src)[i]];
  Tensor result(std::move(out_shape), std::move(y));
  Impl xi = x.shared(), yi = result.shared();
  return finish(result, "permute", {x}, [xi, yi, src] {
    if (auto* gx = grad_of(xi)) {
      for (std::size_t i = 0; i < src->size(); ++i) (*gx)[(*src)[i]] += yi->grad[i];
    }
  });
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  require(!parts.empty(), "concat: no inputs");
  const auto& first = parts.front().shape();
  require(axis < first.size(), "concat: axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    require(p.rank() == first.size(), "concat: rank mismatch");
    for (std::size_t i = 0; i < first.size(); ++i) {
      if (i != axis) require(p.dim(i) == first[i], "concat: shape mismatch off the concat axis");
    }
    out_shape[axis] += p.dim(axis);
  }
  const auto sp = split_at(out_shape, axis);
  std::vector<double> y(numel(out_shape));
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    offsets.push_back(offset);
    const std::size_t chunk = p.dim(axis) * sp.inner;
    const auto pd = p.data();
    for (std::size_t o = 0; o < sp.outer; ++o) {
      std::copy(pd.begin() + o * chunk, pd.begin() + (o + 1) * chunk,
                y.begin() + o * sp.n * sp.inner + offset * sp.inner);
    }
    offset += p.dim(axis);
  }
  Tensor result(out_shape, std::move(y));
  std::vector<Impl> impls;
  for (const auto& p : parts) impls.push_back(p.shared());
  Impl yi = result.shared();
  auto fn = [impls, yi, offsets, sp, axis] {
    for (std::size_t k = 0; k < impls.size(); ++k) {
      auto* g = grad_of(impls[k]);
      if (!g) continue;
      const std::size_t chunk = impls[k]->shape[axis] * sp.inner;
      for (std::size_t o = 0; o < sp.outer; ++o) {
        const double* src = yi->grad.data() + o * sp.n * sp.inner + offsets[k] * sp.inner;
        for (std::size_t i = 0; i < chunk; ++i) (*g)[o * chunk + i] += src[i];
      }
    }
  };
  check_finite(result, "concat");
  if (should_record(parts)) active_tape()->record(parts, result, std::move(fn));
  return result;
}

Tensor slice(const Tensor& x, std::size_t axis, std::size_t begin, std::size_t end) {
  require(axis < x.rank(), "slice: axis out of range");
  require(begin < end && end <= x.dim(axis), "slice: invalid range");
  const auto sp = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  const std::size_t chunk = (end - begin) * sp.inner;
  std::vector<double> y(numel(out_shape));
  const auto xd = x.data();
  for (std::size_t o = 0; o < sp.outer; ++o) {
    const auto src = xd.begin() + o * sp.n * sp.inner + begin * sp.inner;
    std::copy(src, src + chunk, y.begin() + o * chunk);
  }
  Tensor result(std::move(out_shape), std::move(y));
  Impl xi = x.shared(), yi = result.shared();
  return finish(result, "slice", {x}, [xi, yi, sp, begin, chunk] {
    if (auto* gx = grad_of(xi)) {
      for (std::size_t o = 0; o < sp.outer; ++o) {
        double* dst = gx->data() + o * sp.n * sp.inner + begin * sp.inner;
        for (std::size_t i = 0; i < chunk; ++i) dst[i] += yi->grad[o * chunk + i];
      }
    }
  });
}

Tensor gather(const Tensor& x, std::span<const std::size_t> indices) {
  require(x.rank() >= 1 && !indices.empty(), "gather: empty input");
  const std::size_t rows = x.dim(0);
  const std::size_t row = x.size() / rows;
  Shape out_shape = x.shape();
  out_shape[0] = indices.size();
  std::vector<double> y(indices.size() * row);
  const auto xd = x.data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    require(indices[i] < rows, "gather: index out of range");
    std::copy(xd.begin() + indices[i] * row, xd.begin() + (indices[i] + 1) * row, y.begin() + i * row);
  }
  Tensor result(std::move(out_shape), std::move(y));
  Impl xi = x.shared(), yi = result.shared();
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return finish(result, "gather", {x}, [xi, yi, idx = std::move(idx), row] {
    if (auto* gx = grad_of(xi)) {
      for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t k = 0; k < row; ++k) (*gx)[idx[i] * row + k] += yi->grad[i * row + k];
      }
    }
  });
}

Tensor sum(const Tensor& x) {
  const auto xd = x.data();
  const double total = std::accumulate(xd.begin(), xd.end(), 0.0);
  Tensor y = Tensor::scalar(total);
  Impl xi = x.shared(), yi = y.shared();
  return finish(y, "sum", {x}, [xi, yi] {
    if (auto* gx = grad_of(xi)) {
      for (auto& g : *gx) g += yi->grad[0];
    }
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Tensor sum_axis(const Tensor& x, std::size_t axis) {
  require(axis < x.rank(), "sum_axis: axis out of range");
  const auto sp = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  if (out_shape.empty()) out_shape = {1};
  std::vector<double> y(sp.outer * sp.inner, 0.0);
  const auto xd = x.data();
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t i = 0; i < sp.n; ++i) {
      for (std::size_t in = 0; in < sp.inner; ++in) {
        y[o * sp.inner + in] += xd[(o * sp.n + i) * sp.inner + in];
      }
    }
  }
  Tensor result(std::move(out_shape), std::move(y));
  Impl xi = x.shared(), yi = result.shared();
  return finish(result, "sum_axis", {x}, [xi, yi, sp] {
    if (auto* gx = grad_of(xi)) {
      for (std::size_t o = 0; o < sp.outer; ++o) {
        for (std::size_t i = 0; i < sp.n; ++i) {
          for (std::size_t in = 0; in < sp.inner; ++in) {
            (*gx)[(o * sp.n + i) * sp.inner + in] += yi->grad[o * sp.inner + in];
          }
        }
      }
    }
  });
}

}  // namespace millimamba::tensor
