#include "millimamba/ssm.hpp"

#include <cmath>

#include "millimamba/error.hpp"

namespace millimamba::encoder {
namespace {

void check_inputs(const ScanInputs& in) {
  require(in.length >= 1, "ssm_scan: sequence length must be >= 1");
  require(in.channels >= 1 && in.states >= 1, "ssm_scan: empty channel/state dims");
  const std::size_t L = in.length, d = in.channels, n = in.states;
  require(in.u.size() == L * d && in.delta.size() == L * d, "ssm_scan: u/delta must be [L][d]");
  require(in.a.size() == d * n, "ssm_scan: A must be [d][n]");
  require(in.b.size() == L * n && in.c.size() == L * n, "ssm_scan: B/C must be [L][n]");
  require(in.skip.size() == d, "ssm_scan: D must be [d]");
}

// Runs the recurrence; when `states` is non-null it receives h_t for every
// step in visiting order ([L][d][n]).
void run_scan(const ScanInputs& in, Direction dir, std::span<double> y, std::vector<double>* states) {
  const std::size_t L = in.length, d = in.channels, n = in.states;
  std::vector<double> h(d * n, 0.0);
  if (states) states->resize(L * d * n);
  for (std::size_t step = 0; step < L; ++step) {
    const std::size_t t = dir == Direction::kForward ? step : L - 1 - step;
    const double* bt = in.b.data() + t * n;
    const double* ct = in.c.data() + t * n;
    for (std::size_t i = 0; i < d; ++i) {
      const double dt = in.delta[t * d + i];
      const double ut = in.u[t * d + i];
      const double* ai = in.a.data() + i * n;
      double* hi = h.data() + i * n;
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        hi[k] = std::exp(dt * ai[k]) * hi[k] + dt * bt[k] * ut;
        acc += ct[k] * hi[k];
      }
      y[t * d + i] = acc + in.skip[i] * ut;
    }
    if (states) std::copy(h.begin(), h.end(), states->begin() + static_cast<std::ptrdiff_t>(t * d * n));
  }
}

}  // namespace

std::vector<double> ssm_scan(const ScanInputs& in, Direction direction) {
  check_inputs(in);
  std::vector<double> y(in.length * in.channels);
  run_scan(in, direction, y, nullptr);
  return y;
}

Tensor selective_scan(const Tensor& u, const Tensor& delta, const Tensor& a, const Tensor& b,
                      const Tensor& c, const Tensor& skip, Direction direction) {
  require(u.rank() == 2 && a.rank() == 2, "selective_scan: u must be [L][d] and A [d][n]");
  ScanInputs in;
  in.length = u.dim(0);
  in.channels = u.dim(1);
  in.states = a.dim(1);
  in.u = u.data();
  in.delta = delta.data();
  in.a = a.data();
  in.b = b.data();
  in.c = c.data();
  in.skip = skip.data();
  check_inputs(in);

  const bool record = tensor::should_record({u, delta, a, b, c, skip});
  auto states = std::make_shared<std::vector<double>>();
  std::vector<double> y(in.length * in.channels);
  run_scan(in, direction, y, record ? states.get() : nullptr);
  Tensor out(u.shape(), std::move(y));
  tensor::check_finite(out, "selective_scan");
  if (!record) return out;

  const std::size_t L = in.length, d = in.channels, n = in.states;
  auto ui = u.shared(), di = delta.shared(), ai = a.shared(), bi = b.shared(), ci = c.shared(),
       si = skip.shared(), yi = out.shared();
  const Tensor inputs[] = {u, delta, a, b, c, skip};
  tensor::active_tape()->record(inputs, out, [=] {
    auto* gu = tensor::grad_sink(ui);
    auto* gd = tensor::grad_sink(di);
    auto* ga = tensor::grad_sink(ai);
    auto* gb = tensor::grad_sink(bi);
    auto* gc = tensor::grad_sink(ci);
    auto* gs = tensor::grad_sink(si);
    const auto& U = ui->data;
    const auto& Dl = di->data;
    const auto& A = ai->data;
    const auto& B = bi->data;
    const auto& C = ci->data;
    const auto& S = si->data;
    const auto& gy = yi->grad;
    const auto& H = *states;
    std::vector<double> gh(d * n, 0.0);  // dLoss/dh_t carried backwards through time
    for (std::size_t step = L; step-- > 0;) {
      const std::size_t t = direction == Direction::kForward ? step : L - 1 - step;
      // Previous state in visiting order (zero at the first step).
      const bool first = step == 0;
      const std::size_t prev_t = direction == Direction::kForward ? t - 1 : t + 1;
      for (std::size_t i = 0; i < d; ++i) {
        const double g = gy[t * d + i];
        const double ut = U[t * d + i];
        const double dt = Dl[t * d + i];
        if (gs) (*gs)[i] += g * ut;
        double du = g * S[i];
        double ddelta = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const std::size_t hk = i * n + k;
          const double h_t = H[t * d * n + hk];
          if (gc) (*gc)[t * n + k] += g * h_t;
          gh[hk] += g * C[t * n + k];
          const double ghk = gh[hk];
          const double decay = std::exp(dt * A[hk]);
          const double h_prev = first ? 0.0 : H[prev_t * d * n + hk];
          const double gdecay = ghk * h_prev * decay;  // d/d(dt*A) of decay*h_prev
          ddelta += gdecay * A[hk] + ghk * B[t * n + k] * ut;
          if (ga) (*ga)[hk] += gdecay * dt;
          if (gb) (*gb)[t * n + k] += ghk * dt * ut;
          du += ghk * dt * B[t * n + k];
          gh[hk] = ghk * decay;
        }
        if (gu) (*gu)[t * d + i] += du;
        if (gd) (*gd)[t * d + i] += ddelta;
      }
    }
  });
  return out;
}

Tensor causal_conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, Direction direction) {
  require(x.rank() == 2 && weight.rank() == 2, "causal_conv1d: x must be [L][d], weight [d][K]");
  const std::size_t L = x.dim(0), d = x.dim(1), K = weight.dim(1);
  require(weight.dim(0) == d && bias.size() == d, "causal_conv1d: channel mismatch");
  const bool fwd = direction == Direction::kForward;
  // Source token for tap k at time t, or -1 when it falls off the sequence.
  auto source = [L, K, fwd](std::size_t t, std::size_t k) -> long {
    const long lag = static_cast<long>(K - 1 - k);
    const long s = fwd ? static_cast<long>(t) - lag : static_cast<long>(t) + lag;
    return (s < 0 || s >= static_cast<long>(L)) ? -1 : s;
  };
  std::vector<double> y(L * d);
  const auto X = x.data();
  const auto W = weight.data();
  const auto Bv = bias.data();
  for (std::size_t t = 0; t < L; ++t) {
    for (std::size_t i = 0; i < d; ++i) {
      double acc = Bv[i];
      for (std::size_t k = 0; k < K; ++k) {
        const long s = source(t, k);
        if (s >= 0) acc += W[i * K + k] * X[static_cast<std::size_t>(s) * d + i];
      }
      y[t * d + i] = acc;
    }
  }
  Tensor out(x.shape(), std::move(y));
  tensor::check_finite(out, "causal_conv1d");
  if (!tensor::should_record({x, weight, bias})) return out;
  auto xi = x.shared(), wi = weight.shared(), bi = bias.shared(), yi = out.shared();
  const Tensor inputs[] = {x, weight, bias};
  tensor::active_tape()->record(inputs, out, [=] {
    auto* gx = tensor::grad_sink(xi);
    auto* gw = tensor::grad_sink(wi);
    auto* gb = tensor::grad_sink(bi);
    const auto& gy = yi->grad;
    for (std::size_t t = 0; t < L; ++t) {
      for (std::size_t i = 0; i < d; ++i) {
        const double g = gy[t * d + i];
        if (gb) (*gb)[i] += g;
        for (std::size_t k = 0; k < K; ++k) {
          const long s = source(t, k);
          if (s < 0) continue;
          const std::size_t si = static_cast<std::size_t>(s) * d + i;
          if (gx) (*gx)[si] += wi->data[i * K + k] * g;
          if (gw) (*gw)[i * K + k] += xi->data[si] * g;
        }
      }
    }
  });
  return out;
}

}  // namespace millimamba::encoder
