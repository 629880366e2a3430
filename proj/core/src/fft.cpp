#include "millimamba/fft.hpp"

#include <algorithm>
#include <numbers>
#include <utility>

#include "millimamba/error.hpp"

namespace millimamba::dsp {

FftPlan::FftPlan(std::size_t n) : n_(n), twiddles_(n) {
  require(n > 0, "FftPlan: length must be positive");
  for (std::size_t k = 0; k < n; ++k) {
    twiddles_[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
  }
  if (is_power_of_two(n)) {
    bit_reverse_.resize(n);
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1U) << (bits - 1 - b);
      bit_reverse_[i] = r;
    }
  }
}

void FftPlan::forward(std::span<Complex> data) const {
  require(data.size() == n_, "FftPlan::forward: length mismatch");
  if (n_ == 1) return;
  if (bit_reverse_.empty()) {
    std::vector<Complex> out(n_);
    for (std::size_t m = 0; m < n_; ++m) {
      Complex acc{};
      std::size_t idx = 0;  // n*m mod N, kept exact
      for (std::size_t k = 0; k < n_; ++k) {
        acc += data[k] * twiddles_[idx];
        idx += m;
        if (idx >= n_) idx -= n_;
      }
      out[m] = acc;
    }
    std::copy(out.begin(), out.end(), data.begin());
    return;
  }
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t r = bit_reverse_[i];
    if (i < r) std::swap(data[i], data[r]);
  }
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n_ / len;
    for (std::size_t start = 0; start < n_; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex t = twiddles_[k * step] * data[start + k + half];
        const Complex u = data[start + k];
        data[start + k] = u + t;
        data[start + k + half] = u - t;
      }
    }
  }
}

std::vector<Complex> fft_1d(std::span<const Complex> x, std::size_t n_out) {
  require(n_out >= x.size(), "fft_1d: output length shorter than input");
  require(n_out > 0, "fft_1d: empty transform");
  std::vector<Complex> y(n_out);
  std::copy(x.begin(), x.end(), y.begin());
  FftPlan(n_out).forward(y);
  return y;
}

}  // namespace millimamba::dsp
