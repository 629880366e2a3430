#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace millimamba::dsp {

using Complex = std::complex<double>;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Forward DFT of a fixed length, Y(m) = sum_n x(n) exp(-j 2pi n m / N).
// Radix-2 iterative for powers of two, direct O(N^2) evaluation otherwise.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const { return n_; }
  void forward(std::span<Complex> data) const;

 private:
  std::size_t n_;
  std::vector<Complex> twiddles_;        // exp(-j 2pi k / n), k < n
  std::vector<std::size_t> bit_reverse_;
};

// Zero-pads x to n_out samples and transforms. Throws if n_out < x.size().
std::vector<Complex> fft_1d(std::span<const Complex> x, std::size_t n_out);

}  // namespace millimamba::dsp
