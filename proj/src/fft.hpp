#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace logrhythm::detail {

/// In-place complex DFT of fixed length backed by FFTW. Plans are created
/// once (under a global lock, the FFTW planner is not reentrant) and can be
/// executed concurrently on distinct buffers.
class Fft {
 public:
  explicit Fft(std::size_t n);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  std::size_t size() const { return n_; }

  /// X[l] = sum_j x[j] exp(-2 pi i j l / n)
  void forward(std::span<std::complex<double>> buf) const;
  /// x[j] = sum_l X[l] exp(+2 pi i j l / n), unnormalized.
  void backward(std::span<std::complex<double>> buf) const;

 private:
  std::size_t n_;
  void* forward_plan_ = nullptr;
  void* backward_plan_ = nullptr;
};

std::size_t next_pow2(std::size_t n);
/// Smallest integer >= n with no prime factor above 5.
std::size_t next_smooth(std::size_t n);

}  // namespace logrhythm::detail
