#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include "logrhythm/signals.hpp"
#include "logrhythm/tensor.hpp"

namespace logrhythm::detail {
class Fft;
}

namespace logrhythm::cqt {

enum class Window { hann };

struct CqtConfig {
  double f_min = 0.5;           // Hz
  double f_max = 16.0;          // Hz
  int bins_per_octave = 24;
  double signal_rate_hz = 100.0;
  int hop_frames = 10;
  /// Extra bandwidth in Hz added to every bin; shortens low-frequency
  /// windows (better time resolution) while barely touching high bins.
  double tf_tradeoff = 0.0;
  /// Window length in cycles of the bin frequency.
  double cycles = 4.0;
  Window window = Window::hann;
  /// Spectral-kernel entries below this fraction of the atom peak are dropped.
  double kernel_threshold = 1e-4;

  void validate() const;
  std::size_t n_bins() const;
  double bin_frequency(std::size_t k) const;
  /// Window length in samples for bin k, round(cycles * rate / (f_k + tf_tradeoff)).
  std::size_t window_length(std::size_t k) const;
};

/// Precomputed Brown-Puckette kernel: every bin's windowed complex atom is
/// stored as a sparse vector in the DFT domain of one analysis segment.
class CqtKernel {
 public:
  struct SparseAtom {
    std::vector<std::size_t> index;
    std::vector<std::complex<double>> value;  // conj(DFT(atom)) / fft_size
  };

  const CqtConfig& config() const { return config_; }
  std::size_t n_bins() const { return bin_freqs_.size(); }
  std::size_t fft_size() const { return fft_size_; }
  const std::vector<double>& bin_freqs() const { return bin_freqs_; }
  const std::vector<std::size_t>& window_lengths() const { return window_lengths_; }
  const std::vector<SparseAtom>& atoms() const { return atoms_; }
  std::size_t longest_window() const { return window_lengths_.front(); }

  /// Time-domain atom of bin k: index j corresponds to offset j - half from
  /// the frame center, half = window_length(k) / 2.
  std::vector<std::complex<double>> time_atom(std::size_t k) const;

 private:
  friend CqtKernel plan(const CqtConfig&, std::size_t);
  CqtConfig config_;
  std::size_t fft_size_ = 0;
  std::vector<double> bin_freqs_;
  std::vector<std::size_t> window_lengths_;
  std::vector<SparseAtom> atoms_;
  std::shared_ptr<const detail::Fft> fft_;

 public:
  const detail::Fft& fft() const { return *fft_; }
};

/// Complex constant-Q coefficients, channels x frames x bins. Phase is
/// referenced to the frame center: a cosine peaking at a frame center has
/// phase 0 there, and phase grows as 2 pi f (t - t_peak).
struct Rhythmogram {
  std::size_t channels = 0;
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::size_t n_samples = 0;  // length of the analysed signal
  std::vector<std::complex<double>> coeffs;
  std::vector<double> frame_times;
  std::vector<double> bin_freqs;
  CqtConfig config;

  std::complex<double>& at(std::size_t c, std::size_t m, std::size_t k) {
    return coeffs[(c * frames + m) * bins + k];
  }
  const std::complex<double>& at(std::size_t c, std::size_t m, std::size_t k) const {
    return coeffs[(c * frames + m) * bins + k];
  }

  /// |X| as a channels x frames x bins tensor.
  Tensor magnitude() const;
  /// arg(X) in (-pi, pi], same layout.
  Tensor phase() const;
};

struct InverseOptions {
  /// Conjugate-gradient refinement steps after the block-preconditioned
  /// synthesis; 0 keeps the preconditioned synthesis alone.
  int max_iterations = 16;
  /// Stop once the normal-equation residual drops below this fraction of
  /// the synthesized right-hand side.
  double tolerance = 1e-9;
  /// When band_high_hz > 0 the reconstruction is further restricted to
  /// frequencies in [band_low_hz, band_high_hz]. Coefficients that were
  /// masked to a bin range are only consistent with a signal in that range.
  double band_low_hz = 0.0;
  double band_high_hz = 0.0;
};

CqtKernel plan(const CqtConfig& config, std::size_t n_frames);

/// Number of analysis frames for a signal of n_samples at the given hop.
std::size_t frame_count(std::size_t n_samples, int hop_frames);

Rhythmogram forward(const ActivationChannels& channels, const CqtKernel& kernel);

/// Least-squares reconstruction of the (zero-mean) signals from the
/// coefficients, restricted to the transform's passband: frequencies where
/// the summed atom response is at least 1% of its peak. Signals whose
/// spectrum lies inside that band (smoothly enveloped in-band sinusoids, for
/// instance) are recovered to within solver tolerance; content outside it,
/// such as the broadband edges of a hard-truncated signal, is not.
ActivationChannels inverse(const Rhythmogram& rg, const CqtKernel& kernel,
                           const InverseOptions& options = {});

/// Inverse of a single channel.
std::vector<double> inverse_channel(const Rhythmogram& rg, std::size_t channel,
                                    const CqtKernel& kernel,
                                    const InverseOptions& options = {});

/// round(bpo * log2(f / f_min)), ties toward the higher bin.
std::size_t bin_of_frequency(const CqtConfig& config, double f);

/// Shifts the last (bin) axis by s bins (positive = toward higher bins),
/// zero-filling vacated bins.
Tensor shift_bins(const Tensor& mag, int s);

/// Frequency shift used for harmonic h: floor(log2(h) * bpo).
int harmonic_shift(int h, int bins_per_octave);

/// Stacks shift_bins(mag, -harmonic_shift(h)) for every h along a new
/// leading axis, so bin k of layer h holds the value at harmonic h of bin k.
Tensor harmonic_stack(const Tensor& mag, const std::vector<int>& harmonics,
                      int bins_per_octave);

/// Moving average along the frame axis (second-to-last) with a centered
/// window of window_frames; the output keeps frames - window_frames + 1
/// frames, so a full-length window collapses to one frame.
Tensor avg_pool_time(const Tensor& mag, std::size_t window_frames);

}  // namespace logrhythm::cqt
