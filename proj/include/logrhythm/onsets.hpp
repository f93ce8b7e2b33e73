#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "logrhythm/signals.hpp"
#include "logrhythm/tensor.hpp"

namespace logrhythm::onsets {

struct AudioClip {
  std::vector<double> samples;  // mono, nominally in [-1, 1]
  double sample_rate = 44100.0;

  /// Throws std::invalid_argument unless samples are finite and the rate is
  /// at least 8000 Hz.
  void validate() const;
  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

enum class WavFormat { pcm16, float32 };

/// Reads RIFF/WAVE with PCM 16-bit or IEEE float 32-bit samples; multichannel
/// files are downmixed by averaging. Throws std::runtime_error on malformed
/// or unsupported files.
AudioClip read_wav(const std::filesystem::path& path);

/// Writes a mono file. PCM samples are clipped to [-1, 1].
void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavFormat format = WavFormat::pcm16);

struct BandSpec {
  std::vector<double> edges_hz;

  /// Six groups of Bark critical bands between 40 Hz and 16 kHz, with the top
  /// edge lowered to just under Nyquist for low sample rates.
  static BandSpec bark6(double sample_rate);
  std::size_t bands() const { return edges_hz.empty() ? 0 : edges_hz.size() - 1; }
  void validate(double sample_rate) const;
};

struct FluxConfig {
  double window_seconds = 0.046;
  double frame_rate_hz = 100.0;
  /// Added to band energies before the log.
  double energy_floor = 1e-12;
};

/// Half-wave rectified first difference of per-band log energy from a Hann
/// windowed short-time spectrum. Frame n covers samples starting at
/// n * hop, so frame times lag the window center by half a window. Frame 0
/// has zero flux.
ActivationChannels band_flux(const AudioClip& audio, const BandSpec& bands,
                             const FluxConfig& config = {});

struct OnsetFilterConfig {
  int bins_per_octave = 60;
  double f_low_hz = 32.7;  // C1
  int octaves = 8;
  double frame_rate_hz = 100.0;
  double window_seconds = 0.046;
  /// Magnitudes (as sinusoid amplitudes) are compressed with log(1 + gain x).
  double log_gain = 100.0;
  /// Difference of Gaussians across pitch, in bins.
  double pitch_sigma_narrow = 1.5;
  double pitch_sigma_wide = 4.0;
  /// Weight of the wide Gaussian; below 1 the profile keeps a positive net
  /// area, so broad octave readouts do not cancel it.
  double pitch_surround_weight = 0.5;
  std::size_t pitch_half_extent = 12;
  /// First Gaussian derivative across time, in frames.
  double time_sigma = 2.0;
  std::size_t time_half_extent = 6;
  /// Sparse harmonic copies: relative bin offsets and weights. These
  /// approximate a harmonic template; they are not measured values.
  std::vector<int> copy_offsets = {0, 60, 95, 120};
  std::vector<double> copy_weights = {1.0, 0.5, 0.33, 0.25};
  /// First readout center (C2) and the number of octave readouts.
  double readout_low_hz = 65.41;
  int readouts = 6;

  void validate() const;
};

/// Pitch x time kernel: the DoG profile placed at every copy offset, times
/// the time derivative. Rows cover [min offset - half extent, max offset +
/// half extent]; columns cover [-time_half_extent, time_half_extent] frames,
/// positive lags in the future.
struct OnsetFilter {
  Tensor kernel;  // pitch rows x time columns
  int row_origin = 0;  // pitch offset of row 0
  std::vector<double> pitch_profile;
  std::vector<double> time_profile;

  static OnsetFilter build(const OnsetFilterConfig& config);
};

/// Log-compressed magnitude on a log-frequency axis: octaves * bpo bins from
/// f_low_hz, frames at frame_rate_hz (window starts at n * hop). Laid out
/// pitch bins x frames, like OnsetFilter::kernel.
Tensor log_spectrogram(const AudioClip& audio, const OnsetFilterConfig& config);

/// Filter response over the log spectrogram read out through triangular
/// octave filters, before rectification. Channels x frames.
ActivationChannels pitched_onset_response(const AudioClip& audio,
                                          const OnsetFilterConfig& config = {});

/// Filter response rectified per pitch bin, then read out per octave.
ActivationChannels pitched_onsets(const AudioClip& audio, const OnsetFilterConfig& config = {});

}  // namespace logrhythm::onsets
