#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace logrhythm {

/// Multi-channel rhythm-accent signals (kick, snare, band flux, ...) sampled
/// at a low fixed rate. Stored channel-major.
struct ActivationChannels {
  std::size_t channels = 0;
  std::size_t frames = 0;
  double signal_rate_hz = 100.0;
  std::vector<double> data;
  std::vector<std::string> channel_names;

  ActivationChannels() = default;
  ActivationChannels(std::size_t n_channels, std::size_t n_frames, double rate);

  double& at(std::size_t ch, std::size_t n) { return data[ch * frames + n]; }
  double at(std::size_t ch, std::size_t n) const { return data[ch * frames + n]; }
  std::span<double> channel(std::size_t ch) {
    return {data.data() + ch * frames, frames};
  }
  std::span<const double> channel(std::size_t ch) const {
    return {data.data() + ch * frames, frames};
  }
  double duration() const { return static_cast<double>(frames) / signal_rate_hz; }

  /// Throws std::invalid_argument unless values are finite and non-negative,
  /// frames >= 1 and the rate is positive.
  void validate() const;
};

/// Ground-truth or estimated event times in seconds.
struct BeatAnnotations {
  std::vector<double> beat_times;
  std::vector<double> downbeat_times;

  /// Strictly increasing times; every downbeat must also be a beat.
  void validate() const;
};

}  // namespace logrhythm
