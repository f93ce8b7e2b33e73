#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "logrhythm/signals.hpp"

namespace logrhythm::rhythmgen {

/// Exact fraction used for metrical positions and tempo ratios.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  constexpr Rational() = default;
  Rational(std::int64_t n, std::int64_t d = 1);

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  /// Accepts "p/q", an integer, or a decimal literal such as "0.75".
  static Rational parse(std::string_view text);

  friend bool operator==(const Rational&, const Rational&) = default;
};

Rational operator+(Rational a, Rational b);
Rational operator*(Rational a, Rational b);
bool operator<(Rational a, Rational b);

struct DrumEvent {
  std::size_t channel = 0;
  Rational position;  // beats from pattern start
  double amplitude = 1.0;
};

struct DrumPattern {
  std::vector<DrumEvent> events;
  Rational pattern_length{4};
  int beats_per_measure = 4;
  std::vector<std::string> channel_names;

  std::size_t channels() const { return channel_names.size(); }
  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

struct RenderConfig {
  double tempo_bpm = 120.0;
  double signal_rate_hz = 100.0;
  int n_measures = 17;
  double noise_level = 0.0;
  int onset_width_frames = 3;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// Kick on beats 1 and 3 (downbeat accented), snare on 2 and 4, hi-hat on
/// every eighth note. One 4/4 measure.
DrumPattern standard_pattern();

/// Renders each event as a triangular pulse at position * 60 / tempo seconds,
/// tiled over n_measures, plus uniform noise in [0, noise_level].
std::pair<ActivationChannels, BeatAnnotations> render(const DrumPattern& pattern,
                                                      const RenderConfig& config);

/// Adds uniform noise in [0, level] drawn from a generator seeded with seed.
void add_noise(ActivationChannels& channels, double level, std::uint64_t seed);

/// Resamples so that the tempo of the content becomes ratio * old tempo
/// (ratio 2/3 slows down by 3/2). Linear interpolation, same sample rate.
ActivationChannels time_scale(const ActivationChannels& channels, double ratio);
ActivationChannels time_scale(const ActivationChannels& channels, Rational ratio);

/// Mirrors the pattern in time: position p becomes (length - p) mod length.
DrumPattern reversed(const DrumPattern& pattern);

/// Ten 3-channel (kick, snare, hi-hat) patterns in common styles, used for
/// fingerprint retrieval experiments. The first entry is standard_pattern().
std::vector<std::pair<std::string, DrumPattern>> pattern_corpus();

}  // namespace logrhythm::rhythmgen
