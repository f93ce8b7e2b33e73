#include "logrhythm/rhythmgen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace logrhythm {

ActivationChannels::ActivationChannels(std::size_t n_channels, std::size_t n_frames,
                                       double rate)
    : channels(n_channels),
      frames(n_frames),
      signal_rate_hz(rate),
      data(n_channels * n_frames, 0.0),
      channel_names(n_channels) {
  for (std::size_t c = 0; c < n_channels; ++c) channel_names[c] = "ch" + std::to_string(c);
}

void ActivationChannels::validate() const {
  if (!(signal_rate_hz > 0.0) || !std::isfinite(signal_rate_hz)) {
    throw std::invalid_argument("activations: signal rate must be positive");
  }
  if (channels == 0 || frames == 0) {
    throw std::invalid_argument("activations: need at least one channel and one frame");
  }
  if (data.size() != channels * frames) {
    throw std::invalid_argument("activations: data size does not match shape");
  }
  for (double v : data) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("activations: values must be finite and non-negative");
    }
  }
}

void BeatAnnotations::validate() const {
  auto increasing = [](const std::vector<double>& t) {
    return std::adjacent_find(t.begin(), t.end(), std::greater_equal<>()) == t.end();
  };
  if (!increasing(beat_times) || !increasing(downbeat_times)) {
    throw std::invalid_argument("annotations: times must be strictly increasing");
  }
  for (double d : downbeat_times) {
    if (!std::binary_search(beat_times.begin(), beat_times.end(), d)) {
      throw std::invalid_argument("annotations: downbeat is not a beat");
    }
  }
}

}  // namespace logrhythm

namespace logrhythm::rhythmgen {

Rational::Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
  if (d == 0) throw std::invalid_argument("Rational: zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

Rational Rational::parse(std::string_view text) {
  auto parse_int = [](std::string_view s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw std::invalid_argument("Rational: cannot parse '" + std::string(s) + "'");
    }
    return v;
  };
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    return Rational(parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1)));
  }
  if (const auto dot = text.find('.'); dot != std::string_view::npos) {
    const std::string_view frac = text.substr(dot + 1);
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    const std::string digits = std::string(text.substr(0, dot)) + std::string(frac);
    return Rational(parse_int(digits), scale);
  }
  return Rational(parse_int(text));
}

Rational operator+(Rational a, Rational b) {
  return Rational(a.num * b.den + b.num * a.den, a.den * b.den);
}
Rational operator*(Rational a, Rational b) { return Rational(a.num * b.num, a.den * b.den); }
bool operator<(Rational a, Rational b) { return a.num * b.den < b.num * a.den; }

void DrumPattern::validate() const {
  if (!(Rational(0) < pattern_length)) {
    throw std::invalid_argument("pattern: length must be positive");
  }
  if (beats_per_measure < 1) throw std::invalid_argument("pattern: beats_per_measure < 1");
  if (channel_names.empty()) throw std::invalid_argument("pattern: no channels");
  for (const auto& e : events) {
    if (e.channel >= channel_names.size()) {
      throw std::invalid_argument("pattern: event channel out of range");
    }
    if (e.position < Rational(0) || !(e.position < pattern_length)) {
      throw std::invalid_argument("pattern: event position outside [0, length)");
    }
    if (!(e.amplitude > 0.0 && e.amplitude <= 1.0)) {
      throw std::invalid_argument("pattern: amplitude outside (0, 1]");
    }
  }
}

void RenderConfig::validate() const {
  if (!(tempo_bpm > 0.0) || !std::isfinite(tempo_bpm)) {
    throw std::invalid_argument("render: tempo must be positive");
  }
  if (!(signal_rate_hz > 0.0) || !std::isfinite(signal_rate_hz)) {
    throw std::invalid_argument("render: signal rate must be positive");
  }
  if (n_measures < 1) throw std::invalid_argument("render: need at least one measure");
  if (!(noise_level >= 0.0 && noise_level < 1.0)) {
    throw std::invalid_argument("render: noise level outside [0, 1)");
  }
  if (onset_width_frames < 1) throw std::invalid_argument("render: onset width < 1");
  if (60.0 / tempo_bpm * signal_rate_hz < 2.0) {
    throw std::invalid_argument("render: one beat spans fewer than 2 frames");
  }
}

namespace {

constexpr std::size_t kKick = 0;
constexpr std::size_t kSnare = 1;
constexpr std::size_t kHat = 2;

DrumPattern kit_pattern(Rational length, int beats_per_measure) {
  DrumPattern p;
  p.pattern_length = length;
  p.beats_per_measure = beats_per_measure;
  p.channel_names = {"kick", "snare", "hihat"};
  return p;
}

void hits(DrumPattern& p, std::size_t channel, std::initializer_list<Rational> positions,
          double amplitude) {
  for (const auto& pos : positions) p.events.push_back({channel, pos, amplitude});
}

void grid(DrumPattern& p, std::size_t channel, Rational step, Rational offset,
          double amplitude) {
  for (Rational pos = offset; pos < p.pattern_length; pos = pos + step) {
    p.events.push_back({channel, pos, amplitude});
  }
}

// Uniform double in [0, 1) from the top 53 bits; identical across platforms.
double unit_uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace

DrumPattern standard_pattern() {
  DrumPattern p = kit_pattern(Rational(4), 4);
  hits(p, kKick, {Rational(0)}, 1.0);
  hits(p, kKick, {Rational(2)}, 0.7);
  hits(p, kSnare, {Rational(1), Rational(3)}, 0.9);
  grid(p, kHat, Rational(1, 2), Rational(0), 0.5);
  return p;
}

std::pair<ActivationChannels, BeatAnnotations> render(const DrumPattern& pattern,
                                                      const RenderConfig& config) {
  pattern.validate();
  config.validate();

  const double beat_sec = 60.0 / config.tempo_bpm;
  const std::int64_t total_beats =
      static_cast<std::int64_t>(config.n_measures) * pattern.beats_per_measure;
  const double duration = static_cast<double>(total_beats) * beat_sec;
  const auto n_frames = static_cast<std::size_t>(
      std::max(1.0, std::ceil(duration * config.signal_rate_hz - 1e-9)));

  ActivationChannels out(pattern.channels(), n_frames, config.signal_rate_hz);
  out.channel_names = pattern.channel_names;

  // Triangle with support of onset_width_frames samples around an integer
  // center: half width h = (w + 1) / 2 so the outermost samples are nonzero.
  const double half_width = (config.onset_width_frames + 1) / 2.0;
  const double len_beats = pattern.pattern_length.value();
  const auto repeats = static_cast<std::int64_t>(
      std::ceil(static_cast<double>(total_beats) / len_beats - 1e-12));

  for (std::int64_t r = 0; r < repeats; ++r) {
    for (const auto& e : pattern.events) {
      const double beat = static_cast<double>(r) * len_beats + e.position.value();
      if (beat >= static_cast<double>(total_beats) - 1e-12) continue;
      // Multiply before dividing and snap, so grid-aligned events land on
      // exact integer frames and the render stays exactly periodic.
      double center = beat * 60.0 * config.signal_rate_hz / config.tempo_bpm;
      if (std::abs(center - std::round(center)) < 1e-9) center = std::round(center);
      const auto lo = static_cast<std::int64_t>(std::ceil(center - half_width));
      const auto hi = static_cast<std::int64_t>(std::floor(center + half_width));
      for (std::int64_t n = std::max<std::int64_t>(lo, 0);
           n <= hi && n < static_cast<std::int64_t>(n_frames); ++n) {
        const double v = 1.0 - std::abs(static_cast<double>(n) - center) / half_width;
        if (v > 0.0) out.at(e.channel, static_cast<std::size_t>(n)) += e.amplitude * v;
      }
    }
  }

  if (config.noise_level > 0.0) add_noise(out, config.noise_level, config.rng_seed);

  BeatAnnotations ann;
  ann.beat_times.reserve(static_cast<std::size_t>(total_beats));
  for (std::int64_t b = 0; b < total_beats; ++b) {
    const double t = static_cast<double>(b) * beat_sec;
    ann.beat_times.push_back(t);
    if (b % pattern.beats_per_measure == 0) ann.downbeat_times.push_back(t);
  }
  return {std::move(out), std::move(ann)};
}

void add_noise(ActivationChannels& channels, double level, std::uint64_t seed) {
  if (!(level >= 0.0 && level < 1.0)) throw std::invalid_argument("noise level outside [0, 1)");
  std::mt19937_64 gen(seed);
  for (double& v : channels.data) v = std::max(0.0, v + level * unit_uniform(gen));
}

ActivationChannels time_scale(const ActivationChannels& channels, double ratio) {
  if (!std::isfinite(ratio)) throw std::invalid_argument("time_scale: non-finite ratio");
  if (!(ratio > 0.0)) throw std::invalid_argument("time_scale: ratio must be positive");
  if (channels.frames == 0) return channels;

  const double last = static_cast<double>(channels.frames - 1);
  const auto n_out = static_cast<std::size_t>(std::floor(last / ratio + 1e-9)) + 1;
  ActivationChannels out(channels.channels, n_out, channels.signal_rate_hz);
  out.channel_names = channels.channel_names;
  for (std::size_t c = 0; c < channels.channels; ++c) {
    const auto src = channels.channel(c);
    auto dst = out.channel(c);
    for (std::size_t n = 0; n < n_out; ++n) {
      const double pos = std::min(static_cast<double>(n) * ratio, last);
      const auto i0 = static_cast<std::size_t>(std::floor(pos));
      const double frac = pos - static_cast<double>(i0);
      const double a = src[i0];
      const double b = i0 + 1 < channels.frames ? src[i0 + 1] : a;
      dst[n] = frac == 0.0 ? a : a + frac * (b - a);
    }
  }
  return out;
}

ActivationChannels time_scale(const ActivationChannels& channels, Rational ratio) {
  return time_scale(channels, ratio.value());
}

DrumPattern reversed(const DrumPattern& pattern) {
  DrumPattern out = pattern;
  for (auto& e : out.events) {
    if (e.position == Rational(0)) continue;
    e.position = pattern.pattern_length + e.position * Rational(-1);
  }
  return out;
}

std::vector<std::pair<std::string, DrumPattern>> pattern_corpus() {
  std::vector<std::pair<std::string, DrumPattern>> corpus;
  corpus.emplace_back("rock", standard_pattern());

  {
    DrumPattern p = kit_pattern(Rational(4), 4);
    grid(p, kKick, Rational(1), Rational(0), 1.0);
    hits(p, kSnare, {Rational(1), Rational(3)}, 0.8);
    grid(p, kHat, Rational(1), Rational(1, 2), 0.6);
    corpus.emplace_back("four_on_the_floor", std::move(p));
  }
  {
    DrumPattern p = kit_pattern(Rational(4), 4);
    hits(p, kKick, {Rational(0)}, 1.0);
    hits(p, kKick, {Rational(5, 2)}, 0.6);
    hits(p, kSnare, {Rational(2)}, 1.0);
    grid(p, kHat, Rational(1, 2), Rational(0), 0.4);
    corpus.emplace_back("half_time", std::move(p));
  }
  {
    DrumPattern p = kit_pattern(Rational(4), 4);
    hits(p, kKick, {Rational(0), Rational(3, 4), Rational(5, 2)}, 1.0);
    hits(p, kSnare, {Rational(1), Rational(3)}, 1.0);
    hits(p, kSnare, {Rational(15, 4)}, 0.4);
    grid(p, kHat, Rational(1, 4), Rational(0), 0.35);
    corpus.emplace_back("funk_sixteenths", std::move(p));
  }
  {
    DrumPattern p = kit_pattern(Rational(4), 4);
    hits(p, kKick, {Rational(0), Rational(3, 2), Rational(2), Rational(7, 2)}, 0.9);
    hits(p, kSnare,
         {Rational(0), Rational(3, 4), Rational(3, 2), Rational(5, 2), Rational(13, 4)}, 0.7);
    grid(p, kHat, Rational(1, 2), Rational(0), 0.4);
    corpus.emplace_back("bossa", std::move(p));
  }
  {
    DrumPattern p = kit_pattern(Rational(4), 4);
    hits(p, kKick, {Rational(2)}, 1.0);
    hits(p, kSnare, {Rational(2)}, 0.9);
    grid(p, kHat, Rational(1), Rational(1, 2), 0.6);
    corpus.emplace_back("one_drop", std::move(p));
  }
  {
    DrumPattern p = kit_pattern(Rational(4), 4);
    hits(p, kKick, {Rational(0)}, 1.0);
    hits(p, kKick, {Rational(2)}, 0.8);
    hits(p, kSnare, {Rational(1), Rational(3)}, 0.9);
    grid(p, kHat, Rational(1), Rational(0), 0.6);
    grid(p, kHat, Rational(1), Rational(2, 3), 0.4);
    corpus.emplace_back("shuffle", std::move(p));
  }
  {
    DrumPattern p = kit_pattern(Rational(4), 4);
    hits(p, kKick, {Rational(0), Rational(2)}, 1.0);
    hits(p, kSnare,
         {Rational(0), Rational(1, 2), Rational(3, 4), Rational(1), Rational(3, 2),
          Rational(2), Rational(5, 2), Rational(11, 4), Rational(3), Rational(7, 2)},
         0.7);
    hits(p, kHat, {Rational(0)}, 0.8);
    corpus.emplace_back("march", std::move(p));
  }
  {
    DrumPattern p = kit_pattern(Rational(4), 4);
    hits(p, kKick, {Rational(0), Rational(1, 2), Rational(9, 4), Rational(5, 2)}, 1.0);
    hits(p, kSnare, {Rational(1), Rational(7, 4), Rational(3)}, 0.9);
    hits(p, kSnare, {Rational(15, 4)}, 0.5);
    grid(p, kHat, Rational(1, 2), Rational(0), 0.45);
    corpus.emplace_back("breakbeat", std::move(p));
  }
  {
    DrumPattern p = kit_pattern(Rational(3), 3);
    hits(p, kKick, {Rational(0)}, 1.0);
    hits(p, kSnare, {Rational(1), Rational(2)}, 0.7);
    grid(p, kHat, Rational(1, 2), Rational(0), 0.4);
    corpus.emplace_back("waltz", std::move(p));
  }
  return corpus;
}

}  // namespace logrhythm::rhythmgen
