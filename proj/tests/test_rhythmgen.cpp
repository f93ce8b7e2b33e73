#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "logrhythm/rhythmgen.hpp"

using namespace logrhythm;
using namespace logrhythm::rhythmgen;

namespace {

std::set<double> positions(const DrumPattern& p, std::size_t channel) {
  std::set<double> out;
  for (const auto& e : p.events) {
    if (e.channel == channel) out.insert(e.position.value());
  }
  return out;
}

// Indices of strict local maxima above half the channel peak.
std::vector<std::size_t> pulse_peaks(std::span<const double> x) {
  const double top = *std::max_element(x.begin(), x.end());
  std::vector<std::size_t> out;
  for (std::size_t n = 1; n + 1 < x.size(); ++n) {
    if (x[n] > 0.5 * top && x[n] > x[n - 1] && x[n] >= x[n + 1]) out.push_back(n);
  }
  return out;
}

double rms_diff(std::span<const double> a, std::span<const double> b, std::size_t lo,
                std::size_t hi) {
  double acc = 0.0;
  for (std::size_t n = lo; n < hi; ++n) acc += (a[n] - b[n]) * (a[n] - b[n]);
  return std::sqrt(acc / static_cast<double>(hi - lo));
}

}  // namespace

TEST_CASE("standard pattern layout") {
  const auto p = standard_pattern();
  CHECK(p.channels() == 3);
  CHECK(p.beats_per_measure == 4);
  CHECK(p.pattern_length == Rational(4));
  CHECK(positions(p, 0) == std::set<double>{0.0, 2.0});
  CHECK(positions(p, 1) == std::set<double>{1.0, 3.0});
  CHECK(positions(p, 2) == std::set<double>{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5});
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("rational parsing") {
  CHECK(Rational::parse("2/3") == Rational(2, 3));
  CHECK(Rational::parse("4") == Rational(4));
  CHECK(Rational::parse("0.75") == Rational(3, 4));
  CHECK_THROWS_AS(Rational::parse("x"), std::invalid_argument);
  CHECK_THROWS_AS(Rational(1, 0), std::invalid_argument);
}

TEST_CASE("pattern validation") {
  auto p = standard_pattern();
  p.events.push_back({0, Rational(4), 1.0});
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = standard_pattern();
  p.events.push_back({5, Rational(1), 1.0});
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = standard_pattern();
  p.events.push_back({0, Rational(1), 0.0});
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("beat pulses 50 frames apart at 120 BPM") {
  RenderConfig rc;
  auto [act, ann] = render(standard_pattern(), rc);
  // Kick plus snare give one pulse per beat.
  std::vector<double> beat(act.frames);
  for (std::size_t n = 0; n < act.frames; ++n) beat[n] = act.at(0, n) + act.at(1, n);
  const auto peaks = pulse_peaks(beat);
  REQUIRE(peaks.size() >= 60);
  for (std::size_t i = 1; i < peaks.size(); ++i) CHECK(peaks[i] - peaks[i - 1] == 50);
  CHECK(ann.beat_times.size() == 17 * 4);
  CHECK(ann.downbeat_times.size() == 17);
  CHECK_NOTHROW(ann.validate());
}

TEST_CASE("noiseless render is zero between pulses") {
  RenderConfig rc;
  auto act = render(standard_pattern(), rc).first;
  // Hi-hat pulses every 25 frames, three samples wide.
  for (std::size_t n = 0; n < act.frames; ++n) {
    const std::size_t phase = n % 25;
    if (phase >= 2 && phase <= 23) {
      for (std::size_t c = 0; c < 3; ++c) CHECK(act.at(c, n) == 0.0);
    }
  }
}

TEST_CASE("render is deterministic per seed") {
  RenderConfig rc;
  rc.noise_level = 0.15;
  rc.rng_seed = 7;
  const auto a = render(standard_pattern(), rc).first;
  const auto b = render(standard_pattern(), rc).first;
  CHECK(a.data == b.data);
  rc.rng_seed = 8;
  const auto c = render(standard_pattern(), rc).first;
  CHECK(a.data != c.data);
  for (double v : a.data) CHECK(v >= 0.0);
}

TEST_CASE("render is periodic per measure without noise") {
  RenderConfig rc;
  rc.tempo_bpm = 100.0;  // 240 frames per measure; the last pulse tail is cut
  const auto act = render(standard_pattern(), rc).first;
  for (std::size_t c = 0; c < act.channels; ++c) {
    for (std::size_t n = 240; n + 240 + 2 < act.frames; ++n) {
      CHECK(act.at(c, n) == act.at(c, n + 240));
    }
  }
}

TEST_CASE("render rejects bad configs") {
  RenderConfig rc;
  rc.tempo_bpm = 0.0;
  CHECK_THROWS_AS(render(standard_pattern(), rc), std::invalid_argument);
  rc = {};
  rc.tempo_bpm = 4000.0;  // one beat spans 1.5 frames
  CHECK_THROWS_AS(render(standard_pattern(), rc), std::invalid_argument);
  rc = {};
  rc.noise_level = 1.0;
  CHECK_THROWS_AS(render(standard_pattern(), rc), std::invalid_argument);
  rc = {};
  rc.onset_width_frames = 0;
  CHECK_THROWS_AS(render(standard_pattern(), rc), std::invalid_argument);
}

TEST_CASE("time_scale identity and spacing") {
  RenderConfig rc;
  const auto act = render(standard_pattern(), rc).first;
  CHECK(time_scale(act, Rational(1)).data == act.data);

  const auto slow = time_scale(act, Rational(2, 3));
  std::vector<double> beat(slow.frames);
  for (std::size_t n = 0; n < slow.frames; ++n) beat[n] = slow.at(0, n) + slow.at(1, n);
  const auto peaks = pulse_peaks(beat);
  REQUIRE(peaks.size() >= 60);
  for (std::size_t i = 1; i < peaks.size(); ++i) {
    CHECK(static_cast<double>(peaks[i] - peaks[i - 1]) == doctest::Approx(75.0).epsilon(0.02));
  }
  CHECK_THROWS_AS(time_scale(act, std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(time_scale(act, 0.0), std::invalid_argument);
}

TEST_CASE("time_scale round trip") {
  // At 100 BPM every event sits on an even frame, so halving keeps every
  // kink of the piecewise-linear pulses and doubling restores them.
  RenderConfig rc;
  rc.tempo_bpm = 100.0;
  const auto act = render(standard_pattern(), rc).first;
  for (const auto& [there, back] :
       std::vector<std::pair<Rational, Rational>>{{Rational(2), Rational(1, 2)},
                                                  {Rational(1, 2), Rational(2)},
                                                  {Rational(2, 3), Rational(3, 2)}}) {
    const auto rt = time_scale(time_scale(act, there), back);
    REQUIRE(rt.frames + 4 >= act.frames);
    for (std::size_t c = 0; c < act.channels; ++c) {
      CHECK(rms_diff(rt.channel(c), act.channel(c), 10, act.frames - 10) <= 1e-6);
    }
  }
}

TEST_CASE("reversed pattern mirrors positions") {
  const auto r = reversed(standard_pattern());
  CHECK(positions(r, 1) == std::set<double>{1.0, 3.0});
  CHECK(positions(r, 0) == std::set<double>{0.0, 2.0});
  const auto corpus = pattern_corpus();
  const auto fz = reversed(corpus[4].second);
  CHECK(positions(fz, 0) != positions(corpus[4].second, 0));
}

TEST_CASE("pattern corpus") {
  const auto corpus = pattern_corpus();
  CHECK(corpus.size() == 10);
  std::set<std::string> names;
  for (const auto& [name, p] : corpus) {
    CHECK_NOTHROW(p.validate());
    CHECK(p.channels() == 3);
    names.insert(name);
  }
  CHECK(names.size() == 10);
  CHECK(corpus.front().second.events.size() == standard_pattern().events.size());
}
