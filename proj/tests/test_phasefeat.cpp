#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>

#include "logrhythm/cqt.hpp"
#include "logrhythm/phasefeat.hpp"
#include "logrhythm/rhythmgen.hpp"

using namespace logrhythm;
using namespace logrhythm::phasefeat;
using std::numbers::pi;

namespace {

cqt::Rhythmogram random_rhythmogram(std::size_t channels, std::size_t frames, std::uint64_t seed) {
  cqt::Rhythmogram rg;
  rg.channels = channels;
  rg.frames = frames;
  rg.bins = rg.config.n_bins();
  rg.coeffs.resize(channels * frames * rg.bins);
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& z : rg.coeffs) z = {n(gen), n(gen)};
  for (std::size_t m = 0; m < frames; ++m) rg.frame_times.push_back(0.1 * m);
  for (std::size_t k = 0; k < rg.bins; ++k) rg.bin_freqs.push_back(rg.config.bin_frequency(k));
  return rg;
}

// Bins moved up by s; vacated bins are zero.
cqt::Rhythmogram shifted(const cqt::Rhythmogram& rg, std::size_t s) {
  auto out = rg;
  for (std::size_t c = 0; c < rg.channels; ++c) {
    for (std::size_t m = 0; m < rg.frames; ++m) {
      for (std::size_t k = 0; k < rg.bins; ++k) out.at(c, m, k) = k >= s ? rg.at(c, m, k - s) : 0.0;
    }
  }
  return out;
}

double wrap(double x) {
  x = std::fmod(x, 2.0 * pi);
  return x < 0.0 ? x + 2.0 * pi : x;
}

}  // namespace

TEST_CASE("phase_alignment examples") {
  CHECK(phase_alignment(1.3, 1.3) == 0.0);
  CHECK(phase_alignment(0.0, pi) == doctest::Approx(pi).epsilon(1e-15));
  CHECK(phase_alignment(0.1, 2.0 * pi - 0.1) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(phase_alignment(-0.1, 0.1) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK_THROWS_AS(phase_alignment(std::nan(""), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(phase_alignment(0.0, std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
}

TEST_CASE("phase_alignment properties") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int i = 0; i < 20000; ++i) {
    const double a = u(gen), b = u(gen), d = u(gen);
    const double x = phase_alignment(a, b);
    CHECK(x == phase_alignment(b, a));
    CHECK(x >= 0.0);
    CHECK(x <= pi);
    CHECK(phase_alignment(a + d, b + d) == doctest::Approx(x).epsilon(1e-9));
  }
}

TEST_CASE("phase_alignment_multiple examples") {
  for (double r : {1.0, 2.0, 3.0, 4.0, 6.0, 8.0}) CHECK(phase_alignment_multiple(0.0, 0.0, r) == 0.0);
  CHECK(phase_alignment_multiple(0.0, pi, 2.0) == doctest::Approx(pi).epsilon(1e-15));
  CHECK_THROWS_AS(phase_alignment_multiple(0.0, 0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(phase_alignment_multiple(std::nan(""), 0.0, 2.0), std::invalid_argument);
}

TEST_CASE("phase_alignment_multiple is time-shift invariant") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int h : {2, 3, 4, 6, 8}) {
    const double w1 = 2.0 * pi * 0.7;
    const double p1 = u(gen), pm = u(gen);
    const double x = phase_alignment_multiple(p1, pm, h);
    CHECK(x >= 0.0);
    CHECK(x <= pi);
    for (int i = 0; i < 200; ++i) {
      const double delta = u(gen);
      const double y = phase_alignment_multiple(p1 - w1 * delta, pm - h * w1 * delta, h);
      CHECK(std::abs(y - x) <= 1e-6);
    }
  }
  // Aligned analytic pair cos(2 pi (t - t0)), cos(4 pi (t - t0)) seen at t = 0.
  for (double t0 = -2.0; t0 <= 2.0; t0 += 0.037) {
    CHECK(phase_alignment_multiple(2.0 * pi * t0, 4.0 * pi * t0, 2.0) <= 1e-6);
  }
}

TEST_CASE("neighbor feature map layout") {
  const auto rg = random_rhythmogram(3, 4, 1);
  const auto fm = build_featuremap_neighbor(rg);
  CHECK(fm.n_rows() == 6);
  CHECK(fm.channel_stride == 2);
  CHECK(fm.frames() == 4);
  CHECK(fm.bins() == 121);
  CHECK(fm.valid.empty());
  CHECK(fm.rows[0] == RowTag{RowKind::magnitude, 0, 0});
  CHECK(fm.rows[1] == RowTag{RowKind::neighbor_alignment, 0, 1});
  CHECK(fm.rows[5] == RowTag{RowKind::neighbor_alignment, 2, 0});
  double peak = 0.0;
  for (std::size_t r = 0; r < 6; ++r) {
    for (std::size_t m = 0; m < 4; ++m) {
      for (std::size_t k = 0; k < 121; ++k) {
        const double v = fm.data(r, m, k);
        CHECK(v >= 0.0);
        CHECK(v <= pi + 1e-12);
        if (r % 2 == 0) peak = std::max(peak, v);
      }
    }
  }
  CHECK(peak == doctest::Approx(pi).epsilon(1e-14));
  const std::size_t c = 1, m = 2, k = 30;
  CHECK(fm.data(2, m, k) == doctest::Approx(std::abs(rg.at(c, m, k)) * fm.magnitude_scale));
  CHECK(fm.data(3, m, k) == phase_alignment(std::arg(rg.at(1, m, k)), std::arg(rg.at(2, m, k))));
  CHECK_THROWS_AS(build_featuremap_neighbor(random_rhythmogram(1, 2, 1)), std::invalid_argument);
}

TEST_CASE("identical channels align everywhere") {
  auto rg = random_rhythmogram(2, 1, 3);
  for (std::size_t k = 0; k < rg.bins; ++k) rg.at(1, 0, k) = rg.at(0, 0, k);
  const auto fm = build_featuremap_neighbor(rg);
  for (std::size_t r : {1u, 3u}) {
    for (std::size_t k = 0; k < rg.bins; ++k) CHECK(fm.data(r, 0, k) == 0.0);
  }
}

TEST_CASE("frame permutation commutes with feature assembly") {
  const auto rg = random_rhythmogram(2, 5, 4);
  auto perm = rg;
  const std::vector<std::size_t> order = {3, 0, 4, 1, 2};
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t m = 0; m < 5; ++m) {
      for (std::size_t k = 0; k < rg.bins; ++k) perm.at(c, m, k) = rg.at(c, order[m], k);
    }
  }
  const auto a = build_featuremap_multiples(rg);
  const auto b = build_featuremap_multiples(perm);
  for (std::size_t r = 0; r < a.n_rows(); ++r) {
    for (std::size_t m = 0; m < 5; ++m) {
      for (std::size_t k = 0; k < rg.bins; ++k) CHECK(b.data(r, m, k) == a.data(r, order[m], k));
    }
  }
}

TEST_CASE("bin shift equivariance") {
  auto rg = random_rhythmogram(2, 3, 6);
  // Keep the global maximum away from the top so the shift preserves the scale.
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t m = 0; m < 3; ++m) {
      for (std::size_t k = 100; k < rg.bins; ++k) rg.at(c, m, k) *= 0.01;
    }
  }
  const std::size_t s = 7;
  const auto a = build_featuremap_multiples(rg);
  const auto b = build_featuremap_multiples(shifted(rg, s));
  CHECK(a.magnitude_scale == b.magnitude_scale);
  for (std::size_t r = 0; r < a.n_rows(); ++r) {
    for (std::size_t m = 0; m < 3; ++m) {
      for (std::size_t k = 0; k + s < rg.bins; ++k) {
        if (!b.is_valid(r, k + s)) continue;
        CHECK(b.data(r, m, k + s) == a.data(r, m, k));
      }
    }
  }
}

TEST_CASE("multiples layout and boundary masking") {
  const auto rg = random_rhythmogram(2, 2, 7);
  const auto fm = build_featuremap_multiples(rg);
  CHECK(fm.channel_stride == 7);
  CHECK(fm.n_rows() == 14);
  const std::vector<int> hs = {2, 3, 4, 6, 8};
  const std::vector<std::size_t> shifts = {24, 38, 48, 62, 72};
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < hs.size(); ++i) {
      const std::size_t row = c * 7 + 2 + i;
      CHECK(fm.rows[row] == RowTag{RowKind::multiple_alignment, c, hs[i]});
      for (std::size_t k = 0; k < rg.bins; ++k) {
        const bool inside = k + shifts[i] < rg.bins;
        CHECK(fm.is_valid(row, k) == inside);
        if (!inside) {
          CHECK(fm.data(row, 0, k) == 0.0);
          CHECK(fm.data(row, 1, k) == 0.0);
        } else {
          CHECK(fm.data(row, 1, k) == phase_alignment_multiple(std::arg(rg.at(c, 1, k)),
                                                               std::arg(rg.at(c, 1, k + shifts[i])),
                                                               hs[i]));
        }
      }
    }
  }
  CHECK(fm.data(2 + 4, 0, 49) == 0.0);  // x8 partner of bin 49 would be 121
  CHECK(fm.is_valid(2 + 4, 48));
  CHECK_THROWS_AS(build_featuremap_multiples(rg, {}), std::invalid_argument);
  CHECK_THROWS_AS(build_featuremap_multiples(rg, {1}), std::invalid_argument);
}

TEST_CASE("aligned 1 Hz and 2 Hz sinusoids") {
  const std::size_t n = 2400;
  ActivationChannels a(2, n, 100.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = i / 100.0 - 0.3;
    a.at(0, i) = std::cos(2.0 * pi * t) + std::cos(4.0 * pi * t);
    a.at(1, i) = a.at(0, i);
  }
  const auto rg = cqt::forward(a, cqt::plan({}, n));
  const auto fm = build_featuremap_multiples(rg);
  for (std::size_t m = 20; m + 20 < rg.frames; ++m) CHECK(fm.data(2, m, 24) < 0.05);
}

TEST_CASE("standard pattern kick/snare alignment") {
  const auto act = rhythmgen::render(rhythmgen::standard_pattern(), {}).first;
  const auto rg = cqt::forward(act, cqt::plan({}, act.frames));
  const auto fm = build_featuremap_neighbor(rg);
  // Kick and snare alternate at the half-note rate and coincide on the beat.
  for (std::size_t m = 40; m + 40 < rg.frames; ++m) {
    CHECK(fm.data(1, m, 24) > pi - 0.15);
    CHECK(fm.data(1, m, 48) <= 0.15);
  }
}

TEST_CASE("alignment mask") {
  auto rg = random_rhythmogram(2, 1, 8);
  rg.at(0, 0, 10) *= 1e-3;
  FeatureOptions opt;
  opt.alignment_mask_level = 0.05;
  const auto fm = build_featuremap_neighbor(rg, opt);
  CHECK(fm.data(1, 0, 10) == 0.0);
  const auto open = build_featuremap_neighbor(rg);
  for (std::size_t k = 0; k < rg.bins; ++k) {
    if (fm.data(0, 0, k) >= 0.05 && fm.data(2, 0, k) >= 0.05) CHECK(fm.data(1, 0, k) == open.data(1, 0, k));
  }
}

TEST_CASE("row kind names") {
  for (auto k : {RowKind::magnitude, RowKind::neighbor_alignment, RowKind::multiple_alignment}) {
    CHECK(row_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(row_kind_from_string("phase"), std::invalid_argument);
}

TEST_CASE("time to peaks") {
  CHECK(time_to_prev_peak(0.0, 3.0) == 0.0);
  CHECK(time_to_prev_peak(pi, 1.0) == doctest::Approx(0.5));
  CHECK(time_to_next_peak(0.0, 4.0) == doctest::Approx(0.25));
  CHECK(time_to_next_peak(pi, 2.0) == doctest::Approx(0.25));
  CHECK(time_to_prev_peak(-pi / 2.0, 1.0) == doctest::Approx(0.75));
  for (double phi = 0.01; phi < 2.0 * pi; phi += 0.1) {
    CHECK(time_to_prev_peak(phi, 1.7) + time_to_next_peak(phi, 1.7) ==
          doctest::Approx(1.0 / 1.7).epsilon(1e-12));
  }
  CHECK_THROWS_AS(time_to_prev_peak(0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(time_to_next_peak(0.0, -1.0), std::invalid_argument);
}

TEST_CASE("time to previous peak from transform phases") {
  const std::size_t n = 2000;
  const double f = 2.0;
  const auto k = cqt::plan({}, n);
  for (double t0 = 0.0; t0 < 0.5; t0 += 0.043) {
    ActivationChannels a(1, n, 100.0);
    for (std::size_t i = 0; i < n; ++i) a.at(0, i) = std::cos(2.0 * pi * f * (i / 100.0 - t0));
    const auto rg = cqt::forward(a, k);
    for (std::size_t m = 45; m + 45 < rg.frames; m += 3) {
      const double t = rg.frame_times[m];
      const double want = wrap(2.0 * pi * f * (t - t0)) / (2.0 * pi * f);
      double got = time_to_prev_peak(std::arg(rg.at(0, m, 48)), f);
      // Compare on the circle of one period.
      double d = std::abs(got - want);
      d = std::min(d, 1.0 / f - d);
      CHECK(d <= 0.005);
    }
  }
}
