#include "logrhythm/phasefeat.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace logrhythm::phasefeat {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  return w >= kTwoPi ? 0.0 : w;
}

double fold(double c) { return c < kPi ? c : kTwoPi - c; }

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

double magnitude_scale(const cqt::Rhythmogram& rg) {
  double peak = 0.0;
  for (const auto& c : rg.coeffs) peak = std::max(peak, std::abs(c));
  return peak > 0.0 ? kPi / peak : 1.0;
}

struct Assembly {
  FeatureMap map;
  double scale;
};

Assembly start(const cqt::Rhythmogram& rg, std::size_t stride) {
  if (rg.channels < 2) throw std::invalid_argument("featuremap: need at least 2 channels");
  Assembly a;
  a.scale = magnitude_scale(rg);
  a.map.channel_stride = stride;
  a.map.magnitude_scale = a.scale;
  a.map.data = Tensor({rg.channels * stride, rg.frames, rg.bins});
  a.map.rows.resize(rg.channels * stride);
  return a;
}

void fill_magnitude_and_neighbor(const cqt::Rhythmogram& rg, Assembly& a,
                                 const FeatureOptions& opt) {
  const std::size_t stride = a.map.channel_stride;
  for (std::size_t c = 0; c < rg.channels; ++c) {
    const std::size_t partner = (c + 1) % rg.channels;
    const std::size_t mag_row = c * stride;
    const std::size_t align_row = mag_row + 1;
    a.map.rows[mag_row] = {RowKind::magnitude, c, 0};
    a.map.rows[align_row] = {RowKind::neighbor_alignment, c, static_cast<int>(partner)};
    for (std::size_t m = 0; m < rg.frames; ++m) {
      for (std::size_t k = 0; k < rg.bins; ++k) {
        const auto x = rg.at(c, m, k);
        const auto y = rg.at(partner, m, k);
        const double mag = std::abs(x) * a.scale;
        a.map.data(mag_row, m, k) = mag;
        double align = phase_alignment(std::arg(x), std::arg(y));
        if (opt.alignment_mask_level > 0.0 &&
            std::min(mag, std::abs(y) * a.scale) < opt.alignment_mask_level) {
          align = 0.0;
        }
        a.map.data(align_row, m, k) = align;
      }
    }
  }
}

}  // namespace

std::string to_string(RowKind kind) {
  switch (kind) {
    case RowKind::magnitude: return "magnitude";
    case RowKind::neighbor_alignment: return "neighbor_alignment";
    case RowKind::multiple_alignment: return "multiple_alignment";
  }
  throw std::invalid_argument("unknown row kind");
}

RowKind row_kind_from_string(const std::string& text) {
  if (text == "magnitude") return RowKind::magnitude;
  if (text == "neighbor_alignment") return RowKind::neighbor_alignment;
  if (text == "multiple_alignment") return RowKind::multiple_alignment;
  throw std::invalid_argument("unknown row kind '" + text + "'");
}

double phase_alignment(double phi_a, double phi_b) {
  require_finite(phi_a, "phase_alignment");
  require_finite(phi_b, "phase_alignment");
  return fold(std::abs(wrap(phi_a) - wrap(phi_b)));
}

double phase_alignment_multiple(double phi_1, double phi_m, double freq_ratio) {
  require_finite(phi_1, "phase_alignment_multiple");
  require_finite(phi_m, "phase_alignment_multiple");
  require_finite(freq_ratio, "phase_alignment_multiple");
  if (freq_ratio < 1.0) throw std::invalid_argument("phase_alignment_multiple: ratio < 1");
  return fold(wrap(phi_m - phi_1 * freq_ratio));
}

FeatureMap build_featuremap_neighbor(const cqt::Rhythmogram& rg, const FeatureOptions& options) {
  Assembly a = start(rg, 2);
  fill_magnitude_and_neighbor(rg, a, options);
  return std::move(a.map);
}

FeatureMap build_featuremap_multiples(const cqt::Rhythmogram& rg,
                                      const std::vector<int>& multiples,
                                      const FeatureOptions& options) {
  if (multiples.empty()) throw std::invalid_argument("featuremap: empty multiples list");
  for (int h : multiples) {
    if (h < 2) throw std::invalid_argument("featuremap: multiples must be >= 2");
  }
  const std::size_t stride = 2 + multiples.size();
  Assembly a = start(rg, stride);
  fill_magnitude_and_neighbor(rg, a, options);
  a.map.valid.assign(a.map.rows.size() * rg.bins, 1);

  const int bpo = rg.config.bins_per_octave;
  for (std::size_t c = 0; c < rg.channels; ++c) {
    for (std::size_t i = 0; i < multiples.size(); ++i) {
      const int h = multiples[i];
      const auto shift = static_cast<std::size_t>(cqt::harmonic_shift(h, bpo));
      const std::size_t row = c * stride + 2 + i;
      a.map.rows[row] = {RowKind::multiple_alignment, c, h};
      for (std::size_t k = 0; k < rg.bins; ++k) {
        const bool has_partner = k + shift < rg.bins;
        a.map.valid[row * rg.bins + k] = has_partner ? 1 : 0;
        if (!has_partner) continue;
        for (std::size_t m = 0; m < rg.frames; ++m) {
          const auto base = rg.at(c, m, k);
          const auto upper = rg.at(c, m, k + shift);
          double align = phase_alignment_multiple(std::arg(base), std::arg(upper), h);
          if (options.alignment_mask_level > 0.0 &&
              std::min(std::abs(base), std::abs(upper)) * a.scale <
                  options.alignment_mask_level) {
            align = 0.0;
          }
          a.map.data(row, m, k) = align;
        }
      }
    }
  }
  return std::move(a.map);
}

double time_to_prev_peak(double phi, double f) {
  require_finite(phi, "time_to_prev_peak");
  if (!(f > 0.0)) throw std::invalid_argument("time_to_prev_peak: frequency must be > 0");
  return wrap(phi) / (kTwoPi * f);
}

double time_to_next_peak(double phi, double f) {
  require_finite(phi, "time_to_next_peak");
  if (!(f > 0.0)) throw std::invalid_argument("time_to_next_peak: frequency must be > 0");
  return (kTwoPi - wrap(phi)) / (kTwoPi * f);
}

}  // namespace logrhythm::phasefeat
