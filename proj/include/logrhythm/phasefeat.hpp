#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "logrhythm/cqt.hpp"
#include "logrhythm/tensor.hpp"

namespace logrhythm::phasefeat {

enum class RowKind { magnitude, neighbor_alignment, multiple_alignment };

std::string to_string(RowKind kind);
RowKind row_kind_from_string(const std::string& text);

struct RowTag {
  RowKind kind = RowKind::magnitude;
  std::size_t channel = 0;
  /// Partner channel for neighbor rows, harmonic multiple for multiple rows.
  int partner = 0;

  friend bool operator==(const RowTag&, const RowTag&) = default;
};

/// Interleaved magnitude and phase-alignment rows, rows x frames x bins.
/// Every source channel owns channel_stride consecutive rows.
struct FeatureMap {
  Tensor data;
  std::vector<RowTag> rows;
  std::size_t channel_stride = 2;
  /// Factor applied to the rhythmogram magnitudes (pi / global max).
  double magnitude_scale = 1.0;
  /// rows x bins; 0 marks slots with no partner bin. Empty means all valid.
  std::vector<std::uint8_t> valid;

  std::size_t n_rows() const { return rows.size(); }
  std::size_t frames() const { return data.frames(); }
  std::size_t bins() const { return data.bins(); }
  bool is_valid(std::size_t row, std::size_t bin) const {
    return valid.empty() || valid[row * bins() + bin] != 0;
  }
};

struct FeatureOptions {
  /// Alignment values are zeroed where either contributing magnitude, after
  /// scaling to [0, pi], falls below this level. 0 disables the mask.
  double alignment_mask_level = 0.0;
};

/// Folded absolute phase difference in [0, pi].
double phase_alignment(double phi_a, double phi_b);

/// Alignment of a periodicity at freq_ratio times the frequency of another:
/// both phasors are rewound until the slower one is at phase 0 and the folded
/// phase of the faster one is returned, i.e. fold(phi_m - ratio * phi_1).
double phase_alignment_multiple(double phi_1, double phi_m, double freq_ratio);

/// Rows alternate magnitude(ch i) and alignment(ch i, ch i+1); the last
/// channel pairs with channel 0.
FeatureMap build_featuremap_neighbor(const cqt::Rhythmogram& rg,
                                     const FeatureOptions& options = {});

/// Per channel: magnitude, neighbor alignment, then alignment of every bin
/// with its own channel at each harmonic multiple (partner bin
/// k + floor(log2(h) * bpo)); slots without a partner are 0 and masked.
FeatureMap build_featuremap_multiples(const cqt::Rhythmogram& rg,
                                      const std::vector<int>& multiples = {2, 3, 4, 6, 8},
                                      const FeatureOptions& options = {});

/// Seconds since the previous peak of a periodicity at f Hz with centered
/// phase phi: wrap(phi) / (2 pi f).
double time_to_prev_peak(double phi, double f);

/// Seconds until the next peak: (2 pi - wrap(phi)) / (2 pi f). Equals 1/f
/// at phi = 0.
double time_to_next_peak(double phi, double f);

}  // namespace logrhythm::phasefeat
