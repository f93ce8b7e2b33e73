#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "logrhythm/convnet.hpp"
#include "logrhythm/cqt.hpp"
#include "logrhythm/phasefeat.hpp"
#include "logrhythm/signals.hpp"
#include "logrhythm/tensor.hpp"

namespace logrhythm::tracker {

enum class BeatLevel { beat, downbeat };

struct BeatGrid {
  std::vector<double> times;  // seconds, strictly increasing
  BeatLevel level = BeatLevel::beat;
  /// One flag per time: 1 inside the first or last half window of the
  /// signal, where the centered transform has no full support.
  std::vector<std::uint8_t> low_confidence;

  void validate() const;
};

/// Frequency-domain training targets: frames x bins magnitudes, each frame
/// max-normalized to [0, 1], and the untouched phases.
struct TargetFrames {
  Tensor magnitude;
  Tensor phase;
  std::vector<double> frame_times;
  std::vector<double> bin_freqs;

  std::size_t frames() const { return magnitude.frames(); }
  std::size_t bins() const { return magnitude.bins(); }
};

struct Fingerprint {
  std::vector<double> values;
  std::string pattern_id;
  /// Hash of the model parameters, pooling and transform settings.
  std::string provenance;
};

/// 60 * bin_frequency(argmax); ties go to the lowest bin.
double estimate_tempo(std::span<const double> scores, const cqt::CqtConfig& config);

/// 1 / bin_frequency(argmax) in seconds; ties go to the lowest bin.
double estimate_measure_length(std::span<const double> scores, const cqt::CqtConfig& config);

/// Zeroes every coefficient whose bin lies outside
/// [center - width * bpo / 2, center + width * bpo / 2]. Surviving
/// coefficients are copied unchanged.
cqt::Rhythmogram mask_octave(const cqt::Rhythmogram& rg, std::size_t center_bin,
                             double width_octaves = 1.0);

enum class ChannelMode {
  sum,          // equal-weight sum of all channel inversions
  per_channel,  // weighted sum with TrackOptions::channel_weights
};

struct TrackOptions {
  double width_octaves = 1.0;
  /// Peaks below this fraction of the global maximum are dropped.
  double peak_threshold = 0.3;
  /// Minimum peak distance as a fraction of the selected period.
  double min_separation = 0.5;
  ChannelMode mode = ChannelMode::sum;
  std::vector<double> channel_weights;
  cqt::InverseOptions inverse;

  void validate(std::size_t channels) const;
};

/// Masks around bin, inverts every channel and combines them per options.
/// The result is one sample per activation frame.
std::vector<double> periodicity_curve(const cqt::Rhythmogram& rg, std::size_t bin,
                                      const cqt::CqtKernel& kernel,
                                      const TrackOptions& options = {});

/// Local maxima of curve at sample_rate, at least threshold * max and at
/// least min_distance seconds apart; stronger peaks win conflicts. The
/// reference max ignores guard samples at each end (boundary transients of
/// the inversion) unless that leaves nothing.
std::vector<double> pick_peaks(std::span<const double> curve, double sample_rate,
                               double threshold, double min_distance, std::size_t guard = 0);

BeatGrid track_beats(const cqt::Rhythmogram& rg, std::size_t tempo_bin,
                     const cqt::CqtKernel& kernel, const TrackOptions& options = {});

BeatGrid track_downbeats(const cqt::Rhythmogram& rg, std::size_t measure_bin,
                         const cqt::CqtKernel& kernel, const TrackOptions& options = {});

/// Beat-synchronous downbeats. Beats are numbered, with a gap of about k
/// median intervals advancing the count by k; measure_curve (a periodicity
/// curve at the measure bin, sampled at sample_rate) is summed over the
/// whole signal for each count modulo beats_per_measure, and the beats of
/// the strongest position are returned with their flags.
BeatGrid select_downbeats(const BeatGrid& beats, std::span<const double> measure_curve,
                          double sample_rate, int beats_per_measure);

/// Transforms cos(theta(t)), with theta = 2 pi k at annotation k and linear
/// in between (extended with the first and last interval outside), over
/// n_samples at the kernel's signal rate.
TargetFrames make_targets(std::span<const double> annotation_times,
                          const cqt::CqtKernel& kernel, std::size_t n_samples);

/// Transform and feature settings read by fingerprint(). The range reaches
/// down to 0.25 Hz so two-bar periodicities at slow tempi stay in view.
struct FingerprintConfig {
  cqt::CqtConfig transform = {.f_min = 0.25};
  phasefeat::FeatureOptions features = {.alignment_mask_level = 0.3};
};

/// Stable identifier of a model together with the transform and features it
/// reads.
std::string provenance_hash(const convnet::ModelParams& model, const FingerprintConfig& config);

/// Pooled, frame-averaged filter responses of the neighbor feature map.
/// The model must pool over the full range.
Fingerprint fingerprint(const ActivationChannels& channels, const convnet::ModelParams& model,
                        const FingerprintConfig& config = {}, const std::string& pattern_id = {});

double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct MatchResult {
  std::size_t index = 0;
  double similarity = 0.0;
};

/// Top-k corpus entries by cosine similarity; ties keep corpus order.
std::vector<MatchResult> match(const Fingerprint& query, const std::vector<Fingerprint>& corpus,
                               std::size_t k);

/// Greedy one-to-one matching (closest pairs first) within +-tol seconds;
/// F = 2PR / (P + R). Two empty grids score 1.
double evaluate_beats(std::span<const double> estimated, std::span<const double> reference,
                      double tol);

/// Flags times within half the window at bin of either end of a signal of
/// the given duration.
std::vector<std::uint8_t> boundary_flags(std::span<const double> times,
                                         const cqt::CqtKernel& kernel, std::size_t bin,
                                         double duration);

/// Tempo-model input: count evenly spaced frames of a feature map, skipping
/// margin frames at each end (fewer margins when the map is short).
Tensor sample_frames(const phasefeat::FeatureMap& map, std::size_t count, std::size_t margin);

/// Model scores placed on the full rhythmogram bin axis; bins the model
/// cannot score hold the lowest double.
std::vector<double> scores_on_bins(const convnet::Output& out, std::size_t n_bins);

/// Transform, sampling and model shape shared by tempo training and
/// prediction. The 0.25 Hz floor leaves room below slow tempi for a kernel
/// that spans three octaves.
struct TempoConfig {
  cqt::CqtConfig transform = {.f_min = 0.25};
  std::size_t frames = 16;
  std::size_t margin = 40;
  std::size_t n_filters = 8;
  double kernel_octaves = 3.0;
};

/// Neighbor feature map of the activations, sampled per TempoConfig.
Tensor tempo_input(const ActivationChannels& channels, const TempoConfig& config = {});

/// Untrained tempo_model() sized for inputs with n_rows rows.
convnet::ModelParams make_tempo_model(std::size_t n_rows, const TempoConfig& config = {},
                                      std::uint64_t seed = 0);

struct TempoSetConfig {
  std::size_t examples = 200;
  std::size_t tempi = 20;
  double bpm_low = 70.0;
  double bpm_high = 160.0;
  double noise_level = 0.15;
  int n_measures = 17;
  std::uint64_t seed = 1000;

  void validate() const;
};

struct TempoSample {
  convnet::Example example;
  double bpm = 0.0;
  std::string pattern;
};

/// Renders of the pattern corpus: example i uses tempo i % tempi (evenly
/// spaced over [bpm_low, bpm_high]), pattern (i / tempi) % corpus size and
/// noise seed seed + i. Labels are the bins of the beat frequency.
std::vector<TempoSample> synthetic_tempo_set(const TempoSetConfig& set,
                                             const TempoConfig& config = {});

/// Tempo in BPM from a trained model.
double predict_tempo(const convnet::ModelParams& model, const ActivationChannels& channels,
                     const TempoConfig& config = {});

}  // namespace logrhythm::tracker
