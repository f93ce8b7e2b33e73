#include "logrhythm/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <iomanip>

#include "logrhythm/parallel.hpp"
#include "logrhythm/phasefeat.hpp"
#include "logrhythm/rhythmgen.hpp"

namespace logrhythm::tracker {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::size_t argmax_lowest(std::span<const double> scores, const char* who) {
  require(!scores.empty(), std::string(who) + ": empty scores");
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  return best;
}

void check_strictly_increasing(std::span<const double> t, const char* who) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    require(std::isfinite(t[i]), std::string(who) + ": non-finite time");
    if (i > 0) require(t[i] > t[i - 1], std::string(who) + ": times must be strictly increasing");
  }
}

// FNV-1a, 64 bit.
class Hasher {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  template <typename T>
  void value(T v) {
    bytes(&v, sizeof v);
  }
  std::string hex() const {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h_;
    return os.str();
  }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

BeatGrid track_level(const cqt::Rhythmogram& rg, std::size_t bin, const cqt::CqtKernel& kernel,
                     const TrackOptions& options, BeatLevel level) {
  BeatGrid grid;
  grid.level = level;
  const auto curve = periodicity_curve(rg, bin, kernel, options);
  const double rate = rg.config.signal_rate_hz;
  const double period = 1.0 / rg.bin_freqs[bin];
  const std::size_t guard = kernel.longest_window() / 2;
  grid.times =
      pick_peaks(curve, rate, options.peak_threshold, options.min_separation * period, guard);
  grid.low_confidence =
      boundary_flags(grid.times, kernel, bin, static_cast<double>(rg.n_samples) / rate);
  return grid;
}

}  // namespace

void BeatGrid::validate() const {
  check_strictly_increasing(times, "beat grid");
  require(low_confidence.empty() || low_confidence.size() == times.size(),
          "beat grid: one confidence flag per time");
}

double estimate_tempo(std::span<const double> scores, const cqt::CqtConfig& config) {
  const std::size_t k = argmax_lowest(scores, "estimate_tempo");
  return 60.0 * config.bin_frequency(k);
}

double estimate_measure_length(std::span<const double> scores, const cqt::CqtConfig& config) {
  const std::size_t k = argmax_lowest(scores, "estimate_measure_length");
  return 1.0 / config.bin_frequency(k);
}

cqt::Rhythmogram mask_octave(const cqt::Rhythmogram& rg, std::size_t center_bin,
                             double width_octaves) {
  require(center_bin < rg.bins, "mask_octave: center bin out of range");
  require(std::isfinite(width_octaves) && width_octaves > 0.0,
          "mask_octave: width must be positive");
  const double half = width_octaves * rg.config.bins_per_octave / 2.0;
  const double lo = static_cast<double>(center_bin) - half;
  const double hi = static_cast<double>(center_bin) + half;
  cqt::Rhythmogram out = rg;
  for (std::size_t c = 0; c < rg.channels; ++c) {
    for (std::size_t m = 0; m < rg.frames; ++m) {
      for (std::size_t k = 0; k < rg.bins; ++k) {
        const auto kd = static_cast<double>(k);
        if (kd < lo || kd > hi) out.at(c, m, k) = {};
      }
    }
  }
  return out;
}

void TrackOptions::validate(std::size_t channels) const {
  require(std::isfinite(width_octaves) && width_octaves > 0.0, "track: width must be positive");
  require(peak_threshold >= 0.0 && peak_threshold <= 1.0, "track: peak threshold outside [0, 1]");
  require(std::isfinite(min_separation) && min_separation >= 0.0,
          "track: min separation must be >= 0");
  if (mode == ChannelMode::per_channel) {
    require(channel_weights.size() == channels,
            "track: per-channel mode needs one weight per channel");
    for (double w : channel_weights) require(std::isfinite(w), "track: non-finite channel weight");
  }
}

std::vector<double> periodicity_curve(const cqt::Rhythmogram& rg, std::size_t bin,
                                      const cqt::CqtKernel& kernel,
                                      const TrackOptions& options) {
  options.validate(rg.channels);
  const cqt::Rhythmogram masked = mask_octave(rg, bin, options.width_octaves);

  // The inverse is linear, so the weighted sum of channel inversions equals
  // the inversion of the weighted coefficient sum.
  cqt::Rhythmogram combined = masked;
  combined.channels = 1;
  combined.coeffs.assign(rg.frames * rg.bins, {});
  bool any = false;
  for (std::size_t c = 0; c < rg.channels; ++c) {
    const double w = options.mode == ChannelMode::sum ? 1.0 : options.channel_weights[c];
    for (std::size_t i = 0; i < rg.frames * rg.bins; ++i) {
      const auto v = masked.coeffs[c * rg.frames * rg.bins + i];
      combined.coeffs[i] += w * v;
    }
  }
  for (const auto& v : combined.coeffs) any = any || v != std::complex<double>{};
  if (!any) return std::vector<double>(rg.n_samples, 0.0);
  cqt::InverseOptions inv = options.inverse;
  if (inv.band_high_hz <= 0.0) {
    const double f = rg.bin_freqs[bin];
    inv.band_low_hz = f * std::exp2(-options.width_octaves / 2.0);
    inv.band_high_hz = f * std::exp2(options.width_octaves / 2.0);
  }
  return cqt::inverse_channel(combined, 0, kernel, inv);
}

std::vector<double> pick_peaks(std::span<const double> curve, double sample_rate,
                               double threshold, double min_distance, std::size_t guard) {
  require(sample_rate > 0.0, "pick_peaks: sample rate must be positive");
  std::vector<double> times;
  if (curve.size() < 3) return times;
  if (2 * guard >= curve.size()) guard = 0;
  const double peak = *std::max_element(curve.begin() + static_cast<std::ptrdiff_t>(guard),
                                        curve.end() - static_cast<std::ptrdiff_t>(guard));
  if (!(peak > 0.0)) return times;
  const double floor = threshold * peak;

  std::vector<std::size_t> candidates;
  for (std::size_t n = 1; n + 1 < curve.size(); ++n) {
    if (curve[n] > curve[n - 1] && curve[n] >= curve[n + 1] && curve[n] >= floor) {
      candidates.push_back(n);
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return curve[a] > curve[b]; });
  const double min_samples = min_distance * sample_rate;
  std::vector<std::size_t> kept;
  for (std::size_t n : candidates) {
    const bool clear = std::all_of(kept.begin(), kept.end(), [&](std::size_t k) {
      return std::abs(static_cast<double>(n) - static_cast<double>(k)) >= min_samples;
    });
    if (clear) kept.push_back(n);
  }
  std::sort(kept.begin(), kept.end());
  times.reserve(kept.size());
  for (std::size_t n : kept) times.push_back(static_cast<double>(n) / sample_rate);
  return times;
}

BeatGrid track_beats(const cqt::Rhythmogram& rg, std::size_t tempo_bin,
                     const cqt::CqtKernel& kernel, const TrackOptions& options) {
  return track_level(rg, tempo_bin, kernel, options, BeatLevel::beat);
}

BeatGrid track_downbeats(const cqt::Rhythmogram& rg, std::size_t measure_bin,
                         const cqt::CqtKernel& kernel, const TrackOptions& options) {
  return track_level(rg, measure_bin, kernel, options, BeatLevel::downbeat);
}

BeatGrid select_downbeats(const BeatGrid& beats, std::span<const double> measure_curve,
                          double sample_rate, int beats_per_measure) {
  beats.validate();
  require(beats_per_measure >= 1, "select_downbeats: beats_per_measure must be >= 1");
  require(sample_rate > 0.0, "select_downbeats: sample_rate must be > 0");
  require(!measure_curve.empty(), "select_downbeats: empty measure curve");
  BeatGrid out;
  out.level = BeatLevel::downbeat;
  const auto& t = beats.times;
  if (t.empty()) return out;

  std::vector<double> gaps;
  for (std::size_t i = 1; i < t.size(); ++i) gaps.push_back(t[i] - t[i - 1]);
  double median = 0.0;
  if (!gaps.empty()) {
    std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2),
                     gaps.end());
    median = gaps[gaps.size() / 2];
  }
  const auto bpm = static_cast<std::size_t>(beats_per_measure);
  std::vector<std::size_t> count(t.size(), 0);
  for (std::size_t i = 1; i < t.size(); ++i) {
    const auto step = std::max<long>(1, std::lround((t[i] - t[i - 1]) / median));
    count[i] = count[i - 1] + static_cast<std::size_t>(step);
  }
  std::vector<double> score(bpm, 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto n = std::min(measure_curve.size() - 1,
                            static_cast<std::size_t>(std::max(0L, std::lround(t[i] * sample_rate))));
    score[count[i] % bpm] += measure_curve[n];
  }
  const auto best = static_cast<std::size_t>(std::max_element(score.begin(), score.end()) - score.begin());
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (count[i] % bpm != best) continue;
    out.times.push_back(t[i]);
    if (!beats.low_confidence.empty()) out.low_confidence.push_back(beats.low_confidence[i]);
  }
  return out;
}

TargetFrames make_targets(std::span<const double> annotation_times, const cqt::CqtKernel& kernel,
                          std::size_t n_samples) {
  require(annotation_times.size() >= 2, "make_targets: need at least 2 annotations");
  check_strictly_increasing(annotation_times, "make_targets");
  const auto& cfg = kernel.config();
  const double rate = cfg.signal_rate_hz;
  const std::size_t last = annotation_times.size() - 1;

  ActivationChannels curve(1, n_samples, rate);
  std::size_t seg = 0;
  for (std::size_t n = 0; n < n_samples; ++n) {
    const double t = static_cast<double>(n) / rate;
    while (seg + 1 < last && t >= annotation_times[seg + 1]) ++seg;
    // seg indexes the interval used for t; outside the annotations the
    // first or last interval is extended.
    const double t0 = annotation_times[seg];
    const double t1 = annotation_times[seg + 1];
    const double theta = 2.0 * std::numbers::pi * (static_cast<double>(seg) + (t - t0) / (t1 - t0));
    curve.at(0, n) = 1.0 + std::cos(theta);
  }

  const cqt::Rhythmogram rg = cqt::forward(curve, kernel);
  TargetFrames ta;
  ta.magnitude = Tensor({rg.frames, rg.bins});
  ta.phase = Tensor({rg.frames, rg.bins});
  ta.frame_times = rg.frame_times;
  ta.bin_freqs = rg.bin_freqs;
  for (std::size_t m = 0; m < rg.frames; ++m) {
    double peak = 0.0;
    for (std::size_t k = 0; k < rg.bins; ++k) peak = std::max(peak, std::abs(rg.at(0, m, k)));
    for (std::size_t k = 0; k < rg.bins; ++k) {
      const auto v = rg.at(0, m, k);
      ta.magnitude(m, k) = peak > 0.0 ? std::abs(v) / peak : 0.0;
      ta.phase(m, k) = std::arg(v);
    }
  }
  return ta;
}

std::string provenance_hash(const convnet::ModelParams& model, const FingerprintConfig& fp) {
  const auto& config = fp.transform;
  Hasher h;
  for (const auto& layer : model.layers) {
    const auto& s = layer.spec;
    for (std::size_t v : {s.rows, s.frames, s.bins, s.depth, s.stride_rows, s.stride_bins,
                          s.n_filters}) {
      h.value(static_cast<std::uint64_t>(v));
    }
    h.value(static_cast<std::uint8_t>(s.activation));
  }
  for (const double* p : model.parameters()) h.value(*p);
  h.value(static_cast<std::uint8_t>(model.pool.mode));
  h.value(model.pool.band_octaves);
  h.value(static_cast<std::uint8_t>(model.pool.with_position));
  h.value(static_cast<std::int32_t>(model.bins_per_octave));
  h.value(config.f_min);
  h.value(config.f_max);
  h.value(static_cast<std::int32_t>(config.bins_per_octave));
  h.value(config.signal_rate_hz);
  h.value(static_cast<std::int32_t>(config.hop_frames));
  h.value(config.tf_tradeoff);
  h.value(config.cycles);
  h.value(config.kernel_threshold);
  h.value(static_cast<std::uint8_t>(config.window));
  h.value(fp.features.alignment_mask_level);
  return h.hex();
}

Fingerprint fingerprint(const ActivationChannels& channels, const convnet::ModelParams& model,
                        const FingerprintConfig& fp_config, const std::string& pattern_id) {
  const auto& config = fp_config.transform;
  require(model.pool.mode == convnet::PoolMode::full_range,
          "fingerprint: model must pool over the full frequency range");
  model.validate();
  require(model.bins_per_octave == config.bins_per_octave,
          "fingerprint: model and transform disagree on bins per octave");
  const auto kernel = cqt::plan(config, channels.frames);
  const auto rg = cqt::forward(channels, kernel);
  const auto map = phasefeat::build_featuremap_neighbor(rg, fp_config.features);
  const auto out = convnet::forward(model, convnet::to_input(map));
  Fingerprint fp;
  fp.values = out.scores;
  fp.pattern_id = pattern_id;
  fp.provenance = provenance_hash(model, fp_config);
  for (double v : fp.values) require(std::isfinite(v), "fingerprint: non-finite response");
  return fp;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "cosine_similarity: length mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

std::vector<MatchResult> match(const Fingerprint& query, const std::vector<Fingerprint>& corpus,
                               std::size_t k) {
  for (const auto& fp : corpus) {
    require(fp.provenance == query.provenance, "match: fingerprints come from different models");
    require(fp.values.size() == query.values.size(), "match: fingerprint dimension mismatch");
  }
  std::vector<MatchResult> all(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) {
    all[i] = {i, cosine_similarity(query.values, corpus[i].values)};
  });
  std::stable_sort(all.begin(), all.end(), [](const MatchResult& a, const MatchResult& b) {
    return a.similarity > b.similarity;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

double evaluate_beats(std::span<const double> estimated, std::span<const double> reference,
                      double tol) {
  require(std::isfinite(tol) && tol > 0.0, "evaluate_beats: tolerance must be positive");
  if (estimated.empty() && reference.empty()) return 1.0;
  if (estimated.empty() || reference.empty()) return 0.0;

  struct Pair {
    double distance;
    std::size_t est, ref;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < estimated.size(); ++i) {
    for (std::size_t j = 0; j < reference.size(); ++j) {
      const double d = std::abs(estimated[i] - reference[j]);
      if (d <= tol) pairs.push_back({d, i, j});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& a, const Pair& b) { return a.distance < b.distance; });
  std::vector<bool> est_used(estimated.size()), ref_used(reference.size());
  std::size_t hits = 0;
  for (const auto& p : pairs) {
    if (est_used[p.est] || ref_used[p.ref]) continue;
    est_used[p.est] = ref_used[p.ref] = true;
    ++hits;
  }
  if (hits == 0) return 0.0;
  const double precision = static_cast<double>(hits) / static_cast<double>(estimated.size());
  const double recall = static_cast<double>(hits) / static_cast<double>(reference.size());
  return 2.0 * precision * recall / (precision + recall);
}

std::vector<std::uint8_t> boundary_flags(std::span<const double> times,
                                         const cqt::CqtKernel& kernel, std::size_t bin,
                                         double duration) {
  require(bin < kernel.n_bins(), "boundary_flags: bin out of range");
  const double margin = static_cast<double>(kernel.window_lengths()[bin]) / 2.0 /
                        kernel.config().signal_rate_hz;
  std::vector<std::uint8_t> flags(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    flags[i] = times[i] < margin || times[i] > duration - margin ? 1 : 0;
  }
  return flags;
}

Tensor sample_frames(const phasefeat::FeatureMap& map, std::size_t count, std::size_t margin) {
  require(count >= 1, "sample_frames: count must be >= 1");
  const std::size_t frames = map.frames();
  require(frames >= 1, "sample_frames: empty feature map");
  std::size_t lo = 0, hi = frames;
  if (frames > 2 * margin + count) {
    lo = margin;
    hi = frames - margin;
  }
  const std::size_t rows = map.n_rows();
  const std::size_t bins = map.bins();
  Tensor x({1, rows, count, bins});
  const double span = static_cast<double>(hi - lo);
  for (std::size_t i = 0; i < count; ++i) {
    const auto m = std::min(
        hi - 1,
        lo + static_cast<std::size_t>((static_cast<double>(i) + 0.5) * span / count));
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t k = 0; k < bins; ++k) x(0, r, i, k) = map.data(r, m, k);
    }
  }
  return x;
}

std::vector<double> scores_on_bins(const convnet::Output& out, std::size_t n_bins) {
  require(out.bin_offset + out.scores.size() <= n_bins,
          "scores_on_bins: model scores exceed the bin axis");
  std::vector<double> full(n_bins, std::numeric_limits<double>::lowest());
  std::copy(out.scores.begin(), out.scores.end(),
            full.begin() + static_cast<std::ptrdiff_t>(out.bin_offset));
  return full;
}

Tensor tempo_input(const ActivationChannels& channels, const TempoConfig& config) {
  const auto kernel = cqt::plan(config.transform, channels.frames);
  const auto rg = cqt::forward(channels, kernel);
  return sample_frames(phasefeat::build_featuremap_neighbor(rg), config.frames, config.margin);
}

convnet::ModelParams make_tempo_model(std::size_t n_rows, const TempoConfig& config,
                                      std::uint64_t seed) {
  return convnet::tempo_model(n_rows, config.transform.n_bins(), 2,
                              config.transform.bins_per_octave, config.n_filters,
                              config.kernel_octaves, seed);
}

void TempoSetConfig::validate() const {
  require(examples >= 1 && tempi >= 1, "tempo set: need at least one example and tempo");
  require(bpm_low > 0.0 && bpm_high >= bpm_low, "tempo set: need 0 < bpm_low <= bpm_high");
  require(noise_level >= 0.0 && n_measures >= 1, "tempo set: bad noise level or length");
}

std::vector<TempoSample> synthetic_tempo_set(const TempoSetConfig& set,
                                             const TempoConfig& config) {
  set.validate();
  const auto corpus = rhythmgen::pattern_corpus();
  std::vector<TempoSample> out(set.examples);
  parallel_for(set.examples, [&](std::size_t i) {
    const std::size_t t = i % set.tempi;
    const auto& [name, pattern] = corpus[(i / set.tempi) % corpus.size()];
    rhythmgen::RenderConfig rc;
    rc.tempo_bpm = set.tempi == 1 ? set.bpm_low
                                  : set.bpm_low + (set.bpm_high - set.bpm_low) *
                                                      static_cast<double>(t) /
                                                      static_cast<double>(set.tempi - 1);
    rc.signal_rate_hz = config.transform.signal_rate_hz;
    rc.n_measures = set.n_measures;
    rc.noise_level = set.noise_level;
    rc.rng_seed = set.seed + i;
    const auto act = rhythmgen::render(pattern, rc).first;
    auto& s = out[i];
    s.example.input = tempo_input(act, config);
    s.example.label_bin = cqt::bin_of_frequency(config.transform, rc.tempo_bpm / 60.0);
    s.bpm = rc.tempo_bpm;
    s.pattern = name;
  });
  return out;
}

double predict_tempo(const convnet::ModelParams& model, const ActivationChannels& channels,
                     const TempoConfig& config) {
  require(model.bins_per_octave == config.transform.bins_per_octave,
          "predict_tempo: model and transform disagree on bins per octave");
  const auto out = convnet::forward(model, tempo_input(channels, config));
  return estimate_tempo(scores_on_bins(out, config.transform.n_bins()), config.transform);
}

}  // namespace logrhythm::tracker
