// Acceptance run: one PASS/FAIL line per criterion, each with its own time
// budget. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "logrhythm/convnet.hpp"
#include "logrhythm/cqt.hpp"
#include "logrhythm/phasefeat.hpp"
#include "logrhythm/rhythmgen.hpp"
#include "logrhythm/tracker.hpp"

using namespace logrhythm;
using std::numbers::pi;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::vector<double> frame_magnitudes(const cqt::Rhythmogram& rg, std::size_t c, std::size_t m) {
  std::vector<double> s(rg.bins);
  for (std::size_t k = 0; k < rg.bins; ++k) s[k] = std::abs(rg.at(c, m, k));
  return s;
}

// ---- 1 --------------------------------------------------------------------

Verdict shift_14() {
  rhythmgen::RenderConfig rc;
  rc.n_measures = 17;
  const auto clean = rhythmgen::render(rhythmgen::standard_pattern(), rc).first;
  auto fast = clean;
  rhythmgen::add_noise(fast, 0.15, 11);
  auto slow = rhythmgen::time_scale(clean, rhythmgen::Rational(2, 3));
  rhythmgen::add_noise(slow, 0.15, 12);

  const cqt::CqtConfig cfg;  // 24 bins per octave
  const auto rf = cqt::forward(fast, cqt::plan(cfg, fast.frames));
  const auto rs = cqt::forward(slow, cqt::plan(cfg, slow.frames));
  // Fast frame m shows the content of slow frame 1.5 m. Interior frames only.
  const std::size_t edge = 40;
  std::map<int, int> votes;
  for (std::size_t c = 0; c < rf.channels; ++c) {
    for (std::size_t m = edge; m + edge < rf.frames; ++m) {
      const auto ms = static_cast<std::size_t>(std::lround(1.5 * static_cast<double>(m)));
      if (ms + edge >= rs.frames) break;
      const auto a = static_cast<int>(argmax(frame_magnitudes(rf, c, m)));
      const auto b = static_cast<int>(argmax(frame_magnitudes(rs, c, ms)));
      ++votes[a - b];
    }
  }
  const auto mode = std::max_element(votes.begin(), votes.end(),
                                     [](auto& x, auto& y) { return x.second < y.second; });
  int total = 0;
  for (auto& [s, n] : votes) total += n;
  return {std::abs(mode->first - 14) <= 1,
          fmt("modal shift %d bins (%d of %d frame pairs)", mode->first, mode->second, total)};
}

// ---- 2 --------------------------------------------------------------------

Verdict round_trip() {
  const std::size_t n = 2400;
  const std::vector<double> freqs = {0.6, 1.5, 3.7, 8.0, 14.0};
  ActivationChannels x(freqs.size(), n, 100.0);
  const double mid = (n - 1.0) / 2.0;
  for (std::size_t c = 0; c < freqs.size(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * pi * i / (n - 1.0));
      x.at(c, i) = w * std::sin(2.0 * pi * freqs[c] * (i - mid) / 100.0);
    }
  }
  const auto k = cqt::plan({}, n);
  const auto fx = cqt::forward(x, k);
  const auto y = cqt::inverse(fx, k);
  double worst = 0.0;
  for (std::size_t c = 0; c < x.channels; ++c) {
    double e = 0.0, s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      e += std::pow(y.at(c, i) - x.at(c, i), 2);
      s += x.at(c, i) * x.at(c, i);
    }
    worst = std::max(worst, std::sqrt(e / s));
  }

  ActivationChannels zero(1, n, 100.0);
  const auto fz = cqt::forward(zero, k);
  bool zero_ok = std::all_of(fz.coeffs.begin(), fz.coeffs.end(),
                             [](auto z) { return z == std::complex<double>(0.0, 0.0); });
  for (double v : cqt::inverse(fz, k).data) zero_ok = zero_ok && v == 0.0;

  // Scaling by a power of two is exact in floating point, so linearity must
  // be. One channel is enough; channels are transformed independently.
  ActivationChannels x2(1, n, 100.0);
  for (std::size_t i = 0; i < n; ++i) x2.at(0, i) = 2.0 * x.at(2, i);
  const auto f2 = cqt::forward(x2, k);
  bool linear = true;
  for (std::size_t m = 0; m < fx.frames; ++m) {
    for (std::size_t b = 0; b < fx.bins; ++b) linear = linear && f2.at(0, m, b) == 2.0 * fx.at(2, m, b);
  }

  return {worst <= 1e-3 && zero_ok && linear,
          fmt("worst relative L2 %.2e, zero %s, linearity %s", worst, zero_ok ? "exact" : "FAILED",
              linear ? "exact" : "FAILED")};
}

// ---- 3 --------------------------------------------------------------------

Verdict alignment() {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  bool eq1 = true;
  double offset_dev = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double a = u(gen), b = u(gen), d = u(gen);
    const double x = phasefeat::phase_alignment(a, b);
    eq1 = eq1 && x == phasefeat::phase_alignment(b, a) && x >= 0.0 && x <= pi;
    offset_dev = std::max(offset_dev, std::abs(phasefeat::phase_alignment(a + d, b + d) - x));
  }
  // Offsets in [-20, 20] cost a few ulps of 2 pi when wrapping.
  eq1 = eq1 && offset_dev <= 1e-12;

  double shift_dev = 0.0;
  std::uniform_real_distribution<double> s(-3.0, 3.0);
  for (int h : {2, 3, 4, 6, 8}) {
    const double w = 2.0 * pi * 0.7;
    const double p1 = s(gen), pm = s(gen);
    const double x = phasefeat::phase_alignment_multiple(p1, pm, h);
    for (int i = 0; i < 1000; ++i) {
      const double dt = s(gen);
      shift_dev = std::max(
          shift_dev, std::abs(phasefeat::phase_alignment_multiple(p1 - w * dt, pm - h * w * dt, h) - x));
    }
  }

  const auto act = rhythmgen::render(rhythmgen::standard_pattern(), {}).first;
  const auto rg = cqt::forward(act, cqt::plan({}, act.frames));
  const auto fm = phasefeat::build_featuremap_neighbor(rg);
  // Row 1 aligns kick with snare. Bin 24 is 1 Hz, bin 48 the 2 Hz beat.
  double half_min = pi, beat_max = 0.0;
  for (std::size_t m = 40; m + 40 < rg.frames; ++m) {
    half_min = std::min(half_min, fm.data(1, m, 24));
    beat_max = std::max(beat_max, fm.data(1, m, 48));
  }
  const bool pattern_ok = half_min >= pi - 0.15 && beat_max <= 0.15;
  return {eq1 && shift_dev <= 1e-6 && pattern_ok,
          fmt("offset dev %.1e, shift dev %.1e, kick/snare min %.3f at 1 Hz, max %.3f at 2 Hz",
              offset_dev, shift_dev, half_min, beat_max)};
}

// ---- 4 --------------------------------------------------------------------

convnet::ConvLayer random_layer(const convnet::ConvLayerSpec& s, std::uint64_t seed) {
  convnet::ConvLayer l(s);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& w : l.weights) w = u(gen);
  for (double& b : l.bias) b = u(gen);
  return l;
}

Tensor random_tensor(std::vector<std::size_t> shape, std::uint64_t seed, double lo = -1.0) {
  Tensor t(std::move(shape));
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(lo, 1.0);
  for (double& v : t.values()) v = u(gen);
  return t;
}

Verdict invariance() {
  using namespace convnet;
  ConvLayerSpec a{.rows = 2, .frames = 2, .bins = 7, .stride_rows = 2, .n_filters = 3};
  ConvLayerSpec b{.rows = 2, .bins = 5, .depth = 3, .activation = Activation::identity};
  ModelParams m;
  m.layers = {random_layer(a, 6), random_layer(b, 7)};
  const auto x = random_tensor({1, 4, 5, 60}, 8);
  const auto y = forward(m, x).map;
  bool equivariant = true;
  for (int k : {1, 3, 10}) {
    const auto ys = forward(m, cqt::shift_bins(x, k)).map;
    const auto expect = cqt::shift_bins(y, k);
    for (std::size_t t = 0; t < y.dim(2); ++t) {
      for (std::size_t bin = static_cast<std::size_t>(k); bin < y.bins(); ++bin) {
        equivariant = equivariant && ys(0, 0, t, bin) == expect(0, 0, t, bin);
      }
    }
  }

  auto p = random_tensor({2, 3, 4, 40}, 9, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i % 40 >= 30) p[i] = 0.0;
  }
  const PoolSpec full{PoolMode::full_range, false, 1.0};
  const auto base = max_pool_freq(p, full, 24).values;
  bool invariant = true;
  for (int k = 1; k <= 10; ++k) invariant = invariant && max_pool_freq(cqt::shift_bins(p, k), full, 24).values == base;

  const auto fast = rhythmgen::render(rhythmgen::standard_pattern(), {}).first;
  const auto slow = rhythmgen::time_scale(fast, rhythmgen::Rational(2, 3));
  ModelParams comb;
  comb.layers = {octave_comb_filter(2, 24)};
  comb.pool.mode = PoolMode::full_range;
  auto response = [&](const ActivationChannels& s) {
    const auto rg = cqt::forward(s, cqt::plan({}, s.frames));
    return forward(comb, to_input(phasefeat::build_featuremap_neighbor(rg))).scores;
  };
  const auto ra = response(fast);
  const auto rb = response(slow);
  double worst = 0.0;
  for (std::size_t c = 0; c < ra.size(); ++c) {
    worst = std::max(worst, std::abs(ra[c] - rb[c]) / std::max(ra[c], rb[c]));
  }
  return {equivariant && invariant && worst <= 0.05,
          fmt("equivariance %s, pooling invariance %s, pooled response deviation %.1f%%",
              equivariant ? "exact" : "FAILED", invariant ? "exact" : "FAILED", 100.0 * worst)};
}

// ---- 5 --------------------------------------------------------------------

double total_loss(const convnet::ModelParams& m, const Tensor& x, std::size_t label,
                  const Tensor& target, convnet::OutputGrad* og, convnet::Trace* trace) {
  const auto out = convnet::forward(m, x, trace);
  double loss = 0.0;
  if (target.empty()) {
    std::vector<double> d;
    loss = convnet::cross_entropy(out.scores, label, d);
    if (og) og->scores = d;
  } else {
    Tensor d;
    loss = convnet::frame_mse(out.map, target, d);
    if (og) og->map = d;
  }
  if (m.freq_weights) loss += m.freq_weights->penalty_value();
  return loss;
}

double gradient_error(convnet::ModelParams m, const Tensor& x, std::size_t label,
                      const Tensor& target) {
  convnet::Trace trace;
  convnet::OutputGrad og;
  total_loss(m, x, label, target, &og, &trace);
  const auto g = convnet::backward(m, trace, og);
  const auto params = m.parameters();
  const auto grads = g.parameters();
  const double eps = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = *params[i];
    *params[i] = keep + eps;
    const double up = total_loss(m, x, label, target, nullptr, nullptr);
    *params[i] = keep - eps;
    const double down = total_loss(m, x, label, target, nullptr, nullptr);
    *params[i] = keep;
    const double fd = (up - down) / (2.0 * eps);
    worst = std::max(worst, std::abs(fd - *grads[i]) / std::max({std::abs(fd), std::abs(*grads[i]), 1e-6}));
  }
  return worst;
}

void randomize(convnet::ModelParams& m, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (double* p : m.parameters()) *p = u(gen);
  if (m.freq_weights) {
    for (double& w : m.freq_weights->w) w = 1.0 + u(gen);
  }
}

Verdict gradients() {
  using namespace convnet;
  // Two conv layers, smooth frequency weights, octave-band pooling and a
  // dense head under cross-entropy.
  ModelParams pooled;
  pooled.layers = {ConvLayer({.rows = 2, .frames = 2, .bins = 3, .stride_rows = 2, .n_filters = 2}),
                   ConvLayer({.bins = 2, .depth = 2, .n_filters = 2})};
  const std::size_t bins = 14 - 3 + 1 - 2 + 1;
  pooled.freq_weights = SmoothFreqWeights{std::vector<double>(bins, 1.0), 0.3};
  pooled.pool = {PoolMode::octave_bands, false, 0.5};
  pooled.bins_per_octave = 8;
  pooled.head = DenseHead(2 * 2 * ((bins + 3) / 4), 5);
  randomize(pooled, 13);
  const double e1 = gradient_error(pooled, random_tensor({1, 4, 3, 14}, 14), 3, {});

  // Unpooled map under the frame loss.
  ModelParams framed;
  framed.layers = {ConvLayer({.rows = 3, .bins = 4, .stride_rows = 3, .n_filters = 3}),
                   ConvLayer({.rows = 2, .frames = 2, .bins = 3, .depth = 3,
                              .activation = Activation::identity})};
  framed.freq_weights = SmoothFreqWeights{std::vector<double>(15, 1.0), 0.7};
  randomize(framed, 15);
  const double e2 = gradient_error(framed, random_tensor({1, 6, 4, 20}, 16),
                                   0, random_tensor({3, 15}, 17, 0.0));
  const double worst = std::max(e1, e2);
  return {worst <= 1e-4, fmt("worst relative error %.1e (pooled %.1e, frame loss %.1e)", worst, e1, e2)};
}

// ---- 6 --------------------------------------------------------------------

struct Tracked {
  double beat_f = 0.0;
  double downbeat_f = 0.0;
};

// F-measure over interior times: references clear of the boundary half
// window, estimates allowed up to tol beyond it.
double interior_f(const std::vector<double>& est_all, const std::vector<double>& ref_all,
                  double margin, double duration) {
  const double tol = 0.07;
  std::vector<double> est, ref;
  for (double t : ref_all) {
    if (t >= margin && t <= duration - margin) ref.push_back(t);
  }
  for (double t : est_all) {
    if (t >= margin - tol && t <= duration - margin + tol) est.push_back(t);
  }
  if (ref.empty()) return 0.0;
  return tracker::evaluate_beats(est, ref, tol);
}

Tracked track_render(double bpm, double noise, std::uint64_t seed) {
  rhythmgen::RenderConfig rc;
  rc.tempo_bpm = bpm;
  auto [act, truth] = rhythmgen::render(rhythmgen::standard_pattern(), rc);
  if (noise > 0.0) rhythmgen::add_noise(act, noise, seed);
  Tracked out;

  const cqt::CqtConfig beat_cfg;
  const auto bk = cqt::plan(beat_cfg, act.frames);
  const auto beats =
      tracker::track_beats(cqt::forward(act, bk), cqt::bin_of_frequency(beat_cfg, bpm / 60.0), bk);
  out.beat_f = interior_f(beats.times, truth.beat_times,
                          bk.longest_window() / 2.0 / beat_cfg.signal_rate_hz, act.duration());

  // The measure curve is read from the kick, the only channel whose two
  // hits per measure differ.
  const cqt::CqtConfig cfg{.f_min = 0.25};
  tracker::TrackOptions kick;
  kick.mode = tracker::ChannelMode::per_channel;
  kick.channel_weights = {1.0, 0.0, 0.0};
  const auto k = cqt::plan(cfg, act.frames);
  const auto rg = cqt::forward(act, k);
  const auto grid = tracker::track_beats(rg, cqt::bin_of_frequency(cfg, bpm / 60.0), k);
  const auto curve = tracker::periodicity_curve(rg, cqt::bin_of_frequency(cfg, bpm / 240.0), k, kick);
  const auto down = tracker::select_downbeats(grid, curve, cfg.signal_rate_hz, 4);
  out.downbeat_f = interior_f(down.times, truth.downbeat_times,
                              k.longest_window() / 2.0 / cfg.signal_rate_hz, act.duration());
  return out;
}

Verdict tracking() {
  bool ok = true;
  std::string clean = "noiseless beat/downbeat F", noisy = "noisy";
  for (double bpm : {80.0, 100.0, 120.0, 140.0, 160.0}) {
    const auto c = track_render(bpm, 0.0, 0);
    const auto n = track_render(bpm, 0.15, 1);
    ok = ok && c.beat_f == 1.0 && c.downbeat_f == 1.0 && n.beat_f >= 0.95 && n.downbeat_f >= 0.95;
    clean += fmt(" %.0f:%.2f/%.2f", bpm, c.beat_f, c.downbeat_f);
    noisy += fmt(" %.0f:%.2f/%.2f", bpm, n.beat_f, n.downbeat_f);
  }
  return {ok, clean + "; " + noisy};
}

// ---- 7 --------------------------------------------------------------------

Verdict tempo_training() {
  const tracker::TempoSetConfig set;  // 200 examples, 20 tempi, 15% noise
  const tracker::TempoConfig tc;
  const auto data = tracker::synthetic_tempo_set(set, tc);
  std::set<double> tempi;
  for (const auto& s : data) tempi.insert(s.bpm);

  const convnet::TrainConfig train{.epochs = 60, .l2 = 1e-3};
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 gen(train.rng_seed + 1);
  std::shuffle(order.begin(), order.end(), gen);
  const std::size_t n_test = data.size() / 5;
  std::vector<convnet::Example> fit;
  for (std::size_t i = n_test; i < order.size(); ++i) fit.push_back(data[order[i]].example);

  auto model = tracker::make_tempo_model(data.front().example.input.dim(1), tc, 0);
  model = convnet::train_tempo(model, fit, train);
  const std::size_t n_bins = tc.transform.n_bins();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n_test; ++i) {
    const auto& ex = data[order[i]].example;
    const auto out = convnet::forward(model, ex.input);
    const auto b = convnet::predict_argmax_bin(tracker::scores_on_bins(out, n_bins));
    hits += b + 1 >= ex.label_bin && b <= ex.label_bin + 1;
  }
  const double acc = static_cast<double>(hits) / static_cast<double>(n_test);
  return {data.size() == 200 && tempi.size() >= 20 && acc >= 0.9,
          fmt("%zu examples, %zu tempi, held-out %zu/%zu within one bin (%.1f%%)", data.size(),
              tempi.size(), hits, n_test, 100.0 * acc)};
}

// ---- 8 --------------------------------------------------------------------

Verdict targets() {
  const std::size_t n = 4000;
  const auto kernel = cqt::plan({}, n);
  std::vector<double> uniform;
  for (double t = 0.0; t < 40.0; t += 0.5) uniform.push_back(t);
  const auto ta = tracker::make_targets(uniform, kernel, n);
  bool in_range = true;
  std::size_t at_2hz = 0, interior = 0;
  const std::size_t edge = 40;
  auto row = [](const tracker::TargetFrames& t, std::size_t m) {
    return std::span<const double>(t.magnitude.data() + m * t.bins(), t.bins());
  };
  for (std::size_t m = 0; m < ta.frames(); ++m) {
    for (double v : row(ta, m)) in_range = in_range && v >= 0.0 && v <= 1.0;
    if (m >= edge && m + edge < ta.frames()) {
      ++interior;
      at_2hz += argmax(row(ta, m)) == cqt::bin_of_frequency(kernel.config(), 2.0);
    }
  }

  // Tempo rising linearly from 110 to 130 BPM.
  std::vector<double> drift;
  for (double t = 0.0; t < 40.0; t += 60.0 / (110.0 + 20.0 * t / 40.0)) drift.push_back(t);
  const auto td = tracker::make_targets(drift, kernel, n);
  bool monotone = true;
  std::size_t first = 0, last = 0;
  for (std::size_t m = edge; m + edge < td.frames(); ++m) {
    for (double v : row(td, m)) in_range = in_range && v >= 0.0 && v <= 1.0;
    const std::size_t b = argmax(row(td, m));
    if (m == edge) first = b;
    monotone = monotone && b >= last;
    last = b;
  }
  monotone = monotone && last > first;
  return {in_range && at_2hz == interior && monotone,
          fmt("2 Hz argmax on %zu/%zu interior frames, drift bins %zu -> %zu %s, range %s", at_2hz,
              interior, first, last, monotone ? "monotone" : "NOT monotone",
              in_range ? "[0, 1]" : "violated")};
}

// ---- 9 --------------------------------------------------------------------

Verdict retrieval() {
  const auto corpus = rhythmgen::pattern_corpus();
  const auto model = convnet::reference_fingerprint_model(6, 24);
  // Three tempi per pattern: the 120 BPM render and its 3/4 and 4/3 copies.
  const std::vector<rhythmgen::Rational> ratios = {
      rhythmgen::Rational(3, 4), rhythmgen::Rational(1), rhythmgen::Rational(4, 3)};
  std::vector<tracker::Fingerprint> fps;
  for (const auto& [name, p] : corpus) {
    const auto base = rhythmgen::render(p, {}).first;
    for (auto r : ratios) fps.push_back(tracker::fingerprint(rhythmgen::time_scale(base, r), model, {}, name));
  }
  std::size_t hits = 0;
  double min_cos = 1.0;
  for (std::size_t i = 0; i < fps.size(); ++i) {
    std::vector<tracker::Fingerprint> others;
    for (std::size_t j = 0; j < fps.size(); ++j) {
      if (j != i) others.push_back(fps[j]);
      if (j != i && fps[j].pattern_id == fps[i].pattern_id) {
        min_cos = std::min(min_cos, tracker::cosine_similarity(fps[i].values, fps[j].values));
      }
    }
    const auto top = tracker::match(fps[i], others, 2);
    hits += std::any_of(top.begin(), top.end(),
                        [&](auto& r) { return others[r.index].pattern_id == fps[i].pattern_id; });
  }
  const double rate = static_cast<double>(hits) / static_cast<double>(fps.size());
  return {corpus.size() == 10 && rate >= 0.9 && min_cos >= 0.98,
          fmt("%zu patterns x 3 tempi, top-2 %zu/%zu, min same-pattern cosine %.4f", corpus.size(),
              hits, fps.size(), min_cos)};
}

// ---- 10 -------------------------------------------------------------------

Verdict shift_table() {
  const std::vector<int> h = {1, 2, 3, 4, 6, 8};
  const std::vector<int> want = {0, 24, 38, 48, 62, 72};
  std::string got;
  bool ok = true;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const int s = cqt::harmonic_shift(h[i], 24);
    ok = ok && s == want[i];
    got += (i ? ", " : "") + std::to_string(s);
  }
  return {ok, "shifts {" + got + "}"};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Verdict()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  const std::vector<Criterion> all = {
      {1, "14-bin shift under a 2/3 time scale", 5.0, shift_14},
      {2, "transform round trip", 1.0, round_trip},
      {3, "phase alignment", 5.0, alignment},
      {4, "equivariance and pooling invariance", 5.0, invariance},
      {5, "gradient check", 10.0, gradients},
      {6, "beat and downbeat tracking", 30.0, tracking},
      {7, "tempo training", 300.0, tempo_training},
      {8, "target frames", 5.0, targets},
      {9, "pattern retrieval", 60.0, retrieval},
      {10, "harmonic shift table", 1.0, shift_table},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.contains(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = v.pass && in_time;
    failed += !pass;
    std::printf("criterion %2d %s  %s: %s [%.2f s of %.0f s%s]\n", c.id, pass ? "PASS" : "FAIL",
                c.name, v.detail.c_str(), secs, c.budget_s, in_time ? "" : ", over budget");
  }
  return failed == 0 ? 0 : 1;
}
