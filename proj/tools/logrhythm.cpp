// logrhythm: command-line front end for the rhythm analysis library.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "logrhythm/convnet.hpp"
#include "logrhythm/cqt.hpp"
#include "logrhythm/io.hpp"
#include "logrhythm/onsets.hpp"
#include "logrhythm/phasefeat.hpp"
#include "logrhythm/rhythmgen.hpp"
#include "logrhythm/tracker.hpp"

namespace {

using namespace logrhythm;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Transform overrides shared by the analysis commands. Unset fields keep the
// command's default configuration.
struct CqtOverrides {
  std::optional<double> f_min, f_max;
  std::optional<int> bpo, hop;

  void add(CLI::App& app) {
    app.add_option("--fmin", f_min, "Lowest bin frequency in Hz");
    app.add_option("--fmax", f_max, "Highest bin frequency in Hz");
    app.add_option("--bpo", bpo, "Bins per octave");
    app.add_option("--hop", hop, "Hop in activation frames");
  }

  cqt::CqtConfig apply(cqt::CqtConfig c, double rate) const {
    c.signal_rate_hz = rate;
    if (f_min) c.f_min = *f_min;
    if (f_max) c.f_max = *f_max;
    if (bpo) c.bins_per_octave = *bpo;
    if (hop) c.hop_frames = *hop;
    c.validate();
    return c;
  }
};

struct TrackFlags {
  double width = 1.0;
  double threshold = 0.3;
  double separation = 0.5;
  std::vector<double> weights;

  void add(CLI::App& app) {
    app.add_option("--width", width, "Mask width in octaves")->capture_default_str();
    app.add_option("--threshold", threshold, "Peak threshold as a fraction of the maximum")
        ->capture_default_str();
    app.add_option("--separation", separation, "Minimum peak distance as a fraction of the period")
        ->capture_default_str();
    app.add_option("--channel-weights", weights, "Per-channel weights (default: equal sum)");
  }

  tracker::TrackOptions options() const {
    tracker::TrackOptions o;
    o.width_octaves = width;
    o.peak_threshold = threshold;
    o.min_separation = separation;
    if (!weights.empty()) {
      o.mode = tracker::ChannelMode::per_channel;
      o.channel_weights = weights;
    }
    return o;
  }
};

void print_json(const json& j) { std::cout << j.dump(2) << '\n'; }

std::string with_suffix(const std::string& prefix, const char* suffix) { return prefix + suffix; }

rhythmgen::DrumPattern find_pattern(const std::string& name) {
  for (auto& [id, p] : rhythmgen::pattern_corpus()) {
    if (id == name) return p;
  }
  if (name == "standard") return rhythmgen::standard_pattern();
  std::string known = "standard";
  for (const auto& entry : rhythmgen::pattern_corpus()) known += ", " + entry.first;
  throw UsageError("unknown pattern '" + name + "' (known: " + known + ")");
}

json grid_json(const tracker::BeatGrid& g) {
  json flags = json::array();
  for (auto f : g.low_confidence) flags.push_back(f != 0);
  return {{"times", g.times}, {"low_confidence", flags}};
}

// ---- gen ------------------------------------------------------------------

struct GenArgs {
  std::string pattern = "standard";
  rhythmgen::RenderConfig render;
  std::string scale;
  std::string out = "render";
};

void cmd_gen(const GenArgs& a, bool as_json) {
  auto pattern = find_pattern(a.pattern);
  // Noise goes on after scaling so it stays white in the scaled copy.
  auto clean = a.render;
  clean.noise_level = 0.0;
  auto [act, ann] = rhythmgen::render(pattern, clean);
  if (!a.scale.empty()) {
    const auto r = rhythmgen::Rational::parse(a.scale);
    act = rhythmgen::time_scale(act, r);
    for (double& t : ann.beat_times) t /= r.value();
    for (double& t : ann.downbeat_times) t /= r.value();
  }
  if (a.render.noise_level > 0.0) {
    rhythmgen::add_noise(act, a.render.noise_level, a.render.rng_seed);
  }
  const auto act_path = with_suffix(a.out, ".ract");
  const auto beat_path = with_suffix(a.out, ".beats.txt");
  const auto down_path = with_suffix(a.out, ".downbeats.txt");
  io::write_activations(act_path, act);
  io::write_times(beat_path, ann.beat_times);
  io::write_times(down_path, ann.downbeat_times);
  if (as_json) {
    print_json({{"activations", act_path},
                {"beats", beat_path},
                {"downbeats", down_path},
                {"channels", act.channels},
                {"frames", act.frames},
                {"signal_rate_hz", act.signal_rate_hz}});
  } else {
    std::cout << act_path << ' ' << beat_path << ' ' << down_path << '\n';
  }
}

// ---- analyze --------------------------------------------------------------

struct AnalyzeArgs {
  std::string in;
  std::string out;
  std::string features;
  std::string csv;
  std::optional<std::size_t> frame;
  double mask_level = 0.0;
  CqtOverrides cqt;
};

void cmd_analyze(const AnalyzeArgs& a, bool as_json) {
  const auto act = io::read_activations(a.in);
  const auto config = a.cqt.apply({}, act.signal_rate_hz);
  const auto kernel = cqt::plan(config, act.frames);
  const auto rg = cqt::forward(act, kernel);
  json report = {{"channels", rg.channels}, {"frames", rg.frames}, {"bins", rg.bins}};
  if (!a.out.empty()) {
    io::write_rhythmogram(a.out, rg);
    report["rhythmogram"] = a.out;
  }
  if (!a.features.empty()) {
    const auto map =
        phasefeat::build_featuremap_neighbor(rg, {.alignment_mask_level = a.mask_level});
    io::write_featuremap(a.features, map, config);
    report["features"] = a.features;
  }
  if (!a.csv.empty()) {
    // Default slice: mean over frames whose windows fit inside the signal.
    std::size_t lo = 0, hi = rg.frames;
    if (a.frame) {
      if (*a.frame >= rg.frames) throw UsageError("--frame beyond the last frame");
      lo = *a.frame;
      hi = lo + 1;
    } else {
      const std::size_t edge = kernel.longest_window() / 2 / static_cast<std::size_t>(config.hop_frames);
      if (rg.frames > 2 * edge) {
        lo = edge;
        hi = rg.frames - edge;
      }
    }
    std::vector<std::vector<double>> slice(rg.channels + 1, std::vector<double>(rg.bins, 0.0));
    for (std::size_t c = 0; c < rg.channels; ++c) {
      for (std::size_t m = lo; m < hi; ++m) {
        for (std::size_t k = 0; k < rg.bins; ++k) slice[c][k] += std::abs(rg.at(c, m, k));
      }
      for (std::size_t k = 0; k < rg.bins; ++k) {
        slice[c][k] /= static_cast<double>(hi - lo);
        slice[rg.channels][k] += slice[c][k];
      }
    }
    std::vector<std::string> names;
    for (std::size_t c = 0; c < rg.channels; ++c) {
      names.push_back(c < act.channel_names.size() && !act.channel_names[c].empty()
                          ? act.channel_names[c]
                          : "ch" + std::to_string(c));
    }
    names.push_back("sum");

    std::ofstream out(a.csv);
    if (!out) throw io::FormatError("cannot write " + a.csv);
    out << "bin,freq_hz";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    char buf[64];
    for (std::size_t k = 0; k < rg.bins; ++k) {
      std::snprintf(buf, sizeof buf, "%zu,%.6f", k, rg.bin_freqs[k]);
      out << buf;
      for (const auto& col : slice) {
        std::snprintf(buf, sizeof buf, ",%.6g", col[k]);
        out << buf;
      }
      out << '\n';
    }
    if (!out) throw io::FormatError("write failed for " + a.csv);
    json argmax = json::object();
    for (std::size_t c = 0; c < slice.size(); ++c) {
      argmax[names[c]] = std::max_element(slice[c].begin(), slice[c].end()) - slice[c].begin();
    }
    report["csv"] = a.csv;
    report["slice_frames"] = {lo, hi};
    report["slice_argmax_bins"] = argmax;
  }
  if (as_json) {
    print_json(report);
  } else if (report.contains("slice_argmax_bins")) {
    for (const auto& [name, bin] : report["slice_argmax_bins"].items()) {
      std::cout << name << ' ' << bin << '\n';
    }
  }
}

// ---- tempo / beats / downbeats --------------------------------------------

struct TempoArgs {
  std::string in;
  std::string model;
};

double model_tempo(const std::string& model_path, const ActivationChannels& act) {
  const auto model = io::load_model(model_path);
  tracker::TempoConfig tc;
  tc.transform.signal_rate_hz = act.signal_rate_hz;
  return tracker::predict_tempo(model, act, tc);
}

void cmd_tempo(const TempoArgs& a, bool as_json) {
  const auto act = io::read_activations(a.in);
  const double bpm = model_tempo(a.model, act);
  if (as_json) {
    print_json({{"tempo_bpm", bpm}, {"frequency_hz", bpm / 60.0}});
  } else {
    std::printf("%.3f\n", bpm);
  }
}

struct BeatsArgs {
  std::string in;
  std::string out;
  std::optional<double> tempo;
  std::string model;
  int beats_per_measure = 4;
  std::optional<double> measure_seconds;
  bool free_phase = false;
  TrackFlags track;
  CqtOverrides cqt;
};

double beat_tempo(const BeatsArgs& a, const ActivationChannels& act) {
  if (a.tempo && !a.model.empty()) throw UsageError("give either --tempo or --model");
  if (a.tempo) {
    if (!(*a.tempo > 0.0)) throw UsageError("--tempo must be > 0");
    return *a.tempo;
  }
  if (!a.model.empty()) return model_tempo(a.model, act);
  throw UsageError("need --tempo or --model");
}

void finish_grid(const tracker::BeatGrid& g, const std::string& out, bool as_json, json report) {
  if (!out.empty()) io::write_times(out, g.times);
  if (as_json) {
    report.update(grid_json(g));
    print_json(report);
  } else if (out.empty()) {
    for (double t : g.times) std::printf("%.6f\n", t);
  }
}

void cmd_beats(const BeatsArgs& a, bool as_json) {
  const auto act = io::read_activations(a.in);
  const double bpm = beat_tempo(a, act);
  const auto config = a.cqt.apply({}, act.signal_rate_hz);
  const auto kernel = cqt::plan(config, act.frames);
  const auto rg = cqt::forward(act, kernel);
  const auto bin = cqt::bin_of_frequency(config, bpm / 60.0);
  if (bin >= rg.bins) throw UsageError("tempo outside the transform range");
  const auto g = tracker::track_beats(rg, bin, kernel, a.track.options());
  finish_grid(g, a.out, as_json, {{"tempo_bpm", bpm}, {"bin", bin}});
}

void cmd_downbeats(const BeatsArgs& a, bool as_json) {
  const auto act = io::read_activations(a.in);
  double measure = 0.0;
  double bpm = 0.0;
  if (a.measure_seconds) {
    if (!(*a.measure_seconds > 0.0)) throw UsageError("--measure must be > 0");
    measure = *a.measure_seconds;
  } else {
    if (a.beats_per_measure < 1) throw UsageError("--beats-per-measure must be >= 1");
    bpm = beat_tempo(a, act);
    measure = a.beats_per_measure * 60.0 / bpm;
  }
  // Measure periodicities of slow tempi sit below the beat transform's floor.
  const auto config = a.cqt.apply({.f_min = 0.25}, act.signal_rate_hz);
  const auto kernel = cqt::plan(config, act.frames);
  const auto rg = cqt::forward(act, kernel);
  const auto bin = cqt::bin_of_frequency(config, 1.0 / measure);
  if (bin >= rg.bins) throw UsageError("measure length outside the transform range");
  const auto options = a.track.options();
  tracker::BeatGrid g;
  if (bpm > 0.0 && !a.free_phase) {
    // Downbeats picked from the beat grid by the measure-level curve.
    const auto beat_bin = cqt::bin_of_frequency(config, bpm / 60.0);
    if (beat_bin >= rg.bins) throw UsageError("tempo outside the transform range");
    const auto beats = tracker::track_beats(rg, beat_bin, kernel, options);
    const auto curve = tracker::periodicity_curve(rg, bin, kernel, options);
    g = tracker::select_downbeats(beats, curve, config.signal_rate_hz, a.beats_per_measure);
  } else {
    g = tracker::track_downbeats(rg, bin, kernel, options);
  }
  finish_grid(g, a.out, as_json, {{"measure_seconds", measure}, {"bin", bin}});
}

// ---- targets --------------------------------------------------------------

struct TargetsArgs {
  std::string beats;
  std::string in;
  std::string out;
  CqtOverrides cqt;
};

void cmd_targets(const TargetsArgs& a, bool as_json) {
  const auto act = io::read_activations(a.in);
  const auto times = io::read_times(a.beats);
  const auto config = a.cqt.apply({}, act.signal_rate_hz);
  const auto kernel = cqt::plan(config, act.frames);
  const auto t = tracker::make_targets(times, kernel, act.frames);

  std::vector<std::size_t> argmax(t.frames());
  for (std::size_t m = 0; m < t.frames(); ++m) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < t.bins(); ++k) {
      if (t.magnitude(m, k) > t.magnitude(m, best)) best = k;
    }
    argmax[m] = best;
  }
  if (!a.out.empty()) {
    // Stored as a one-channel rhythmogram: magnitude * exp(i phase).
    cqt::Rhythmogram rg;
    rg.channels = 1;
    rg.frames = t.frames();
    rg.bins = t.bins();
    rg.n_samples = act.frames;
    rg.frame_times = t.frame_times;
    rg.bin_freqs = t.bin_freqs;
    rg.config = config;
    rg.coeffs.resize(rg.frames * rg.bins);
    for (std::size_t m = 0; m < rg.frames; ++m) {
      for (std::size_t k = 0; k < rg.bins; ++k) {
        rg.at(0, m, k) = std::polar(t.magnitude(m, k), t.phase(m, k));
      }
    }
    io::write_rhythmogram(a.out, rg);
  }
  if (as_json) {
    print_json({{"frames", t.frames()}, {"bins", t.bins()}, {"argmax_bins", argmax}});
  } else {
    for (std::size_t m = 0; m < argmax.size(); ++m) {
      std::printf("%.6f %.6f\n", t.frame_times[m], t.bin_freqs[argmax[m]]);
    }
  }
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string out = "tempo_model.json";
  tracker::TempoSetConfig set;
  convnet::TrainConfig train = {.epochs = 60, .l2 = 1e-3};
  double holdout = 0.2;
  std::uint64_t init_seed = 0;
};

double accuracy(const convnet::ModelParams& model, const std::vector<tracker::TempoSample>& data,
                const std::vector<std::size_t>& idx, std::size_t n_bins) {
  if (idx.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i : idx) {
    const auto out = convnet::forward(model, data[i].example.input);
    const auto b = convnet::predict_argmax_bin(tracker::scores_on_bins(out, n_bins));
    const auto label = data[i].example.label_bin;
    ok += (b + 1 >= label && b <= label + 1) ? 1 : 0;
  }
  return static_cast<double>(ok) / static_cast<double>(idx.size());
}

void cmd_train(const TrainArgs& a, bool as_json) {
  if (a.holdout < 0.0 || a.holdout >= 1.0) throw UsageError("--holdout must be in [0, 1)");
  tracker::TempoConfig tc;
  const auto data = tracker::synthetic_tempo_set(a.set, tc);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 gen(a.train.rng_seed + 1);
  std::shuffle(order.begin(), order.end(), gen);
  const auto n_test = static_cast<std::size_t>(a.holdout * static_cast<double>(data.size()));
  std::vector<std::size_t> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> fit(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::vector<convnet::Example> examples;
  for (std::size_t i : fit) examples.push_back(data[i].example);

  auto model = tracker::make_tempo_model(data.front().example.input.dim(1), tc, a.init_seed);
  std::vector<double> losses;
  model = convnet::train_tempo(model, examples, a.train, &losses);
  io::save_model(a.out, model);
  const std::size_t n_bins = tc.transform.n_bins();
  const double train_acc = accuracy(model, data, fit, n_bins);
  const double test_acc = accuracy(model, data, test, n_bins);
  if (as_json) {
    print_json({{"model", a.out},
                {"examples", data.size()},
                {"holdout", test.size()},
                {"epoch_losses", losses},
                {"train_accuracy", train_acc},
                {"holdout_accuracy", test_acc}});
  } else {
    std::printf("train accuracy %.3f, holdout accuracy %.3f\n", train_acc, test_acc);
  }
}

// ---- fingerprint / match --------------------------------------------------

struct FingerprintArgs {
  std::vector<std::string> in;
  std::vector<std::string> ids;
  std::string model;
  std::string out = "fingerprints.json";
  std::size_t filters = 32;
  std::uint64_t seed = 2;
};

void cmd_fingerprint(const FingerprintArgs& a, bool as_json) {
  if (!a.ids.empty() && a.ids.size() != a.in.size()) {
    throw UsageError("--id must be given once per --in");
  }
  std::vector<tracker::Fingerprint> fps;
  std::optional<convnet::ModelParams> model;
  if (!a.model.empty()) model = io::load_model(a.model);
  for (std::size_t i = 0; i < a.in.size(); ++i) {
    const auto act = io::read_activations(a.in[i]);
    tracker::FingerprintConfig fc;
    fc.transform.signal_rate_hz = act.signal_rate_hz;
    if (!model) {
      model = convnet::reference_fingerprint_model(2 * act.channels, fc.transform.bins_per_octave,
                                                   a.filters, 2.0, a.seed);
    }
    fps.push_back(tracker::fingerprint(act, *model, fc, a.ids.empty() ? a.in[i] : a.ids[i]));
  }
  io::write_fingerprints(a.out, fps);
  if (as_json) {
    print_json({{"fingerprints", a.out},
                {"count", fps.size()},
                {"provenance", fps.front().provenance}});
  }
}

struct MatchArgs {
  std::string query;
  std::string corpus;
  std::size_t k = 2;
  bool exclude_self = false;
};

void cmd_match(const MatchArgs& a, bool as_json) {
  const auto queries = io::read_fingerprints(a.query);
  const auto corpus = io::read_fingerprints(a.corpus);
  json results = json::array();
  for (std::size_t q = 0; q < queries.size(); ++q) {
    std::vector<tracker::Fingerprint> pool;
    std::vector<std::size_t> index;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      // Identity is value equality: a query compared against its own corpus.
      if (a.exclude_self && corpus[i].values == queries[q].values) continue;
      pool.push_back(corpus[i]);
      index.push_back(i);
    }
    json hits = json::array();
    for (const auto& m : tracker::match(queries[q], pool, a.k)) {
      hits.push_back({{"index", index[m.index]},
                      {"pattern_id", pool[m.index].pattern_id},
                      {"similarity", m.similarity}});
    }
    results.push_back({{"query", queries[q].pattern_id}, {"matches", hits}});
  }
  if (as_json) {
    print_json(results);
  } else {
    for (const auto& r : results) {
      std::cout << r["query"].get<std::string>();
      for (const auto& h : r["matches"]) {
        std::printf(" %s:%.4f", h["pattern_id"].get<std::string>().c_str(),
                    h["similarity"].get<double>());
      }
      std::cout << '\n';
    }
  }
}

// ---- eval / onsets --------------------------------------------------------

struct EvalArgs {
  std::string est;
  std::string ref;
  double tol = 0.07;
  std::optional<double> from, to;
};

void cmd_eval(const EvalArgs& a, bool as_json) {
  if (!(a.tol > 0.0)) throw UsageError("--tol must be > 0");
  auto window = [&](std::vector<double> t, double slack) {
    std::erase_if(t, [&](double x) {
      return (a.from && x < *a.from - slack) || (a.to && x > *a.to + slack);
    });
    return t;
  };
  // Estimates just outside the window may still match references inside it.
  const auto est = window(io::read_times(a.est), a.tol);
  const auto ref = window(io::read_times(a.ref), 0.0);
  const double f = tracker::evaluate_beats(est, ref, a.tol);
  if (as_json) {
    print_json({{"f_measure", f}, {"estimated", est.size()}, {"reference", ref.size()}});
  } else {
    std::printf("%.6f\n", f);
  }
}

struct OnsetArgs {
  std::string in;
  std::string out = "onsets.ract";
  std::string method = "flux";
};

void cmd_onsets(const OnsetArgs& a, bool as_json) {
  const auto clip = onsets::read_wav(a.in);
  ActivationChannels act;
  if (a.method == "flux") {
    act = onsets::band_flux(clip, onsets::BandSpec::bark6(clip.sample_rate));
  } else if (a.method == "pitched") {
    act = onsets::pitched_onsets(clip);
  } else {
    throw UsageError("--method must be flux or pitched");
  }
  io::write_activations(a.out, act);
  if (as_json) {
    print_json({{"activations", a.out},
                {"channels", act.channels},
                {"frames", act.frames},
                {"signal_rate_hz", act.signal_rate_hz}});
  }
}

// ---- config files ---------------------------------------------------------

// Appends "--key value" for every entry of a JSON object whose option was not
// given on the command line. Arrays become repeated values, true becomes a
// bare flag and false is dropped.
std::vector<std::string> with_config(std::vector<std::string> args) {
  std::string path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file");
      path = args[++i];
    } else if (args[i].starts_with("--config=")) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (path.empty()) return rest;
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path);
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config " + path + ": " + e.what());
  }
  if (!cfg.is_object()) throw UsageError("config " + path + ": expected a JSON object");
  std::set<std::string> given;
  for (const auto& s : rest) {
    if (s.starts_with("--")) given.insert(s.substr(2, s.find('=') == std::string::npos
                                                         ? std::string::npos
                                                         : s.find('=') - 2));
  }
  auto scalar = [&](const std::string& key, const json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) return json(v).dump();
    throw UsageError("config " + path + ": unsupported value for " + key);
  };
  for (const auto& [key, value] : cfg.items()) {
    if (given.contains(key)) continue;
    if (value.is_boolean()) {
      if (value.get<bool>()) rest.push_back("--" + key);
    } else if (value.is_array()) {
      for (const auto& v : value) {
        rest.push_back("--" + key);
        rest.push_back(scalar(key, v));
      }
    } else {
      rest.push_back("--" + key);
      rest.push_back(scalar(key, value));
    }
  }
  return rest;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rhythm analysis on log-frequency periodicity spectra"};
  app.require_subcommand(1);
  bool as_json = false;
  app.add_flag("--json", as_json, "Machine-readable output on stdout");
  app.set_help_all_flag("--help-all");
  auto json_flag = [&](CLI::App* sub) { sub->add_flag("--json", as_json, "JSON output"); };

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Render a drum pattern to activation channels");
  g->add_option("--pattern", gen.pattern, "Pattern name")->capture_default_str();
  g->add_option("--tempo", gen.render.tempo_bpm, "Tempo in BPM")->capture_default_str();
  g->add_option("--measures", gen.render.n_measures, "Number of measures")->capture_default_str();
  g->add_option("--noise", gen.render.noise_level, "Uniform noise level")->capture_default_str();
  g->add_option("--seed", gen.render.rng_seed, "Noise seed")->capture_default_str();
  g->add_option("--rate", gen.render.signal_rate_hz, "Signal rate in Hz")->capture_default_str();
  g->add_option("--scale", gen.scale, "Time-scale ratio applied after rendering, e.g. 2/3");
  g->add_option("--out", gen.out, "Output prefix")->capture_default_str();
  json_flag(g);

  AnalyzeArgs an;
  auto* a = app.add_subcommand("analyze", "Compute the rhythmogram and feature maps");
  a->add_option("--in", an.in, "Activation file")->required();
  a->add_option("--out", an.out, "Rhythmogram output (RGRM)");
  a->add_option("--features", an.features, "Neighbor feature map output (RFMP)");
  a->add_option("--csv", an.csv, "Magnitude slice output (CSV)");
  a->add_option("--frame", an.frame, "Single slice frame (default: interior mean)");
  a->add_option("--mask-level", an.mask_level, "Alignment mask level")->capture_default_str();
  an.cqt.add(*a);
  json_flag(a);

  TempoArgs te;
  auto* t = app.add_subcommand("tempo", "Estimate the tempo with a trained model");
  t->add_option("--in", te.in, "Activation file")->required();
  t->add_option("--model", te.model, "Model file")->required();
  json_flag(t);

  BeatsArgs be;
  auto* b = app.add_subcommand("beats", "Track beats");
  b->add_option("--in", be.in, "Activation file")->required();
  b->add_option("--out", be.out, "Beat file");
  b->add_option("--tempo", be.tempo, "Tempo in BPM");
  b->add_option("--model", be.model, "Tempo model used when --tempo is absent");
  be.track.add(*b);
  be.cqt.add(*b);
  json_flag(b);

  BeatsArgs db;
  auto* d = app.add_subcommand("downbeats", "Track downbeats");
  d->add_option("--in", db.in, "Activation file")->required();
  d->add_option("--out", db.out, "Downbeat file");
  d->add_option("--tempo", db.tempo, "Tempo in BPM");
  d->add_option("--model", db.model, "Tempo model used when --tempo is absent");
  d->add_option("--beats-per-measure", db.beats_per_measure, "Beats per measure")
      ->capture_default_str();
  d->add_option("--measure", db.measure_seconds, "Measure length in seconds");
  d->add_flag("--free-phase", db.free_phase,
              "Peaks of the measure-level curve instead of downbeats chosen from the beats");
  db.track.add(*d);
  db.cqt.add(*d);
  json_flag(d);

  TargetsArgs ta;
  auto* tg = app.add_subcommand("targets", "Frequency-domain training targets from annotations");
  tg->add_option("--beats", ta.beats, "Annotation file")->required();
  tg->add_option("--in", ta.in, "Activation file giving length and rate")->required();
  tg->add_option("--out", ta.out, "Target output (one-channel RGRM)");
  ta.cqt.add(*tg);
  json_flag(tg);

  TrainArgs tr;
  auto* trn = app.add_subcommand("train", "Train a tempo model on synthetic renders");
  trn->add_option("--out", tr.out, "Model output")->capture_default_str();
  trn->add_option("--examples", tr.set.examples, "Number of renders")->capture_default_str();
  trn->add_option("--tempi", tr.set.tempi, "Number of distinct tempi")->capture_default_str();
  trn->add_option("--bpm-low", tr.set.bpm_low, "Slowest tempo")->capture_default_str();
  trn->add_option("--bpm-high", tr.set.bpm_high, "Fastest tempo")->capture_default_str();
  trn->add_option("--noise", tr.set.noise_level, "Noise level")->capture_default_str();
  trn->add_option("--measures", tr.set.n_measures, "Measures per render")->capture_default_str();
  trn->add_option("--data-seed", tr.set.seed, "First noise seed")->capture_default_str();
  trn->add_option("--epochs", tr.train.epochs, "Epochs")->capture_default_str();
  trn->add_option("--lr", tr.train.learning_rate, "Learning rate")->capture_default_str();
  trn->add_option("--batch", tr.train.batch_size, "Batch size")->capture_default_str();
  trn->add_option("--l2", tr.train.l2, "L2 weight decay")->capture_default_str();
  trn->add_option("--seed", tr.train.rng_seed, "Shuffle and split seed")->capture_default_str();
  trn->add_option("--init-seed", tr.init_seed, "Weight initialization seed")
      ->capture_default_str();
  trn->add_option("--holdout", tr.holdout, "Held-out fraction")->capture_default_str();
  json_flag(trn);

  FingerprintArgs fp;
  auto* f = app.add_subcommand("fingerprint", "Tempo-invariant pattern fingerprints");
  f->add_option("--in", fp.in, "Activation files")->required();
  f->add_option("--id", fp.ids, "Pattern id per input (default: file name)");
  f->add_option("--model", fp.model, "Model file (default: the reference random bank)");
  f->add_option("--out", fp.out, "Output JSON")->capture_default_str();
  f->add_option("--filters", fp.filters, "Reference bank size")->capture_default_str();
  f->add_option("--seed", fp.seed, "Reference bank seed")->capture_default_str();
  json_flag(f);

  MatchArgs ma;
  auto* m = app.add_subcommand("match", "Rank corpus fingerprints by cosine similarity");
  m->add_option("--query", ma.query, "Query fingerprints")->required();
  m->add_option("--corpus", ma.corpus, "Corpus fingerprints")->required();
  m->add_option("-k,--top", ma.k, "Matches per query")->capture_default_str();
  m->add_flag("--exclude-self", ma.exclude_self, "Skip corpus entries identical to the query");
  json_flag(m);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "F-measure of estimated against reference times");
  e->add_option("--est", ev.est, "Estimated times")->required();
  e->add_option("--ref", ev.ref, "Reference times")->required();
  e->add_option("--tol", ev.tol, "Tolerance in seconds")->capture_default_str();
  e->add_option("--from", ev.from, "Ignore references before this time");
  e->add_option("--to", ev.to, "Ignore references after this time");
  json_flag(e);

  OnsetArgs on;
  auto* o = app.add_subcommand("onsets", "Activation channels from a WAV file");
  o->add_option("--in", on.in, "WAV file")->required();
  o->add_option("--out", on.out, "Activation output")->capture_default_str();
  o->add_option("--method", on.method, "flux (6 bands) or pitched (octave readouts)")
      ->capture_default_str();
  json_flag(o);

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = with_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& err) {
    // --help exits 0; every other parse failure is a usage error.
    return app.exit(err) == 0 ? 0 : 2;
  } catch (const std::exception& err) {
    std::cerr << "logrhythm: error: " << err.what() << '\n';
    return 2;
  }

  try {
    if (*g) {
      gen.render.validate();
      cmd_gen(gen, as_json);
    } else if (*a) {
      cmd_analyze(an, as_json);
    } else if (*t) {
      cmd_tempo(te, as_json);
    } else if (*b) {
      cmd_beats(be, as_json);
    } else if (*d) {
      cmd_downbeats(db, as_json);
    } else if (*tg) {
      cmd_targets(ta, as_json);
    } else if (*trn) {
      tr.set.validate();
      tr.train.validate();
      cmd_train(tr, as_json);
    } else if (*f) {
      cmd_fingerprint(fp, as_json);
    } else if (*m) {
      cmd_match(ma, as_json);
    } else if (*e) {
      cmd_eval(ev, as_json);
    } else if (*o) {
      cmd_onsets(on, as_json);
    }
  } catch (const UsageError& err) {
    std::cerr << "logrhythm: error: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "logrhythm: error: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
