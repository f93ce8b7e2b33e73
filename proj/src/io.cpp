#include "logrhythm/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace logrhythm::io {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "io assumes a little-endian host");

constexpr int kModelVersion = 1;

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw FormatError("cannot write " + path.string());
  }

  void magic(const char* m) { out_.write(m, 4); }
  void u32(std::size_t v) {
    if (v > std::numeric_limits<std::uint32_t>::max()) {
      throw FormatError("value too large for the header of " + path_.string());
    }
    const auto x = static_cast<std::uint32_t>(v);
    out_.write(reinterpret_cast<const char*>(&x), sizeof x);
  }
  void f64(double v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }
  void f32(double v) {
    const auto x = static_cast<float>(v);
    out_.write(reinterpret_cast<const char*>(&x), sizeof x);
  }
  void close() {
    out_.close();
    if (!out_) throw FormatError("write failed for " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw FormatError("cannot open " + path.string());
  }

  void magic(const char* m) {
    char got[4] = {};
    read(got, 4);
    if (std::memcmp(got, m, 4) != 0) {
      throw FormatError(path_.string() + ": expected magic " + std::string(m, 4));
    }
  }
  std::size_t u32() {
    std::uint32_t x = 0;
    read(&x, sizeof x);
    return x;
  }
  double f64() {
    double x = 0;
    read(&x, sizeof x);
    return x;
  }
  double f32() {
    float x = 0;
    read(&x, sizeof x);
    return x;
  }
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) {
      throw FormatError(path_.string() + ": trailing bytes");
    }
  }

 private:
  void read(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (!in_) throw FormatError(path_.string() + ": truncated file");
  }

  std::filesystem::path path_;
  std::ifstream in_;
};

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw FormatError("write failed for " + path.string());
}

json config_json(const cqt::CqtConfig& c) {
  return {{"f_min", c.f_min},
          {"f_max", c.f_max},
          {"bins_per_octave", c.bins_per_octave},
          {"signal_rate_hz", c.signal_rate_hz},
          {"hop_frames", c.hop_frames},
          {"tf_tradeoff", c.tf_tradeoff},
          {"cycles", c.cycles},
          {"window", "hann"},
          {"kernel_threshold", c.kernel_threshold}};
}

cqt::CqtConfig config_from_json(const json& j) {
  cqt::CqtConfig c;
  c.f_min = j.at("f_min").get<double>();
  c.f_max = j.at("f_max").get<double>();
  c.bins_per_octave = j.at("bins_per_octave").get<int>();
  c.signal_rate_hz = j.at("signal_rate_hz").get<double>();
  c.hop_frames = j.at("hop_frames").get<int>();
  c.tf_tradeoff = j.value("tf_tradeoff", 0.0);
  c.cycles = j.value("cycles", 4.0);
  c.kernel_threshold = j.value("kernel_threshold", 1e-4);
  if (j.value("window", std::string("hann")) != "hann") throw FormatError("unknown window");
  c.validate();
  return c;
}

template <class F>
auto guarded(const std::filesystem::path& path, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void check_header(const std::filesystem::path& path, const cqt::CqtConfig& c, double rate,
                  double f_min, std::size_t bpo, std::size_t hop) {
  if (c.signal_rate_hz != rate || c.f_min != f_min ||
      static_cast<std::size_t>(c.bins_per_octave) != bpo ||
      static_cast<std::size_t>(c.hop_frames) != hop) {
    throw FormatError(path.string() + ": sidecar disagrees with the binary header");
  }
}

const char* activation_name(convnet::Activation a) {
  return a == convnet::Activation::relu ? "relu" : "identity";
}

convnet::Activation activation_from(const std::string& s) {
  if (s == "relu") return convnet::Activation::relu;
  if (s == "identity") return convnet::Activation::identity;
  throw FormatError("unknown activation " + s);
}

const char* pool_name(convnet::PoolMode m) {
  switch (m) {
    case convnet::PoolMode::none: return "none";
    case convnet::PoolMode::full_range: return "full_range";
    case convnet::PoolMode::octave_bands: return "octave_bands";
  }
  return "none";
}

convnet::PoolMode pool_from(const std::string& s) {
  if (s == "none") return convnet::PoolMode::none;
  if (s == "full_range") return convnet::PoolMode::full_range;
  if (s == "octave_bands") return convnet::PoolMode::octave_bands;
  throw FormatError("unknown pool mode " + s);
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".json";
  return p;
}

void write_activations(const std::filesystem::path& path, const ActivationChannels& act) {
  act.validate();
  Writer w(path);
  w.magic("RACT");
  w.u32(act.channels);
  w.u32(act.frames);
  w.f64(act.signal_rate_hz);
  for (double v : act.data) w.f32(v);
  w.close();
}

ActivationChannels read_activations(const std::filesystem::path& path) {
  Reader r(path);
  r.magic("RACT");
  const std::size_t channels = r.u32();
  const std::size_t frames = r.u32();
  const double rate = r.f64();
  if (channels == 0 || frames == 0) throw FormatError(path.string() + ": empty activations");
  if (!(rate > 0.0) || !std::isfinite(rate)) throw FormatError(path.string() + ": bad rate");
  ActivationChannels act(channels, frames, rate);
  for (double& v : act.data) v = r.f32();
  r.expect_end();
  guarded(path, [&] { act.validate(); return 0; });
  return act;
}

void write_rhythmogram(const std::filesystem::path& path, const cqt::Rhythmogram& rg) {
  const auto& c = rg.config;
  Writer w(path);
  w.magic("RGRM");
  w.u32(rg.channels);
  w.u32(rg.frames);
  w.u32(rg.bins);
  w.f64(c.signal_rate_hz);
  w.f64(c.f_min);
  w.u32(static_cast<std::size_t>(c.bins_per_octave));
  w.u32(static_cast<std::size_t>(c.hop_frames));
  for (const auto& z : rg.coeffs) {
    w.f32(z.real());
    w.f32(z.imag());
  }
  w.close();
  write_json(sidecar_path(path), {{"format", "RGRM"},
                                  {"channels", rg.channels},
                                  {"frames", rg.frames},
                                  {"bins", rg.bins},
                                  {"n_samples", rg.n_samples},
                                  {"config", config_json(c)}});
}

cqt::Rhythmogram read_rhythmogram(const std::filesystem::path& path) {
  Reader r(path);
  r.magic("RGRM");
  cqt::Rhythmogram rg;
  rg.channels = r.u32();
  rg.frames = r.u32();
  rg.bins = r.u32();
  const double rate = r.f64();
  const double f_min = r.f64();
  const std::size_t bpo = r.u32();
  const std::size_t hop = r.u32();
  rg.coeffs.resize(rg.channels * rg.frames * rg.bins);
  for (auto& z : rg.coeffs) {
    const double re = r.f32();
    z = {re, r.f32()};
  }
  r.expect_end();

  const auto side = sidecar_path(path);
  const json meta = read_json(side);
  guarded(side, [&] {
    rg.config = config_from_json(meta.at("config"));
    rg.n_samples = meta.at("n_samples").get<std::size_t>();
    if (meta.at("channels").get<std::size_t>() != rg.channels ||
        meta.at("frames").get<std::size_t>() != rg.frames ||
        meta.at("bins").get<std::size_t>() != rg.bins) {
      throw FormatError(side.string() + ": shape disagrees with the binary header");
    }
    return 0;
  });
  check_header(path, rg.config, rate, f_min, bpo, hop);
  if (rg.config.n_bins() != rg.bins) throw FormatError(path.string() + ": bin count mismatch");
  for (std::size_t k = 0; k < rg.bins; ++k) rg.bin_freqs.push_back(rg.config.bin_frequency(k));
  for (std::size_t m = 0; m < rg.frames; ++m) {
    rg.frame_times.push_back(static_cast<double>(m * hop) / rate);
  }
  return rg;
}

void write_featuremap(const std::filesystem::path& path, const phasefeat::FeatureMap& map,
                      const cqt::CqtConfig& c) {
  Writer w(path);
  w.magic("RFMP");
  w.u32(map.n_rows());
  w.u32(map.frames());
  w.u32(map.bins());
  w.f64(c.signal_rate_hz);
  w.f64(c.f_min);
  w.u32(static_cast<std::size_t>(c.bins_per_octave));
  w.u32(static_cast<std::size_t>(c.hop_frames));
  for (double v : map.data.values()) w.f32(v);
  w.close();

  json rows = json::array();
  for (const auto& t : map.rows) {
    rows.push_back({{"kind", phasefeat::to_string(t.kind)},
                    {"channel", t.channel},
                    {"partner", t.partner}});
  }
  json meta = {{"format", "RFMP"},
               {"rows", map.n_rows()},
               {"frames", map.frames()},
               {"bins", map.bins()},
               {"channel_stride", map.channel_stride},
               {"magnitude_scale", map.magnitude_scale},
               {"row_kinds", rows},
               {"config", config_json(c)}};
  if (!map.valid.empty()) meta["valid"] = map.valid;
  write_json(sidecar_path(path), meta);
}

phasefeat::FeatureMap read_featuremap(const std::filesystem::path& path) {
  Reader r(path);
  r.magic("RFMP");
  const std::size_t rows = r.u32();
  const std::size_t frames = r.u32();
  const std::size_t bins = r.u32();
  const double rate = r.f64();
  const double f_min = r.f64();
  const std::size_t bpo = r.u32();
  const std::size_t hop = r.u32();
  phasefeat::FeatureMap map;
  map.data = Tensor({rows, frames, bins});
  for (double& v : map.data.values()) v = r.f32();
  r.expect_end();

  const auto side = sidecar_path(path);
  const json meta = read_json(side);
  guarded(side, [&] {
    const auto c = config_from_json(meta.at("config"));
    check_header(path, c, rate, f_min, bpo, hop);
    map.channel_stride = meta.at("channel_stride").get<std::size_t>();
    map.magnitude_scale = meta.at("magnitude_scale").get<double>();
    for (const auto& t : meta.at("row_kinds")) {
      map.rows.push_back({phasefeat::row_kind_from_string(t.at("kind").get<std::string>()),
                          t.at("channel").get<std::size_t>(), t.at("partner").get<int>()});
    }
    if (meta.contains("valid")) map.valid = meta.at("valid").get<std::vector<std::uint8_t>>();
    return 0;
  });
  if (map.rows.size() != rows) throw FormatError(side.string() + ": row table length mismatch");
  if (!map.valid.empty() && map.valid.size() != rows * bins) {
    throw FormatError(side.string() + ": valid mask size mismatch");
  }
  return map;
}

void write_times(const std::filesystem::path& path, std::span<const double> times) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  char buf[64];
  for (double t : times) {
    std::snprintf(buf, sizeof buf, "%.6f\n", t);
    out << buf;
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

std::vector<double> read_times(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<double> times;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string field;
    if (!(ls >> field) || field[0] == '#') continue;
    std::size_t used = 0;
    double t = 0.0;
    try {
      t = std::stod(field, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != field.size() || !std::isfinite(t)) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": not a number");
    }
    times.push_back(t);
  }
  return times;
}

void save_model(const std::filesystem::path& path, const convnet::ModelParams& model) {
  model.validate();
  json layers = json::array();
  for (const auto& l : model.layers) {
    const auto& s = l.spec;
    layers.push_back({{"rows", s.rows},
                      {"frames", s.frames},
                      {"bins", s.bins},
                      {"depth", s.depth},
                      {"stride_rows", s.stride_rows},
                      {"stride_bins", s.stride_bins},
                      {"activation", activation_name(s.activation)},
                      {"n_filters", s.n_filters}});
  }
  auto blob = path;
  blob += ".bin";
  json meta = {{"format", "logrhythm-model"},
               {"version", kModelVersion},
               {"bins_per_octave", model.bins_per_octave},
               {"layers", layers},
               {"pool",
                {{"mode", pool_name(model.pool.mode)},
                 {"with_position", model.pool.with_position},
                 {"band_octaves", model.pool.band_octaves}}},
               {"blob", blob.filename().string()},
               {"parameter_count", model.parameters().size()}};
  if (model.freq_weights) {
    meta["freq_weights"] = {{"bins", model.freq_weights->w.size()},
                            {"penalty", model.freq_weights->penalty}};
  }
  if (model.head) {
    meta["head"] = {{"inputs", model.head->inputs}, {"outputs", model.head->outputs}};
  }
  write_json(path, meta);
  Writer w(blob);
  for (const double* p : model.parameters()) w.f32(*p);
  w.close();
}

convnet::ModelParams load_model(const std::filesystem::path& path) {
  const json meta = read_json(path);
  convnet::ModelParams model;
  std::filesystem::path blob;
  guarded(path, [&] {
    if (meta.at("format").get<std::string>() != "logrhythm-model") {
      throw FormatError(path.string() + ": not a model file");
    }
    const int version = meta.at("version").get<int>();
    if (version != kModelVersion) {
      throw FormatError(path.string() + ": unsupported model version " + std::to_string(version));
    }
    model.bins_per_octave = meta.at("bins_per_octave").get<int>();
    for (const auto& j : meta.at("layers")) {
      convnet::ConvLayerSpec s;
      s.rows = j.at("rows").get<std::size_t>();
      s.frames = j.at("frames").get<std::size_t>();
      s.bins = j.at("bins").get<std::size_t>();
      s.depth = j.at("depth").get<std::size_t>();
      s.stride_rows = j.at("stride_rows").get<std::size_t>();
      s.stride_bins = j.at("stride_bins").get<std::size_t>();
      s.activation = activation_from(j.at("activation").get<std::string>());
      s.n_filters = j.at("n_filters").get<std::size_t>();
      s.validate();
      model.layers.emplace_back(s);
    }
    const auto& p = meta.at("pool");
    model.pool.mode = pool_from(p.at("mode").get<std::string>());
    model.pool.with_position = p.at("with_position").get<bool>();
    model.pool.band_octaves = p.at("band_octaves").get<double>();
    if (meta.contains("freq_weights")) {
      convnet::SmoothFreqWeights fw;
      fw.w.resize(meta["freq_weights"].at("bins").get<std::size_t>());
      fw.penalty = meta["freq_weights"].at("penalty").get<double>();
      model.freq_weights = fw;
    }
    if (meta.contains("head")) {
      model.head = convnet::DenseHead(meta["head"].at("inputs").get<std::size_t>(),
                                      meta["head"].at("outputs").get<std::size_t>());
    }
    blob = path.parent_path() / meta.at("blob").get<std::string>();
    return 0;
  });
  auto params = model.parameters();
  if (meta.at("parameter_count").get<std::size_t>() != params.size()) {
    throw FormatError(path.string() + ": parameter count disagrees with the shapes");
  }
  Reader r(blob);
  for (double* p : params) *p = r.f32();
  r.expect_end();
  guarded(path, [&] { model.validate(); return 0; });
  return model;
}

void write_fingerprints(const std::filesystem::path& path,
                        const std::vector<tracker::Fingerprint>& fps) {
  json arr = json::array();
  for (const auto& fp : fps) {
    arr.push_back({{"pattern_id", fp.pattern_id},
                   {"provenance", fp.provenance},
                   {"values", fp.values}});
  }
  write_json(path, arr);
}

std::vector<tracker::Fingerprint> read_fingerprints(const std::filesystem::path& path) {
  const json arr = read_json(path);
  return guarded(path, [&] {
    std::vector<tracker::Fingerprint> fps;
    for (const auto& j : arr) {
      tracker::Fingerprint fp;
      fp.pattern_id = j.at("pattern_id").get<std::string>();
      fp.provenance = j.at("provenance").get<std::string>();
      fp.values = j.at("values").get<std::vector<double>>();
      fps.push_back(std::move(fp));
    }
    return fps;
  });
}

}  // namespace logrhythm::io
