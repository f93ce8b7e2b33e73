#include "logrhythm/onsets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fft.hpp"
#include "logrhythm/parallel.hpp"

namespace logrhythm::onsets {

namespace {

using cplx = std::complex<double>;

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

void put32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n));
  }
  return w;
}

struct Framing {
  std::size_t window;
  std::size_t hop;
  std::size_t frames;
};

Framing framing(const AudioClip& audio, double window_seconds, double frame_rate) {
  require(window_seconds > 0.0 && frame_rate > 0.0, "onsets: window and frame rate must be > 0");
  const auto window = static_cast<std::size_t>(std::lround(window_seconds * audio.sample_rate));
  const auto hop = static_cast<std::size_t>(std::lround(audio.sample_rate / frame_rate));
  require(window >= 2 && hop >= 1, "onsets: window or hop rounds to nothing");
  if (audio.samples.size() <= window) {
    throw std::invalid_argument("onsets: audio shorter than one analysis window");
  }
  return {window, hop, (audio.samples.size() - window) / hop + 1};
}

// Magnitude spectra of every frame, frames x (fft_size / 2 + 1), scaled to
// sinusoid amplitude.
std::vector<std::vector<double>> stft_magnitude(const AudioClip& audio, const Framing& f,
                                                std::size_t fft_size) {
  const auto w = hann(f.window);
  const double scale = 2.0 / std::accumulate(w.begin(), w.end(), 0.0);
  const detail::Fft fft(fft_size);
  std::vector<std::vector<double>> out(f.frames);
  parallel_for(f.frames, [&](std::size_t n) {
    std::vector<cplx> buf(fft_size);
    for (std::size_t i = 0; i < f.window; ++i) buf[i] = audio.samples[n * f.hop + i] * w[i];
    fft.forward(buf);
    auto& mag = out[n];
    mag.resize(fft_size / 2 + 1);
    for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(buf[k]) * scale;
  });
  return out;
}

}  // namespace

void AudioClip::validate() const {
  require(std::isfinite(sample_rate) && sample_rate >= 8000.0,
          "audio: sample rate must be at least 8000 Hz");
  for (double v : samples) require(std::isfinite(v), "audio: non-finite sample");
}

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("wav: cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 12 || std::memcmp(data, "RIFF", 4) != 0 || std::memcmp(data + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("wav: not a RIFF/WAVE file: " + path.string());
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* payload = nullptr;
  std::size_t payload_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = data + pos;
    const std::size_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      // Tolerate a truncated data chunk; anything else is malformed.
      if (std::memcmp(chunk, "data", 4) != 0) throw std::runtime_error("wav: truncated chunk");
    }
    const std::size_t avail = std::min(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw std::runtime_error("wav: short fmt chunk");
      format = le16(data + body);
      channels = le16(data + body + 2);
      rate = le32(data + body + 4);
      bits = le16(data + body + 14);
      if (format == 0xfffe) {
        if (avail < 26) throw std::runtime_error("wav: short extensible fmt chunk");
        format = le16(data + body + 24);
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      payload = data + body;
      payload_size = avail;
    }
    pos = body + size + (size & 1);
  }
  if (channels == 0 || rate == 0) throw std::runtime_error("wav: missing fmt chunk");
  if (!payload) throw std::runtime_error("wav: missing data chunk");
  const bool pcm16 = format == 1 && bits == 16;
  const bool float32 = format == 3 && bits == 32;
  if (!pcm16 && !float32) {
    throw std::runtime_error("wav: unsupported sample format (need PCM 16-bit or float 32-bit)");
  }

  const std::size_t width = bits / 8;
  const std::size_t frames = payload_size / (width * channels);
  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples.resize(frames);
  for (std::size_t n = 0; n < frames; ++n) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = payload + (n * channels + c) * width;
      if (pcm16) {
        acc += static_cast<std::int16_t>(le16(p)) / 32768.0;
      } else {
        const std::uint32_t u = le32(p);
        float f;
        std::memcpy(&f, &u, sizeof f);
        acc += f;
      }
    }
    clip.samples[n] = acc / channels;
  }
  clip.validate();
  return clip;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip, WavFormat format) {
  clip.validate();
  const bool pcm = format == WavFormat::pcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const auto rate = static_cast<std::uint32_t>(std::lround(clip.sample_rate));
  const auto data_size = static_cast<std::uint32_t>(clip.samples.size() * bits / 8);
  std::string out;
  out.reserve(44 + data_size);
  out += "RIFF";
  put32(out, 36 + data_size);
  out += "WAVEfmt ";
  put32(out, 16);
  put16(out, pcm ? 1 : 3);
  put16(out, 1);
  put32(out, rate);
  put32(out, rate * bits / 8);
  put16(out, bits / 8);
  put16(out, bits);
  out += "data";
  put32(out, data_size);
  for (double v : clip.samples) {
    if (pcm) {
      const double c = std::clamp(v, -1.0, 1.0);
      put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c * 32767.0))));
    } else {
      const float f = static_cast<float>(v);
      std::uint32_t u;
      std::memcpy(&u, &f, sizeof u);
      put32(out, u);
    }
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("wav: cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw std::runtime_error("wav: write failed for " + path.string());
}

BandSpec BandSpec::bark6(double sample_rate) {
  constexpr std::array<double, 7> kEdges = {40.0, 200.0, 510.0, 1080.0, 2000.0, 4400.0, 16000.0};
  const double top = std::min(kEdges.back(), 0.499 * sample_rate);
  BandSpec spec;
  for (double e : kEdges) {
    if (e < top) spec.edges_hz.push_back(e);
  }
  spec.edges_hz.push_back(top);
  return spec;
}

void BandSpec::validate(double sample_rate) const {
  require(edges_hz.size() >= 2, "bands: need at least two edges");
  for (std::size_t i = 0; i < edges_hz.size(); ++i) {
    require(std::isfinite(edges_hz[i]) && edges_hz[i] >= 0.0, "bands: edges must be >= 0");
    if (i > 0) require(edges_hz[i] > edges_hz[i - 1], "bands: edges must be strictly increasing");
  }
  require(edges_hz.back() <= sample_rate / 2.0, "bands: top edge above Nyquist");
}

ActivationChannels band_flux(const AudioClip& audio, const BandSpec& bands,
                             const FluxConfig& config) {
  audio.validate();
  bands.validate(audio.sample_rate);
  require(config.energy_floor > 0.0, "band_flux: energy floor must be > 0");
  const Framing f = framing(audio, config.window_seconds, config.frame_rate_hz);
  const std::size_t fft_size = detail::next_pow2(f.window);
  const auto spectra = stft_magnitude(audio, f, fft_size);

  const std::size_t n_bands = bands.bands();
  const double bin_hz = audio.sample_rate / static_cast<double>(fft_size);
  std::vector<std::size_t> lo(n_bands), hi(n_bands);
  for (std::size_t b = 0; b < n_bands; ++b) {
    lo[b] = static_cast<std::size_t>(std::ceil(bands.edges_hz[b] / bin_hz));
    hi[b] = std::min(fft_size / 2 + 1,
                     static_cast<std::size_t>(std::ceil(bands.edges_hz[b + 1] / bin_hz)));
  }

  ActivationChannels out(n_bands, f.frames, config.frame_rate_hz);
  for (std::size_t b = 0; b < n_bands; ++b) {
    out.channel_names[b] = "band" + std::to_string(b);
    double prev = 0.0;
    for (std::size_t n = 0; n < f.frames; ++n) {
      double energy = 0.0;
      for (std::size_t k = lo[b]; k < hi[b]; ++k) energy += spectra[n][k] * spectra[n][k];
      const double level = std::log(energy + config.energy_floor);
      out.at(b, n) = n == 0 ? 0.0 : std::max(0.0, level - prev);
      prev = level;
    }
  }
  return out;
}

void OnsetFilterConfig::validate() const {
  require(bins_per_octave >= 1 && octaves >= 1 && readouts >= 1,
          "onset filter: bins, octaves and readouts must be >= 1");
  require(f_low_hz > 0.0 && readout_low_hz > 0.0, "onset filter: frequencies must be > 0");
  require(pitch_sigma_narrow > 0.0 && pitch_sigma_wide > 0.0 && time_sigma > 0.0,
          "onset filter: widths must be > 0");
  require(pitch_surround_weight >= 0.0, "onset filter: surround weight must be >= 0");
  require(time_half_extent >= 1, "onset filter: time extent must be >= 1");
  require(!copy_offsets.empty() && copy_offsets.size() == copy_weights.size(),
          "onset filter: one weight per copy offset");
  require(log_gain > 0.0, "onset filter: log gain must be > 0");
}

OnsetFilter OnsetFilter::build(const OnsetFilterConfig& cfg) {
  cfg.validate();
  OnsetFilter f;
  const auto half = static_cast<int>(cfg.pitch_half_extent);
  auto gauss = [](double x, double s) {
    return std::exp(-0.5 * x * x / (s * s)) / (s * std::sqrt(2.0 * std::numbers::pi));
  };
  std::vector<double> dog(2 * half + 1);
  for (int i = -half; i <= half; ++i) {
    dog[static_cast<std::size_t>(i + half)] =
        gauss(i, cfg.pitch_sigma_narrow) - cfg.pitch_surround_weight * gauss(i, cfg.pitch_sigma_wide);
  }

  const int lo = *std::min_element(cfg.copy_offsets.begin(), cfg.copy_offsets.end()) - half;
  const int hi = *std::max_element(cfg.copy_offsets.begin(), cfg.copy_offsets.end()) + half;
  f.row_origin = lo;
  f.pitch_profile.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
  for (std::size_t c = 0; c < cfg.copy_offsets.size(); ++c) {
    for (int i = -half; i <= half; ++i) {
      f.pitch_profile[static_cast<std::size_t>(cfg.copy_offsets[c] + i - lo)] +=
          cfg.copy_weights[c] * dog[static_cast<std::size_t>(i + half)];
    }
  }

  const auto th = static_cast<int>(cfg.time_half_extent);
  f.time_profile.resize(static_cast<std::size_t>(2 * th + 1));
  double l1 = 0.0;
  for (int j = -th; j <= th; ++j) {
    const double v = j * std::exp(-0.5 * j * j / (cfg.time_sigma * cfg.time_sigma));
    f.time_profile[static_cast<std::size_t>(j + th)] = v;
    l1 += std::abs(v);
  }
  for (double& v : f.time_profile) v /= l1;

  f.kernel = Tensor({f.pitch_profile.size(), f.time_profile.size()});
  for (std::size_t i = 0; i < f.pitch_profile.size(); ++i) {
    for (std::size_t j = 0; j < f.time_profile.size(); ++j) {
      f.kernel(i, j) = f.pitch_profile[i] * f.time_profile[j];
    }
  }
  return f;
}

Tensor log_spectrogram(const AudioClip& audio, const OnsetFilterConfig& cfg) {
  audio.validate();
  cfg.validate();
  const Framing f = framing(audio, cfg.window_seconds, cfg.frame_rate_hz);
  // Zero padding to twice the window smooths the interpolation onto the log axis.
  const std::size_t fft_size = detail::next_pow2(2 * f.window);
  const auto spectra = stft_magnitude(audio, f, fft_size);
  const std::size_t bins = static_cast<std::size_t>(cfg.octaves) * cfg.bins_per_octave;
  const double nyquist_bin = static_cast<double>(fft_size / 2);

  Tensor out({bins, f.frames});
  for (std::size_t k = 0; k < bins; ++k) {
    const double hz = cfg.f_low_hz * std::exp2(static_cast<double>(k) / cfg.bins_per_octave);
    const double pos = hz * static_cast<double>(fft_size) / audio.sample_rate;
    if (pos >= nyquist_bin) continue;
    const auto i0 = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i0);
    for (std::size_t n = 0; n < f.frames; ++n) {
      const double mag = (1.0 - frac) * spectra[n][i0] + frac * spectra[n][i0 + 1];
      out(k, n) = std::log1p(cfg.log_gain * mag);
    }
  }
  return out;
}

namespace {

ActivationChannels onset_readout(const AudioClip& audio, const OnsetFilterConfig& cfg,
                                 bool rectify) {
  const Tensor spec = log_spectrogram(audio, cfg);
  const OnsetFilter filter = OnsetFilter::build(cfg);
  const std::size_t bins = spec.dim(0);
  const std::size_t frames = spec.dim(1);
  require(frames > 2 * cfg.time_half_extent, "pitched_onsets: audio shorter than the filter");

  // Separable: time derivative per pitch bin (edges replicated), then the
  // pitch profile (zero outside the axis).
  const auto th = static_cast<std::ptrdiff_t>(cfg.time_half_extent);
  const auto last = static_cast<std::ptrdiff_t>(frames) - 1;
  Tensor deriv({bins, frames});
  for (std::size_t k = 0; k < bins; ++k) {
    for (std::size_t n = 0; n < frames; ++n) {
      double acc = 0.0;
      for (std::ptrdiff_t j = -th; j <= th; ++j) {
        const std::ptrdiff_t m = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n) + j, 0, last);
        acc += filter.time_profile[static_cast<std::size_t>(j + th)] *
               spec(k, static_cast<std::size_t>(m));
      }
      deriv(k, n) = acc;
    }
  }
  Tensor response({bins, frames});
  for (std::size_t k = 0; k < bins; ++k) {
    for (std::size_t i = 0; i < filter.pitch_profile.size(); ++i) {
      const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(k) + filter.row_origin +
                                 static_cast<std::ptrdiff_t>(i);
      if (src < 0 || src >= static_cast<std::ptrdiff_t>(bins)) continue;
      const double w = filter.pitch_profile[i];
      for (std::size_t n = 0; n < frames; ++n) {
        response(k, n) += w * deriv(static_cast<std::size_t>(src), n);
      }
    }
  }

  ActivationChannels out(static_cast<std::size_t>(cfg.readouts), frames, cfg.frame_rate_hz);
  const double bpo = cfg.bins_per_octave;
  for (int c = 0; c < cfg.readouts; ++c) {
    out.channel_names[static_cast<std::size_t>(c)] = "octave" + std::to_string(c);
    const double center = bpo * std::log2(cfg.readout_low_hz * std::exp2(c) / cfg.f_low_hz);
    double total = 0.0;
    std::vector<std::pair<std::size_t, double>> taps;
    for (std::size_t k = 0; k < bins; ++k) {
      const double w = 1.0 - std::abs(static_cast<double>(k) - center) / bpo;
      if (w > 0.0) {
        taps.emplace_back(k, w);
        total += w;
      }
    }
    require(total > 0.0, "pitched_onsets: readout octave outside the log axis");
    for (std::size_t n = 0; n < frames; ++n) {
      double acc = 0.0;
      for (const auto& [k, w] : taps) {
        const double r = response(k, n);
        acc += w * (rectify ? std::max(0.0, r) : r);
      }
      out.at(static_cast<std::size_t>(c), n) = acc / total;
    }
  }
  return out;
}

}  // namespace

ActivationChannels pitched_onset_response(const AudioClip& audio, const OnsetFilterConfig& cfg) {
  return onset_readout(audio, cfg, false);
}

// Rectified per pitch bin, before the readout.
ActivationChannels pitched_onsets(const AudioClip& audio, const OnsetFilterConfig& cfg) {
  return onset_readout(audio, cfg, true);
}

}  // namespace logrhythm::onsets
