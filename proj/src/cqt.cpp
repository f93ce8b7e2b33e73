#include "logrhythm/cqt.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "fft.hpp"
#include "logrhythm/parallel.hpp"

namespace logrhythm::cqt {

namespace {

using cplx = std::complex<double>;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Frequencies whose normal response falls below this fraction of the peak
// lie outside the passband and are not reconstructed.
constexpr double kPassband = 1e-2;

// Atom spectra on the inverse's padded grid are trimmed below this fraction
// of their peak.
constexpr double kSpectrumFloor = 1e-4;

struct AtomShape {
  std::size_t half;
  std::vector<cplx> samples;  // offsets -half..half
};

AtomShape make_atom(const CqtConfig& cfg, double freq, std::size_t length) {
  const std::size_t half = length / 2;
  std::vector<double> w(2 * half + 1);
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double tau = static_cast<double>(j) - static_cast<double>(half);
    w[j] = 0.5 + 0.5 * std::cos(kTwoPi * tau / static_cast<double>(length));
  }
  const double norm = 2.0 / std::accumulate(w.begin(), w.end(), 0.0);
  AtomShape atom{half, std::vector<cplx>(w.size())};
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double tau = static_cast<double>(j) - static_cast<double>(half);
    atom.samples[j] = norm * w[j] * std::polar(1.0, kTwoPi * freq * tau / cfg.signal_rate_hz);
  }
  return atom;
}

bool same_rate(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(a, b); }

// A x for one real signal: frames x bins coefficients.
std::vector<cplx> analyze(const CqtKernel& kernel, std::span<const double> x,
                          std::size_t n_frames) {
  const std::size_t nfft = kernel.fft_size();
  const std::size_t bins = kernel.n_bins();
  const auto hop = static_cast<std::ptrdiff_t>(kernel.config().hop_frames);
  const auto len = static_cast<std::ptrdiff_t>(x.size());
  std::vector<cplx> out(n_frames * bins);
  std::vector<cplx> seg(nfft);
  for (std::size_t m = 0; m < n_frames; ++m) {
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(m) * hop -
                                 static_cast<std::ptrdiff_t>(nfft / 2);
    for (std::size_t j = 0; j < nfft; ++j) {
      const std::ptrdiff_t n = start + static_cast<std::ptrdiff_t>(j);
      seg[j] = (n >= 0 && n < len) ? cplx(x[static_cast<std::size_t>(n)], 0.0) : cplx();
    }
    kernel.fft().forward(seg);
    for (std::size_t k = 0; k < bins; ++k) {
      const auto& atom = kernel.atoms()[k];
      cplx acc;
      for (std::size_t i = 0; i < atom.index.size(); ++i) acc += seg[atom.index[i]] * atom.value[i];
      out[m * bins + k] = acc;
    }
  }
  return out;
}

// The frame on a zero-padded circular grid of P samples, P a multiple of the
// hop and at least one window longer than the signal so atoms never wrap
// onto signal samples. Each bin's atom is kept as a sparse DFT on that grid;
// subsampling at the hop folds a spectrum onto Q = P / hop points.
class FrameOperator {
 public:
  FrameOperator(const CqtKernel& kernel, std::size_t n_samples, std::size_t n_frames)
      : n_samples_(n_samples), n_frames_(n_frames), bins_(kernel.n_bins()) {
    const auto& cfg = kernel.config();
    hop_ = static_cast<std::size_t>(cfg.hop_frames);
    classes_ = detail::next_smooth((n_samples + kernel.longest_window() + hop_ - 1) / hop_);
    period_ = classes_ * hop_;
    fft_ = std::make_unique<detail::Fft>(period_);
    fold_fft_ = std::make_unique<detail::Fft>(classes_);

    std::vector<cplx> buf(period_);
    const auto p = static_cast<std::ptrdiff_t>(period_);
    spectra_.resize(bins_);
    for (std::size_t k = 0; k < bins_; ++k) {
      std::fill(buf.begin(), buf.end(), cplx());
      const AtomShape atom = make_atom(cfg, kernel.bin_freqs()[k], kernel.window_lengths()[k]);
      for (std::size_t j = 0; j < atom.samples.size(); ++j) {
        const auto tau = static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(atom.half);
        buf[static_cast<std::size_t>(((tau % p) + p) % p)] += atom.samples[j];
      }
      fft_->forward(buf);
      double peak = 0.0;
      for (const auto& v : buf) peak = std::max(peak, std::abs(v));
      for (std::size_t l = 0; l < period_; ++l) {
        if (std::abs(buf[l]) > kSpectrumFloor * peak) {
          spectra_[k].index.push_back(l);
          spectra_[k].value.push_back(buf[l]);
        }
      }
    }
  }

  std::size_t period() const { return period_; }
  std::size_t classes() const { return classes_; }
  std::size_t hop() const { return hop_; }
  std::size_t bins() const { return bins_; }
  const CqtKernel::SparseAtom& spectrum(std::size_t k) const { return spectra_[k]; }
  const detail::Fft& fft() const { return *fft_; }

  // A x: frames x bins coefficients.
  std::vector<cplx> analyze(std::span<const double> x) const {
    std::vector<cplx> spec(period_);
    std::copy(x.begin(), x.end(), spec.begin());
    fft_->forward(spec);
    std::vector<cplx> out(n_frames_ * bins_);
    std::vector<cplx> folded(classes_);
    const double scale = 1.0 / static_cast<double>(period_);
    for (std::size_t k = 0; k < bins_; ++k) {
      std::fill(folded.begin(), folded.end(), cplx());
      const auto& sp = spectra_[k];
      for (std::size_t i = 0; i < sp.index.size(); ++i) {
        folded[sp.index[i] % classes_] += spec[sp.index[i]] * std::conj(sp.value[i]);
      }
      fold_fft_->backward(folded);
      for (std::size_t m = 0; m < n_frames_; ++m) out[m * bins_ + k] = folded[m] * scale;
    }
    return out;
  }

  // Re(A^H c) onto the signal samples.
  std::vector<double> synthesize(std::span<const cplx> coeffs) const {
    std::vector<cplx> spec(period_);
    std::vector<cplx> frames(classes_);
    for (std::size_t k = 0; k < bins_; ++k) {
      std::fill(frames.begin(), frames.end(), cplx());
      for (std::size_t m = 0; m < n_frames_; ++m) frames[m] = coeffs[m * bins_ + k];
      fold_fft_->forward(frames);
      const auto& sp = spectra_[k];
      for (std::size_t i = 0; i < sp.index.size(); ++i) {
        spec[sp.index[i]] += sp.value[i] * frames[sp.index[i] % classes_];
      }
    }
    fft_->backward(spec);
    std::vector<double> y(n_samples_);
    const double scale = 1.0 / static_cast<double>(period_);
    for (std::size_t n = 0; n < n_samples_; ++n) y[n] = spec[n].real() * scale;
    return y;
  }

 private:
  std::size_t n_samples_;
  std::size_t n_frames_;
  std::size_t bins_;
  std::size_t hop_ = 1;
  std::size_t classes_ = 0;
  std::size_t period_ = 0;
  std::unique_ptr<detail::Fft> fft_;
  std::unique_ptr<detail::Fft> fold_fft_;
  std::vector<CqtKernel::SparseAtom> spectra_;
};

// Inverse of Re(A^H A) for the hop-periodic frame on the operator's grid.
// Frequencies l and l + j Q alias through the frame grid, so away from the
// signal edges the operator is block diagonal over those classes; each block
// is inverted on its passband members.
class Preconditioner {
 public:
  Preconditioner(const FrameOperator& op, double band_low_hz, double band_high_hz, double rate)
      : op_(op), members_(op.classes()), inverse_(op.classes()) {
    const std::size_t period = op.period();
    const std::size_t classes = op.classes();
    const std::size_t hop = op.hop();
    const std::size_t bins = op.bins();
    std::vector<cplx> dense(bins * period);
    for (std::size_t k = 0; k < bins; ++k) {
      const auto& sp = op.spectrum(k);
      for (std::size_t i = 0; i < sp.index.size(); ++i) dense[k * period + sp.index[i]] = sp.value[i];
    }

    using Block = Eigen::MatrixXcd;
    std::vector<Block> blocks(classes);
    const auto nb = static_cast<Eigen::Index>(bins);
    const auto nh = static_cast<Eigen::Index>(hop);
    double peak = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      Block u(nh, nb), v(nh, nb);
      for (std::size_t j = 0; j < hop; ++j) {
        const std::size_t l = c + j * classes;
        const std::size_t neg = (period - l) % period;
        for (std::size_t k = 0; k < bins; ++k) {
          u(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = dense[k * period + l];
          v(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
              std::conj(dense[k * period + neg]);
        }
      }
      blocks[c] = (u * u.adjoint() + v * v.adjoint()) / (2.0 * static_cast<double>(hop));
      peak = std::max(peak, blocks[c].diagonal().real().maxCoeff());
    }

    const bool banded = band_high_hz > 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      for (std::size_t j = 0; j < hop; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        if (blocks[c](jj, jj).real() < kPassband * peak) continue;
        if (banded) {
          const std::size_t l = c + j * classes;
          const double f = static_cast<double>(std::min(l, period - l)) * rate /
                           static_cast<double>(period);
          if (f < band_low_hz || f > band_high_hz) continue;
        }
        members_[c].push_back(j);
      }
      const auto n = static_cast<Eigen::Index>(members_[c].size());
      if (n == 0) continue;
      Block sub(n, n);
      for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
          sub(a, b) = blocks[c](static_cast<Eigen::Index>(members_[c][static_cast<std::size_t>(a)]),
                                static_cast<Eigen::Index>(members_[c][static_cast<std::size_t>(b)]));
        }
      }
      Eigen::SelfAdjointEigenSolver<Block> eig(sub);
      const double floor = 1e-12 * peak;
      const Eigen::VectorXd inv_vals = eig.eigenvalues().unaryExpr(
          [floor](double e) { return 1.0 / std::max(e, floor); });
      inverse_[c] = eig.eigenvectors() * inv_vals.asDiagonal() * eig.eigenvectors().adjoint();
    }
  }

  std::vector<double> apply(std::span<const double> r) const {
    const std::size_t period = op_.period();
    const std::size_t classes = op_.classes();
    std::vector<cplx> buf(period);
    std::copy(r.begin(), r.end(), buf.begin());
    op_.fft().forward(buf);
    std::vector<cplx> out_spec(period);
    for (std::size_t c = 0; c < classes; ++c) {
      const auto& idx = members_[c];
      if (idx.empty()) continue;
      Eigen::VectorXcd gathered(static_cast<Eigen::Index>(idx.size()));
      for (std::size_t j = 0; j < idx.size(); ++j) {
        gathered(static_cast<Eigen::Index>(j)) = buf[c + idx[j] * classes];
      }
      const Eigen::VectorXcd solved = inverse_[c] * gathered;
      for (std::size_t j = 0; j < idx.size(); ++j) {
        out_spec[c + idx[j] * classes] = solved(static_cast<Eigen::Index>(j));
      }
    }
    op_.fft().backward(out_spec);
    std::vector<double> out(r.size());
    const double scale = 1.0 / static_cast<double>(period);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = out_spec[i].real() * scale;
    return out;
  }

 private:
  const FrameOperator& op_;
  std::vector<std::vector<std::size_t>> members_;
  std::vector<Eigen::MatrixXcd> inverse_;
};

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Preconditioned conjugate gradients on Re(A^H A) x = Re(A^H c), started
// from the preconditioned synthesis.
std::vector<double> solve_channel(const FrameOperator& op, const Preconditioner& precond,
                                  std::span<const cplx> coeffs, const InverseOptions& opt) {
  const std::vector<double> b = op.synthesize(coeffs);
  const std::size_t n = b.size();
  const double b_norm = std::sqrt(dot(b, b));
  if (b_norm == 0.0) return std::vector<double>(n, 0.0);

  auto normal = [&](std::span<const double> v) { return op.synthesize(op.analyze(v)); };

  std::vector<double> x = precond.apply(b);
  if (opt.max_iterations <= 0) return x;

  std::vector<double> r = normal(x);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  std::vector<double> z = precond.apply(r);
  std::vector<double> p = z;
  double rz = dot(r, z);
  for (int it = 0; it < opt.max_iterations; ++it) {
    if (std::sqrt(dot(r, r)) <= opt.tolerance * b_norm) break;
    const std::vector<double> q = normal(p);
    const double pq = dot(p, q);
    if (!(pq > 0.0)) break;
    const double alpha = rz / pq;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    z = precond.apply(r);
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return x;
}

void check_options(const InverseOptions& opt) {
  if (opt.max_iterations < 0) throw std::invalid_argument("inverse: max_iterations < 0");
  if (!(opt.tolerance >= 0.0)) throw std::invalid_argument("inverse: tolerance < 0");
  if (!(opt.band_low_hz >= 0.0) || !(opt.band_high_hz >= 0.0) ||
      (opt.band_high_hz > 0.0 && opt.band_high_hz < opt.band_low_hz)) {
    throw std::invalid_argument("inverse: invalid band limits");
  }
}

void check_kernel_match(const Rhythmogram& rg, const CqtKernel& kernel) {
  if (rg.bins != kernel.n_bins() || rg.config.hop_frames != kernel.config().hop_frames ||
      !same_rate(rg.config.signal_rate_hz, kernel.config().signal_rate_hz)) {
    throw std::invalid_argument("inverse: rhythmogram does not match kernel");
  }
  if (rg.coeffs.size() != rg.channels * rg.frames * rg.bins) {
    throw std::invalid_argument("inverse: coefficient count does not match shape");
  }
  if (rg.frames != frame_count(rg.n_samples, rg.config.hop_frames)) {
    throw std::invalid_argument("inverse: frame count does not match signal length");
  }
}

}  // namespace

void CqtConfig::validate() const {
  if (!(f_min > 0.0) || !(f_min < f_max)) {
    throw std::invalid_argument("cqt: need 0 < f_min < f_max");
  }
  if (!(signal_rate_hz > 0.0) || f_max > signal_rate_hz / 2.0 + 1e-12) {
    throw std::invalid_argument("cqt: f_max exceeds Nyquist");
  }
  if (bins_per_octave < 1) throw std::invalid_argument("cqt: bins_per_octave < 1");
  if (hop_frames < 1) throw std::invalid_argument("cqt: hop_frames < 1");
  if (!(tf_tradeoff >= 0.0)) throw std::invalid_argument("cqt: tf_tradeoff < 0");
  if (!(cycles > 0.0)) throw std::invalid_argument("cqt: cycles <= 0");
  if (!(kernel_threshold >= 0.0 && kernel_threshold < 1.0)) {
    throw std::invalid_argument("cqt: kernel_threshold outside [0, 1)");
  }
}

std::size_t CqtConfig::n_bins() const {
  return static_cast<std::size_t>(
             std::floor(bins_per_octave * std::log2(f_max / f_min) + 1e-9)) +
         1;
}

double CqtConfig::bin_frequency(std::size_t k) const {
  return f_min * std::exp2(static_cast<double>(k) / bins_per_octave);
}

std::size_t CqtConfig::window_length(std::size_t k) const {
  const double len = cycles * signal_rate_hz / (bin_frequency(k) + tf_tradeoff);
  return std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(len)));
}

std::vector<std::complex<double>> CqtKernel::time_atom(std::size_t k) const {
  return make_atom(config_, bin_freqs_.at(k), window_lengths_.at(k)).samples;
}

std::size_t frame_count(std::size_t n_samples, int hop_frames) {
  if (n_samples == 0) return 0;
  return (n_samples - 1) / static_cast<std::size_t>(hop_frames) + 1;
}

CqtKernel plan(const CqtConfig& config, std::size_t n_frames) {
  config.validate();
  CqtKernel kernel;
  kernel.config_ = config;
  const std::size_t bins = config.n_bins();
  for (std::size_t k = 0; k < bins; ++k) {
    kernel.bin_freqs_.push_back(config.bin_frequency(k));
    kernel.window_lengths_.push_back(config.window_length(k));
  }
  const std::size_t longest =
      *std::max_element(kernel.window_lengths_.begin(), kernel.window_lengths_.end());
  if (n_frames < longest) {
    throw std::invalid_argument("cqt: signal of " + std::to_string(n_frames) +
                                " frames is shorter than the " + std::to_string(longest) +
                                "-frame window at f_min");
  }

  kernel.fft_size_ = detail::next_pow2(2 * (longest / 2) + 1);
  kernel.fft_ = std::make_shared<detail::Fft>(kernel.fft_size_);
  const std::size_t nfft = kernel.fft_size_;
  std::vector<cplx> buf(nfft);
  for (std::size_t k = 0; k < bins; ++k) {
    const AtomShape atom = make_atom(config, kernel.bin_freqs_[k], kernel.window_lengths_[k]);
    std::fill(buf.begin(), buf.end(), cplx());
    for (std::size_t j = 0; j < atom.samples.size(); ++j) {
      buf[nfft / 2 - atom.half + j] = atom.samples[j];
    }
    kernel.fft_->forward(buf);
    double peak = 0.0;
    for (const auto& v : buf) peak = std::max(peak, std::abs(v));
    CqtKernel::SparseAtom sparse;
    for (std::size_t l = 0; l < nfft; ++l) {
      if (std::abs(buf[l]) >= config.kernel_threshold * peak) {
        sparse.index.push_back(l);
        sparse.value.push_back(std::conj(buf[l]) / static_cast<double>(nfft));
      }
    }
    kernel.atoms_.push_back(std::move(sparse));
  }
  return kernel;
}

Rhythmogram forward(const ActivationChannels& channels, const CqtKernel& kernel) {
  const CqtConfig& cfg = kernel.config();
  if (!same_rate(channels.signal_rate_hz, cfg.signal_rate_hz)) {
    throw std::invalid_argument("cqt: channel rate does not match the kernel");
  }
  if (channels.data.size() != channels.channels * channels.frames) {
    throw std::invalid_argument("cqt: activation data does not match shape");
  }
  for (double v : channels.data) {
    if (!std::isfinite(v)) throw std::invalid_argument("cqt: non-finite input");
  }
  if (channels.frames < kernel.longest_window()) {
    throw std::invalid_argument("cqt: signal shorter than the f_min window");
  }

  Rhythmogram rg;
  rg.channels = channels.channels;
  rg.n_samples = channels.frames;
  rg.frames = frame_count(channels.frames, cfg.hop_frames);
  rg.bins = kernel.n_bins();
  rg.config = cfg;
  rg.bin_freqs = kernel.bin_freqs();
  rg.frame_times.resize(rg.frames);
  for (std::size_t m = 0; m < rg.frames; ++m) {
    rg.frame_times[m] = static_cast<double>(m * cfg.hop_frames) / cfg.signal_rate_hz;
  }
  rg.coeffs.resize(rg.channels * rg.frames * rg.bins);

  parallel_for(rg.channels, [&](std::size_t c) {
    const auto src = channels.channel(c);
    const double mean =
        std::accumulate(src.begin(), src.end(), 0.0) / static_cast<double>(src.size());
    std::vector<double> x(src.begin(), src.end());
    for (double& v : x) v -= mean;
    const auto coeffs = analyze(kernel, x, rg.frames);
    std::copy(coeffs.begin(), coeffs.end(),
              rg.coeffs.begin() + static_cast<std::ptrdiff_t>(c * rg.frames * rg.bins));
  });
  return rg;
}

std::vector<double> inverse_channel(const Rhythmogram& rg, std::size_t channel,
                                    const CqtKernel& kernel, const InverseOptions& options) {
  check_kernel_match(rg, kernel);
  check_options(options);
  if (channel >= rg.channels) throw std::invalid_argument("inverse: channel out of range");
  const FrameOperator op(kernel, rg.n_samples, rg.frames);
  const Preconditioner precond(op, options.band_low_hz, options.band_high_hz,
                               rg.config.signal_rate_hz);
  const std::span<const cplx> coeffs(rg.coeffs.data() + channel * rg.frames * rg.bins,
                                     rg.frames * rg.bins);
  return solve_channel(op, precond, coeffs, options);
}

ActivationChannels inverse(const Rhythmogram& rg, const CqtKernel& kernel,
                           const InverseOptions& options) {
  check_kernel_match(rg, kernel);
  check_options(options);
  ActivationChannels out(rg.channels, rg.n_samples, rg.config.signal_rate_hz);
  const FrameOperator op(kernel, rg.n_samples, rg.frames);
  const Preconditioner precond(op, options.band_low_hz, options.band_high_hz,
                               rg.config.signal_rate_hz);
  parallel_for(rg.channels, [&](std::size_t c) {
    const std::span<const cplx> coeffs(rg.coeffs.data() + c * rg.frames * rg.bins,
                                       rg.frames * rg.bins);
    const auto x = solve_channel(op, precond, coeffs, options);
    std::copy(x.begin(), x.end(), out.channel(c).begin());
  });
  return out;
}

Tensor Rhythmogram::magnitude() const {
  Tensor t({channels, frames, bins});
  for (std::size_t i = 0; i < coeffs.size(); ++i) t[i] = std::abs(coeffs[i]);
  return t;
}

Tensor Rhythmogram::phase() const {
  Tensor t({channels, frames, bins});
  for (std::size_t i = 0; i < coeffs.size(); ++i) t[i] = std::arg(coeffs[i]);
  return t;
}

std::size_t bin_of_frequency(const CqtConfig& config, double f) {
  config.validate();
  const double tol = 1e-9 * config.f_max;
  if (!std::isfinite(f) || f < config.f_min - tol || f > config.f_max + tol) {
    throw std::invalid_argument("bin_of_frequency: frequency outside [f_min, f_max]");
  }
  const double pos = config.bins_per_octave * std::log2(f / config.f_min);
  const auto k = static_cast<std::size_t>(std::max(0.0, std::floor(pos + 0.5 + 1e-9)));
  return std::min(k, config.n_bins() - 1);
}

Tensor shift_bins(const Tensor& mag, int s) {
  Tensor out(mag.shape(), 0.0);
  const std::size_t bins = mag.bins();
  if (bins == 0) return out;
  const auto nb = static_cast<std::ptrdiff_t>(bins);
  const std::size_t rows = mag.size() / bins;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::ptrdiff_t k = 0; k < nb; ++k) {
      const std::ptrdiff_t dst = k + s;
      if (dst < 0 || dst >= nb) continue;
      out[r * bins + static_cast<std::size_t>(dst)] = mag[r * bins + static_cast<std::size_t>(k)];
    }
  }
  return out;
}

int harmonic_shift(int h, int bins_per_octave) {
  if (h < 1) throw std::invalid_argument("harmonic_shift: harmonic must be >= 1");
  return static_cast<int>(std::floor(std::log2(static_cast<double>(h)) * bins_per_octave + 1e-9));
}

Tensor harmonic_stack(const Tensor& mag, const std::vector<int>& harmonics,
                      int bins_per_octave) {
  if (harmonics.empty()) throw std::invalid_argument("harmonic_stack: empty harmonics list");
  std::vector<std::size_t> shape{harmonics.size()};
  shape.insert(shape.end(), mag.shape().begin(), mag.shape().end());
  Tensor out(shape);
  for (std::size_t i = 0; i < harmonics.size(); ++i) {
    const Tensor layer = shift_bins(mag, -harmonic_shift(harmonics[i], bins_per_octave));
    std::copy(layer.values().begin(), layer.values().end(),
              out.values().begin() + static_cast<std::ptrdiff_t>(i * mag.size()));
  }
  return out;
}

Tensor avg_pool_time(const Tensor& mag, std::size_t window_frames) {
  if (mag.rank() < 2) throw std::invalid_argument("avg_pool_time: need a frame axis");
  const std::size_t frames = mag.frames();
  if (window_frames < 1 || window_frames > frames) {
    throw std::invalid_argument("avg_pool_time: window must be in [1, frames]");
  }
  const std::size_t bins = mag.bins();
  const std::size_t outer = mag.size() / (frames * bins);
  const std::size_t out_frames = frames - window_frames + 1;
  std::vector<std::size_t> shape = mag.shape();
  shape[shape.size() - 2] = out_frames;
  Tensor out(shape);
  const double inv = 1.0 / static_cast<double>(window_frames);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t m = 0; m < out_frames; ++m) {
      for (std::size_t k = 0; k < bins; ++k) {
        double acc = 0.0;
        for (std::size_t w = 0; w < window_frames; ++w) {
          acc += mag[(o * frames + m + w) * bins + k];
        }
        out[(o * out_frames + m) * bins + k] = acc * inv;
      }
    }
  }
  return out;
}

}  // namespace logrhythm::cqt
