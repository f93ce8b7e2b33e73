#include "logrhythm/convnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "logrhythm/cqt.hpp"
#include "logrhythm/parallel.hpp"

namespace logrhythm::convnet {

namespace {

double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

struct Geometry {
  std::size_t depth, rows, frames, bins;
};

Geometry geometry_of(const Tensor& x) {
  require(x.rank() == 4, "convnet: expected a rank-4 tensor (depth, rows, frames, bins)");
  return {x.dim(0), x.dim(1), x.dim(2), x.dim(3)};
}

Geometry conv_output(const Geometry& in, const ConvLayerSpec& s) {
  require(in.depth == s.depth, "conv: input depth " + std::to_string(in.depth) +
                                   " does not match kernel depth " + std::to_string(s.depth));
  require(in.rows >= s.rows && in.frames >= s.frames && in.bins >= s.bins,
          "conv: input smaller than kernel extent");
  return {s.n_filters, (in.rows - s.rows) / s.stride_rows + 1, in.frames - s.frames + 1,
          (in.bins - s.bins) / s.stride_bins + 1};
}

// Pre-activation of a valid convolution.
Tensor conv_linear(const Tensor& x, const ConvLayer& layer) {
  const auto& s = layer.spec;
  const Geometry in = geometry_of(x);
  const Geometry out = conv_output(in, s);
  Tensor z({out.depth, out.rows, out.frames, out.bins});
  const double* xd = x.data();
  double* zd = z.data();
  const std::size_t in_plane = in.frames * in.bins;
  const std::size_t out_plane = out.frames * out.bins;
  for (std::size_t o = 0; o < out.depth; ++o) {
    double* zo = zd + o * out.rows * out_plane;
    std::fill(zo, zo + out.rows * out_plane, layer.bias[o]);
    for (std::size_t d = 0; d < s.depth; ++d) {
      for (std::size_t i = 0; i < s.rows; ++i) {
        for (std::size_t j = 0; j < s.frames; ++j) {
          for (std::size_t l = 0; l < s.bins; ++l) {
            const double wv = layer.w(o, d, i, j, l);
            if (wv == 0.0) continue;
            for (std::size_t r = 0; r < out.rows; ++r) {
              const double* xr =
                  xd + (d * in.rows + r * s.stride_rows + i) * in_plane + j * in.bins + l;
              double* zr = zo + r * out_plane;
              for (std::size_t t = 0; t < out.frames; ++t) {
                const double* xt = xr + t * in.bins;
                double* zt = zr + t * out.bins;
                for (std::size_t b = 0; b < out.bins; ++b) zt[b] += wv * xt[b * s.stride_bins];
              }
            }
          }
        }
      }
    }
  }
  return z;
}

Tensor activate(const Tensor& z, Activation a) {
  if (a == Activation::identity) return z;
  Tensor y = z;
  for (double& v : y.values()) v = std::max(v, 0.0);
  return y;
}

std::size_t band_width(const PoolSpec& pool, int bpo, std::size_t bins) {
  if (pool.mode == PoolMode::full_range) return bins;
  if (pool.mode == PoolMode::none) return 1;
  const auto w = static_cast<std::size_t>(std::lround(pool.band_octaves * bpo));
  return std::clamp<std::size_t>(w, 1, bins);
}

void add_into(std::vector<double>& dst, const std::vector<double>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

ModelParams zeros_like(const ModelParams& model) {
  ModelParams g = model;
  for (auto& layer : g.layers) {
    std::fill(layer.weights.begin(), layer.weights.end(), 0.0);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
  if (g.freq_weights) std::fill(g.freq_weights->w.begin(), g.freq_weights->w.end(), 0.0);
  if (g.head) {
    std::fill(g.head->weights.begin(), g.head->weights.end(), 0.0);
    std::fill(g.head->bias.begin(), g.head->bias.end(), 0.0);
  }
  return g;
}

void accumulate(ModelParams& dst, const ModelParams& src) {
  for (std::size_t i = 0; i < dst.layers.size(); ++i) {
    add_into(dst.layers[i].weights, src.layers[i].weights);
    add_into(dst.layers[i].bias, src.layers[i].bias);
  }
  if (dst.freq_weights) add_into(dst.freq_weights->w, src.freq_weights->w);
  if (dst.head) {
    add_into(dst.head->weights, src.head->weights);
    add_into(dst.head->bias, src.head->bias);
  }
}

struct ExampleResult {
  double loss = 0.0;
  ModelParams grad;
};

ExampleResult example_gradient(const ModelParams& model, const Example& ex, Loss loss) {
  Trace trace;
  const Output out = forward(model, ex.input, &trace);
  OutputGrad og;
  ExampleResult res;
  if (loss == Loss::cross_entropy_over_bins) {
    require(ex.label_bin >= out.bin_offset && ex.label_bin - out.bin_offset < out.scores.size(),
            "train: label bin " + std::to_string(ex.label_bin) + " outside the scored range");
    res.loss = cross_entropy(out.scores, ex.label_bin - out.bin_offset, og.scores);
  } else {
    res.loss = frame_mse(out.map, ex.target, og.map);
  }
  res.grad = backward(model, trace, og);
  if (model.freq_weights) res.loss += model.freq_weights->penalty_value();
  return res;
}

}  // namespace

void ConvLayerSpec::validate() const {
  require(rows >= 1 && frames >= 1 && bins >= 1 && depth >= 1, "conv: extents must be >= 1");
  require(stride_rows >= 1 && stride_bins >= 1, "conv: strides must be >= 1");
  require(n_filters >= 1, "conv: need at least one filter");
}

ConvLayer::ConvLayer(const ConvLayerSpec& s)
    : spec(s), weights(s.weight_count(), 0.0), bias(s.n_filters, 0.0) {}

double& ConvLayer::w(std::size_t o, std::size_t d, std::size_t i, std::size_t j, std::size_t l) {
  return weights[(((o * spec.depth + d) * spec.rows + i) * spec.frames + j) * spec.bins + l];
}

double ConvLayer::w(std::size_t o, std::size_t d, std::size_t i, std::size_t j,
                    std::size_t l) const {
  return weights[(((o * spec.depth + d) * spec.rows + i) * spec.frames + j) * spec.bins + l];
}

void PoolSpec::validate() const {
  require(std::isfinite(band_octaves) && band_octaves > 0.0, "pool: band_octaves must be > 0");
}

double SmoothFreqWeights::penalty_value() const {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < w.size(); ++k) acc += (w[k + 1] - w[k]) * (w[k + 1] - w[k]);
  return penalty * acc;
}

DenseHead::DenseHead(std::size_t n_in, std::size_t n_out)
    : inputs(n_in), outputs(n_out), weights(n_in * n_out, 0.0), bias(n_out, 0.0) {}

void ModelParams::validate() const {
  require(bins_per_octave >= 1, "model: bins_per_octave must be >= 1");
  pool.validate();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    layer.spec.validate();
    require(layer.weights.size() == layer.spec.weight_count(),
            "model: layer " + std::to_string(i) + " weight count does not match its spec");
    require(layer.bias.size() == layer.spec.n_filters,
            "model: layer " + std::to_string(i) + " bias count does not match its spec");
    if (i > 0) {
      require(layer.spec.depth == layers[i - 1].spec.n_filters,
              "model: layer " + std::to_string(i) + " depth must equal previous filter count");
    }
  }
  if (freq_weights) {
    require(freq_weights->penalty >= 0.0, "model: smoothness penalty must be >= 0");
  }
  if (head) {
    require(head->weights.size() == head->inputs * head->outputs &&
                head->bias.size() == head->outputs,
            "model: head shape mismatch");
    require(pool.mode != PoolMode::none, "model: a dense head needs a pooled input");
  }
  for (const double* p : parameters()) require(std::isfinite(*p), "model: non-finite parameter");
}

std::vector<double*> ModelParams::parameters() {
  std::vector<double*> out;
  for (auto& layer : layers) {
    for (double& v : layer.weights) out.push_back(&v);
    for (double& v : layer.bias) out.push_back(&v);
  }
  if (freq_weights) {
    for (double& v : freq_weights->w) out.push_back(&v);
  }
  if (head) {
    for (double& v : head->weights) out.push_back(&v);
    for (double& v : head->bias) out.push_back(&v);
  }
  return out;
}

std::vector<const double*> ModelParams::parameters() const {
  auto mut = const_cast<ModelParams*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

void TrainConfig::validate() const {
  require(std::isfinite(learning_rate) && learning_rate >= 0.0, "train: learning_rate must be >= 0");
  require(epochs >= 1, "train: epochs must be >= 1");
  require(batch_size >= 1, "train: batch_size must be >= 1");
  require(std::isfinite(l2) && l2 >= 0.0, "train: l2 must be >= 0");
}

Tensor to_input(const phasefeat::FeatureMap& map) {
  require(map.data.rank() == 3, "to_input: feature map must be rows x frames x bins");
  Tensor x({1, map.data.dim(0), map.data.dim(1), map.data.dim(2)});
  std::copy(map.data.values().begin(), map.data.values().end(), x.values().begin());
  return x;
}

Tensor conv_forward(const Tensor& x, const ConvLayer& layer) {
  layer.spec.validate();
  require(layer.weights.size() == layer.spec.weight_count() &&
              layer.bias.size() == layer.spec.n_filters,
          "conv: weight shape does not match spec");
  return activate(conv_linear(x, layer), layer.spec.activation);
}

Pooled max_pool_freq(const Tensor& x, const PoolSpec& pool, int bins_per_octave) {
  pool.validate();
  const Geometry g = geometry_of(x);
  require(g.bins > 0, "max_pool_freq: empty map");
  const std::size_t width = band_width(pool, bins_per_octave, g.bins);
  const std::size_t bands = (g.bins + width - 1) / width;
  Pooled out;
  out.values = Tensor({g.depth, g.rows, g.frames, bands});
  out.argmax.resize(out.values.size());
  const std::size_t lines = g.depth * g.rows * g.frames;
  for (std::size_t line = 0; line < lines; ++line) {
    const double* src = x.data() + line * g.bins;
    for (std::size_t band = 0; band < bands; ++band) {
      const std::size_t lo = band * width;
      const std::size_t hi = std::min(g.bins, lo + width);
      std::size_t best = lo;
      for (std::size_t k = lo + 1; k < hi; ++k) {
        if (src[k] > src[best]) best = k;
      }
      out.values[line * bands + band] = src[best];
      out.argmax[line * bands + band] = best;
    }
  }
  if (pool.with_position) out.positions = out.argmax;
  return out;
}

Tensor apply_freq_weights(const Tensor& x, const SmoothFreqWeights& w) {
  require(w.w.size() == x.bins(), "apply_freq_weights: weight length " +
                                      std::to_string(w.w.size()) + " does not match " +
                                      std::to_string(x.bins()) + " bins");
  Tensor y = x;
  const std::size_t bins = x.bins();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= w.w[i % bins];
  return y;
}

std::vector<double> dense_forward(std::span<const double> features, const DenseHead& head) {
  require(features.size() == head.inputs, "dense: feature length " +
                                              std::to_string(features.size()) +
                                              " does not match head input " +
                                              std::to_string(head.inputs));
  std::vector<double> out(head.bias);
  for (std::size_t o = 0; o < head.outputs; ++o) {
    const double* row = head.weights.data() + o * head.inputs;
    double acc = 0.0;
    for (std::size_t i = 0; i < head.inputs; ++i) acc += row[i] * features[i];
    out[o] += acc;
  }
  return out;
}

std::size_t predict_argmax_bin(std::span<const double> scores) {
  require(!scores.empty(), "predict_argmax_bin: empty scores");
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  return best;
}

Output forward(const ModelParams& model, const Tensor& input, Trace* trace) {
  Trace local;
  Trace& tr = trace ? *trace : local;
  tr = Trace{};
  Tensor x = input;
  Output out;
  std::size_t bin_center = 0;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& layer = model.layers[i];
    Tensor z = conv_linear(x, layer);
    Tensor y = activate(z, layer.spec.activation);
    tr.inputs.push_back(std::move(x));
    tr.pre_activation.push_back(std::move(z));
    x = std::move(y);
    out.frame_offset += (layer.spec.frames - 1) / 2;
  }
  for (auto it = model.layers.rbegin(); it != model.layers.rend(); ++it) {
    bin_center = bin_center * it->spec.stride_bins + (it->spec.bins - 1) / 2;
  }
  out.bin_offset = bin_center;
  tr.last = x;
  tr.map = model.freq_weights ? apply_freq_weights(x, *model.freq_weights) : x;

  if (model.pool.mode == PoolMode::none) {
    out.map = tr.map;
    const Geometry g = geometry_of(out.map);
    if (g.depth == 1 && g.rows == 1) {
      out.scores.assign(g.bins, 0.0);
      for (std::size_t t = 0; t < g.frames; ++t) {
        for (std::size_t b = 0; b < g.bins; ++b) out.scores[b] += out.map[t * g.bins + b];
      }
      for (double& s : out.scores) s /= static_cast<double>(g.frames);
    }
    return out;
  }

  tr.pooled = max_pool_freq(tr.map, model.pool, model.bins_per_octave);
  const Geometry pg = geometry_of(tr.pooled.values);
  tr.features.assign(pg.depth * pg.rows * pg.bins, 0.0);
  for (std::size_t d = 0; d < pg.depth; ++d) {
    for (std::size_t r = 0; r < pg.rows; ++r) {
      for (std::size_t t = 0; t < pg.frames; ++t) {
        for (std::size_t b = 0; b < pg.bins; ++b) {
          tr.features[(d * pg.rows + r) * pg.bins + b] +=
              tr.pooled.values[((d * pg.rows + r) * pg.frames + t) * pg.bins + b];
        }
      }
    }
  }
  for (double& f : tr.features) f /= static_cast<double>(pg.frames);
  out.map = tr.pooled.values;
  out.scores = model.head ? dense_forward(tr.features, *model.head) : tr.features;
  return out;
}

ModelParams backward(const ModelParams& model, const Trace& trace, const OutputGrad& grad) {
  ModelParams g = zeros_like(model);
  Tensor d_map(trace.map.shape(), 0.0);

  if (model.pool.mode == PoolMode::none) {
    if (!grad.map.empty()) {
      require(grad.map.shape() == d_map.shape(), "backward: map gradient shape mismatch");
      d_map = grad.map;
    }
    if (!grad.scores.empty()) {
      const Geometry mg = geometry_of(d_map);
      require(mg.depth == 1 && mg.rows == 1 && grad.scores.size() == mg.bins,
              "backward: score gradient does not match the output");
      const double inv = 1.0 / static_cast<double>(mg.frames);
      for (std::size_t t = 0; t < mg.frames; ++t) {
        for (std::size_t b = 0; b < mg.bins; ++b) d_map[t * mg.bins + b] += grad.scores[b] * inv;
      }
    }
  } else {
    const Tensor& pooled = trace.pooled.values;
    const Geometry pg = geometry_of(pooled);
    Tensor d_pooled(pooled.shape(), 0.0);
    if (!grad.map.empty()) {
      require(grad.map.shape() == pooled.shape(), "backward: pooled gradient shape mismatch");
      d_pooled = grad.map;
    }
    if (!grad.scores.empty()) {
      std::vector<double> d_features(trace.features.size(), 0.0);
      if (model.head) {
        const auto& head = *model.head;
        require(grad.scores.size() == head.outputs, "backward: score gradient size mismatch");
        for (std::size_t o = 0; o < head.outputs; ++o) {
          const double ds = grad.scores[o];
          g.head->bias[o] += ds;
          for (std::size_t i = 0; i < head.inputs; ++i) {
            g.head->weights[o * head.inputs + i] += ds * trace.features[i];
            d_features[i] += head.weights[o * head.inputs + i] * ds;
          }
        }
      } else {
        require(grad.scores.size() == d_features.size(), "backward: score gradient size mismatch");
        d_features = grad.scores;
      }
      const double inv = 1.0 / static_cast<double>(pg.frames);
      for (std::size_t d = 0; d < pg.depth; ++d) {
        for (std::size_t r = 0; r < pg.rows; ++r) {
          for (std::size_t t = 0; t < pg.frames; ++t) {
            for (std::size_t b = 0; b < pg.bins; ++b) {
              d_pooled[((d * pg.rows + r) * pg.frames + t) * pg.bins + b] +=
                  d_features[(d * pg.rows + r) * pg.bins + b] * inv;
            }
          }
        }
      }
    }
    const std::size_t bins = d_map.bins();
    const std::size_t bands = pg.bins;
    for (std::size_t i = 0; i < d_pooled.size(); ++i) {
      const std::size_t line = i / bands;
      d_map[line * bins + trace.pooled.argmax[i]] += d_pooled[i];
    }
  }

  Tensor d_last = d_map;
  if (model.freq_weights) {
    const auto& fw = model.freq_weights->w;
    const std::size_t bins = fw.size();
    auto& gw = g.freq_weights->w;
    for (std::size_t i = 0; i < d_map.size(); ++i) {
      gw[i % bins] += d_map[i] * trace.last[i];
      d_last[i] = d_map[i] * fw[i % bins];
    }
    const double lambda = model.freq_weights->penalty;
    for (std::size_t k = 0; k + 1 < bins; ++k) {
      const double diff = fw[k + 1] - fw[k];
      gw[k + 1] += 2.0 * lambda * diff;
      gw[k] -= 2.0 * lambda * diff;
    }
  }

  Tensor dy = std::move(d_last);
  for (std::size_t li = model.layers.size(); li-- > 0;) {
    const auto& layer = model.layers[li];
    const auto& s = layer.spec;
    const Tensor& x = trace.inputs[li];
    const Tensor& z = trace.pre_activation[li];
    Tensor dz = std::move(dy);
    if (s.activation == Activation::relu) {
      for (std::size_t i = 0; i < dz.size(); ++i) {
        if (!(z[i] > 0.0)) dz[i] = 0.0;
      }
    }
    const Geometry in = geometry_of(x);
    const Geometry out = geometry_of(dz);
    Tensor dx(x.shape(), 0.0);
    auto& gl = g.layers[li];
    const std::size_t in_plane = in.frames * in.bins;
    const std::size_t out_plane = out.frames * out.bins;
    for (std::size_t o = 0; o < out.depth; ++o) {
      const double* dzo = dz.data() + o * out.rows * out_plane;
      gl.bias[o] += std::accumulate(dzo, dzo + out.rows * out_plane, 0.0);
      for (std::size_t d = 0; d < s.depth; ++d) {
        for (std::size_t i = 0; i < s.rows; ++i) {
          for (std::size_t j = 0; j < s.frames; ++j) {
            for (std::size_t l = 0; l < s.bins; ++l) {
              const double wv = layer.w(o, d, i, j, l);
              double gw = 0.0;
              for (std::size_t r = 0; r < out.rows; ++r) {
                const std::size_t xoff =
                    (d * in.rows + r * s.stride_rows + i) * in_plane + j * in.bins + l;
                const double* xr = x.data() + xoff;
                double* dxr = dx.data() + xoff;
                const double* dzr = dzo + r * out_plane;
                for (std::size_t t = 0; t < out.frames; ++t) {
                  const double* xt = xr + t * in.bins;
                  double* dxt = dxr + t * in.bins;
                  const double* dzt = dzr + t * out.bins;
                  for (std::size_t b = 0; b < out.bins; ++b) {
                    gw += dzt[b] * xt[b * s.stride_bins];
                    dxt[b * s.stride_bins] += wv * dzt[b];
                  }
                }
              }
              gl.w(o, d, i, j, l) += gw;
            }
          }
        }
      }
    }
    dy = std::move(dx);
  }
  return g;
}

double cross_entropy(std::span<const double> scores, std::size_t label,
                     std::vector<double>& d_scores) {
  require(label < scores.size(), "cross_entropy: label out of range");
  const double peak = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  d_scores.assign(scores.size(), 0.0);
  for (std::size_t k = 0; k < scores.size(); ++k) {
    d_scores[k] = std::exp(scores[k] - peak);
    sum += d_scores[k];
  }
  for (double& p : d_scores) p /= sum;
  const double loss = -(scores[label] - peak - std::log(sum));
  d_scores[label] -= 1.0;
  return loss;
}

double frame_mse(const Tensor& map, const Tensor& target, Tensor& d_map) {
  const Geometry g = geometry_of(map);
  require(g.depth == 1 && g.rows == 1, "frame_mse: output must have one filter and one row");
  require(target.rank() == 2 && target.dim(0) == g.frames && target.dim(1) == g.bins,
          "frame_mse: target shape does not match the output map");
  d_map = Tensor(map.shape(), 0.0);
  const double n = static_cast<double>(target.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double diff = map[i] - target[i];
    loss += diff * diff;
    d_map[i] = 2.0 * diff / n;
  }
  return loss / n;
}

ModelParams train(ModelParams model, const std::vector<Example>& data, const TrainConfig& cfg,
                  std::vector<double>* epoch_losses) {
  cfg.validate();
  model.validate();
  require(!data.empty(), "train: empty dataset");
  std::mt19937_64 gen(cfg.rng_seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  if (epoch_losses) epoch_losses->clear();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), gen);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      std::vector<ExampleResult> results(count);
      parallel_for(count, [&](std::size_t i) {
        results[i] = example_gradient(model, data[order[start + i]], cfg.loss);
      });
      ModelParams total = zeros_like(model);
      for (const auto& r : results) {
        accumulate(total, r.grad);
        epoch_loss += r.loss;
      }
      const double scale = cfg.learning_rate / static_cast<double>(count);
      const auto params = model.parameters();
      const auto grads = total.parameters();
      for (std::size_t p = 0; p < params.size(); ++p) *params[p] -= scale * *grads[p];
      if (cfg.l2 > 0.0 && cfg.learning_rate > 0.0) {
        const double decay = 1.0 - cfg.learning_rate * cfg.l2;
        for (auto& layer : model.layers) {
          for (double& w : layer.weights) w *= decay;
        }
        if (model.head) {
          for (double& w : model.head->weights) w *= decay;
        }
      }
    }
    if (epoch_losses) epoch_losses->push_back(epoch_loss / static_cast<double>(data.size()));
  }
  return model;
}

ModelParams train_tempo(ModelParams model, const std::vector<Example>& data,
                        const TrainConfig& cfg, std::vector<double>* epoch_losses) {
  require(!data.empty(), "train_tempo: empty dataset");
  TrainConfig c = cfg;
  c.loss = Loss::cross_entropy_over_bins;
  return train(std::move(model), data, c, epoch_losses);
}

double evaluate_loss(const ModelParams& model, const std::vector<Example>& data, Loss loss) {
  require(!data.empty(), "evaluate_loss: empty dataset");
  std::vector<double> losses(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    const Output out = forward(model, data[i].input);
    if (loss == Loss::cross_entropy_over_bins) {
      std::vector<double> d;
      losses[i] = cross_entropy(out.scores, data[i].label_bin - out.bin_offset, d);
    } else {
      Tensor d;
      losses[i] = frame_mse(out.map, data[i].target, d);
    }
  });
  return std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(data.size());
}

void initialize(ModelParams& model, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  for (auto& layer : model.layers) {
    const auto& s = layer.spec;
    const double fan_in = static_cast<double>(s.depth * s.rows * s.frames * s.bins);
    const double a = std::sqrt(3.0 / fan_in);
    for (double& w : layer.weights) w = a * (2.0 * uniform01(gen) - 1.0);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  }
  if (model.freq_weights) std::fill(model.freq_weights->w.begin(), model.freq_weights->w.end(), 1.0);
  if (model.head) {
    const double a = std::sqrt(3.0 / static_cast<double>(model.head->inputs));
    for (double& w : model.head->weights) w = a * (2.0 * uniform01(gen) - 1.0);
    std::fill(model.head->bias.begin(), model.head->bias.end(), 0.0);
  }
}

ModelParams tempo_model(std::size_t n_rows, std::size_t n_bins, std::size_t channel_stride,
                        int bins_per_octave, std::size_t n_filters, double kernel_octaves,
                        std::uint64_t seed) {
  require(channel_stride >= 1 && n_rows % channel_stride == 0,
          "tempo_model: rows must be a multiple of the channel stride");
  require(kernel_octaves > 0.0, "tempo_model: kernel_octaves must be > 0");
  const auto half = static_cast<std::size_t>(std::lround(kernel_octaves * bins_per_octave / 2.0));
  ConvLayerSpec first;
  first.rows = channel_stride;
  first.stride_rows = channel_stride;
  first.bins = 2 * half + 1;
  first.n_filters = n_filters;
  first.activation = Activation::relu;
  require(first.bins <= n_bins, "tempo_model: kernel wider than the bin axis");

  ConvLayerSpec last;
  last.depth = n_filters;
  last.rows = n_rows / channel_stride;
  last.activation = Activation::identity;

  ModelParams model;
  model.bins_per_octave = bins_per_octave;
  model.layers = {ConvLayer(first), ConvLayer(last)};
  model.freq_weights = SmoothFreqWeights{std::vector<double>(n_bins - first.bins + 1, 1.0), 1e-3};
  initialize(model, seed);
  return model;
}

ConvLayer octave_comb_filter(std::size_t channel_stride, int bins_per_octave,
                             const std::vector<int>& harmonics) {
  require(!harmonics.empty(), "octave_comb_filter: empty harmonic list");
  int widest = 0;
  for (int h : harmonics) widest = std::max(widest, cqt::harmonic_shift(h, bins_per_octave));
  ConvLayerSpec s;
  s.rows = channel_stride;
  s.stride_rows = channel_stride;
  s.bins = static_cast<std::size_t>(widest) + 1;
  s.activation = Activation::identity;
  ConvLayer layer(s);
  const double tooth = 1.0 / static_cast<double>(harmonics.size());
  for (int h : harmonics) {
    layer.w(0, 0, 0, 0, static_cast<std::size_t>(cqt::harmonic_shift(h, bins_per_octave))) += tooth;
  }
  return layer;
}

ModelParams reference_fingerprint_model(std::size_t n_rows, int bins_per_octave,
                                        std::size_t n_filters, double kernel_octaves,
                                        std::uint64_t seed) {
  require(n_rows >= 1 && n_filters >= 1, "reference_fingerprint_model: empty bank");
  require(bins_per_octave >= 1 && kernel_octaves > 0.0,
          "reference_fingerprint_model: kernel width must be > 0");
  ConvLayerSpec s;
  s.rows = n_rows;
  s.stride_rows = n_rows;
  s.bins = 2 * static_cast<std::size_t>(std::lround(kernel_octaves * bins_per_octave / 2.0)) + 1;
  s.n_filters = n_filters;
  s.activation = Activation::relu;
  ConvLayer layer(s);
  // Standard normal weights via Box-Muller, so the bank does not depend on
  // the standard library's distribution algorithms.
  std::mt19937_64 gen(seed);
  for (std::size_t i = 0; i < layer.weights.size(); i += 2) {
    const double r = std::sqrt(-2.0 * std::log(1.0 - uniform01(gen)));
    const double t = 2.0 * std::numbers::pi * uniform01(gen);
    layer.weights[i] = r * std::cos(t);
    if (i + 1 < layer.weights.size()) layer.weights[i + 1] = r * std::sin(t);
  }
  ModelParams model;
  model.bins_per_octave = bins_per_octave;
  model.layers = {layer};
  model.pool.mode = PoolMode::full_range;
  return model;
}

}  // namespace logrhythm::convnet
