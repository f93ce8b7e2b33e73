#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "logrhythm/phasefeat.hpp"
#include "logrhythm/tensor.hpp"

// Tensors flowing through the stack are rank 4: depth x rows x frames x bins.
// A FeatureMap enters with depth 1; every conv layer turns its filters into
// the depth of the next stage.
namespace logrhythm::convnet {

enum class Activation { relu, identity };

struct ConvLayerSpec {
  std::size_t rows = 1;
  std::size_t frames = 1;
  std::size_t bins = 1;
  std::size_t depth = 1;
  std::size_t stride_rows = 1;
  std::size_t stride_bins = 1;
  Activation activation = Activation::relu;
  std::size_t n_filters = 1;

  void validate() const;
  std::size_t weight_count() const { return n_filters * depth * rows * frames * bins; }
};

struct ConvLayer {
  ConvLayerSpec spec;
  /// filter x depth x rows x frames x bins, row-major.
  std::vector<double> weights;
  std::vector<double> bias;

  explicit ConvLayer(const ConvLayerSpec& s = {});
  double& w(std::size_t o, std::size_t d, std::size_t i, std::size_t j, std::size_t l);
  double w(std::size_t o, std::size_t d, std::size_t i, std::size_t j, std::size_t l) const;
};

enum class PoolMode { none, full_range, octave_bands };

struct PoolSpec {
  PoolMode mode = PoolMode::none;
  bool with_position = false;
  double band_octaves = 1.0;

  void validate() const;
};

/// Per-bin multipliers on the last conv output; training adds
/// penalty * sum (w[k+1] - w[k])^2 to the loss.
struct SmoothFreqWeights {
  std::vector<double> w;
  double penalty = 0.0;

  double penalty_value() const;
};

struct DenseHead {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;  // outputs x inputs
  std::vector<double> bias;

  DenseHead() = default;
  DenseHead(std::size_t n_in, std::size_t n_out);
};

struct ModelParams {
  std::vector<ConvLayer> layers;
  std::optional<SmoothFreqWeights> freq_weights;
  PoolSpec pool;
  std::optional<DenseHead> head;
  int bins_per_octave = 24;

  /// Throws std::invalid_argument on inconsistent shapes or non-finite values.
  void validate() const;
  /// Every trainable value in a fixed order: per layer weights then bias,
  /// frequency weights, head weights then bias.
  std::vector<double*> parameters();
  std::vector<const double*> parameters() const;
};

enum class Loss { cross_entropy_over_bins, frame_mse };

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 40;
  std::size_t batch_size = 8;
  std::uint64_t rng_seed = 0;
  Loss loss = Loss::cross_entropy_over_bins;
  double l2 = 0.0;

  void validate() const;
};

/// FeatureMap as a depth-1 stack input.
Tensor to_input(const phasefeat::FeatureMap& map);

/// Valid convolution along rows (stride_rows), frames and bins (stride_bins)
/// with per-filter bias and activation.
Tensor conv_forward(const Tensor& x, const ConvLayer& layer);

struct Pooled {
  Tensor values;  // depth x rows x frames x bands
  /// Bin index of each maximum (lowest bin on ties); empty unless
  /// with_position was requested.
  std::vector<std::size_t> positions;
  std::vector<std::size_t> argmax;  // always recorded, used for gradients
};

Pooled max_pool_freq(const Tensor& x, const PoolSpec& pool, int bins_per_octave);

Tensor apply_freq_weights(const Tensor& x, const SmoothFreqWeights& w);

std::vector<double> dense_forward(std::span<const double> features, const DenseHead& head);

/// Lowest index of the maximum.
std::size_t predict_argmax_bin(std::span<const double> scores);

/// Intermediate values recorded by forward() for backward().
struct Trace {
  std::vector<Tensor> inputs;       // input of each conv layer
  std::vector<Tensor> pre_activation;
  Tensor last;                      // last conv output before frequency weights
  Tensor map;                       // after frequency weights
  Pooled pooled;
  std::vector<double> features;     // time-averaged pooled values
};

struct Output {
  /// PoolMode::none: weighted last conv output. Otherwise pooled values.
  Tensor map;
  /// PoolMode::none with a single filter and row: per-bin mean over frames.
  /// Otherwise head output, or the pooled features when there is no head.
  std::vector<double> scores;
  /// Input bin at the center of score 0 (PoolMode::none only).
  std::size_t bin_offset = 0;
  /// Input frame at the center of map frame 0.
  std::size_t frame_offset = 0;
};

Output forward(const ModelParams& model, const Tensor& input, Trace* trace = nullptr);

/// Gradient of a scalar loss with respect to the output; either part may be
/// empty.
struct OutputGrad {
  std::vector<double> scores;
  Tensor map;
};

/// Analytic gradients of loss + smoothness penalty, returned as a
/// ModelParams of identical shape.
ModelParams backward(const ModelParams& model, const Trace& trace, const OutputGrad& grad);

/// Softmax cross-entropy of scores against one label; returns the loss and
/// fills d_scores.
double cross_entropy(std::span<const double> scores, std::size_t label,
                     std::vector<double>& d_scores);

/// Mean squared error of map[0, 0, :, :] against target (frames x bins).
double frame_mse(const Tensor& map, const Tensor& target, Tensor& d_map);

struct Example {
  Tensor input;
  /// Input bin index of the true class (cross-entropy).
  std::size_t label_bin = 0;
  /// frames x bins target aligned with the output map (frame_mse).
  Tensor target;
};

/// Plain SGD over shuffled mini-batches; per-example gradients are summed in
/// index order, so results do not depend on the thread count.
ModelParams train(ModelParams model, const std::vector<Example>& data, const TrainConfig& cfg,
                  std::vector<double>* epoch_losses = nullptr);

/// train() with cross-entropy over per-bin scores; labels must fall inside
/// the bins the model can score.
ModelParams train_tempo(ModelParams model, const std::vector<Example>& data,
                        const TrainConfig& cfg, std::vector<double>* epoch_losses = nullptr);

/// Mean loss over a dataset without updating (cross-entropy or frame MSE).
double evaluate_loss(const ModelParams& model, const std::vector<Example>& data, Loss loss);

/// Fills conv and head weights with scaled uniform values, biases with 0 and
/// frequency weights with 1.
void initialize(ModelParams& model, std::uint64_t seed);

/// Tempo scorer: one conv layer spanning kernel_octaves of bins over each
/// channel's row group, then a 1-bin filter across all filters and row
/// groups, smooth frequency weights, no pooling; scores are averaged over
/// frames.
ModelParams tempo_model(std::size_t n_rows, std::size_t n_bins, std::size_t channel_stride,
                        int bins_per_octave, std::size_t n_filters = 8,
                        double kernel_octaves = 2.0, std::uint64_t seed = 0);

/// Magnitude-row comb with unit teeth at harmonic_shift(h) for each h,
/// spanning the full kernel width and one row group.
ConvLayer octave_comb_filter(std::size_t channel_stride, int bins_per_octave,
                             const std::vector<int>& harmonics = {1, 2, 4});

/// Fixed random bank for fingerprints: each filter spans all n_rows and
/// kernel_octaves of bins, standard normal weights from seed, relu, pooled
/// over the full range.
ModelParams reference_fingerprint_model(std::size_t n_rows, int bins_per_octave,
                                        std::size_t n_filters = 32, double kernel_octaves = 2.0,
                                        std::uint64_t seed = 2);

}  // namespace logrhythm::convnet
