#pragma once

// Mean-and-scale hyperprior network: layer geometry, weights, the four
// forward transforms, and the portable weight file (docs/formats.md).

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fpc/entropy.hpp"
#include "fpc/tensor.hpp"

namespace fpc::model {

inline constexpr std::uint32_t kWeightFormatVersion = 1;
inline constexpr float kDefaultNegativeSlope = 0.01f;
inline constexpr int kDefaultLatentChannels = 128;  // N
inline constexpr int kDefaultHyperChannels = 192;   // M
/// Total spatial reduction of analysis + hyper-analysis.
inline constexpr std::size_t kSpatialMultiple = 64;

/// Rate-distortion tradeoffs the model family is trained at.
inline constexpr std::array<float, 7> kLambdaGrid = {0.0018f, 0.0035f, 0.0067f, 0.013f,
                                                      0.025f,  0.0483f, 0.0932f};
bool lambda_on_grid(float lambda);

enum class Variant : std::uint8_t { finger_msh = 0, msh_rgb = 1 };
enum class TransformId : std::uint8_t { analysis = 0, synthesis = 1, hyper_analysis = 2, hyper_synthesis = 3 };
enum class LayerKind : std::uint8_t { conv = 0, conv_transpose = 1, activation = 2 };

const char* transform_name(TransformId id);

struct LayerSpec {
  LayerKind kind = LayerKind::conv;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 0;
  int stride = 1;
  int padding = 0;
  int output_padding = 0;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct TransformSpec {
  std::vector<LayerSpec> layers;

  /// Product of conv strides divided by product of transposed strides.
  int downsampling() const;
  int upsampling() const;
};

/// Standard geometry for one transform: analysis is four stride-2 5x5 convs,
/// hyper-analysis one 3x3 conv plus two stride-2 5x5 convs; the synthesis
/// sides mirror them, and hyper-synthesis ends in 2N channels (mean, scale).
TransformSpec standard_spec(TransformId id, int latent_channels, int hyper_channels,
                            int image_channels = 1);

/// One layer of a transform. Activation layers carry no parameters.
struct Layer {
  LayerSpec spec;
  Tensor weight;  // conv: (out, in, k, k); conv_transpose: (in, out, k, k)
  std::vector<float> bias;

  friend bool operator==(const Layer&, const Layer&) = default;
};

struct ModelWeights {
  std::string model_id;
  Variant variant = Variant::finger_msh;
  int latent_channels = kDefaultLatentChannels;  // N
  int hyper_channels = kDefaultHyperChannels;    // M
  float lambda_tag = 0.0f;                       // 0 = untagged
  float negative_slope = kDefaultNegativeSlope;
  std::array<std::vector<Layer>, 4> transforms;
  entropy::FactorizedPrior prior;

  const std::vector<Layer>& layers(TransformId id) const {
    return transforms[static_cast<std::size_t>(id)];
  }
  std::vector<Layer>& layers(TransformId id) { return transforms[static_cast<std::size_t>(id)]; }
  int image_channels() const { return variant == Variant::msh_rgb ? 3 : 1; }

  /// Throws InconsistentShapeError when layers do not chain, do not match the
  /// standard geometry, or the prior does not cover M channels.
  void validate() const;

  friend bool operator==(const ModelWeights&, const ModelWeights&) = default;
};

struct SeedOptions {
  int latent_channels = kDefaultLatentChannels;
  int hyper_channels = kDefaultHyperChannels;
  std::uint64_t seed = 0;
  float amplitude = 0.05f;  // kernel values in [-amplitude, amplitude]
  bool zero_weights = false;
  float bias = 0.0f;  // every bias set to this value
};

/// Deterministic test weights (no training needed). Kernels come from a
/// 64-bit linear congruential generator; priors are discretized Gaussians.
ModelWeights make_seed_weights(const SeedOptions& options = {});

/// The generator behind make_seed_weights: value i of the stream for `seed`.
class SeedSequence {
 public:
  explicit SeedSequence(std::uint64_t seed) : state_(seed) {}
  /// Uniform in [-amplitude, amplitude).
  float next(float amplitude);

 private:
  std::uint64_t state_;
};

// Forward transforms. Inputs are validated against the weights.

/// (C, H, W) image scaled to [0, 1] -> y of shape (N, H/16, W/16).
Tensor analysis(const Tensor& x, const ModelWeights& w);
/// y_hat (N, h, w) -> image (C, 16h, 16w), clamped to [0, 1].
Tensor synthesis(const Tensor& y_hat, const ModelWeights& w);
/// y (N, h, w) -> z (M, h/4, w/4).
Tensor hyper_analysis(const Tensor& y, const ModelWeights& w);

struct EntropyParameters {
  Tensor mean;
  Tensor scale;
};
/// z_hat (M, h, w) -> (mu, sigma) each (N, 4h, 4w); sigma = max(exp(raw), sigma_min).
EntropyParameters hyper_synthesis(const Tensor& z_hat, const ModelWeights& w);

/// Run a stack of layers with the model's activation between them.
Tensor run_transform(const Tensor& input, const std::vector<Layer>& layers, float negative_slope);

// Weight files.

std::vector<std::uint8_t> save_weights(const ModelWeights& w);
ModelWeights load_weights(std::span<const std::uint8_t> bytes);

void save_weights_file(const ModelWeights& w, const std::filesystem::path& path);
ModelWeights load_weights_file(const std::filesystem::path& path);

/// 64-bit FNV-1a of the serialized weights; identifies a model in bitstreams.
std::uint64_t weights_hash(const ModelWeights& w);

}  // namespace fpc::model
