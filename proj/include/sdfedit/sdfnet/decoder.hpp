#pragma once

#include "sdfedit/numerics/layers.hpp"

#include <cstddef>
#include <random>
#include <vector>

namespace sdfedit::sdf {

struct DecoderConfig {
  std::size_t latent_dim = 32;
  /// Encoding bands L; with encoding disabled the raw xyz is fed instead.
  std::size_t bands = 6;
  bool positional_encoding = true;
  std::size_t hidden = 128;
  std::size_t layers = 8;
  /// Index of the layer whose input is concatenated with the network input;
  /// 0 disables the skip.
  std::size_t skip_layer = 4;

  std::size_t point_features() const { return positional_encoding ? 6 * bands : 3; }
  std::size_t input_dim() const { return latent_dim + point_features(); }
};

/// Throws std::invalid_argument on inconsistent settings.
void validate(const DecoderConfig& config);

/// f(z, p): [z, encode(p)] -> ReLU MLP with one skip concatenation -> tanh.
class Decoder {
 public:
  explicit Decoder(const DecoderConfig& config);

  void init(std::mt19937_64& rng);
  const DecoderConfig& config() const noexcept { return config_; }

  /// Point features (encoded or raw) for an (n x 3) point matrix.
  nn::Tensor point_features(const nn::Tensor& points) const;

  /// Differentiable forward. `latents` is (n x latent_dim), one row per
  /// point; returns (n x 1).
  nn::Var forward(nn::Tape& t, nn::Var latents, const nn::Tensor& points) const;

  /// Tape-free evaluation of one latent at many points, in chunks.
  std::vector<double> evaluate(const std::vector<double>& latent, const nn::Tensor& points,
                               std::size_t chunk = 16384) const;

  std::vector<nn::Linear>& layers() { return layers_; }
  const std::vector<nn::Linear>& layers() const { return layers_; }
  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;

 private:
  DecoderConfig config_;
  std::vector<nn::Linear> layers_;
};

}  // namespace sdfedit::sdf
