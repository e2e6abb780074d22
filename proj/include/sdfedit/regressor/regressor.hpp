#pragma once

#include "sdfedit/numerics/layers.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace sdfedit::reg {

/// R: latent -> attributes in (0, 1). Inputs are standardized by fixed
/// per-dimension statistics of the training latents, then a ReLU MLP with a
/// sigmoid output.
class Regressor {
 public:
  Regressor(std::size_t latent_dim, std::size_t outputs, std::vector<std::size_t> hidden = {128, 128, 64});

  void init(std::mt19937_64& rng);
  /// Sets the standardization from the rows of `latents` (n x latent_dim).
  void fit_standardization(const nn::Tensor& latents);

  std::size_t latent_dim() const noexcept { return latent_dim_; }
  std::size_t outputs() const noexcept { return outputs_; }
  const std::vector<std::size_t>& hidden() const noexcept { return hidden_; }

  /// (n x latent_dim) -> (n x outputs).
  nn::Var forward(nn::Tape& t, nn::Var latents) const;
  std::vector<double> predict(const std::vector<double>& latent) const;
  nn::Tensor predict(const nn::Tensor& latents) const;

  /// Trainable weights only.
  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;
  /// Weights plus the standardization buffers, for checkpoints.
  std::vector<nn::NamedTensor> state() const;
  void load_state(const std::vector<nn::NamedTensor>& state);

 private:
  std::size_t latent_dim_;
  std::size_t outputs_;
  std::vector<std::size_t> hidden_;
  nn::Mlp mlp_;
  nn::Tensor mean_;
  nn::Tensor inv_std_;
};

struct RegressorConfig {
  std::vector<std::size_t> hidden{128, 128, 64};
  double lr = 1e-3;
  std::size_t epochs = 1500;
  std::size_t batch_size = 32;
  double validation_fraction = 0.2;
  double weight_decay = 1e-4;
  std::uint64_t seed = 1;
};

struct RegressorMetrics {
  std::vector<double> train_mae;
  std::vector<double> validation_mae;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> validation_rows;
  std::vector<double> loss_curve;
};

struct TrainedRegressor {
  Regressor model;
  RegressorMetrics metrics;
};

/// Squared-error training on a seeded shape split. `labels` is (n x outputs)
/// aligned with the rows of `latents`. Throws std::invalid_argument for fewer
/// than 4 shapes or labels outside [0, 1].
TrainedRegressor train_regressor(const nn::Tensor& latents, const nn::Tensor& labels, const RegressorConfig& config);

/// Mean absolute error per output column.
std::vector<double> mean_absolute_error(const nn::Tensor& predicted, const nn::Tensor& target);

struct RegressorBundle {
  Regressor model;
  std::vector<std::string> attribute_names;
  RegressorConfig config;
  RegressorMetrics metrics;
};

/// regressor.ckpt plus regressor.json (attribute names in output order,
/// config, metrics and checkpoint hash).
void save_regressor(const RegressorBundle& bundle, const std::filesystem::path& dir);
RegressorBundle load_regressor(const std::filesystem::path& dir);

}  // namespace sdfedit::reg
