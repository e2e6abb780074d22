#pragma once

#include "sdfedit/geometry/mesh.hpp"
#include "sdfedit/geometry/sdf_samples.hpp"
#include "sdfedit/sdfnet/decoder.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdfedit::sdf {

/// One latent code per training shape, stored as rows of a single parameter.
struct LatentTable {
  std::vector<std::string> ids;
  nn::Parameter codes{"latents", nn::Tensor({0, 1})};

  std::size_t size() const noexcept { return ids.size(); }
  std::size_t dim() const noexcept { return codes.value.cols(); }
  std::vector<double> code(std::size_t row) const;
  /// Row of `id`, or std::nullopt.
  std::optional<std::size_t> find(const std::string& id) const;
};

struct SdfTrainConfig {
  DecoderConfig decoder;
  double delta = 0.1;
  double prior_weight = 1e-4;
  double latent_init_std = 0.01;
  double lr_weights = 5e-4;
  double lr_latents = 1e-3;
  std::size_t epochs = 1000;
  /// Samples drawn per shape per step.
  std::size_t points_per_shape = 512;
  std::size_t shapes_per_batch = 8;
  std::uint64_t seed = 1;
};

void validate(const SdfTrainConfig& config);

/// Thrown when a loss becomes non-finite; `step` is the epoch or iteration.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, std::size_t step) : std::runtime_error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// |clamp(pred, -delta, delta) - clamp(gt, -delta, delta)|. Throws for delta <= 0.
double clamped_l1(double pred, double gt, double delta);
/// Mean clamped L1 over rows, differentiable in `pred` (n x 1).
nn::Var clamped_l1(nn::Tape& t, nn::Var pred, const nn::Tensor& gt, double delta);

struct TrainingShape {
  std::string id;
  geo::SdfSampleSet samples;
};

struct SdfModel {
  Decoder decoder;
  LatentTable latents;
  SdfTrainConfig config;
  /// Mean clamped L1 per epoch.
  std::vector<double> loss_curve;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss)>;

/// Joint optimization of decoder weights and per-shape latents. Deterministic
/// in config.seed.
SdfModel train_autodecoder(const std::vector<TrainingShape>& shapes, const SdfTrainConfig& config,
                           const EpochCallback& on_epoch = {});

struct InferConfig {
  std::size_t steps = 400;
  double lr = 5e-3;
  std::size_t points_per_step = 2048;
  double delta = 0.1;
  double prior_weight = 1e-4;
  double init_std = 0.01;
  std::uint64_t seed = 1;
};

/// Fits a latent to `samples` with the decoder frozen.
std::vector<double> infer_latent(const Decoder& decoder, const geo::SdfSampleSet& samples,
                                 const InferConfig& config);

struct ReconstructOptions {
  std::size_t resolution = 64;
  /// Drops detached fragments (floaters in sparsely sampled space).
  bool largest_component_only = true;
};

/// Decoder field on the [-1, 1]^3 grid, extracted at iso 0.
geo::Mesh reconstruct(const Decoder& decoder, const std::vector<double>& latent,
                      const ReconstructOptions& options = {});

struct Projection {
  nn::Tensor coords;      // (shapes x dims), centred
  nn::Tensor components;  // (dims x latent_dim), orthonormal rows
  std::vector<double> explained_variance_ratio;
};

/// Principal-component projection of the latent rows. Needs >= 2 rows.
Projection project_latents(const nn::Tensor& codes, std::size_t dims = 2);

/// decoder.ckpt holds the decoder weights plus the latent table; sdf.json
/// records the config, shape order, loss curve and the checkpoint hash.
void save_sdf_model(const SdfModel& model, const std::filesystem::path& dir);
SdfModel load_sdf_model(const std::filesystem::path& dir);

}  // namespace sdfedit::sdf
