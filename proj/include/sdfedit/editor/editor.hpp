#pragma once

#include "sdfedit/editor/kan.hpp"
#include "sdfedit/regressor/regressor.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sdfedit::edit {

enum class Variant { kMlp, kKan };

std::string_view variant_name(Variant v);
Variant variant_from_name(std::string_view name);

struct EditorConfig {
  Variant variant = Variant::kMlp;
  /// Hidden widths of both networks of every direction module.
  std::vector<std::size_t> hidden{64};
  KanGridConfig kan_grid;
  /// Norm of the unit direction fed to the second network.
  double lambda_dir = 1.0;
  double lambda_reg = 1.0;
  double lambda_content = 8.0;
  /// Cross entropy with target and prediction swapped, as sometimes written.
  bool swapped_bce = false;
  std::size_t steps = 5000;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  double single_attribute_probability = 0.7;
  std::size_t max_attributes = 3;
  std::uint64_t seed = 1;
};

void validate(const EditorConfig& config);

/// Net1(z) vanished, so no direction can be formed for `attribute`.
class DegenerateDirection : public std::domain_error {
 public:
  DegenerateDirection(std::string attribute, double norm);
  const std::string& attribute() const noexcept { return attribute_; }

 private:
  std::string attribute_;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, std::size_t step) : std::runtime_error(what), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

using LatentNet = std::variant<nn::Mlp, KanNet>;

/// One attribute direction: v = Net1(z), u = lambda_dir * v / |v|,
/// delta = Net2(eps * u). Net2 has no biases (and anchored splines for
/// KAN), so eps = 0 gives delta = 0 exactly.
class DirectionModule {
 public:
  DirectionModule(std::string attribute, const std::string& prefix, std::size_t latent_dim,
                  const EditorConfig& config);

  /// Random first network; second network starts as the zero map.
  void init(std::mt19937_64& rng);

  const std::string& attribute() const noexcept { return attribute_; }
  double lambda_dir() const noexcept { return lambda_dir_; }
  std::size_t latent_dim() const noexcept { return latent_dim_; }

  /// Rows of u for the rows of z.
  nn::Var direction(nn::Tape& t, nn::Var z) const;
  /// Per-row delta for per-row strengths `eps`.
  nn::Var delta(nn::Tape& t, nn::Var z, const std::vector<double>& eps) const;
  std::vector<double> delta(const std::vector<double>& z, double eps) const;

  LatentNet& first() { return net1_; }
  LatentNet& second() { return net2_; }
  const LatentNet& first() const { return net1_; }
  const LatentNet& second() const { return net2_; }

  void collect(std::vector<nn::Parameter*>& out);
  void collect(std::vector<const nn::Parameter*>& out) const;

 private:
  std::string attribute_;
  std::size_t latent_dim_;
  double lambda_dir_;
  LatentNet net1_;
  LatentNet net2_;
};

/// One direction module per attribute. Multi-attribute edits add the
/// deltas of every attribute with a nonzero strength.
class Editor {
 public:
  Editor(std::vector<std::string> attributes, std::size_t latent_dim, EditorConfig config);

  void init(std::mt19937_64& rng);

  const std::vector<std::string>& attributes() const noexcept { return attributes_; }
  std::size_t attribute_count() const noexcept { return attributes_.size(); }
  std::size_t latent_dim() const noexcept { return latent_dim_; }
  const EditorConfig& config() const noexcept { return config_; }
  std::size_t index_of(std::string_view attribute) const;

  std::vector<DirectionModule>& modules() { return modules_; }
  const std::vector<DirectionModule>& modules() const { return modules_; }

  /// z (n x latent_dim), eps (n x attribute_count) -> z'.
  nn::Var edit(nn::Tape& t, nn::Var z, const nn::Tensor& eps) const;
  /// Single latent; every |eps_i| <= 1. All-zero eps returns z unchanged.
  std::vector<double> edit(const std::vector<double>& z, const std::vector<double>& eps) const;

  std::vector<nn::Parameter*> parameters();
  std::vector<const nn::Parameter*> parameters() const;

 private:
  std::vector<std::string> attributes_;
  std::size_t latent_dim_;
  EditorConfig config_;
  std::vector<DirectionModule> modules_;
};

struct EditLoss {
  nn::Var total;
  nn::Var reg;
  nn::Var content;
};

/// L_reg: cross entropy of predictions `predicted` against pseudo targets
/// `target`, averaged over every entry (predictions clamped to
/// [1e-7, 1 - 1e-7]). L_content: squared distance of z' from z, averaged
/// over rows. total = lambda_reg * L_reg + lambda_content * L_content.
EditLoss edit_loss(nn::Tape& t, nn::Var predicted, nn::Var target, nn::Var z, nn::Var z_edit,
                   double lambda_reg, double lambda_content, bool swapped = false);

struct EditLossValue {
  double total = 0.0;
  double reg = 0.0;
  double content = 0.0;
};

EditLossValue edit_loss(const std::vector<double>& predicted, const std::vector<double>& target,
                        const std::vector<double>& z, const std::vector<double>& z_edit, double lambda_reg,
                        double lambda_content, bool swapped = false);

/// Per-dimension mean and standard deviation of a latent table.
struct LatentStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

LatentStats latent_stats(const nn::Tensor& codes);

struct EditorTraining {
  Editor editor;
  std::vector<double> loss_curve;
};

using StepCallback = std::function<void(std::size_t step, double loss)>;

/// Trains one direction per regressor output against the frozen regressor.
/// Latents are drawn from the diagonal normal given by `stats`; every row
/// edits a random nonempty attribute subset with strengths keeping
/// alpha + eps inside [0, 1].
EditorTraining train_editor(const reg::Regressor& regressor, const LatentStats& stats,
                            const std::vector<std::string>& attributes, const EditorConfig& config,
                            const StepCallback& on_step = {});

struct EditorBundle {
  Editor editor;
  LatentStats stats;
  std::vector<double> loss_curve;
};

/// editor.ckpt plus editor.json (attribute order, variant, lambdas, config,
/// latent statistics, loss curve and checkpoint hash).
void save_editor(const EditorBundle& bundle, const std::filesystem::path& dir);
EditorBundle load_editor(const std::filesystem::path& dir);

}  // namespace sdfedit::edit
