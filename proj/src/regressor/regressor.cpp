#include "sdfedit/regressor/regressor.hpp"

#include "sdfedit/common/io.hpp"
#include "sdfedit/numerics/adam.hpp"
#include "sdfedit/numerics/checkpoint.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sdfedit::reg {
namespace {

using nlohmann::json;

constexpr const char* kSchema = "sdfedit.regressor";
constexpr int kVersion = 1;

std::vector<std::size_t> layer_dims(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> dims{in};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out);
  return dims;
}

nn::Tensor take_rows(const nn::Tensor& t, const std::vector<std::size_t>& rows) {
  nn::Tensor out({rows.size(), t.cols()});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.matrix().row(Eigen::Index(r)) = t.matrix().row(Eigen::Index(rows[r]));
  }
  return out;
}

}  // namespace

Regressor::Regressor(std::size_t latent_dim, std::size_t outputs, std::vector<std::size_t> hidden)
    : latent_dim_(latent_dim),
      outputs_(outputs),
      hidden_(std::move(hidden)),
      mlp_("regressor", layer_dims(latent_dim, hidden_, outputs), nn::Activation::kRelu, nn::Activation::kSigmoid),
      mean_({latent_dim}),
      inv_std_({latent_dim}, 1.0) {
  if (latent_dim < 1 || outputs < 1) throw std::invalid_argument("regressor dims must be >= 1");
}

void Regressor::init(std::mt19937_64& rng) { mlp_.init(rng); }

void Regressor::fit_standardization(const nn::Tensor& latents) {
  if (latents.cols() != latent_dim_ || latents.rows() == 0) {
    throw nn::ShapeError("standardization expects [*, " + std::to_string(latent_dim_) + "], got " +
                         nn::to_string(latents.shape()));
  }
  const auto x = latents.matrix();
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const Eigen::RowVectorXd var = (x.rowwise() - mu).array().square().colwise().mean();
  for (std::size_t c = 0; c < latent_dim_; ++c) {
    mean_[c] = mu[Eigen::Index(c)];
    const double sd = std::sqrt(var[Eigen::Index(c)]);
    inv_std_[c] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
}

nn::Var Regressor::forward(nn::Tape& t, nn::Var latents) const {
  const nn::Tensor& z = t.value(latents);
  if (z.cols() != latent_dim_) {
    throw nn::ShapeError("regressor expects latents [*, " + std::to_string(latent_dim_) + "], got " +
                         nn::to_string(z.shape()));
  }
  // Standardization as a fixed diagonal linear map so gradients reach z.
  nn::Tensor w({latent_dim_, latent_dim_});
  nn::Tensor b({latent_dim_});
  for (std::size_t c = 0; c < latent_dim_; ++c) {
    w.at(c, c) = inv_std_[c];
    b[c] = -mean_[c] * inv_std_[c];
  }
  const nn::Var x = nn::linear(t, latents, t.constant(std::move(w)), t.constant(std::move(b)));
  return mlp_.forward(t, x);
}

nn::Tensor Regressor::predict(const nn::Tensor& latents) const {
  nn::Tape t;
  for (const auto* p : parameters()) t.freeze(*p);
  return t.value(forward(t, t.constant(latents)));
}

std::vector<double> Regressor::predict(const std::vector<double>& latent) const {
  const auto out = predict(nn::Tensor({1, latent.size()}, latent));
  return out.to_vector();
}

std::vector<nn::Parameter*> Regressor::parameters() {
  std::vector<nn::Parameter*> out;
  mlp_.collect(out);
  return out;
}

std::vector<const nn::Parameter*> Regressor::parameters() const {
  std::vector<const nn::Parameter*> out;
  mlp_.collect(out);
  return out;
}

std::vector<nn::NamedTensor> Regressor::state() const {
  auto s = nn::snapshot(parameters());
  s.push_back({"regressor.input_mean", mean_});
  s.push_back({"regressor.input_inv_std", inv_std_});
  return s;
}

void Regressor::load_state(const std::vector<nn::NamedTensor>& state) {
  nn::restore(parameters(), state);
  const auto& m = nn::find_tensor(state, "regressor.input_mean");
  const auto& s = nn::find_tensor(state, "regressor.input_inv_std");
  if (!m.same_shape(mean_) || !s.same_shape(inv_std_)) throw nn::ShapeError("regressor standardization shape mismatch");
  mean_ = m;
  inv_std_ = s;
}

std::vector<double> mean_absolute_error(const nn::Tensor& predicted, const nn::Tensor& target) {
  if (!predicted.same_shape(target)) throw nn::ShapeError("mae: shape mismatch");
  std::vector<double> out(target.cols(), 0.0);
  if (target.rows() == 0) return out;
  for (std::size_t r = 0; r < target.rows(); ++r) {
    for (std::size_t c = 0; c < target.cols(); ++c) out[c] += std::abs(predicted.at(r, c) - target.at(r, c));
  }
  for (double& v : out) v /= static_cast<double>(target.rows());
  return out;
}

TrainedRegressor train_regressor(const nn::Tensor& latents, const nn::Tensor& labels, const RegressorConfig& config) {
  const std::size_t n = latents.rows();
  if (labels.rows() != n) throw std::invalid_argument("every latent needs a label row");
  if (n < 4) throw std::invalid_argument("regressor training needs at least 4 shapes");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!(labels[i] >= 0.0 && labels[i] <= 1.0)) {
      throw std::invalid_argument("label " + std::to_string(labels[i]) + " at row " + std::to_string(i / labels.cols()) +
                                  " is outside [0, 1]");
    }
  }
  if (!(config.validation_fraction >= 0.0 && config.validation_fraction < 1.0)) {
    throw std::invalid_argument("validation_fraction must be in [0, 1)");
  }
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  std::shuffle(rows.begin(), rows.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::round(config.validation_fraction * static_cast<double>(n)));
  RegressorMetrics metrics;
  metrics.validation_rows.assign(rows.begin(), rows.begin() + std::ptrdiff_t(n_val));
  metrics.train_rows.assign(rows.begin() + std::ptrdiff_t(n_val), rows.end());
  std::sort(metrics.validation_rows.begin(), metrics.validation_rows.end());
  std::sort(metrics.train_rows.begin(), metrics.train_rows.end());

  const nn::Tensor xtr = take_rows(latents, metrics.train_rows);
  const nn::Tensor ytr = take_rows(labels, metrics.train_rows);
  Regressor model(latents.cols(), labels.cols(), config.hidden);
  model.init(rng);
  model.fit_standardization(xtr);
  auto params = model.parameters();
  nn::AdamState state;
  const nn::AdamConfig acfg{config.lr};
  const std::size_t m = xtr.rows();
  const std::size_t bs = std::max<std::size_t>(1, std::min(config.batch_size, m));
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < m; start += bs) {
      const std::vector<std::size_t> idx(order.begin() + std::ptrdiff_t(start),
                                         order.begin() + std::ptrdiff_t(std::min(m, start + bs)));
      nn::Tape t;
      const nn::Var pred = model.forward(t, t.constant(take_rows(xtr, idx)));
      nn::Var loss = nn::mean(t, nn::square(t, nn::sub(t, pred, t.constant(take_rows(ytr, idx)))));
      if (config.weight_decay > 0) {
        for (auto* p : params) {
          if (p->name.ends_with(".weight")) {
            loss = nn::add(t, loss, nn::scale(t, nn::sum(t, nn::square(t, t.parameter(*p))), config.weight_decay));
          }
        }
      }
      const double value = t.value(loss)[0];
      if (!std::isfinite(value)) throw std::runtime_error("regressor loss became non-finite at epoch " + std::to_string(epoch));
      t.backward(loss);
      nn::zero_grads(params);
      t.accumulate(params);
      nn::adam_step(params, state, acfg);
      total += value;
      ++batches;
    }
    metrics.loss_curve.push_back(total / static_cast<double>(batches));
  }
  metrics.train_mae = mean_absolute_error(model.predict(xtr), ytr);
  if (n_val > 0) {
    metrics.validation_mae = mean_absolute_error(model.predict(take_rows(latents, metrics.validation_rows)),
                                                 take_rows(labels, metrics.validation_rows));
  }
  return {std::move(model), std::move(metrics)};
}

void save_regressor(const RegressorBundle& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto bytes = nn::encode_checkpoint(b.model.state());
  atomic_write(dir / "regressor.ckpt", bytes);
  json j;
  j["schema"] = kSchema;
  j["version"] = kVersion;
  j["checkpoint"] = "regressor.ckpt";
  j["checkpoint_fnv1a64"] = hex64(fnv1a64(bytes));
  j["latent_dim"] = b.model.latent_dim();
  j["attribute_names"] = b.attribute_names;
  j["config"] = {{"hidden", b.config.hidden},
                 {"lr", b.config.lr},
                 {"epochs", b.config.epochs},
                 {"batch_size", b.config.batch_size},
                 {"validation_fraction", b.config.validation_fraction},
                 {"weight_decay", b.config.weight_decay},
                 {"seed", b.config.seed}};
  j["metrics"] = {{"train_mae", b.metrics.train_mae},
                  {"validation_mae", b.metrics.validation_mae},
                  {"train_rows", b.metrics.train_rows},
                  {"validation_rows", b.metrics.validation_rows},
                  {"loss_curve", b.metrics.loss_curve}};
  atomic_write(dir / "regressor.json", j.dump(2) + "\n");
}

RegressorBundle load_regressor(const std::filesystem::path& dir) {
  try {
    const json j = json::parse(read_text(dir / "regressor.json"));
    if (j.at("schema").get<std::string>() != kSchema || j.at("version").get<int>() != kVersion) {
      throw FormatError("unsupported regressor sidecar");
    }
    RegressorConfig c;
    const auto& jc = j.at("config");
    c.hidden = jc.at("hidden").get<std::vector<std::size_t>>();
    c.lr = jc.at("lr").get<double>();
    c.epochs = jc.at("epochs").get<std::size_t>();
    c.batch_size = jc.at("batch_size").get<std::size_t>();
    c.validation_fraction = jc.at("validation_fraction").get<double>();
    c.weight_decay = jc.at("weight_decay").get<double>();
    c.seed = jc.at("seed").get<std::uint64_t>();
    const auto names = j.at("attribute_names").get<std::vector<std::string>>();
    const auto bytes = read_bytes(dir / j.at("checkpoint").get<std::string>());
    if (hex64(fnv1a64(bytes)) != j.at("checkpoint_fnv1a64").get<std::string>()) {
      throw FormatError("regressor checkpoint does not match its sidecar hash");
    }
    Regressor model(j.at("latent_dim").get<std::size_t>(), names.size(), c.hidden);
    model.load_state(nn::decode_checkpoint(bytes, "regressor.ckpt"));
    RegressorMetrics m;
    const auto& jm = j.at("metrics");
    m.train_mae = jm.at("train_mae").get<std::vector<double>>();
    m.validation_mae = jm.at("validation_mae").get<std::vector<double>>();
    m.train_rows = jm.at("train_rows").get<std::vector<std::size_t>>();
    m.validation_rows = jm.at("validation_rows").get<std::vector<std::size_t>>();
    m.loss_curve = jm.at("loss_curve").get<std::vector<double>>();
    return {std::move(model), names, c, std::move(m)};
  } catch (const json::exception& e) {
    throw FormatError("bad regressor sidecar: " + std::string(e.what()));
  }
}

}  // namespace sdfedit::reg
