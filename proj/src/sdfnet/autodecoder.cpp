#include "sdfedit/sdfnet/autodecoder.hpp"

#include "sdfedit/common/io.hpp"
#include "sdfedit/geometry/marching_cubes.hpp"
#include "sdfedit/numerics/adam.hpp"
#include "sdfedit/numerics/checkpoint.hpp"

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sdfedit::sdf {
namespace {

using nlohmann::json;

constexpr const char* kSchema = "sdfedit.sdf";
constexpr int kVersion = 1;

// Draws `count` sample rows of one shape into the batch.
void draw_points(const geo::SdfSampleSet& s, std::size_t count, std::mt19937_64& rng, nn::Tensor& pts,
                 nn::Tensor& gt, std::size_t offset) {
  std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = count >= s.size() ? k % s.size() : pick(rng);
    const auto& p = s.points[i];
    pts.at(offset + k, 0) = p.x();
    pts.at(offset + k, 1) = p.y();
    pts.at(offset + k, 2) = p.z();
    gt[offset + k] = s.distances[i];
  }
}

json decoder_to_json(const DecoderConfig& c) {
  return {{"latent_dim", c.latent_dim}, {"bands", c.bands},   {"positional_encoding", c.positional_encoding},
          {"hidden", c.hidden},         {"layers", c.layers}, {"skip_layer", c.skip_layer}};
}

DecoderConfig decoder_from_json(const json& j) {
  DecoderConfig c;
  c.latent_dim = j.at("latent_dim").get<std::size_t>();
  c.bands = j.at("bands").get<std::size_t>();
  c.positional_encoding = j.at("positional_encoding").get<bool>();
  c.hidden = j.at("hidden").get<std::size_t>();
  c.layers = j.at("layers").get<std::size_t>();
  c.skip_layer = j.at("skip_layer").get<std::size_t>();
  return c;
}

}  // namespace

std::vector<double> LatentTable::code(std::size_t row) const {
  const auto& v = codes.value;
  return {v.data() + row * v.cols(), v.data() + (row + 1) * v.cols()};
}

std::optional<std::size_t> LatentTable::find(const std::string& id) const {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ids.begin());
}

void validate(const SdfTrainConfig& c) {
  validate(c.decoder);
  if (!(c.delta > 0)) throw std::invalid_argument("clamp delta must be > 0");
  if (c.prior_weight < 0) throw std::invalid_argument("prior_weight must be >= 0");
  if (!(c.latent_init_std >= 0)) throw std::invalid_argument("latent_init_std must be >= 0");
  if (!(c.lr_weights > 0) || !(c.lr_latents > 0)) throw std::invalid_argument("learning rates must be > 0");
  if (c.points_per_shape < 1 || c.shapes_per_batch < 1) throw std::invalid_argument("batch sizes must be >= 1");
}

double clamped_l1(double pred, double gt, double delta) {
  if (!(delta > 0)) throw std::invalid_argument("clamp delta must be > 0");
  return std::abs(std::clamp(pred, -delta, delta) - std::clamp(gt, -delta, delta));
}

nn::Var clamped_l1(nn::Tape& t, nn::Var pred, const nn::Tensor& gt, double delta) {
  if (!(delta > 0)) throw std::invalid_argument("clamp delta must be > 0");
  nn::Tensor target = gt;
  for (double& v : target.values()) v = std::clamp(v, -delta, delta);
  const nn::Var diff = nn::sub(t, nn::clamp(t, pred, -delta, delta), t.constant(std::move(target)));
  return nn::mean(t, nn::abs(t, diff));
}

SdfModel train_autodecoder(const std::vector<TrainingShape>& shapes, const SdfTrainConfig& config,
                           const EpochCallback& on_epoch) {
  validate(config);
  if (shapes.empty()) throw std::invalid_argument("no training shapes");
  for (const auto& s : shapes) {
    if (s.samples.size() == 0) throw std::invalid_argument("shape '" + s.id + "' has no samples");
  }
  std::mt19937_64 rng(config.seed);
  SdfModel model{Decoder(config.decoder), {}, config, {}};
  model.decoder.init(rng);
  const std::size_t n = shapes.size();
  const std::size_t d = config.decoder.latent_dim;
  model.latents.codes = nn::Parameter("latents", nn::Tensor({n, d}));
  std::normal_distribution<double> init(0.0, config.latent_init_std);
  for (double& v : model.latents.codes.value.values()) v = init(rng);
  for (const auto& s : shapes) model.latents.ids.push_back(s.id);

  auto weights = model.decoder.parameters();
  nn::Parameter* latent_param[] = {&model.latents.codes};
  nn::AdamState wstate, zstate;
  const nn::AdamConfig wcfg{config.lr_weights};
  const nn::AdamConfig zcfg{config.lr_latents};

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t P = config.points_per_shape;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += config.shapes_per_batch) {
      const std::size_t b = std::min(config.shapes_per_batch, n - start);
      nn::Tensor pts({b * P, 3});
      nn::Tensor gt({b * P, 1});
      std::vector<std::size_t> row_shape(b * P);
      std::vector<std::size_t> batch_shapes(order.begin() + std::ptrdiff_t(start),
                                            order.begin() + std::ptrdiff_t(start + b));
      for (std::size_t k = 0; k < b; ++k) {
        draw_points(shapes[batch_shapes[k]].samples, P, rng, pts, gt, k * P);
        std::fill(row_shape.begin() + std::ptrdiff_t(k * P), row_shape.begin() + std::ptrdiff_t((k + 1) * P),
                  batch_shapes[k]);
      }
      nn::Tape t;
      const nn::Var codes = t.parameter(model.latents.codes);
      const nn::Var pred = model.decoder.forward(t, nn::gather_rows(t, codes, row_shape), pts);
      const nn::Var data = clamped_l1(t, pred, gt, config.delta);
      nn::Var loss = data;
      if (config.prior_weight > 0) {
        const nn::Var prior = nn::mean(t, nn::row_sq_norm(t, nn::gather_rows(t, codes, batch_shapes)));
        loss = nn::add(t, loss, nn::scale(t, prior, config.prior_weight));
      }
      const double value = t.value(loss)[0];
      if (!std::isfinite(value)) {
        throw TrainingDiverged("autodecoder loss became non-finite at epoch " + std::to_string(epoch), epoch);
      }
      t.backward(loss);
      nn::zero_grads(weights);
      model.latents.codes.zero_grad();
      t.accumulate(weights);
      t.accumulate(latent_param);
      nn::adam_step(weights, wstate, wcfg);
      nn::adam_step(latent_param, zstate, zcfg);
      loss_sum += t.value(data)[0];
      ++batches;
    }
    const double epoch_loss = loss_sum / static_cast<double>(batches);
    model.loss_curve.push_back(epoch_loss);
    if (on_epoch) on_epoch(epoch, epoch_loss);
  }
  return model;
}

std::vector<double> infer_latent(const Decoder& decoder, const geo::SdfSampleSet& samples,
                                 const InferConfig& config) {
  if (!(config.delta > 0)) throw std::invalid_argument("clamp delta must be > 0");
  if (samples.size() == 0) throw std::invalid_argument("cannot infer a latent from no samples");
  std::mt19937_64 rng(config.seed);
  const std::size_t d = decoder.config().latent_dim;
  nn::Parameter z("latent", nn::Tensor({1, d}));
  std::normal_distribution<double> init(0.0, config.init_std);
  for (double& v : z.value.values()) v = init(rng);
  nn::Parameter* params[] = {&z};
  nn::AdamState state;
  const nn::AdamConfig acfg{config.lr};
  const std::size_t P = std::min(config.points_per_step, samples.size());
  for (std::size_t step = 0; step < config.steps; ++step) {
    nn::Tensor pts({P, 3});
    nn::Tensor gt({P, 1});
    draw_points(samples, P, rng, pts, gt, 0);
    nn::Tape t;
    for (const auto* p : decoder.parameters()) t.freeze(*p);
    const nn::Var zv = t.parameter(z);
    const nn::Var pred = decoder.forward(t, nn::gather_rows(t, zv, std::vector<std::size_t>(P, 0)), pts);
    nn::Var loss = clamped_l1(t, pred, gt, config.delta);
    if (config.prior_weight > 0) {
      loss = nn::add(t, loss, nn::scale(t, nn::sum(t, nn::row_sq_norm(t, zv)), config.prior_weight));
    }
    if (!std::isfinite(t.value(loss)[0])) {
      throw TrainingDiverged("latent inference loss became non-finite at step " + std::to_string(step), step);
    }
    t.backward(loss);
    z.zero_grad();
    t.accumulate(params);
    nn::adam_step(params, state, acfg);
  }
  return z.value.to_vector();
}

geo::Mesh reconstruct(const Decoder& decoder, const std::vector<double>& latent,
                      const ReconstructOptions& options) {
  const geo::GridSpec spec{options.resolution};
  const auto pts = geo::grid_points(spec);
  nn::Tensor points({pts.size(), 3});
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (int c = 0; c < 3; ++c) points.at(i, std::size_t(c)) = pts[i][c];
  }
  geo::ScalarGrid grid{spec, decoder.evaluate(latent, points)};
  auto mesh = geo::marching_cubes(grid);
  return options.largest_component_only ? geo::largest_component(mesh) : mesh;
}

Projection project_latents(const nn::Tensor& codes, std::size_t dims) {
  const std::size_t n = codes.rows();
  const std::size_t d = codes.cols();
  if (n < 2) throw std::invalid_argument("projection needs at least 2 latents");
  if (dims < 1 || dims > d) throw std::invalid_argument("projection dims must be in [1, latent_dim]");
  const nn::RowMatrix x = codes.matrix();
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const nn::RowMatrix c = x.rowwise() - mu;
  const Eigen::MatrixXd cov = (c.transpose() * c) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  const Eigen::VectorXd values = eig.eigenvalues().cwiseMax(0.0);
  const double total = values.sum();
  Projection out{nn::Tensor({n, dims}), nn::Tensor({dims, d}), {}};
  for (std::size_t k = 0; k < dims; ++k) {
    const Eigen::Index col = Eigen::Index(d - 1 - k);  // eigenvalues ascend
    Eigen::VectorXd v = eig.eigenvectors().col(col);
    Eigen::Index big = 0;
    v.cwiseAbs().maxCoeff(&big);
    if (v[big] < 0) v = -v;  // deterministic sign
    out.components.matrix().row(Eigen::Index(k)) = v.transpose();
    out.coords.matrix().col(Eigen::Index(k)) = c * v;
    out.explained_variance_ratio.push_back(total > 0 ? values[col] / total : 0.0);
  }
  return out;
}

void save_sdf_model(const SdfModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto tensors = nn::snapshot(model.decoder.parameters());
  tensors.push_back({"latents", model.latents.codes.value});
  const auto bytes = nn::encode_checkpoint(tensors);
  atomic_write(dir / "decoder.ckpt", bytes);
  const auto& c = model.config;
  json j;
  j["schema"] = kSchema;
  j["version"] = kVersion;
  j["checkpoint"] = "decoder.ckpt";
  j["checkpoint_fnv1a64"] = hex64(fnv1a64(bytes));
  j["config"] = {{"decoder", decoder_to_json(c.decoder)},
                 {"delta", c.delta},
                 {"prior_weight", c.prior_weight},
                 {"latent_init_std", c.latent_init_std},
                 {"lr_weights", c.lr_weights},
                 {"lr_latents", c.lr_latents},
                 {"epochs", c.epochs},
                 {"points_per_shape", c.points_per_shape},
                 {"shapes_per_batch", c.shapes_per_batch},
                 {"seed", c.seed}};
  j["shape_ids"] = model.latents.ids;
  j["loss_curve"] = model.loss_curve;
  atomic_write(dir / "sdf.json", j.dump(2) + "\n");
}

SdfModel load_sdf_model(const std::filesystem::path& dir) {
  json j;
  try {
    j = json::parse(read_text(dir / "sdf.json"));
    if (j.at("schema").get<std::string>() != kSchema || j.at("version").get<int>() != kVersion) {
      throw FormatError("unsupported sdf sidecar");
    }
  } catch (const json::exception& e) {
    throw FormatError("bad sdf sidecar: " + std::string(e.what()));
  }
  SdfTrainConfig c;
  try {
    const auto& jc = j.at("config");
    c.decoder = decoder_from_json(jc.at("decoder"));
    c.delta = jc.at("delta").get<double>();
    c.prior_weight = jc.at("prior_weight").get<double>();
    c.latent_init_std = jc.at("latent_init_std").get<double>();
    c.lr_weights = jc.at("lr_weights").get<double>();
    c.lr_latents = jc.at("lr_latents").get<double>();
    c.epochs = jc.at("epochs").get<std::size_t>();
    c.points_per_shape = jc.at("points_per_shape").get<std::size_t>();
    c.shapes_per_batch = jc.at("shapes_per_batch").get<std::size_t>();
    c.seed = jc.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw FormatError("bad sdf config: " + std::string(e.what()));
  }
  const auto bytes = read_bytes(dir / j.at("checkpoint").get<std::string>());
  if (hex64(fnv1a64(bytes)) != j.at("checkpoint_fnv1a64").get<std::string>()) {
    throw FormatError("decoder checkpoint does not match its sidecar hash");
  }
  const auto tensors = nn::decode_checkpoint(bytes, "decoder.ckpt");
  SdfModel model{Decoder(c.decoder), {}, c, j.at("loss_curve").get<std::vector<double>>()};
  nn::restore(model.decoder.parameters(), tensors);
  model.latents.ids = j.at("shape_ids").get<std::vector<std::string>>();
  const auto& codes = nn::find_tensor(tensors, "latents");
  if (codes.rows() != model.latents.ids.size() || codes.cols() != c.decoder.latent_dim) {
    throw FormatError("latent table shape " + nn::to_string(codes.shape()) + " does not match the sidecar");
  }
  model.latents.codes = nn::Parameter("latents", codes);
  return model;
}

}  // namespace sdfedit::sdf
