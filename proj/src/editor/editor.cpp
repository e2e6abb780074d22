#include "sdfedit/editor/editor.hpp"

#include "sdfedit/common/io.hpp"
#include "sdfedit/numerics/adam.hpp"
#include "sdfedit/numerics/checkpoint.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sdfedit::edit {
namespace {

using nlohmann::json;

constexpr const char* kSchema = "sdfedit.editor";
constexpr int kVersion = 1;
constexpr double kBceEps = 1e-7;
constexpr double kMinDirectionNorm = 1e-12;

std::vector<std::size_t> net_dims(std::size_t d, const std::vector<std::size_t>& hidden) {
  std::vector<std::size_t> dims{d};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(d);
  return dims;
}

LatentNet make_net(const std::string& name, std::size_t d, const EditorConfig& c, bool second) {
  if (c.variant == Variant::kKan) return KanNet(name, net_dims(d, c.hidden), c.kan_grid, second);
  return nn::Mlp(name, net_dims(d, c.hidden), nn::Activation::kRelu, nn::Activation::kNone, !second);
}

nn::Var run(const LatentNet& net, nn::Tape& t, nn::Var x) {
  return std::visit([&](const auto& n) { return n.forward(t, x); }, net);
}

void zero_output(LatentNet& net) {
  if (auto* m = std::get_if<nn::Mlp>(&net)) {
    m->layers().back().zero();
    return;
  }
  // Spline scales stay nonzero so the coefficients still receive gradient.
  auto& last = std::get<KanNet>(net).layers().back();
  last.coefficients().value.fill(0.0);
  last.base_weight().value.fill(0.0);
}

}  // namespace

std::string_view variant_name(Variant v) { return v == Variant::kKan ? "kan" : "mlp"; }

Variant variant_from_name(std::string_view name) {
  if (name == "mlp") return Variant::kMlp;
  if (name == "kan") return Variant::kKan;
  throw std::invalid_argument("unknown editor variant '" + std::string(name) + "' (expected mlp or kan)");
}

void validate(const EditorConfig& c) {
  if (!(c.lambda_dir > 0)) throw std::invalid_argument("lambda_dir must be > 0");
  if (!(c.lambda_reg >= 0) || !(c.lambda_content >= 0)) throw std::invalid_argument("loss weights must be >= 0");
  if (c.batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (!(c.lr > 0)) throw std::invalid_argument("lr must be > 0");
  if (!(c.single_attribute_probability >= 0 && c.single_attribute_probability <= 1)) {
    throw std::invalid_argument("single_attribute_probability must lie in [0, 1]");
  }
  if (c.max_attributes == 0) throw std::invalid_argument("max_attributes must be >= 1");
  for (std::size_t h : c.hidden) {
    if (h == 0) throw std::invalid_argument("hidden widths must be >= 1");
  }
  if (!(c.kan_grid.hi > c.kan_grid.lo) || c.kan_grid.intervals == 0 || c.kan_grid.order == 0) {
    throw std::invalid_argument("bad kan grid");
  }
}

DegenerateDirection::DegenerateDirection(std::string attribute, double norm)
    : std::domain_error("direction for attribute '" + attribute + "' is degenerate (|Net1(z)| = " +
                        std::to_string(norm) + ")"),
      attribute_(std::move(attribute)) {}

DirectionModule::DirectionModule(std::string attribute, const std::string& prefix, std::size_t latent_dim,
                                 const EditorConfig& config)
    : attribute_(std::move(attribute)),
      latent_dim_(latent_dim),
      lambda_dir_(config.lambda_dir),
      net1_(make_net(prefix + ".net1", latent_dim, config, false)),
      net2_(make_net(prefix + ".net2", latent_dim, config, true)) {}

void DirectionModule::init(std::mt19937_64& rng) {
  std::visit([&](auto& n) { n.init(rng); }, net1_);
  if (auto* m = std::get_if<nn::Mlp>(&net1_)) {
    // A random output bias keeps Net1(z) nonzero where every ReLU is off.
    std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(double(latent_dim_)));
    for (double& b : m->layers().back().bias()->value.values()) b = g(rng);
  }
  std::visit([&](auto& n) { n.init(rng); }, net2_);
  zero_output(net2_);
}

nn::Var DirectionModule::direction(nn::Tape& t, nn::Var z) const {
  const nn::Var v = run(net1_, t, z);
  const nn::Tensor& vv = t.value(v);
  for (std::size_t r = 0; r < vv.rows(); ++r) {
    const double norm = vv.matrix().row(Eigen::Index(r)).norm();
    if (!(norm >= kMinDirectionNorm)) throw DegenerateDirection(attribute_, norm);
  }
  return nn::row_normalize(t, v, lambda_dir_, kMinDirectionNorm);
}

nn::Var DirectionModule::delta(nn::Tape& t, nn::Var z, const std::vector<double>& eps) const {
  if (eps.size() != t.value(z).rows()) {
    throw nn::ShapeError("need one strength per latent row: " + std::to_string(eps.size()) + " vs " +
                         std::to_string(t.value(z).rows()));
  }
  const nn::Var u = direction(t, z);
  const nn::Var x = nn::scale_rows(t, u, t.constant(nn::Tensor({eps.size()}, eps)));
  return run(net2_, t, x);
}

std::vector<double> DirectionModule::delta(const std::vector<double>& z, double eps) const {
  if (z.size() != latent_dim_) {
    throw nn::ShapeError("latent has " + std::to_string(z.size()) + " entries, editor expects " +
                         std::to_string(latent_dim_));
  }
  nn::Tape t;
  std::vector<const nn::Parameter*> ps;
  collect(ps);
  for (const auto* p : ps) t.freeze(*p);
  return t.value(delta(t, t.constant(nn::Tensor({1, z.size()}, z)), {eps})).to_vector();
}

void DirectionModule::collect(std::vector<nn::Parameter*>& out) {
  std::visit([&](auto& n) { n.collect(out); }, net1_);
  std::visit([&](auto& n) { n.collect(out); }, net2_);
}

void DirectionModule::collect(std::vector<const nn::Parameter*>& out) const {
  std::visit([&](const auto& n) { n.collect(out); }, net1_);
  std::visit([&](const auto& n) { n.collect(out); }, net2_);
}

Editor::Editor(std::vector<std::string> attributes, std::size_t latent_dim, EditorConfig config)
    : attributes_(std::move(attributes)), latent_dim_(latent_dim), config_(std::move(config)) {
  validate(config_);
  if (attributes_.empty()) throw std::invalid_argument("editor needs at least one attribute");
  if (latent_dim_ == 0) throw std::invalid_argument("latent_dim must be >= 1");
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (attributes_[i] == attributes_[j]) throw std::invalid_argument("duplicate attribute '" + attributes_[i] + "'");
    }
    modules_.emplace_back(attributes_[i], "editor.d" + std::to_string(i), latent_dim_, config_);
  }
}

void Editor::init(std::mt19937_64& rng) {
  for (auto& m : modules_) m.init(rng);
}

std::size_t Editor::index_of(std::string_view attribute) const {
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    if (attributes_[i] == attribute) return i;
  }
  throw std::invalid_argument("unknown attribute '" + std::string(attribute) + "'");
}

nn::Var Editor::edit(nn::Tape& t, nn::Var z, const nn::Tensor& eps) const {
  const std::size_t n = t.value(z).rows();
  if (t.value(z).cols() != latent_dim_) {
    throw nn::ShapeError("editor expects latents [*, " + std::to_string(latent_dim_) + "], got " +
                         nn::to_string(t.value(z).shape()));
  }
  if (eps.rank() != 2 || eps.rows() != n || eps.cols() != attributes_.size()) {
    throw nn::ShapeError("edit strengths must be [" + std::to_string(n) + ", " + std::to_string(attributes_.size()) +
                         "], got " + nn::to_string(eps.shape()));
  }
  nn::Var out = z;
  for (std::size_t a = 0; a < modules_.size(); ++a) {
    std::vector<double> col(n);
    bool any = false;
    for (std::size_t r = 0; r < n; ++r) {
      col[r] = eps.at(r, a);
      any = any || col[r] != 0.0;
    }
    if (!any) continue;
    out = nn::add(t, out, modules_[a].delta(t, z, col));
  }
  return out;
}

std::vector<double> Editor::edit(const std::vector<double>& z, const std::vector<double>& eps) const {
  if (z.size() != latent_dim_) {
    throw nn::ShapeError("latent has " + std::to_string(z.size()) + " entries, editor expects " +
                         std::to_string(latent_dim_));
  }
  if (eps.size() != attributes_.size()) {
    throw nn::ShapeError("got " + std::to_string(eps.size()) + " edit strengths for " +
                         std::to_string(attributes_.size()) + " attributes");
  }
  for (std::size_t a = 0; a < eps.size(); ++a) {
    if (!(std::abs(eps[a]) <= 1.0)) {
      throw std::invalid_argument("edit strength for '" + attributes_[a] + "' must lie in [-1, 1]");
    }
  }
  if (std::all_of(eps.begin(), eps.end(), [](double e) { return e == 0.0; })) return z;
  nn::Tape t;
  for (const auto* p : parameters()) t.freeze(*p);
  const nn::Var zv = t.constant(nn::Tensor({1, z.size()}, z));
  return t.value(edit(t, zv, nn::Tensor({1, eps.size()}, eps))).to_vector();
}

std::vector<nn::Parameter*> Editor::parameters() {
  std::vector<nn::Parameter*> out;
  for (auto& m : modules_) m.collect(out);
  return out;
}

std::vector<const nn::Parameter*> Editor::parameters() const {
  std::vector<const nn::Parameter*> out;
  for (const auto& m : modules_) m.collect(out);
  return out;
}

EditLoss edit_loss(nn::Tape& t, nn::Var predicted, nn::Var target, nn::Var z, nn::Var z_edit, double lambda_reg,
                   double lambda_content, bool swapped) {
  nn::Var reg;
  if (!swapped) {
    reg = nn::mean(t, nn::binary_cross_entropy(t, predicted, target, kBceEps));
  } else {
    // -[p log y + (1 - p) log(1 - y)] = p (log(1 - y) - log y) - log(1 - y), y the clamped target.
    const nn::Tensor& y = t.value(target);
    nn::Tensor slope = nn::Tensor::zeros_like(y);
    double offset = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double q = std::clamp(y[i], kBceEps, 1.0 - kBceEps);
      slope[i] = std::log(1.0 - q) - std::log(q);
      offset -= std::log(1.0 - q);
    }
    offset /= static_cast<double>(y.size());
    reg = nn::add(t, nn::mean(t, nn::mul(t, predicted, t.constant(std::move(slope)))),
                  t.constant(nn::Tensor({1}, offset)));
  }
  const nn::Var content = nn::mean(t, nn::row_sq_norm(t, nn::sub(t, z_edit, z)));
  const nn::Var total = nn::add(t, nn::scale(t, reg, lambda_reg), nn::scale(t, content, lambda_content));
  return {total, reg, content};
}

EditLossValue edit_loss(const std::vector<double>& predicted, const std::vector<double>& target,
                        const std::vector<double>& z, const std::vector<double>& z_edit, double lambda_reg,
                        double lambda_content, bool swapped) {
  if (predicted.size() != target.size() || predicted.empty()) {
    throw nn::ShapeError("edit_loss: predicted and target attributes differ in length or are empty");
  }
  if (z.size() != z_edit.size()) throw nn::ShapeError("edit_loss: z and z' differ in length");
  EditLossValue out;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (!swapped) {
      const double p = std::clamp(predicted[i], kBceEps, 1.0 - kBceEps);
      out.reg -= target[i] * std::log(p) + (1.0 - target[i]) * std::log(1.0 - p);
    } else {
      const double q = std::clamp(target[i], kBceEps, 1.0 - kBceEps);
      out.reg -= predicted[i] * std::log(q) + (1.0 - predicted[i]) * std::log(1.0 - q);
    }
  }
  out.reg /= static_cast<double>(predicted.size());
  for (std::size_t i = 0; i < z.size(); ++i) out.content += (z_edit[i] - z[i]) * (z_edit[i] - z[i]);
  out.total = lambda_reg * out.reg + lambda_content * out.content;
  return out;
}

LatentStats latent_stats(const nn::Tensor& codes) {
  if (codes.rank() != 2 || codes.rows() == 0) {
    throw nn::ShapeError("latent statistics need a nonempty (n x d) table, got " + nn::to_string(codes.shape()));
  }
  const std::size_t n = codes.rows();
  const std::size_t d = codes.cols();
  LatentStats s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) s.mean[c] += codes.at(r, c);
  }
  for (double& m : s.mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const double e = codes.at(r, c) - s.mean[c];
      s.stddev[c] += e * e;
    }
  }
  for (double& v : s.stddev) v = std::sqrt(v / static_cast<double>(n));
  return s;
}

EditorTraining train_editor(const reg::Regressor& regressor, const LatentStats& stats,
                            const std::vector<std::string>& attributes, const EditorConfig& config,
                            const StepCallback& on_step) {
  validate(config);
  const std::size_t d = regressor.latent_dim();
  const std::size_t n_attr = regressor.outputs();
  if (attributes.size() != n_attr) {
    throw std::invalid_argument("regressor predicts " + std::to_string(n_attr) + " attributes, got " +
                                std::to_string(attributes.size()) + " names");
  }
  if (stats.mean.size() != d || stats.stddev.size() != d) {
    throw nn::ShapeError("latent statistics do not match the regressor latent dimension");
  }
  for (double s : stats.stddev) {
    if (!(s >= 0) || !std::isfinite(s)) throw std::invalid_argument("latent standard deviations must be finite and >= 0");
  }

  std::mt19937_64 rng(config.seed);
  EditorTraining out{Editor(attributes, d, config), {}};
  out.editor.init(rng);
  auto params = out.editor.parameters();
  nn::AdamState state;
  const nn::AdamConfig acfg{config.lr};
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> strength(-1.0, 1.0);
  const std::size_t multi_max = std::min(config.max_attributes, n_attr);
  const std::size_t B = config.batch_size;
  std::vector<std::size_t> pool(n_attr);

  for (std::size_t step = 0; step < config.steps; ++step) {
    nn::Tensor z({B, d});
    for (std::size_t r = 0; r < B; ++r) {
      for (std::size_t c = 0; c < d; ++c) z.at(r, c) = stats.mean[c] + stats.stddev[c] * normal(rng);
    }
    const nn::Tensor alpha = regressor.predict(z);
    nn::Tensor eps({B, n_attr});
    nn::Tensor target = alpha;
    for (std::size_t r = 0; r < B; ++r) {
      std::size_t k = 1;
      if (multi_max >= 2 && unit(rng) >= config.single_attribute_probability) {
        k = 2 + std::uniform_int_distribution<std::size_t>(0, multi_max - 2)(rng);
      }
      std::iota(pool.begin(), pool.end(), 0);
      for (std::size_t j = 0; j < k; ++j) {
        std::swap(pool[j], pool[std::uniform_int_distribution<std::size_t>(j, n_attr - 1)(rng)]);
        const std::size_t a = pool[j];
        double e = strength(rng);
        while (!(alpha.at(r, a) + e >= 0.0 && alpha.at(r, a) + e <= 1.0)) e = strength(rng);
        eps.at(r, a) = e;
        target.at(r, a) = alpha.at(r, a) + e;
      }
    }

    nn::Tape t;
    for (const auto* p : regressor.parameters()) t.freeze(*p);
    const nn::Var zv = t.constant(std::move(z));
    const nn::Var z_edit = out.editor.edit(t, zv, eps);
    const nn::Var predicted = regressor.forward(t, z_edit);
    const EditLoss loss = edit_loss(t, predicted, t.constant(std::move(target)), zv, z_edit, config.lambda_reg,
                                    config.lambda_content, config.swapped_bce);
    const double value = t.value(loss.total)[0];
    if (!std::isfinite(value)) {
      throw TrainingDiverged("editor loss became non-finite at step " + std::to_string(step), step);
    }
    t.backward(loss.total);
    nn::zero_grads(params);
    t.accumulate(params);
    nn::adam_step(params, state, acfg);
    out.loss_curve.push_back(value);
    if (on_step) on_step(step, value);
  }
  return out;
}

namespace {

json config_to_json(const EditorConfig& c) {
  return {{"variant", variant_name(c.variant)},
          {"hidden", c.hidden},
          {"kan_grid", {{"lo", c.kan_grid.lo}, {"hi", c.kan_grid.hi}, {"intervals", c.kan_grid.intervals},
                        {"order", c.kan_grid.order}}},
          {"lambda_dir", c.lambda_dir},
          {"lambda_reg", c.lambda_reg},
          {"lambda_content", c.lambda_content},
          {"swapped_bce", c.swapped_bce},
          {"steps", c.steps},
          {"batch_size", c.batch_size},
          {"lr", c.lr},
          {"single_attribute_probability", c.single_attribute_probability},
          {"max_attributes", c.max_attributes},
          {"seed", c.seed}};
}

EditorConfig config_from_json(const json& j) {
  EditorConfig c;
  c.variant = variant_from_name(j.at("variant").get<std::string>());
  c.hidden = j.at("hidden").get<std::vector<std::size_t>>();
  const auto& g = j.at("kan_grid");
  c.kan_grid = {g.at("lo").get<double>(), g.at("hi").get<double>(), g.at("intervals").get<std::size_t>(),
                g.at("order").get<std::size_t>()};
  c.lambda_dir = j.at("lambda_dir").get<double>();
  c.lambda_reg = j.at("lambda_reg").get<double>();
  c.lambda_content = j.at("lambda_content").get<double>();
  c.swapped_bce = j.at("swapped_bce").get<bool>();
  c.steps = j.at("steps").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.lr = j.at("lr").get<double>();
  c.single_attribute_probability = j.at("single_attribute_probability").get<double>();
  c.max_attributes = j.at("max_attributes").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

void save_editor(const EditorBundle& b, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto bytes = nn::encode_checkpoint(nn::snapshot(b.editor.parameters()));
  atomic_write(dir / "editor.ckpt", bytes);
  const auto& c = b.editor.config();
  json j;
  j["schema"] = kSchema;
  j["version"] = kVersion;
  j["checkpoint"] = "editor.ckpt";
  j["checkpoint_fnv1a64"] = hex64(fnv1a64(bytes));
  j["latent_dim"] = b.editor.latent_dim();
  j["attribute_names"] = b.editor.attributes();
  j["variant"] = variant_name(c.variant);
  j["lambda_dir"] = c.lambda_dir;
  j["lambda_reg"] = c.lambda_reg;
  j["lambda_content"] = c.lambda_content;
  j["config"] = config_to_json(c);
  j["latent_stats"] = {{"mean", b.stats.mean}, {"stddev", b.stats.stddev}};
  j["loss_curve"] = b.loss_curve;
  atomic_write(dir / "editor.json", j.dump(2) + "\n");
}

EditorBundle load_editor(const std::filesystem::path& dir) {
  try {
    const json j = json::parse(read_text(dir / "editor.json"));
    if (j.at("schema").get<std::string>() != kSchema || j.at("version").get<int>() != kVersion) {
      throw FormatError("unsupported editor sidecar");
    }
    const auto bytes = read_bytes(dir / j.at("checkpoint").get<std::string>());
    if (hex64(fnv1a64(bytes)) != j.at("checkpoint_fnv1a64").get<std::string>()) {
      throw FormatError("editor checkpoint does not match its sidecar hash");
    }
    Editor editor(j.at("attribute_names").get<std::vector<std::string>>(), j.at("latent_dim").get<std::size_t>(),
                  config_from_json(j.at("config")));
    nn::restore(editor.parameters(), nn::decode_checkpoint(bytes, "editor.ckpt"));
    LatentStats stats{j.at("latent_stats").at("mean").get<std::vector<double>>(),
                      j.at("latent_stats").at("stddev").get<std::vector<double>>()};
    return {std::move(editor), std::move(stats), j.at("loss_curve").get<std::vector<double>>()};
  } catch (const json::exception& e) {
    throw FormatError("bad editor sidecar: " + std::string(e.what()));
  }
}

}  // namespace sdfedit::edit
