#include "sdfedit/sdfnet/decoder.hpp"

#include "sdfedit/sdfnet/encoding.hpp"

#include <stdexcept>
#include <string>

namespace sdfedit::sdf {

void validate(const DecoderConfig& c) {
  if (c.latent_dim < 1) throw std::invalid_argument("latent_dim must be >= 1");
  if (c.positional_encoding && c.bands < 1) throw std::invalid_argument("bands must be >= 1");
  if (c.hidden < 1) throw std::invalid_argument("hidden width must be >= 1");
  if (c.layers < 1) throw std::invalid_argument("decoder needs at least 1 layer");
  if (c.skip_layer >= c.layers) throw std::invalid_argument("skip_layer must index a decoder layer (0 disables)");
}

Decoder::Decoder(const DecoderConfig& config) : config_(config) {
  validate(config_);
  const std::size_t in = config_.input_dim();
  for (std::size_t i = 0; i < config_.layers; ++i) {
    std::size_t fan_in = i == 0 ? in : config_.hidden;
    if (i == config_.skip_layer && i > 0) fan_in += in;
    const std::size_t fan_out = i + 1 == config_.layers ? 1 : config_.hidden;
    layers_.emplace_back("decoder.l" + std::to_string(i), fan_in, fan_out);
  }
}

void Decoder::init(std::mt19937_64& rng) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].init(rng, i + 1 == layers_.size() ? 0.1 : 1.0);
  }
}

nn::Tensor Decoder::point_features(const nn::Tensor& points) const {
  if (points.cols() != 3) throw nn::ShapeError("decoder expects points [*, 3], got " + nn::to_string(points.shape()));
  return config_.positional_encoding ? positional_encode(points, config_.bands) : points;
}

nn::Var Decoder::forward(nn::Tape& t, nn::Var latents, const nn::Tensor& points) const {
  const nn::Tensor& z = t.value(latents);
  if (z.cols() != config_.latent_dim || z.rows() != points.rows()) {
    throw nn::ShapeError("decoder expects latents [" + std::to_string(points.rows()) + ", " +
                         std::to_string(config_.latent_dim) + "], got " + nn::to_string(z.shape()));
  }
  nn::Var parts[] = {latents, t.constant(point_features(points))};
  const nn::Var input = nn::concat_cols(t, parts);
  nn::Var h = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (i == config_.skip_layer && i > 0) {
      nn::Var cat[] = {h, input};
      h = nn::concat_cols(t, cat);
    }
    h = layers_[i].forward(t, h);
    h = i + 1 == layers_.size() ? nn::tanh(t, h) : nn::relu(t, h);
  }
  return h;
}

std::vector<double> Decoder::evaluate(const std::vector<double>& latent, const nn::Tensor& points,
                                      std::size_t chunk) const {
  using nn::RowMatrix;
  if (latent.size() != config_.latent_dim) {
    throw nn::ShapeError("latent has " + std::to_string(latent.size()) + " entries, decoder expects " +
                         std::to_string(config_.latent_dim));
  }
  if (points.rank() != 2 || points.cols() != 3) {
    throw nn::ShapeError("points must be (n x 3), got " + nn::to_string(points.shape()));
  }
  if (chunk == 0) throw std::invalid_argument("evaluation chunk must be positive");
  const std::size_t n = points.rows();
  std::vector<double> out(n);
  const auto zrow = Eigen::Map<const Eigen::RowVectorXd>(latent.data(), Eigen::Index(latent.size()));
  const auto d = Eigen::Index(config_.latent_dim);
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t m = std::min(chunk, n - start);
    nn::Tensor pts({m, 3});
    std::copy(points.data() + 3 * start, points.data() + 3 * (start + m), pts.data());
    const nn::Tensor feat = point_features(pts);
    RowMatrix input(Eigen::Index(m), Eigen::Index(config_.input_dim()));
    input.leftCols(d).rowwise() = zrow;
    input.rightCols(Eigen::Index(feat.cols())) = feat.matrix();
    RowMatrix h = input;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (i == config_.skip_layer && i > 0) {
        RowMatrix cat(h.rows(), h.cols() + input.cols());
        cat << h, input;
        h = std::move(cat);
      }
      const auto& L = layers_[i];
      RowMatrix next = h * L.weight().value.matrix().transpose();
      next.rowwise() += L.bias()->value.matrix().row(0);
      if (i + 1 == layers_.size()) {
        next = next.array().tanh();
      } else {
        next = next.cwiseMax(0.0);
      }
      h = std::move(next);
    }
    for (std::size_t r = 0; r < m; ++r) out[start + r] = h(Eigen::Index(r), 0);
  }
  return out;
}

std::vector<nn::Parameter*> Decoder::parameters() {
  std::vector<nn::Parameter*> out;
  for (auto& l : layers_) l.collect(out);
  return out;
}

std::vector<const nn::Parameter*> Decoder::parameters() const {
  std::vector<const nn::Parameter*> out;
  for (const auto& l : layers_) l.collect(out);
  return out;
}

}  // namespace sdfedit::sdf
