#include "sdfedit/common/io.hpp"
#include "sdfedit/numerics/checkpoint.hpp"
#include "sdfedit/numerics/grad_check.hpp"
#include "sdfedit/regressor/regressor.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <utility>

using namespace sdfedit;
using namespace sdfedit::reg;

namespace {

nn::Tensor random_latents(std::size_t n, std::size_t d, std::mt19937_64& rng, double sd = 1.0) {
  nn::Tensor z({n, d});
  std::normal_distribution<double> g(0.0, sd);
  for (double& v : z.values()) v = g(rng);
  return z;
}

RegressorConfig quick_config() {
  RegressorConfig c;
  c.hidden = {16, 16, 8};
  c.epochs = 200;
  c.batch_size = 8;
  c.lr = 3e-3;
  c.seed = 9;
  return c;
}

}  // namespace

TEST_CASE("regressor: zero weights and biases predict 0.5 everywhere") {
  Regressor r(5, 3, {8, 8, 4});
  for (auto* p : r.parameters()) p->value.fill(0.0);
  std::mt19937_64 rng(1);
  const auto z = random_latents(7, 5, rng, 10.0);
  const auto y = r.predict(z);
  REQUIRE(y.shape() == nn::Shape{7, 3});
  for (double v : y.values()) CHECK(v == 0.5);
}

TEST_CASE("regressor: four linear layers, outputs strictly inside (0, 1)") {
  Regressor r(6, 4);
  CHECK(r.parameters().size() == 8);
  std::mt19937_64 rng(2);
  r.init(rng);
  for (double sd : {0.01, 1.0, 100.0}) {
    const auto y = r.predict(random_latents(50, 6, rng, sd));
    for (double v : y.values()) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("regressor: dimension mismatch is rejected") {
  Regressor r(4, 2, {8, 8, 4});
  CHECK_THROWS_AS(r.predict(std::vector<double>{1.0, 2.0}), nn::ShapeError);
  CHECK_THROWS_AS(r.predict(nn::Tensor({3, 5})), nn::ShapeError);
  CHECK_THROWS_AS(r.fit_standardization(nn::Tensor({3, 5})), nn::ShapeError);
}

TEST_CASE("grad_check: regressor graph, weights and latent input") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(50 + seed);
    Regressor r(5, 3, {7, 6, 4});
    r.init(rng);
    r.fit_standardization(random_latents(12, 5, rng, 2.0));
    nn::Parameter z("z", random_latents(4, 5, rng));
    nn::Tensor target({4, 3});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : target.values()) v = u(rng);
    auto params = r.parameters();
    params.push_back(&z);
    const auto result = nn::grad_check(
        [&](nn::Tape& t) {
          const auto y = r.forward(t, t.parameter(z));
          return nn::mean(t, nn::square(t, nn::sub(t, y, t.constant(target))));
        },
        params);
    INFO("seed " << seed << " worst " << result.worst_parameter);
    CHECK(result.max_relative_error < 1e-4);
  }
}

TEST_CASE("train_regressor: constant labels are fit on held-out rows") {
  std::mt19937_64 rng(3);
  const auto z = random_latents(40, 6, rng);
  nn::Tensor labels({40, 2}, 0.7);
  const auto out = train_regressor(z, labels, quick_config());
  REQUIRE(out.metrics.validation_rows.size() == 8);
  for (double v : out.metrics.validation_mae) CHECK(v < 0.05);
  for (std::size_t r : out.metrics.validation_rows) {
    const auto y = out.model.predict(std::vector<double>(z.values().begin() + std::ptrdiff_t(r * 6),
                                                         z.values().begin() + std::ptrdiff_t(r * 6 + 6)));
    for (double v : y) CHECK(std::abs(v - 0.7) < 0.05);
  }
}

TEST_CASE("train_regressor: learns a smooth function of the latent") {
  std::mt19937_64 rng(4);
  const auto z = random_latents(120, 4, rng);
  nn::Tensor labels({120, 2});
  for (std::size_t r = 0; r < 120; ++r) {
    labels.at(r, 0) = 1.0 / (1.0 + std::exp(-z.at(r, 0)));
    labels.at(r, 1) = 1.0 / (1.0 + std::exp(-(z.at(r, 1) - z.at(r, 2)) / 2));
  }
  auto cfg = quick_config();
  cfg.epochs = 400;
  const auto out = train_regressor(z, labels, cfg);
  REQUIRE(out.metrics.validation_mae.size() == 2);
  REQUIRE(out.metrics.train_mae.size() == 2);
  for (double v : out.metrics.validation_mae) CHECK(v < 0.05);
  CHECK(out.metrics.loss_curve.size() == cfg.epochs);
  CHECK(out.metrics.loss_curve.back() < 0.2 * out.metrics.loss_curve.front());
}

TEST_CASE("train_regressor: split is a seeded partition and training is deterministic") {
  std::mt19937_64 rng(5);
  const auto z = random_latents(30, 3, rng);
  nn::Tensor labels({30, 1}, 0.25);
  auto cfg = quick_config();
  cfg.epochs = 20;
  const auto a = train_regressor(z, labels, cfg);
  const auto b = train_regressor(z, labels, cfg);
  CHECK(a.metrics.train_rows.size() + a.metrics.validation_rows.size() == 30);
  std::vector<bool> seen(30, false);
  for (auto r : a.metrics.train_rows) seen[r] = true;
  for (auto r : a.metrics.validation_rows) {
    CHECK_FALSE(seen[r]);
    seen[r] = true;
  }
  for (bool s : seen) CHECK(s);
  CHECK(a.metrics.validation_rows == b.metrics.validation_rows);
  CHECK(nn::encode_checkpoint(a.model.state()) == nn::encode_checkpoint(b.model.state()));
  cfg.seed = 10;
  const auto c = train_regressor(z, labels, cfg);
  CHECK(nn::encode_checkpoint(a.model.state()) != nn::encode_checkpoint(c.model.state()));
}

TEST_CASE("train_regressor: rejects bad labels and tiny tables") {
  std::mt19937_64 rng(6);
  const auto z = random_latents(10, 3, rng);
  nn::Tensor labels({10, 2}, 0.5);
  labels.at(4, 1) = 1.2;
  CHECK_THROWS_AS(train_regressor(z, labels, quick_config()), std::invalid_argument);
  labels.at(4, 1) = -0.01;
  CHECK_THROWS_AS(train_regressor(z, labels, quick_config()), std::invalid_argument);
  labels.at(4, 1) = std::nan("");
  CHECK_THROWS_AS(train_regressor(z, labels, quick_config()), std::invalid_argument);
  CHECK_THROWS_AS(train_regressor(random_latents(3, 3, rng), nn::Tensor({3, 2}, 0.5), quick_config()),
                  std::invalid_argument);
  CHECK_THROWS_AS(train_regressor(z, nn::Tensor({9, 2}, 0.5), quick_config()), std::invalid_argument);
}

TEST_CASE("mean_absolute_error: per column") {
  const auto p = nn::Tensor::matrix(2, 2, {0.1, 0.5, 0.3, 0.5});
  const auto t = nn::Tensor::matrix(2, 2, {0.2, 0.5, 0.0, 1.0});
  const auto m = mean_absolute_error(p, t);
  REQUIRE(m.size() == 2);
  CHECK(m[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(m[1] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("regressor bundle: save and load round trip, tampering detected") {
  std::mt19937_64 rng(7);
  const auto z = random_latents(12, 3, rng);
  nn::Tensor labels({12, 2}, 0.4);
  auto cfg = quick_config();
  cfg.epochs = 5;
  auto trained = train_regressor(z, labels, cfg);
  RegressorBundle bundle{std::move(trained.model), {"a", "b"}, cfg, trained.metrics};
  const auto dir = std::filesystem::temp_directory_path() / "sdfedit_test_regressor";
  std::filesystem::remove_all(dir);
  save_regressor(bundle, dir);
  const auto back = load_regressor(dir);
  CHECK(back.attribute_names == bundle.attribute_names);
  CHECK(back.config.hidden == cfg.hidden);
  CHECK(back.metrics.validation_mae == bundle.metrics.validation_mae);
  CHECK(nn::bitwise_equal(back.model.predict(z), bundle.model.predict(z)));
  auto bytes = read_bytes(dir / "regressor.ckpt");
  bytes[bytes.size() - 1] ^= 1;
  atomic_write(dir / "regressor.ckpt", bytes);
  CHECK_THROWS_AS(load_regressor(dir), FormatError);
}
