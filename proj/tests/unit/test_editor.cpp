#include "sdfedit/common/io.hpp"
#include "sdfedit/editor/editor.hpp"
#include "sdfedit/numerics/adam.hpp"
#include "sdfedit/numerics/checkpoint.hpp"
#include "sdfedit/numerics/grad_check.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <utility>

using namespace sdfedit;
using namespace sdfedit::edit;

namespace {

EditorConfig one_d_config() {
  EditorConfig c;
  c.hidden = {};
  c.lambda_dir = 2.0;
  return c;
}

// Sets a 1-D MLP direction module to Net1(z) = w1 z, Net2(x) = w2 x.
void set_linear_module(DirectionModule& m, double w1, double w2) {
  auto& n1 = std::get<nn::Mlp>(m.first()).layers().front();
  n1.weight().value[0] = w1;
  n1.bias()->value[0] = 0.0;
  std::get<nn::Mlp>(m.second()).layers().front().weight().value[0] = w2;
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  std::vector<double> v(n);
  for (double& x : v) x = g(rng);
  return v;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

EditorConfig small_config(Variant v) {
  EditorConfig c;
  c.variant = v;
  c.hidden = {6};
  c.batch_size = 8;
  c.lr = 3e-3;
  return c;
}

reg::Regressor small_regressor(std::size_t d, std::size_t outputs, std::uint64_t seed) {
  reg::Regressor r(d, outputs, {12, 12, 8});
  std::mt19937_64 rng(seed);
  r.init(rng);
  nn::Tensor codes({40, d});
  std::normal_distribution<double> g(0.0, 0.2);
  for (double& v : codes.values()) v = g(rng);
  r.fit_standardization(codes);
  return r;
}

LatentStats small_stats(std::size_t d) { return {std::vector<double>(d, 0.0), std::vector<double>(d, 0.2)}; }

std::vector<std::string> names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("a" + std::to_string(i));
  return out;
}

}  // namespace

TEST_CASE("direction: 1-D hand example") {
  Editor e({"h"}, 1, one_d_config());
  set_linear_module(e.modules()[0], 1.0, 1.0);
  const auto delta = e.modules()[0].delta({1.0}, 0.5);
  REQUIRE(delta.size() == 1);
  CHECK(delta[0] == doctest::Approx(1.0).epsilon(1e-15));
  const auto z2 = e.edit({1.0}, {0.5});
  CHECK(z2[0] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("edit: two nonzero strengths add the hand-computed deltas") {
  Editor e({"a", "b"}, 1, one_d_config());
  set_linear_module(e.modules()[0], 1.0, 1.0);   // u = +2, delta = 2 eps
  set_linear_module(e.modules()[1], -1.0, 3.0);  // u = -2, delta = -6 eps
  const auto z2 = e.edit({1.0}, {0.5, 0.25});
  CHECK(z2[0] == doctest::Approx(1.0 + 1.0 - 1.5).epsilon(1e-15));
  const auto only_a = e.edit({1.0}, {0.5, 0.0});
  CHECK(only_a[0] == 1.0 + e.modules()[0].delta({1.0}, 0.5)[0]);
}

TEST_CASE("edit: zero strength is the identity, bit for bit, for both variants") {
  for (Variant v : {Variant::kMlp, Variant::kKan}) {
    Editor e(names(3), 5, small_config(v));
    std::mt19937_64 rng(11);
    e.init(rng);
    // Scramble every weight so the identity cannot come from zero weights.
    std::normal_distribution<double> g(0.0, 0.7);
    for (auto* p : e.parameters()) {
      for (double& x : p->value.values()) x = g(rng);
    }
    for (int trial = 0; trial < 5; ++trial) {
      const auto z = random_vector(5, rng);
      CHECK(e.edit(z, {0.0, 0.0, 0.0}) == z);
      for (const auto& m : e.modules()) {
        for (double d : m.delta(z, 0.0)) CHECK(d == 0.0);
      }
      nn::Tape t;
      const auto zv = t.constant(nn::Tensor({1, 5}, z));
      const auto& taped = t.value(e.edit(t, zv, nn::Tensor({1, 3})));
      CHECK(taped.to_vector() == z);
      // A zero entry in a batch row leaves that row alone while others move.
      nn::Tape t2;
      nn::Tensor zz({2, 5});
      for (std::size_t c = 0; c < 5; ++c) zz.at(0, c) = zz.at(1, c) = z[c];
      const auto out = t2.value(e.edit(t2, t2.constant(zz), nn::Tensor::matrix(2, 3, {0.0, 0.0, 0.0, 0.4, 0.0, 0.0})));
      for (std::size_t c = 0; c < 5; ++c) CHECK(out.at(0, c) == z[c]);
    }
  }
}

TEST_CASE("direction: zero second network annihilates every strength; fresh modules start there") {
  for (Variant v : {Variant::kMlp, Variant::kKan}) {
    Editor e(names(2), 4, small_config(v));
    std::mt19937_64 rng(12);
    e.init(rng);
    const auto z = random_vector(4, rng);
    for (double eps : {-1.0, -0.3, 0.2, 1.0}) {
      for (double d : e.modules()[1].delta(z, eps)) CHECK(d == 0.0);
    }
  }
}

TEST_CASE("direction: |u| equals lambda_dir") {
  for (Variant v : {Variant::kMlp, Variant::kKan}) {
    for (double lambda : {0.25, 1.0, 3.0}) {
      auto cfg = small_config(v);
      cfg.lambda_dir = lambda;
      Editor e(names(2), 6, cfg);
      std::mt19937_64 rng(13);
      e.init(rng);
      nn::Tensor z({20, 6});
      std::normal_distribution<double> g(0.0, 0.3);
      for (double& x : z.values()) x = g(rng);
      for (const auto& m : e.modules()) {
        nn::Tape t;
        const auto& u = t.value(m.direction(t, t.constant(z)));
        for (std::size_t r = 0; r < 20; ++r) {
          CHECK(std::abs(u.matrix().row(Eigen::Index(r)).norm() - lambda) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("direction: vanishing first network names the attribute") {
  Editor e({"hood_length", "wheelbase"}, 3, small_config(Variant::kMlp));
  std::mt19937_64 rng(14);
  e.init(rng);
  for (auto& l : std::get<nn::Mlp>(e.modules()[1].first()).layers()) l.zero();
  CHECK_NOTHROW(e.edit({0.1, 0.2, 0.3}, {0.3, 0.0}));
  try {
    e.edit({0.1, 0.2, 0.3}, {0.0, 0.3});
    FAIL("expected a degenerate direction");
  } catch (const DegenerateDirection& err) {
    CHECK(err.attribute() == "wheelbase");
    CHECK(std::string(err.what()).find("wheelbase") != std::string::npos);
  }
}

TEST_CASE("edit: bad requests are rejected") {
  Editor e(names(2), 3, small_config(Variant::kMlp));
  std::mt19937_64 rng(15);
  e.init(rng);
  CHECK_THROWS_AS(e.edit({0.1, 0.2, 0.3}, {1.5, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(e.edit({0.1, 0.2, 0.3}, {std::nan(""), 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(e.edit({0.1, 0.2, 0.3}, {0.1}), nn::ShapeError);
  CHECK_THROWS_AS(e.edit({0.1, 0.2}, {0.1, 0.0}), nn::ShapeError);
  CHECK_THROWS_AS(e.index_of("nope"), std::invalid_argument);
  CHECK(e.index_of("a1") == 1);
  CHECK_THROWS_AS(Editor({"x", "x"}, 3, small_config(Variant::kMlp)), std::invalid_argument);
}

TEST_CASE("edit_loss: tabulated values") {
  const EditorConfig defaults;
  CHECK(defaults.lambda_reg == 1.0);
  CHECK(defaults.lambda_content == 8.0);
  CHECK(defaults.lambda_dir == 1.0);

  const std::vector<double> z = {0.3, -0.2, 0.1};
  const auto perfect = edit_loss({1.0, 1.0}, {1.0, 1.0}, z, z, 1.0, 8.0);
  CHECK(perfect.reg == doctest::Approx(-std::log(1.0 - 1e-7)).epsilon(1e-12));
  CHECK(perfect.reg < 1e-6);

  const auto half = edit_loss({0.5}, {0.5}, z, z, 1.0, 8.0);
  CHECK(std::abs(half.reg - std::log(2.0)) < 1e-9);
  CHECK(half.content == 0.0);
  CHECK(std::abs(half.total - std::log(2.0)) < 1e-9);
  const auto half3 = edit_loss({0.5}, {0.5}, z, z, 3.0, 8.0);
  CHECK(std::abs(half3.total - 3.0 * std::log(2.0)) < 1e-9);

  const std::vector<double> moved = {0.4, -0.2, 0.1};
  const auto step = edit_loss({0.5}, {0.5}, z, moved, 1.0, 8.0);
  CHECK(std::abs(step.content - 0.01) < 1e-9);
  CHECK(std::abs(step.total - step.reg - 0.08) < 1e-9);
}

TEST_CASE("edit_loss: swapped orientation is the hand formula and differs from the standard one") {
  const std::vector<double> p = {0.8, 0.3};
  const std::vector<double> y = {0.6, 0.0};
  const std::vector<double> z = {0.0};
  const auto std_loss = edit_loss(p, y, z, z, 1.0, 8.0, false);
  const auto swapped = edit_loss(p, y, z, z, 1.0, 8.0, true);
  const double e = 1e-7;
  const double hand_std = -(0.6 * std::log(0.8) + 0.4 * std::log(0.2) + 0.0 * std::log(0.3) + 1.0 * std::log(0.7)) / 2;
  const double hand_swapped = -(0.8 * std::log(0.6) + 0.2 * std::log(0.4) + 0.3 * std::log(e) + 0.7 * std::log(1 - e)) / 2;
  CHECK(std::abs(std_loss.reg - hand_std) < 1e-12);
  CHECK(std::abs(swapped.reg - hand_swapped) < 1e-12);
  CHECK(std::abs(std_loss.reg - swapped.reg) > 1.0);
}

TEST_CASE("edit_loss: tape and scalar versions agree; components are nonnegative") {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (bool swapped : {false, true}) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> p(4), y(4);
      for (auto& v : p) v = u(rng);
      for (auto& v : y) v = u(rng);
      const auto z = random_vector(5, rng);
      auto z2 = z;
      if (trial % 2) z2[trial % 5] += 0.05;
      const auto scalar = edit_loss(p, y, z, z2, 1.0, 8.0, swapped);
      CHECK(scalar.reg >= 0.0);
      CHECK(scalar.content >= 0.0);
      CHECK((scalar.content == 0.0) == (z == z2));
      nn::Tape t;
      const auto l = edit_loss(t, t.constant(nn::Tensor({1, 4}, p)), t.constant(nn::Tensor({1, 4}, y)),
                               t.constant(nn::Tensor({1, 5}, z)), t.constant(nn::Tensor({1, 5}, z2)), 1.0, 8.0,
                               swapped);
      CHECK(t.value(l.reg)[0] == doctest::Approx(scalar.reg).epsilon(1e-12));
      CHECK(t.value(l.content)[0] == doctest::Approx(scalar.content).epsilon(1e-12));
      CHECK(t.value(l.total)[0] == doctest::Approx(scalar.total).epsilon(1e-12));
    }
  }
}

TEST_CASE("grad_check: both editor variants end to end through edit_loss") {
  for (Variant v : {Variant::kMlp, Variant::kKan}) {
    for (bool swapped : {false, true}) {
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const std::size_t d = 4;
        const auto r = small_regressor(d, 3, 200 + seed);
        Editor e(names(3), d, small_config(v));
        std::mt19937_64 rng(300 + seed);
        e.init(rng);
        // Move the second networks off their zero start so every path carries gradient.
        std::normal_distribution<double> g(0.0, 0.3);
        for (auto& m : e.modules()) {
          std::vector<nn::Parameter*> ps;
          std::visit([&](auto& n) { n.collect(ps); }, m.second());
          for (auto* p : ps) {
            for (double& x : p->value.values()) x = g(rng);
          }
        }
        nn::Tensor z({3, d});
        for (double& x : z.values()) x = g(rng);
        const auto eps = nn::Tensor::matrix(3, 3, {0.3, 0.0, 0.0, -0.5, 0.7, 0.0, 0.2, -0.1, 0.6});
        nn::Tensor target({3, 3});
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (double& x : target.values()) x = u(rng);
        const auto params = e.parameters();
        const auto result = nn::grad_check(
            [&](nn::Tape& t) {
              for (const auto* p : r.parameters()) t.freeze(*p);
              const auto zv = t.constant(z);
              const auto z2 = e.edit(t, zv, eps);
              return edit_loss(t, r.forward(t, z2), t.constant(target), zv, z2, 1.0, 8.0, swapped).total;
            },
            params);
        INFO("variant " << variant_name(v) << " swapped " << swapped << " seed " << seed << " worst "
                        << result.worst_tensor << " entry " << result.worst_parameter << " a " << result.analytic
                        << " n " << result.numeric);
        CHECK(result.max_tensor_relative_error < 1e-4);
        // Spline tails leave some KAN entries near 1e-9, below what central
        // differences resolve on an O(1) loss; MLP graphs pass entrywise too.
        if (v == Variant::kMlp) CHECK(result.max_relative_error < 1e-4);
      }
    }
  }
}

TEST_CASE("kan: zero coefficients and base weights give zero output") {
  KanNet net("k", {3, 5, 2});
  std::mt19937_64 rng(17);
  net.init(rng);
  for (auto& l : net.layers()) {
    l.coefficients().value.fill(0.0);
    l.base_weight().value.fill(0.0);
  }
  nn::Tape t;
  nn::Tensor x({4, 3});
  std::normal_distribution<double> g(0.0, 1.0);
  for (double& v : x.values()) v = g(rng);
  for (double y : t.value(net.forward(t, t.constant(x))).values()) CHECK(y == 0.0);
}

TEST_CASE("kan: anchored layers map zero to zero") {
  KanNet net("k", {3, 4, 3}, {}, true);
  std::mt19937_64 rng(18);
  net.init(rng);
  nn::Tape t;
  for (double y : t.value(net.forward(t, t.constant(nn::Tensor({2, 3})))).values()) CHECK(y == 0.0);
}

TEST_CASE("kan: least-squares coefficients reproduce the identity on the grid") {
  KanLayer layer("k", 1, 1);
  const auto& grid = layer.grid();
  const std::size_t nb = grid.basis_count();
  std::vector<double> xs;
  for (int i = 0; i <= 60; ++i) xs.push_back(-1.5 + 3.0 * i / 60.0);
  Eigen::MatrixXd a(xs.size(), nb);
  Eigen::VectorXd b(xs.size());
  std::vector<double> row(nb);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    grid.evaluate(xs[i], row);
    for (std::size_t c = 0; c < nb; ++c) a(Eigen::Index(i), Eigen::Index(c)) = row[c];
    b[Eigen::Index(i)] = xs[i];
  }
  const Eigen::VectorXd coef = a.colPivHouseholderQr().solve(b);
  for (std::size_t c = 0; c < nb; ++c) layer.coefficients().value[c] = coef[Eigen::Index(c)];
  layer.spline_scale().value.fill(1.0);
  layer.base_weight().value.fill(0.0);
  nn::Tensor probe({25, 1});
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (double& v : probe.values()) v = u(rng);
  nn::Tape t;
  const auto& y = t.value(layer.forward(t, t.constant(probe)));
  for (std::size_t i = 0; i < 25; ++i) CHECK(std::abs(y[i] - probe[i]) < 1e-9);
}

TEST_CASE("kan: one layer learns sin(pi x) where the best line cannot") {
  const std::size_t n = 101;
  nn::Tensor x({n, 1}), y({n, 1});
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = -1.0 + 2.0 * double(i) / double(n - 1);
    y[i] = std::sin(std::numbers::pi * x[i]);
  }
  // Least-squares line as the baseline.
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a(Eigen::Index(i), 0) = x[i];
    a(Eigen::Index(i), 1) = 1.0;
    b[Eigen::Index(i)] = y[i];
  }
  const Eigen::VectorXd line = a.colPivHouseholderQr().solve(b);
  const double line_err = (a * line - b).cwiseAbs().maxCoeff();
  CHECK(line_err >= 0.4);

  KanLayer layer("k", 1, 1);
  std::mt19937_64 rng(20);
  layer.init(rng);
  std::vector<nn::Parameter*> params;
  layer.collect(params);
  nn::AdamState state;
  const nn::AdamConfig cfg{2e-2};
  for (int step = 0; step < 1500; ++step) {
    nn::Tape t;
    const auto pred = layer.forward(t, t.constant(x));
    const auto loss = nn::mean(t, nn::square(t, nn::sub(t, pred, t.constant(y))));
    t.backward(loss);
    nn::zero_grads(params);
    t.accumulate(params);
    nn::adam_step(params, state, cfg);
  }
  nn::Tape t;
  const auto& pred = t.value(layer.forward(t, t.constant(x)));
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) err = std::max(err, std::abs(pred[i] - y[i]));
  CHECK(err < 0.05);
}

TEST_CASE("train_editor: trained edits lower the objective on a fixed batch; regressor untouched") {
  const std::size_t d = 8, n_attr = 6;
  const auto r = small_regressor(d, n_attr, 21);
  const auto before = nn::encode_checkpoint(r.state());
  auto cfg = small_config(Variant::kMlp);
  cfg.hidden = {16};
  cfg.steps = 5000;
  const auto out = train_editor(r, small_stats(d), names(n_attr), cfg);
  REQUIRE(out.loss_curve.size() == 5000);
  CHECK(nn::encode_checkpoint(r.state()) == before);

  // Objective of single-attribute edits on held-out latents, for the trained
  // editor and for the identity it started as.
  std::mt19937_64 rng(99);
  double trained = 0.0, identity = 0.0;
  std::size_t wins = 0, total = 0;
  for (int i = 0; i < 30; ++i) {
    const auto z = random_vector(d, rng, 0.2);
    const auto alpha = r.predict(z);
    for (std::size_t a = 0; a < n_attr; ++a) {
      const double e = alpha[a] <= 0.7 ? 0.3 : -0.3;
      std::vector<double> eps(n_attr, 0.0);
      eps[a] = e;
      auto target = alpha;
      target[a] += e;
      const auto z2 = out.editor.edit(z, eps);
      const double lt = edit_loss(r.predict(z2), target, z, z2, cfg.lambda_reg, cfg.lambda_content).total;
      const double li = edit_loss(alpha, target, z, z, cfg.lambda_reg, cfg.lambda_content).total;
      trained += lt;
      identity += li;
      wins += lt < li;
      ++total;
    }
  }
  INFO("trained " << trained << " identity " << identity << " wins " << wins << "/" << total);
  CHECK(trained < identity);
  CHECK(wins * 2 > total);
}

TEST_CASE("train_editor: deterministic, seed-sensitive, validated inputs") {
  const std::size_t d = 4;
  const auto r = small_regressor(d, 3, 22);
  for (Variant v : {Variant::kMlp, Variant::kKan}) {
    auto cfg = small_config(v);
    cfg.steps = 30;
    const auto a = train_editor(r, small_stats(d), names(3), cfg);
    const auto b = train_editor(r, small_stats(d), names(3), cfg);
    CHECK(a.loss_curve == b.loss_curve);
    CHECK(nn::encode_checkpoint(nn::snapshot(a.editor.parameters())) ==
          nn::encode_checkpoint(nn::snapshot(b.editor.parameters())));
    cfg.seed = 2;
    const auto c = train_editor(r, small_stats(d), names(3), cfg);
    CHECK(a.loss_curve != c.loss_curve);
  }
  auto cfg = small_config(Variant::kMlp);
  cfg.steps = 1;
  CHECK_THROWS_AS(train_editor(r, small_stats(d), names(2), cfg), std::invalid_argument);
  CHECK_THROWS_AS(train_editor(r, small_stats(d + 1), names(3), cfg), nn::ShapeError);
  cfg.lambda_dir = 0.0;
  CHECK_THROWS_AS(train_editor(r, small_stats(d), names(3), cfg), std::invalid_argument);
}

TEST_CASE("train_editor: heavier content weight never lengthens the edits") {
  const std::size_t d = 6;
  const auto r = small_regressor(d, 4, 23);
  std::mt19937_64 rng(24);
  std::vector<std::vector<double>> probes;
  for (int i = 0; i < 10; ++i) probes.push_back(random_vector(d, rng, 0.2));
  double previous = std::numeric_limits<double>::infinity();
  for (double lambda2 : {1.0, 8.0, 64.0}) {
    auto cfg = small_config(Variant::kMlp);
    cfg.hidden = {16};
    cfg.steps = 1500;
    cfg.lambda_content = lambda2;
    const auto out = train_editor(r, small_stats(d), names(4), cfg);
    double total = 0.0;
    for (const auto& z : probes) {
      for (std::size_t a = 0; a < 4; ++a) {
        std::vector<double> eps(4, 0.0);
        eps[a] = 0.3;
        const auto z2 = out.editor.edit(z, eps);
        std::vector<double> diff(d);
        for (std::size_t c = 0; c < d; ++c) diff[c] = z2[c] - z[c];
        total += norm(diff);
      }
    }
    const double mean_move = total / (10.0 * 4.0);
    INFO("lambda2 " << lambda2 << " mean |z' - z| " << mean_move);
    CHECK(mean_move <= previous);
    previous = mean_move;
  }
}

TEST_CASE("latent_stats: mean and population deviation") {
  const auto s = latent_stats(nn::Tensor::matrix(3, 2, {1.0, 0.0, 2.0, 0.0, 3.0, 0.0}));
  CHECK(s.mean == std::vector<double>{2.0, 0.0});
  CHECK(s.stddev[0] == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
  CHECK(s.stddev[1] == 0.0);
  CHECK_THROWS_AS(latent_stats(nn::Tensor({0, 3})), nn::ShapeError);
}

TEST_CASE("editor bundle: save and load round trip for both variants, tampering detected") {
  const std::size_t d = 4;
  const auto r = small_regressor(d, 3, 25);
  for (Variant v : {Variant::kMlp, Variant::kKan}) {
    auto cfg = small_config(v);
    cfg.steps = 10;
    cfg.lambda_content = 5.0;
    auto trained = train_editor(r, small_stats(d), {"x", "y", "z"}, cfg);
    EditorBundle bundle{std::move(trained.editor), small_stats(d), trained.loss_curve};
    const auto dir = std::filesystem::temp_directory_path() / "sdfedit_test_editor";
    std::filesystem::remove_all(dir);
    save_editor(bundle, dir);
    const auto back = load_editor(dir);
    CHECK(back.editor.attributes() == bundle.editor.attributes());
    CHECK(back.editor.config().variant == v);
    CHECK(back.editor.config().lambda_content == 5.0);
    CHECK(back.loss_curve == bundle.loss_curve);
    CHECK(back.stats.stddev == bundle.stats.stddev);
    const std::vector<double> z = {0.1, -0.2, 0.05, 0.3};
    CHECK(back.editor.edit(z, {0.3, -0.2, 0.0}) == bundle.editor.edit(z, {0.3, -0.2, 0.0}));
    auto bytes = read_bytes(dir / "editor.ckpt");
    bytes[bytes.size() - 1] ^= 1;
    atomic_write(dir / "editor.ckpt", bytes);
    CHECK_THROWS_AS(load_editor(dir), FormatError);
  }
}
