#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <memory>

#include <nlohmann/json.hpp>

#include "signforge/errors.hpp"
#include "signforge/model.hpp"
#include "signforge/nn.hpp"
#include "signforge/rng.hpp"

using namespace signforge;
namespace fs = std::filesystem;

namespace {

LabeledImages tiny_dataset(int n, int size, int n_classes, std::uint64_t seed) {
  LabeledImages data;
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    Image img(size, size, 3);
    const int label = 1 + static_cast<int>(rng.uniform_int(n_classes));
    for (int k = 0; k < img.size(); ++k) img.data[k] = rng.uniform();
    // plant a label-dependent blob so the task is learnable
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) img.at(y, x, 0) = label / static_cast<double>(n_classes);
    data.images.push_back(std::move(img));
    data.labels.push_back(label);
  }
  return data;
}

/// Central-difference check of dL/dtheta for a tiny net.
void check_net_gradients(nn::Net& net, int c, int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  net.init(rng);
  nn::Batch x(2, c, h, w);
  for (Eigen::Index i = 0; i < x.data.size(); ++i)
    x.data.data()[i] = rng.uniform(-1.0, 1.0);
  const std::vector<int> labels0 = {0, 1};

  net.zero_grads();
  nn::Batch out = net.forward(x);
  Eigen::MatrixXd dlogits;
  nn::softmax_cross_entropy(out.data, labels0, &dlogits);
  nn::Batch dy = out;
  dy.data = dlogits;
  net.backward(dy, false);
  const Eigen::VectorXd analytic = net.flat_grads();
  const Eigen::VectorXd theta = net.flat_params();

  Rng pick(seed + 1);
  for (int trial = 0; trial < 12; ++trial) {
    const Eigen::Index j =
        static_cast<Eigen::Index>(pick.uniform_int(static_cast<std::uint64_t>(theta.size())));
    const double eps = 1e-5;
    Eigen::VectorXd tp = theta, tm = theta;
    tp[j] += eps;
    tm[j] -= eps;
    net.set_flat_params(tp);
    const double lp = nn::softmax_cross_entropy(net.forward(x).data, labels0).sum();
    net.set_flat_params(tm);
    const double lm = nn::softmax_cross_entropy(net.forward(x).data, labels0).sum();
    const double fd = (lp - lm) / (2 * eps);
    CHECK(std::abs(fd - analytic[j]) < 1e-4 * std::max(1.0, std::abs(fd)));
  }
  net.set_flat_params(theta);
}

}  // namespace

TEST_CASE("conv + dense gradients match finite differences") {
  nn::Net net;
  net.add(std::make_unique<nn::Conv2d>(3, 4, 3, 2, 1));
  net.add(std::make_unique<nn::ReLU>());
  net.add(std::make_unique<nn::Dense>(4 * 4 * 4, 3));
  check_net_gradients(net, 3, 8, 8, 101);
}

TEST_CASE("depthwise conv and residual block gradients match finite differences") {
  nn::Net net;
  net.add(std::make_unique<nn::Conv2d>(3, 4, 3, 1, 1));
  net.add(std::make_unique<nn::DepthwiseConv2d>(4, 3, 1, 1));
  net.add(std::make_unique<nn::ResidualBlock>(4));
  net.add(std::make_unique<nn::Dense>(4 * 6 * 6, 3));
  check_net_gradients(net, 3, 6, 6, 202);
}

TEST_CASE("softmax cross-entropy matches the closed form") {
  Eigen::MatrixXd logits(3, 1);
  logits << 1.0, 2.0, 0.5;
  const Eigen::VectorXd loss = nn::softmax_cross_entropy(logits, {1});
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(0.5);
  CHECK(loss[0] == doctest::Approx(-std::log(std::exp(2.0) / z)).epsilon(1e-12));
}

TEST_CASE("all architectures stay under one million parameters") {
  for (auto arch :
       {Architecture::small_conv, Architecture::resnet_like, Architecture::mobilenet_like}) {
    Classifier model(arch, 7, 48, 1);
    CHECK(model.net().param_count() <= 1000000);
    CHECK(model.net().param_count() > 0);
  }
}

TEST_CASE("optimizer updates match their closed forms") {
  Eigen::VectorXd p(2), g(2);
  p << 1.0, -2.0;
  g << 0.5, -1.0;

  SUBCASE("sgd with momentum") {
    nn::SgdMomentum opt;
    Eigen::VectorXd p1 = p, g1 = g;
    opt.step({&p1}, {&g1}, 0.1);
    // v = g; p -= lr*v
    CHECK(p1[0] == doctest::Approx(1.0 - 0.1 * 0.5).epsilon(1e-12));
    Eigen::VectorXd g2(2);
    g2 << 0.2, 0.0;
    opt.step({&p1}, {&g2}, 0.1);
    // v' = 0.9*v + g2
    CHECK(p1[0] == doctest::Approx(1.0 - 0.1 * 0.5 - 0.1 * (0.9 * 0.5 + 0.2)).epsilon(1e-12));
  }

  SUBCASE("adam first step") {
    nn::Adam opt;
    Eigen::VectorXd p1 = p, g1 = g;
    opt.step({&p1}, {&g1}, 0.01);
    // bias-corrected first step reduces to p - lr * g/(|g| + eps')
    for (int i = 0; i < 2; ++i) {
      const double m_hat = g[i];
      const double v_hat = g[i] * g[i];
      const double expect = p[i] - 0.01 * m_hat / (std::sqrt(v_hat) + 1e-8);
      CHECK(p1[i] == doctest::Approx(expect).epsilon(1e-9));
    }
  }
}

TEST_CASE("phase-1 learning rate decays stepwise") {
  TrainConfig cfg;
  CHECK(phase1_learning_rate(cfg, 0) == doctest::Approx(0.03));
  CHECK(phase1_learning_rate(cfg, 14) == doctest::Approx(0.03));
  CHECK(phase1_learning_rate(cfg, 15) == doctest::Approx(0.003));
  CHECK(phase1_learning_rate(cfg, 29) == doctest::Approx(0.003));
}

TEST_CASE("cyclic learning rate is one triangle: floor, peak, floor") {
  const double fl = 2.5e-6, pk = 0.01;
  CHECK(cyclic_learning_rate(fl, pk, 0, 101) == doctest::Approx(fl));
  CHECK(cyclic_learning_rate(fl, pk, 50, 101) == doctest::Approx(pk));
  CHECK(cyclic_learning_rate(fl, pk, 100, 101) == doctest::Approx(fl));
  CHECK(cyclic_learning_rate(fl, pk, 500, 101) == doctest::Approx(fl));  // past the cycle
  CHECK(cyclic_learning_rate(fl, pk, 25, 101) > fl);
  CHECK(cyclic_learning_rate(fl, pk, 25, 101) < pk);
}

TEST_CASE("input gradients match finite differences") {
  Classifier model(Architecture::small_conv, 3, 16, 5);
  const LabeledImages data = tiny_dataset(2, 16, 3, 6);
  std::vector<const Image*> ptrs = {&data.images[0], &data.images[1]};
  const std::vector<Image> grads = model.input_gradients(ptrs, data.labels);
  REQUIRE(grads.size() == 2);

  Rng pick(7);
  for (int trial = 0; trial < 8; ++trial) {
    const int s = trial % 2;
    const int k =
        static_cast<int>(pick.uniform_int(static_cast<std::uint64_t>(data.images[0].size())));
    const double eps = 1e-5;
    Image plus = data.images[static_cast<size_t>(s)];
    Image minus = plus;
    plus.data[k] += eps;
    minus.data[k] -= eps;
    std::vector<const Image*> pp = {&plus}, pm = {&minus};
    const std::vector<int> lbl = {data.labels[static_cast<size_t>(s)]};
    const double lp = model.losses(pp, lbl)[0];
    const double lm = model.losses(pm, lbl)[0];
    const double fd = (lp - lm) / (2 * eps);
    CHECK(std::abs(fd - grads[static_cast<size_t>(s)].data[k]) <
          1e-4 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("training reduces loss and is deterministic") {
  const LabeledImages data = tiny_dataset(48, 16, 3, 8);
  TrainConfig cfg;
  cfg.phase1_epochs = 8;
  cfg.batch_size = 16;
  cfg.seed = 3;

  Classifier a(Architecture::small_conv, 3, 16, 9);
  const TrainLog log_a = train_standard(a, data, cfg);
  REQUIRE(log_a.epochs.size() == 8);
  CHECK(log_a.epochs.back().mean_loss < log_a.epochs.front().mean_loss);

  Classifier b(Architecture::small_conv, 3, 16, 9);
  train_standard(b, data, cfg);
  CHECK((a.net().flat_params() - b.net().flat_params()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("train_fraction runs ceil(fraction * batches) consecutive batches with state") {
  const LabeledImages data = tiny_dataset(50, 16, 3, 12);  // 4 batches of 16
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.phase2_epochs = 2;
  cfg.seed = 5;
  Classifier model(Architecture::small_conv, 3, 16, 10);
  const InnerAttack identity = [](Classifier&, std::vector<Image>&, const std::vector<int>&,
                                  std::uint64_t) {};

  TrainerState state;
  CHECK(train_fraction(model, data, 0.25, cfg, identity, state) == 1);
  CHECK(state.step == 1);
  CHECK(state.cursor == 16);
  CHECK(train_fraction(model, data, 0.5, cfg, identity, state) == 2);
  CHECK(state.step == 3);
  CHECK(state.cursor == 48);
  CHECK(train_fraction(model, data, 0.5, cfg, identity, state) == 2);
  CHECK(state.step == 5);
  CHECK(state.epoch_index == 1);  // wrapped into a reshuffled epoch
  CHECK(state.cursor == 16);
  CHECK_THROWS_AS(train_fraction(model, data, 0.0, cfg, identity, state), ConfigError);
}

TEST_CASE("checkpoint round-trip preserves parameters exactly") {
  Classifier model(Architecture::small_conv, 3, 16, 11);
  const fs::path dir = fs::temp_directory_path() / "signforge_tests";
  fs::create_directories(dir);
  const std::string path = (dir / "model.ckpt").string();
  save_checkpoint(model, path, nlohmann::json{{"note", "test"}});
  nlohmann::json meta;
  Classifier back = load_checkpoint(path, &meta);
  CHECK(meta.at("note") == "test");
  CHECK(back.architecture() == model.architecture());
  CHECK(back.n_classes() == 3);
  CHECK((back.net().flat_params() - model.net().flat_params()).cwiseAbs().maxCoeff() == 0.0);
}
