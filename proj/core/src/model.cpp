#include "signforge/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "signforge/errors.hpp"
#include "signforge/rng.hpp"

using nlohmann::json;

namespace signforge {

std::string to_string(Architecture a) {
  switch (a) {
    case Architecture::small_conv: return "small_conv";
    case Architecture::resnet_like: return "resnet_like";
    case Architecture::mobilenet_like: return "mobilenet_like";
  }
  return "?";
}

Architecture architecture_from_string(const std::string& s) {
  if (s == "small_conv") return Architecture::small_conv;
  if (s == "resnet_like") return Architecture::resnet_like;
  if (s == "mobilenet_like") return Architecture::mobilenet_like;
  throw ConfigError("unknown architecture: " + s);
}

void TrainConfig::validate() const {
  if (phase1_epochs < 0 || phase2_epochs < 0 || batch_size < 1)
    throw ConfigError("train config: counts must be positive");
  if (phase1_lr <= 0 || phase2_peak_lr <= 0) throw ConfigError("train config: lr must be positive");
  if (patch_coverage <= 0.0 || patch_coverage >= 0.5)
    throw ConfigError("train config: patch_coverage must lie in (0, 0.5)");
}

json TrainConfig::to_json() const {
  return json{{"phase1_epochs", phase1_epochs},
              {"phase1_lr", phase1_lr},
              {"phase1_decay", phase1_decay},
              {"phase1_decay_every", phase1_decay_every},
              {"momentum", momentum},
              {"phase2_epochs", phase2_epochs},
              {"phase2_peak_lr", phase2_peak_lr},
              {"phase2_floor_lr", phase2_floor_lr},
              {"batch_size", batch_size},
              {"patch_coverage", patch_coverage},
              {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  c.phase1_epochs = j.value("phase1_epochs", c.phase1_epochs);
  c.phase1_lr = j.value("phase1_lr", c.phase1_lr);
  c.phase1_decay = j.value("phase1_decay", c.phase1_decay);
  c.phase1_decay_every = j.value("phase1_decay_every", c.phase1_decay_every);
  c.momentum = j.value("momentum", c.momentum);
  c.phase2_epochs = j.value("phase2_epochs", c.phase2_epochs);
  c.phase2_peak_lr = j.value("phase2_peak_lr", c.phase2_peak_lr);
  c.phase2_floor_lr = j.value("phase2_floor_lr", c.phase2_floor_lr);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.patch_coverage = j.value("patch_coverage", c.patch_coverage);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

double phase1_learning_rate(const TrainConfig& cfg, int epoch) {
  const int decays = cfg.phase1_decay_every > 0 ? epoch / cfg.phase1_decay_every : 0;
  return cfg.phase1_lr * std::pow(cfg.phase1_decay, decays);
}

double cyclic_learning_rate(double floor_lr, double peak_lr, long step, long total_steps) {
  if (total_steps <= 1) return peak_lr;
  if (step >= total_steps) return floor_lr;  // past the single cycle
  const double pos = static_cast<double>(step) / (total_steps - 1);
  const double tri = 1.0 - std::abs(2.0 * pos - 1.0);
  return floor_lr + (peak_lr - floor_lr) * tri;
}

namespace {

nn::Net build_net(Architecture arch, int n_classes, int image_size) {
  nn::Net net;
  auto conv_out = [](int s) { return (s + 2 - 3) / 2 + 1; };
  switch (arch) {
    case Architecture::small_conv: {
      const int s1 = conv_out(image_size), s2 = conv_out(s1), s3 = conv_out(s2);
      net.add(std::make_unique<nn::Conv2d>(3, 32, 3, 2, 1));
      net.add(std::make_unique<nn::ReLU>());
      net.add(std::make_unique<nn::Conv2d>(32, 64, 3, 2, 1));
      net.add(std::make_unique<nn::ReLU>());
      net.add(std::make_unique<nn::Conv2d>(64, 128, 3, 2, 1));
      net.add(std::make_unique<nn::ReLU>());
      net.add(std::make_unique<nn::Dense>(128 * s3 * s3, 128));
      net.add(std::make_unique<nn::ReLU>());
      net.add(std::make_unique<nn::Dense>(128, n_classes));
      break;
    }
    case Architecture::resnet_like: {
      const int s1 = conv_out(image_size), s2 = conv_out(s1), s3 = conv_out(s2);
      net.add(std::make_unique<nn::Conv2d>(3, 16, 3, 2, 1));
      net.add(std::make_unique<nn::ReLU>());
      net.add(std::make_unique<nn::ResidualBlock>(16));
      net.add(std::make_unique<nn::Conv2d>(16, 32, 3, 2, 1));
      net.add(std::make_unique<nn::ReLU>());
      net.add(std::make_unique<nn::ResidualBlock>(32));
      net.add(std::make_unique<nn::Conv2d>(32, 64, 3, 2, 1));
      net.add(std::make_unique<nn::ReLU>());
      net.add(std::make_unique<nn::Dense>(64 * s3 * s3, 64));
      net.add(std::make_unique<nn::ReLU>());
      net.add(std::make_unique<nn::Dense>(64, n_classes));
      break;
    }
    case Architecture::mobilenet_like: {
      const int s1 = conv_out(image_size), s2 = conv_out(s1), s3 = conv_out(s2);
      net.add(std::make_unique<nn::Conv2d>(3, 16, 3, 2, 1));
      net.add(std::make_unique<nn::ReLU>());
      net.add(std::make_unique<nn::DepthwiseConv2d>(16, 3, 1, 1));
      net.add(std::make_unique<nn::Conv2d>(16, 32, 1, 1, 0));
      net.add(std::make_unique<nn::ReLU>());
      net.add(std::make_unique<nn::DepthwiseConv2d>(32, 3, 2, 1));
      net.add(std::make_unique<nn::Conv2d>(32, 64, 1, 1, 0));
      net.add(std::make_unique<nn::ReLU>());
      net.add(std::make_unique<nn::DepthwiseConv2d>(64, 3, 2, 1));
      net.add(std::make_unique<nn::Conv2d>(64, 128, 1, 1, 0));
      net.add(std::make_unique<nn::ReLU>());
      net.add(std::make_unique<nn::Dense>(128 * s3 * s3, 128));
      net.add(std::make_unique<nn::ReLU>());
      net.add(std::make_unique<nn::Dense>(128, n_classes));
      break;
    }
  }
  return net;
}

constexpr int kChunk = 128;  // inference chunk size

std::vector<int> to_labels0(const std::vector<int>& labels1, int n_classes) {
  std::vector<int> out(labels1.size());
  for (size_t i = 0; i < labels1.size(); ++i) {
    if (labels1[i] < 1 || labels1[i] > n_classes)
      throw ConfigError("label out of range: " + std::to_string(labels1[i]));
    out[i] = labels1[i] - 1;
  }
  return out;
}

void shuffle_indices(std::vector<int>& idx, Rng& rng) {
  for (size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[rng.uniform_int(i)]);
}

}  // namespace

Classifier::Classifier(Architecture arch, int n_classes, int image_size, std::uint64_t init_seed)
    : arch_(arch), n_classes_(n_classes), image_size_(image_size),
      net_(build_net(arch, n_classes, image_size)) {
  Rng rng(derive_seed(init_seed, {0x494e4954ULL}));
  net_.init(rng);
}

Eigen::MatrixXd Classifier::logits(const std::vector<const Image*>& images) {
  Eigen::MatrixXd out(n_classes_, static_cast<Eigen::Index>(images.size()));
  for (size_t off = 0; off < images.size(); off += kChunk) {
    const size_t end = std::min(images.size(), off + kChunk);
    std::vector<const Image*> chunk(images.begin() + off, images.begin() + end);
    const nn::Batch logits_b = net_.forward(nn::images_to_batch(chunk));
    out.middleCols(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(end - off)) =
        logits_b.data;
  }
  return out;
}

std::vector<int> Classifier::predict(const std::vector<const Image*>& images) {
  const Eigen::MatrixXd z = logits(images);
  std::vector<int> out(images.size());
  for (Eigen::Index s = 0; s < z.cols(); ++s) {
    Eigen::Index argmax;
    z.col(s).maxCoeff(&argmax);
    out[s] = static_cast<int>(argmax) + 1;
  }
  return out;
}

Eigen::VectorXd Classifier::losses(const std::vector<const Image*>& images,
                                   const std::vector<int>& labels) {
  const Eigen::MatrixXd z = logits(images);
  return nn::softmax_cross_entropy(z, to_labels0(labels, n_classes_));
}

double Classifier::mean_loss(const std::vector<const Image*>& images,
                             const std::vector<int>& labels) {
  return losses(images, labels).mean();
}

std::vector<Image> Classifier::input_gradients(const std::vector<const Image*>& images,
                                               const std::vector<int>& labels,
                                               Eigen::VectorXd* losses_out) {
  const std::vector<int> labels0 = to_labels0(labels, n_classes_);
  std::vector<Image> grads;
  grads.reserve(images.size());
  if (losses_out) losses_out->resize(static_cast<Eigen::Index>(images.size()));
  for (size_t off = 0; off < images.size(); off += kChunk) {
    const size_t end = std::min(images.size(), off + kChunk);
    std::vector<const Image*> chunk(images.begin() + off, images.begin() + end);
    std::vector<int> lbl(labels0.begin() + off, labels0.begin() + end);
    const nn::Batch x = nn::images_to_batch(chunk);
    const nn::Batch z = net_.forward(x);
    Eigen::MatrixXd dlogits;
    const Eigen::VectorXd chunk_losses = nn::softmax_cross_entropy(z.data, lbl, &dlogits);
    if (losses_out)
      losses_out->segment(static_cast<Eigen::Index>(off),
                          static_cast<Eigen::Index>(end - off)) = chunk_losses;
    nn::Batch dz(z.n, z.c, z.h, z.w);
    dz.data = dlogits;
    net_.zero_grads();  // param grads are a side effect we discard here
    const nn::Batch dx = net_.backward(dz, true);
    for (Eigen::Index s = 0; s < dx.data.cols(); ++s)
      grads.push_back(nn::column_to_image(dx.data.col(s), x.c, x.h, x.w));
  }
  return grads;
}

namespace {

struct BatchView {
  std::vector<const Image*> images;
  std::vector<int> labels;
};

BatchView gather(const LabeledImages& data, const std::vector<int>& order, size_t begin,
                 size_t end) {
  BatchView bv;
  for (size_t i = begin; i < end; ++i) {
    bv.images.push_back(&data.images[order[i]]);
    bv.labels.push_back(data.labels[order[i]]);
  }
  return bv;
}

/// One optimizer step on a (possibly adversarial) batch. Returns (loss, acc).
std::pair<double, double> train_step(Classifier& model,
                                     const std::vector<const Image*>& images,
                                     const std::vector<int>& labels1, double lr,
                                     nn::SgdMomentum* sgd, nn::Adam* adam) {
  nn::Net& net = model.net();
  std::vector<int> labels0(labels1.size());
  for (size_t i = 0; i < labels1.size(); ++i) labels0[i] = labels1[i] - 1;

  const nn::Batch x = nn::images_to_batch(images);
  const nn::Batch z = net.forward(x);
  Eigen::MatrixXd dlogits;
  const Eigen::VectorXd losses = nn::softmax_cross_entropy(z.data, labels0, &dlogits);

  int correct = 0;
  for (Eigen::Index s = 0; s < z.data.cols(); ++s) {
    Eigen::Index argmax;
    z.data.col(s).maxCoeff(&argmax);
    correct += (argmax == labels0[s]);
  }

  nn::Batch dz(z.n, z.c, z.h, z.w);
  dz.data = dlogits / static_cast<double>(x.n);  // mean loss
  net.zero_grads();
  net.backward(dz, false);
  if (sgd)
    sgd->step(net.param_refs(), net.grad_refs(), lr);
  else
    adam->step(net.param_refs(), net.grad_refs(), lr);
  return {losses.mean(), static_cast<double>(correct) / static_cast<double>(x.n)};
}

}  // namespace

json TrainLog::to_json() const {
  json arr = json::array();
  for (const auto& e : epochs)
    arr.push_back(
        json{{"epoch", e.epoch}, {"lr", e.lr}, {"loss", e.mean_loss}, {"accuracy", e.accuracy}});
  return arr;
}

TrainLog train_standard(Classifier& model, const LabeledImages& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.images.empty()) throw ConfigError("train_standard: empty dataset");
  to_labels0(data.labels, model.n_classes());

  Rng shuffle_rng(derive_seed(cfg.seed, {0x5348ULL}));
  nn::SgdMomentum sgd;
  sgd.momentum = cfg.momentum;

  std::vector<int> order(data.images.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  TrainLog log;
  for (int epoch = 0; epoch < cfg.phase1_epochs; ++epoch) {
    const double lr = phase1_learning_rate(cfg, epoch);
    shuffle_indices(order, shuffle_rng);
    double loss_sum = 0.0, acc_sum = 0.0;
    int batches = 0;
    for (size_t off = 0; off < order.size(); off += cfg.batch_size) {
      const size_t end = std::min(order.size(), off + cfg.batch_size);
      const BatchView bv = gather(data, order, off, end);
      const auto [loss, acc] = train_step(model, bv.images, bv.labels, lr, &sgd, nullptr);
      loss_sum += loss;
      acc_sum += acc;
      ++batches;
    }
    log.epochs.push_back({epoch, lr, loss_sum / batches, acc_sum / batches});
  }
  return log;
}

TrainLog train_doa(Classifier& model, const LabeledImages& data, const TrainConfig& cfg,
                   const InnerAttack& inner_attack) {
  cfg.validate();
  if (data.images.empty()) throw ConfigError("train_doa: empty dataset");
  to_labels0(data.labels, model.n_classes());

  Rng shuffle_rng(derive_seed(cfg.seed, {0x414456ULL}));
  nn::Adam adam;

  std::vector<int> order(data.images.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  const long batches_per_epoch =
      static_cast<long>((order.size() + cfg.batch_size - 1) / cfg.batch_size);
  const long total_steps = batches_per_epoch * cfg.phase2_epochs;

  TrainLog log;
  long step = 0;
  for (int epoch = 0; epoch < cfg.phase2_epochs; ++epoch) {
    shuffle_indices(order, shuffle_rng);
    double loss_sum = 0.0, acc_sum = 0.0;
    int batches = 0;
    for (size_t off = 0; off < order.size(); off += cfg.batch_size) {
      const size_t end = std::min(order.size(), off + cfg.batch_size);
      const BatchView bv = gather(data, order, off, end);
      std::vector<Image> adv;
      adv.reserve(bv.images.size());
      for (const Image* im : bv.images) adv.push_back(*im);
      inner_attack(model, adv, bv.labels, derive_seed(cfg.seed, {0x41545441ULL,
                                                                 static_cast<std::uint64_t>(step)}));
      std::vector<const Image*> adv_ptrs;
      for (const Image& im : adv) adv_ptrs.push_back(&im);
      const double lr =
          cyclic_learning_rate(cfg.phase2_floor_lr, cfg.phase2_peak_lr, step, total_steps);
      const auto [loss, acc] = train_step(model, adv_ptrs, bv.labels, lr, nullptr, &adam);
      loss_sum += loss;
      acc_sum += acc;
      ++batches;
      ++step;
    }
    log.epochs.push_back({epoch, cyclic_learning_rate(cfg.phase2_floor_lr, cfg.phase2_peak_lr,
                                                      step - 1, total_steps),
                          loss_sum / batches, acc_sum / batches});
  }
  return log;
}

int train_fraction(Classifier& model, const LabeledImages& data, double fraction,
                   const TrainConfig& cfg, const InnerAttack& inner_attack, TrainerState& state) {
  if (fraction <= 0.0 || fraction > 1.0)
    throw ConfigError("train_fraction: fraction must lie in (0,1]");
  if (data.images.empty()) throw ConfigError("train_fraction: empty dataset");

  const long batches_per_epoch =
      static_cast<long>((data.images.size() + cfg.batch_size - 1) / cfg.batch_size);
  if (state.cycle_steps == 0) state.cycle_steps = batches_per_epoch * cfg.phase2_epochs;
  if (state.order.empty()) {
    state.order.resize(data.images.size());
    for (size_t i = 0; i < state.order.size(); ++i) state.order[i] = static_cast<int>(i);
    state.shuffle_seed = derive_seed(cfg.seed, {0x465241ULL});
    Rng rng(derive_seed(state.shuffle_seed, {static_cast<std::uint64_t>(state.epoch_index)}));
    shuffle_indices(state.order, rng);
  }

  const int n_batches = static_cast<int>(std::ceil(fraction * static_cast<double>(batches_per_epoch)));
  for (int b = 0; b < n_batches; ++b) {
    if (state.cursor >= state.order.size()) {
      state.cursor = 0;
      ++state.epoch_index;
      Rng rng(derive_seed(state.shuffle_seed, {static_cast<std::uint64_t>(state.epoch_index)}));
      shuffle_indices(state.order, rng);
    }
    const size_t end = std::min(state.order.size(), state.cursor + cfg.batch_size);
    const BatchView bv = gather(data, state.order, state.cursor, end);
    std::vector<Image> adv;
    for (const Image* im : bv.images) adv.push_back(*im);
    inner_attack(model, adv, bv.labels,
                 derive_seed(cfg.seed, {0x46524154ULL, static_cast<std::uint64_t>(state.step)}));
    std::vector<const Image*> adv_ptrs;
    for (const Image& im : adv) adv_ptrs.push_back(&im);
    const double lr = cyclic_learning_rate(cfg.phase2_floor_lr, cfg.phase2_peak_lr, state.step,
                                           state.cycle_steps);
    train_step(model, adv_ptrs, bv.labels, lr, nullptr, &state.adam);
    state.cursor = end;
    ++state.step;
  }
  return n_batches;
}

double evaluate_benign(Classifier& model, const LabeledImages& data) {
  if (data.images.empty()) throw ConfigError("evaluate_benign: empty split");
  std::vector<const Image*> ptrs;
  for (const auto& im : data.images) ptrs.push_back(&im);
  const std::vector<int> pred = model.predict(ptrs);
  int correct = 0;
  for (size_t i = 0; i < pred.size(); ++i) correct += (pred[i] == data.labels[i]);
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

// ------------------------------------------------------------- checkpoint

void save_checkpoint(const Classifier& model, const std::string& path, const json& metadata) {
  json header = metadata;
  header["architecture"] = to_string(model.architecture());
  header["n_classes"] = model.n_classes();
  header["image_size"] = model.image_size();
  const Eigen::VectorXd theta = const_cast<Classifier&>(model).net().flat_params();
  header["param_count"] = theta.size();
  const std::string hdr = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  const char magic[8] = {'S', 'F', 'C', 'K', '0', '1', '\n', '\0'};
  out.write(magic, 8);
  const std::uint64_t hdr_len = hdr.size();
  out.write(reinterpret_cast<const char*>(&hdr_len), sizeof(hdr_len));
  out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
  out.write(reinterpret_cast<const char*>(theta.data()),
            static_cast<std::streamsize>(theta.size() * sizeof(double)));
  if (!out) throw IoError("checkpoint write failed: " + path);
}

Classifier load_checkpoint(const std::string& path, json* metadata) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::strncmp(magic, "SFCK01", 6) != 0)
    throw IoError("not a checkpoint file: " + path);
  std::uint64_t hdr_len = 0;
  in.read(reinterpret_cast<char*>(&hdr_len), sizeof(hdr_len));
  std::string hdr(hdr_len, '\0');
  in.read(hdr.data(), static_cast<std::streamsize>(hdr_len));
  json header;
  try {
    header = json::parse(hdr);
  } catch (const json::exception& e) {
    throw IoError("corrupt checkpoint header: " + path);
  }

  Classifier model(architecture_from_string(header.at("architecture").get<std::string>()),
                   header.at("n_classes").get<int>(), header.at("image_size").get<int>(), 0);
  Eigen::VectorXd theta(header.at("param_count").get<Eigen::Index>());
  in.read(reinterpret_cast<char*>(theta.data()),
          static_cast<std::streamsize>(theta.size() * sizeof(double)));
  if (!in) throw IoError("truncated checkpoint: " + path);
  model.net().set_flat_params(theta);
  if (metadata) *metadata = header;
  return model;
}

}  // namespace signforge
