#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "signforge/image.hpp"
#include "signforge/nn.hpp"

namespace signforge {

enum class Architecture { small_conv, resnet_like, mobilenet_like };
std::string to_string(Architecture a);
Architecture architecture_from_string(const std::string& s);

/// Images plus 1-based class labels.
struct LabeledImages {
  std::vector<Image> images;
  std::vector<int> labels;

  size_t size() const { return images.size(); }
};

struct TrainConfig {
  int phase1_epochs = 30;
  double phase1_lr = 0.03;
  double phase1_decay = 0.1;
  int phase1_decay_every = 15;
  double momentum = 0.9;
  int phase2_epochs = 100;
  double phase2_peak_lr = 0.01;
  double phase2_floor_lr = 2.5e-6;
  int batch_size = 64;
  double patch_coverage = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

/// Phase-1 step schedule: lr decays by phase1_decay every phase1_decay_every epochs.
double phase1_learning_rate(const TrainConfig& cfg, int epoch);

/// One triangular cycle across `total_steps`: floor -> peak -> floor.
double cyclic_learning_rate(double floor_lr, double peak_lr, long step, long total_steps);

class Classifier {
 public:
  Classifier(Architecture arch, int n_classes, int image_size, std::uint64_t init_seed);

  Architecture architecture() const { return arch_; }
  int n_classes() const { return n_classes_; }
  int image_size() const { return image_size_; }

  /// Raw logits, one column per image.
  Eigen::MatrixXd logits(const std::vector<const Image*>& images);
  /// Predicted 1-based labels.
  std::vector<int> predict(const std::vector<const Image*>& images);
  /// Per-sample cross-entropy losses (labels 1-based).
  Eigen::VectorXd losses(const std::vector<const Image*>& images, const std::vector<int>& labels);
  double mean_loss(const std::vector<const Image*>& images, const std::vector<int>& labels);
  /// Per-sample gradient of its own loss with respect to its input pixels.
  /// When `losses_out` is given it receives the per-sample losses of the
  /// same forward pass.
  std::vector<Image> input_gradients(const std::vector<const Image*>& images,
                                     const std::vector<int>& labels,
                                     Eigen::VectorXd* losses_out = nullptr);

  nn::Net& net() { return net_; }

 private:
  Architecture arch_;
  int n_classes_;
  int image_size_;
  nn::Net net_;
};

/// Per-batch adversarial example generator used inside adversarial training.
/// Mutates the batch images in place against the current model state.
using InnerAttack = std::function<void(Classifier&, std::vector<Image>&, const std::vector<int>&,
                                       std::uint64_t seed)>;

struct EpochMetrics {
  int epoch = 0;
  double lr = 0.0;
  double mean_loss = 0.0;
  double accuracy = 0.0;
};

struct TrainLog {
  std::vector<EpochMetrics> epochs;
  nlohmann::json to_json() const;
};

/// Phase 1: momentum-SGD with the step-decay schedule.
TrainLog train_standard(Classifier& model, const LabeledImages& data, const TrainConfig& cfg);

/// Phase 2: every batch is replaced by adversarial examples from
/// `inner_attack`; Adam with the triangular cyclic schedule.
TrainLog train_doa(Classifier& model, const LabeledImages& data, const TrainConfig& cfg,
                   const InnerAttack& inner_attack);

/// Optimizer and batch-order state persisting across train_fraction calls.
struct TrainerState {
  nn::Adam adam;
  std::vector<int> order;
  size_t cursor = 0;
  long step = 0;
  long cycle_steps = 0;
  std::uint64_t shuffle_seed = 0;
  long epoch_index = 0;
};

/// Trains on ceil(fraction * num_batches) consecutive batches, adversarially,
/// resuming optimizer state across calls. Returns the number of batches run.
int train_fraction(Classifier& model, const LabeledImages& data, double fraction,
                   const TrainConfig& cfg, const InnerAttack& inner_attack, TrainerState& state);

/// Fraction of samples whose argmax logit equals the label.
double evaluate_benign(Classifier& model, const LabeledImages& data);

/// Checkpoint container: JSON header (metadata) + raw parameter blob.
void save_checkpoint(const Classifier& model, const std::string& path,
                     const nlohmann::json& metadata);
Classifier load_checkpoint(const std::string& path, nlohmann::json* metadata = nullptr);

}  // namespace signforge
