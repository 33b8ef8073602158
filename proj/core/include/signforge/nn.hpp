#pragma once

#include <memory>
#include <vector>

#include <Eigen/Core>

#include "signforge/image.hpp"
#include "signforge/rng.hpp"

namespace signforge::nn {

/// A batch of activations. Each column is one sample in CHW order.
struct Batch {
  int n = 0, c = 0, h = 0, w = 0;
  Eigen::MatrixXd data;  // (c*h*w) x n

  Batch() = default;
  Batch(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_),
        data(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(c_) * h_ * w_, n_)) {}
  Eigen::Index features() const { return static_cast<Eigen::Index>(c) * h * w; }
};

/// HWC image -> CHW column.
void image_to_column(const Image& img, Eigen::Ref<Eigen::VectorXd> col);
/// CHW column -> HWC image.
Image column_to_image(const Eigen::Ref<const Eigen::VectorXd>& col, int c, int h, int w);
Batch images_to_batch(const std::vector<const Image*>& images);

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Batch forward(const Batch& x) = 0;
  /// Accumulates parameter gradients; returns dL/dx when want_dx.
  virtual Batch backward(const Batch& dy, bool want_dx) = 0;
  virtual void collect(std::vector<Eigen::VectorXd*>& params,
                       std::vector<Eigen::VectorXd*>& grads) {}
  virtual void init(Rng& rng) {}
};

class Conv2d : public Layer {
 public:
  Conv2d(int c_in, int c_out, int kernel, int stride, int pad);
  Batch forward(const Batch& x) override;
  Batch backward(const Batch& dy, bool want_dx) override;
  void collect(std::vector<Eigen::VectorXd*>& p, std::vector<Eigen::VectorXd*>& g) override;
  void init(Rng& rng) override;

 private:
  int c_in_, c_out_, k_, stride_, pad_;
  Eigen::VectorXd w_, b_, dw_, db_;
  Eigen::MatrixXd col_;  // cached im2col of the last forward input
  int in_h_ = 0, in_w_ = 0, out_h_ = 0, out_w_ = 0, n_ = 0;
};

class DepthwiseConv2d : public Layer {
 public:
  DepthwiseConv2d(int channels, int kernel, int stride, int pad);
  Batch forward(const Batch& x) override;
  Batch backward(const Batch& dy, bool want_dx) override;
  void collect(std::vector<Eigen::VectorXd*>& p, std::vector<Eigen::VectorXd*>& g) override;
  void init(Rng& rng) override;

 private:
  int c_, k_, stride_, pad_;
  Eigen::VectorXd w_, b_, dw_, db_;
  Batch x_;
  int out_h_ = 0, out_w_ = 0;
};

class ReLU : public Layer {
 public:
  Batch forward(const Batch& x) override;
  Batch backward(const Batch& dy, bool want_dx) override;

 private:
  Eigen::MatrixXd mask_;
  int c_ = 0, h_ = 0, w_ = 0;
};

class Dense : public Layer {
 public:
  Dense(int in_features, int out_features);
  Batch forward(const Batch& x) override;
  Batch backward(const Batch& dy, bool want_dx) override;
  void collect(std::vector<Eigen::VectorXd*>& p, std::vector<Eigen::VectorXd*>& g) override;
  void init(Rng& rng) override;

 private:
  int in_, out_;
  Eigen::VectorXd w_, b_, dw_, db_;
  Eigen::MatrixXd x_;
  int xc_ = 0, xh_ = 0, xw_ = 0;
};

/// y = relu(x + conv2(relu(conv1(x)))), channel-preserving, stride 1.
class ResidualBlock : public Layer {
 public:
  explicit ResidualBlock(int channels);
  Batch forward(const Batch& x) override;
  Batch backward(const Batch& dy, bool want_dx) override;
  void collect(std::vector<Eigen::VectorXd*>& p, std::vector<Eigen::VectorXd*>& g) override;
  void init(Rng& rng) override;

 private:
  Conv2d conv1_, conv2_;
  ReLU relu1_, relu_out_;
};

class Net {
 public:
  Net() = default;
  Net(const Net&) = delete;
  Net(Net&&) = default;
  Net& operator=(Net&&) = default;

  void add(std::unique_ptr<Layer> layer);
  void init(Rng& rng);

  Batch forward(const Batch& x);
  /// Backward from dL/dlogits; accumulates parameter grads.
  Batch backward(const Batch& dlogits, bool want_input_grad);

  void zero_grads();
  Eigen::VectorXd flat_params() const;
  void set_flat_params(const Eigen::VectorXd& theta);
  Eigen::VectorXd flat_grads() const;
  Eigen::Index param_count() const;

  std::vector<Eigen::VectorXd*> param_refs();
  std::vector<Eigen::VectorXd*> grad_refs();

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Per-sample cross-entropy losses of logits vs 0-based labels, plus the
/// gradient of the summed loss with respect to the logits.
Eigen::VectorXd softmax_cross_entropy(const Eigen::MatrixXd& logits,
                                      const std::vector<int>& labels0,
                                      Eigen::MatrixXd* dlogits_sum = nullptr);

struct SgdMomentum {
  double momentum = 0.9;
  std::vector<Eigen::VectorXd> velocity;
  void step(std::vector<Eigen::VectorXd*> params, std::vector<Eigen::VectorXd*> grads, double lr);
};

struct Adam {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long t = 0;
  std::vector<Eigen::VectorXd> m, v;
  void step(std::vector<Eigen::VectorXd*> params, std::vector<Eigen::VectorXd*> grads, double lr);
};

}  // namespace signforge::nn
