#include "signforge/nn.hpp"

#include <cmath>

#include "signforge/errors.hpp"

namespace signforge::nn {

void image_to_column(const Image& img, Eigen::Ref<Eigen::VectorXd> col) {
  const Eigen::Index plane = static_cast<Eigen::Index>(img.h) * img.w;
  for (int ch = 0; ch < img.c; ++ch)
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x)
        col[ch * plane + y * img.w + x] = img.at(y, x, ch);
}

Image column_to_image(const Eigen::Ref<const Eigen::VectorXd>& col, int c, int h, int w) {
  Image img(h, w, c);
  const Eigen::Index plane = static_cast<Eigen::Index>(h) * w;
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) img.at(y, x, ch) = col[ch * plane + y * w + x];
  return img;
}

Batch images_to_batch(const std::vector<const Image*>& images) {
  if (images.empty()) throw Error("images_to_batch: empty batch");
  const Image& first = *images[0];
  Batch b(static_cast<int>(images.size()), first.c, first.h, first.w);
  for (size_t i = 0; i < images.size(); ++i)
    image_to_column(*images[i], b.data.col(static_cast<Eigen::Index>(i)));
  return b;
}

// ---------------------------------------------------------------- Conv2d

Conv2d::Conv2d(int c_in, int c_out, int kernel, int stride, int pad)
    : c_in_(c_in), c_out_(c_out), k_(kernel), stride_(stride), pad_(pad) {
  w_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c_out) * c_in * kernel * kernel);
  b_ = Eigen::VectorXd::Zero(c_out);
  dw_ = Eigen::VectorXd::Zero(w_.size());
  db_ = Eigen::VectorXd::Zero(c_out);
}

void Conv2d::init(Rng& rng) {
  const double stddev = std::sqrt(2.0 / (c_in_ * k_ * k_));
  for (Eigen::Index i = 0; i < w_.size(); ++i) w_[i] = rng.normal(0.0, stddev);
  b_.setZero();
}

void Conv2d::collect(std::vector<Eigen::VectorXd*>& p, std::vector<Eigen::VectorXd*>& g) {
  p.push_back(&w_);
  p.push_back(&b_);
  g.push_back(&dw_);
  g.push_back(&db_);
}

Batch Conv2d::forward(const Batch& x) {
  in_h_ = x.h;
  in_w_ = x.w;
  n_ = x.n;
  out_h_ = (x.h + 2 * pad_ - k_) / stride_ + 1;
  out_w_ = (x.w + 2 * pad_ - k_) / stride_ + 1;
  const Eigen::Index rows = static_cast<Eigen::Index>(c_in_) * k_ * k_;
  const Eigen::Index ohw = static_cast<Eigen::Index>(out_h_) * out_w_;
  col_.setZero(rows, ohw * x.n);

  const Eigen::Index in_plane = static_cast<Eigen::Index>(x.h) * x.w;
  for (int s = 0; s < x.n; ++s) {
    const auto xin = x.data.col(s);
    for (int oy = 0; oy < out_h_; ++oy)
      for (int ox = 0; ox < out_w_; ++ox) {
        const Eigen::Index ccol = s * ohw + oy * out_w_ + ox;
        for (int ci = 0; ci < c_in_; ++ci)
          for (int ky = 0; ky < k_; ++ky) {
            const int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= x.h) continue;
            for (int kx = 0; kx < k_; ++kx) {
              const int ix = ox * stride_ - pad_ + kx;
              if (ix < 0 || ix >= x.w) continue;
              col_((ci * k_ + ky) * k_ + kx, ccol) = xin[ci * in_plane + iy * x.w + ix];
            }
          }
      }
  }

  Eigen::Map<const Eigen::MatrixXd> wmat(w_.data(), rows, c_out_);  // column-major: (rows x c_out)
  Eigen::MatrixXd out_mat = wmat.transpose() * col_;                // c_out x (ohw*n)
  out_mat.colwise() += b_;

  Batch out(x.n, c_out_, out_h_, out_w_);
  for (int s = 0; s < x.n; ++s)
    for (int co = 0; co < c_out_; ++co)
      out.data.col(s).segment(co * ohw, ohw) =
          out_mat.row(co).segment(static_cast<Eigen::Index>(s) * ohw, ohw);
  return out;
}

Batch Conv2d::backward(const Batch& dy, bool want_dx) {
  const Eigen::Index rows = static_cast<Eigen::Index>(c_in_) * k_ * k_;
  const Eigen::Index ohw = static_cast<Eigen::Index>(out_h_) * out_w_;

  Eigen::MatrixXd dy_mat(c_out_, ohw * n_);
  for (int s = 0; s < n_; ++s)
    for (int co = 0; co < c_out_; ++co)
      dy_mat.row(co).segment(static_cast<Eigen::Index>(s) * ohw, ohw) =
          dy.data.col(s).segment(co * ohw, ohw);

  Eigen::Map<Eigen::MatrixXd> dwmat(dw_.data(), rows, c_out_);
  dwmat.noalias() += col_ * dy_mat.transpose();
  db_ += dy_mat.rowwise().sum();

  if (!want_dx) return {};

  Eigen::Map<const Eigen::MatrixXd> wmat(w_.data(), rows, c_out_);
  Eigen::MatrixXd dcol = wmat * dy_mat;  // rows x (ohw*n)

  Batch dx(n_, c_in_, in_h_, in_w_);
  const Eigen::Index in_plane = static_cast<Eigen::Index>(in_h_) * in_w_;
  for (int s = 0; s < n_; ++s) {
    auto dxin = dx.data.col(s);
    for (int oy = 0; oy < out_h_; ++oy)
      for (int ox = 0; ox < out_w_; ++ox) {
        const Eigen::Index ccol = s * ohw + oy * out_w_ + ox;
        for (int ci = 0; ci < c_in_; ++ci)
          for (int ky = 0; ky < k_; ++ky) {
            const int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= in_h_) continue;
            for (int kx = 0; kx < k_; ++kx) {
              const int ix = ox * stride_ - pad_ + kx;
              if (ix < 0 || ix >= in_w_) continue;
              dxin[ci * in_plane + iy * in_w_ + ix] += dcol((ci * k_ + ky) * k_ + kx, ccol);
            }
          }
      }
  }
  return dx;
}

// ------------------------------------------------------- DepthwiseConv2d

DepthwiseConv2d::DepthwiseConv2d(int channels, int kernel, int stride, int pad)
    : c_(channels), k_(kernel), stride_(stride), pad_(pad) {
  w_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(channels) * kernel * kernel);
  b_ = Eigen::VectorXd::Zero(channels);
  dw_ = Eigen::VectorXd::Zero(w_.size());
  db_ = Eigen::VectorXd::Zero(channels);
}

void DepthwiseConv2d::init(Rng& rng) {
  const double stddev = std::sqrt(2.0 / (k_ * k_));
  for (Eigen::Index i = 0; i < w_.size(); ++i) w_[i] = rng.normal(0.0, stddev);
  b_.setZero();
}

void DepthwiseConv2d::collect(std::vector<Eigen::VectorXd*>& p, std::vector<Eigen::VectorXd*>& g) {
  p.push_back(&w_);
  p.push_back(&b_);
  g.push_back(&dw_);
  g.push_back(&db_);
}

Batch DepthwiseConv2d::forward(const Batch& x) {
  x_ = x;
  out_h_ = (x.h + 2 * pad_ - k_) / stride_ + 1;
  out_w_ = (x.w + 2 * pad_ - k_) / stride_ + 1;
  Batch out(x.n, c_, out_h_, out_w_);
  const Eigen::Index in_plane = static_cast<Eigen::Index>(x.h) * x.w;
  const Eigen::Index out_plane = static_cast<Eigen::Index>(out_h_) * out_w_;
  for (int s = 0; s < x.n; ++s) {
    const auto xin = x.data.col(s);
    auto o = out.data.col(s);
    for (int ci = 0; ci < c_; ++ci)
      for (int oy = 0; oy < out_h_; ++oy)
        for (int ox = 0; ox < out_w_; ++ox) {
          double acc = b_[ci];
          for (int ky = 0; ky < k_; ++ky) {
            const int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= x.h) continue;
            for (int kx = 0; kx < k_; ++kx) {
              const int ix = ox * stride_ - pad_ + kx;
              if (ix < 0 || ix >= x.w) continue;
              acc += w_[(ci * k_ + ky) * k_ + kx] * xin[ci * in_plane + iy * x.w + ix];
            }
          }
          o[ci * out_plane + oy * out_w_ + ox] = acc;
        }
  }
  return out;
}

Batch DepthwiseConv2d::backward(const Batch& dy, bool want_dx) {
  const Eigen::Index in_plane = static_cast<Eigen::Index>(x_.h) * x_.w;
  const Eigen::Index out_plane = static_cast<Eigen::Index>(out_h_) * out_w_;
  Batch dx;
  if (want_dx) dx = Batch(x_.n, c_, x_.h, x_.w);
  for (int s = 0; s < x_.n; ++s) {
    const auto xin = x_.data.col(s);
    const auto dyc = dy.data.col(s);
    for (int ci = 0; ci < c_; ++ci)
      for (int oy = 0; oy < out_h_; ++oy)
        for (int ox = 0; ox < out_w_; ++ox) {
          const double g = dyc[ci * out_plane + oy * out_w_ + ox];
          db_[ci] += g;
          for (int ky = 0; ky < k_; ++ky) {
            const int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= x_.h) continue;
            for (int kx = 0; kx < k_; ++kx) {
              const int ix = ox * stride_ - pad_ + kx;
              if (ix < 0 || ix >= x_.w) continue;
              dw_[(ci * k_ + ky) * k_ + kx] += g * xin[ci * in_plane + iy * x_.w + ix];
              if (want_dx)
                dx.data.col(s)[ci * in_plane + iy * x_.w + ix] +=
                    g * w_[(ci * k_ + ky) * k_ + kx];
            }
          }
        }
  }
  return dx;
}

// ------------------------------------------------------------------ ReLU

Batch ReLU::forward(const Batch& x) {
  c_ = x.c;
  h_ = x.h;
  w_ = x.w;
  mask_ = (x.data.array() > 0.0).cast<double>();
  Batch out = x;
  out.data = x.data.cwiseProduct(mask_);
  return out;
}

Batch ReLU::backward(const Batch& dy, bool) {
  Batch dx = dy;
  dx.c = c_;
  dx.h = h_;
  dx.w = w_;
  dx.data = dy.data.cwiseProduct(mask_);
  return dx;
}

// ----------------------------------------------------------------- Dense

Dense::Dense(int in_features, int out_features) : in_(in_features), out_(out_features) {
  w_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(in_) * out_);
  b_ = Eigen::VectorXd::Zero(out_);
  dw_ = Eigen::VectorXd::Zero(w_.size());
  db_ = Eigen::VectorXd::Zero(out_);
}

void Dense::init(Rng& rng) {
  const double stddev = std::sqrt(2.0 / in_);
  for (Eigen::Index i = 0; i < w_.size(); ++i) w_[i] = rng.normal(0.0, stddev);
  b_.setZero();
}

void Dense::collect(std::vector<Eigen::VectorXd*>& p, std::vector<Eigen::VectorXd*>& g) {
  p.push_back(&w_);
  p.push_back(&b_);
  g.push_back(&dw_);
  g.push_back(&db_);
}

Batch Dense::forward(const Batch& x) {
  if (x.features() != in_) throw Error("Dense: feature size mismatch");
  xc_ = x.c;
  xh_ = x.h;
  xw_ = x.w;
  x_ = x.data;
  Eigen::Map<const Eigen::MatrixXd> wmat(w_.data(), in_, out_);
  Batch out(x.n, out_, 1, 1);
  out.data.noalias() = wmat.transpose() * x.data;
  out.data.colwise() += b_;
  return out;
}

Batch Dense::backward(const Batch& dy, bool want_dx) {
  Eigen::Map<Eigen::MatrixXd> dwmat(dw_.data(), in_, out_);
  dwmat.noalias() += x_ * dy.data.transpose();
  db_ += dy.data.rowwise().sum();
  if (!want_dx) return {};
  Eigen::Map<const Eigen::MatrixXd> wmat(w_.data(), in_, out_);
  Batch dx(dy.n, xc_, xh_, xw_);
  dx.data.noalias() = wmat * dy.data;
  return dx;
}

// --------------------------------------------------------- ResidualBlock

ResidualBlock::ResidualBlock(int channels)
    : conv1_(channels, channels, 3, 1, 1), conv2_(channels, channels, 3, 1, 1) {}

void ResidualBlock::init(Rng& rng) {
  conv1_.init(rng);
  conv2_.init(rng);
}

void ResidualBlock::collect(std::vector<Eigen::VectorXd*>& p, std::vector<Eigen::VectorXd*>& g) {
  conv1_.collect(p, g);
  conv2_.collect(p, g);
}

Batch ResidualBlock::forward(const Batch& x) {
  Batch h = relu1_.forward(conv1_.forward(x));
  Batch y = conv2_.forward(h);
  y.data += x.data;
  return relu_out_.forward(y);
}

Batch ResidualBlock::backward(const Batch& dy, bool want_dx) {
  Batch dsum = relu_out_.backward(dy, true);
  Batch dbranch = conv1_.backward(relu1_.backward(conv2_.backward(dsum, true), true), want_dx);
  if (!want_dx) return {};
  dbranch.data += dsum.data;
  return dbranch;
}

// ------------------------------------------------------------------- Net

void Net::add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

void Net::init(Rng& rng) {
  for (auto& l : layers_) l->init(rng);
}

Batch Net::forward(const Batch& x) {
  Batch cur = x;
  for (auto& l : layers_) cur = l->forward(cur);
  return cur;
}

Batch Net::backward(const Batch& dlogits, bool want_input_grad) {
  Batch cur = dlogits;
  for (size_t i = layers_.size(); i-- > 0;) {
    const bool want = want_input_grad || i > 0;
    cur = layers_[i]->backward(cur, want);
  }
  return cur;
}

std::vector<Eigen::VectorXd*> Net::param_refs() {
  std::vector<Eigen::VectorXd*> p, g;
  for (auto& l : layers_) l->collect(p, g);
  return p;
}

std::vector<Eigen::VectorXd*> Net::grad_refs() {
  std::vector<Eigen::VectorXd*> p, g;
  for (auto& l : layers_) l->collect(p, g);
  return g;
}

void Net::zero_grads() {
  for (auto* g : grad_refs()) g->setZero();
}

Eigen::Index Net::param_count() const {
  Eigen::Index n = 0;
  for (auto* p : const_cast<Net*>(this)->param_refs()) n += p->size();
  return n;
}

Eigen::VectorXd Net::flat_params() const {
  auto refs = const_cast<Net*>(this)->param_refs();
  Eigen::VectorXd out(param_count());
  Eigen::Index off = 0;
  for (auto* p : refs) {
    out.segment(off, p->size()) = *p;
    off += p->size();
  }
  return out;
}

void Net::set_flat_params(const Eigen::VectorXd& theta) {
  auto refs = param_refs();
  Eigen::Index off = 0;
  for (auto* p : refs) {
    if (off + p->size() > theta.size()) throw Error("set_flat_params: size mismatch");
    *p = theta.segment(off, p->size());
    off += p->size();
  }
  if (off != theta.size()) throw Error("set_flat_params: size mismatch");
}

Eigen::VectorXd Net::flat_grads() const {
  auto refs = const_cast<Net*>(this)->grad_refs();
  Eigen::Index total = 0;
  for (auto* g : refs) total += g->size();
  Eigen::VectorXd out(total);
  Eigen::Index off = 0;
  for (auto* g : refs) {
    out.segment(off, g->size()) = *g;
    off += g->size();
  }
  return out;
}

// ------------------------------------------------------------------ loss

Eigen::VectorXd softmax_cross_entropy(const Eigen::MatrixXd& logits,
                                      const std::vector<int>& labels0,
                                      Eigen::MatrixXd* dlogits_sum) {
  const Eigen::Index n = logits.cols();
  if (static_cast<Eigen::Index>(labels0.size()) != n)
    throw Error("softmax_cross_entropy: label count mismatch");
  Eigen::VectorXd losses(n);
  if (dlogits_sum) dlogits_sum->resize(logits.rows(), n);
  for (Eigen::Index s = 0; s < n; ++s) {
    const auto z = logits.col(s);
    const double zmax = z.maxCoeff();
    const Eigen::VectorXd ez = (z.array() - zmax).exp();
    const double sum = ez.sum();
    const Eigen::VectorXd p = ez / sum;
    const int y = labels0[s];
    if (y < 0 || y >= logits.rows()) throw Error("label out of range");
    losses[s] = -std::log(std::max(p[y], 1e-300));
    if (dlogits_sum) {
      dlogits_sum->col(s) = p;
      (*dlogits_sum)(y, s) -= 1.0;
    }
  }
  return losses;
}

// ------------------------------------------------------------ optimizers

void SgdMomentum::step(std::vector<Eigen::VectorXd*> params, std::vector<Eigen::VectorXd*> grads,
                       double lr) {
  if (velocity.empty())
    for (auto* p : params) velocity.emplace_back(Eigen::VectorXd::Zero(p->size()));
  for (size_t i = 0; i < params.size(); ++i) {
    velocity[i] = momentum * velocity[i] + *grads[i];
    *params[i] -= lr * velocity[i];
  }
}

void Adam::step(std::vector<Eigen::VectorXd*> params, std::vector<Eigen::VectorXd*> grads,
                double lr) {
  if (m.empty()) {
    for (auto* p : params) {
      m.emplace_back(Eigen::VectorXd::Zero(p->size()));
      v.emplace_back(Eigen::VectorXd::Zero(p->size()));
    }
  }
  ++t;
  const double bc1 = 1.0 - std::pow(beta1, t);
  const double bc2 = 1.0 - std::pow(beta2, t);
  for (size_t i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1 - beta1) * (*grads[i]);
    v[i] = beta2 * v[i].array().matrix() + (1 - beta2) * grads[i]->cwiseProduct(*grads[i]);
    *params[i] -=
        (lr * (m[i] / bc1).array() / ((v[i] / bc2).array().sqrt() + eps)).matrix();
  }
}

}  // namespace signforge::nn
