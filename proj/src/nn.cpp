#include "weeesort/nn.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "weeesort/errors.hpp"

namespace weeesort {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

/// Glorot/Xavier uniform fill.
void glorot_fill(Tensor& t, int fan_in, int fan_out, RngStream& rng) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (float& v : t.data) {
        v = static_cast<float>(rng.uniform(-limit, limit));
    }
}

}  // namespace

// ---- Conv2d ----

Conv2d::Conv2d(std::string name, int in_channels, int out_channels, int kernel,
               RngStream& init)
    : name_(std::move(name)),
      in_c_(in_channels),
      out_c_(out_channels),
      k_(kernel),
      pad_((kernel - 1) / 2),
      weight_({kernel * kernel * in_channels, out_channels}),
      bias_({out_channels}),
      wgrad_({kernel * kernel * in_channels, out_channels}),
      bgrad_({out_channels}) {
    glorot_fill(weight_, k_ * k_ * in_c_, k_ * k_ * out_c_, init);
}

Tensor Conv2d::forward(const Tensor& x, bool /*training*/) {
    const int n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
    if (c != in_c_) {
        throw ArgumentError(fmt::format("{}: expected {} input channels, got {}", name_,
                                        in_c_, c));
    }
    in_shape_ = x.shape;
    const int cols_per_row = k_ * k_ * c;
    cols_ = Tensor({n * h * w, cols_per_row});

    // im2col with zero padding
    for (int ni = 0; ni < n; ++ni) {
        const float* img = x.data.data() + static_cast<std::size_t>(ni) * h * w * c;
        float* rows = cols_.data.data() +
                      static_cast<std::size_t>(ni) * h * w * cols_per_row;
        for (int oy = 0; oy < h; ++oy) {
            for (int ox = 0; ox < w; ++ox) {
                float* row = rows + (static_cast<std::size_t>(oy) * w + ox) * cols_per_row;
                int col = 0;
                for (int ky = 0; ky < k_; ++ky) {
                    const int sy = oy + ky - pad_;
                    for (int kx = 0; kx < k_; ++kx) {
                        const int sx = ox + kx - pad_;
                        if (sy < 0 || sy >= h || sx < 0 || sx >= w) {
                            std::fill_n(row + col, c, 0.0f);
                        } else {
                            const float* px = img + (static_cast<std::size_t>(sy) * w + sx) * c;
                            std::copy_n(px, c, row + col);
                        }
                        col += c;
                    }
                }
            }
        }
    }

    Tensor y({n, h, w, out_c_});
    ConstMatMap cols(cols_.data.data(), n * h * w, cols_per_row);
    ConstMatMap weight(weight_.data.data(), cols_per_row, out_c_);
    MatMap out(y.data.data(), n * h * w, out_c_);
    out.noalias() = cols * weight;
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
        for (int j = 0; j < out_c_; ++j) out(r, j) += bias_.data[static_cast<std::size_t>(j)];
    }
    return y;
}

Tensor Conv2d::backward(const Tensor& grad_out) {
    const int n = in_shape_[0], h = in_shape_[1], w = in_shape_[2], c = in_shape_[3];
    const int cols_per_row = k_ * k_ * c;
    const Eigen::Index rows = static_cast<Eigen::Index>(n) * h * w;

    ConstMatMap dy(grad_out.data.data(), rows, out_c_);
    ConstMatMap cols(cols_.data.data(), rows, cols_per_row);
    ConstMatMap weight(weight_.data.data(), cols_per_row, out_c_);

    MatMap dw(wgrad_.data.data(), cols_per_row, out_c_);
    dw.noalias() += cols.transpose() * dy;
    for (int j = 0; j < out_c_; ++j) {
        bgrad_.data[static_cast<std::size_t>(j)] += dy.col(j).sum();
    }

    RowMat dcols = dy * weight.transpose();  // (rows, k*k*c)

    Tensor dx(in_shape_);
    for (int ni = 0; ni < n; ++ni) {
        float* img = dx.data.data() + static_cast<std::size_t>(ni) * h * w * c;
        const float* rows_ptr =
            dcols.data() + static_cast<std::size_t>(ni) * h * w * cols_per_row;
        for (int oy = 0; oy < h; ++oy) {
            for (int ox = 0; ox < w; ++ox) {
                const float* row =
                    rows_ptr + (static_cast<std::size_t>(oy) * w + ox) * cols_per_row;
                int col = 0;
                for (int ky = 0; ky < k_; ++ky) {
                    const int sy = oy + ky - pad_;
                    for (int kx = 0; kx < k_; ++kx) {
                        const int sx = ox + kx - pad_;
                        if (sy >= 0 && sy < h && sx >= 0 && sx < w) {
                            float* px = img + (static_cast<std::size_t>(sy) * w + sx) * c;
                            for (int ci = 0; ci < c; ++ci) px[ci] += row[col + ci];
                        }
                        col += c;
                    }
                }
            }
        }
    }
    return dx;
}

std::vector<Param> Conv2d::params() {
    return {{name_ + ".weight", &weight_, &wgrad_}, {name_ + ".bias", &bias_, &bgrad_}};
}

// ---- ReLU ----

Tensor ReLU::forward(const Tensor& x, bool /*training*/) {
    Tensor y = x;
    mask_.assign(x.numel(), 0);
    for (std::size_t i = 0; i < y.data.size(); ++i) {
        if (y.data[i] > 0.0f) {
            mask_[i] = 1;
        } else {
            y.data[i] = 0.0f;
        }
    }
    return y;
}

Tensor ReLU::backward(const Tensor& grad_out) {
    Tensor dx = grad_out;
    for (std::size_t i = 0; i < dx.data.size(); ++i) {
        if (!mask_[i]) dx.data[i] = 0.0f;
    }
    return dx;
}

// ---- MaxPool2d ----

Tensor MaxPool2d::forward(const Tensor& x, bool /*training*/) {
    const int n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
    const int oh = h / 2, ow = w / 2;
    if (oh == 0 || ow == 0) {
        throw ArgumentError(fmt::format("{}: input {}x{} too small to pool", name_, h, w));
    }
    in_shape_ = x.shape;
    Tensor y({n, oh, ow, c});
    argmax_.assign(y.numel(), 0);
    for (int ni = 0; ni < n; ++ni) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                for (int ci = 0; ci < c; ++ci) {
                    float best = -std::numeric_limits<float>::infinity();
                    std::size_t best_idx = 0;
                    for (int dy = 0; dy < 2; ++dy) {
                        for (int dx = 0; dx < 2; ++dx) {
                            const std::size_t idx =
                                ((static_cast<std::size_t>(ni) * h + (oy * 2 + dy)) * w +
                                 (ox * 2 + dx)) * c + ci;
                            if (x.data[idx] > best) {
                                best = x.data[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    const std::size_t out_idx =
                        ((static_cast<std::size_t>(ni) * oh + oy) * ow + ox) * c + ci;
                    y.data[out_idx] = best;
                    argmax_[out_idx] = best_idx;
                }
            }
        }
    }
    return y;
}

Tensor MaxPool2d::backward(const Tensor& grad_out) {
    Tensor dx(in_shape_);
    for (std::size_t i = 0; i < grad_out.data.size(); ++i) {
        dx.data[argmax_[i]] += grad_out.data[i];
    }
    return dx;
}

// ---- Flatten ----

Tensor Flatten::forward(const Tensor& x, bool /*training*/) {
    in_shape_ = x.shape;
    Tensor y = x;
    y.shape = {x.dim(0), static_cast<int>(x.numel()) / x.dim(0)};
    return y;
}

Tensor Flatten::backward(const Tensor& grad_out) {
    Tensor dx = grad_out;
    dx.shape = in_shape_;
    return dx;
}

// ---- Dense ----

Dense::Dense(std::string name, int in_features, int out_features, RngStream& init)
    : name_(std::move(name)),
      in_f_(in_features),
      out_f_(out_features),
      weight_({in_features, out_features}),
      bias_({out_features}),
      wgrad_({in_features, out_features}),
      bgrad_({out_features}) {
    glorot_fill(weight_, in_f_, out_f_, init);
}

Tensor Dense::forward(const Tensor& x, bool /*training*/) {
    if (x.dim(1) != in_f_) {
        throw ArgumentError(fmt::format("{}: expected {} input features, got {}", name_,
                                        in_f_, x.dim(1)));
    }
    input_ = x;
    const int n = x.dim(0);
    Tensor y({n, out_f_});
    ConstMatMap xin(x.data.data(), n, in_f_);
    ConstMatMap weight(weight_.data.data(), in_f_, out_f_);
    MatMap out(y.data.data(), n, out_f_);
    out.noalias() = xin * weight;
    for (int r = 0; r < n; ++r) {
        for (int j = 0; j < out_f_; ++j) out(r, j) += bias_.data[static_cast<std::size_t>(j)];
    }
    return y;
}

Tensor Dense::backward(const Tensor& grad_out) {
    const int n = input_.dim(0);
    ConstMatMap dy(grad_out.data.data(), n, out_f_);
    ConstMatMap xin(input_.data.data(), n, in_f_);
    ConstMatMap weight(weight_.data.data(), in_f_, out_f_);

    MatMap dw(wgrad_.data.data(), in_f_, out_f_);
    dw.noalias() += xin.transpose() * dy;
    for (int j = 0; j < out_f_; ++j) {
        bgrad_.data[static_cast<std::size_t>(j)] += dy.col(j).sum();
    }
    Tensor dx({n, in_f_});
    MatMap dxm(dx.data.data(), n, in_f_);
    dxm.noalias() = dy * weight.transpose();
    return dx;
}

std::vector<Param> Dense::params() {
    return {{name_ + ".weight", &weight_, &wgrad_}, {name_ + ".bias", &bias_, &bgrad_}};
}

// ---- Network ----

Tensor Network::forward(const Tensor& x, bool training) {
    Tensor out = x;
    for (auto& layer : layers_) {
        out = layer->forward(out, training);
    }
    return out;
}

void Network::backward(const Tensor& grad_out) {
    Tensor grad = grad_out;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        grad = (*it)->backward(grad);
    }
}

std::vector<Param> Network::params() {
    std::vector<Param> all;
    for (auto& layer : layers_) {
        for (Param& p : layer->params()) all.push_back(p);
    }
    return all;
}

// ---- loss ----

Tensor softmax(const Tensor& logits) {
    const int n = logits.dim(0), k = logits.dim(1);
    Tensor probs({n, k});
    for (int i = 0; i < n; ++i) {
        const float* row = logits.data.data() + static_cast<std::size_t>(i) * k;
        float* out = probs.data.data() + static_cast<std::size_t>(i) * k;
        float mx = row[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < k; ++j) {
            const double e = std::exp(static_cast<double>(row[j]) - mx);
            out[j] = static_cast<float>(e);
            sum += e;
        }
        for (int j = 0; j < k; ++j) out[j] = static_cast<float>(out[j] / sum);
    }
    return probs;
}

LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    const int n = logits.dim(0), k = logits.dim(1);
    if (static_cast<int>(labels.size()) != n) {
        throw ArgumentError("label count does not match the batch size");
    }
    LossResult result;
    result.probabilities = softmax(logits);
    result.grad = Tensor({n, k});
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        const float* p = result.probabilities.data.data() + static_cast<std::size_t>(i) * k;
        float* g = result.grad.data.data() + static_cast<std::size_t>(i) * k;
        const int y = labels[static_cast<std::size_t>(i)];
        loss -= std::log(std::max(static_cast<double>(p[y]), 1e-12));
        for (int j = 0; j < k; ++j) {
            g[j] = (p[j] - (j == y ? 1.0f : 0.0f)) / static_cast<float>(n);
        }
    }
    result.loss = loss / n;
    return result;
}

// ---- Adam ----

AdamOptimizer::AdamOptimizer(std::vector<Param> params, double learning_rate, double beta1,
                             double beta2, double epsilon)
    : params_(std::move(params)), lr_(learning_rate), beta1_(beta1), beta2_(beta2),
      eps_(epsilon) {
    for (const Param& p : params_) {
        m_.emplace_back(p.value->numel(), 0.0f);
        v_.emplace_back(p.value->numel(), 0.0f);
    }
}

void AdamOptimizer::zero_grad() {
    for (Param& p : params_) {
        std::fill(p.grad->data.begin(), p.grad->data.end(), 0.0f);
    }
}

void AdamOptimizer::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        auto& value = params_[pi].value->data;
        auto& grad = params_[pi].grad->data;
        auto& m = m_[pi];
        auto& v = v_[pi];
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double g = grad[i];
            m[i] = static_cast<float>(beta1_ * m[i] + (1.0 - beta1_) * g);
            v[i] = static_cast<float>(beta2_ * v[i] + (1.0 - beta2_) * g * g);
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            value[i] -= static_cast<float>(lr_ * mhat / (std::sqrt(vhat) + eps_));
        }
    }
}

// ---- backbones ----

namespace {

Network build_vgg16(int input_size, int num_classes, std::uint64_t seed) {
    // 13 convolution layers in five pooled blocks, then the fc stack.
    const std::vector<std::vector<int>> blocks = {
        {64, 64}, {128, 128}, {256, 256, 256}, {512, 512, 512}, {512, 512, 512}};
    Network net;
    int channels = 3;
    int size = input_size;
    int layer_index = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (std::size_t ci = 0; ci < blocks[b].size(); ++ci) {
            const std::string name =
                fmt::format("block{}_conv{}", b + 1, ci + 1);
            RngStream init = RngStream::derive({seed, 0xC0Du, static_cast<std::uint64_t>(layer_index++)});
            net.add(std::make_unique<Conv2d>(name, channels, blocks[b][ci], 3, init));
            net.add(std::make_unique<ReLU>(name + "_relu"));
            channels = blocks[b][ci];
        }
        net.add(std::make_unique<MaxPool2d>(fmt::format("block{}_pool", b + 1)));
        size /= 2;
    }
    net.add(std::make_unique<Flatten>("flatten"));
    int features = size * size * channels;
    {
        RngStream init = RngStream::derive({seed, 0xC0Du, static_cast<std::uint64_t>(layer_index++)});
        net.add(std::make_unique<Dense>("fc1", features, 4096, init));
        net.add(std::make_unique<ReLU>("fc1_relu"));
    }
    {
        RngStream init = RngStream::derive({seed, 0xC0Du, static_cast<std::uint64_t>(layer_index++)});
        net.add(std::make_unique<Dense>("fc2", 4096, 4096, init));
        net.add(std::make_unique<ReLU>("fc2_relu"));
    }
    RngStream init = RngStream::derive({seed, 0x4EADu, 0});
    net.add(std::make_unique<Dense>("head", 4096, num_classes, init));
    return net;
}

Network build_smallcnn(int input_size, int num_classes, std::uint64_t seed) {
    Network net;
    const std::vector<int> channels = {16, 32, 64};
    int in_c = 3;
    int size = input_size;
    int layer_index = 0;
    for (std::size_t i = 0; i < channels.size(); ++i) {
        const std::string name = fmt::format("conv{}", i + 1);
        RngStream init = RngStream::derive({seed, 0xC0Du, static_cast<std::uint64_t>(layer_index++)});
        net.add(std::make_unique<Conv2d>(name, in_c, channels[i], 3, init));
        net.add(std::make_unique<ReLU>(name + "_relu"));
        net.add(std::make_unique<MaxPool2d>(fmt::format("pool{}", i + 1)));
        in_c = channels[i];
        size /= 2;
    }
    net.add(std::make_unique<Flatten>("flatten"));
    const int features = size * size * in_c;
    {
        RngStream init = RngStream::derive({seed, 0xC0Du, static_cast<std::uint64_t>(layer_index++)});
        net.add(std::make_unique<Dense>("fc1", features, 128, init));
        net.add(std::make_unique<ReLU>("fc1_relu"));
    }
    RngStream init = RngStream::derive({seed, 0x4EADu, 0});
    net.add(std::make_unique<Dense>("head", 128, num_classes, init));
    return net;
}

}  // namespace

Network build_backbone(const std::string& backbone, int input_size, int num_classes,
                       std::uint64_t init_seed) {
    const int min_input = backbone_min_input(backbone);
    if (input_size < min_input) {
        throw ConfigError(fmt::format("backbone '{}' needs input_size >= {}, got {}",
                                      backbone, min_input, input_size));
    }
    if (num_classes < 2) {
        throw ConfigError("num_classes must be at least 2");
    }
    if (backbone == "vgg16") return build_vgg16(input_size, num_classes, init_seed);
    if (backbone == "smallcnn") return build_smallcnn(input_size, num_classes, init_seed);
    throw ConfigError(fmt::format("unknown backbone '{}' (registered: {})", backbone,
                                  fmt::join(registered_backbones(), ", ")));
}

std::vector<std::string> registered_backbones() { return {"vgg16", "smallcnn"}; }

int backbone_min_input(const std::string& backbone) {
    if (backbone == "vgg16") return 32;   // five 2x pools
    if (backbone == "smallcnn") return 8; // three 2x pools
    throw ConfigError(fmt::format("unknown backbone '{}' (registered: {})", backbone,
                                  fmt::join(registered_backbones(), ", ")));
}

}  // namespace weeesort
