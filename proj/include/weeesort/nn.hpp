#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "weeesort/rng.hpp"

namespace weeesort {

/// Dense row-major float tensor.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)), data(numel_of(shape), 0.0f) {}

    static std::size_t numel_of(const std::vector<int>& shape) {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        return n;
    }
    std::size_t numel() const { return data.size(); }
    int dim(std::size_t i) const { return shape[i]; }
};

/// Reference to a named trainable parameter and its gradient accumulator.
struct Param {
    std::string name;
    Tensor* value;
    Tensor* grad;
};

class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, bool training) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual std::vector<Param> params() { return {}; }
    virtual const std::string& name() const = 0;
};

/// 3x3-style convolution with stride 1 and "same" zero padding, NHWC layout.
class Conv2d : public Layer {
public:
    Conv2d(std::string name, int in_channels, int out_channels, int kernel, RngStream& init);
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Param> params() override;
    const std::string& name() const override { return name_; }

private:
    std::string name_;
    int in_c_, out_c_, k_, pad_;
    Tensor weight_, bias_, wgrad_, bgrad_;
    Tensor cols_;                 // cached im2col of the last forward
    std::vector<int> in_shape_;
};

class ReLU : public Layer {
public:
    explicit ReLU(std::string name) : name_(std::move(name)) {}
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    const std::string& name() const override { return name_; }

private:
    std::string name_;
    std::vector<char> mask_;
};

/// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
class MaxPool2d : public Layer {
public:
    explicit MaxPool2d(std::string name) : name_(std::move(name)) {}
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    const std::string& name() const override { return name_; }

private:
    std::string name_;
    std::vector<int> in_shape_;
    std::vector<std::size_t> argmax_;
};

class Flatten : public Layer {
public:
    explicit Flatten(std::string name) : name_(std::move(name)) {}
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    const std::string& name() const override { return name_; }

private:
    std::string name_;
    std::vector<int> in_shape_;
};

class Dense : public Layer {
public:
    Dense(std::string name, int in_features, int out_features, RngStream& init);
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Param> params() override;
    const std::string& name() const override { return name_; }

private:
    std::string name_;
    int in_f_, out_f_;
    Tensor weight_, bias_, wgrad_, bgrad_;
    Tensor input_;
};

class Network {
public:
    Network() = default;
    Network(Network&&) = default;
    Network& operator=(Network&&) = default;

    void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
    Tensor forward(const Tensor& x, bool training);
    void backward(const Tensor& grad_out);
    std::vector<Param> params();
    std::size_t num_layers() const { return layers_.size(); }

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

struct LossResult {
    double loss = 0.0;
    Tensor probabilities;  // (N, K)
    Tensor grad;           // d loss / d logits
};

/// Numerically stable softmax cross entropy, averaged over the batch.
LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

/// Softmax over the last axis of a (N, K) tensor.
Tensor softmax(const Tensor& logits);

class AdamOptimizer {
public:
    AdamOptimizer(std::vector<Param> params, double learning_rate, double beta1 = 0.9,
                  double beta2 = 0.999, double epsilon = 1e-7);
    void zero_grad();
    void step();

private:
    std::vector<Param> params_;
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<std::vector<float>> m_, v_;
};

/// Builds a registered backbone. The final Dense layer is always named "head"
/// and is the only layer whose shape depends on num_classes.
Network build_backbone(const std::string& backbone, int input_size, int num_classes,
                       std::uint64_t init_seed);

std::vector<std::string> registered_backbones();

/// Smallest input size a backbone accepts (e.g. one pixel left after pooling).
int backbone_min_input(const std::string& backbone);

}  // namespace weeesort
