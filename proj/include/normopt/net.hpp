#pragma once

#include <span>
#include <string>
#include <vector>

#include "normopt/matrix.hpp"
#include "normopt/optimize.hpp"
#include "normopt/rng.hpp"

namespace normopt {

enum class Activation { Identity, Relu, Tanh };
enum class Loss { Mse, SoftmaxCrossEntropy };

Activation parse_activation(const std::string& text);
Loss parse_loss(const std::string& text);

// Bias-free multilayer perceptron. Layer l maps activations through the
// effective weight weight_scale[l] * w_l, where w_l is the trainable block
// held by the ParamGroup (a parameterization may pull a width power out of
// the weight into the scale).
struct Mlp {
    std::vector<ParamGroup> layers;
    std::vector<double> weight_scale;
    Activation activation = Activation::Identity;

    std::size_t depth() const { return layers.size(); }  // hidden layers + 1
    std::size_t input_dim() const { return layers.front().weight.cols(); }
    std::size_t output_dim() const { return layers.back().weight.rows(); }
};

// Everything needed to build one layer.
struct LayerSpec {
    std::size_t out_dim = 0;
    std::size_t in_dim = 0;
    double init_std = 0.0;
    double weight_scale = 1.0;
    double lr_scale = 1.0;
    Geometry geometry = Geometry::l2();
    double radius = 0.0;
    std::string name;
};

// Draws every layer from its own split of `master`, so the same seed yields
// the same standard-normal draws no matter how the surrounding code evolves.
Mlp make_mlp(std::span<const LayerSpec> specs, Activation activation, const RngStream& master);

// Activations column-per-sample: inputs are p_in x B.
struct ForwardCache {
    Matrix inputs;
    std::vector<Matrix> preacts;  // h_1 .. h_L (before the nonlinearity)
    std::vector<Matrix> acts;     // phi(h_1) .. phi(h_L)
    Matrix output;                // logits / regression output, p_out x B
};

ForwardCache forward(const Mlp& m, const Matrix& inputs);

// Mse: (1/B) sum_b ||out_b - y_b||^2 (no 1/2). SoftmaxCrossEntropy: mean
// cross-entropy against one-hot (or soft) target columns.
double loss_value(const Matrix& output, const Matrix& targets, Loss loss);

// Loss gradient with respect to the network output.
Matrix loss_grad(const Matrix& output, const Matrix& targets, Loss loss);

// Gradients with respect to each trainable block w_l (weight_scale chained
// through), in layer order.
std::vector<Matrix> backward(const Mlp& m, const ForwardCache& cache, const Matrix& targets,
                             Loss loss);

struct Dataset {
    Matrix inputs;   // p_in x n
    Matrix targets;  // p_out x n
};

// Linear teacher y = T z + noise_std * xi with T fixed by the stream and
// z ~ N(0, I). noise_std = 0 gives noiseless targets.
Dataset make_teacher_task(std::size_t p_in, std::size_t p_out, std::size_t n, double noise_std,
                          const RngStream& master);

// Deterministic contiguous window (with wraparound) for step k.
struct Batch {
    Matrix inputs;
    Matrix targets;
};
Batch minibatch(const Dataset& data, std::size_t batch_size, std::size_t step);

}  // namespace normopt
