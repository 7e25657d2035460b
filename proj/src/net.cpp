#include "normopt/net.hpp"

#include <cmath>
#include <stdexcept>

namespace normopt {

Activation parse_activation(const std::string& text) {
    if (text == "identity") return Activation::Identity;
    if (text == "relu") return Activation::Relu;
    if (text == "tanh") return Activation::Tanh;
    throw std::invalid_argument("net: unknown activation '" + text + "'");
}

Loss parse_loss(const std::string& text) {
    if (text == "mse") return Loss::Mse;
    if (text == "ce") return Loss::SoftmaxCrossEntropy;
    throw std::invalid_argument("net: unknown loss '" + text + "'");
}

Mlp make_mlp(std::span<const LayerSpec> specs, Activation activation, const RngStream& master) {
    if (specs.empty()) throw std::invalid_argument("net: no layers");
    Mlp m;
    m.activation = activation;
    m.layers.reserve(specs.size());
    m.weight_scale.reserve(specs.size());
    for (std::size_t l = 0; l < specs.size(); ++l) {
        const LayerSpec& s = specs[l];
        if (s.out_dim == 0 || s.in_dim == 0)
            throw std::invalid_argument("net: layer dimensions must be positive");
        if (l > 0 && s.in_dim != specs[l - 1].out_dim)
            throw std::invalid_argument("net: layer shapes do not chain");
        RngStream layer_stream = master.split(l);
        ParamGroup group;
        group.weight = gaussian(layer_stream, s.out_dim, s.in_dim, s.init_std);
        group.geometry = s.geometry;
        group.radius = s.radius;
        group.lr_scale = s.lr_scale;
        group.name = s.name.empty() ? "layer" + std::to_string(l + 1) : s.name;
        m.layers.push_back(std::move(group));
        m.weight_scale.push_back(s.weight_scale);
    }
    return m;
}

static void apply_activation(Matrix& h, Activation act) {
    switch (act) {
        case Activation::Identity:
            return;
        case Activation::Relu:
            for (std::size_t i = 0; i < h.size(); ++i) h[i] = h[i] > 0.0 ? h[i] : 0.0;
            return;
        case Activation::Tanh:
            for (std::size_t i = 0; i < h.size(); ++i) h[i] = std::tanh(h[i]);
            return;
    }
}

ForwardCache forward(const Mlp& m, const Matrix& inputs) {
    if (inputs.rows() != m.input_dim())
        throw std::invalid_argument("net forward: input dimension mismatch");
    if (inputs.cols() == 0) throw std::invalid_argument("net forward: empty batch");
    ForwardCache cache;
    cache.inputs = inputs;
    const std::size_t hidden = m.depth() - 1;
    cache.preacts.reserve(hidden);
    cache.acts.reserve(hidden);
    const Matrix* cur = &cache.inputs;
    for (std::size_t l = 0; l < hidden; ++l) {
        Matrix h = matmul(m.layers[l].weight, *cur);
        if (m.weight_scale[l] != 1.0) h *= m.weight_scale[l];
        cache.preacts.push_back(h);  // keep the preactivation
        apply_activation(h, m.activation);
        cache.acts.push_back(std::move(h));
        cur = &cache.acts.back();
    }
    cache.output = matmul(m.layers[hidden].weight, *cur);
    if (m.weight_scale[hidden] != 1.0) cache.output *= m.weight_scale[hidden];
    return cache;
}

static Matrix softmax_columns(const Matrix& logits) {
    Matrix p = logits;
    for (std::size_t b = 0; b < p.cols(); ++b) {
        double mx = p(0, b);
        for (std::size_t i = 1; i < p.rows(); ++i) mx = std::max(mx, p(i, b));
        double z = 0.0;
        for (std::size_t i = 0; i < p.rows(); ++i) {
            p(i, b) = std::exp(p(i, b) - mx);
            z += p(i, b);
        }
        for (std::size_t i = 0; i < p.rows(); ++i) p(i, b) /= z;
    }
    return p;
}

double loss_value(const Matrix& output, const Matrix& targets, Loss loss) {
    if (!output.same_shape(targets)) throw std::invalid_argument("loss: shape mismatch");
    const double inv_b = 1.0 / static_cast<double>(output.cols());
    switch (loss) {
        case Loss::Mse: {
            double s = 0.0;
            for (std::size_t i = 0; i < output.size(); ++i) {
                const double r = output[i] - targets[i];
                s += r * r;
            }
            return s * inv_b;
        }
        case Loss::SoftmaxCrossEntropy: {
            const Matrix p = softmax_columns(output);
            double s = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i)
                if (targets[i] != 0.0) s -= targets[i] * std::log(std::max(p[i], 1e-300));
            return s * inv_b;
        }
    }
    throw std::logic_error("loss: unreachable");
}

Matrix loss_grad(const Matrix& output, const Matrix& targets, Loss loss) {
    if (!output.same_shape(targets)) throw std::invalid_argument("loss: shape mismatch");
    const double inv_b = 1.0 / static_cast<double>(output.cols());
    switch (loss) {
        case Loss::Mse: {
            Matrix g = output;
            g -= targets;
            g *= 2.0 * inv_b;
            return g;
        }
        case Loss::SoftmaxCrossEntropy: {
            Matrix g = softmax_columns(output);
            g -= targets;
            g *= inv_b;
            return g;
        }
    }
    throw std::logic_error("loss: unreachable");
}

std::vector<Matrix> backward(const Mlp& m, const ForwardCache& cache, const Matrix& targets,
                             Loss loss) {
    const std::size_t hidden = m.depth() - 1;
    if (cache.preacts.size() != hidden)
        throw std::invalid_argument("net backward: cache does not match network");
    std::vector<Matrix> grads(m.depth());

    // delta starts at the output and walks back through the effective weights
    Matrix delta = loss_grad(cache.output, targets, loss);
    const Matrix& last_in = hidden == 0 ? cache.inputs : cache.acts.back();
    grads[hidden] = matmul_a_bt(delta, last_in);
    if (m.weight_scale[hidden] != 1.0) grads[hidden] *= m.weight_scale[hidden];

    for (std::size_t l = hidden; l-- > 0;) {
        // pull delta through layer l+1's effective weight, then the activation
        Matrix next = matmul_at_b(m.layers[l + 1].weight, delta);
        if (m.weight_scale[l + 1] != 1.0) next *= m.weight_scale[l + 1];
        switch (m.activation) {
            case Activation::Identity:
                break;
            case Activation::Relu: {
                const Matrix& h = cache.preacts[l];
                for (std::size_t i = 0; i < next.size(); ++i)
                    if (h[i] <= 0.0) next[i] = 0.0;
                break;
            }
            case Activation::Tanh: {
                const Matrix& o = cache.acts[l];
                for (std::size_t i = 0; i < next.size(); ++i) next[i] *= 1.0 - o[i] * o[i];
                break;
            }
        }
        delta = std::move(next);
        const Matrix& below = l == 0 ? cache.inputs : cache.acts[l - 1];
        grads[l] = matmul_a_bt(delta, below);
        if (m.weight_scale[l] != 1.0) grads[l] *= m.weight_scale[l];
    }
    return grads;
}

Dataset make_teacher_task(std::size_t p_in, std::size_t p_out, std::size_t n, double noise_std,
                          const RngStream& master) {
    if (n == 0) throw std::invalid_argument("teacher task: need at least one sample");
    if (p_in == 0 || p_out == 0) throw std::invalid_argument("teacher task: dimensions must be positive");
    if (noise_std < 0.0) throw std::invalid_argument("teacher task: negative noise");
    RngStream teacher_stream = master.split(0);
    RngStream input_stream = master.split(1);
    RngStream noise_stream = master.split(2);
    // teacher columns scaled so targets stay O(1) regardless of input width
    const Matrix teacher = gaussian(teacher_stream, p_out, p_in, 1.0 / std::sqrt(double(p_in)));
    Dataset d;
    d.inputs = gaussian(input_stream, p_in, n, 1.0);
    d.targets = matmul(teacher, d.inputs);
    if (noise_std > 0.0) d.targets += gaussian(noise_stream, p_out, n, noise_std);
    return d;
}

Batch minibatch(const Dataset& data, std::size_t batch_size, std::size_t step) {
    const std::size_t n = data.inputs.cols();
    if (batch_size == 0 || batch_size > n)
        throw std::invalid_argument("minibatch: batch size must lie in [1, n]");
    Batch b;
    b.inputs = Matrix(data.inputs.rows(), batch_size);
    b.targets = Matrix(data.targets.rows(), batch_size);
    const std::size_t start = (step * batch_size) % n;
    for (std::size_t j = 0; j < batch_size; ++j) {
        const std::size_t src = (start + j) % n;
        for (std::size_t i = 0; i < b.inputs.rows(); ++i) b.inputs(i, j) = data.inputs(i, src);
        for (std::size_t i = 0; i < b.targets.rows(); ++i) b.targets(i, j) = data.targets(i, src);
    }
    return b;
}

}  // namespace normopt
