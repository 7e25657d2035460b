#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "normopt/net.hpp"
#include "normopt/optimize.hpp"
#include "normopt/schedule.hpp"

namespace normopt {

// Anything wrong with a config file or flag; the CLI maps it to exit 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A run that blew up numerically; the CLI maps it to exit 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind { CoordCheck, Transfer, Train, LmoBench };

ExperimentKind parse_experiment_kind(const std::string& text);

// Flat JSON config. "experiment" and "seed" are mandatory; everything else
// has the default shown. Unknown keys are rejected.
struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::Train;
    std::uint64_t seed = 0;
    std::string out;  // empty means "<experiment>.csv"

    // teacher task and model
    std::size_t input_dim = 16;
    std::size_t output_dim = 4;
    std::size_t hidden_layers = 2;
    std::string activation = "relu";
    std::string loss = "mse";
    std::size_t samples = 256;
    double noise = 0.0;
    std::size_t batch = 32;

    // parameterization: "sp" | "mup" | "spectral"; rho is the base radius
    // used by the radii rule
    std::string param = "sp";
    double rho = 1.0;

    // optimizer
    std::string method = "presgdw";
    double gamma = 0.1;
    double lambda = 0.0;
    std::string schedule = "const";
    std::string feedback = "plain";
    std::string alpha = "const:0.1";
    std::string beta = "const:0.9";
    std::string precond = "identity";
    double beta2 = 0.99;
    double eps = 1e-8;
    std::string geometry = "l2";
    std::string geometry_input;   // optional override for the first layer
    std::string geometry_output;  // optional override for the last layer
    std::string radii = "auto";   // "auto" | "constant" | "spectral" | "none"
    std::string backend = "exact";  // "exact" | "newton_schulz"
    std::size_t ns_iters = 10;
    std::string averager = "none";

    // per-experiment knobs
    std::vector<std::size_t> widths;  // coordcheck, transfer
    std::size_t width = 64;           // train
    std::vector<double> lr_grid;      // transfer
    std::string lr_target = "auto";   // transfer knob: "auto" | "gamma" | "lambda"
    std::size_t steps = 100;
    std::vector<std::size_t> sizes = {64, 128, 256};  // lmo_bench
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// Builds the MLP for one width under the configured parameterization,
// geometry assignment, and radii rule; layer draws come from splits of
// `master` so the same seed gives the same network.
Mlp build_experiment_net(const ExperimentConfig& cfg, std::size_t width, const RngStream& master);

// Scales any block whose norm exceeds its Scg ball back onto the boundary
// (just inside it), so the invariant "iterates stay in the ball" has a valid
// starting point. No-op for the other methods.
void project_into_feasible_ball(Mlp& net, const OptimizerConfig& opt);

// Optimizer state for one network: per-layer feedback and preconditioner
// buffers plus the iterate averager. Weights live in the Mlp the caller
// passes to every call, so the same trainer can drive an externally owned
// network (the coordinate check owns its nets).
class Trainer {
public:
    Trainer(const OptimizerConfig& opt, std::size_t num_layers, Averager averager, Loss loss);

    // Runs step k on the k-th minibatch: evaluates loss and gradients at the
    // current evaluation point, folds them into the state buffers, applies
    // the network step. Returns the minibatch loss seen by the gradient.
    // Throws NumericError as soon as that loss or any gradient is not finite.
    double step(Mlp& net, const Dataset& data, std::size_t batch_size, std::size_t k);

    // Full-dataset loss at the reporting weights (the averaging buffer when
    // one is configured, the raw iterate otherwise).
    double evaluate(const Mlp& net, const Dataset& data) const;

    const Averager& averager() const { return av_; }

private:
    double step_direct(Mlp& net, const Batch& b, std::size_t k);
    double step_schedule_free(Mlp& net, const Batch& b, std::size_t k);
    std::vector<Matrix> ingest_gradients(Mlp& net, const Batch& b, std::size_t k);

    OptimizerConfig opt_;
    std::vector<FeedbackState> fb_;
    std::vector<Preconditioner> pre_;
    Averager av_;
    Loss loss_;
    std::vector<Matrix> prev_eval_;  // Storm's previous evaluation point
    double last_loss_ = 0.0;
};

void run_train(const ExperimentConfig& cfg);
void run_coordcheck(const ExperimentConfig& cfg);
void run_transfer(const ExperimentConfig& cfg);

struct LmoBenchConfig {
    std::vector<std::size_t> sizes = {64, 128, 256};
    std::string out = "lmo_bench.csv";
    std::uint64_t seed = 1;
};
void run_lmo_bench(const LmoBenchConfig& cfg);

// Dispatch on cfg.experiment.
void run_experiment(const ExperimentConfig& cfg);

}  // namespace normopt
