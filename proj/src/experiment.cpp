#include "normopt/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "normopt/coordcheck.hpp"
#include "normopt/linalg.hpp"
#include "normopt/mup.hpp"

namespace normopt {
namespace {

using nlohmann::json;

// Sub-stream ids off the master seed. Networks get 16 + width so every
// width draws its own, order-independent init.
constexpr std::uint64_t kTeacherStream = 1;
constexpr std::uint64_t kProbeStream = 2;
constexpr std::uint64_t kNetStreamBase = 16;

// %.12g with the C locale: enough digits to round-trip the values we log
// while keeping CSVs readable.
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string fmt(std::size_t v) { return std::to_string(v); }

std::ofstream open_csv(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    return out;
}

std::string out_path(const ExperimentConfig& cfg) {
    if (!cfg.out.empty()) return cfg.out;
    switch (cfg.experiment) {
        case ExperimentKind::CoordCheck: return "coordcheck.csv";
        case ExperimentKind::Transfer: return "transfer.csv";
        case ExperimentKind::Train: return "train.csv";
        case ExperimentKind::LmoBench: return "lmo_bench.csv";
    }
    throw std::logic_error("experiment: unknown kind");
}

// ---- JSON field readers; every failure names the key ----

std::string get_str(const json& j, const char* key, const std::string& def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_string()) throw ConfigError(std::string("config key '") + key + "' must be a string");
    return v.get<std::string>();
}

double get_num(const json& j, const char* key, double def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_number()) throw ConfigError(std::string("config key '") + key + "' must be a number");
    return v.get<double>();
}

std::size_t get_size(const json& j, const char* key, std::size_t def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
        throw ConfigError(std::string("config key '") + key + "' must be a nonnegative integer");
    return v.get<std::size_t>();
}

std::vector<std::size_t> get_size_list(const json& j, const char* key,
                                       std::vector<std::size_t> def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_array())
        throw ConfigError(std::string("config key '") + key + "' must be an integer list");
    std::vector<std::size_t> out;
    out.reserve(v.size());
    for (const json& e : v) {
        if (!e.is_number_integer() || (!e.is_number_unsigned() && e.get<std::int64_t>() < 0))
            throw ConfigError(std::string("config key '") + key +
                              "' must hold nonnegative integers");
        out.push_back(e.get<std::size_t>());
    }
    return out;
}

std::vector<double> get_num_list(const json& j, const char* key, std::vector<double> def) {
    if (!j.contains(key)) return def;
    const json& v = j.at(key);
    if (!v.is_array())
        throw ConfigError(std::string("config key '") + key + "' must be a number list");
    std::vector<double> out;
    out.reserve(v.size());
    for (const json& e : v) {
        if (!e.is_number())
            throw ConfigError(std::string("config key '") + key + "' must hold numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

// Which knob the transfer grid drives: lambda for Scg, gamma otherwise.
std::string resolve_lr_target(const ExperimentConfig& cfg) {
    if (cfg.lr_target != "auto") return cfg.lr_target;
    return cfg.method == "scg" ? "lambda" : "gamma";
}

void apply_lr(ExperimentConfig& cfg, double lr) {
    if (resolve_lr_target(cfg) == "lambda")
        cfg.lambda = lr;
    else
        cfg.gamma = lr;
}

OptimizerConfig compile_optimizer(const ExperimentConfig& cfg) {
    OptimizerConfig opt;
    opt.method = parse_method(cfg.method);
    opt.gamma = cfg.gamma;
    opt.lambda = cfg.lambda;
    opt.schedule = Schedule::parse(cfg.schedule, cfg.steps);
    opt.feedback = parse_feedback_kind(cfg.feedback);
    opt.alpha = AlphaSchedule::parse(cfg.alpha);
    opt.beta = AlphaSchedule::parse(cfg.beta);
    opt.precond = parse_precond_kind(cfg.precond);
    opt.beta2 = cfg.beta2;
    opt.eps = cfg.eps;
    validate(opt);
    return opt;
}

template <class F>
auto as_config_error(F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

// Rejects everything a runner would only trip over mid-sweep: unknown kind
// strings, out-of-range scalars, missing per-experiment lists.
void validate_config(const ExperimentConfig& cfg) {
    as_config_error([&] {
        parse_activation(cfg.activation);
        parse_loss(cfg.loss);
        Averager::parse(cfg.averager);
        Geometry::parse(cfg.geometry, 2, 2);
        if (!cfg.geometry_input.empty()) Geometry::parse(cfg.geometry_input, 2, 2);
        if (!cfg.geometry_output.empty()) Geometry::parse(cfg.geometry_output, 2, 2);
        ExperimentConfig probe = cfg;
        if (cfg.experiment == ExperimentKind::Transfer && !cfg.lr_grid.empty())
            apply_lr(probe, cfg.lr_grid.front());
        compile_optimizer(probe);
        return 0;
    });
    if (cfg.param != "sp" && cfg.param != "mup" && cfg.param != "spectral")
        throw ConfigError("param must be one of sp, mup, spectral");
    if (cfg.radii != "auto" && cfg.radii != "constant" && cfg.radii != "spectral" &&
        cfg.radii != "none")
        throw ConfigError("radii must be one of auto, constant, spectral, none");
    if (cfg.backend != "exact" && cfg.backend != "newton_schulz")
        throw ConfigError("backend must be exact or newton_schulz");
    if (cfg.lr_target != "auto" && cfg.lr_target != "gamma" && cfg.lr_target != "lambda")
        throw ConfigError("lr_target must be one of auto, gamma, lambda");
    if (!(cfg.rho > 0.0)) throw ConfigError("rho must be positive");
    if (cfg.noise < 0.0) throw ConfigError("noise must be nonnegative");
    if (!(cfg.beta2 >= 0.0 && cfg.beta2 <= 1.0)) throw ConfigError("beta2 must be in [0, 1]");
    if (cfg.input_dim == 0 || cfg.output_dim == 0) throw ConfigError("layer dims must be positive");
    if (cfg.hidden_layers == 0) throw ConfigError("hidden_layers must be at least 1");
    if (cfg.samples == 0) throw ConfigError("samples must be positive");
    if (cfg.batch == 0 || cfg.batch > cfg.samples)
        throw ConfigError("batch must be in [1, samples]");
    if (cfg.width == 0) throw ConfigError("width must be positive");
    if (cfg.ns_iters == 0) throw ConfigError("ns_iters must be positive");
    for (std::size_t w : cfg.widths)
        if (w == 0) throw ConfigError("widths must be positive");
    for (std::size_t s : cfg.sizes)
        if (s == 0) throw ConfigError("sizes must be positive");
    for (double lr : cfg.lr_grid)
        if (!(lr > 0.0)) throw ConfigError("lr_grid entries must be positive");
}

std::vector<Matrix> snapshot_weights(const Mlp& m) {
    std::vector<Matrix> w;
    w.reserve(m.layers.size());
    for (const ParamGroup& g : m.layers) w.push_back(g.weight);
    return w;
}

void restore_weights(Mlp& m, std::span<const Matrix> w) {
    if (w.size() != m.layers.size())
        throw std::logic_error("experiment: weight snapshot size mismatch");
    for (std::size_t l = 0; l < w.size(); ++l) m.layers[l].weight = w[l];
}

std::vector<std::size_t> sorted_unique(std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace

ExperimentKind parse_experiment_kind(const std::string& text) {
    if (text == "coordcheck") return ExperimentKind::CoordCheck;
    if (text == "transfer") return ExperimentKind::Transfer;
    if (text == "train") return ExperimentKind::Train;
    if (text == "lmo_bench") return ExperimentKind::LmoBench;
    throw ConfigError("unknown experiment '" + text + "'");
}

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");

    static const char* const known[] = {
        "experiment", "seed",      "out",           "input_dim",      "output_dim",
        "hidden_layers", "activation", "loss",      "samples",        "noise",
        "batch",      "param",     "rho",           "method",         "gamma",
        "lambda",     "schedule",  "feedback",      "alpha",          "beta",
        "precond",    "beta2",     "eps",           "geometry",       "geometry_input",
        "geometry_output", "radii", "backend",      "ns_iters",       "averager",
        "widths",     "width",     "lr_grid",       "lr_target",      "steps",
        "sizes",
    };
    for (auto it = j.begin(); it != j.end(); ++it) {
        const bool ok = std::any_of(std::begin(known), std::end(known),
                                    [&](const char* k) { return it.key() == k; });
        if (!ok) throw ConfigError("unknown config key '" + it.key() + "'");
    }
    if (!j.contains("experiment")) throw ConfigError("config needs an 'experiment' key");
    if (!j.contains("seed"))
        throw ConfigError("config needs a 'seed' key (runs take no wall-clock entropy)");

    ExperimentConfig cfg;
    cfg.experiment = parse_experiment_kind(get_str(j, "experiment", ""));
    {
        const json& v = j.at("seed");
        if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
            throw ConfigError("config key 'seed' must be a nonnegative integer");
        cfg.seed = v.get<std::uint64_t>();
    }
    cfg.out = get_str(j, "out", cfg.out);
    cfg.input_dim = get_size(j, "input_dim", cfg.input_dim);
    cfg.output_dim = get_size(j, "output_dim", cfg.output_dim);
    cfg.hidden_layers = get_size(j, "hidden_layers", cfg.hidden_layers);
    cfg.activation = get_str(j, "activation", cfg.activation);
    cfg.loss = get_str(j, "loss", cfg.loss);
    cfg.samples = get_size(j, "samples", cfg.samples);
    cfg.noise = get_num(j, "noise", cfg.noise);
    cfg.batch = get_size(j, "batch", cfg.batch);
    cfg.param = get_str(j, "param", cfg.param);
    cfg.rho = get_num(j, "rho", cfg.rho);
    cfg.method = get_str(j, "method", cfg.method);
    cfg.gamma = get_num(j, "gamma", cfg.gamma);
    cfg.lambda = get_num(j, "lambda", cfg.lambda);
    cfg.schedule = get_str(j, "schedule", cfg.schedule);
    cfg.feedback = get_str(j, "feedback", cfg.feedback);
    cfg.alpha = get_str(j, "alpha", cfg.alpha);
    cfg.beta = get_str(j, "beta", cfg.beta);
    cfg.precond = get_str(j, "precond", cfg.precond);
    cfg.beta2 = get_num(j, "beta2", cfg.beta2);
    cfg.eps = get_num(j, "eps", cfg.eps);
    cfg.geometry = get_str(j, "geometry", cfg.geometry);
    cfg.geometry_input = get_str(j, "geometry_input", cfg.geometry_input);
    cfg.geometry_output = get_str(j, "geometry_output", cfg.geometry_output);
    cfg.radii = get_str(j, "radii", cfg.radii);
    cfg.backend = get_str(j, "backend", cfg.backend);
    cfg.ns_iters = get_size(j, "ns_iters", cfg.ns_iters);
    cfg.averager = get_str(j, "averager", cfg.averager);
    cfg.widths = get_size_list(j, "widths", cfg.widths);
    cfg.width = get_size(j, "width", cfg.width);
    cfg.lr_grid = get_num_list(j, "lr_grid", cfg.lr_grid);
    cfg.lr_target = get_str(j, "lr_target", cfg.lr_target);
    cfg.steps = get_size(j, "steps", cfg.steps);
    cfg.sizes = get_size_list(j, "sizes", cfg.sizes);

    validate_config(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

Mlp build_experiment_net(const ExperimentConfig& cfg, std::size_t width,
                         const RngStream& master) {
    if (width == 0) throw ConfigError("width must be positive");
    const std::size_t hidden = cfg.hidden_layers;
    std::vector<std::size_t> dims;
    dims.reserve(hidden + 2);
    dims.push_back(cfg.input_dim);
    for (std::size_t i = 0; i < hidden; ++i) dims.push_back(width);
    dims.push_back(cfg.output_dim);

    AbcParam abc;
    if (cfg.param == "sp")
        abc = make_sp(hidden, width, cfg.input_dim, cfg.output_dim, 1.0);
    else if (cfg.param == "mup")
        abc = make_mup(hidden, width, cfg.input_dim, cfg.output_dim, 1.0);
    else if (cfg.param != "spectral")
        throw ConfigError("param must be one of sp, mup, spectral");

    std::string radii_mode = cfg.radii;
    if (radii_mode == "auto") radii_mode = cfg.param == "spectral" ? "spectral" : "none";
    std::vector<double> radii;
    if (radii_mode == "spectral") radii = spectral_radii(dims, cfg.rho);

    std::vector<LayerSpec> specs(hidden + 1);
    for (std::size_t l = 0; l <= hidden; ++l) {
        LayerSpec& s = specs[l];
        s.out_dim = dims[l + 1];
        s.in_dim = dims[l];
        if (cfg.param == "spectral") {
            s.init_std = std::sqrt(spectral_init_var(s.out_dim, s.in_dim));
        } else {
            s.init_std = abc.init_std(l);
            s.weight_scale = abc.weight_scale(l);
            s.lr_scale = abc.lr_scale(l);
        }
        const std::string& kind = (l == 0 && !cfg.geometry_input.empty()) ? cfg.geometry_input
                                  : (l == hidden && !cfg.geometry_output.empty())
                                      ? cfg.geometry_output
                                      : cfg.geometry;
        s.geometry = Geometry::parse(kind, s.out_dim, s.in_dim);
        if (cfg.backend == "newton_schulz")
            s.geometry.set_spectral_backend(SpectralBackend::NewtonSchulz, cfg.ns_iters);
        if (radii_mode == "spectral")
            s.radius = radii[l];
        else if (radii_mode == "constant")
            s.radius = cfg.rho;
    }
    return make_mlp(specs, parse_activation(cfg.activation), master.split(kNetStreamBase + width));
}

void project_into_feasible_ball(Mlp& net, const OptimizerConfig& opt) {
    if (opt.method != Method::Scg) return;
    for (ParamGroup& g : net.layers) {
        const double rho = g.radius > 0.0 ? g.radius : opt.gamma / opt.lambda;
        if (!(rho > 0.0)) throw ConfigError("scg needs a positive radius (or gamma and lambda)");
        const double n = g.geometry.norm(g.weight);
        if (n > rho) g.weight *= rho * (1.0 - 1e-12) / n;
    }
}

Trainer::Trainer(const OptimizerConfig& opt, std::size_t num_layers, Averager averager, Loss loss)
    : opt_(opt), av_(std::move(averager)), loss_(loss) {
    validate(opt_);
    fb_.reserve(num_layers);
    pre_.reserve(num_layers);
    for (std::size_t l = 0; l < num_layers; ++l) {
        fb_.emplace_back(opt_.feedback, opt_.alpha, opt_.beta);
        pre_.push_back(Preconditioner::make(opt_.precond, opt_.beta2));
    }
}

std::vector<Matrix> Trainer::ingest_gradients(Mlp& net, const Batch& b, std::size_t k) {
    const bool storm = opt_.feedback == FeedbackKind::Storm;
    std::vector<Matrix> gprev;
    if (storm && k >= 1) {
        if (prev_eval_.empty()) throw std::logic_error("storm: previous evaluation point missing");
        std::vector<Matrix> now = snapshot_weights(net);
        restore_weights(net, prev_eval_);
        const ForwardCache cache_prev = forward(net, b.inputs);
        gprev = backward(net, cache_prev, b.targets, loss_);
        restore_weights(net, now);
    }

    const ForwardCache cache = forward(net, b.inputs);
    last_loss_ = loss_value(cache.output, b.targets, loss_);
    if (!std::isfinite(last_loss_))
        throw NumericError("loss is not finite at step " + std::to_string(k));
    std::vector<Matrix> g = backward(net, cache, b.targets, loss_);
    for (const Matrix& gl : g)
        if (!gl.is_finite())
            throw NumericError("gradient is not finite at step " + std::to_string(k));

    if (storm) prev_eval_ = snapshot_weights(net);
    if (opt_.method == Method::PreSgdW)
        for (std::size_t l = 0; l < g.size(); ++l) pre_[l].update(g[l]);

    std::vector<Matrix> d;
    d.reserve(g.size());
    for (std::size_t l = 0; l < g.size(); ++l)
        d.push_back(fb_[l].update(g[l], storm && k >= 1 ? &gprev[l] : nullptr));
    return d;
}

double Trainer::step_direct(Mlp& net, const Batch& b, std::size_t k) {
    if (av_.kind() != Averager::Kind::None && !av_.has_buffer())
        av_.ingest(snapshot_weights(net));
    const std::vector<Matrix> d = ingest_gradients(net, b, k);
    network_step(net.layers, opt_, d, pre_, k);
    if (av_.kind() != Averager::Kind::None) av_.ingest(snapshot_weights(net));
    return last_loss_;
}

double Trainer::step_schedule_free(Mlp& net, const Batch& b, std::size_t k) {
    std::vector<Matrix> x = snapshot_weights(net);
    const auto base = [&](std::vector<Matrix>& xv, const std::vector<Matrix>& yv) {
        restore_weights(net, yv);
        const std::vector<Matrix> d = ingest_gradients(net, b, k);
        restore_weights(net, xv);
        network_step(net.layers, opt_, d, pre_, k);
        xv = snapshot_weights(net);
    };
    schedule_free_step(av_, base, x, k);
    return last_loss_;
}

double Trainer::step(Mlp& net, const Dataset& data, std::size_t batch_size, std::size_t k) {
    if (net.layers.size() != fb_.size())
        throw std::invalid_argument("trainer: layer count mismatch");
    const Batch b = minibatch(data, batch_size, k);
    if (av_.kind() == Averager::Kind::ScheduleFree) return step_schedule_free(net, b, k);
    return step_direct(net, b, k);
}

double Trainer::evaluate(const Mlp& net, const Dataset& data) const {
    if (av_.kind() != Averager::Kind::None && av_.has_buffer()) {
        Mlp reporting = net;
        restore_weights(reporting, av_.average());
        const ForwardCache cache = forward(reporting, data.inputs);
        return loss_value(cache.output, data.targets, loss_);
    }
    const ForwardCache cache = forward(net, data.inputs);
    return loss_value(cache.output, data.targets, loss_);
}

void run_train(const ExperimentConfig& cfg) {
    RngStream master(cfg.seed);
    OptimizerConfig opt;
    Mlp net;
    Averager av;
    Loss loss = Loss::Mse;
    as_config_error([&] {
        opt = compile_optimizer(cfg);
        av = Averager::parse(cfg.averager);
        loss = parse_loss(cfg.loss);
        net = build_experiment_net(cfg, cfg.width, master);
        return 0;
    });
    RngStream teacher = master.split(kTeacherStream);
    const Dataset data =
        make_teacher_task(cfg.input_dim, cfg.output_dim, cfg.samples, cfg.noise, teacher);
    project_into_feasible_ball(net, opt);
    Trainer trainer(opt, net.layers.size(), av, loss);

    std::ofstream out = open_csv(out_path(cfg));
    out << "step,loss";
    for (const ParamGroup& g : net.layers) out << ",norm_" << g.name;
    out << ",sched\n";
    for (std::size_t k = 0; k < cfg.steps; ++k) {
        const double batch_loss = trainer.step(net, data, cfg.batch, k);
        out << fmt(k) << ',' << fmt(batch_loss);
        for (const ParamGroup& g : net.layers) out << ',' << fmt(g.geometry.norm(g.weight));
        out << ',' << fmt(opt.schedule.value(k)) << '\n';
    }
}

void run_coordcheck(const ExperimentConfig& cfg) {
    if (cfg.widths.empty()) throw ConfigError("coordcheck needs a nonempty 'widths' list");
    RngStream master(cfg.seed);
    OptimizerConfig opt;
    Averager av;
    Loss loss = Loss::Mse;
    as_config_error([&] {
        opt = compile_optimizer(cfg);
        av = Averager::parse(cfg.averager);
        loss = parse_loss(cfg.loss);
        return 0;
    });
    RngStream teacher = master.split(kTeacherStream);
    const Dataset data =
        make_teacher_task(cfg.input_dim, cfg.output_dim, cfg.samples, cfg.noise, teacher);
    RngStream probe_stream = master.split(kProbeStream);
    const Matrix probe = gaussian(probe_stream, cfg.input_dim, cfg.batch, 1.0);
    const std::vector<std::size_t> widths = sorted_unique(cfg.widths);

    const auto factory = [&](std::size_t width) {
        Mlp net = build_experiment_net(cfg, width, master);
        project_into_feasible_ball(net, opt);
        auto trainer = std::make_shared<Trainer>(opt, net.layers.size(), av, loss);
        auto step = [trainer, &data, batch = cfg.batch](Mlp& n, std::size_t k) {
            trainer->step(n, data, batch, k);
        };
        return CoordSetup{std::move(net), std::move(step)};
    };
    const std::vector<CoordRow> rows = coord_check(factory, widths, cfg.steps, probe);

    std::ofstream out = open_csv(out_path(cfg));
    out << "width,step,layer,metric_l1,metric_rms,delta_l1,delta_rms,diverged\n";
    for (const CoordRow& r : rows) {
        out << fmt(r.width) << ',' << fmt(r.step) << ',' << fmt(r.layer) << ',' << fmt(r.l1)
            << ',' << fmt(r.rms) << ',' << fmt(r.delta_l1) << ',' << fmt(r.delta_rms) << ','
            << (r.diverged ? 1 : 0) << '\n';
    }
    for (std::size_t layer = 1; layer <= cfg.hidden_layers + 1; ++layer)
        std::cout << "layer " << layer << ": " << to_string(coord_verdict(rows, layer, cfg.steps))
                  << "\n";
}

void run_transfer(const ExperimentConfig& cfg) {
    if (cfg.widths.empty()) throw ConfigError("transfer needs a nonempty 'widths' list");
    if (cfg.lr_grid.empty()) throw ConfigError("transfer needs a nonempty 'lr_grid'");
    if (cfg.lr_grid.size() < 5)
        std::cerr << "warning: lr_grid has " << cfg.lr_grid.size()
                  << " point(s); a sweep wants at least 5\n";
    if (cfg.widths.size() < 2)
        std::cerr << "warning: a single width cannot show a transfer trend\n";

    std::vector<double> grid = cfg.lr_grid;
    std::sort(grid.begin(), grid.end());
    const std::vector<std::size_t> widths = sorted_unique(cfg.widths);
    const std::string target = resolve_lr_target(cfg);

    // Every cell's optimizer config must be valid before any training runs.
    as_config_error([&] {
        parse_loss(cfg.loss);
        Averager::parse(cfg.averager);
        for (double lr : grid) {
            ExperimentConfig cell = cfg;
            apply_lr(cell, lr);
            compile_optimizer(cell);
        }
        return 0;
    });

    RngStream master(cfg.seed);
    RngStream teacher = master.split(kTeacherStream);
    const Dataset data =
        make_teacher_task(cfg.input_dim, cfg.output_dim, cfg.samples, cfg.noise, teacher);
    const double inf = std::numeric_limits<double>::infinity();

    std::ofstream out = open_csv(out_path(cfg));
    out << "width,lr,final_loss\n";
    for (std::size_t width : widths) {
        double best_lr = grid.front();
        double best_loss = inf;
        for (double lr : grid) {
            ExperimentConfig cell = cfg;
            apply_lr(cell, lr);
            double final_loss = inf;
            try {
                const OptimizerConfig opt = compile_optimizer(cell);
                Mlp net = build_experiment_net(cell, width, master);
                project_into_feasible_ball(net, opt);
                Trainer trainer(opt, net.layers.size(), Averager::parse(cfg.averager),
                                parse_loss(cfg.loss));
                for (std::size_t k = 0; k < cfg.steps; ++k)
                    trainer.step(net, data, cfg.batch, k);
                const double v = trainer.evaluate(net, data);
                final_loss = std::isfinite(v) ? v : inf;
            } catch (const NumericError&) {
                final_loss = inf;  // divergence is a data point, not a failure
            } catch (const std::runtime_error& e) {
                if (dynamic_cast<const ConfigError*>(&e) != nullptr) throw;
                final_loss = inf;  // factorization gave up on an exploding iterate
            }
            out << fmt(width) << ',' << fmt(lr) << ',' << fmt(final_loss) << '\n';
            if (final_loss < best_loss) {
                best_loss = final_loss;
                best_lr = lr;
            }
        }
        std::cout << "width " << width << ": argmin lr " << fmt(best_lr) << " (final loss "
                  << fmt(best_loss) << ")\n";
    }
}

void run_lmo_bench(const LmoBenchConfig& cfg) {
    if (cfg.sizes.empty()) throw ConfigError("lmo-bench needs at least one size");
    for (std::size_t s : cfg.sizes)
        if (s == 0) throw ConfigError("sizes must be positive");
    using clock = std::chrono::steady_clock;
    const auto ms_since = [](clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    };
    constexpr std::size_t kMaxIters = 40;

    RngStream master(cfg.seed);
    std::ofstream out = open_csv(cfg.out.empty() ? "lmo_bench.csv" : cfg.out);
    out << "size,iters,ns_error,ns_time_ms,svd_time_ms\n";
    for (std::size_t size : sorted_unique(cfg.sizes)) {
        // Well-conditioned test input: random singular vectors, singular
        // values spread over [1, 2]. A raw Gaussian square draw can be
        // nearly singular, which benchmarks luck instead of the solver.
        RngStream draw = master.split(size);
        Matrix g = gaussian(draw, size, size, 1.0);
        if (size > 1) {
            const SvdResult base = svd(g);
            Matrix scaled = base.u;
            for (std::size_t r = 0; r < size; ++r) {
                const double s =
                    1.0 + static_cast<double>(r) / static_cast<double>(size - 1);
                for (std::size_t c = 0; c < size; ++c) scaled(c, r) *= s;
            }
            g = matmul(scaled, base.vt);
        }

        const auto t_svd = clock::now();
        const SvdResult f = svd(g);
        const Matrix oracle = matmul(f.u, f.vt);
        const double svd_ms = ms_since(t_svd);

        std::size_t iters = 0;
        double err = std::numeric_limits<double>::infinity();
        for (std::size_t it = 1; it <= kMaxIters; ++it) {
            Matrix diff = newton_schulz_polar(g, it, 0.0);
            diff -= oracle;
            err = diff.frobenius_norm();
            iters = it;
            if (err < 1e-3) break;
        }
        const auto t_ns = clock::now();
        (void)newton_schulz_polar(g, iters, 0.0);
        const double ns_ms = ms_since(t_ns);

        out << fmt(size) << ',' << fmt(iters) << ',' << fmt(err) << ',' << fmt(ns_ms) << ','
            << fmt(svd_ms) << '\n';
    }
}

void run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.experiment) {
        case ExperimentKind::Train: run_train(cfg); return;
        case ExperimentKind::CoordCheck: run_coordcheck(cfg); return;
        case ExperimentKind::Transfer: run_transfer(cfg); return;
        case ExperimentKind::LmoBench: {
            LmoBenchConfig bench;
            bench.sizes = cfg.sizes;
            bench.out = out_path(cfg);
            bench.seed = cfg.seed;
            run_lmo_bench(bench);
            return;
        }
    }
    throw std::logic_error("experiment: unknown kind");
}

}  // namespace normopt
