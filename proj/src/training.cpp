#include "gon/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gon/rng.hpp"
#include "json.hpp"

namespace gon {

namespace {
constexpr std::size_t kFinalProjectionMaxSweeps = 1000;

// Stream tags for per-purpose RNGs derived from the run seed.
constexpr std::uint64_t kSaltProjections = 0;
constexpr std::uint64_t kSaltShuffle = 1;
}  // namespace

LabelScaler make_label_scaler(std::span<const double> y, Direction direction) {
    if (y.empty()) throw EmptyDataset("no labels to scale");
    auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
    if (!(*lo_it < *hi_it)) {
        throw DegenerateLabels("labels are all equal; nothing to fit");
    }
    return LabelScaler{*lo_it, *hi_it, direction};
}

std::vector<double> scale_labels(std::span<const double> y,
                                 const LabelScaler& scaler) {
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = scaler.scale(y[i]);
    return out;
}

void adam_step(AdamState& state, std::span<double> phi,
               std::span<const double> grad, double lr) {
    if (phi.size() != state.m.size() || grad.size() != state.m.size()) {
        throw InvalidArity("ADAM state size does not match parameters");
    }
    ++state.t;
    const double b1t = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double b2t = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < phi.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
        double m_hat = state.m[i] / b1t;
        double v_hat = state.v[i] / b2t;
        phi[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

namespace {

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = lo + (hi - lo) * static_cast<double>(i) /
                          static_cast<double>(n - 1);
    }
    return out;
}

PiecewiseLinearFn quantile_calibrator(const std::vector<double>& column,
                                      const std::string& name,
                                      const HyperParams& hyper,
                                      std::size_t keypoints,
                                      std::vector<double> values) {
    double lo, hi;
    auto it = hyper.domains.find(name);
    if (it != hyper.domains.end()) {
        lo = it->second.first;
        hi = it->second.second;
    } else {
        auto [lo_it, hi_it] = std::minmax_element(column.begin(), column.end());
        lo = *lo_it;
        hi = *hi_it;
    }
    if (!(lo < hi)) {
        throw DegenerateInput("feature '" + name + "' has zero range");
    }
    return PiecewiseLinearFn(
        init_keys_from_quantiles(column, keypoints, lo, hi), std::move(values));
}

GonModel init_core(const Dataset& ds, const HyperParams& hyper, double margin,
                   std::uint64_t seed) {
    const std::size_t dims = ds.dims();
    const std::size_t k = hyper.plf_keypoints;
    if (k < 2) throw InvalidHyperparameters("plf_keypoints must be at least 2");
    if (hyper.lattice_size < 3) {
        throw InvalidHyperparameters("lattice_size must be at least 3");
    }
    if (hyper.lattice_size % 2 == 0) {
        throw EvenLatticeSize("lattice_size must be odd");
    }
    if (margin < 0.0) throw InvalidHyperparameters("margin must be >= 0");
    const std::size_t arity =
        hyper.lattice_inputs ? hyper.lattice_inputs : std::min<std::size_t>(3, dims);
    const std::size_t count = hyper.lattice_count ? hyper.lattice_count : dims;
    if (arity > dims) {
        throw InvalidHyperparameters("lattice_inputs exceeds feature count");
    }

    GonModel m;
    m.lattice_size = hyper.lattice_size;
    m.features = ds.feature_names;
    const double v = m.vertex_radius();
    const double span = v - margin * static_cast<double>(k);
    if (!(span > 0.0) ||
        (k > 1 && 2.0 * span / static_cast<double>(k - 1) < margin)) {
        throw InvalidHyperparameters(
            "margin too large for the calibrator value range");
    }
    for (std::size_t d = 0; d < dims; ++d) {
        m.calibrators.push_back(quantile_calibrator(ds.feature_column(d),
                                                    ds.feature_names[d], hyper,
                                                    k, linspace(-span, span, k)));
    }

    m.projections = build_random_projections(dims, arity, count,
                                             mix_seed(seed, kSaltProjections));
    const std::vector<int> sizes(arity, hyper.lattice_size);
    for (std::size_t t = 0; t < count; ++t) {
        Lattice lat(sizes);
        std::vector<double> theta(lat.param_count());
        // Feasible tent peaked at the origin.
        for (std::size_t i = 0; i < theta.size(); ++i) {
            std::size_t rem = i;
            double dist = 0.0;
            for (std::size_t d = 0; d < arity; ++d) {
                std::size_t stride = 1;
                for (std::size_t e = d + 1; e < arity; ++e) {
                    stride *= static_cast<std::size_t>(sizes[e]);
                }
                int coord = lat.lower(d) + static_cast<int>(rem / stride);
                rem %= stride;
                dist += std::abs(coord);
            }
            theta[i] = -dist / static_cast<double>(arity);
        }
        lat.set_params(std::move(theta));
        m.lattices.push_back(std::move(lat));
    }
    m.alpha0 = 0.5;
    m.alphas.assign(count, 1.0 / static_cast<double>(count));
    return m;
}

}  // namespace

LoadedModel init_model(const Dataset& ds, const HyperParams& hyper,
                       double margin, std::uint64_t seed) {
    if (ds.rows == 0) throw EmptyDataset("no rows to fit");
    GonModel core = init_core(ds, hyper, margin, seed);
    if (ds.cond_dims() == 0) return core;

    CgonModel m;
    m.core = std::move(core);
    m.cond_features = ds.cond_names;
    const std::size_t k = hyper.plf_keypoints;
    for (std::size_t i = 0; i < ds.cond_dims(); ++i) {
        std::vector<PiecewiseLinearFn> row;
        for (std::size_t d = 0; d < m.core.dims(); ++d) {
            row.push_back(quantile_calibrator(ds.cond_column(i),
                                              ds.cond_names[i], hyper, k,
                                              std::vector<double>(k, 0.0)));
        }
        m.r_calibrators.push_back(std::move(row));
    }
    return m;
}

namespace {

template <typename Model>
double eval_row(const Model& m, const Dataset& ds, std::size_t i) {
    if constexpr (std::is_same_v<Model, GonModel>) {
        return gon_eval(m, ds.row(i));
    } else {
        return cgon_eval(m, ds.row(i), ds.cond_row(i));
    }
}

template <typename Model>
void backward_row(const Model& m, const Dataset& ds, std::size_t i,
                  double upstream, std::span<double> grad) {
    if constexpr (std::is_same_v<Model, GonModel>) {
        gon_backward(m, ds.row(i), upstream, grad);
    } else {
        cgon_backward(m, ds.row(i), ds.cond_row(i), upstream, grad);
    }
}

template <typename Model>
double dataset_mse(const Model& m, const Dataset& ds,
                   const std::vector<double>& ys) {
    double sum = 0.0;
    for (std::size_t i = 0; i < ds.rows; ++i) {
        double e = eval_row(m, ds, i) - ys[i];
        sum += e * e;
    }
    return sum / static_cast<double>(ds.rows);
}

template <typename Model>
FitResult fit_model(Model model, const Dataset& ds, const TrainConfig& config,
                    const LabelScaler& scaler) {
    const std::size_t n = ds.rows;
    std::vector<double> ys = scale_labels(ds.y, scaler);

    ConstraintSet cs = build_constraints(model, config.margin);
    std::vector<double> phi = get_params(model);
    AdamState adam(phi.size());
    Rng shuffle_rng(mix_seed(config.seed, kSaltShuffle));

    TrainReport report;
    report.n = n;
    report.dims = ds.dims();
    report.cond_dims = ds.cond_dims();
    report.epochs = config.epochs;
    report.seed = config.seed;
    report.direction = scaler.direction;
    report.y_min = scaler.y_min;
    report.y_max = scaler.y_max;
    report.initial_mse = dataset_mse(model, ds, ys);

    const std::size_t batch =
        config.batch_size ? config.batch_size : std::min<std::size_t>(n, 100);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> grad(phi.size());

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t nb = std::min(batch, n - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t j = start; j < start + nb; ++j) {
                const std::size_t i = order[j];
                double err = eval_row(model, ds, i) - ys[i];
                backward_row(model, ds, i,
                             2.0 * err / static_cast<double>(nb), grad);
            }
            adam_step(adam, phi, grad, config.learning_rate);
            ProjectionResult proj =
                project_dykstra(std::move(phi), cs, config.dykstra_sweeps, 0.0);
            phi = std::move(proj.phi);
            set_params(model, phi);
        }
        report.epoch_mse.push_back(dataset_mse(model, ds, ys));
    }

    ProjectionResult final_proj = project_dykstra(
        std::move(phi), cs, kFinalProjectionMaxSweeps, config.final_projection_tol);
    set_params(model, final_proj.phi);
    report.final_max_violation = final_proj.max_violation;
    report.final_projection_sweeps = final_proj.sweeps;
    report.final_projection_converged = final_proj.converged;
    report.final_mse = dataset_mse(model, ds, ys);
    report.final_rmse = std::sqrt(report.final_mse);

    try {
        if constexpr (std::is_same_v<Model, GonModel>) {
            report.maximizer = gon_maximizer(model);
        } else {
            std::vector<double> z0(ds.cond_dims(), 0.0);
            report.maximizer = cgon_maximizer(model, z0);
        }
        report.has_maximizer = true;
    } catch (const DomainError&) {
        report.has_maximizer = false;
    }

    return FitResult{std::move(model), std::move(report)};
}

void validate_config(const TrainConfig& config) {
    if (!(config.learning_rate > 0.0)) {
        throw InvalidHyperparameters("learning_rate must be positive");
    }
    if (config.epochs == 0) {
        throw InvalidHyperparameters("epochs must be positive");
    }
    if (config.dykstra_sweeps == 0) {
        throw InvalidHyperparameters("dykstra_sweeps must be positive");
    }
    if (config.margin < 0.0) {
        throw InvalidHyperparameters("margin must be >= 0");
    }
    if (!(config.final_projection_tol > 0.0)) {
        throw InvalidHyperparameters("final_projection_tol must be positive");
    }
}

}  // namespace

FitResult fit(const Dataset& ds, const TrainConfig& config,
              const HyperParams& hyper, Direction direction) {
    validate_config(config);
    if (ds.rows < 2) throw EmptyDataset("need at least 2 samples to fit");
    if (!ds.has_labels()) throw MissingColumn("dataset has no label column");
    for (double v : ds.x) {
        if (!std::isfinite(v)) throw DegenerateInput("non-finite feature value");
    }
    LabelScaler scaler = make_label_scaler(ds.y, direction);
    LoadedModel init = init_model(ds, hyper, config.margin, config.seed);
    if (auto* g = std::get_if<GonModel>(&init)) {
        return fit_model(std::move(*g), ds, config, scaler);
    }
    return fit_model(std::move(std::get<CgonModel>(init)), ds, config, scaler);
}

std::string report_to_json_text(const TrainReport& report) {
    nlohmann::json j;
    j["n"] = report.n;
    j["dims"] = report.dims;
    j["cond_dims"] = report.cond_dims;
    j["epochs"] = report.epochs;
    j["seed"] = report.seed;
    j["direction"] =
        report.direction == Direction::Minimize ? "minimize" : "maximize";
    j["y_min"] = report.y_min;
    j["y_max"] = report.y_max;
    j["initial_mse"] = report.initial_mse;
    j["epoch_mse"] = report.epoch_mse;
    j["final_mse"] = report.final_mse;
    j["final_rmse"] = report.final_rmse;
    j["final_max_violation"] = report.final_max_violation;
    j["final_projection_sweeps"] = report.final_projection_sweeps;
    j["final_projection_converged"] = report.final_projection_converged;
    if (report.has_maximizer) {
        j["maximizer"] = {{"point", report.maximizer.point},
                          {"value", report.maximizer.value}};
    } else {
        j["maximizer"] = nullptr;
    }
    return j.dump(2) + "\n";
}

void apply_config_json_text(const std::string& text, TrainConfig& config,
                            HyperParams& hyper) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "learning_rate") {
                config.learning_rate = value.get<double>();
            } else if (key == "batch_size") {
                config.batch_size = value.get<std::size_t>();
            } else if (key == "epochs") {
                config.epochs = value.get<std::size_t>();
            } else if (key == "dykstra_sweeps") {
                config.dykstra_sweeps = value.get<std::size_t>();
            } else if (key == "margin") {
                config.margin = value.get<double>();
            } else if (key == "seed") {
                config.seed = value.get<std::uint64_t>();
            } else if (key == "final_projection_tol") {
                config.final_projection_tol = value.get<double>();
            } else if (key == "plf_keypoints") {
                hyper.plf_keypoints = value.get<std::size_t>();
            } else if (key == "lattice_size") {
                hyper.lattice_size = value.get<int>();
            } else if (key == "lattice_inputs") {
                hyper.lattice_inputs = value.get<std::size_t>();
            } else if (key == "lattice_count") {
                hyper.lattice_count = value.get<std::size_t>();
            } else if (key == "domains") {
                for (const auto& [name, box] : value.items()) {
                    auto bounds = box.get<std::vector<double>>();
                    if (bounds.size() != 2) {
                        throw ConfigError("domain for '" + name +
                                          "' must be [lo, hi]");
                    }
                    hyper.domains[name] = {bounds[0], bounds[1]};
                }
            } else {
                throw ConfigError("unknown config key: " + key);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
}

}  // namespace gon
