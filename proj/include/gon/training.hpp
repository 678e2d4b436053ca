#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gon/dataio.hpp"
#include "gon/model.hpp"

namespace gon {

enum class Direction { Maximize, Minimize };

struct TrainConfig {
    double learning_rate = 0.001;
    std::size_t batch_size = 0;  // 0: min(N, 100)
    std::size_t epochs = 100;
    std::size_t dykstra_sweeps = 10;
    double margin = 0.0;
    std::uint64_t seed = 0;
    double final_projection_tol = 1e-10;
};

/// Model shape. Zero means derive from the data: lattice_inputs becomes
/// min(3, D), lattice_count becomes D.
struct HyperParams {
    std::size_t plf_keypoints = 10;
    int lattice_size = 3;
    std::size_t lattice_inputs = 0;
    std::size_t lattice_count = 0;
    /// Per-feature input domain overrides; defaults to the observed
    /// [min, max] of each column.
    std::map<std::string, std::pair<double, double>> domains;
};

/// Affine map of labels onto [0, 1]; minimization flips so that fitting
/// always maximizes.
struct LabelScaler {
    double y_min = 0.0;
    double y_max = 1.0;
    Direction direction = Direction::Maximize;

    double scale(double y) const {
        double s = (y - y_min) / (y_max - y_min);
        return direction == Direction::Minimize ? 1.0 - s : s;
    }
    double unscale(double s) const {
        if (direction == Direction::Minimize) s = 1.0 - s;
        return y_min + s * (y_max - y_min);
    }
};

/// Throws DegenerateLabels when all labels are equal.
LabelScaler make_label_scaler(std::span<const double> y, Direction direction);

std::vector<double> scale_labels(std::span<const double> y,
                                 const LabelScaler& scaler);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::size_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;

    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected update, phi -= lr * m_hat / (sqrt(v_hat) + eps).
void adam_step(AdamState& state, std::span<double> phi,
               std::span<const double> grad, double lr);

/// Feasible starting model: calibrator keys on label-free feature
/// quantiles, calibrator values evenly spaced over [-V + margin*K,
/// V - margin*K], tent lattices peaked at the origin, alpha0 = 0.5 and
/// uniform mixture weights, zero conditional offsets. Returns a CgonModel
/// when the dataset has conditional columns.
LoadedModel init_model(const Dataset& ds, const HyperParams& hyper,
                       double margin, std::uint64_t seed);

struct TrainReport {
    std::size_t n = 0;
    std::size_t dims = 0;
    std::size_t cond_dims = 0;
    std::size_t epochs = 0;
    std::uint64_t seed = 0;
    Direction direction = Direction::Maximize;
    double y_min = 0.0;
    double y_max = 1.0;
    double initial_mse = 0.0;
    std::vector<double> epoch_mse;
    double final_mse = 0.0;
    double final_rmse = 0.0;
    double final_max_violation = 0.0;
    std::size_t final_projection_sweeps = 0;
    bool final_projection_converged = false;
    bool has_maximizer = false;
    Maximizer maximizer;
};

struct FitResult {
    LoadedModel model;
    TrainReport report;
};

/// Minimizes mean squared error on scaled labels with ADAM, projecting the
/// parameters after every batch with config.dykstra_sweeps Dykstra sweeps,
/// then projects to final_projection_tol so the returned model satisfies
/// every shape constraint.
FitResult fit(const Dataset& ds, const TrainConfig& config,
              const HyperParams& hyper, Direction direction);

std::string report_to_json_text(const TrainReport& report);

/// Applies a JSON config whose keys mirror TrainConfig and HyperParams
/// field names; "domains" maps feature names to [lo, hi]. Unknown keys are
/// a ConfigError.
void apply_config_json_text(const std::string& text, TrainConfig& config,
                            HyperParams& hyper);

}  // namespace gon
