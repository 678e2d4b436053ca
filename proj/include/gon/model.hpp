#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "gon/calibrator.hpp"
#include "gon/constraints.hpp"
#include "gon/lattice.hpp"

namespace gon {

/// Global optimization network: per-input monotone calibrators feeding a
/// nonnegative mixture of unimodal lattices over projected subsets of the
/// calibrated coordinates,
///     h(x) = alpha0 + sum_t alphas[t] * lattice_t(calibrated[proj_t]).
/// Calibrated coordinates live in [-V, V] with V = (lattice_size - 1) / 2;
/// the model clamps before lattice evaluation so slightly infeasible
/// calibrators during training stay evaluable. With feasible parameters the
/// ensemble peaks where every calibrator crosses 0, which is what makes the
/// global maximizer recoverable by inverting each calibrator independently.
struct GonModel {
    std::vector<PiecewiseLinearFn> calibrators;         // one per input
    std::vector<std::vector<std::size_t>> projections;  // input subset per lattice
    std::vector<Lattice> lattices;
    double alpha0 = 0.0;
    std::vector<double> alphas;  // mixture weights, >= 0
    int lattice_size = 3;        // uniform odd side length
    std::vector<std::string> features;

    std::size_t dims() const { return calibrators.size(); }
    std::size_t lattice_count() const { return lattices.size(); }

    /// V: calibrated coordinates and lattice vertices span [-V, V].
    double vertex_radius() const {
        return static_cast<double>((lattice_size - 1) / 2);
    }
};

/// Conditional variant: exogenous inputs z shift the calibrated point
/// through per-(z input, x dimension) piecewise-linear offsets,
///     h(x, z) = ensemble((c(x) + r(z)) / 2),
/// with r_d(z) = sum_i r_calibrators[i][d](z[i]). The maximizer given z
/// solves c_d(x_d) = -r_d(z) per dimension.
struct CgonModel {
    GonModel core;
    std::vector<std::vector<PiecewiseLinearFn>> r_calibrators;  // [cond][dim]
    std::vector<std::string> cond_features;

    std::size_t cond_dims() const { return r_calibrators.size(); }
};

using LoadedModel = std::variant<GonModel, CgonModel>;

struct Maximizer {
    std::vector<double> point;
    double value = 0.0;
    std::size_t inversions = 0;  // calibrator inversions performed
};

double gon_eval(const GonModel& m, std::span<const double> x);

/// The lattice mixture as a function of the calibrated point. With feasible
/// parameters this is unimodal with its peak at the origin, which is what
/// the ray verifier checks.
double ensemble_eval(const GonModel& m, std::span<const double> calibrated);

/// [-V, V]^D, the box the calibrated point lives in.
Box calibrated_domain(const GonModel& m);

/// Exact global maximizer by inverting each calibrator at 0: one inversion
/// per input dimension, no search. Throws NotInvertibleAtValue if some
/// calibrator's value range excludes 0.
Maximizer gon_maximizer(const GonModel& m);

double cgon_eval(const CgonModel& m, std::span<const double> x,
                 std::span<const double> z);

/// Maximizer over x for fixed z, inverting each calibrator at -r_d(z).
/// Throws ConditionalMaximizerOutOfRange naming the dimension whose target
/// falls outside the calibrator's range.
Maximizer cgon_maximizer(const CgonModel& m, std::span<const double> z);

/// Accumulates d(upstream * h) / d(parameter) into grad, laid out per
/// make_layout. Calibrator coordinates that were clamped to [-V, V]
/// receive zero gradient.
void gon_backward(const GonModel& m, std::span<const double> x,
                  double upstream, std::span<double> grad);

/// CGON gradient; the averaging with r(z) halves the sensitivity of both
/// calibrator and offset values.
void cgon_backward(const CgonModel& m, std::span<const double> x,
                   std::span<const double> z, double upstream,
                   std::span<double> grad);

/// `count` sorted index subsets of size `arity` drawn without replacement,
/// redrawn as a group until every input index is covered.
std::vector<std::vector<std::size_t>> build_random_projections(
    std::size_t dims, std::size_t arity, std::size_t count,
    std::uint64_t seed);

/// Flat parameter layout: calibrator value blocks, then lattice parameter
/// blocks, then [alpha0, alphas...], then (CGON) offset value blocks.
ParameterLayout make_layout(const GonModel& m);
ParameterLayout make_layout(const CgonModel& m);

std::vector<double> get_params(const GonModel& m);
std::vector<double> get_params(const CgonModel& m);
void set_params(GonModel& m, std::span<const double> phi);
void set_params(CgonModel& m, std::span<const double> phi);

/// Full shape-constraint system for the model: monotone chains with range
/// [-V, V] per calibrator, unimodality per lattice, nonnegative mixture
/// weights, and (CGON) per-offset-function value bounds [-V/M, V/M].
ConstraintSet build_constraints(const GonModel& m, double margin);
ConstraintSet build_constraints(const CgonModel& m, double margin);

/// Model schema version written to and required from model files.
inline constexpr int kFormatVersion = 1;

std::string model_to_json_text(const GonModel& m);
std::string model_to_json_text(const CgonModel& m);
LoadedModel model_from_json_text(const std::string& text);

void save_model(const std::string& path, const LoadedModel& m);
LoadedModel load_model(const std::string& path);

inline const GonModel& core_of(const LoadedModel& m) {
    if (const auto* g = std::get_if<GonModel>(&m)) return *g;
    return std::get<CgonModel>(m).core;
}

}  // namespace gon
