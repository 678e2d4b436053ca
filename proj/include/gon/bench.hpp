#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gon/dataio.hpp"
#include "gon/training.hpp"
#include "gon/types.hpp"

namespace gon {

/// sum_{i<D-1} 100 (x[i+1] - x[i]^2)^2 + (1 - x[i])^2, minimum 0 at all
/// ones. Needs D >= 2.
double rosenbrock(std::span<const double> x);

/// 1 + sum_i (x[i]-1)^2 / 4000 - prod_i cos((x[i]-1) / sqrt(i+1)), minimum
/// 0 at all ones. Needs D >= 1.
double griewank(std::span<const double> x);

using ObjectiveFn = std::function<double(std::span<const double>)>;

/// Looks up "rosenbrock" or "griewank".
ObjectiveFn objective_by_name(const std::string& name);

/// One simulated training set: x uniform on [lo, hi]^D and
/// y = g(x) + eps with eps ~ N(0, sigma * g(x)) read as a variance,
/// floored at 0.
struct DataConfig {
    std::string fn = "rosenbrock";
    std::size_t dims = 4;
    std::size_t n = 1000;
    double noise = 1.0;  // sigma
    std::uint64_t seed = 0;
    double lo = -2.0;
    double hi = 2.0;
    std::size_t cond_dims = 0;  // trailing inputs treated as conditional
};

/// Columns x0..x{D-1} plus label y; with cond_dims > 0 the trailing
/// columns are typed as conditional inputs but sampled identically.
Dataset gen_dataset(const DataConfig& cfg);

/// Index of the best observed label (argmin when minimizing); ties go to
/// the first row.
std::size_t sample_best(std::span<const double> y, Direction direction);

struct ArgmaxResult {
    std::vector<double> point;
    double value = 0.0;
};

/// Best of `samples` uniform draws over the box; ties keep the earliest.
ArgmaxResult dense_argmax(const ObjectiveFn& fn, const Box& domain,
                          std::size_t samples, std::uint64_t seed);

struct BenchCell {
    DataConfig data;
    TrainConfig train;
    HyperParams hyper;
};

struct BenchRow {
    std::string fn;
    std::size_t dims = 0;
    std::size_t n = 0;
    double noise = 0.0;
    std::uint64_t seed = 0;
    double g_at_xhat = 0.0;      // true objective at the model maximizer
    double sample_best_g = 0.0;  // true objective at the best noisy sample
    double wall_ms = 0.0;
    bool ok = false;
    std::string error;
};

/// Fits one cell and scores the recovered optimizer against the true
/// objective; conditional cells extract the maximizer at z = 0 and score
/// the point with the conditional inputs at 0. Failures are recorded in
/// the row rather than thrown.
BenchRow run_cell(const BenchCell& cell);

/// Runs cells (optionally on `jobs` threads; cells are independent) and
/// returns rows in cell order regardless of scheduling.
std::vector<BenchRow> run_benchmark(const std::vector<BenchCell>& cells,
                                    std::size_t jobs = 1);

struct BenchSummary {
    std::string fn;
    std::size_t dims = 0;
    std::size_t n = 0;
    double noise = 0.0;
    std::size_t count = 0;   // rows that completed
    std::size_t failed = 0;
    double mean_g = 0.0;
    double ci95_g = 0.0;     // 1.96 * sd / sqrt(count)
    double mean_sample_best_g = 0.0;
};

/// Per-(fn, D, N, sigma) aggregates in first-seen order.
std::vector<BenchSummary> summarize(const std::vector<BenchRow>& rows);

/// Report CSV with pinned columns fn,D,N,sigma,seed,g_at_xhat,wall_ms.
/// with_timing=false writes 0 for wall_ms so reruns are byte-identical.
void write_report_csv(const std::string& path,
                      const std::vector<BenchRow>& rows, bool with_timing);

}  // namespace gon
