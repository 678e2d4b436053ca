#include "gon/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "gon/rng.hpp"

namespace gon {

double rosenbrock(std::span<const double> x) {
    if (x.size() < 2) {
        throw ArityTooSmall("rosenbrock needs at least 2 dimensions");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        double a = x[i + 1] - x[i] * x[i];
        double b = 1.0 - x[i];
        sum += 100.0 * a * a + b * b;
    }
    return sum;
}

double griewank(std::span<const double> x) {
    if (x.empty()) throw ArityTooSmall("griewank needs at least 1 dimension");
    double quad = 0.0;
    double prod = 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double s = x[i] - 1.0;
        quad += s * s;
        prod *= std::cos(s / std::sqrt(static_cast<double>(i + 1)));
    }
    return 1.0 + quad / 4000.0 - prod;
}

ObjectiveFn objective_by_name(const std::string& name) {
    if (name == "rosenbrock") {
        return [](std::span<const double> x) { return rosenbrock(x); };
    }
    if (name == "griewank") {
        return [](std::span<const double> x) { return griewank(x); };
    }
    throw ConfigError("unknown objective: " + name);
}

Dataset gen_dataset(const DataConfig& cfg) {
    if (cfg.dims == 0) throw InvalidRange("dims must be positive");
    if (cfg.n == 0) throw InvalidRange("n must be positive");
    if (!(cfg.lo < cfg.hi)) throw InvalidRange("empty sampling box");
    if (cfg.cond_dims >= cfg.dims) {
        throw InvalidRange("cond_dims must leave at least 1 feature");
    }
    if (cfg.noise < 0.0) throw InvalidRange("noise must be >= 0");
    ObjectiveFn fn = objective_by_name(cfg.fn);

    Dataset ds;
    const std::size_t feat = cfg.dims - cfg.cond_dims;
    for (std::size_t d = 0; d < cfg.dims; ++d) {
        std::string name = "x" + std::to_string(d);
        if (d < feat) {
            ds.feature_names.push_back(std::move(name));
        } else {
            ds.cond_names.push_back(std::move(name));
        }
    }
    ds.label_name = "y";
    ds.rows = cfg.n;
    ds.x.reserve(cfg.n * feat);
    ds.z.reserve(cfg.n * cfg.cond_dims);
    ds.y.reserve(cfg.n);

    Rng rng(cfg.seed);
    std::vector<double> point(cfg.dims);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        for (std::size_t d = 0; d < cfg.dims; ++d) {
            point[d] = rng.uniform(cfg.lo, cfg.hi);
        }
        double g = fn(point);
        double variance = cfg.noise * g;
        if (variance < 0.0) variance = 0.0;
        double y = g;
        if (cfg.noise > 0.0) y += rng.normal(0.0, std::sqrt(variance));
        ds.x.insert(ds.x.end(), point.begin(), point.begin() + static_cast<long>(feat));
        ds.z.insert(ds.z.end(), point.begin() + static_cast<long>(feat), point.end());
        ds.y.push_back(y);
    }
    return ds;
}

std::size_t sample_best(std::span<const double> y, Direction direction) {
    if (y.empty()) throw EmptyDataset("no labels to scan");
    std::size_t best = 0;
    for (std::size_t i = 1; i < y.size(); ++i) {
        if (direction == Direction::Minimize ? y[i] < y[best] : y[i] > y[best]) {
            best = i;
        }
    }
    return best;
}

ArgmaxResult dense_argmax(const ObjectiveFn& fn, const Box& domain,
                          std::size_t samples, std::uint64_t seed) {
    if (samples == 0) throw InvalidRange("need at least 1 sample");
    Rng rng(seed);
    ArgmaxResult best;
    std::vector<double> point(domain.dims());
    for (std::size_t i = 0; i < samples; ++i) {
        for (std::size_t d = 0; d < domain.dims(); ++d) {
            point[d] = rng.uniform(domain.lo[d], domain.hi[d]);
        }
        double value = fn(point);
        if (i == 0 || value > best.value) {
            best.value = value;
            best.point = point;
        }
    }
    return best;
}

BenchRow run_cell(const BenchCell& cell) {
    BenchRow row;
    row.fn = cell.data.fn;
    row.dims = cell.data.dims;
    row.n = cell.data.n;
    row.noise = cell.data.noise;
    row.seed = cell.data.seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        ObjectiveFn fn = objective_by_name(cell.data.fn);
        Dataset ds = gen_dataset(cell.data);
        TrainConfig train = cell.train;
        train.seed = cell.data.seed;
        FitResult result = fit(ds, train, cell.hyper, Direction::Minimize);

        std::vector<double> full(cell.data.dims, 0.0);
        if (const auto* g = std::get_if<GonModel>(&result.model)) {
            Maximizer mx = gon_maximizer(*g);
            std::copy(mx.point.begin(), mx.point.end(), full.begin());
        } else {
            const auto& cg = std::get<CgonModel>(result.model);
            std::vector<double> z0(cg.cond_dims(), 0.0);
            Maximizer mx = cgon_maximizer(cg, z0);
            std::copy(mx.point.begin(), mx.point.end(), full.begin());
            // conditional inputs stay at the target z = 0
        }
        row.g_at_xhat = fn(full);

        std::size_t best = sample_best(ds.y, Direction::Minimize);
        std::vector<double> best_point(cell.data.dims);
        auto xr = ds.row(best);
        std::copy(xr.begin(), xr.end(), best_point.begin());
        auto zr = ds.cond_row(best);
        std::copy(zr.begin(), zr.end(),
                  best_point.begin() + static_cast<long>(ds.dims()));
        row.sample_best_g = fn(best_point);
        row.ok = true;
    } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
        row.g_at_xhat = std::nan("");
        row.sample_best_g = std::nan("");
    }
    const auto t1 = std::chrono::steady_clock::now();
    row.wall_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    return row;
}

std::vector<BenchRow> run_benchmark(const std::vector<BenchCell>& cells,
                                    std::size_t jobs) {
    std::vector<BenchRow> rows(cells.size());
    if (jobs <= 1 || cells.size() <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            rows[i] = run_cell(cells[i]);
        }
        return rows;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) break;
            rows[i] = run_cell(cells[i]);
        }
    };
    std::vector<std::thread> pool;
    const std::size_t n_threads = std::min(jobs, cells.size());
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return rows;
}

std::vector<BenchSummary> summarize(const std::vector<BenchRow>& rows) {
    std::vector<BenchSummary> slices;
    auto slot = [&](const BenchRow& r) -> BenchSummary& {
        for (auto& s : slices) {
            if (s.fn == r.fn && s.dims == r.dims && s.n == r.n &&
                s.noise == r.noise) {
                return s;
            }
        }
        slices.push_back(BenchSummary{r.fn, r.dims, r.n, r.noise});
        return slices.back();
    };
    for (const auto& r : rows) {
        BenchSummary& s = slot(r);
        if (!r.ok) {
            ++s.failed;
            continue;
        }
        ++s.count;
        s.mean_g += r.g_at_xhat;
        s.mean_sample_best_g += r.sample_best_g;
    }
    for (auto& s : slices) {
        if (s.count == 0) continue;
        s.mean_g /= static_cast<double>(s.count);
        s.mean_sample_best_g /= static_cast<double>(s.count);
    }
    // Second pass for the spread around each slice mean.
    for (auto& s : slices) {
        if (s.count < 2) continue;
        double ss = 0.0;
        for (const auto& r : rows) {
            if (!r.ok || r.fn != s.fn || r.dims != s.dims || r.n != s.n ||
                r.noise != s.noise) {
                continue;
            }
            double d = r.g_at_xhat - s.mean_g;
            ss += d * d;
        }
        double sd = std::sqrt(ss / static_cast<double>(s.count - 1));
        s.ci95_g = 1.96 * sd / std::sqrt(static_cast<double>(s.count));
    }
    return slices;
}

void write_report_csv(const std::string& path,
                      const std::vector<BenchRow>& rows, bool with_timing) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open report file for writing: " + path);
    out << "fn,D,N,sigma,seed,g_at_xhat,wall_ms\n";
    for (const auto& r : rows) {
        out << r.fn << ',' << r.dims << ',' << r.n << ','
            << format_double(r.noise) << ',' << r.seed << ','
            << format_double(r.g_at_xhat) << ','
            << format_double(with_timing ? r.wall_ms : 0.0) << '\n';
    }
    if (!out) throw DataError("failed writing report file: " + path);
}

}  // namespace gon
