#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gon/bench.hpp"
#include "gon/constraints.hpp"
#include "gon/dataio.hpp"
#include "gon/model.hpp"
#include "gon/training.hpp"
#include "json.hpp"

namespace {

// 0 ok, 2 data, 3 config, 4 domain.
int exit_code_for(gon::ErrorCategory category) {
    switch (category) {
        case gon::ErrorCategory::Data:
            return 2;
        case gon::ErrorCategory::Config:
            return 3;
        case gon::ErrorCategory::Domain:
            return 4;
    }
    return 1;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw gon::DataError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::vector<std::string> split_list(const std::string& joined) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(joined);
    while (std::getline(in, item, ',')) {
        while (!item.empty() && (item.front() == ' ' || item.front() == '\t')) {
            item.erase(item.begin());
        }
        while (!item.empty() && (item.back() == ' ' || item.back() == '\t')) {
            item.pop_back();
        }
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> parse_vector(const std::string& joined) {
    std::vector<double> out;
    for (const auto& item : split_list(joined)) {
        try {
            std::size_t used = 0;
            double v = std::stod(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw gon::ConfigError("bad number in vector: '" + item + "'");
        }
    }
    return out;
}

struct FitArgs {
    std::string data;
    std::string label;
    std::string features;
    std::string cond;
    std::string config;
    std::string out = "model.json";
    std::string report;
    bool minimize = false;
};

struct ArgmaxArgs {
    std::string model;
    std::string condition;
    std::string candidates;
};

struct VerifyArgs {
    std::string model;
    std::size_t rays = 50;
    std::size_t steps = 100;
    double tol = 1e-9;
};

struct BenchArgs {
    std::string fn = "rosenbrock";
    std::size_t dims = 4;
    std::size_t n = 1000;
    double noise = 1.0;
    std::size_t seeds = 10;
    std::size_t cond_dims = 0;
    double lo = -2.0;
    double hi = 2.0;
    std::string out = "report.csv";
    std::size_t jobs = 1;
    bool no_timing = false;
};

struct EvalArgs {
    std::string model;
    std::string data;
    std::string label;
    std::string out;
    bool minimize = false;
};

// Registers the training flags shared by fit and bench. Flags override
// config-file values, which override defaults.
void add_train_flags(CLI::App* cmd, gon::TrainConfig& train,
                     gon::HyperParams& hyper) {
    cmd->add_option("--epochs", train.epochs, "Training epochs");
    cmd->add_option("--lr", train.learning_rate, "ADAM learning rate");
    cmd->add_option("--batch", train.batch_size,
                    "Batch size (0: min(N, 100))");
    cmd->add_option("--sweeps", train.dykstra_sweeps,
                    "Dykstra sweeps per batch");
    cmd->add_option("--margin", train.margin,
                    "Monotonicity margin between calibrator keypoints");
    cmd->add_option("--keypoints", hyper.plf_keypoints,
                    "Calibrator keypoints per input");
    cmd->add_option("--lattice-size", hyper.lattice_size,
                    "Lattice vertices per dimension (odd)");
    cmd->add_option("--lattice-inputs", hyper.lattice_inputs,
                    "Inputs per lattice (0: min(3, D))");
    cmd->add_option("--lattice-count", hyper.lattice_count,
                    "Number of lattices (0: D)");
}

int cmd_fit(const FitArgs& args, const gon::TrainConfig& train,
            const gon::HyperParams& hyper) {
    gon::Dataset ds = gon::load_csv(args.data, args.label,
                                    split_list(args.features),
                                    split_list(args.cond));
    gon::Direction direction =
        args.minimize ? gon::Direction::Minimize : gon::Direction::Maximize;
    gon::FitResult result = gon::fit(ds, train, hyper, direction);
    gon::save_model(args.out, result.model);
    if (!args.report.empty()) {
        std::ofstream out(args.report, std::ios::binary);
        if (!out) {
            throw gon::DataError("cannot open report file: " + args.report);
        }
        out << gon::report_to_json_text(result.report);
    }

    nlohmann::json line;
    line["model"] = args.out;
    line["n"] = result.report.n;
    line["dims"] = result.report.dims;
    line["cond_dims"] = result.report.cond_dims;
    line["final_mse"] = result.report.final_mse;
    line["final_rmse"] = result.report.final_rmse;
    line["final_max_violation"] = result.report.final_max_violation;
    if (result.report.has_maximizer) {
        line["maximizer"] = {{"point", result.report.maximizer.point},
                             {"value", result.report.maximizer.value}};
    } else {
        line["maximizer"] = nullptr;
    }
    std::cout << line.dump() << "\n";
    return 0;
}

int cmd_argmax(const ArgmaxArgs& args) {
    gon::LoadedModel model = gon::load_model(args.model);
    const auto* cg = std::get_if<gon::CgonModel>(&model);
    std::vector<double> z;
    if (!args.condition.empty()) {
        if (!cg) {
            throw gon::ConfigError(
                "--condition given but the model is unconditional");
        }
        z = parse_vector(args.condition);
        if (z.size() != cg->cond_dims()) {
            throw gon::ConfigError("--condition needs " +
                                   std::to_string(cg->cond_dims()) +
                                   " values");
        }
    } else if (cg && args.candidates.empty()) {
        throw gon::ConfigError("conditional model needs --condition");
    }

    if (!args.candidates.empty()) {
        // Restricted mode: score each candidate row and echo the best one.
        gon::CsvTable table = gon::read_csv_table(args.candidates);
        const gon::GonModel& core = gon::core_of(model);
        std::vector<std::string> cond_cols;
        if (cg && args.condition.empty()) cond_cols = cg->cond_features;
        gon::Dataset ds =
            gon::dataset_from_table(table, "", core.features, cond_cols);
        if (ds.rows == 0) throw gon::EmptyDataset("candidate file has no rows");
        std::size_t best = 0;
        double best_value = 0.0;
        for (std::size_t i = 0; i < ds.rows; ++i) {
            double value =
                cg ? gon::cgon_eval(*cg, ds.row(i),
                                    z.empty() ? ds.cond_row(i)
                                              : std::span<const double>(z))
                   : gon::gon_eval(core, ds.row(i));
            if (i == 0 || value > best_value) {
                best = i;
                best_value = value;
            }
        }
        const auto& cells = table.cells[best];
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c) std::cout << ',';
            std::cout << cells[c];
        }
        std::cout << "\n";
        return 0;
    }

    gon::Maximizer mx =
        cg ? gon::cgon_maximizer(*cg, z)
           : gon::gon_maximizer(std::get<gon::GonModel>(model));
    nlohmann::json line;
    line["point"] = mx.point;
    line["value"] = mx.value;
    line["inversions"] = mx.inversions;
    std::cout << line.dump() << "\n";
    return 0;
}

int cmd_verify(const VerifyArgs& args, std::uint64_t seed) {
    gon::LoadedModel model = gon::load_model(args.model);
    const gon::GonModel& core = gon::core_of(model);
    auto field = [&core](std::span<const double> c) {
        return gon::ensemble_eval(core, c);
    };
    gon::RayReport report = gon::verify_unimodal_by_rays(
        field, gon::calibrated_domain(core), args.rays, args.steps, args.tol,
        seed);
    std::cout << "ray,step,increase\n";
    for (const auto& v : report.violations) {
        std::cout << v.ray << ',' << v.step << ','
                  << gon::format_double(v.increase) << "\n";
    }
    return 0;
}

int cmd_bench(const BenchArgs& args, gon::TrainConfig train,
              gon::HyperParams hyper, std::uint64_t seed) {
    // Reject unknown objectives up front rather than once per cell.
    (void)gon::objective_by_name(args.fn);
    std::vector<gon::BenchCell> cells;
    cells.reserve(args.seeds);
    for (std::size_t i = 0; i < args.seeds; ++i) {
        gon::BenchCell cell;
        cell.data.fn = args.fn;
        cell.data.dims = args.dims;
        cell.data.n = args.n;
        cell.data.noise = args.noise;
        cell.data.seed = seed + i;
        cell.data.lo = args.lo;
        cell.data.hi = args.hi;
        cell.data.cond_dims = args.cond_dims;
        cell.train = train;
        cell.hyper = hyper;
        cells.push_back(std::move(cell));
    }
    std::vector<gon::BenchRow> rows = gon::run_benchmark(cells, args.jobs);
    gon::write_report_csv(args.out, rows, !args.no_timing);
    for (const auto& s : gon::summarize(rows)) {
        nlohmann::json line;
        line["fn"] = s.fn;
        line["dims"] = s.dims;
        line["n"] = s.n;
        line["noise"] = s.noise;
        line["count"] = s.count;
        line["failed"] = s.failed;
        line["mean_g"] = s.mean_g;
        line["ci95_g"] = s.ci95_g;
        line["mean_sample_best_g"] = s.mean_sample_best_g;
        std::cout << line.dump() << "\n";
    }
    return 0;
}

int cmd_eval(const EvalArgs& args) {
    gon::LoadedModel model = gon::load_model(args.model);
    const auto* cg = std::get_if<gon::CgonModel>(&model);
    const gon::GonModel& core = gon::core_of(model);

    gon::CsvTable table = gon::read_csv_table(args.data);
    std::vector<std::string> cond_cols;
    if (cg) cond_cols = cg->cond_features;
    gon::Dataset ds =
        gon::dataset_from_table(table, args.label, core.features, cond_cols);
    if (ds.rows == 0) throw gon::EmptyDataset("evaluation file has no rows");

    std::vector<double> predictions(ds.rows);
    for (std::size_t i = 0; i < ds.rows; ++i) {
        predictions[i] = cg ? gon::cgon_eval(*cg, ds.row(i), ds.cond_row(i))
                            : gon::gon_eval(core, ds.row(i));
    }

    if (!args.out.empty()) {
        // Original cells pass through untouched; only the appended
        // prediction column is formatted here.
        std::ofstream out(args.out, std::ios::binary);
        if (!out) throw gon::DataError("cannot open output file: " + args.out);
        for (std::size_t c = 0; c < table.header.size(); ++c) {
            if (c) out << ',';
            out << table.header[c];
        }
        out << ",prediction\n";
        for (std::size_t i = 0; i < ds.rows; ++i) {
            for (std::size_t c = 0; c < table.cells[i].size(); ++c) {
                if (c) out << ',';
                out << table.cells[i][c];
            }
            out << ',' << gon::format_double(predictions[i]) << "\n";
        }
        if (!out) throw gon::DataError("failed writing: " + args.out);
    }

    nlohmann::json line;
    line["rows"] = ds.rows;
    if (ds.has_labels()) {
        // RMSE against labels mapped onto the model's output scale, the
        // same scale the training report uses.
        gon::Direction direction = args.minimize ? gon::Direction::Minimize
                                                 : gon::Direction::Maximize;
        gon::LabelScaler scaler = gon::make_label_scaler(ds.y, direction);
        double sum = 0.0;
        for (std::size_t i = 0; i < ds.rows; ++i) {
            double err = predictions[i] - scaler.scale(ds.y[i]);
            sum += err * err;
        }
        double mse = sum / static_cast<double>(ds.rows);
        line["mse"] = mse;
        line["rmse"] = std::sqrt(mse);
    } else {
        line["mse"] = nullptr;
        line["rmse"] = nullptr;
    }
    std::cout << line.dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fits, inspects and benchmarks shape-constrained surrogate "
                 "models whose global maximizer is read off in closed form"};
    app.require_subcommand(1);
    app.set_version_flag("--version",
                         "model format " + std::to_string(gon::kFormatVersion));
    std::uint64_t seed = 0;
    app.add_option("--seed", seed, "Base random seed")->configurable(false);
    app.fallthrough();

    FitArgs fit_args;
    gon::TrainConfig fit_train;
    gon::HyperParams fit_hyper;
    std::string fit_config_path;
    CLI::App* fit = app.add_subcommand("fit", "Fit a model to a CSV dataset");
    fit->add_option("--data", fit_args.data, "Training CSV")->required();
    fit->add_option("--label", fit_args.label, "Label column name")->required();
    fit->add_option("--features", fit_args.features,
                    "Comma-separated feature columns (default: all others)");
    fit->add_option("--cond", fit_args.cond,
                    "Comma-separated conditional columns");
    fit->add_option("--config", fit_config_path, "JSON training config");
    fit->add_flag("--minimize", fit_args.minimize,
                  "Fit so the extracted point minimizes the label");
    fit->add_option("--out", fit_args.out, "Model output path");
    fit->add_option("--report", fit_args.report, "Training report path");
    add_train_flags(fit, fit_train, fit_hyper);

    ArgmaxArgs argmax_args;
    CLI::App* argmax =
        app.add_subcommand("argmax", "Extract the model's maximizer");
    argmax->add_option("--model", argmax_args.model, "Model file")->required();
    argmax->add_option("--condition", argmax_args.condition,
                       "Comma-separated conditional input values");
    argmax->add_option("--candidates", argmax_args.candidates,
                       "CSV of candidate rows; prints the best row instead");

    VerifyArgs verify_args;
    CLI::App* verify = app.add_subcommand(
        "verify", "Ray-check unimodality of the fitted lattice mixture");
    verify->add_option("--model", verify_args.model, "Model file")->required();
    verify->add_option("--rays", verify_args.rays, "Number of rays");
    verify->add_option("--steps", verify_args.steps, "Steps per ray");
    verify->add_option("--tol", verify_args.tol, "Increase tolerance");

    BenchArgs bench_args;
    gon::TrainConfig bench_train;
    gon::HyperParams bench_hyper;
    CLI::App* bench = app.add_subcommand(
        "bench", "Fit against noisy samples of a known objective");
    bench->add_option("--fn", bench_args.fn, "rosenbrock or griewank");
    bench->add_option("--dims", bench_args.dims, "Input dimensions");
    bench->add_option("--n", bench_args.n, "Samples per seed");
    bench->add_option("--noise", bench_args.noise,
                      "Noise scale sigma; variance is sigma * g(x)");
    bench->add_option("--seeds", bench_args.seeds, "Number of seeds");
    bench->add_option("--cond-dims", bench_args.cond_dims,
                      "Trailing inputs treated as conditional");
    bench->add_option("--lo", bench_args.lo, "Sampling box lower bound");
    bench->add_option("--hi", bench_args.hi, "Sampling box upper bound");
    bench->add_option("--out", bench_args.out, "Report CSV path");
    bench->add_option("--jobs", bench_args.jobs, "Parallel cells");
    bench->add_flag("--no-timing", bench_args.no_timing,
                    "Write zero wall_ms for reproducible reports");
    add_train_flags(bench, bench_train, bench_hyper);

    EvalArgs eval_args;
    CLI::App* eval =
        app.add_subcommand("eval", "Score a model against a CSV dataset");
    eval->add_option("--model", eval_args.model, "Model file")->required();
    eval->add_option("--data", eval_args.data, "Evaluation CSV")->required();
    eval->add_option("--label", eval_args.label,
                     "Label column for RMSE (optional)");
    eval->add_option("--out", eval_args.out,
                     "Copy of the data with a prediction column appended");
    eval->add_flag("--minimize", eval_args.minimize,
                   "Labels were fit with --minimize");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*fit) {
            if (!fit_config_path.empty()) {
                // Config file under explicit flags: start from the file's
                // values, then re-apply whatever was passed on the line.
                gon::TrainConfig train;
                gon::HyperParams hyper;
                gon::apply_config_json_text(read_text_file(fit_config_path),
                                            train, hyper);
                auto keep = [&](const char* flag) {
                    return fit->count(flag) > 0;
                };
                if (!keep("--epochs")) fit_train.epochs = train.epochs;
                if (!keep("--lr")) fit_train.learning_rate = train.learning_rate;
                if (!keep("--batch")) fit_train.batch_size = train.batch_size;
                if (!keep("--sweeps")) {
                    fit_train.dykstra_sweeps = train.dykstra_sweeps;
                }
                if (!keep("--margin")) fit_train.margin = train.margin;
                fit_train.seed = train.seed;
                fit_train.final_projection_tol = train.final_projection_tol;
                if (!keep("--keypoints")) {
                    fit_hyper.plf_keypoints = hyper.plf_keypoints;
                }
                if (!keep("--lattice-size")) {
                    fit_hyper.lattice_size = hyper.lattice_size;
                }
                if (!keep("--lattice-inputs")) {
                    fit_hyper.lattice_inputs = hyper.lattice_inputs;
                }
                if (!keep("--lattice-count")) {
                    fit_hyper.lattice_count = hyper.lattice_count;
                }
                fit_hyper.domains = hyper.domains;
            }
            if (fit_config_path.empty() || app.count("--seed") > 0) {
                fit_train.seed = seed;
            }
            return cmd_fit(fit_args, fit_train, fit_hyper);
        }
        if (*argmax) return cmd_argmax(argmax_args);
        if (*verify) return cmd_verify(verify_args, seed);
        if (*bench) return cmd_bench(bench_args, bench_train, bench_hyper, seed);
        if (*eval) return cmd_eval(eval_args);
    } catch (const gon::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
