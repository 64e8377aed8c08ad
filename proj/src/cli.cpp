#include "simba/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>

#include "simba/benchmark.hpp"
#include "simba/config.hpp"
#include "simba/csv.hpp"
#include "simba/errors.hpp"
#include "simba/model_io.hpp"
#include "simba/trainer.hpp"

namespace simba {

namespace {

std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
}

std::uint64_t parse_seed_text(const std::string& text, const char* source) {
    std::uint64_t v = 0;
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError(std::string(source) + ": '" + text + "' is not a seed");
    return v;
}

// Flag value, else SIMBA_SEED, else nothing.
std::optional<std::uint64_t> resolve_seed(const std::optional<std::uint64_t>& flag) {
    if (flag) return flag;
    if (auto e = env("SIMBA_SEED")) return parse_seed_text(*e, "SIMBA_SEED");
    return std::nullopt;
}

std::filesystem::path resolve_out(const std::string& flag, const char* fallback) {
    if (!flag.empty()) return flag;
    if (auto e = env("SIMBA_OUT")) return *e;
    return fallback;
}

// CLI11 consumes its argument vector from the back.
int parse_flags(CLI::App& app, const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                bool& done) {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        done = true;
        return app.exit(e, out, err) == 0 ? exit_ok : exit_usage;
    }
    done = false;
    return exit_ok;
}

template <class Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const DimensionError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const ContractError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const Error& e) {
        // Divergence, singular solves, overflow, eigenvalue convergence.
        err << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
}

void write_file(const std::filesystem::path& path, const auto& write) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write " + path.string());
    write(f);
}

void write_history(std::ostream& out, const std::vector<EpochRecord>& history) {
    out << "epoch,train_loss,val_loss,spectral_radius,wall_time\n";
    for (const EpochRecord& r : history) {
        out << r.epoch << ',' << format_double(r.train_loss) << ',' << format_double(r.val_loss) << ','
            << format_double(r.spectral_radius) << ',' << format_double(r.wall_time) << '\n';
    }
}

Vector read_x0_csv(const std::filesystem::path& path, Index n) {
    const CsvTable table = read_csv_table(path);
    if (table.rows.size() != 1) throw ConfigError(path.string() + ": expected a single row of x1..xn");
    if (static_cast<Index>(table.header.size()) != n) {
        throw DimensionError(path.string() + ": x0 has " + std::to_string(table.header.size()) +
                             " entries, the model has n = " + std::to_string(n));
    }
    Vector x0(n);
    for (Index i = 0; i < n; ++i) {
        const KeyValue kv{table.header[static_cast<std::size_t>(i)], table.rows[0][static_cast<std::size_t>(i)],
                          table.lines[0]};
        x0(i) = parse_double(kv);
    }
    return x0;
}

}  // namespace

int cmd_fit(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Identify a state-space model from trajectory data", "simba fit"};
    std::string data, config_path, init_model, out_dir;
    std::optional<std::uint64_t> seed_flag;
    app.add_option("--data", data, "Manifest listing train/val/test files")->required();
    app.add_option("--config", config_path, "key = value training settings")->required();
    app.add_option("--init-model", init_model, "Start from a previously saved model");
    app.add_option("--out", out_dir, "Output directory (default: $SIMBA_OUT or simba_fit)");
    app.add_option("--seed", seed_flag, "Overrides the config seed (default: $SIMBA_SEED)");
    bool done = false;
    if (int code = parse_flags(app, args, out, err, done); done) return code;

    return guarded(err, [&] {
        FitSettings settings = load_fit_settings(config_path);
        if (auto s = resolve_seed(seed_flag)) settings.train.seed = *s;
        const auto dir = resolve_out(out_dir, "simba_fit");

        Dataset dataset = load_manifest(data);
        std::optional<Scaler> scaler;
        if (settings.standardize) {
            auto [scaled, sc] = standardize(dataset);
            dataset = std::move(scaled);
            scaler = sc;
        }
        std::optional<ModelLeaves> init;
        if (!init_model.empty()) init = init_from_model(load_model(init_model), dataset, settings.train);

        FitResult result = fit(dataset, settings.train, init);
        StateSpaceModel model = result.best_model;
        model.scaler = scaler;

        std::filesystem::create_directories(dir);
        save_model(dir / "model.txt", model);
        write_file(dir / "history.csv", [&](std::ostream& f) { write_history(f, result.history); });
        write_file(dir / "config.txt", [&](std::ostream& f) { write_fit_settings(f, settings); });

        const auto test = dataset.in_split(Split::test);
        std::string test_loss = "none";
        if (!test.empty()) {
            test_loss = format_double(evaluate(result.best_model, test, settings.train.val_loss, settings.train));
        }
        out << "best_val_loss=" << format_double(result.best_val_loss) << " best_epoch=" << result.best_epoch
            << " epochs=" << result.epochs_run << " test_loss=" << test_loss
            << " x0=" << x0_policy_name(settings.train.eval_x0) << " status=" << (result.aborted ? "aborted" : "ok")
            << '\n';
        if (result.aborted) {
            err << "fit aborted (" << result.diagnostic << "); best snapshot saved\n";
            return static_cast<int>(exit_numerical);
        }
        return static_cast<int>(exit_ok);
    });
}

int cmd_simulate(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Simulate a saved model on an input trajectory", "simba simulate"};
    std::string model_path, inputs_path, x0_path, out_path;
    Index horizon = 0;
    app.add_option("--model", model_path, "Model file")->required();
    app.add_option("--inputs", inputs_path, "CSV with t,u1..um (y columns needed for --estimate-x0)")->required();
    auto* x0_opt = app.add_option("--x0", x0_path, "CSV with header x1..xn and one row");
    auto* est_opt = app.add_option("--estimate-x0", horizon, "Fit x0 by least squares on the first h samples")
                        ->check(CLI::PositiveNumber);
    x0_opt->excludes(est_opt);
    app.add_option("--out", out_path, "Output CSV (default: standard output)");
    bool done = false;
    if (int code = parse_flags(app, args, out, err, done); done) return code;

    return guarded(err, [&] {
        const StateSpaceModel model = load_model(model_path);
        CsvSchema schema;
        schema.outputs_required = *est_opt ? true : false;
        auto loaded = load_csv(std::filesystem::path(inputs_path), schema);
        if (loaded.size() != 1) throw ConfigError(inputs_path + ": expected exactly one trajectory");
        const Trajectory& traj = loaded.front();
        if (traj.input_dim() != model.m()) {
            throw DimensionError(inputs_path + ": " + std::to_string(traj.input_dim()) + " input columns, the model has m = " +
                                 std::to_string(model.m()));
        }

        Matrix u = traj.inputs;
        if (model.scaler) u = model.scaler->transform_inputs(u);
        Vector x0 = Vector::Zero(model.n());
        if (*x0_opt) {
            x0 = read_x0_csv(x0_path, model.n());
        } else if (*est_opt) {
            if (traj.output_dim() != model.p()) {
                throw DimensionError(inputs_path + ": " + std::to_string(traj.output_dim()) +
                                     " output columns, the model has p = " + std::to_string(model.p()));
            }
            Matrix y = traj.outputs;
            if (model.scaler) y = model.scaler->transform_outputs(y);
            x0 = estimate_x0(model, u, y, traj.mask, horizon);
        } else if (auto it = model.x0_table.find(traj.id); it != model.x0_table.end()) {
            x0 = it->second;
        }

        Matrix y = simulate(model, u, x0);
        if (model.scaler) y = model.scaler->inverse_outputs(y);
        Trajectory result = make_trajectory(traj.id, Matrix(traj.length(), 0), y);
        result.t0 = traj.t0;
        result.dt = traj.dt;
        if (out_path.empty()) {
            write_csv(out, result);
        } else {
            write_csv(std::filesystem::path(out_path), result);
        }
        return static_cast<int>(exit_ok);
    });
}

int cmd_benchmark(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Synthetic benchmark: SIMBa against an ARX least-squares baseline", "simba benchmark"};
    BenchmarkOptions o;
    std::optional<std::uint64_t> seed_flag;
    std::string out_dir;
    app.add_option("--systems", o.systems, "Number of random systems")->capture_default_str();
    app.add_option("--n", o.n, "State dimension")->capture_default_str();
    app.add_option("--m", o.m, "Input dimension")->capture_default_str();
    app.add_option("--p", o.p, "Output dimension")->capture_default_str();
    app.add_option("--steps", o.steps, "Trajectory length")->capture_default_str();
    app.add_option("--p-switch", o.p_switch, "GBN switching probability")->capture_default_str();
    app.add_option("--noise-var", o.noise_var, "Training output noise variance")->capture_default_str();
    app.add_option("--epochs", o.epochs, "SIMBa epochs per fit")->capture_default_str();
    app.add_option("--restarts", o.restarts, "SIMBa fits per system (best by validation loss)")->capture_default_str();
    app.add_option("--lr", o.learning_rate, "SIMBa learning rate")->capture_default_str();
    app.add_option("--batch-size", o.batch_size, "SIMBa batch size")->capture_default_str();
    app.add_option("--radius-max", o.radius_max, "Largest spectral radius of the true systems")->capture_default_str();
    app.add_option("--workers", o.workers, "Worker threads (0: all cores)")->capture_default_str();
    app.add_option("--seed", seed_flag, "Base seed (default: $SIMBA_SEED or 0)");
    app.add_option("--out", out_dir, "Output directory (default: $SIMBA_OUT or simba_benchmark)");
    bool done = false;
    if (int code = parse_flags(app, args, out, err, done); done) return code;

    return guarded(err, [&] {
        if (auto s = resolve_seed(seed_flag)) o.seed = *s;
        o.out = resolve_out(out_dir, "simba_benchmark");
        const BenchmarkReport report = run_benchmark(o);
        // Console summary at 6 significant digits; quantiles.csv keeps the exact values.
        out << "method  quantile  normalized_mse  test_mse\n";
        for (const QuantileRow& q : report.quantiles) {
            out << std::left << std::setprecision(6) << std::setw(8) << q.method << ' ' << std::setw(9) << q.quantile
                << ' ' << std::setw(15) << q.normalized_mse << ' ' << q.test_mse << '\n';
        }
        const auto failed = std::count_if(report.rows.begin(), report.rows.end(),
                                          [](const BenchmarkRow& r) { return r.status == "failed"; });
        if (failed) out << failed << " method run(s) failed; see report.csv\n";
        out << "wrote " << (o.out / "report.csv").string() << " and " << (o.out / "quantiles.csv").string() << '\n';
        return static_cast<int>(exit_ok);
    });
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    static const char* usage =
        "usage: simba <command> [flags]\n"
        "commands:\n"
        "  fit        identify a model from a data manifest and a config file\n"
        "  simulate   run a saved model on an input CSV\n"
        "  benchmark  synthetic comparison against an ARX baseline\n"
        "Run 'simba <command> --help' for the flags of a command.\n";
    if (args.empty()) {
        err << usage;
        return exit_usage;
    }
    const std::string& command = args.front();
    const std::vector<std::string> rest(args.begin() + 1, args.end());
    if (command == "fit") return cmd_fit(rest, out, err);
    if (command == "simulate") return cmd_simulate(rest, out, err);
    if (command == "benchmark") return cmd_benchmark(rest, out, err);
    if (command == "--help" || command == "-h" || command == "help") {
        out << usage;
        return exit_ok;
    }
    err << "unknown command '" << command << "'\n" << usage;
    return exit_usage;
}

}  // namespace simba
