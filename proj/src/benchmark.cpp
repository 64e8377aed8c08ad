#include "simba/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <thread>
#include <tuple>

#include "simba/config.hpp"
#include "simba/csv.hpp"
#include "simba/errors.hpp"
#include "simba/generators.hpp"
#include "simba/linalg.hpp"
#include "simba/log.hpp"
#include "simba/model_io.hpp"
#include "simba/trainer.hpp"

namespace simba {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

double mse(const Matrix& a, const Matrix& b) { return (a - b).squaredNorm() / static_cast<double>(a.size()); }

struct SystemResult {
    BenchmarkRow simba, arx;
};

TrainConfig simba_config(const BenchmarkOptions& o, std::uint64_t seed) {
    TrainConfig c;
    c.state_dim = o.n;
    c.max_epochs = o.epochs;
    c.batch_size = o.batch_size;
    c.learning_rate = o.learning_rate;
    c.learn_x0 = false;  // every trajectory starts from a known x0 = 0
    c.stability = StabilityMode::schur;
    c.seed = seed;
    return c;
}

void ensure_file(const std::filesystem::path& path, const auto& write) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    write(out);
}

SystemResult run_system(const BenchmarkOptions& o, int index) {
    const auto idx = static_cast<std::uint64_t>(index);
    const std::uint64_t system_seed = derive_seed(o.seed, idx, SeedRole::system);
    Rng system_rng(system_seed);
    const StateSpaceModel truth = random_stable_system(o.n, o.m, o.p, o.radius_max, system_rng);
    const Vector zero = Vector::Zero(o.n);

    auto make = [&](const char* id, SeedRole role) {
        Rng rng(derive_seed(o.seed, idx, role));
        const Matrix u = generate_gbn(o.steps, o.m, o.p_switch, rng);
        Trajectory t = make_trajectory(id, u, simulate(truth, u, zero));
        t.known_x0 = zero;
        return t;
    };
    Trajectory train = make("train", SeedRole::train_input);
    Rng noise_rng(derive_seed(o.seed, idx, SeedRole::noise));
    train = add_output_noise(train, std::sqrt(o.noise_var), noise_rng);
    Dataset ds;
    ds.add(std::move(train), Split::train);
    ds.add(make("val", SeedRole::val_input), Split::val);
    ds.add(make("test", SeedRole::test_input), Split::test);
    const Trajectory& test = ds.find("test");

    SystemResult r;
    r.simba = BenchmarkRow{index, system_seed, "simba", kInf, kInf, kInf, 0.0, "failed"};
    r.arx = BenchmarkRow{index, system_seed, "arx", kInf, kInf, kInf, 0.0, "failed"};

    // SIMBa: best of the restarts by validation loss.
    const std::uint64_t fit_seed = derive_seed(o.seed, idx, SeedRole::fit);
    std::optional<FitResult> best;
    std::optional<TrainConfig> best_config;
    const auto simba_start = Clock::now();
    for (int k = 0; k < o.restarts; ++k) {
        const TrainConfig config = simba_config(o, derive_seed(fit_seed, static_cast<std::uint64_t>(k), SeedRole::fit));
        try {
            FitResult res = fit(ds, config);
            if (!best || res.best_val_loss < best->best_val_loss) {
                best = std::move(res);
                best_config = config;
            }
        } catch (const Error& e) {
            log_warning("benchmark system " + std::to_string(index) + " restart " + std::to_string(k) + ": " + e.what());
        }
    }
    r.simba.wall_time = seconds_since(simba_start);
    if (best) {
        try {
            r.simba.test_mse = mse(simulate(best->best_model, test.inputs, zero), test.outputs);
            r.simba.spectral_radius = spectral_radius(best->best_model.A);
            r.simba.status = best->aborted ? "aborted" : "ok";
        } catch (const Error& e) {
            log_warning("benchmark system " + std::to_string(index) + " simba test: " + e.what());
        }
    }

    // ARX of order n with direct feedthrough (the true systems have D != 0).
    std::optional<ArxModel> arx;
    const auto arx_start = Clock::now();
    try {
        ArxOptions ao;
        ao.na = static_cast<int>(o.n);
        ao.nb = static_cast<int>(o.n);
        ao.feedthrough = true;
        arx = fit_arx_ls(ds, ao);
        r.arx.spectral_radius = arx_spectral_radius(*arx);
        r.arx.test_mse = mse(simulate_arx(*arx, test.inputs), test.outputs);
        r.arx.status = "ok";
    } catch (const Error& e) {
        r.arx.test_mse = kInf;
        log_warning("benchmark system " + std::to_string(index) + " arx: " + e.what());
    }
    r.arx.wall_time = seconds_since(arx_start);

    const double floor = std::min(r.simba.test_mse, r.arx.test_mse);
    for (BenchmarkRow* row : {&r.simba, &r.arx}) {
        if (!std::isfinite(row->test_mse)) {
            row->normalized_mse = kInf;
        } else if (floor > 0.0) {
            row->normalized_mse = row->test_mse / floor;
        } else {
            row->normalized_mse = row->test_mse == 0.0 ? 1.0 : kInf;
        }
    }
    if (!std::isfinite(r.simba.test_mse)) r.simba.status = "failed";

    if (!o.out.empty()) {
        const auto dir = o.out / ("system_" + std::to_string(index));
        std::filesystem::create_directories(dir);
        for (const Trajectory& t : ds.trajectories) write_csv(dir / (t.id + ".csv"), t);
        write_manifest(dir / "manifest.txt",
                       {{Split::train, "train.csv"}, {Split::val, "val.csv"}, {Split::test, "test.csv"}},
                       {{"train", zero}, {"val", zero}, {"test", zero}});
        save_model(dir / "truth.txt", truth);
        if (best) {
            save_model(dir / "simba.txt", best->best_model);
            ensure_file(dir / "simba.conf", [&](std::ostream& out) {
                write_fit_settings(out, FitSettings{*best_config, false});
            });
        }
        if (arx) ensure_file(dir / "arx.txt", [&](std::ostream& out) { write_arx(out, *arx); });
    }
    return r;
}

}  // namespace

void BenchmarkOptions::validate() const {
    if (systems < 1) throw ConfigError("benchmark: systems must be at least 1");
    if (n < 1 || m < 1 || p < 1) throw ConfigError("benchmark: n, m and p must be at least 1");
    if (steps < 2) throw ConfigError("benchmark: steps must be at least 2");
    if (!(p_switch >= 0.0 && p_switch <= 1.0)) throw ConfigError("benchmark: p_switch must lie in [0, 1]");
    if (!(noise_var >= 0.0) || !std::isfinite(noise_var)) throw ConfigError("benchmark: noise_var must be non-negative");
    if (epochs < 0) throw ConfigError("benchmark: epochs must be non-negative");
    if (restarts < 1) throw ConfigError("benchmark: restarts must be at least 1");
    if (!(learning_rate > 0.0)) throw ConfigError("benchmark: learning_rate must be positive");
    if (batch_size < 1) throw ConfigError("benchmark: batch_size must be at least 1");
    if (!(radius_max > 0.0 && radius_max < 1.0)) throw ConfigError("benchmark: radius_max must lie in (0, 1)");
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw ContractError("quantile of an empty set");
    if (!(q >= 0.0 && q <= 1.0)) throw ContractError("quantile level must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double w = pos - static_cast<double>(lo);
    if (w == 0.0 || values[lo] == values[hi]) return values[lo];
    return values[lo] + w * (values[hi] - values[lo]);
}

double arx_spectral_radius(const ArxModel& model) {
    model.validate();
    const Index p = model.p();
    const Index size = p * model.na;
    Matrix companion = Matrix::Zero(size, size);
    for (int i = 0; i < model.na; ++i) companion.block(0, i * p, p, p) = model.a[static_cast<std::size_t>(i)];
    if (model.na > 1) companion.block(p, 0, size - p, size - p).setIdentity();
    return spectral_radius(companion);
}

BenchmarkReport run_benchmark(const BenchmarkOptions& options) {
    options.validate();
    if (!options.out.empty()) std::filesystem::create_directories(options.out);

    std::vector<SystemResult> results(static_cast<std::size_t>(options.systems));
    std::vector<std::string> errors(results.size());
    unsigned workers = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(options.systems));

    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < options.systems; i = next++) {
            try {
                results[static_cast<std::size_t>(i)] = run_system(options, i);
            } catch (const std::exception& e) {
                errors[static_cast<std::size_t>(i)] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const std::string& e : errors) {
        // Failures inside a method are recorded in the rows; anything else (I/O) stops the run.
        if (!e.empty()) throw ConfigError("benchmark: " + e);
    }

    BenchmarkReport report;
    for (const SystemResult& r : results) {
        report.rows.push_back(r.arx);
        report.rows.push_back(r.simba);
    }
    std::sort(report.rows.begin(), report.rows.end(), [](const BenchmarkRow& a, const BenchmarkRow& b) {
        return std::tie(a.system, a.method) < std::tie(b.system, b.method);
    });
    for (const char* method : {"arx", "simba"}) {
        std::vector<double> normalized, raw;
        for (const BenchmarkRow& row : report.rows) {
            if (row.method != method) continue;
            normalized.push_back(row.normalized_mse);
            raw.push_back(row.test_mse);
        }
        for (double q : {0.25, 0.5, 0.75}) {
            report.quantiles.push_back(QuantileRow{method, q, quantile(normalized, q), quantile(raw, q)});
        }
    }

    if (!options.out.empty()) {
        ensure_file(options.out / "report.csv", [&](std::ostream& out) { write_report_csv(out, report.rows); });
        ensure_file(options.out / "quantiles.csv", [&](std::ostream& out) { write_quantiles_csv(out, report.quantiles); });
    }
    return report;
}

void write_report_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
    out << "system,seed,method,test_mse,normalized_mse,spectral_radius,status,wall_time\n";
    for (const BenchmarkRow& r : rows) {
        out << r.system << ',' << r.seed << ',' << r.method << ',' << format_double(r.test_mse) << ','
            << format_double(r.normalized_mse) << ',' << format_double(r.spectral_radius) << ',' << r.status << ','
            << format_double(r.wall_time) << '\n';
    }
}

void write_quantiles_csv(std::ostream& out, const std::vector<QuantileRow>& rows) {
    out << "method,quantile,normalized_mse,test_mse\n";
    for (const QuantileRow& r : rows) {
        out << r.method << ',' << format_double(r.quantile) << ',' << format_double(r.normalized_mse) << ','
            << format_double(r.test_mse) << '\n';
    }
}

}  // namespace simba
