#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "simba/arx.hpp"
#include "simba/matrix.hpp"

namespace simba {

struct BenchmarkOptions {
    int systems = 10;
    Index n = 5;
    Index m = 3;
    Index p = 3;
    Index steps = 300;
    double p_switch = 0.1;
    double noise_var = 0.25;
    int epochs = 50000;
    /// SIMBa fits per system; the one with the lowest validation loss is reported.
    int restarts = 3;
    double learning_rate = 1e-3;
    int batch_size = 1;
    double radius_max = 0.97;
    std::uint64_t seed = 0;
    /// Worker threads; 0 means hardware concurrency.
    unsigned workers = 0;
    /// Output directory for generated data, models and tables; empty writes nothing.
    std::filesystem::path out;

    void validate() const;
};

struct BenchmarkRow {
    int system = 0;
    std::uint64_t seed = 0;
    std::string method;  // "simba" or "arx"
    double test_mse = 0.0;
    double normalized_mse = 0.0;  // test_mse over the best test_mse of the system
    double spectral_radius = 0.0;
    double wall_time = 0.0;
    std::string status;  // "ok", "aborted" (kept best snapshot) or "failed"
};

struct QuantileRow {
    std::string method;
    double quantile = 0.0;
    double normalized_mse = 0.0;
    double test_mse = 0.0;
};

struct BenchmarkReport {
    std::vector<BenchmarkRow> rows;        // sorted by (system, method)
    std::vector<QuantileRow> quantiles;    // 0.25, 0.5, 0.75 per method
};

/// Linear-interpolation quantile of `values` (copied and sorted); q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Spectral radius of the ARX companion matrix (free-run dynamics).
double arx_spectral_radius(const ArxModel& model);

/// Synthetic benchmark: for every system draw a random stable truth, excite
/// it with GBN inputs from x0 = 0 for train, validation and test trajectories,
/// add output noise to the training trajectory only, then fit SIMBa (schur
/// mode, best of `restarts` by validation loss) and an ARX baseline of order n
/// with feedthrough, scoring both on the noise-free test trajectory.
///
/// A failing method is recorded with status "failed" and an infinite test MSE;
/// the run continues. Systems run in parallel, each from its own derived seed,
/// so the report does not depend on the worker count.
BenchmarkReport run_benchmark(const BenchmarkOptions& options);

void write_report_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows);
void write_quantiles_csv(std::ostream& out, const std::vector<QuantileRow>& rows);

}  // namespace simba
