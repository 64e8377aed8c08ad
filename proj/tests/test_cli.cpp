#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "simba/cli.hpp"
#include "simba/config.hpp"
#include "simba/csv.hpp"
#include "simba/generators.hpp"
#include "simba/model_io.hpp"
#include "simba/trainer.hpp"
#include "test_util.hpp"

namespace simba {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

// Drops the last CSV column (wall_time) of every line.
std::string without_last_column(const std::string& text) {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + '\n';
    return out;
}

struct Outcome {
    int code;
    std::string out, err;
};

Outcome run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
   protected:
    void SetUp() override {
        unsetenv("SIMBA_SEED");
        unsetenv("SIMBA_OUT");
        dir_ = fs::temp_directory_path() /
               ("simba_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override {
        unsetenv("SIMBA_SEED");
        unsetenv("SIMBA_OUT");
        fs::remove_all(dir_);
    }

    // Noiseless data from `truth` with x0 = 0: train (2 files), val, test.
    fs::path write_dataset(const StateSpaceModel& truth, Index steps) {
        Rng rng(3);
        for (const char* id : {"a", "b", "v", "t"}) {
            const Matrix u = generate_gbn(steps, truth.m(), 0.2, rng);
            write_csv(dir_ / (std::string(id) + ".csv"), make_trajectory(id, u, simulate(truth, u, Vector::Zero(truth.n()))));
        }
        const fs::path manifest = dir_ / "manifest.txt";
        std::ofstream(manifest) << "train = a.csv\ntrain = b.csv\nval = v.csv\ntest = t.csv\n";
        return manifest;
    }

    fs::path write_config(const std::string& text) {
        const fs::path p = dir_ / "fit.conf";
        std::ofstream(p) << text;
        return p;
    }

    fs::path dir_;
};

StateSpaceModel scalar_model() {
    StateSpaceModel m;
    m.A = Matrix::Constant(1, 1, 0.5);
    m.B = Matrix::Constant(1, 1, 1.0);
    m.C = Matrix::Constant(1, 1, 1.0);
    m.D = Matrix::Zero(1, 1);
    m.stability = StabilityMode::free;
    return m;
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run({}).code, exit_usage);
    EXPECT_EQ(run({"nonsense"}).code, exit_usage);
    EXPECT_EQ(run({"fit", "--bogus"}).code, exit_usage);
    EXPECT_EQ(run({"fit", "--config", "x"}).code, exit_usage);  // --data missing
    EXPECT_EQ(run({"--help"}).code, exit_ok);
    EXPECT_EQ(run({"simulate", "--help"}).code, exit_ok);
}

TEST_F(Cli, FitWritesArtifacts) {
    const auto manifest = write_dataset(scalar_model(), 40);
    const auto config = write_config("state_dim = 1\nmax_epochs = 30\nlearning_rate = 0.01\ninit_epochs = 10\n");
    const auto out = dir_ / "fit";
    const Outcome r = run({"fit", "--data", manifest.string(), "--config", config.string(), "--out", out.string()});
    ASSERT_EQ(r.code, exit_ok) << r.err;
    EXPECT_NE(r.out.find("status=ok"), std::string::npos);
    const StateSpaceModel model = load_model(out / "model.txt");
    EXPECT_EQ(model.n(), 1);
    ASSERT_TRUE(model.scaler.has_value());  // standardize defaults on
    std::ostringstream again;
    write_model(again, model);
    EXPECT_EQ(again.str(), slurp(out / "model.txt"));

    CsvSchema history;
    history.time_column = "epoch";
    history.inputs = {"train_loss"};
    history.outputs = {"val_loss", "spectral_radius"};
    const auto h = load_csv(out / "history.csv", history);
    ASSERT_EQ(h.size(), 1u);
    EXPECT_EQ(h[0].length(), 30);
    EXPECT_EQ(load_fit_settings(out / "config.txt").train.max_epochs, 30);
}

TEST_F(Cli, MissingDataFile) {
    const auto config = write_config("state_dim = 1\n");
    const Outcome r = run({"fit", "--data", (dir_ / "none.txt").string(), "--config", config.string(), "--out",
                       (dir_ / "o").string()});
    EXPECT_EQ(r.code, exit_usage);
    EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, BadConfigIsUsageError) {
    const auto manifest = write_dataset(scalar_model(), 20);
    const auto config = write_config("state_dim = 1\nlearning_rate = -1\n");
    EXPECT_EQ(run({"fit", "--data", manifest.string(), "--config", config.string(), "--out", (dir_ / "o").string()}).code,
              exit_usage);
}

TEST_F(Cli, AbortedFitExitsThree) {
    Rng rng(9);
    const auto manifest = write_dataset(random_stable_system(3, 1, 1, 0.97, rng), 300);
    const auto config = write_config(
        "state_dim = 3\nstability = free\nlearning_rate = 5\ngrad_clip = none\nmax_epochs = 200\nstandardize = false\n");
    const auto out = dir_ / "fit";
    const Outcome r = run({"fit", "--data", manifest.string(), "--config", config.string(), "--out", out.string()});
    EXPECT_EQ(r.code, exit_numerical);
    EXPECT_NE(r.out.find("status=aborted"), std::string::npos);
    EXPECT_TRUE(fs::exists(out / "model.txt"));
}

TEST_F(Cli, FitIsDeterministicAndHonoursEnvironment) {
    const auto manifest = write_dataset(scalar_model(), 30);
    const auto config = write_config("state_dim = 2\nmax_epochs = 20\ninit_epochs = 10\ndropout = 0.1\n");
    const auto fit_to = [&](const fs::path& out, std::vector<std::string> extra) {
        std::vector<std::string> args{"fit", "--data", manifest.string(), "--config", config.string()};
        if (!out.empty()) args.insert(args.end(), {"--out", out.string()});
        args.insert(args.end(), extra.begin(), extra.end());
        const Outcome r = run(args);
        EXPECT_EQ(r.code, exit_ok) << r.err;
    };
    fit_to(dir_ / "one", {"--seed", "5"});
    fit_to(dir_ / "two", {"--seed", "5"});
    for (const char* f : {"model.txt", "config.txt"}) EXPECT_EQ(slurp(dir_ / "one" / f), slurp(dir_ / "two" / f));
    EXPECT_EQ(without_last_column(slurp(dir_ / "one/history.csv")),
              without_last_column(slurp(dir_ / "two/history.csv")));

    setenv("SIMBA_SEED", "5", 1);
    setenv("SIMBA_OUT", (dir_ / "env").string().c_str(), 1);
    fit_to({}, {});
    EXPECT_EQ(slurp(dir_ / "env/model.txt"), slurp(dir_ / "one/model.txt"));

    fit_to(dir_ / "flag", {"--seed", "6"});  // the flag wins over SIMBA_SEED
    EXPECT_NE(slurp(dir_ / "flag/model.txt"), slurp(dir_ / "one/model.txt"));
    EXPECT_EQ(load_fit_settings(dir_ / "flag/config.txt").train.seed, 6u);
}

TEST_F(Cli, SimulateFeedthrough) {
    StateSpaceModel m;
    m.A = Matrix::Zero(1, 1);
    m.B = Matrix::Zero(1, 2);
    m.C = Matrix::Zero(2, 1);
    m.D = Matrix::Identity(2, 2);
    m.stability = StabilityMode::free;
    save_model(dir_ / "m.txt", m);
    std::ofstream(dir_ / "u.csv") << "t,u1,u2\n0,1.5,-2\n1,0.25,3\n2,7,8\n";
    const Outcome r = run({"simulate", "--model", (dir_ / "m.txt").string(), "--inputs", (dir_ / "u.csv").string()});
    ASSERT_EQ(r.code, exit_ok) << r.err;
    EXPECT_EQ(r.out, "t,y1,y2\n0,1.5,-2\n1,0.25,3\n2,7,8\n");
}

TEST_F(Cli, SimulateScalarExample) {
    save_model(dir_ / "m.txt", scalar_model());
    std::ofstream(dir_ / "u.csv") << "t,u1\n0,1\n1,0\n2,0\n";
    const auto out = dir_ / "y.csv";
    const Outcome r = run({"simulate", "--model", (dir_ / "m.txt").string(), "--inputs", (dir_ / "u.csv").string(), "--out",
                       out.string()});
    ASSERT_EQ(r.code, exit_ok) << r.err;
    const auto y = load_csv(out);
    ASSERT_EQ(y.size(), 1u);
    EXPECT_EQ(y[0].outputs(0, 0), 0.0);
    EXPECT_EQ(y[0].outputs(1, 0), 1.0);
    EXPECT_EQ(y[0].outputs(2, 0), 0.5);

    std::ofstream(dir_ / "x0.csv") << "x1\n2\n";
    const Outcome with_x0 = run({"simulate", "--model", (dir_ / "m.txt").string(), "--inputs", (dir_ / "u.csv").string(),
                             "--x0", (dir_ / "x0.csv").string()});
    EXPECT_EQ(with_x0.out, "t,y1\n0,2\n1,2\n2,1\n");
}

TEST_F(Cli, SimulateEstimatesInitialState) {
    Rng rng(4);
    const StateSpaceModel truth = random_stable_system(3, 2, 2, 0.9, rng);
    save_model(dir_ / "m.txt", truth);
    const Vector x0 = test::randn(3, 1, rng);
    const Matrix u = generate_gbn(40, 2, 0.3, rng);
    write_csv(dir_ / "d.csv", make_trajectory("d", u, simulate(truth, u, x0)));
    const auto out = dir_ / "y.csv";
    const Outcome r = run({"simulate", "--model", (dir_ / "m.txt").string(), "--inputs", (dir_ / "d.csv").string(),
                       "--estimate-x0", "20", "--out", out.string()});
    ASSERT_EQ(r.code, exit_ok) << r.err;
    const Matrix y = load_csv(out)[0].outputs;
    const Vector recovered = estimate_x0(truth, u, simulate(truth, u, x0), Mask::Ones(40, 2), 20);
    EXPECT_LT((recovered - x0).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LT((y - simulate(truth, u, x0)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST_F(Cli, SimulateDimensionMismatch) {
    save_model(dir_ / "m.txt", scalar_model());
    std::ofstream(dir_ / "u.csv") << "t,u1,u2\n0,1,1\n";
    EXPECT_EQ(run({"simulate", "--model", (dir_ / "m.txt").string(), "--inputs", (dir_ / "u.csv").string()}).code,
              exit_usage);
    std::ofstream(dir_ / "x0.csv") << "x1,x2\n1,2\n";
    std::ofstream(dir_ / "v.csv") << "t,u1\n0,1\n";
    EXPECT_EQ(run({"simulate", "--model", (dir_ / "m.txt").string(), "--inputs", (dir_ / "v.csv").string(), "--x0",
                   (dir_ / "x0.csv").string()})
                  .code,
              exit_usage);
}

std::vector<std::string> tiny_benchmark(const fs::path& out, const std::string& epochs) {
    return {"benchmark", "--systems", "2", "--n", "2", "--m", "1", "--p", "1", "--steps", "60", "--epochs",
            epochs, "--restarts", "2", "--workers", "2", "--seed", "3", "--out", out.string()};
}

TEST_F(Cli, BenchmarkWithoutTrainingReportsInitialModel) {
    const auto out = dir_ / "bench";
    const Outcome r = run(tiny_benchmark(out, "0"));
    ASSERT_EQ(r.code, exit_ok) << r.err;

    CsvSchema report;
    report.time_column = "system";
    report.id_column = "method";
    report.inputs = {"seed"};
    report.outputs = {"test_mse", "normalized_mse", "spectral_radius"};
    const auto rows = load_csv(out / "report.csv", report);
    ASSERT_EQ(rows.size(), 2u);  // arx, simba
    for (const auto& method : rows) {
        EXPECT_EQ(method.length(), 2);
        EXPECT_GE(method.outputs.col(1).minCoeff(), 1.0);
    }
    for (Index s = 0; s < 2; ++s) EXPECT_EQ(std::min(rows[0].outputs(s, 1), rows[1].outputs(s, 1)), 1.0);

    CsvSchema quantiles;
    quantiles.time_column = "quantile";
    quantiles.id_column = "method";
    quantiles.outputs = {"normalized_mse", "test_mse"};
    EXPECT_EQ(load_csv(out / "quantiles.csv", quantiles).size(), 2u);

    for (int i = 0; i < 2; ++i) {
        const auto sys = out / ("system_" + std::to_string(i));
        // Zero epochs: the saved model is the initial model of its restart seed.
        const FitSettings settings = load_fit_settings(sys / "simba.conf");
        Rng rng(derive_seed(settings.train.seed, 0, SeedRole::init));
        const StateSpaceModel initial = model_from_leaves(random_leaves(2, 1, 1, settings.train, rng), settings.train);
        const StateSpaceModel saved = load_model(sys / "simba.txt");
        EXPECT_EQ(saved.A, initial.A);
        EXPECT_EQ(saved.B, initial.B);

        // Noise only on training data: validation and test files are the exact noiseless response.
        const StateSpaceModel truth = load_model(sys / "truth.txt");
        for (const char* f : {"val.csv", "test.csv"}) {
            const Trajectory t = load_csv(sys / f)[0];
            EXPECT_EQ(t.outputs, simulate(truth, t.inputs, Vector::Zero(2))) << f;
        }
        const Trajectory train = load_csv(sys / "train.csv")[0];
        EXPECT_GT((train.outputs - simulate(truth, train.inputs, Vector::Zero(2))).norm(), 1.0);

        const Dataset ds = load_manifest(sys / "manifest.txt");
        EXPECT_EQ(ds.trajectories.size(), 3u);
        EXPECT_TRUE(ds.find("test").known_x0.has_value());
    }
}

TEST_F(Cli, BenchmarkIsDeterministic) {
    ASSERT_EQ(run(tiny_benchmark(dir_ / "one", "30")).code, exit_ok);
    setenv("SIMBA_OUT", (dir_ / "two").string().c_str(), 1);
    auto args = tiny_benchmark(dir_ / "unused", "30");
    args.resize(args.size() - 2);  // drop --out
    ASSERT_EQ(run(args).code, exit_ok);
    EXPECT_FALSE(fs::exists(dir_ / "unused"));
    EXPECT_EQ(without_last_column(slurp(dir_ / "one/report.csv")), without_last_column(slurp(dir_ / "two/report.csv")));
    EXPECT_EQ(slurp(dir_ / "one/quantiles.csv"), slurp(dir_ / "two/quantiles.csv"));
    for (const char* f : {"simba.txt", "arx.txt", "train.csv", "truth.txt", "simba.conf"}) {
        EXPECT_EQ(slurp(dir_ / "one/system_1" / f), slurp(dir_ / "two/system_1" / f)) << f;
    }
}

TEST_F(Cli, BenchmarkRejectsBadOptions) {
    EXPECT_EQ(run({"benchmark", "--systems", "0", "--out", (dir_ / "b").string()}).code, exit_usage);
    EXPECT_EQ(run({"benchmark", "--noise-var", "-1", "--out", (dir_ / "b").string()}).code, exit_usage);
}

}  // namespace
}  // namespace simba
