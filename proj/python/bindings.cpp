#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <limits>

#include "simba/arx.hpp"
#include "simba/benchmark.hpp"
#include "simba/config.hpp"
#include "simba/csv.hpp"
#include "simba/errors.hpp"
#include "simba/generators.hpp"
#include "simba/linalg.hpp"
#include "simba/loss.hpp"
#include "simba/model_io.hpp"
#include "simba/schur.hpp"
#include "simba/tape.hpp"
#include "simba/trainer.hpp"

namespace py = pybind11;
using namespace simba;

namespace {

// NaN outputs become masked cells.
Trajectory trajectory_from_arrays(const std::string& id, const Matrix& inputs, const Matrix& outputs,
                                  const std::optional<Vector>& known_x0) {
    Trajectory t = make_trajectory(id, inputs, outputs);
    t.known_x0 = known_x0;
    t.validate();
    return t;
}

// Loss and gradients of one trajectory's simulation error through the Schur parametrization.
py::dict schur_loss_and_gradients(const SchurParams& params, const Matrix& B, const Matrix& C, const Matrix& D,
                                  const Matrix& inputs, const Matrix& outputs, const Vector& x0) {
    const Trajectory t = make_trajectory("t", inputs, outputs);
    Tape tape;
    SchurVars sv{tape.leaf(params.W, "W"), tape.leaf(params.V, "V"),
                 tape.leaf(Matrix::Constant(1, 1, params.eps_tilde), "eps_tilde")};
    ModelVars vars;
    vars.A = build_A(tape, sv, params.gamma);
    vars.B = tape.leaf(B, "B");
    vars.C = tape.leaf(C, "C");
    vars.D = tape.leaf(D, "D");
    const Var x = tape.leaf(Matrix(x0), "x0");
    const Var loss = trajectory_loss(tape, vars, t, x, t.mask, LossTag::mse, Normalization::per_step);
    const auto g = tape.backward(loss);
    py::dict out;
    out["loss"] = tape.scalar(loss);
    out["W"] = g[0];
    out["V"] = g[1];
    out["eps_tilde"] = g[2](0, 0);
    out["B"] = g[3];
    out["C"] = g[4];
    out["D"] = g[5];
    out["x0"] = Vector(g[6]);
    return out;
}

}  // namespace

PYBIND11_MODULE(_simba, m) {
    m.doc() = "Stable linear state-space identification";

    auto base = py::register_exception<Error>(m, "SimbaError", PyExc_RuntimeError);
    py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
    py::register_exception<SingularMatrixError>(m, "SingularMatrixError", base.ptr());
    py::register_exception<ContractError>(m, "ContractError", base.ptr());
    py::register_exception<OverflowError>(m, "OverflowError", base.ptr());
    py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
    py::register_exception<DivergenceError>(m, "DivergenceError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

    // linalg
    m.def("solve", [](const Matrix& a, const Matrix& b) { return solve(a, b).solution; }, py::arg("m"), py::arg("r"));
    m.def("spectral_radius", &spectral_radius, py::arg("m"));

    // schur
    py::class_<SchurParams>(m, "SchurParams")
        .def(py::init([](Matrix W, Matrix V, double eps_tilde, double gamma) {
                 SchurParams p{std::move(W), std::move(V), eps_tilde, gamma};
                 p.validate();
                 return p;
             }),
             py::arg("W"), py::arg("V"), py::arg("eps_tilde") = std::log(1e-3), py::arg("gamma") = 1.0)
        .def_readwrite("W", &SchurParams::W)
        .def_readwrite("V", &SchurParams::V)
        .def_readwrite("eps_tilde", &SchurParams::eps_tilde)
        .def_readwrite("gamma", &SchurParams::gamma)
        .def_property_readonly("n", &SchurParams::n);
    m.def(
        "default_schur_params",
        [](Index n, double gamma, std::uint64_t seed) {
            Rng rng(seed);
            return default_schur_params(n, gamma, rng);
        },
        py::arg("n"), py::arg("gamma") = 1.0, py::arg("seed") = 0);
    m.def("build_A", py::overload_cast<const SchurParams&>(&build_A), py::arg("params"));
    m.def("lmi_certificate", &lmi_certificate, py::arg("params"), py::arg("A"));
    m.def("schur_loss_and_gradients", &schur_loss_and_gradients, py::arg("params"), py::arg("B"), py::arg("C"),
          py::arg("D"), py::arg("inputs"), py::arg("outputs"), py::arg("x0"));

    // state-space models
    py::enum_<StabilityMode>(m, "StabilityMode").value("free", StabilityMode::free).value("schur", StabilityMode::schur);
    py::class_<Scaler>(m, "Scaler")
        .def_readonly("u_mean", &Scaler::u_mean)
        .def_readonly("u_std", &Scaler::u_std)
        .def_readonly("y_mean", &Scaler::y_mean)
        .def_readonly("y_std", &Scaler::y_std);
    py::class_<StateSpaceModel>(m, "StateSpaceModel")
        .def(py::init([](Matrix A, Matrix B, Matrix C, Matrix D) {
                 StateSpaceModel s;
                 s.A = std::move(A);
                 s.B = std::move(B);
                 s.C = std::move(C);
                 s.D = std::move(D);
                 s.validate();
                 return s;
             }),
             py::arg("A"), py::arg("B"), py::arg("C"), py::arg("D"))
        .def_readwrite("A", &StateSpaceModel::A)
        .def_readwrite("B", &StateSpaceModel::B)
        .def_readwrite("C", &StateSpaceModel::C)
        .def_readwrite("D", &StateSpaceModel::D)
        .def_readwrite("x0_table", &StateSpaceModel::x0_table)
        .def_readwrite("stability", &StateSpaceModel::stability)
        .def_readwrite("gamma", &StateSpaceModel::gamma)
        .def_readonly("scaler", &StateSpaceModel::scaler)
        .def_property_readonly("n", &StateSpaceModel::n)
        .def_property_readonly("m", &StateSpaceModel::m)
        .def_property_readonly("p", &StateSpaceModel::p);
    m.def("simulate", &simulate, py::arg("model"), py::arg("inputs"), py::arg("x0"));
    m.def(
        "estimate_x0",
        [](const StateSpaceModel& model, const Matrix& inputs, const Matrix& outputs, Index horizon) {
            const Trajectory t = make_trajectory("t", inputs, outputs);
            return estimate_x0(model, t, horizon);
        },
        py::arg("model"), py::arg("inputs"), py::arg("outputs"), py::arg("horizon"));
    m.def("save_model", &save_model, py::arg("path"), py::arg("model"));
    m.def("load_model", &load_model, py::arg("path"));

    // data
    py::enum_<Split>(m, "Split").value("train", Split::train).value("val", Split::val).value("test", Split::test);
    py::class_<Trajectory>(m, "Trajectory")
        .def(py::init(&trajectory_from_arrays), py::arg("id"), py::arg("inputs"), py::arg("outputs"),
             py::arg("known_x0") = std::nullopt)
        .def_readonly("id", &Trajectory::id)
        .def_readonly("inputs", &Trajectory::inputs)
        .def_readonly("outputs", &Trajectory::outputs)
        .def_property_readonly("mask", [](const Trajectory& t) { return Eigen::MatrixXi(t.mask.cast<int>()); })
        .def_readonly("known_x0", &Trajectory::known_x0);
    py::class_<Dataset>(m, "Dataset")
        .def(py::init<>())
        .def("add", &Dataset::add, py::arg("trajectory"), py::arg("split"))
        .def("ids", [](const Dataset& d, Split s) {
            std::vector<std::string> ids;
            for (const auto* t : d.in_split(s)) ids.push_back(t->id);
            return ids;
        })
        .def("__len__", [](const Dataset& d) { return d.trajectories.size(); });
    m.def("load_manifest", [](const std::filesystem::path& p) { return load_manifest(p); }, py::arg("path"));
    m.def("standardize", &standardize, py::arg("dataset"));
    m.def(
        "generate_gbn",
        [](Index length, Index dims, double p_switch, std::uint64_t seed) {
            Rng rng(seed);
            return generate_gbn(length, dims, p_switch, rng);
        },
        py::arg("length"), py::arg("dims"), py::arg("p_switch") = 0.1, py::arg("seed") = 0);
    m.def(
        "random_stable_system",
        [](Index n, Index mm, Index p, double radius_max, std::uint64_t seed) {
            Rng rng(seed);
            return random_stable_system(n, mm, p, radius_max, rng);
        },
        py::arg("n"), py::arg("m"), py::arg("p"), py::arg("radius_max") = 0.97, py::arg("seed") = 0);
    m.def(
        "masked_loss",
        [](const Matrix& predicted, const Matrix& observed, const std::string& loss, const std::string& normalization) {
            const Trajectory t = make_trajectory("t", Matrix(observed.rows(), 0), observed);
            return masked_loss(predicted, t.observed_outputs(), t.mask, parse_loss(loss),
                               parse_normalization(normalization));
        },
        py::arg("predicted"), py::arg("observed"), py::arg("loss") = "mse", py::arg("normalization") = "per-step",
        "NaN cells of `observed` are masked.");

    // trainer
    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("state_dim", &TrainConfig::state_dim)
        .def_readwrite("max_epochs", &TrainConfig::max_epochs)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("init_learning_rate", &TrainConfig::init_learning_rate)
        .def_readwrite("init_epochs", &TrainConfig::init_epochs)
        .def_readwrite("dropout", &TrainConfig::dropout)
        .def_readwrite("learn_x0", &TrainConfig::learn_x0)
        .def_readwrite("learn_eps_tilde", &TrainConfig::learn_eps_tilde)
        .def_readwrite("gamma", &TrainConfig::gamma)
        .def_readwrite("stability", &TrainConfig::stability)
        .def_readwrite("grad_clip", &TrainConfig::grad_clip)
        .def_readwrite("init_grad_clip", &TrainConfig::init_grad_clip)
        .def_readwrite("x0_horizon", &TrainConfig::x0_horizon)
        .def_readwrite("seed", &TrainConfig::seed)
        .def("validate", &TrainConfig::validate);
    py::class_<EpochRecord>(m, "EpochRecord")
        .def_readonly("epoch", &EpochRecord::epoch)
        .def_readonly("train_loss", &EpochRecord::train_loss)
        .def_readonly("val_loss", &EpochRecord::val_loss)
        .def_readonly("spectral_radius", &EpochRecord::spectral_radius);
    py::class_<FitResult>(m, "FitResult")
        .def_readonly("best_model", &FitResult::best_model)
        .def_readonly("best_params", &FitResult::best_params)
        .def_readonly("best_val_loss", &FitResult::best_val_loss)
        .def_readonly("best_epoch", &FitResult::best_epoch)
        .def_readonly("history", &FitResult::history)
        .def_readonly("epochs_run", &FitResult::epochs_run)
        .def_readonly("aborted", &FitResult::aborted)
        .def_readonly("diagnostic", &FitResult::diagnostic);
    m.def(
        "fit", [](const Dataset& d, const TrainConfig& c) { return fit(d, c); }, py::arg("dataset"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
    py::class_<InitFitResult>(m, "InitFitResult")
        .def_readonly("params", &InitFitResult::params)
        .def_readonly("A", &InitFitResult::A)
        .def_readonly("loss", &InitFitResult::loss)
        .def_readonly("frobenius_error", &InitFitResult::frobenius_error)
        .def_readonly("epochs_run", &InitFitResult::epochs_run);
    m.def(
        "fit_A_init",
        [](const Matrix& target, double gamma, int epochs, double learning_rate, std::uint64_t seed) {
            InitConfig c;
            c.epochs = epochs;
            c.learning_rate = learning_rate;
            c.seed = seed;
            return fit_A_init(target, gamma, c);
        },
        py::arg("A_star"), py::arg("gamma") = 1.0, py::arg("epochs") = 20000, py::arg("learning_rate") = 1e-3,
        py::arg("seed") = 0, py::call_guard<py::gil_scoped_release>());

    // ARX baseline
    py::class_<ArxModel>(m, "ArxModel")
        .def_readonly("na", &ArxModel::na)
        .def_readonly("nb", &ArxModel::nb)
        .def_readonly("a", &ArxModel::a)
        .def_readonly("b", &ArxModel::b)
        .def_readonly("b0", &ArxModel::b0);
    m.def(
        "fit_arx",
        [](const Dataset& d, int na, int nb, bool feedthrough) {
            ArxOptions o;
            o.na = na;
            o.nb = nb;
            o.feedthrough = feedthrough;
            return fit_arx_ls(d, o);
        },
        py::arg("dataset"), py::arg("na"), py::arg("nb"), py::arg("feedthrough") = false);
    m.def(
        "simulate_arx", [](const ArxModel& a, const Matrix& u) { return simulate_arx(a, u); }, py::arg("model"),
        py::arg("inputs"));

    // benchmark
    py::class_<BenchmarkRow>(m, "BenchmarkRow")
        .def_readonly("system", &BenchmarkRow::system)
        .def_readonly("seed", &BenchmarkRow::seed)
        .def_readonly("method", &BenchmarkRow::method)
        .def_readonly("test_mse", &BenchmarkRow::test_mse)
        .def_readonly("normalized_mse", &BenchmarkRow::normalized_mse)
        .def_readonly("spectral_radius", &BenchmarkRow::spectral_radius)
        .def_readonly("status", &BenchmarkRow::status);
    m.def(
        "run_benchmark",
        [](int systems, Index n, Index mm, Index p, Index steps, int epochs, int restarts, std::uint64_t seed,
           unsigned workers) {
            BenchmarkOptions o;
            o.systems = systems;
            o.n = n;
            o.m = mm;
            o.p = p;
            o.steps = steps;
            o.epochs = epochs;
            o.restarts = restarts;
            o.seed = seed;
            o.workers = workers;
            return run_benchmark(o).rows;
        },
        py::arg("systems") = 10, py::arg("n") = 5, py::arg("m") = 3, py::arg("p") = 3, py::arg("steps") = 300,
        py::arg("epochs") = 50000, py::arg("restarts") = 3, py::arg("seed") = 0, py::arg("workers") = 0,
        py::call_guard<py::gil_scoped_release>());
}
