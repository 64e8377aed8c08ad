#include "simba/arx.hpp"

#include <algorithm>
#include <cmath>

#include "simba/errors.hpp"
#include "simba/log.hpp"
#include "simba/tape.hpp"

namespace simba {

void ArxModel::validate() const {
    if (na < 1 || nb < 1) throw ConfigError("arx: orders must be at least 1");
    if (static_cast<int>(a.size()) != na || static_cast<int>(b.size()) != nb) {
        throw ConfigError("arx: coefficient count does not match orders");
    }
    const Index pp = p();
    const Index mm = m();
    for (const auto& ai : a)
        if (ai.rows() != pp || ai.cols() != pp || !ai.allFinite()) throw ConfigError("arx: bad a block");
    for (const auto& bj : b)
        if (bj.rows() != pp || bj.cols() != mm || !bj.allFinite()) throw ConfigError("arx: bad b block");
    if (b0 && (b0->rows() != pp || b0->cols() != mm || !b0->allFinite())) throw ConfigError("arx: bad b0 block");
}

namespace {

Index regressor_size(const ArxOptions& o, Index p, Index m) {
    return o.na * p + o.nb * m + (o.feedthrough ? m : 0);
}

// φ(k) = [y(k−1); …; y(k−na); u(k−1); …; u(k−nb); u(k)?]
void fill_regressor(const Trajectory& t, Index k, const ArxOptions& o, Vector& phi) {
    const Index p = t.output_dim();
    const Index m = t.input_dim();
    Index c = 0;
    for (int i = 1; i <= o.na; ++i, c += p) phi.segment(c, p) = t.outputs.row(k - i).transpose();
    for (int j = 1; j <= o.nb; ++j, c += m) phi.segment(c, m) = t.inputs.row(k - j).transpose();
    if (o.feedthrough) phi.segment(c, m) = t.inputs.row(k).transpose();
}

bool row_usable(const Trajectory& t, Index k, int na) {
    for (int i = 0; i <= na; ++i)
        if ((t.mask.row(k - i) == 0).any()) return false;
    return true;
}

ArxOptions options_of(const ArxModel& model) {
    ArxOptions o;
    o.na = model.na;
    o.nb = model.nb;
    o.feedthrough = model.b0.has_value();
    return o;
}

}  // namespace

ArxModel fit_arx_ls(std::span<const Trajectory* const> trajectories, const ArxOptions& options) {
    if (options.na < 1 || options.nb < 1) throw ConfigError("fit_arx_ls: orders must be at least 1");
    if (trajectories.empty()) throw ConfigError("fit_arx_ls: no trajectories");
    const Index p = trajectories.front()->output_dim();
    const Index m = trajectories.front()->input_dim();
    const Index lag = std::max(options.na, options.nb);
    const Index d = regressor_size(options, p, m);

    Index rows = 0;
    for (const auto* t : trajectories) {
        if (t->output_dim() != p || t->input_dim() != m) throw DimensionError("fit_arx_ls: inconsistent dimensions");
        if (t->length() <= lag) throw ConfigError("fit_arx_ls: trajectory '" + t->id + "' is too short for the orders");
        for (Index k = lag; k < t->length(); ++k) rows += row_usable(*t, k, options.na);
    }

    Matrix phi(rows, d);
    Matrix target(rows, p);
    Vector row(d);
    Index r = 0;
    for (const auto* t : trajectories) {
        for (Index k = lag; k < t->length(); ++k) {
            if (!row_usable(*t, k, options.na)) continue;
            fill_regressor(*t, k, options, row);
            phi.row(r) = row.transpose();
            target.row(r) = t->outputs.row(k);
            ++r;
        }
    }

    Matrix theta;  // d × p
    Eigen::ColPivHouseholderQR<Matrix> qr(phi);
    if (rows >= d && qr.rank() == d) {
        theta = qr.solve(target);
    } else {
        log_warning("fit_arx_ls: regressor is rank deficient; using a ridge-regularized solve");
        Matrix normal = phi.transpose() * phi;
        normal.diagonal().array() += options.ridge;
        theta = normal.ldlt().solve(phi.transpose() * target);
    }

    ArxModel model;
    model.na = options.na;
    model.nb = options.nb;
    Index c = 0;
    for (int i = 0; i < options.na; ++i, c += p) model.a.push_back(theta.middleRows(c, p).transpose());
    for (int j = 0; j < options.nb; ++j, c += m) model.b.push_back(theta.middleRows(c, m).transpose());
    if (options.feedthrough) model.b0 = theta.middleRows(c, m).transpose();
    return model;
}

ArxModel fit_arx_ls(const Dataset& dataset, const ArxOptions& options) {
    const auto train = dataset.in_split(Split::train);
    return fit_arx_ls(std::span<const Trajectory* const>(train), options);
}

double arx_one_step_mse(const ArxModel& model, std::span<const Trajectory* const> trajectories) {
    model.validate();
    const ArxOptions o = options_of(model);
    const Index p = model.p();
    const Index lag = std::max(model.na, model.nb);
    Matrix theta(regressor_size(o, p, model.m()), p);
    Index c = 0;
    for (const auto& ai : model.a) theta.middleRows(c, p) = ai.transpose(), c += p;
    for (const auto& bj : model.b) theta.middleRows(c, model.m()) = bj.transpose(), c += model.m();
    if (model.b0) theta.middleRows(c, model.m()) = model.b0->transpose();

    double total = 0.0;
    double count = 0.0;
    Vector phi(theta.rows());
    for (const auto* t : trajectories) {
        for (Index k = lag; k < t->length(); ++k) {
            if (!row_usable(*t, k, model.na)) continue;
            fill_regressor(*t, k, o, phi);
            const Vector e = theta.transpose() * phi - t->outputs.row(k).transpose();
            total += e.squaredNorm();
            count += static_cast<double>(p);
        }
    }
    return count == 0.0 ? 0.0 : total / count;
}

Matrix simulate_arx(const ArxModel& model, const Matrix& inputs, const Matrix& warmup) {
    model.validate();
    const Index p = model.p();
    const Index m = model.m();
    if (inputs.cols() != m) throw DimensionError("simulate_arx: input dimension differs from model");
    if (warmup.size() != 0 && (warmup.rows() != model.na || warmup.cols() != p)) {
        throw DimensionError("simulate_arx: warmup must be na x p");
    }
    const Index steps = inputs.rows();
    const Index offset = model.na;
    // History rows [0, na) are the warmup; row offset + k holds ŷ(k).
    Matrix history = Matrix::Zero(offset + steps, p);
    if (warmup.size() != 0) history.topRows(offset) = warmup;
    const auto input_at = [&](Index k) -> Vector {
        return k >= 0 ? Vector(inputs.row(k).transpose()) : Vector::Zero(m);
    };
    for (Index k = 0; k < steps; ++k) {
        Vector y = Vector::Zero(p);
        for (int i = 1; i <= model.na; ++i) y.noalias() += model.a[i - 1] * history.row(offset + k - i).transpose();
        for (int j = 1; j <= model.nb; ++j) y.noalias() += model.b[j - 1] * input_at(k - j);
        if (model.b0) y.noalias() += *model.b0 * input_at(k);
        const double peak = y.cwiseAbs().maxCoeff();
        if (!std::isfinite(peak) || peak > kDivergenceBound) {
            throw DivergenceError("ARX simulation diverged at step " + std::to_string(k), static_cast<std::size_t>(k));
        }
        history.row(offset + k) = y.transpose();
    }
    return history.bottomRows(steps);
}

}  // namespace simba
