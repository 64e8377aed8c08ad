#include "simba/dataset.hpp"

#include <cmath>
#include <set>

#include "simba/errors.hpp"

namespace simba {

void Trajectory::validate() const {
    if (outputs.rows() < 1) {
        throw ConfigError("trajectory '" + id + "': length must be at least 1");
    }
    if (inputs.rows() != outputs.rows()) {
        throw ConfigError("trajectory '" + id + "': inputs and outputs have different lengths");
    }
    if (mask.rows() != outputs.rows() || mask.cols() != outputs.cols()) {
        throw ConfigError("trajectory '" + id + "': mask shape differs from outputs");
    }
    if (!inputs.allFinite()) {
        throw ConfigError("trajectory '" + id + "': inputs must be finite");
    }
    for (Index j = 0; j < outputs.cols(); ++j) {
        for (Index i = 0; i < outputs.rows(); ++i) {
            if (mask(i, j) > 1) {
                throw ConfigError("trajectory '" + id + "': mask entries must be 0 or 1");
            }
            if (mask(i, j) != 0 && !std::isfinite(outputs(i, j))) {
                throw ConfigError("trajectory '" + id + "': observed output is not finite");
            }
        }
    }
}

Matrix Trajectory::observed_outputs() const {
    Matrix y = outputs;
    for (Index j = 0; j < y.cols(); ++j)
        for (Index i = 0; i < y.rows(); ++i)
            if (mask(i, j) == 0) y(i, j) = 0.0;
    return y;
}

Trajectory make_trajectory(std::string id, Matrix inputs, Matrix outputs) {
    Trajectory t;
    t.id = std::move(id);
    t.mask = Mask::Ones(outputs.rows(), outputs.cols());
    for (Index j = 0; j < outputs.cols(); ++j)
        for (Index i = 0; i < outputs.rows(); ++i)
            if (!std::isfinite(outputs(i, j))) t.mask(i, j) = 0;
    t.inputs = std::move(inputs);
    t.outputs = std::move(outputs);
    return t;
}

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split parse_split(const std::string& name) {
    if (name == "train") return Split::train;
    if (name == "val" || name == "validation") return Split::val;
    if (name == "test") return Split::test;
    throw ConfigError("unknown split '" + name + "'");
}

Matrix Scaler::transform_inputs(const Matrix& u) const {
    return ((u.rowwise() - u_mean.transpose()).array().rowwise() / u_std.transpose().array()).matrix();
}

Matrix Scaler::transform_outputs(const Matrix& y) const {
    return ((y.rowwise() - y_mean.transpose()).array().rowwise() / y_std.transpose().array()).matrix();
}

Matrix Scaler::inverse_inputs(const Matrix& u) const {
    return ((u.array().rowwise() * u_std.transpose().array()).matrix().rowwise() + u_mean.transpose());
}

Matrix Scaler::inverse_outputs(const Matrix& y) const {
    return ((y.array().rowwise() * y_std.transpose().array()).matrix().rowwise() + y_mean.transpose());
}

namespace {

Trajectory map_trajectory(const Trajectory& t, const Matrix& inputs, const Matrix& outputs) {
    Trajectory out = t;
    out.inputs = inputs;
    out.outputs = t.outputs;
    for (Index j = 0; j < t.outputs.cols(); ++j)
        for (Index i = 0; i < t.outputs.rows(); ++i)
            if (t.mask(i, j) != 0) out.outputs(i, j) = outputs(i, j);
    return out;
}

}  // namespace

Trajectory Scaler::apply(const Trajectory& t) const {
    return map_trajectory(t, transform_inputs(t.inputs), transform_outputs(t.observed_outputs()));
}

Trajectory Scaler::invert(const Trajectory& t) const {
    return map_trajectory(t, inverse_inputs(t.inputs), inverse_outputs(t.observed_outputs()));
}

void Dataset::add(Trajectory t, Split s) {
    split[t.id] = s;
    trajectories.push_back(std::move(t));
}

std::vector<const Trajectory*> Dataset::in_split(Split s) const {
    std::vector<const Trajectory*> out;
    for (const auto& t : trajectories) {
        auto it = split.find(t.id);
        if (it != split.end() && it->second == s) out.push_back(&t);
    }
    return out;
}

const Trajectory& Dataset::find(const std::string& id) const {
    for (const auto& t : trajectories)
        if (t.id == id) return t;
    throw ConfigError("dataset: no trajectory with id '" + id + "'");
}

Index Dataset::input_dim() const { return trajectories.empty() ? 0 : trajectories.front().input_dim(); }
Index Dataset::output_dim() const { return trajectories.empty() ? 0 : trajectories.front().output_dim(); }

void Dataset::validate() const {
    std::set<std::string> seen;
    for (const auto& t : trajectories) {
        t.validate();
        if (!seen.insert(t.id).second) {
            throw ConfigError("dataset: duplicate trajectory id '" + t.id + "'");
        }
        if (split.find(t.id) == split.end()) {
            throw ConfigError("dataset: trajectory '" + t.id + "' has no split");
        }
        if (t.input_dim() != input_dim() || t.output_dim() != output_dim()) {
            throw ConfigError("dataset: trajectory '" + t.id + "' has inconsistent dimensions");
        }
    }
    if (scaler) {
        if ((scaler->u_std.array() <= 0.0).any() || (scaler->y_std.array() <= 0.0).any()) {
            throw ConfigError("dataset: scaler standard deviations must be positive");
        }
    }
}

namespace {

struct ChannelStats {
    double mean = 0.0;
    double stddev = 0.0;
};

// Population statistics over observed samples, two passes in a fixed order.
template <typename Sample>
ChannelStats channel_stats(const std::vector<const Trajectory*>& train, Sample&& sample, const std::string& channel) {
    double sum = 0.0;
    double count = 0.0;
    for (const auto* t : train) {
        for (Index i = 0; i < t->length(); ++i) {
            double v;
            if (sample(*t, i, v)) {
                sum += v;
                count += 1.0;
            }
        }
    }
    if (count == 0.0) {
        throw ConfigError("standardize: channel " + channel + " has no observed training samples");
    }
    ChannelStats st;
    st.mean = sum / count;
    double ss = 0.0;
    for (const auto* t : train) {
        for (Index i = 0; i < t->length(); ++i) {
            double v;
            if (sample(*t, i, v)) ss += (v - st.mean) * (v - st.mean);
        }
    }
    st.stddev = std::sqrt(ss / count);
    if (!(st.stddev > 0.0)) {
        throw ConfigError("standardize: channel " + channel +
                          " is constant on the training split; drop it before fitting");
    }
    return st;
}

}  // namespace

Scaler fit_scaler(const Dataset& dataset) {
    const auto train = dataset.in_split(Split::train);
    if (train.empty()) {
        throw ConfigError("standardize: no training trajectories");
    }
    const Index m = dataset.input_dim();
    const Index p = dataset.output_dim();

    Scaler sc;
    sc.u_mean.resize(m);
    sc.u_std.resize(m);
    sc.y_mean.resize(p);
    sc.y_std.resize(p);
    for (Index j = 0; j < m; ++j) {
        const auto st = channel_stats(
            train,
            [j](const Trajectory& t, Index i, double& v) {
                v = t.inputs(i, j);
                return true;
            },
            "u" + std::to_string(j + 1));
        sc.u_mean(j) = st.mean;
        sc.u_std(j) = st.stddev;
    }
    for (Index j = 0; j < p; ++j) {
        const auto st = channel_stats(
            train,
            [j](const Trajectory& t, Index i, double& v) {
                v = t.outputs(i, j);
                return t.mask(i, j) != 0;
            },
            "y" + std::to_string(j + 1));
        sc.y_mean(j) = st.mean;
        sc.y_std(j) = st.stddev;
    }
    return sc;
}

std::pair<Dataset, Scaler> standardize(const Dataset& dataset) {
    Scaler sc = fit_scaler(dataset);
    Dataset out;
    out.split = dataset.split;
    out.trajectories.reserve(dataset.trajectories.size());
    for (const auto& t : dataset.trajectories) out.trajectories.push_back(sc.apply(t));
    out.scaler = sc;
    return {std::move(out), std::move(sc)};
}

}  // namespace simba
