#include "simba/generators.hpp"

#include <algorithm>
#include <cmath>

#include "simba/errors.hpp"
#include "simba/linalg.hpp"

namespace simba {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, SeedRole role) {
    return mix64(seed ^ mix64((index << 8) + static_cast<std::uint64_t>(role)));
}

Matrix generate_gbn(Index length, Index dims, double p_switch, Rng& rng) {
    if (!(p_switch >= 0.0 && p_switch <= 1.0)) {
        throw ConfigError("generate_gbn: p_switch must lie in [0, 1]");
    }
    if (length < 0 || dims < 0) {
        throw ConfigError("generate_gbn: negative size");
    }
    Matrix u(length, dims);
    std::bernoulli_distribution coin(0.5);
    std::bernoulli_distribution flip(p_switch);
    for (Index j = 0; j < dims; ++j) {
        double level = coin(rng) ? 1.0 : -1.0;
        for (Index k = 0; k < length; ++k) {
            if (k > 0 && flip(rng)) level = -level;
            u(k, j) = level;
        }
    }
    return u;
}

StateSpaceModel random_stable_system(Index n, Index m, Index p, double radius_max, Rng& rng) {
    if (n < 1 || m < 1 || p < 1) {
        throw ConfigError("random_stable_system: dimensions must be positive");
    }
    if (!(radius_max > 0.0 && radius_max < 1.0)) {
        throw ConfigError("random_stable_system: radius_max must lie in (0, 1)");
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto gaussian = [&](Index rows, Index cols) {
        Matrix x(rows, cols);
        for (Index j = 0; j < cols; ++j)
            for (Index i = 0; i < rows; ++i) x(i, j) = normal(rng);
        return x;
    };
    std::uniform_real_distribution<double> radius_dist(std::min(0.3, radius_max), radius_max);

    StateSpaceModel model;
    const double target = radius_dist(rng);
    for (;;) {
        Matrix a = gaussian(n, n);
        const double r = spectral_radius(a);
        if (r > 0.0) {
            model.A = a * (target / r);
            break;
        }
    }
    model.B = gaussian(n, m);
    model.C = gaussian(p, n);
    model.D = gaussian(p, m);
    model.stability = StabilityMode::free;
    return model;
}

Trajectory add_output_noise(const Trajectory& t, double sigma, Rng& rng) {
    if (!(sigma >= 0.0)) {
        throw ConfigError("add_output_noise: sigma must be non-negative");
    }
    Trajectory out = t;
    if (sigma == 0.0) return out;
    std::normal_distribution<double> normal(0.0, sigma);
    for (Index i = 0; i < out.outputs.rows(); ++i)
        for (Index j = 0; j < out.outputs.cols(); ++j)
            if (out.mask(i, j) != 0) out.outputs(i, j) += normal(rng);
    return out;
}

}  // namespace simba
