#pragma once

#include <cstdint>
#include <random>

#include "simba/dataset.hpp"
#include "simba/matrix.hpp"
#include "simba/state_space.hpp"

namespace simba {

using Rng = std::mt19937_64;

/// Substream roles mixed into derive_seed().
enum class SeedRole : std::uint64_t {
    system = 1,
    train_input = 2,
    val_input = 3,
    test_input = 4,
    noise = 5,
    fit = 6,
    init = 7,
};

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Deterministic substream seed: mix64(seed ⊕ mix64(index·2⁸ + role)).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, SeedRole role);

/// Generalised Binary Noise: each channel starts at ±1 with a fair coin and
/// flips sign at every subsequent step with probability p_switch. Returns length × dims.
Matrix generate_gbn(Index length, Index dims, double p_switch, Rng& rng);

/// A with i.i.d. N(0,1) entries rescaled to spectral radius r ~ U[min(0.3, radius_max), radius_max);
/// B, C, D with i.i.d. N(0,1) entries. Returned in free stability mode.
StateSpaceModel random_stable_system(Index n, Index m, Index p, double radius_max, Rng& rng);

/// Adds N(0, sigma²) to every observed output entry; masked entries are untouched.
Trajectory add_output_noise(const Trajectory& t, double sigma, Rng& rng);

}  // namespace simba
