#pragma once

#include <cstdint>

#include "ncgm/graph_model.hpp"

namespace ncgm {

/**
 * @brief Random feasible sparse double-sided AR model.
 *
 * Selects ceil(density * m(m-1)/2) unordered node pairs uniformly at random,
 * fills the supported entries of H_0..H_n with independent standard normal
 * draws (H_0 then symmetrized), and rescales all blocks by a common factor so
 * that the largest eigenvalue of H over the grid equals feasibility_target,
 * i.e. positivity margin 1 - feasibility_target. Deterministic given seed.
 */
NoncausalModel random_model(int m, int n, double density, double feasibility_target,
                            std::uint64_t seed);

/// random_model plus a diagonal MA part: per channel, p reflection
/// coefficients drawn uniformly from (-0.9, 0.9) and mapped to a minimum-phase
/// polynomial by the step-up recursion.
NoncausalModel random_arma(int m, int n, int p, double density, double feasibility_target,
                           std::uint64_t seed);

/// White-noise value used by sample_trajectory at retained position t of
/// channel (0-based); t < 0 and t >= N address burn-in samples. Counter-based
/// (Box-Muller over hashed indices), so the draw at a given position does not
/// depend on the burn-in width.
double noise_draw(std::uint64_t seed, long long t, int channel);

/**
 * @brief Exact trajectory of length N from the model, up to boundary effects
 *        removed by burn-in.
 *
 * Draws e as independent standard normals (noise_draw) and solves the
 * symmetric block-banded system T x = e of size m(N + 2B), where T has
 * diagonal blocks I - H_0 and blocks -H_k/2 at offset -k, -H_k^T/2 at offset
 * +k (the time-domain action of I - H(z)); B samples are discarded at each
 * end. When the model has an MA part, y = A(z) xi is applied before the
 * discard, so retained samples see true predecessors. Deterministic given
 * seed.
 *
 * burn_in < 0 selects the default B = max(50, 10n).
 */
Matrix sample_trajectory(const NoncausalModel& model, int num_samples, std::uint64_t seed,
                         int burn_in = -1);

}  // namespace ncgm
