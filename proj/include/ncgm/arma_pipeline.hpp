#pragma once

#include <array>
#include <utility>
#include <vector>

#include "ncgm/te_solver.hpp"

namespace ncgm {

struct PemOptions {
    int max_iterations = 50;
    double tolerance = 1e-9;        ///< relative prediction-error decrease below which to stop
    double stability_margin = 0.02; ///< roots clamped to modulus <= 1 - stability_margin

    void check() const;
};

/// Scalar ARMA fit c(z) y(t) = a(z) e(t), both polynomials monic.
struct PemFit {
    std::vector<double> a;  ///< MA coefficients a_1..a_p
    std::vector<double> c;  ///< AR coefficients c_1..c_n
    double variance = 0.0;  ///< final one-step prediction error variance
    int iterations = 0;     ///< accepted refinement steps
};

/**
 * @brief Prediction-error fit of a scalar ARMA model to one channel.
 *
 * Hannan-Rissanen initialization (long AR fit, innovation estimates, then
 * regression) followed by Gauss-Newton refinement of the one-step prediction
 * error; steps are accepted only when the error variance decreases, and all
 * roots are clamped to modulus 1 - stability_margin. Rejects series shorter
 * than 20(n+p) and constant series.
 */
PemFit pem_scalar(const Vector& series, int n, int p, const PemOptions& opts = {});

/// Per-channel inverse filter xi_l(t) = y_l(t) - sum_k a_{l,k} xi_l(t-k) with
/// zero initial conditions; output has the shape of the input.
Matrix inverse_filter(const DiagonalMAPoly& a, const Matrix& data);

/// Per-step diagnostics of estimate_arma. Steps: 1 per-channel fits,
/// 2 assembly of A(z), 3 inverse filtering, 4 covariance estimation,
/// 5 dual solve.
struct ArmaReport {
    std::vector<PemFit> pem;  ///< per channel; empty when the MA part was given or p = 0
    SolverReport dual;
    std::array<double, 5> step_seconds{};
};

/**
 * @brief Two-step ARMA estimator: fit the diagonal MA part by scalar
 *        prediction-error fits, inverse-filter the data, then estimate H by
 *        the dual solve on the filtered sample covariances.
 *
 * The first max(50, 10p) filtered samples are discarded before covariance
 * estimation (zero initial conditions bias them). p = 0 short-circuits the
 * filtering steps: sample covariances of the data straight into the solve.
 * Failures carry the failing step number.
 */
std::pair<NoncausalModel, ArmaReport> estimate_arma(const Matrix& data, int n, int p,
                                                    const EdgeSet& g, const PemOptions& pem = {},
                                                    const SolverOptions& solver = {});

/// estimate_arma with a known MA part: skips the per-channel fits.
std::pair<NoncausalModel, ArmaReport> estimate_arma(const Matrix& data, int n,
                                                    const DiagonalMAPoly& a, const EdgeSet& g,
                                                    const SolverOptions& solver = {});

}  // namespace ncgm
