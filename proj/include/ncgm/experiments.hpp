#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ncgm/arma_pipeline.hpp"

namespace ncgm {

enum class ErrorNorm { spectral, frobenius };

struct ExperimentConfig {
    int m = 8;
    int n = 2;
    int p = 0;
    double density = 0.1;
    double feasibility_target = 0.9;
    std::vector<int> data_lengths = {500, 1000, 2000};
    int num_trials = 20;
    std::vector<std::string> estimators = {"te", "tef", "me"};
    std::uint64_t seed = 0;
    ErrorNorm norm = ErrorNorm::spectral;
    SolverOptions solver;
    PemOptions pem;

    void check() const;
};

struct TrialResult {
    int trial = 0;
    std::string estimator;
    int data_length = 0;
    double relative_error = std::numeric_limits<double>::quiet_NaN();
    bool converged = false;
    /// Wall time is diagnostic only and deliberately kept out of the
    /// serialized results, which must be byte-reproducible.
    double wall_seconds = 0.0;
};

/// Quartile summary of the relative error over converged trials of one
/// (estimator, data length) cell.
struct SummaryEntry {
    std::string estimator;
    int data_length = 0;
    int converged_count = 0;
    int total = 0;
    double median = std::numeric_limits<double>::quiet_NaN();
    double q1 = std::numeric_limits<double>::quiet_NaN();
    double q3 = std::numeric_limits<double>::quiet_NaN();
};

/**
 * @brief Relative estimation error e = ||[H_hat_0 .. H_hat_n] - [H_0 .. H_n]|| / ||[H_0 .. H_n]||
 *        of the side-by-side stacked coefficient blocks.
 *
 * The norm is the spectral norm (largest singular value) by default;
 * Frobenius is available for sensitivity analysis. Throws if the reference is
 * identically zero.
 */
double relative_error(const DoubleSidedPoly& h_hat, const DoubleSidedPoly& h_true,
                      ErrorNorm norm = ErrorNorm::spectral);

/**
 * @brief One Monte Carlo trial: a fresh random model (seeded by config.seed
 *        and trial_index), one trajectory per data length, every requested
 *        estimator on each.
 *
 * te solves with the true edge set, tef with the full off-diagonal set, me is
 * the maximum-entropy baseline mapped through the double-sided extraction.
 * Per-estimator failures are captured as converged = false rows, never
 * thrown.
 */
std::vector<TrialResult> run_trial(const ExperimentConfig& config, int trial_index);

/// Per-(estimator, data length) quartiles over converged trials.
std::vector<SummaryEntry> summarize(const std::vector<TrialResult>& results);

struct McResult {
    std::vector<TrialResult> results;  ///< sorted by (trial, estimator, data length)
    std::vector<SummaryEntry> summary;
};

/// Runs all trials, optionally in parallel. Outputs are identical at any
/// thread count: trials are independently seeded and gathered into
/// trial-indexed slots before sorting.
McResult run_monte_carlo(const ExperimentConfig& config, int num_threads = 1);

}  // namespace ncgm
