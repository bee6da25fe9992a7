#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ncgm/spectra.hpp"

namespace ncgm {

struct SolverOptions {
    int grid_size = kDefaultGrid;
    int max_iterations = 500;
    double gradient_tolerance = 1e-8;   ///< stationarity threshold on the free-parameter gradient norm
    double feasibility_floor = 1e-9;    ///< minimum positivity margin accepted during line search
    double line_search_shrink = 0.5;

    void check() const;
};

enum class SolveStatus {
    converged,
    iteration_limit,
    divergence,  ///< the dual solution may not exist for these covariance data
};

std::string to_string(SolveStatus s);

struct SolverReport {
    double objective_value = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    double moment_residual = 0.0;  ///< max constrained-entry covariance mismatch
    double positivity_margin = 0.0;
    bool converged = false;
    SolveStatus status = SolveStatus::iteration_limit;
    std::string message;
};

/**
 * @brief Mapping between edge-supported coefficient blocks and the
 *        free-parameter vector of the dual problem.
 *
 * H_0 contributes one parameter per unordered edge {l,i} (symmetry); each
 * H_k with k >= 1 contributes two, [H_k]_{li} and [H_k]_{il}.
 */
class EdgeParamMap {
public:
    EdgeParamMap(const EdgeSet& g, int order);

    int dim() const { return dim_; }
    int order() const { return n_; }
    int node_count() const { return m_; }

    Vector pack(const DoubleSidedPoly& h) const;
    DoubleSidedPoly unpack(const Vector& x) const;

    /// Folds per-lag gradient matrices G_k into the free-parameter vector:
    /// G_0[l,i] + G_0[i,l] for the H_0 parameter, G_k[l,i] and G_k[i,l] for
    /// the two H_k parameters.
    Vector fold(const std::vector<Matrix>& per_lag) const;

private:
    int m_;
    int n_;
    int dim_;
    std::vector<std::pair<int, int>> pairs_;  // unordered edges, 0-based, l < i
};

/// Dual objective J(H) = tr integral [(I-H)^{-1} - I] - sum_k tr(H_k^T R_k),
/// evaluated by grid quadrature. Throws if h is infeasible on the grid.
double objective(const DoubleSidedPoly& h, const CovSequence& r, int grid_size = kDefaultGrid);

/// Gradient of the dual objective with respect to the free parameters defined
/// by g: the edge entries of C_k - R_k with C_k = integral Phi e^{j k theta}
/// and Phi = (I-H)^{-2}, folded for the H_0 symmetric pairs.
Vector gradient(const DoubleSidedPoly& h, const CovSequence& r, const EdgeSet& g,
                int grid_size = kDefaultGrid);

/**
 * @brief Solves the dual problem: minimize J over edge-supported coefficient
 *        blocks subject to I - H > 0 on the unit circle.
 *
 * Limited-memory quasi-Newton descent on the free-parameter vector with
 * backtracking Armijo line search; iterates whose positivity margin falls
 * below the feasibility floor are rejected. Starts from H = 0, which is
 * always strictly feasible. On convergence the constrained covariance
 * entries of the primal spectrum Phi = (I-H)^{-2} match the given lags.
 *
 * Non-convergence is reported through the SolverReport status rather than an
 * exception: iteration_limit when the budget runs out, divergence when the
 * iterates are pushed against the feasibility boundary, which signals that
 * the dual solution may not exist for these covariance data.
 */
std::pair<DoubleSidedPoly, SolverReport> solve(const CovSequence& r, const EdgeSet& g,
                                               const SolverOptions& opts = {});

/// solve() with the full off-diagonal edge set.
std::pair<DoubleSidedPoly, SolverReport> solve_full(const CovSequence& r,
                                                    const SolverOptions& opts = {});

}  // namespace ncgm
