#pragma once

#include <complex>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ncgm {

using Matrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;

/**
 * @brief Symmetric directed graph topology over m nodes, no self-loops.
 *
 * Edges are stored as ordered pairs of 1-based node indices. An edge between
 * nodes l and i always appears twice, once per direction.
 */
class EdgeSet {
public:
    /// Builds an edge set, validating symmetry, index range and absence of
    /// self-loops. Throws std::invalid_argument naming the violated invariant.
    EdgeSet(int node_count, std::set<std::pair<int, int>> edges);

    /// Empty edge set over m nodes.
    static EdgeSet empty(int node_count);

    /// Full off-diagonal topology: every ordered pair (l,i), l != i.
    static EdgeSet full(int node_count);

    int node_count() const { return m_; }
    const std::set<std::pair<int, int>>& edges() const { return edges_; }

    bool contains(int l, int i) const { return edges_.count({l, i}) > 0; }

    /// Unordered edges {l,i} with l < i, in lexicographic order.
    std::vector<std::pair<int, int>> undirected_edges() const;

private:
    int m_;
    std::set<std::pair<int, int>> edges_;
};

/**
 * @brief Coefficient blocks H_0,...,H_n of a double-sided matrix polynomial
 *        H(z) = H_0 + (1/2) * sum_k (H_k z^{-k} + H_k^T z^k).
 *
 * This is a plain container: structural constraints (symmetric H_0, zero
 * diagonals, edge support) are checked by validate(), not by construction,
 * because some estimators legitimately produce unconstrained blocks.
 */
struct DoubleSidedPoly {
    int m = 0;                   ///< dimension
    int n = 0;                   ///< order (number of nonzero lags)
    std::vector<Matrix> blocks;  ///< H_0..H_n, each m x m

    DoubleSidedPoly() = default;
    DoubleSidedPoly(int m_, int n_);

    static DoubleSidedPoly zero(int m_, int n_) { return DoubleSidedPoly(m_, n_); }

    const Matrix& block(int k) const { return blocks.at(static_cast<std::size_t>(k)); }
    Matrix& block(int k) { return blocks.at(static_cast<std::size_t>(k)); }

    bool is_zero(double tol = 0.0) const;
};

/**
 * @brief Per-channel moving-average polynomials a_l(z) = 1 + sum_k a_{l,k} z^{-k},
 *        forming the diagonal matrix A(z) = diag(a_1(z),...,a_m(z)).
 */
class DiagonalMAPoly {
public:
    /// Throws std::invalid_argument if any channel polynomial is not minimum
    /// phase (a root on or outside the unit circle).
    DiagonalMAPoly(int node_count, int order, std::vector<std::vector<double>> coeffs);

    /// p = 0 identity filter.
    static DiagonalMAPoly identity(int node_count);

    int node_count() const { return m_; }
    int order() const { return p_; }
    const std::vector<double>& channel(int l) const { return coeffs_.at(static_cast<std::size_t>(l)); }
    const std::vector<std::vector<double>>& coeffs() const { return coeffs_; }

private:
    int m_;
    int p_;
    std::vector<std::vector<double>> coeffs_;  // coeffs_[l] = (a_{l,1},...,a_{l,p})
};

/// Moduli of the roots of z^p + c_1 z^{p-1} + ... + c_p (companion-matrix
/// eigenvalues). Empty for p = 0.
std::vector<double> root_moduli(const std::vector<double>& coeffs);

/**
 * @brief A non-causal graphical model: double-sided AR part, optional diagonal
 *        MA part, and the graph giving the AR support its semantics.
 *
 * Construction enforces that the AR support respects the graph and that the
 * model is feasible (I - H(e^{j theta}) positive definite on the unit circle).
 */
class NoncausalModel {
public:
    NoncausalModel(DoubleSidedPoly h, EdgeSet graph,
                   std::optional<DiagonalMAPoly> a = std::nullopt);

    const DoubleSidedPoly& h() const { return h_; }
    const EdgeSet& graph() const { return graph_; }
    const std::optional<DiagonalMAPoly>& a() const { return a_; }
    int ma_order() const { return a_ ? a_->order() : 0; }

private:
    DoubleSidedPoly h_;
    EdgeSet graph_;
    std::optional<DiagonalMAPoly> a_;
};

/// Checks the structural constraints of h against g and returns a list of
/// human-readable violations (empty when h is valid). Throws on m mismatch.
std::vector<std::string> validate(const DoubleSidedPoly& h, const EdgeSet& g);

/// Evaluates H(e^{j theta}). The result is Hermitian by construction.
ComplexMatrix eval_h(const DoubleSidedPoly& h, double theta);

inline constexpr int kDefaultGrid = 2048;

/// Minimum over the uniform grid theta_j = 2 pi j / grid_size of the smallest
/// eigenvalue of I - H(e^{j theta_j}). Positive return certifies grid-level
/// feasibility; a negative value signals infeasibility.
double positivity_margin(const DoubleSidedPoly& h, int grid_size = kDefaultGrid);

/**
 * @brief Smoothing estimate of component l: y_hat_l(t) = sum_{i != l} [H(z)]_{li} y_i(t).
 *
 * The double-sided filter needs n past and n future samples, so the estimate
 * is returned only for interior samples t = n+1..N-n (1-based). @p component
 * is 1-based.
 */
Vector smooth_estimate(const DoubleSidedPoly& h, const Matrix& data, int component);

/// Residual e(t) = y(t) - H(z) y(t) on interior samples; m x (N - 2n).
Matrix residual(const DoubleSidedPoly& h, const Matrix& data);

}  // namespace ncgm
