#include "ncgm/graph_model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace ncgm {

namespace {

std::string entry_name(const char* base, int k) {
    std::ostringstream os;
    os << base << k;
    return os.str();
}

}  // namespace

EdgeSet::EdgeSet(int node_count, std::set<std::pair<int, int>> edges)
    : m_(node_count), edges_(std::move(edges)) {
    if (m_ <= 0) throw std::invalid_argument("EdgeSet: node count must be positive");
    for (const auto& [l, i] : edges_) {
        if (l < 1 || l > m_ || i < 1 || i > m_) {
            std::ostringstream os;
            os << "EdgeSet: index out of range in edge (" << l << "," << i
               << "), valid range is [1," << m_ << "]";
            throw std::invalid_argument(os.str());
        }
        if (l == i) {
            std::ostringstream os;
            os << "EdgeSet: self-loop (" << l << "," << i << ") not allowed";
            throw std::invalid_argument(os.str());
        }
        if (!edges_.count({i, l})) {
            std::ostringstream os;
            os << "EdgeSet: not symmetric, (" << l << "," << i << ") present but ("
               << i << "," << l << ") missing";
            throw std::invalid_argument(os.str());
        }
    }
}

EdgeSet EdgeSet::empty(int node_count) { return EdgeSet(node_count, {}); }

EdgeSet EdgeSet::full(int node_count) {
    std::set<std::pair<int, int>> e;
    for (int l = 1; l <= node_count; ++l)
        for (int i = 1; i <= node_count; ++i)
            if (l != i) e.insert({l, i});
    return EdgeSet(node_count, std::move(e));
}

std::vector<std::pair<int, int>> EdgeSet::undirected_edges() const {
    std::vector<std::pair<int, int>> out;
    for (const auto& [l, i] : edges_)
        if (l < i) out.push_back({l, i});
    return out;
}

DoubleSidedPoly::DoubleSidedPoly(int m_, int n_) : m(m_), n(n_) {
    if (m <= 0) throw std::invalid_argument("DoubleSidedPoly: dimension must be positive");
    if (n < 0) throw std::invalid_argument("DoubleSidedPoly: order must be non-negative");
    blocks.assign(static_cast<std::size_t>(n) + 1, Matrix::Zero(m, m));
}

bool DoubleSidedPoly::is_zero(double tol) const {
    for (const auto& b : blocks)
        if (b.cwiseAbs().maxCoeff() > tol) return false;
    return true;
}

DiagonalMAPoly::DiagonalMAPoly(int node_count, int order,
                               std::vector<std::vector<double>> coeffs)
    : m_(node_count), p_(order), coeffs_(std::move(coeffs)) {
    if (m_ <= 0) throw std::invalid_argument("DiagonalMAPoly: dimension must be positive");
    if (p_ < 0) throw std::invalid_argument("DiagonalMAPoly: order must be non-negative");
    if (static_cast<int>(coeffs_.size()) != m_)
        throw std::invalid_argument("DiagonalMAPoly: expected one coefficient sequence per channel");
    for (int l = 0; l < m_; ++l) {
        const auto& c = coeffs_[static_cast<std::size_t>(l)];
        if (static_cast<int>(c.size()) != p_)
            throw std::invalid_argument("DiagonalMAPoly: coefficient sequence length must equal the order");
        for (double r : root_moduli(c)) {
            if (r >= 1.0) {
                std::ostringstream os;
                os << "DiagonalMAPoly: channel " << (l + 1)
                   << " is not minimum phase (root modulus " << r << " >= 1)";
                throw std::invalid_argument(os.str());
            }
        }
    }
}

DiagonalMAPoly DiagonalMAPoly::identity(int node_count) {
    return DiagonalMAPoly(node_count, 0,
                          std::vector<std::vector<double>>(static_cast<std::size_t>(node_count)));
}

std::vector<double> root_moduli(const std::vector<double>& coeffs) {
    const int p = static_cast<int>(coeffs.size());
    if (p == 0) return {};
    Matrix companion = Matrix::Zero(p, p);
    for (int j = 0; j < p; ++j) companion(0, j) = -coeffs[static_cast<std::size_t>(j)];
    for (int j = 1; j < p; ++j) companion(j, j - 1) = 1.0;
    Eigen::EigenSolver<Matrix> es(companion, /*computeEigenvectors=*/false);
    std::vector<double> out(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) out[static_cast<std::size_t>(j)] = std::abs(es.eigenvalues()(j));
    return out;
}

NoncausalModel::NoncausalModel(DoubleSidedPoly h, EdgeSet graph,
                               std::optional<DiagonalMAPoly> a)
    : h_(std::move(h)), graph_(std::move(graph)), a_(std::move(a)) {
    auto violations = validate(h_, graph_);
    if (!violations.empty())
        throw std::invalid_argument("NoncausalModel: " + violations.front());
    if (a_ && a_->node_count() != h_.m)
        throw std::invalid_argument("NoncausalModel: MA part dimension mismatch");
    double margin = positivity_margin(h_);
    if (margin <= 0.0) {
        std::ostringstream os;
        os << "NoncausalModel: infeasible, positivity margin " << margin << " <= 0";
        throw std::invalid_argument(os.str());
    }
}

std::vector<std::string> validate(const DoubleSidedPoly& h, const EdgeSet& g) {
    if (h.m != g.node_count())
        throw std::invalid_argument("validate: dimension mismatch between polynomial and edge set");
    std::vector<std::string> report;
    if (static_cast<int>(h.blocks.size()) != h.n + 1) {
        report.push_back("block count does not match order n");
        return report;
    }
    for (int k = 0; k <= h.n; ++k) {
        const Matrix& hk = h.block(k);
        if (hk.rows() != h.m || hk.cols() != h.m) {
            report.push_back(entry_name("wrong shape in block H", k));
            continue;
        }
        if (k == 0 && (hk - hk.transpose()).cwiseAbs().maxCoeff() > 0.0)
            report.push_back("H0 not symmetric");
        for (int l = 0; l < h.m; ++l)
            if (hk(l, l) != 0.0)
                report.push_back(entry_name("nonzero diagonal entry in H", k) + " at index " +
                                 std::to_string(l + 1));
        for (int l = 0; l < h.m; ++l) {
            for (int i = 0; i < h.m; ++i) {
                if (l == i) continue;
                if (hk(l, i) != 0.0 && !g.contains(l + 1, i + 1)) {
                    std::ostringstream os;
                    os << "support violation: H" << k << "(" << (l + 1) << "," << (i + 1)
                       << ") nonzero but (" << (l + 1) << "," << (i + 1) << ") is not an edge";
                    report.push_back(os.str());
                }
            }
        }
    }
    return report;
}

ComplexMatrix eval_h(const DoubleSidedPoly& h, double theta) {
    const std::complex<double> j(0.0, 1.0);
    ComplexMatrix out = h.block(0).cast<std::complex<double>>();
    for (int k = 1; k <= h.n; ++k) {
        ComplexMatrix b = h.block(k).cast<std::complex<double>>() * std::exp(-j * (k * theta));
        out += 0.5 * (b + b.adjoint());
    }
    return out;
}

double positivity_margin(const DoubleSidedPoly& h, int grid_size) {
    if (grid_size < 2 * (h.n + 1))
        throw std::invalid_argument("positivity_margin: grid_size must be at least 2(n+1)");
    const ComplexMatrix identity = ComplexMatrix::Identity(h.m, h.m);
    double margin = std::numeric_limits<double>::infinity();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es;
    for (int jdx = 0; jdx < grid_size; ++jdx) {
        const double theta = 2.0 * std::numbers::pi * jdx / grid_size;
        es.compute(identity - eval_h(h, theta), Eigen::EigenvaluesOnly);
        margin = std::min(margin, es.eigenvalues().minCoeff());
    }
    return margin;
}

namespace {

// Row l of H(z) y(t) on the interior t = n+1..N-n (0-based output).
Vector filter_row(const DoubleSidedPoly& h, const Matrix& data, int l) {
    const int n = h.n;
    const int N = static_cast<int>(data.cols());
    const int count = N - 2 * n;
    Vector out = Vector::Zero(count);
    for (int t = 0; t < count; ++t) {
        const int tc = t + n;  // 0-based index of the centre sample
        double acc = h.block(0).row(l).dot(data.col(tc));
        for (int k = 1; k <= n; ++k) {
            acc += 0.5 * h.block(k).row(l).dot(data.col(tc - k));
            acc += 0.5 * h.block(k).col(l).dot(data.col(tc + k));
        }
        out(t) = acc;
    }
    return out;
}

}  // namespace

Vector smooth_estimate(const DoubleSidedPoly& h, const Matrix& data, int component) {
    if (data.rows() != h.m)
        throw std::invalid_argument("smooth_estimate: data row count must equal model dimension");
    if (component < 1 || component > h.m)
        throw std::invalid_argument("smooth_estimate: component index out of range");
    const int N = static_cast<int>(data.cols());
    if (N <= 2 * h.n)
        throw std::invalid_argument("smooth_estimate: series too short, need N > 2n");
    // Diagonal coefficients are zero, so the row filter is exactly the
    // sum over i != l.
    return filter_row(h, data, component - 1);
}

Matrix residual(const DoubleSidedPoly& h, const Matrix& data) {
    if (data.rows() != h.m)
        throw std::invalid_argument("residual: data row count must equal model dimension");
    const int n = h.n;
    const int N = static_cast<int>(data.cols());
    if (N <= 2 * n)
        throw std::invalid_argument("residual: series too short, need N > 2n");
    const int count = N - 2 * n;
    Matrix out(h.m, count);
    for (int l = 0; l < h.m; ++l)
        out.row(l) = data.row(l).segment(n, count) - filter_row(h, data, l).transpose();
    return out;
}

}  // namespace ncgm
