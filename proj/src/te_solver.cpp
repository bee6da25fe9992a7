#include "ncgm/te_solver.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <deque>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace ncgm {

namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

struct Evaluation {
    bool positive_definite = false;
    double objective = std::numeric_limits<double>::infinity();
    double margin = -std::numeric_limits<double>::infinity();
};

/// One quadrature pass: positivity margin of I - H on the grid and, when
/// positive definite throughout, the dual objective value.
Evaluation evaluate(const DoubleSidedPoly& h, const CovSequence& r, int grid_size) {
    const int m = h.m;
    Evaluation out;
    out.positive_definite = true;
    double acc = 0.0;
    double margin = std::numeric_limits<double>::infinity();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es;
    const ComplexMatrix id = ComplexMatrix::Identity(m, m);
    for (int j = 0; j < grid_size; ++j) {
        const double theta = 2.0 * M_PI * j / grid_size;
        es.compute(id - eval_h(h, theta), Eigen::EigenvaluesOnly);
        const Vector& lam = es.eigenvalues();
        const double local_min = lam(0);
        margin = std::min(margin, local_min);
        if (local_min <= 0.0) {
            out.positive_definite = false;
        } else {
            acc += lam.cwiseInverse().sum() - m;
        }
    }
    out.margin = margin;
    if (out.positive_definite) {
        double linear = 0.0;
        for (int k = 0; k <= h.n; ++k) linear += h.block(k).cwiseProduct(r.lag(k)).sum();
        out.objective = acc / grid_size - linear;
    }
    return out;
}

/// C_k - R_k for k = 0..n, with C_k the quadrature moments of (I-H)^{-2}.
std::vector<Matrix> lag_mismatch(const DoubleSidedPoly& h, const CovSequence& r, int grid_size) {
    const int m = h.m;
    const int n = h.n;
    std::vector<ComplexMatrix> acc(n + 1, ComplexMatrix::Zero(m, m));
    const ComplexMatrix id = ComplexMatrix::Identity(m, m);
    for (int j = 0; j < grid_size; ++j) {
        const double theta = 2.0 * M_PI * j / grid_size;
        Eigen::LLT<ComplexMatrix> llt(id - eval_h(h, theta));
        if (llt.info() != Eigen::Success) {
            throw std::runtime_error("I - H is not positive definite on the unit circle");
        }
        const ComplexMatrix inv = llt.solve(id);
        const ComplexMatrix phi = inv * inv;
        for (int k = 0; k <= n; ++k) acc[k] += phi * std::polar(1.0, k * theta);
    }
    std::vector<Matrix> out(n + 1);
    for (int k = 0; k <= n; ++k) out[k] = acc[k].real() / grid_size - r.lag(k);
    return out;
}

double edge_max_abs(const std::vector<Matrix>& per_lag, const EdgeSet& g) {
    double worst = 0.0;
    for (const Matrix& mat : per_lag) {
        for (const auto& [l, i] : g.edges()) {
            worst = std::max(worst, std::abs(mat(l - 1, i - 1)));
        }
    }
    return worst;
}

Vector two_loop_direction(const Vector& grad, const std::deque<std::pair<Vector, Vector>>& hist) {
    Vector q = grad;
    const int h = static_cast<int>(hist.size());
    std::vector<double> alpha(h), rho(h);
    for (int i = h - 1; i >= 0; --i) {
        const auto& [s, y] = hist[i];
        rho[i] = 1.0 / y.dot(s);
        alpha[i] = rho[i] * s.dot(q);
        q -= alpha[i] * y;
    }
    if (h > 0) {
        const auto& [s, y] = hist.back();
        q *= s.dot(y) / y.dot(y);
    }
    for (int i = 0; i < h; ++i) {
        const auto& [s, y] = hist[i];
        const double beta = rho[i] * y.dot(q);
        q += (alpha[i] - beta) * s;
    }
    return -q;
}

}  // namespace

void SolverOptions::check() const {
    if (!is_power_of_two(grid_size)) {
        throw std::invalid_argument("grid_size must be a positive power of two");
    }
    if (max_iterations <= 0) throw std::invalid_argument("max_iterations must be positive");
    if (gradient_tolerance <= 0.0) throw std::invalid_argument("gradient_tolerance must be positive");
    if (feasibility_floor <= 0.0) throw std::invalid_argument("feasibility_floor must be positive");
    if (line_search_shrink <= 0.0 || line_search_shrink >= 1.0) {
        throw std::invalid_argument("line_search_shrink must lie in (0, 1)");
    }
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::converged: return "converged";
        case SolveStatus::iteration_limit: return "iteration_limit";
        case SolveStatus::divergence: return "divergence";
    }
    return "unknown";
}

EdgeParamMap::EdgeParamMap(const EdgeSet& g, int order) : m_(g.node_count()), n_(order) {
    if (order < 0) throw std::invalid_argument("order must be nonnegative");
    for (const auto& [l, i] : g.undirected_edges()) pairs_.emplace_back(l - 1, i - 1);
    dim_ = static_cast<int>(pairs_.size()) * (2 * n_ + 1);
}

Vector EdgeParamMap::pack(const DoubleSidedPoly& h) const {
    if (h.m != m_ || h.n != n_) throw std::invalid_argument("coefficient dimensions do not match");
    Vector x(dim_);
    int pos = 0;
    for (const auto& [l, i] : pairs_) x(pos++) = h.block(0)(l, i);
    for (int k = 1; k <= n_; ++k) {
        for (const auto& [l, i] : pairs_) {
            x(pos++) = h.block(k)(l, i);
            x(pos++) = h.block(k)(i, l);
        }
    }
    return x;
}

DoubleSidedPoly EdgeParamMap::unpack(const Vector& x) const {
    if (x.size() != dim_) throw std::invalid_argument("parameter vector has wrong length");
    DoubleSidedPoly h = DoubleSidedPoly::zero(m_, n_);
    int pos = 0;
    for (const auto& [l, i] : pairs_) {
        h.block(0)(l, i) = x(pos);
        h.block(0)(i, l) = x(pos);
        ++pos;
    }
    for (int k = 1; k <= n_; ++k) {
        for (const auto& [l, i] : pairs_) {
            h.block(k)(l, i) = x(pos++);
            h.block(k)(i, l) = x(pos++);
        }
    }
    return h;
}

Vector EdgeParamMap::fold(const std::vector<Matrix>& per_lag) const {
    if (static_cast<int>(per_lag.size()) != n_ + 1) {
        throw std::invalid_argument("expected one matrix per lag 0..n");
    }
    Vector g(dim_);
    int pos = 0;
    for (const auto& [l, i] : pairs_) g(pos++) = per_lag[0](l, i) + per_lag[0](i, l);
    for (int k = 1; k <= n_; ++k) {
        for (const auto& [l, i] : pairs_) {
            g(pos++) = per_lag[k](l, i);
            g(pos++) = per_lag[k](i, l);
        }
    }
    return g;
}

double objective(const DoubleSidedPoly& h, const CovSequence& r, int grid_size) {
    if (h.m != r.m || h.n != r.n) throw std::invalid_argument("coefficient and covariance dimensions do not match");
    if (grid_size < 2 * (h.n + 1)) throw std::invalid_argument("grid_size too small for this order");
    const Evaluation e = evaluate(h, r, grid_size);
    if (!e.positive_definite) {
        throw std::runtime_error("I - H is not positive definite on the unit circle");
    }
    return e.objective;
}

Vector gradient(const DoubleSidedPoly& h, const CovSequence& r, const EdgeSet& g, int grid_size) {
    if (h.m != r.m || h.n != r.n) throw std::invalid_argument("coefficient and covariance dimensions do not match");
    if (g.node_count() != h.m) throw std::invalid_argument("edge set and coefficient dimensions do not match");
    if (grid_size < 2 * (h.n + 1)) throw std::invalid_argument("grid_size too small for this order");
    EdgeParamMap map(g, h.n);
    return map.fold(lag_mismatch(h, r, grid_size));
}

std::pair<DoubleSidedPoly, SolverReport> solve(const CovSequence& r, const EdgeSet& g,
                                               const SolverOptions& opts) {
    opts.check();
    if (g.node_count() != r.m) throw std::invalid_argument("edge set and covariance dimensions do not match");
    if (opts.grid_size < 4 * (r.n + 1)) throw std::invalid_argument("grid_size too small for this order");

    const EdgeParamMap map(g, r.n);
    const double c1 = 1e-4;
    constexpr int kMaxBacktracks = 60;
    constexpr int kMemory = 10;

    Vector x = Vector::Zero(map.dim());
    DoubleSidedPoly h = map.unpack(x);
    Evaluation cur = evaluate(h, r, opts.grid_size);

    SolverReport rep;
    std::deque<std::pair<Vector, Vector>> hist;
    Vector prev_grad;
    Vector pending_step;
    std::vector<Matrix> mism;

    for (;;) {
        mism = lag_mismatch(h, r, opts.grid_size);
        Vector grad = map.fold(mism);
        rep.gradient_norm = grad.norm();

        if (pending_step.size() > 0) {
            Vector y = grad - prev_grad;
            const double sy = pending_step.dot(y);
            if (sy > 1e-18 * pending_step.norm() * y.norm()) {
                hist.emplace_back(pending_step, std::move(y));
                if (static_cast<int>(hist.size()) > kMemory) hist.pop_front();
            }
            pending_step.resize(0);
        }

        if (rep.gradient_norm <= opts.gradient_tolerance) {
            rep.status = SolveStatus::converged;
            rep.message = "gradient norm below tolerance";
            break;
        }
        if (rep.iterations >= opts.max_iterations) {
            rep.status = SolveStatus::iteration_limit;
            rep.message = "iteration limit reached before gradient tolerance";
            break;
        }

        Vector dir = two_loop_direction(grad, hist);
        double slope = grad.dot(dir);
        if (slope >= 0.0) {
            hist.clear();
            dir = -grad;
            slope = grad.dot(dir);
        }

        const double noise = 4.0 * std::numeric_limits<double>::epsilon() *
                             (1.0 + std::abs(cur.objective));
        double alpha = 1.0;
        bool accepted = false;
        bool hit_boundary = false;
        for (int bt = 0; bt < kMaxBacktracks; ++bt) {
            const Vector trial_x = x + alpha * dir;
            DoubleSidedPoly trial_h = map.unpack(trial_x);
            const Evaluation trial = evaluate(trial_h, r, opts.grid_size);
            if (trial.margin < opts.feasibility_floor) {
                hit_boundary = true;
            } else if (trial.objective <= cur.objective + c1 * alpha * slope + noise) {
                prev_grad = std::move(grad);
                pending_step = alpha * dir;
                x = trial_x;
                h = std::move(trial_h);
                cur = trial;
                ++rep.iterations;
                accepted = true;
                break;
            }
            alpha *= opts.line_search_shrink;
        }
        if (!accepted) {
            if (hit_boundary) {
                rep.status = SolveStatus::divergence;
                rep.message =
                    "iterates pushed against the positivity boundary; the dual solution may "
                    "not exist for these covariance data";
            } else {
                rep.status = SolveStatus::iteration_limit;
                rep.message = "line search stalled before gradient tolerance";
            }
            break;
        }
    }

    rep.objective_value = cur.objective;
    rep.positivity_margin = cur.margin;
    rep.moment_residual = edge_max_abs(mism, g);
    rep.converged = rep.status == SolveStatus::converged;
    return {std::move(h), std::move(rep)};
}

std::pair<DoubleSidedPoly, SolverReport> solve_full(const CovSequence& r, const SolverOptions& opts) {
    return solve(r, EdgeSet::full(r.m), opts);
}

}  // namespace ncgm
