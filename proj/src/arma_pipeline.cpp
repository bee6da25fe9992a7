#include "ncgm/arma_pipeline.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "ncgm/spectra.hpp"

namespace ncgm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<std::complex<double>> poly_roots(const std::vector<double>& coeffs) {
    const int p = static_cast<int>(coeffs.size());
    if (p == 0) return {};
    Matrix companion = Matrix::Zero(p, p);
    for (int j = 0; j < p; ++j) companion(0, j) = -coeffs[j];
    for (int i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
    Eigen::EigenSolver<Matrix> es(companion, false);
    std::vector<std::complex<double>> roots(p);
    for (int i = 0; i < p; ++i) roots[i] = es.eigenvalues()(i);
    return roots;
}

/// Clamps every root of the monic polynomial to modulus <= max_modulus,
/// keeping its phase, and rebuilds the coefficients.
std::vector<double> clamp_roots(const std::vector<double>& coeffs, double max_modulus) {
    auto roots = poly_roots(coeffs);
    bool changed = false;
    for (auto& r : roots) {
        const double mod = std::abs(r);
        if (mod > max_modulus) {
            r *= max_modulus / mod;
            changed = true;
        }
    }
    if (!changed) return coeffs;
    std::vector<std::complex<double>> b{1.0};
    for (const auto& r : roots) {
        std::vector<std::complex<double>> next(b.size() + 1, 0.0);
        for (std::size_t i = 0; i < b.size(); ++i) {
            next[i] += b[i];
            next[i + 1] -= b[i] * r;
        }
        b = std::move(next);
    }
    std::vector<double> out(coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i) out[i] = b[i + 1].real();
    return out;
}

/// One-step prediction error e = (c/a) y with zero initial conditions.
Vector prediction_error(const Vector& y, const std::vector<double>& c,
                        const std::vector<double>& a) {
    const int num = static_cast<int>(y.size());
    Vector e(num);
    for (int t = 0; t < num; ++t) {
        double v = y(t);
        for (int i = 1; i <= static_cast<int>(c.size()) && i <= t; ++i) v += c[i - 1] * y(t - i);
        for (int j = 1; j <= static_cast<int>(a.size()) && j <= t; ++j) v -= a[j - 1] * e(t - j);
        e(t) = v;
    }
    return e;
}

/// x filtered by 1/a(z) with zero initial conditions.
Vector ar_inverse(const Vector& x, const std::vector<double>& a) {
    const int num = static_cast<int>(x.size());
    Vector f(num);
    for (int t = 0; t < num; ++t) {
        double v = x(t);
        for (int j = 1; j <= static_cast<int>(a.size()) && j <= t; ++j) v -= a[j - 1] * f(t - j);
        f(t) = v;
    }
    return f;
}

double mean_square(const Vector& e) { return e.squaredNorm() / static_cast<double>(e.size()); }

Vector least_squares(const Matrix& x, const Vector& y) {
    Matrix gram = x.transpose() * x;
    const Vector rhs = x.transpose() * y;
    Eigen::LDLT<Matrix> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        gram.diagonal().array() += 1e-10 * gram.trace() / static_cast<double>(gram.rows());
        ldlt.compute(gram);
    }
    return ldlt.solve(rhs);
}

}  // namespace

void PemOptions::check() const {
    if (max_iterations <= 0) throw std::invalid_argument("max_iterations must be positive");
    if (tolerance <= 0.0) throw std::invalid_argument("tolerance must be positive");
    if (stability_margin <= 0.0 || stability_margin >= 1.0) {
        throw std::invalid_argument("stability_margin must lie in (0, 1)");
    }
}

PemFit pem_scalar(const Vector& series, int n, int p, const PemOptions& opts) {
    opts.check();
    if (n < 0 || p < 0) throw std::invalid_argument("orders must be nonnegative");
    const int num = static_cast<int>(series.size());
    if (num < 20 * (n + p)) {
        std::ostringstream os;
        os << "series too short: " << num << " samples, need at least 20(n+p) = " << 20 * (n + p);
        throw std::invalid_argument(os.str());
    }
    PemFit fit;
    if (n == 0 && p == 0) {
        fit.variance = mean_square(series);
        return fit;
    }
    if ((series.array() - series(0)).abs().maxCoeff() == 0.0) {
        throw std::invalid_argument("degenerate series: constant");
    }
    const double rmax = 1.0 - opts.stability_margin;

    // Hannan-Rissanen: long AR fit, innovation estimates, then a linear
    // regression in the ARMA parameters.
    const int long_ar = std::max(1, std::min(std::max(20, 4 * (n + p)), num / 5));
    Vector innov = series;
    {
        const int rows = num - long_ar;
        Matrix x(rows, long_ar);
        Vector y(rows);
        for (int t = long_ar; t < num; ++t) {
            for (int i = 1; i <= long_ar; ++i) x(t - long_ar, i - 1) = series(t - i);
            y(t - long_ar) = series(t);
        }
        const Vector phi = least_squares(x, y);
        innov = Vector::Zero(num);
        for (int t = long_ar; t < num; ++t) {
            double v = series(t);
            for (int i = 1; i <= long_ar; ++i) v -= phi(i - 1) * series(t - i);
            innov(t) = v;
        }
    }
    std::vector<double> c(n, 0.0), a(p, 0.0);
    {
        const int t0 = long_ar + std::max(n, p);
        const int rows = num - t0;
        if (rows > n + p) {
            Matrix x(rows, n + p);
            Vector y(rows);
            for (int t = t0; t < num; ++t) {
                for (int i = 1; i <= n; ++i) x(t - t0, i - 1) = -series(t - i);
                for (int j = 1; j <= p; ++j) x(t - t0, n + j - 1) = innov(t - j);
                y(t - t0) = series(t);
            }
            const Vector theta = least_squares(x, y);
            for (int i = 0; i < n; ++i) c[i] = theta(i);
            for (int j = 0; j < p; ++j) a[j] = theta(n + j);
        }
    }
    c = clamp_roots(c, rmax);
    a = clamp_roots(a, rmax);

    Vector e = prediction_error(series, c, a);
    double v = mean_square(e);

    // Gauss-Newton refinement; steps accepted only on variance decrease.
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        const Vector yf = ar_inverse(series, a);
        const Vector ef = ar_inverse(e, a);
        Matrix jac = Matrix::Zero(num, n + p);
        for (int t = 0; t < num; ++t) {
            for (int i = 1; i <= n && i <= t; ++i) jac(t, i - 1) = yf(t - i);
            for (int j = 1; j <= p && j <= t; ++j) jac(t, n + j - 1) = -ef(t - j);
        }
        const Vector delta = least_squares(jac, -e);

        bool accepted = false;
        double lambda = 1.0;
        for (int bt = 0; bt < 30; ++bt) {
            std::vector<double> c_try(n), a_try(p);
            for (int i = 0; i < n; ++i) c_try[i] = c[i] + lambda * delta(i);
            for (int j = 0; j < p; ++j) a_try[j] = a[j] + lambda * delta(n + j);
            c_try = clamp_roots(c_try, rmax);
            a_try = clamp_roots(a_try, rmax);
            const Vector e_try = prediction_error(series, c_try, a_try);
            const double v_try = mean_square(e_try);
            if (v_try < v) {
                const double decrease = v - v_try;
                c = std::move(c_try);
                a = std::move(a_try);
                e = e_try;
                v = v_try;
                ++fit.iterations;
                accepted = true;
                if (decrease <= opts.tolerance * v) iter = opts.max_iterations;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) break;
    }

    fit.a = std::move(a);
    fit.c = std::move(c);
    fit.variance = v;
    return fit;
}

Matrix inverse_filter(const DiagonalMAPoly& a, const Matrix& data) {
    if (data.rows() != a.node_count()) {
        throw std::invalid_argument("data and filter dimensions do not match");
    }
    const int m = static_cast<int>(data.rows());
    const int num = static_cast<int>(data.cols());
    Matrix xi(m, num);
    for (int l = 0; l < m; ++l) {
        const std::vector<double>& al = a.channel(l);
        for (int t = 0; t < num; ++t) {
            double v = data(l, t);
            for (int k = 1; k <= static_cast<int>(al.size()) && k <= t; ++k) {
                v -= al[k - 1] * xi(l, t - k);
            }
            xi(l, t) = v;
        }
    }
    return xi;
}

namespace {

std::pair<NoncausalModel, ArmaReport> run_pipeline(const Matrix& data, int n,
                                                   std::optional<DiagonalMAPoly> a_known, int p,
                                                   const EdgeSet& g, const PemOptions& pem_opts,
                                                   const SolverOptions& solver_opts) {
    if (data.rows() != g.node_count()) {
        throw std::invalid_argument("data and edge set dimensions do not match");
    }
    if (n < 0 || p < 0) throw std::invalid_argument("orders must be nonnegative");
    const int m = static_cast<int>(data.rows());

    ArmaReport rep;
    std::optional<DiagonalMAPoly> a;
    if (p > 0) {
        if (a_known) {
            a = std::move(a_known);
        } else {
            const auto start = Clock::now();
            std::vector<std::vector<double>> coeffs(m);
            for (int l = 0; l < m; ++l) {
                try {
                    rep.pem.push_back(pem_scalar(data.row(l).transpose(), n, p, pem_opts));
                } catch (const std::exception& e) {
                    std::ostringstream os;
                    os << "pipeline step 1 (per-channel prediction-error fit) failed for channel "
                       << l + 1 << ": " << e.what();
                    throw std::runtime_error(os.str());
                }
                coeffs[l] = rep.pem.back().a;
            }
            rep.step_seconds[0] = seconds_since(start);

            const auto assemble = Clock::now();
            try {
                a.emplace(m, p, std::move(coeffs));
            } catch (const std::exception& e) {
                std::ostringstream os;
                os << "pipeline step 2 (moving-average assembly) failed: " << e.what();
                throw std::runtime_error(os.str());
            }
            rep.step_seconds[1] = seconds_since(assemble);
        }
    }

    Matrix xi;
    if (a) {
        const auto start = Clock::now();
        xi = inverse_filter(*a, data);
        const int discard = std::max(50, 10 * p);
        if (xi.cols() - discard <= n) {
            std::ostringstream os;
            os << "pipeline step 3 (inverse filtering) failed: only " << xi.cols()
               << " samples, burn-in discard of " << discard << " leaves too few";
            throw std::runtime_error(os.str());
        }
        xi = xi.rightCols(xi.cols() - discard).eval();
        rep.step_seconds[2] = seconds_since(start);
    } else {
        xi = data;
    }

    const auto cov_start = Clock::now();
    CovSequence r;
    try {
        r = sample_cov(xi, n);
    } catch (const std::exception& e) {
        std::ostringstream os;
        os << "pipeline step 4 (covariance estimation) failed: " << e.what();
        throw std::runtime_error(os.str());
    }
    rep.step_seconds[3] = seconds_since(cov_start);

    const auto solve_start = Clock::now();
    DoubleSidedPoly h;
    try {
        auto [h_hat, report] = solve(r, g, solver_opts);
        h = std::move(h_hat);
        rep.dual = std::move(report);
    } catch (const std::exception& e) {
        std::ostringstream os;
        os << "pipeline step 5 (dual solve) failed: " << e.what();
        throw std::runtime_error(os.str());
    }
    rep.step_seconds[4] = seconds_since(solve_start);

    return {NoncausalModel(std::move(h), g, std::move(a)), std::move(rep)};
}

}  // namespace

std::pair<NoncausalModel, ArmaReport> estimate_arma(const Matrix& data, int n, int p,
                                                    const EdgeSet& g, const PemOptions& pem,
                                                    const SolverOptions& solver) {
    return run_pipeline(data, n, std::nullopt, p, g, pem, solver);
}

std::pair<NoncausalModel, ArmaReport> estimate_arma(const Matrix& data, int n,
                                                    const DiagonalMAPoly& a, const EdgeSet& g,
                                                    const SolverOptions& solver) {
    return run_pipeline(data, n, a, a.order(), g, PemOptions{}, solver);
}

}  // namespace ncgm
