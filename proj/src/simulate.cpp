#include "ncgm/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

namespace ncgm {

namespace {

/// Shared AR-part generation for random_model / random_arma; draws consumed
/// from gen in a fixed order: edge selection, then coefficients lag by lag.
std::pair<DoubleSidedPoly, EdgeSet> random_ar_part(int m, int n, double density,
                                                   double feasibility_target,
                                                   std::mt19937_64& gen) {
    if (m < 1) throw std::invalid_argument("dimension must be positive");
    if (n < 0) throw std::invalid_argument("order must be nonnegative");
    if (density <= 0.0 || density > 1.0) throw std::invalid_argument("density must lie in (0, 1]");
    if (feasibility_target <= 0.0 || feasibility_target >= 1.0) {
        throw std::invalid_argument("feasibility_target must lie in (0, 1)");
    }
    if (density * m * (m - 1) < 2.0) {
        throw std::invalid_argument("density too small: it must allow at least one edge");
    }

    std::vector<std::pair<int, int>> pairs;
    for (int l = 1; l <= m; ++l) {
        for (int i = l + 1; i <= m; ++i) pairs.emplace_back(l, i);
    }
    const int total = static_cast<int>(pairs.size());
    const int count = static_cast<int>(std::ceil(density * m * (m - 1) / 2.0));

    for (int t = 0; t < count; ++t) {
        std::uniform_int_distribution<int> pick(t, total - 1);
        std::swap(pairs[t], pairs[pick(gen)]);
    }
    pairs.resize(count);
    std::sort(pairs.begin(), pairs.end());

    std::set<std::pair<int, int>> directed;
    for (const auto& [l, i] : pairs) {
        directed.insert({l, i});
        directed.insert({i, l});
    }
    EdgeSet graph(m, std::move(directed));

    DoubleSidedPoly h = DoubleSidedPoly::zero(m, n);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int k = 0; k <= n; ++k) {
        for (const auto& [l, i] : pairs) {
            h.block(k)(l - 1, i - 1) = normal(gen);
            h.block(k)(i - 1, l - 1) = normal(gen);
        }
    }
    h.block(0) = 0.5 * (h.block(0) + h.block(0).transpose()).eval();

    double max_eig = 0.0;
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es;
    for (int j = 0; j < kDefaultGrid; ++j) {
        es.compute(eval_h(h, 2.0 * M_PI * j / kDefaultGrid), Eigen::EigenvaluesOnly);
        max_eig = std::max(max_eig, es.eigenvalues()(m - 1));
    }
    if (max_eig > 0.0) {
        const double scale = feasibility_target / max_eig;
        for (int k = 0; k <= n; ++k) h.block(k) *= scale;
    }
    return {std::move(h), std::move(graph)};
}

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double bits_to_unit(std::uint64_t bits) { return ((bits >> 11) + 0.5) * 0x1.0p-53; }

/// Step-up recursion: reflection coefficients with |kappa| < 1 mapped to a
/// strictly minimum-phase monic polynomial.
std::vector<double> reflection_to_poly(const std::vector<double>& kappa) {
    std::vector<double> cur;
    for (std::size_t j = 1; j <= kappa.size(); ++j) {
        std::vector<double> next(j);
        for (std::size_t i = 1; i < j; ++i) next[i - 1] = cur[i - 1] + kappa[j - 1] * cur[j - i - 1];
        next[j - 1] = kappa[j - 1];
        cur = std::move(next);
    }
    return cur;
}

}  // namespace

double noise_draw(std::uint64_t seed, long long t, int channel) {
    const std::uint64_t base =
        mix64(seed ^ mix64(static_cast<std::uint64_t>(t) ^ mix64(static_cast<std::uint64_t>(channel))));
    const double u1 = bits_to_unit(mix64(base));
    const double u2 = bits_to_unit(mix64(base + 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

NoncausalModel random_model(int m, int n, double density, double feasibility_target,
                            std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    auto [h, graph] = random_ar_part(m, n, density, feasibility_target, gen);
    return NoncausalModel(std::move(h), std::move(graph));
}

NoncausalModel random_arma(int m, int n, int p, double density, double feasibility_target,
                           std::uint64_t seed) {
    if (p < 0) throw std::invalid_argument("MA order must be nonnegative");
    std::mt19937_64 gen(seed);
    auto [h, graph] = random_ar_part(m, n, density, feasibility_target, gen);
    if (p == 0) return NoncausalModel(std::move(h), std::move(graph));

    std::uniform_real_distribution<double> uniform(-0.9, 0.9);
    std::vector<std::vector<double>> coeffs(m);
    for (int l = 0; l < m; ++l) {
        std::vector<double> kappa(p);
        for (int j = 0; j < p; ++j) kappa[j] = uniform(gen);
        coeffs[l] = reflection_to_poly(kappa);
    }
    return NoncausalModel(std::move(h), std::move(graph), DiagonalMAPoly(m, p, std::move(coeffs)));
}

Matrix sample_trajectory(const NoncausalModel& model, int num_samples, std::uint64_t seed,
                         int burn_in) {
    if (num_samples < 1) throw std::invalid_argument("num_samples must be positive");
    const DoubleSidedPoly& h = model.h();
    const int m = h.m;
    const int n = h.n;
    const int b = burn_in >= 0 ? burn_in : std::max(50, 10 * n);
    const int len = num_samples + 2 * b;
    const int size = m * len;
    const int bw = m * n + m - 1;

    // Lower band of T, band(d, c) = T(c + d, c).
    Matrix band = Matrix::Zero(bw + 1, size);
    for (int t = 0; t < len; ++t) {
        for (int bcol = 0; bcol < m; ++bcol) {
            for (int a = bcol; a < m; ++a) {
                band(a - bcol, m * t + bcol) = (a == bcol ? 1.0 : 0.0) - h.block(0)(a, bcol);
            }
        }
        for (int k = 1; k <= std::min(n, len - 1 - t); ++k) {
            for (int bcol = 0; bcol < m; ++bcol) {
                for (int a = 0; a < m; ++a) {
                    band(m * k + a - bcol, m * t + bcol) = -0.5 * h.block(k)(a, bcol);
                }
            }
        }
    }

    // In-place banded Cholesky T = L L^T.
    for (int c = 0; c < size; ++c) {
        const int start = std::max(0, c - bw);
        double v = band(0, c);
        for (int k = start; k < c; ++k) v -= band(c - k, k) * band(c - k, k);
        if (v <= 0.0) {
            throw std::runtime_error(
                "time-domain operator is not positive definite (infeasible model)");
        }
        const double pivot = std::sqrt(v);
        band(0, c) = pivot;
        for (int row = c + 1; row <= std::min(size - 1, c + bw); ++row) {
            double s = band(row - c, c);
            for (int k = std::max(start, row - bw); k < c; ++k) {
                s -= band(row - k, k) * band(c - k, k);
            }
            band(row - c, c) = s / pivot;
        }
    }

    Vector x(size);
    for (int t = 0; t < len; ++t) {
        for (int ch = 0; ch < m; ++ch) {
            x(m * t + ch) = noise_draw(seed, static_cast<long long>(t) - b, ch);
        }
    }
    // Forward then backward band substitution, in place.
    for (int c = 0; c < size; ++c) {
        double s = x(c);
        for (int k = std::max(0, c - bw); k < c; ++k) s -= band(c - k, k) * x(k);
        x(c) = s / band(0, c);
    }
    for (int c = size - 1; c >= 0; --c) {
        double s = x(c);
        for (int row = c + 1; row <= std::min(size - 1, c + bw); ++row) {
            s -= band(row - c, c) * x(row);
        }
        x(c) = s / band(0, c);
    }

    Matrix xi(m, len);
    for (int t = 0; t < len; ++t) xi.col(t) = x.segment(m * t, m);

    if (model.ma_order() > 0) {
        const DiagonalMAPoly& a = *model.a();
        Matrix y(m, len);
        for (int l = 0; l < m; ++l) {
            const std::vector<double>& cl = a.channel(l);
            for (int t = 0; t < len; ++t) {
                double s = xi(l, t);
                for (int k = 1; k <= a.order() && k <= t; ++k) s += cl[k - 1] * xi(l, t - k);
                y(l, t) = s;
            }
        }
        xi = std::move(y);
    }
    return xi.middleCols(b, num_samples);
}

}  // namespace ncgm
