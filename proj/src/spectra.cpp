#include "ncgm/spectra.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace ncgm {

namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

// Eigenvalues of a Hermitian sample, rejecting non-positive-definite input.
// Tiny negative rounding noise is clamped at the floor before any sqrt/log.
Eigen::SelfAdjointEigenSolver<ComplexMatrix> pd_eig(const ComplexMatrix& sample, int j,
                                                    double theta) {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(sample);
    const double scale = std::max(1.0, sample.cwiseAbs().maxCoeff());
    if (es.eigenvalues().minCoeff() < -1e-12 * scale) {
        std::ostringstream os;
        os << "spectrum sample " << j << " (theta = " << theta
           << ") is not positive definite (min eigenvalue "
           << es.eigenvalues().minCoeff() << ")";
        throw std::invalid_argument(os.str());
    }
    return es;
}

}  // namespace

SpectrumGrid::SpectrumGrid(int m_, int grid_size_) : m(m_), grid_size(grid_size_) {
    if (m <= 0) throw std::invalid_argument("SpectrumGrid: dimension must be positive");
    if (!is_power_of_two(grid_size))
        throw std::invalid_argument("SpectrumGrid: grid_size must be a power of two");
    values.assign(static_cast<std::size_t>(grid_size), ComplexMatrix::Identity(m, m));
}

double SpectrumGrid::theta(int j) const {
    return 2.0 * std::numbers::pi * j / grid_size;
}

SpectrumGrid SpectrumGrid::identity(int m_, int grid_size_) {
    return SpectrumGrid(m_, grid_size_);
}

SpectrumGrid spectrum_from_h(const DoubleSidedPoly& h, int grid_size) {
    SpectrumGrid phi(h.m, grid_size);
    const ComplexMatrix identity = ComplexMatrix::Identity(h.m, h.m);
    double worst = std::numeric_limits<double>::infinity();
    double worst_theta = 0.0;
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es;
    for (int j = 0; j < grid_size; ++j) {
        const double theta = phi.theta(j);
        es.compute(identity - eval_h(h, theta));
        const double lmin = es.eigenvalues().minCoeff();
        if (lmin < worst) {
            worst = lmin;
            worst_theta = theta;
        }
        if (lmin <= 0.0) continue;  // keep scanning to report the worst angle
        ComplexMatrix sq = es.eigenvectors() *
                           es.eigenvalues().cwiseInverse().cwiseAbs2().asDiagonal() *
                           es.eigenvectors().adjoint();
        phi.values[static_cast<std::size_t>(j)] = 0.5 * (sq + sq.adjoint());
    }
    if (worst <= 0.0) {
        std::ostringstream os;
        os << "spectrum_from_h: infeasible polynomial, I - H(e^{j theta}) has minimum "
           << "eigenvalue " << worst << " at theta = " << worst_theta;
        throw std::invalid_argument(os.str());
    }
    return phi;
}

CovSequence cov_from_spectrum(const SpectrumGrid& phi, int n) {
    if (phi.grid_size < 4 * (n + 1))
        throw std::invalid_argument("cov_from_spectrum: grid_size must be at least 4(n+1)");
    const std::complex<double> jc(0.0, 1.0);
    CovSequence r(phi.m, n);
    std::vector<ComplexMatrix> acc(static_cast<std::size_t>(n) + 1,
                                   ComplexMatrix::Zero(phi.m, phi.m));
    for (int j = 0; j < phi.grid_size; ++j) {
        const double theta = phi.theta(j);
        const ComplexMatrix& sample = phi.values[static_cast<std::size_t>(j)];
        for (int k = 0; k <= n; ++k)
            acc[static_cast<std::size_t>(k)] += sample * std::exp(jc * (k * theta));
    }
    const double r0_norm = (acc[0].real() / phi.grid_size).norm();
    for (int k = 0; k <= n; ++k) {
        ComplexMatrix lag = acc[static_cast<std::size_t>(k)] / phi.grid_size;
        const double scale = std::max(lag.real().norm(), r0_norm);
        if (lag.imag().cwiseAbs().maxCoeff() > 1e-8 * std::max(scale, 1e-300)) {
            std::ostringstream os;
            os << "cov_from_spectrum: imaginary residue "
               << lag.imag().cwiseAbs().maxCoeff() << " in lag " << k
               << " exceeds tolerance; the spectrum is not conjugate-symmetric or the "
               << "grid is too coarse, try a larger grid_size";
            throw std::invalid_argument(os.str());
        }
        r.lag(k) = lag.real();
    }
    r.lag(0) = 0.5 * (r.lag(0) + r.lag(0).transpose()).eval();
    return r;
}

CovSequence sample_cov(const Matrix& data, int n) {
    const int m = static_cast<int>(data.rows());
    const int N = static_cast<int>(data.cols());
    if (N <= n)
        throw std::invalid_argument("sample_cov: need more samples than the max lag");
    CovSequence r(m, n);
    for (int k = 0; k <= n; ++k) {
        Matrix acc = Matrix::Zero(m, m);
        for (int t = 0; t + k < N; ++t)
            acc += data.col(t + k) * data.col(t).transpose();
        r.lag(k) = acc / static_cast<double>(N);
    }
    r.lag(0) = 0.5 * (r.lag(0) + r.lag(0).transpose()).eval();
    return r;
}

double d_hellinger(const SpectrumGrid& phi) {
    double acc = 0.0;
    for (int j = 0; j < phi.grid_size; ++j) {
        const ComplexMatrix& sample = phi.values[static_cast<std::size_t>(j)];
        auto es = pd_eig(sample, j, phi.theta(j));
        double term = static_cast<double>(phi.m);
        for (int i = 0; i < phi.m; ++i) {
            const double lambda = std::max(es.eigenvalues()(i), kEigenvalueFloor);
            term += lambda - 2.0 * std::sqrt(lambda);
        }
        acc += term;
    }
    return acc / phi.grid_size;
}

double d_rel(const SpectrumGrid& phi) {
    double acc = 0.0;
    for (int j = 0; j < phi.grid_size; ++j) {
        const ComplexMatrix& sample = phi.values[static_cast<std::size_t>(j)];
        auto es = pd_eig(sample, j, phi.theta(j));
        for (int i = 0; i < phi.m; ++i) {
            const double lambda = std::max(es.eigenvalues()(i), kEigenvalueFloor);
            acc += lambda - std::log(lambda);
        }
    }
    return 0.5 * (acc / phi.grid_size - phi.m);
}

void write_spectrum_csv(const SpectrumGrid& phi, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_spectrum_csv: cannot open " + path);
    out << "theta";
    for (int a = 0; a < phi.m; ++a)
        for (int b = 0; b < phi.m; ++b) out << ",re_" << (a + 1) << "_" << (b + 1);
    for (int a = 0; a < phi.m; ++a)
        for (int b = 0; b < phi.m; ++b) out << ",im_" << (a + 1) << "_" << (b + 1);
    out << "\n";
    char buf[32];
    for (int j = 0; j < phi.grid_size; ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", phi.theta(j));
        out << buf;
        const ComplexMatrix& sample = phi.values[static_cast<std::size_t>(j)];
        for (int a = 0; a < phi.m; ++a)
            for (int b = 0; b < phi.m; ++b) {
                std::snprintf(buf, sizeof(buf), "%.17g", sample(a, b).real());
                out << "," << buf;
            }
        for (int a = 0; a < phi.m; ++a)
            for (int b = 0; b < phi.m; ++b) {
                std::snprintf(buf, sizeof(buf), "%.17g", sample(a, b).imag());
                out << "," << buf;
            }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write_spectrum_csv: write failed for " + path);
}

}  // namespace ncgm
