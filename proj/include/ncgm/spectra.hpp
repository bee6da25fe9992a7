#pragma once

#include <string>
#include <vector>

#include "ncgm/graph_model.hpp"

namespace ncgm {

/// Floor applied to eigenvalues of nominally positive-definite spectrum
/// samples before sqrt/log/inverse-sqrt, absorbing rounding noise.
inline constexpr double kEigenvalueFloor = 1e-14;

/**
 * @brief Hermitian positive-definite spectrum samples on the uniform grid
 *        theta_j = 2 pi j / grid_size, j = 0..grid_size-1.
 *
 * grid_size must be a power of two. For spectra of real processes the samples
 * satisfy the conjugate symmetry value(theta_j) = conj(value(2 pi - theta_j)).
 */
struct SpectrumGrid {
    int m = 0;
    int grid_size = 0;
    std::vector<ComplexMatrix> values;

    SpectrumGrid() = default;
    SpectrumGrid(int m_, int grid_size_);

    double theta(int j) const;

    /// Constant spectrum, identity at every grid point.
    static SpectrumGrid identity(int m_, int grid_size_ = kDefaultGrid);
};

/// Covariance lags R_0..R_n of a stationary process, R_{-k} = R_k^T.
struct CovSequence {
    int m = 0;
    int n = 0;
    std::vector<Matrix> lags;

    CovSequence() = default;
    CovSequence(int m_, int n_)
        : m(m_), n(n_), lags(static_cast<std::size_t>(n_ + 1), Matrix::Zero(m_, m_)) {
        if (m_ < 1 || n_ < 0) throw std::invalid_argument("covariance sequence needs m >= 1, n >= 0");
    }

    const Matrix& lag(int k) const { return lags.at(static_cast<std::size_t>(k)); }
    Matrix& lag(int k) { return lags.at(static_cast<std::size_t>(k)); }
};

/// Model spectrum Phi(e^{j theta}) = (I - H(e^{j theta}))^{-2}. Throws if h is
/// infeasible on the grid, naming the worst angle.
SpectrumGrid spectrum_from_h(const DoubleSidedPoly& h, int grid_size = kDefaultGrid);

/**
 * @brief Covariance lags of a spectrum: R_k = integral of Phi e^{j k theta},
 *        evaluated by the grid quadrature (1/G) sum_j Phi(theta_j) e^{j k theta_j}.
 *
 * The imaginary residue of each lag must fall below tolerance (conjugate
 * symmetry of a real process); otherwise an aliasing error suggesting a larger
 * grid is thrown. R_0 is symmetrized.
 */
CovSequence cov_from_spectrum(const SpectrumGrid& phi, int n);

/// Biased sample covariances R_hat_k = (1/N) sum_{t=1}^{N-k} y(t+k) y(t)^T
/// for k = 0..n, with R_hat_0 symmetrized by averaging with its transpose.
CovSequence sample_cov(const Matrix& data, int n);

/**
 * @brief Squared transportation distance of phi from the identity spectrum,
 *        tr integral (Phi + I - 2 Phi^{1/2}).
 *
 * This is the closed form of the minimum over spectral factors of the
 * integrated squared factor difference; the optimal factor is the Hermitian
 * square root. The returned value is the squared distance.
 */
double d_hellinger(const SpectrumGrid& phi);

/// Relative entropy rate from the identity spectrum,
/// (1/2) { integral (log det Phi^{-1} + tr Phi) - m }.
double d_rel(const SpectrumGrid& phi);

/// Diagnostic CSV export: theta, then m^2 real and m^2 imaginary entries
/// row-major per line.
void write_spectrum_csv(const SpectrumGrid& phi, const std::string& path);

}  // namespace ncgm
