#pragma once

#include <vector>

#include "ncgm/spectra.hpp"

namespace ncgm {

/// One-sided vector AR model y(t) = sum_k A_k y(t-k) + e(t), cov(e) = sigma.
struct MeModel {
    int m = 0;
    int n = 0;
    std::vector<Matrix> a;  ///< a[k-1] is the lag-k coefficient block, k = 1..n
    Matrix sigma;
};

/**
 * @brief Maximum-entropy covariance extension of R_0..R_n: the order-n vector
 *        AR model matching those lags.
 *
 * Solves the multichannel Yule-Walker equations by the Levinson-Whittle
 * recursion. Throws if the block-Toeplitz matrix of the lags is singular or
 * indefinite.
 */
MeModel me_var(const CovSequence& r);

/// AR spectrum (I - sum_k A_k e^{-jk theta})^{-1} Sigma (I - sum_k A_k e^{-jk theta})^{-*}.
SpectrumGrid me_spectrum(const MeModel& model, int grid_size = kDefaultGrid);

/**
 * @brief Maps a spectrum into the double-sided parametrization: computes
 *        G(theta) = I - Phi(theta)^{-1/2} pointwise and returns its Fourier
 *        coefficient blocks folded to the H_0 + (1/2) sum (H_k z^{-k} + H_k^T z^k)
 *        convention (H_0 = C_0 symmetrized, H_k = 2 Re C_k).
 *
 * The result's support is unconstrained and its diagonal is not forced to
 * zero. For phi of the exact form (I-H)^{-2} with H of order <= n this
 * recovers H. The imaginary residue is verified below 1e-8 before discarding.
 */
DoubleSidedPoly extract_h(const SpectrumGrid& phi, int n);

}  // namespace ncgm
