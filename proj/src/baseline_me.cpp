#include "ncgm/baseline_me.hpp"

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace ncgm {

namespace {

Matrix pd_inverse(const Matrix& s, const char* what) {
    Eigen::LLT<Matrix> llt(s);
    if (llt.info() != Eigen::Success) {
        std::ostringstream os;
        os << "covariance block-Toeplitz matrix is singular or indefinite (" << what << ")";
        throw std::runtime_error(os.str());
    }
    return llt.solve(Matrix::Identity(s.rows(), s.cols()));
}

}  // namespace

MeModel me_var(const CovSequence& r) {
    const int m = r.m;
    const int n = r.n;

    MeModel model;
    model.m = m;
    model.n = n;

    // Levinson-Whittle recursion on forward/backward prediction coefficients.
    std::vector<Matrix> a, b;
    Matrix sigma_f = r.lag(0);
    Matrix sigma_b = r.lag(0);
    for (int nu = 0; nu < n; ++nu) {
        Matrix delta = r.lag(nu + 1);
        for (int k = 1; k <= nu; ++k) delta -= a[k - 1] * r.lag(nu + 1 - k);

        const Matrix kf = delta * pd_inverse(sigma_b, "backward prediction error");
        const Matrix kb = delta.transpose() * pd_inverse(sigma_f, "forward prediction error");

        std::vector<Matrix> a_next(nu + 1), b_next(nu + 1);
        for (int k = 1; k <= nu; ++k) {
            a_next[k - 1] = a[k - 1] - kf * b[nu - k];
            b_next[k - 1] = b[k - 1] - kb * a[nu - k];
        }
        a_next[nu] = kf;
        b_next[nu] = kb;

        sigma_f -= kf * delta.transpose();
        sigma_b -= kb * delta;
        a = std::move(a_next);
        b = std::move(b_next);
    }
    pd_inverse(sigma_f, "final prediction error");

    model.a = std::move(a);
    model.sigma = 0.5 * (sigma_f + sigma_f.transpose());
    return model;
}

SpectrumGrid me_spectrum(const MeModel& model, int grid_size) {
    const int m = model.m;
    SpectrumGrid phi(m, grid_size);
    const ComplexMatrix id = ComplexMatrix::Identity(m, m);
    for (int j = 0; j < grid_size; ++j) {
        const double theta = phi.theta(j);
        ComplexMatrix g = id;
        for (int k = 1; k <= model.n; ++k) {
            g -= model.a[k - 1].cast<std::complex<double>>() * std::polar(1.0, -k * theta);
        }
        const ComplexMatrix gi = g.inverse();
        const ComplexMatrix sample = gi * model.sigma.cast<std::complex<double>>() * gi.adjoint();
        phi.values[j] = 0.5 * (sample + sample.adjoint());
    }
    return phi;
}

DoubleSidedPoly extract_h(const SpectrumGrid& phi, int n) {
    if (n < 0) throw std::invalid_argument("target order must be nonnegative");
    if (phi.grid_size < 4 * (n + 1)) throw std::invalid_argument("grid too coarse for this order");
    const int m = phi.m;
    const int grid = phi.grid_size;

    std::vector<ComplexMatrix> acc(n + 1, ComplexMatrix::Zero(m, m));
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es;
    for (int j = 0; j < grid; ++j) {
        es.compute(phi.values[j]);
        const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
        if (es.eigenvalues()(0) <= -1e-12 * scale) {
            std::ostringstream os;
            os << "spectrum sample " << j << " is not positive definite (min eigenvalue "
               << es.eigenvalues()(0) << ")";
            throw std::runtime_error(os.str());
        }
        Vector inv_sqrt(m);
        for (int i = 0; i < m; ++i) {
            inv_sqrt(i) = 1.0 / std::sqrt(std::max(es.eigenvalues()(i), kEigenvalueFloor));
        }
        const ComplexMatrix g =
            ComplexMatrix::Identity(m, m) -
            es.eigenvectors() * inv_sqrt.cast<std::complex<double>>().asDiagonal() *
                es.eigenvectors().adjoint();
        for (int k = 0; k <= n; ++k) acc[k] += g * std::polar(1.0, k * phi.theta(j));
    }

    DoubleSidedPoly h = DoubleSidedPoly::zero(m, n);
    double residue = 0.0;
    double scale = 0.0;
    for (int k = 0; k <= n; ++k) {
        const ComplexMatrix c = acc[k] / grid;
        residue = std::max(residue, c.imag().cwiseAbs().maxCoeff());
        scale = std::max(scale, c.real().cwiseAbs().maxCoeff());
        if (k == 0) {
            h.block(0) = 0.5 * (c.real() + c.real().transpose());
        } else {
            h.block(k) = 2.0 * c.real();
        }
    }
    if (residue > 1e-8 * std::max(scale, 1.0)) {
        std::ostringstream os;
        os << "imaginary residue " << residue
           << " in extracted coefficients exceeds tolerance; spectrum lacks the conjugate "
              "symmetry of a real process";
        throw std::runtime_error(os.str());
    }
    return h;
}

}  // namespace ncgm
