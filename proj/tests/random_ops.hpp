// Seeded random operators for property tests.

#pragma once

#include "tclid/qops.hpp"

#include <random>

namespace tclid::testing {

inline Matrix random_matrix(std::mt19937_64& rng, int d)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(d, d);
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) m(r, c) = Complex(n(rng), n(rng));
    }
    return m;
}

inline Operator random_operator(std::mt19937_64& rng, int d) { return Operator(random_matrix(rng, d)); }

inline Operator random_hermitian(std::mt19937_64& rng, int d)
{
    const Matrix a = random_matrix(rng, d);
    return Operator(0.5 * (a + a.adjoint()));
}

/// Random full-rank density matrix A A^dagger / tr(A A^dagger).
inline Operator random_density(std::mt19937_64& rng, int d)
{
    const Matrix a = random_matrix(rng, d);
    const Matrix p = a * a.adjoint();
    return Operator(p / p.trace().real());
}

/// Haar-ish unitary from the QR factor of a Gaussian matrix.
inline Matrix random_unitary(std::mt19937_64& rng, int d)
{
    Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, d));
    return qr.householderQ() * Matrix::Identity(d, d);
}

} // namespace tclid::testing
