// Operator algebra: Pauli/ladder construction, Lindblad generators
// and their Heisenberg-picture adjoints, vectorization, matrix exponential.
//
// Basis convention: computational basis with the excited state first, so
// sigma_z = diag(1, -1) and sigma_minus = |g><e| = [[0,0],[1,0]].
//
// Vectorization is column stacking: vec(A X B) = (B^T kron A) vec(X).

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tclid {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Largest Hilbert dimension accepted by model validation.
inline constexpr int kMaxDim = 64;

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dense complex square matrix on a d-dimensional Hilbert space.
/// Hermiticity is a predicate, not a construction invariant.
class Operator {
public:
    Operator() = default;
    explicit Operator(Matrix entries);

    static Operator identity(int dim);
    static Operator zero(int dim);

    int dim() const { return static_cast<int>(m_.rows()); }
    const Matrix& matrix() const { return m_; }

    Complex operator()(int r, int c) const { return m_(r, c); }

    Operator adjoint() const { return Operator(m_.adjoint()); }
    Complex trace() const { return m_.trace(); }

    /// max |A - A^dagger| over entries.
    double hermiticity_defect() const;
    bool is_hermitian(double tol = 1e-10) const { return hermiticity_defect() <= tol; }

    /// Largest entry magnitude.
    double max_abs() const;

    Operator& operator+=(const Operator& o);
    Operator& operator-=(const Operator& o);
    Operator& operator*=(Complex s);

    friend Operator operator+(Operator a, const Operator& b) { return a += b; }
    friend Operator operator-(Operator a, const Operator& b) { return a -= b; }
    friend Operator operator*(Operator a, Complex s) { return a *= s; }
    friend Operator operator*(Complex s, Operator a) { return a *= s; }
    friend Operator operator*(const Operator& a, const Operator& b);
    friend Operator operator-(const Operator& a) { return Operator(-a.m_); }

private:
    Matrix m_;
};

/// Linear map on operators, stored as a d^2 x d^2 matrix acting on
/// column-stacked vectorizations.
class Superoperator {
public:
    Superoperator() = default;
    Superoperator(int dim, Matrix matrix);

    static Superoperator zero(int dim);

    int dim() const { return dim_; }
    const Matrix& matrix() const { return m_; }

    Operator apply(const Operator& o) const;

    Superoperator& operator+=(const Superoperator& o);
    friend Superoperator operator*(double s, const Superoperator& a) { return {a.dim_, s * a.m_}; }

private:
    int dim_ = 0;
    Matrix m_;
};

enum class PauliAxis { X, Y, Z, Plus, Minus };

/// Parses "x", "y", "z", "+", "-" (also "plus"/"minus").
PauliAxis parse_pauli_axis(const std::string& s);
std::string to_string(PauliAxis axis);

Operator pauli(PauliAxis axis);
Operator kron(const Operator& a, const Operator& b);

/// I x ... x sigma_axis x ... x I with sigma at position `site`; dim = 2^n_sites.
Operator site_pauli(PauliAxis axis, int site, int n_sites);

/// a b - b a. Callers apply the -i factor.
Operator commutator(const Operator& a, const Operator& b);

/// L rho L^dagger - 1/2 L^dagger L rho - 1/2 rho L^dagger L.
Operator dissipator_apply(const Operator& l, const Operator& rho);

/// L^dagger O L - 1/2 L^dagger L O - 1/2 O L^dagger L.
Operator adjoint_dissipator_apply(const Operator& l, const Operator& o);

/// -i (O H - H O): Heisenberg generator of the Hamiltonian part.
Operator adjoint_hamiltonian_apply(const Operator& h, const Operator& o);

/// tr[A rho].
Complex expectation(const Operator& a, const Operator& rho);

Vector vectorize(const Operator& o);
Operator unvectorize(const Vector& v, int dim);

/// Superoperator of rho -> -i[H, rho].
Superoperator hamiltonian_superoperator(const Operator& h);
/// Superoperator of rho -> L rho L^dagger - 1/2 {L^dagger L, rho}.
Superoperator dissipator_superoperator(const Operator& l);

/// Generator rho -> -i[H, rho] + sum_n gamma_n D[L_n] rho, affine in gamma.
/// The pieces are assembled once; at() is a cheap linear combination.
class AffineLiouvillian {
public:
    AffineLiouvillian(const Operator& hamiltonian, std::span<const Operator> channels);

    int dim() const { return drift_.dim(); }
    std::size_t channel_count() const { return dissipators_.size(); }

    Superoperator at(std::span<const double> gamma) const;

    const Superoperator& drift() const { return drift_; }
    const Superoperator& dissipator(std::size_t n) const { return dissipators_.at(n); }

private:
    Superoperator drift_;
    std::vector<Superoperator> dissipators_;
};

Superoperator liouvillian_matrix(const Operator& hamiltonian,
                                 std::span<const Operator> channels,
                                 std::span<const double> gamma);

/// Matrix exponential (scaling and squaring with Pade approximants).
/// Throws NumericalError on non-finite input.
Matrix expm(const Matrix& m);

} // namespace tclid
