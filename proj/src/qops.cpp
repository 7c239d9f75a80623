// Operator algebra implementation

#include "tclid/qops.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace tclid {

namespace {

void require_same_dim(const Operator& a, const Operator& b, const char* what)
{
    if (a.dim() != b.dim()) {
        throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.dim()) +
                             " vs " + std::to_string(b.dim()) + ")");
    }
}

const Complex kI{0.0, 1.0};

} // namespace

// ------------------------------- Operator ----------------------------------

Operator::Operator(Matrix entries) : m_(std::move(entries))
{
    if (m_.rows() != m_.cols()) {
        throw DimensionError("Operator: matrix must be square, got " + std::to_string(m_.rows()) + "x" +
                             std::to_string(m_.cols()));
    }
}

Operator Operator::identity(int dim) { return Operator(Matrix::Identity(dim, dim)); }
Operator Operator::zero(int dim) { return Operator(Matrix::Zero(dim, dim)); }

double Operator::hermiticity_defect() const
{
    if (m_.size() == 0) return 0.0;
    return (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
}

double Operator::max_abs() const
{
    if (m_.size() == 0) return 0.0;
    return m_.cwiseAbs().maxCoeff();
}

Operator& Operator::operator+=(const Operator& o)
{
    require_same_dim(*this, o, "Operator::operator+=");
    m_ += o.m_;
    return *this;
}

Operator& Operator::operator-=(const Operator& o)
{
    require_same_dim(*this, o, "Operator::operator-=");
    m_ -= o.m_;
    return *this;
}

Operator& Operator::operator*=(Complex s)
{
    m_ *= s;
    return *this;
}

Operator operator*(const Operator& a, const Operator& b)
{
    require_same_dim(a, b, "Operator::operator*");
    return Operator(a.m_ * b.m_);
}

// ----------------------------- Superoperator -------------------------------

Superoperator::Superoperator(int dim, Matrix matrix) : dim_(dim), m_(std::move(matrix))
{
    const auto side = static_cast<Eigen::Index>(dim) * dim;
    if (m_.rows() != side || m_.cols() != side) {
        throw DimensionError("Superoperator: matrix side must be dim^2 = " + std::to_string(side));
    }
}

Superoperator Superoperator::zero(int dim)
{
    const auto side = static_cast<Eigen::Index>(dim) * dim;
    return {dim, Matrix::Zero(side, side)};
}

Operator Superoperator::apply(const Operator& o) const
{
    if (o.dim() != dim_) throw DimensionError("Superoperator::apply: dimension mismatch");
    return unvectorize(m_ * vectorize(o), dim_);
}

Superoperator& Superoperator::operator+=(const Superoperator& o)
{
    if (o.dim_ != dim_) throw DimensionError("Superoperator::operator+=: dimension mismatch");
    m_ += o.m_;
    return *this;
}

// ------------------------------ Pauli family -------------------------------

PauliAxis parse_pauli_axis(const std::string& s)
{
    if (s == "x" || s == "X") return PauliAxis::X;
    if (s == "y" || s == "Y") return PauliAxis::Y;
    if (s == "z" || s == "Z") return PauliAxis::Z;
    if (s == "+" || s == "plus") return PauliAxis::Plus;
    if (s == "-" || s == "minus") return PauliAxis::Minus;
    throw std::invalid_argument("unknown Pauli axis '" + s + "'");
}

std::string to_string(PauliAxis axis)
{
    switch (axis) {
    case PauliAxis::X: return "x";
    case PauliAxis::Y: return "y";
    case PauliAxis::Z: return "z";
    case PauliAxis::Plus: return "+";
    case PauliAxis::Minus: return "-";
    }
    return "?";
}

Operator pauli(PauliAxis axis)
{
    Matrix m = Matrix::Zero(2, 2);
    switch (axis) {
    case PauliAxis::X: m(0, 1) = 1.0; m(1, 0) = 1.0; break;
    case PauliAxis::Y: m(0, 1) = -kI; m(1, 0) = kI; break;
    case PauliAxis::Z: m(0, 0) = 1.0; m(1, 1) = -1.0; break;
    case PauliAxis::Plus: m(0, 1) = 1.0; break;  // |e><g|
    case PauliAxis::Minus: m(1, 0) = 1.0; break; // |g><e|
    }
    return Operator(std::move(m));
}

Operator kron(const Operator& a, const Operator& b)
{
    return Operator(Eigen::kroneckerProduct(a.matrix(), b.matrix()).eval());
}

Operator site_pauli(PauliAxis axis, int site, int n_sites)
{
    if (n_sites < 1) throw std::out_of_range("site_pauli: n_sites must be >= 1");
    if (site < 0 || site >= n_sites) {
        throw std::out_of_range("site_pauli: site " + std::to_string(site) + " out of range [0, " +
                                std::to_string(n_sites) + ")");
    }
    Operator out = site == 0 ? pauli(axis) : Operator::identity(2);
    for (int s = 1; s < n_sites; ++s) {
        out = kron(out, s == site ? pauli(axis) : Operator::identity(2));
    }
    return out;
}

// ------------------------ Generators and adjoints --------------------------

Operator commutator(const Operator& a, const Operator& b)
{
    require_same_dim(a, b, "commutator");
    return Operator(a.matrix() * b.matrix() - b.matrix() * a.matrix());
}

Operator dissipator_apply(const Operator& l, const Operator& rho)
{
    require_same_dim(l, rho, "dissipator_apply");
    const Matrix& L = l.matrix();
    const Matrix& R = rho.matrix();
    const Matrix LdL = L.adjoint() * L;
    return Operator(L * R * L.adjoint() - 0.5 * (LdL * R + R * LdL));
}

Operator adjoint_dissipator_apply(const Operator& l, const Operator& o)
{
    require_same_dim(l, o, "adjoint_dissipator_apply");
    const Matrix& L = l.matrix();
    const Matrix& O = o.matrix();
    const Matrix LdL = L.adjoint() * L;
    return Operator(L.adjoint() * O * L - 0.5 * (LdL * O + O * LdL));
}

Operator adjoint_hamiltonian_apply(const Operator& h, const Operator& o)
{
    require_same_dim(h, o, "adjoint_hamiltonian_apply");
    return Operator(-kI * (o.matrix() * h.matrix() - h.matrix() * o.matrix()));
}

Complex expectation(const Operator& a, const Operator& rho)
{
    require_same_dim(a, rho, "expectation");
    // tr[A rho] = sum_ij A_ij rho_ji
    return a.matrix().cwiseProduct(rho.matrix().transpose()).sum();
}

// ----------------------------- Vectorization -------------------------------

Vector vectorize(const Operator& o)
{
    // Eigen storage is column-major, so the raw buffer is already column-stacked.
    return Eigen::Map<const Vector>(o.matrix().data(), o.matrix().size());
}

Operator unvectorize(const Vector& v, int dim)
{
    if (v.size() != static_cast<Eigen::Index>(dim) * dim) {
        throw DimensionError("unvectorize: length " + std::to_string(v.size()) + " is not dim^2 for dim " +
                             std::to_string(dim));
    }
    return Operator(Eigen::Map<const Matrix>(v.data(), dim, dim));
}

Superoperator hamiltonian_superoperator(const Operator& h)
{
    const int d = h.dim();
    const Matrix id = Matrix::Identity(d, d);
    // vec(H rho) = (I kron H) vec(rho);  vec(rho H) = (H^T kron I) vec(rho)
    Matrix m = -kI * (Eigen::kroneckerProduct(id, h.matrix()).eval() -
                      Eigen::kroneckerProduct(h.matrix().transpose(), id).eval());
    return {d, std::move(m)};
}

Superoperator dissipator_superoperator(const Operator& l)
{
    const int d = l.dim();
    const Matrix id = Matrix::Identity(d, d);
    const Matrix& L = l.matrix();
    const Matrix LdL = L.adjoint() * L;
    Matrix m = Eigen::kroneckerProduct(L.conjugate(), L).eval();
    m -= 0.5 * Eigen::kroneckerProduct(id, LdL).eval();
    m -= 0.5 * Eigen::kroneckerProduct(LdL.transpose(), id).eval();
    return {d, std::move(m)};
}

AffineLiouvillian::AffineLiouvillian(const Operator& hamiltonian, std::span<const Operator> channels)
    : drift_(hamiltonian_superoperator(hamiltonian))
{
    dissipators_.reserve(channels.size());
    for (const auto& l : channels) {
        require_same_dim(hamiltonian, l, "AffineLiouvillian");
        dissipators_.push_back(dissipator_superoperator(l));
    }
}

Superoperator AffineLiouvillian::at(std::span<const double> gamma) const
{
    if (gamma.size() != dissipators_.size()) {
        throw DimensionError("liouvillian: gamma has length " + std::to_string(gamma.size()) + ", expected " +
                             std::to_string(dissipators_.size()));
    }
    Matrix m = drift_.matrix();
    for (std::size_t n = 0; n < dissipators_.size(); ++n) {
        if (gamma[n] != 0.0) m += gamma[n] * dissipators_[n].matrix();
    }
    return {drift_.dim(), std::move(m)};
}

Superoperator liouvillian_matrix(const Operator& hamiltonian,
                                 std::span<const Operator> channels,
                                 std::span<const double> gamma)
{
    return AffineLiouvillian(hamiltonian, channels).at(gamma);
}

Matrix expm(const Matrix& m)
{
    if (m.rows() != m.cols()) throw DimensionError("expm: matrix must be square");
    if (!m.allFinite()) throw NumericalError("expm: non-finite input entries");
    if (m.size() == 0) return m;
    Matrix out = m.exp();
    if (!out.allFinite()) throw NumericalError("expm: non-finite result");
    return out;
}

} // namespace tclid
