#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "random_ops.hpp"
#include "tclid/qops.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <vector>

using namespace tclid;
using tclid::testing::random_density;
using tclid::testing::random_hermitian;
using tclid::testing::random_matrix;
using tclid::testing::random_operator;

namespace {

const Complex I1(0.0, 1.0);

double dist(const Operator& a, const Operator& b) { return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff(); }
double dist(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

Operator from_rows(std::initializer_list<std::initializer_list<Complex>> rows)
{
    const int d = static_cast<int>(rows.size());
    Matrix m(d, d);
    int r = 0;
    for (const auto& row : rows) {
        int c = 0;
        for (const auto& v : row) m(r, c++) = v;
        ++r;
    }
    return Operator(m);
}

const Operator sx = from_rows({{0, 1}, {1, 0}});
const Operator sy = from_rows({{0, -I1}, {I1, 0}});
const Operator sz = from_rows({{1, 0}, {0, -1}});
const Operator sm = from_rows({{0, 0}, {1, 0}});
const Operator id2 = from_rows({{1, 0}, {0, 1}});
const Operator excited = from_rows({{1, 0}, {0, 0}});
const Operator ground = from_rows({{0, 0}, {0, 1}});

/// Eigendecomposition oracle for diagonalizable matrices.
Matrix expm_oracle(const Matrix& m)
{
    Eigen::ComplexEigenSolver<Matrix> es(m);
    const Matrix v = es.eigenvectors();
    const Vector e = es.eigenvalues().array().exp();
    return v * e.asDiagonal() * v.inverse();
}

Operator unit_norm(Operator o) { return o * Complex(1.0 / o.matrix().norm()); }

} // namespace

TEST_CASE("operator construction rejects non-square matrices")
{
    CHECK_THROWS_AS(Operator(Matrix(2, 3)), DimensionError);
    CHECK(Operator::identity(3).trace() == Complex(3.0));
    CHECK(Operator::zero(2).max_abs() == 0.0);
    CHECK_THROWS_AS(sx + Operator::identity(4), DimensionError);
    CHECK_THROWS_AS(sx * Operator::identity(4), DimensionError);
}

TEST_CASE("Pauli conventions")
{
    CHECK(dist(pauli(PauliAxis::X), sx) == 0.0);
    CHECK(dist(pauli(PauliAxis::Y), sy) == 0.0);
    CHECK(dist(pauli(PauliAxis::Z), sz) == 0.0);
    CHECK(dist(pauli(PauliAxis::Minus), sm) == 0.0);
    CHECK(dist(pauli(PauliAxis::Plus), sm.adjoint()) == 0.0);
    CHECK(parse_pauli_axis("+") == PauliAxis::Plus);
    CHECK(parse_pauli_axis("minus") == PauliAxis::Minus);
    CHECK_THROWS(parse_pauli_axis("w"));
}

TEST_CASE("kron")
{
    CHECK(dist(kron(id2, id2), Operator::identity(4)) == 0.0);

    Matrix zi = Matrix::Zero(4, 4);
    zi.diagonal() << 1, 1, -1, -1;
    CHECK(dist(kron(sz, id2).matrix(), zi) == 0.0);

    const Operator xx = kron(sx, sx);
    CHECK(dist(xx * xx, Operator::identity(4)) == 0.0);

    const Operator ab = kron(sx, sy);
    CHECK(ab(0, 3) == -I1);
    CHECK(ab(3, 0) == I1);
}

TEST_CASE("site_pauli")
{
    CHECK(dist(site_pauli(PauliAxis::Z, 0, 1), sz) == 0.0);

    // sigma_minus maps |e> = (1,0) to |g> = (0,1).
    Vector e(2);
    e << 1, 0;
    const Vector g = site_pauli(PauliAxis::Minus, 0, 1).matrix() * e;
    CHECK(g(0) == Complex(0.0));
    CHECK(g(1) == Complex(1.0));

    // I (x) sigma_x (x) I written out entry by entry: flips the middle bit.
    const Operator x1 = site_pauli(PauliAxis::X, 1, 3);
    REQUIRE(x1.dim() == 8);
    Matrix expected = Matrix::Zero(8, 8);
    for (int i = 0; i < 8; ++i) expected(i ^ 2, i) = 1.0;
    CHECK(dist(x1.matrix(), expected) == 0.0);

    CHECK_THROWS_AS(site_pauli(PauliAxis::X, 3, 3), std::out_of_range);
    CHECK_THROWS_AS(site_pauli(PauliAxis::X, -1, 3), std::out_of_range);
}

TEST_CASE("commutator")
{
    CHECK(dist(commutator(sx, sy), Complex(0.0, 2.0) * sz) < 1e-15);
    std::mt19937_64 rng(1);
    const Operator a = random_operator(rng, 3);
    CHECK(commutator(a, a).max_abs() <= 1e-14);
    CHECK(commutator(sz, 0.5 * 1.3 * sz).max_abs() == 0.0);
    CHECK_THROWS_AS(commutator(sx, Operator::identity(3)), DimensionError);
}

TEST_CASE("dissipator_apply")
{
    CHECK(dist(dissipator_apply(sm, excited), ground - excited) < 1e-15);
    CHECK(dissipator_apply(sm, ground).max_abs() == 0.0);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 10; ++i) {
        const Operator l = random_operator(rng, 3);
        const Operator rho = random_density(rng, 3);
        CHECK(std::abs(dissipator_apply(l, rho).trace()) < 1e-12);
    }
    CHECK_THROWS_AS(dissipator_apply(sm, Operator::identity(3)), DimensionError);
}

TEST_CASE("adjoint_dissipator_apply")
{
    CHECK(dist(adjoint_dissipator_apply(sm, sz), -(id2 + sz)) < 1e-15);
    CHECK(dist(adjoint_dissipator_apply(sm, sx), Complex(-0.5) * sx) < 1e-15);
    CHECK(adjoint_dissipator_apply(sm, id2).max_abs() == 0.0);
}

TEST_CASE("adjoint_hamiltonian_apply")
{
    const double omega = 1.7;
    const Operator h = Complex(0.5 * omega) * sz;
    CHECK(dist(adjoint_hamiltonian_apply(h, sx), Complex(-omega) * sy) < 1e-15);
    CHECK(adjoint_hamiltonian_apply(h, sz).max_abs() == 0.0);
}

TEST_CASE("duality, trace annihilation and unitality on random instances")
{
    std::mt19937_64 rng(3);
    for (int d : {2, 4, 8}) {
        for (int i = 0; i < 100; ++i) {
            const Operator l = unit_norm(random_operator(rng, d));
            const Operator h = unit_norm(random_hermitian(rng, d));
            const Operator o = unit_norm(random_hermitian(rng, d));
            const Operator rho = random_density(rng, d);

            const Complex lhs_d = expectation(o, dissipator_apply(l, rho));
            const Complex rhs_d = expectation(adjoint_dissipator_apply(l, o), rho);
            CHECK(std::abs(lhs_d - rhs_d) <= 1e-11);

            const Complex lhs_h = expectation(o, Complex(0.0, -1.0) * commutator(h, rho));
            const Complex rhs_h = expectation(adjoint_hamiltonian_apply(h, o), rho);
            CHECK(std::abs(lhs_h - rhs_h) <= 1e-11);

            CHECK(std::abs(dissipator_apply(l, rho).trace()) <= 1e-11);
            CHECK(std::abs(commutator(h, rho).trace()) <= 1e-11);
            CHECK(adjoint_dissipator_apply(l, Operator::identity(d)).max_abs() <= 1e-12);
            CHECK(adjoint_hamiltonian_apply(h, Operator::identity(d)).max_abs() <= 1e-12);
        }
    }
}

TEST_CASE("vectorize is column stacking")
{
    const Vector vi = vectorize(id2);
    CHECK(vi(0) == Complex(1.0));
    CHECK(vi(1) == Complex(0.0));
    CHECK(vi(2) == Complex(0.0));
    CHECK(vi(3) == Complex(1.0));

    const Vector vx = vectorize(sx);
    CHECK(vx(0) == Complex(0.0));
    CHECK(vx(1) == Complex(1.0));
    CHECK(vx(2) == Complex(1.0));
    CHECK(vx(3) == Complex(0.0));

    const Operator a = from_rows({{1, 2}, {3, 4}});
    const Vector va = vectorize(a);
    CHECK(va(1) == Complex(3.0)); // (row 1, col 0)
    CHECK(dist(unvectorize(va, 2), a) == 0.0);
    CHECK_THROWS_AS(unvectorize(va, 3), DimensionError);

    std::mt19937_64 rng(4);
    for (int d : {3, 2, 4, 8}) {
        const int reps = d == 3 ? 10 : 100;
        for (int i = 0; i < reps; ++i) {
            const Matrix x = random_matrix(rng, d) / d;
            const Matrix p = random_matrix(rng, d) / d;
            const Matrix q = random_matrix(rng, d) / d;
            Matrix bt_a(d * d, d * d);
            const Matrix bt = q.transpose();
            for (int r = 0; r < d; ++r) {
                for (int c = 0; c < d; ++c) bt_a.block(r * d, c * d, d, d) = bt(r, c) * p;
            }
            const Vector lhs = vectorize(Operator(p * x * q));
            const Vector rhs = bt_a * vectorize(Operator(x));
            CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("superoperators reproduce the operator-level maps")
{
    std::mt19937_64 rng(5);
    const int d = 3;
    const Operator h = random_hermitian(rng, d);
    const Operator l1 = random_operator(rng, d);
    const Operator l2 = random_operator(rng, d);
    const std::vector<Operator> channels{l1, l2};
    const std::vector<double> gamma{0.3, -0.7};
    const Superoperator m = liouvillian_matrix(h, channels, gamma);
    for (int i = 0; i < 10; ++i) {
        const Operator rho = random_density(rng, d);
        const Operator direct = Complex(0.0, -1.0) * commutator(h, rho) + Complex(0.3) * dissipator_apply(l1, rho) +
                                Complex(-0.7) * dissipator_apply(l2, rho);
        CHECK(dist(m.apply(rho), direct) <= 1e-12);
        CHECK(std::abs(m.apply(rho).trace()) <= 1e-12);
    }

    const std::vector<double> zero{0.0, 0.0};
    CHECK(liouvillian_matrix(Operator::zero(d), channels, zero).matrix().cwiseAbs().maxCoeff() == 0.0);
    const std::vector<double> short_gamma{1.0};
    CHECK_THROWS_AS(liouvillian_matrix(h, channels, short_gamma), DimensionError);
}

TEST_CASE("AffineLiouvillian is affine in gamma")
{
    std::mt19937_64 rng(6);
    const int d = 4;
    const Operator h = random_hermitian(rng, d);
    const std::vector<Operator> channels{random_operator(rng, d), random_operator(rng, d), random_operator(rng, d)};
    const AffineLiouvillian gen(h, channels);
    const std::vector<double> gamma{0.4, -1.1, 2.5};
    const Matrix m0 = gen.at(std::vector<double>{0, 0, 0}).matrix();
    Matrix assembled = m0;
    for (std::size_t n = 0; n < 3; ++n) {
        std::vector<double> e(3, 0.0);
        e[n] = 1.0;
        assembled += gamma[n] * (gen.at(e).matrix() - m0);
    }
    CHECK(dist(gen.at(gamma).matrix(), assembled) <= 1e-12);
}

TEST_CASE("expm")
{
    CHECK(dist(expm(Matrix::Zero(4, 4)), Matrix::Identity(4, 4)) == 0.0);

    Matrix diag = Matrix::Zero(2, 2);
    diag(0, 0) = 0.7;
    diag(1, 1) = Complex(-1.2, 0.4);
    const Matrix ed = expm(diag);
    CHECK(std::abs(ed(0, 0) - std::exp(Complex(0.7))) < 1e-14);
    CHECK(std::abs(ed(1, 1) - std::exp(Complex(-1.2, 0.4))) < 1e-14);
    CHECK(std::abs(ed(0, 1)) == 0.0);

    // Liouvillian of a pure rotation about x: rho -> U rho U^dagger with
    // U = cos(theta/2) I - i sin(theta/2) sigma_x, i.e. conj(U) (x) U on vec(rho).
    const double theta = 0.9;
    const Superoperator rot = hamiltonian_superoperator(Complex(0.5 * theta) * sx);
    const Matrix u = expm(rot.matrix());
    const Operator ux = Complex(std::cos(theta / 2)) * id2 + Complex(0.0, -std::sin(theta / 2)) * sx;
    const Operator closed_form = kron(Operator(ux.matrix().conjugate()), ux);
    CHECK(dist(u, closed_form.matrix()) <= 1e-14);
    CHECK(dist(u.adjoint() * u, Matrix::Identity(4, 4)) <= 1e-12);

    std::mt19937_64 rng(7);
    for (int d : {2, 5, 16}) {
        for (int i = 0; i < 10; ++i) {
            const Matrix a = random_matrix(rng, d) * (1.5 / std::sqrt(static_cast<double>(d)));
            const Matrix ref = expm_oracle(a);
            CHECK((expm(a) - ref).norm() / ref.norm() <= 1e-10);
        }
    }

    Matrix bad = Matrix::Zero(2, 2);
    bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(expm(bad), NumericalError);
}

TEST_CASE("expm is multiplicative on commuting pairs")
{
    std::mt19937_64 rng(8);
    for (int i = 0; i < 20; ++i) {
        const Matrix a = random_matrix(rng, 4) * 0.4;
        const Matrix b = 0.3 * a * a - 0.5 * a + Complex(0.2, 0.1) * Matrix::Identity(4, 4);
        const Matrix lhs = expm(a + b);
        const Matrix rhs = expm(a) * expm(b);
        CHECK((lhs - rhs).norm() <= 1e-9 * std::max(1.0, lhs.norm()));
    }
}
