#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "random_ops.hpp"
#include "tclid/propagator.hpp"

#include <cmath>

using namespace tclid;

namespace {

double dist(const Operator& a, const Operator& b) { return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff(); }

Operator bloch_state(double x, double y, double z)
{
    return Complex(0.5) * (Operator::identity(2) + Complex(x) * pauli(PauliAxis::X) + Complex(y) * pauli(PauliAxis::Y) +
                           Complex(z) * pauli(PauliAxis::Z));
}

TclModel qubit_model(double omega)
{
    return TclModel(Complex(0.5 * omega) * pauli(PauliAxis::Z), {pauli(PauliAxis::Minus)});
}

} // namespace

TEST_CASE("Larmor precession")
{
    const double omega = 1.3;
    const TclModel m = qubit_model(omega);
    const Operator rho = bloch_state(1, 0, 0);
    const std::vector<double> zero{0.0};
    for (double dt : {0.01, 0.5, 2.0}) {
        const Operator next = step(m, rho, zero, dt);
        CHECK(expectation(pauli(PauliAxis::X), next).real() == doctest::Approx(std::cos(omega * dt)).epsilon(1e-12));
        CHECK(expectation(pauli(PauliAxis::Y), next).real() == doctest::Approx(std::sin(omega * dt)).epsilon(1e-12));
    }
    CHECK(dist(step(m, rho, zero, 0.0), rho) == 0.0);
}

TEST_CASE("Markovian decay")
{
    const double g = 0.37;
    const TclModel m = qubit_model(1.0);
    const std::vector<double> gamma{g};
    Operator rho = bloch_state(0, 0, 1);
    const double dt = 0.05;
    for (int k = 1; k <= 100; ++k) {
        rho = step(m, rho, gamma, dt);
        CHECK(expectation(pauli(PauliAxis::Z), rho).real() ==
              doctest::Approx(2 * std::exp(-g * k * dt) - 1).epsilon(1e-11));
    }
}

TEST_CASE("step preconditions and semigroup property")
{
    const TclModel m = qubit_model(1.0);
    const Operator rho = bloch_state(0.3, -0.2, 0.5);
    CHECK_THROWS_AS(step(m, rho, std::vector<double>{0.1, 0.2}, 0.1), DimensionError);
    CHECK_THROWS_AS(step(m, rho, std::vector<double>{0.1}, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(step(m, Operator::identity(3), std::vector<double>{0.1}, 0.1), DimensionError);

    std::mt19937_64 rng(11);
    for (int d : {2, 4}) {
        const TclModel r(testing::random_hermitian(rng, d), {testing::random_operator(rng, d), testing::random_operator(rng, d)});
        const Operator r0 = testing::random_density(rng, d);
        const std::vector<double> gamma{0.4, -0.1};
        const Stepper s(r);
        const Operator twice = s.step(s.step(r0, gamma, 0.03), gamma, 0.03);
        CHECK(dist(twice, s.step(r0, gamma, 0.06)) <= 1e-10);
        CHECK(std::abs(twice.trace() - Complex(1.0)) <= 1e-10);
    }
}

TEST_CASE("simulate")
{
    SUBCASE("frozen dynamics")
    {
        const TclModel m(Operator::zero(2), {pauli(PauliAxis::Minus)});
        const std::vector<RateFunction> rates{HyperbolicRate{0.0, 0.1, 0.6}};
        const Operator rho0 = bloch_state(0.1, 0.2, 0.3);
        const Trajectory t = simulate(m, rates, rho0, 1.0, 20);
        REQUIRE(t.states.size() == 21);
        for (const auto& s : t.states) CHECK(dist(s, rho0) < 1e-15);
    }

    SUBCASE("atom preset keeps unit trace")
    {
        const ExampleSystem a = build_atom_example();
        const Trajectory t = simulate(a.model, a.rates, a.initial_state, 10.0, 10000);
        CHECK(t.dt == doctest::Approx(1e-3));
        CHECK(t.steps() == 10000);
        CHECK(std::abs(t.states.back().trace() - Complex(1.0)) < 1e-8);
    }

    SUBCASE("left-endpoint rate sampling converges at first order")
    {
        const ExampleSystem a = build_atom_example();
        const auto final_z = [&](int k) {
            return expectation(pauli(PauliAxis::Z), simulate(a.model, a.rates, a.initial_state, 10.0, k).states.back())
                .real();
        };
        const double y1 = final_z(1000), y2 = final_z(2000), y4 = final_z(4000);
        const double ratio = (y2 - y4) / (y1 - y2);
        CHECK(ratio >= 0.4);
        CHECK(ratio <= 0.6);
    }

    SUBCASE("invalid initial state")
    {
        const ExampleSystem a = build_atom_example();
        CHECK_THROWS(simulate(a.model, a.rates, Operator::identity(2), 1.0, 10));
        CHECK_THROWS(simulate(a.model, a.rates, Operator(pauli(PauliAxis::Minus).matrix() + bloch_state(0, 0, 0).matrix()), 1.0, 10));
        CHECK_THROWS(simulate(a.model, a.rates, a.initial_state, 1.0, 0));
    }
}

TEST_CASE("spin chain trajectory stays Hermitian with unit trace")
{
    const ExampleSystem c = build_spin_chain_example();
    const Trajectory t = simulate(c.model, c.rates, c.initial_state, 10.0, 30000);
    double trace_dev = 0.0, herm = 0.0;
    for (const auto& s : t.states) {
        trace_dev = std::max(trace_dev, std::abs(s.trace() - Complex(1.0)));
        herm = std::max(herm, s.hermiticity_defect());
    }
    CHECK(trace_dev <= 1e-8);
    CHECK(herm <= 1e-8);
}

TEST_CASE("measure_traces")
{
    const ExampleSystem a = build_atom_example();
    const Trajectory t = simulate(a.model, a.rates, a.initial_state, 1.0, 100);
    const TraceSet exact = measure_traces(t, a.pool, 0.0, 1);
    REQUIRE(exact.names == a.pool.names());
    REQUIRE(exact.sample_count() == 101);
    CHECK(exact.value("sigma_z", 0) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-15));
    for (std::size_t k = 0; k <= 100; ++k) {
        for (const auto& ob : a.pool.observables()) {
            CHECK(std::abs(exact.value(ob.name, k) - expectation(ob.op, t.states[k]).real()) <= 1e-12);
        }
    }

    const TraceSet n1 = measure_traces(t, a.pool, 0.05, 42);
    const TraceSet n2 = measure_traces(t, a.pool, 0.05, 42);
    const TraceSet n3 = measure_traces(t, a.pool, 0.05, 43);
    CHECK(n1.samples == n2.samples);
    CHECK(n1.samples != n3.samples);
    const RealMatrix diff = n1.samples - exact.samples;
    const double sd = std::sqrt(diff.array().square().mean());
    CHECK(sd == doctest::Approx(0.05).epsilon(0.15));

    CHECK_THROWS(measure_traces(t, a.pool, -1.0, 1));
    CHECK_THROWS_AS(exact.value("sigma_q", 0), std::out_of_range);
}
