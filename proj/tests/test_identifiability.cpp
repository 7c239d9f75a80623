#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "random_ops.hpp"
#include "tclid/identifiability.hpp"

#include <cmath>

using namespace tclid;

namespace {

Operator sp(PauliAxis a, int site) { return site_pauli(a, site, 3); }

Operator conjugate(const Operator& u, const Operator& o) { return Operator(u.matrix().adjoint() * o.matrix() * u.matrix()); }

double dist(const Operator& a, const Operator& b) { return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff(); }

} // namespace

TEST_CASE("operator_rank on the examples")
{
    const ExampleSystem a = build_atom_example();
    const std::vector<Operator> z{pauli(PauliAxis::Z)};
    const std::vector<Operator> one{Operator::identity(2)};
    CHECK(operator_rank(a.model, z).rank == 1);
    CHECK(operator_rank(a.model, one).rank == 0);

    const ExampleSystem c = build_spin_chain_example();
    const std::vector<Operator> z1{sp(PauliAxis::Z, 0)};
    const std::vector<Operator> all_z{sp(PauliAxis::Z, 0), sp(PauliAxis::Z, 1), sp(PauliAxis::Z, 2)};
    CHECK(operator_rank(c.model, z1).rank == 1);
    const RankReport r = operator_rank(c.model, all_z);
    CHECK(r.rank == 3);
    CHECK(r.independent_indices == std::vector<std::size_t>{0, 1, 2});

    // The image of sigma_z on one site under sigma_- on that site is -(1 + sigma_z).
    const RealVector img = image_array(a.model, pauli(PauliAxis::Z));
    CHECK(img.size() == 2 * 1 * 4);
    CHECK(img.norm() == doctest::Approx(std::sqrt(4.0 + 0.0)).epsilon(1e-14));
}

TEST_CASE("extension of a single spin-chain observable")
{
    const ExampleSystem c = build_spin_chain_example();
    const std::vector<Operator> z1{sp(PauliAxis::Z, 0)};
    const ExtensionStep step = extend_observables(c.model, z1);
    CHECK(step.current.rank == 1);
    CHECK(step.current.dependent.empty());
    CHECK(step.current.path == ExtensionPath::Adjoin);
    REQUIRE(step.next.size() == 1);
    // i[H, sigma_z^1] with the XX + YY coupling of strength 1 between sites 1 and 2.
    const Operator expected = Operator(sp(PauliAxis::Y, 0).matrix() * sp(PauliAxis::X, 1).matrix() -
                                       sp(PauliAxis::X, 0).matrix() * sp(PauliAxis::Y, 1).matrix());
    CHECK(dist(step.next[0], expected) <= 1e-14);
    const Operator h = c.model.hamiltonian();
    const Operator direct(Complex(0, 1) * (h.matrix() * z1[0].matrix() - z1[0].matrix() * h.matrix()));
    CHECK(dist(step.next[0], direct) <= 1e-14);
}

TEST_CASE("duplicated observable is fully dependent")
{
    const TclModel dephasing(Complex(0.5) * pauli(PauliAxis::Z), {pauli(PauliAxis::Minus), pauli(PauliAxis::Z)});
    const std::vector<Operator> dup{pauli(PauliAxis::Z), pauli(PauliAxis::Z)};
    const ExtensionStep step = extend_observables(dephasing, dup);
    CHECK(step.current.rank == 1);
    CHECK(step.current.independent == std::vector<std::size_t>{0});
    CHECK(step.current.dependent == std::vector<std::size_t>{1});
    REQUIRE(step.current.v.rows() == 1);
    REQUIRE(step.current.v.cols() == 1);
    CHECK(step.current.v(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(step.current.path == ExtensionPath::Dependency);
    REQUIRE(step.next.size() == 1);
    CHECK(step.next[0].max_abs() <= 1e-14);

    const ExtensionCertificate cert = relative_degree(dephasing, dup);
    CHECK(!cert.invertible());
    CHECK(cert.generations.back().path == ExtensionPath::Exhausted);
}

TEST_CASE("relative degree")
{
    const ExampleSystem a = build_atom_example();
    const std::vector<Operator> z{pauli(PauliAxis::Z)};
    const std::vector<Operator> one{Operator::identity(2)};
    const ExtensionCertificate cz = relative_degree(a.model, z, 0, {"sigma_z"});
    REQUIRE(cz.invertible());
    CHECK(*cz.alpha == 1);
    CHECK(cz.generations.size() == 1);
    CHECK(cz.generations[0].path == ExtensionPath::Terminal);
    CHECK(cz.base_names == std::vector<std::string>{"sigma_z"});
    CHECK(!relative_degree(a.model, one).invertible());

    const ExampleSystem c = build_spin_chain_example();
    const std::vector<Operator> all_z{sp(PauliAxis::Z, 0), sp(PauliAxis::Z, 1), sp(PauliAxis::Z, 2)};
    CHECK(relative_degree(c.model, all_z).alpha == 1);

    const std::vector<Operator> z1{sp(PauliAxis::Z, 0)};
    const ExtensionCertificate c1 = relative_degree(c.model, z1);
    int previous = 0;
    for (const auto& g : c1.generations) {
        CHECK(g.cumulative_rank >= previous);
        previous = g.cumulative_rank;
    }
    if (c1.invertible()) {
        CHECK(*c1.alpha == static_cast<int>(c1.generations.size()));
        CHECK(c1.generations.back().cumulative_rank == 3);
    }
    CHECK(c1.generations.size() <= 64);
}

TEST_CASE("rank and relative degree are basis independent")
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        const int d = 4;
        const Operator h = testing::random_hermitian(rng, d);
        const std::vector<Operator> ls{testing::random_operator(rng, d), testing::random_operator(rng, d)};
        const std::vector<Operator> obs{testing::random_hermitian(rng, d)};
        const Operator u(testing::random_unitary(rng, d));

        std::vector<Operator> ls_u;
        for (const auto& l : ls) ls_u.push_back(conjugate(u, l));
        const TclModel m(h, ls), mu(conjugate(u, h), ls_u);
        const std::vector<Operator> obs_u{conjugate(u, obs[0])};

        const RankReport r = operator_rank(m, obs), ru = operator_rank(mu, obs_u);
        CHECK(r.rank == ru.rank);
        REQUIRE(r.gram_singular_values.size() == ru.gram_singular_values.size());
        CHECK((r.gram_singular_values - ru.gram_singular_values).norm() <= 1e-10 * r.gram_singular_values.norm());
        CHECK(relative_degree(m, obs).alpha == relative_degree(mu, obs_u).alpha);
    }
}

TEST_CASE("adding observables never lowers the rank")
{
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const TclModel m(testing::random_hermitian(rng, 2),
                         {testing::random_operator(rng, 2), testing::random_operator(rng, 2), testing::random_operator(rng, 2)});
        std::vector<Operator> obs;
        int previous = 0;
        for (int i = 0; i < 4; ++i) {
            obs.push_back(testing::random_hermitian(rng, 2));
            const int r = operator_rank(m, obs).rank;
            CHECK(r >= previous);
            CHECK(r <= std::min<int>(static_cast<int>(obs.size()), 3));
            previous = r;
        }
    }
}

TEST_CASE("extended_w_b")
{
    SUBCASE("first generation reproduces the identifier rows")
    {
        const ExampleSystem a = build_atom_example();
        const Trajectory traj = simulate(a.model, a.rates, a.initial_state, 1.0, 100);
        const TraceSet traces = measure_traces(traj, a.pool, 0.0, 0);
        const std::vector<Operator> z{pauli(PauliAxis::Z)};
        const std::vector<std::string> names{"sigma_z"};
        const ExtensionCertificate cert = relative_degree(a.model, z, 0, names);
        const std::size_t k = 40;
        const std::vector<Operator> states{traj.states[k]};
        const ExtendedSystem ext = extended_w_b(a.model, cert, traces, k, states);
        CHECK(ext.w == build_w(a.model, traj.states[k], z));
        CHECK(ext.b == build_b(traces, k, a.model, traj.states[k], names, z));
        CHECK(ext.row_generation == std::vector<int>{1});
        CHECK_THROWS_AS(extended_w_b(a.model, cert, traces, 100, states), std::out_of_range);
    }

    SUBCASE("zero operators contribute no rows")
    {
        const TclModel dephasing(Complex(0.5) * pauli(PauliAxis::Z), {pauli(PauliAxis::Minus), pauli(PauliAxis::Z)});
        const std::vector<Operator> dup{pauli(PauliAxis::Z), pauli(PauliAxis::Z)};
        const ExtensionCertificate cert = relative_degree(dephasing, dup, 0, {"a", "b"});
        TraceSet t;
        t.dt = 0.1;
        t.names = {"a", "b"};
        t.samples = RealMatrix::Zero(2, 5);
        const std::vector<Operator> states{Operator(Complex(0.5) * Operator::identity(2).matrix())};
        const ExtendedSystem ext = extended_w_b(dephasing, cert, t, 0, states);
        CHECK(ext.w.rows() == 2);
        CHECK(ext.row_generation == std::vector<int>{1, 1});
    }

    SUBCASE("adjoined row matches the second derivative at first order")
    {
        const ExampleSystem c = build_spin_chain_example();
        const std::vector<Operator> z1{sp(PauliAxis::Z, 0)};
        const ExtensionCertificate cert = relative_degree(c.model, z1, 2, {"sigma_z1"});
        REQUIRE(cert.generations.size() == 2);
        REQUIRE(cert.generations[0].path == ExtensionPath::Adjoin);

        const auto row_error = [&](int k_steps) {
            const double t_eval = 0.5;
            const Trajectory traj = simulate(c.model, c.rates, c.initial_state, 1.0, k_steps);
            const TraceSet traces = measure_traces(traj, c.pool, 0.0, 0);
            const auto k = static_cast<std::size_t>(std::lround(t_eval / traj.dt));
            std::vector<double> hint;
            for (const auto& r : c.rates) hint.push_back(eval_rate(r, t_eval));
            const std::vector<Operator> states{traj.states[k], traj.states[k + 1]};
            const ExtendedSystem ext = extended_w_b(c.model, cert, traces, k, states, hint);
            REQUIRE(ext.row_generation == std::vector<int>{1, 2});
            const RealVector g = Eigen::Map<const RealVector>(hint.data(), 3);
            // d/dt of the first-generation row also differentiates the rates.
            RealVector g_dot(3);
            for (Eigen::Index n = 0; n < 3; ++n) {
                const auto& r = c.rates[static_cast<std::size_t>(n)];
                g_dot(n) = (eval_rate(r, t_eval + 1e-5) - eval_rate(r, t_eval - 1e-5)) / 2e-5;
            }
            return std::abs(ext.w.row(1).dot(g) + ext.w.row(0).dot(g_dot) - ext.b(1));
        };
        const double e1 = row_error(1000), e2 = row_error(2000);
        CHECK(e1 <= 5e-2);
        CHECK(e2 / e1 >= 0.4);
        CHECK(e2 / e1 <= 0.6);
    }
}
