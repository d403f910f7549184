#include <cmath>
#include <random>

#include "ddfv/diagnostics.hpp"
#include "support.hpp"

using namespace ddfv;
using testing::kind_of;

namespace {

State make_state(std::vector<double> n, std::vector<double> p, PotentialField psi, std::vector<double> nd,
                 std::vector<double> pd) {
    State s;
    s.n_cells = std::move(n);
    s.p_cells = std::move(p);
    s.psi = std::move(psi);
    s.n_dirichlet = std::move(nd);
    s.p_dirichlet = std::move(pd);
    return s;
}

EquilibriumState trivial_equilibrium(const Mesh& m) {
    const std::vector<double> c(m.num_cells(), 0.0);
    return solve_equilibrium(m, 1.0, c, 0.0, std::vector<double>(m.num_dirichlet(), 0.0));
}

}  // namespace

TEST_CASE("h1 seminorm") {
    const Mesh neumann = build_rectangular_mesh(2, 2, {0, 1, 0, 1});
    std::vector<double> board(4);
    for (std::size_t k = 0; k < 4; ++k) {
        const Point2 c = neumann.cell(k).center;
        board[k] = (c.x < 0.5) == (c.y < 0.5) ? 0.0 : 1.0;
    }
    CHECK(h1_seminorm(board, {}, neumann) == doctest::Approx(2.0).epsilon(1e-15));

    const Mesh m = testing::x_contacts(4, 4);
    CHECK(h1_seminorm(std::vector<double>(16, 1.5), std::vector<double>(m.num_dirichlet(), 1.5), m) == 0.0);

    // u = x on the 2x2 contact mesh: 2 interior vertical edges with jump 0.5, tau 1; 4 Dirichlet edges with
    // jump 0.25, tau 2; horizontal edges carry no jump
    const Mesh c2 = testing::x_contacts(2, 2);
    std::vector<double> u(4), ud;
    for (std::size_t k = 0; k < 4; ++k) u[k] = c2.cell(k).center.x;
    for (auto e : c2.dirichlet_edges()) ud.push_back(c2.edge(e).geometry->midpoint().x);
    CHECK(h1_seminorm(u, ud, c2) == doctest::Approx(std::sqrt(2 * 0.25 + 4 * 2 * 0.0625)).epsilon(1e-15));
}

TEST_CASE("relative entropy") {
    const Mesh m = testing::all_dirichlet(1, 1);
    const EquilibriumState eq = trivial_equilibrium(m);
    const State at_eq = make_state(eq.n_star, eq.p_star, eq.psi_star, {1, 1, 1, 1}, {1, 1, 1, 1});
    CHECK(relative_entropy(at_eq, eq, m, 1.0) == 0.0);
    const State up = make_state({std::exp(1.0)}, {1.0}, eq.psi_star, {1, 1, 1, 1}, {1, 1, 1, 1});
    CHECK(relative_entropy(up, eq, m, 1.0) == doctest::Approx(1.0).epsilon(1e-15));

    const Mesh m4 = testing::x_contacts(4, 4);
    const EquilibriumState eq4 = trivial_equilibrium(m4);
    PotentialField psi = eq4.psi_star;
    for (std::size_t k = 0; k < 16; ++k) psi.cell_values[k] = std::sin(double(k));
    const State s = make_state(eq4.n_star, eq4.p_star, psi, {}, {});
    const double e1 = relative_entropy(s, eq4, m4, 1.0), e2 = relative_entropy(s, eq4, m4, 2.0);
    CHECK(e1 > 0.0);
    CHECK(e2 == doctest::Approx(4.0 * e1).epsilon(1e-14));
}

TEST_CASE("entropy terms are cellwise nonnegative and control the truncated mass") {
    const Mesh m = testing::x_contacts(6, 6);
    std::vector<double> c(36);
    for (std::size_t k = 0; k < 36; ++k) c[k] = m.cell(k).center.x < 0.5 ? 2.0 : -2.0;
    const EquilibriumState eq = solve_equilibrium(m, 0.5, c, 0.0, std::vector<double>(m.num_dirichlet(), 0.0));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 8.0);
    for (int trial = 0; trial < 50; ++trial) {
        State s = make_state({}, {}, eq.psi_star, {}, {});
        for (std::size_t k = 0; k < 36; ++k) {
            s.n_cells.push_back(trial == 0 ? 0.0 : u(rng));
            s.p_cells.push_back(u(rng));
        }
        double entropy_part = 0.0;
        for (double t : entropy_cell_terms(s, eq, m)) {
            CHECK(t >= 0.0);
            entropy_part += t;
        }
        double mass = 0.0;
        for (std::size_t k = 0; k < 36; ++k) mass += m.cell(k).measure * (s.n_cells[k] / 2.0 - eq.n_star[k]);
        CHECK(mass <= entropy_part + 1e-13);
    }
}

TEST_CASE("entropy production") {
    const Mesh m = testing::all_dirichlet(1, 1);
    const double e = std::exp(1.0);
    const PotentialField flat{{0.0}, {0, 0, 0, 0}};
    const State s = make_state({e}, {1.0}, flat, {e, e, e, e}, {1, 1, 1, 1});
    const EntropyProduction ip = entropy_production(s, m, RecombinationSpec::constant(1.0));
    CHECK(ip.electron_edges == 0.0);
    CHECK(ip.hole_edges == 0.0);
    CHECK(ip.recombination == doctest::Approx(e - 1.0).epsilon(1e-15));
    CHECK_FALSE(ip.flagged);

    // zero weight kills the edge term
    const State z = make_state({0.0}, {1.0}, flat, {3, 3, 3, 3}, {1, 1, 1, 1});
    const EntropyProduction iz = entropy_production(z, m, RecombinationSpec::none());
    CHECK(iz.electron_edges == 0.0);
    CHECK(std::isfinite(iz.total()));

    // NP = 0 with recombination: capped and flagged
    const EntropyProduction capped = entropy_production(z, m, RecombinationSpec::constant(1.0));
    CHECK(capped.flagged);
    CHECK(capped.recombination <= 1e6);
    CHECK(capped.recombination > 0.0);

    const Mesh m4 = testing::x_contacts(5, 3);
    std::vector<double> c(15, 0.0);
    for (std::size_t k = 0; k < 15; ++k) c[k] = m4.cell(k).center.x < 0.5 ? 1.0 : -1.0;
    const EquilibriumState eq = solve_equilibrium(m4, 1.0, c, 0.0, std::vector<double>(m4.num_dirichlet(), 0.0));
    const State at_eq =
        make_state(eq.n_star, eq.p_star, eq.psi_star, std::vector<double>(m4.num_dirichlet(), 1.0),
                   std::vector<double>(m4.num_dirichlet(), 1.0));
    CHECK(entropy_production(at_eq, m4, RecombinationSpec::srh(1, 1)).total() <= 1e-20);
}

TEST_CASE("gamma bound") {
    const Mesh m = testing::x_contacts(3, 3);
    CHECK(gamma_bound({std::vector<double>(9, 2.0), std::vector<double>(m.num_dirichlet(), 2.0)}, m) == 1.0);

    // 2x1 mesh, one interior edge, Neumann elsewhere
    const Mesh two = build_rectangular_mesh(2, 1, {0, 2, 0, 1});
    CHECK(gamma_bound({{0.0, 1.0}, {}}, two) == doctest::Approx(1.0 / (std::exp(1.0) - 1.0)).epsilon(1e-15));
    const double g1 = gamma_bound({{0.0, 1.0, 0.0, 0, 0, 0, 0, 0, 0}, std::vector<double>(6, 0.0)}, m);
    const double g2 = gamma_bound({{0.0, 1.0, 3.0, 0, 0, 0, 0, 0, 0}, std::vector<double>(6, 0.0)}, m);
    CHECK(g2 <= g1);
    CHECK(g2 > 0.0);
}

TEST_CASE("truncated moments") {
    const Mesh m = testing::all_dirichlet(1, 1);
    const PotentialField flat{{0.0}, {0, 0, 0, 0}};
    const double cap = 1.5;
    const State s = make_state({cap + 2.0}, {cap + 1.0}, flat, {}, {});
    CHECK(v_moment(s, cap, 2.0, m) == 5.0);
    CHECK(v_moment(s, cap, 1.0, m) == 3.0);
    CHECK(v_moment(make_state({1.0}, {1.5}, flat, {}, {}), cap, 3.0, m) == 0.0);
    CHECK(kind_of([&] { v_moment(s, cap, 0.5, m); }) == ErrorKind::InvalidArgument);
    CHECK(kind_of([&] { v_moment(s, 0.0, 2.0, m); }) == ErrorKind::InvalidArgument);
    const std::vector<double> q = default_q_list();
    CHECK(q == std::vector<double>{1, 2, 3, 5, 9, 17});
}

TEST_CASE("dissipation check") {
    DiagnosticsRecord a, b;
    a.time_index = 4;
    b.time_index = 5;
    a.entropy = 1.0;
    b.entropy = 0.7;
    b.production = 2.0;
    b.dt_used = 0.1;
    b.dissipation_slack = 1e-9;
    DissipationCheck c = check_dissipation(a, b);
    CHECK(c.residual == doctest::Approx(-0.1));
    CHECK(c.pass);
    b.production = 4.0;
    c = check_dissipation(a, b);
    CHECK(c.residual == doctest::Approx(0.1));
    CHECK_FALSE(c.pass);
    a.time_index = 3;
    CHECK(kind_of([&] { check_dissipation(a, b); }) == ErrorKind::Precondition);
    a.time_index = 5;
    b.time_index = 4;
    CHECK(kind_of([&] { check_dissipation(a, b); }) == ErrorKind::Precondition);
}

TEST_CASE("measured gamma stays above the a priori bound along a run") {
    const Mesh m = testing::x_contacts(10, 4);
    DeviceModel model;
    model.lambda = 1.0;
    model.recombination = RecombinationSpec::srh(1, 1);
    for (std::size_t k = 0; k < m.num_cells(); ++k) model.doping.push_back(m.cell(k).center.x < 0.5 ? 1.0 : -1.0);
    model.n_dirichlet.assign(m.num_dirichlet(), 1.0);
    model.p_dirichlet.assign(m.num_dirichlet(), 1.0);
    model.psi_dirichlet.assign(m.num_dirichlet(), 0.0);
    const EquilibriumState eq = solve_equilibrium(m, 1.0, model.doping, 0.0, model.psi_dirichlet);
    State s = make_initial_state(m, model, std::vector<double>(40, 1.0), std::vector<double>(40, 1.0));
    const double e0 = relative_entropy(s, eq, m, 1.0);
    const double bound = apriori_gamma(e0, 1.0, h1_seminorm(eq.psi_star.cell_values, eq.psi_star.dirichlet_values, m),
                                       regularity_constants(m).c0);
    CHECK(bound > 0.0);
    double prev_entropy = e0;
    for (int n = 0; n < 10; ++n) {
        s = step(s, m, model, {}).state;
        CHECK(gamma_bound(s.psi, m) >= bound);
        const double e = relative_entropy(s, eq, m, 1.0);
        CHECK(e <= prev_entropy + 1e-12);
        CHECK(e >= 0.0);
        prev_entropy = e;
    }
}
