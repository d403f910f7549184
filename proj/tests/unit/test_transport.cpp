#include <array>
#include <cmath>
#include <random>

#include "ddfv/transport.hpp"
#include "one_cell.hpp"
#include "support.hpp"

using namespace ddfv;
using testing::kind_of;
using testing::OneCell;

namespace {

DeviceModel pn_model(const Mesh& m, double lambda, RecombinationSpec rec) {
    DeviceModel model;
    model.lambda = lambda;
    model.recombination = rec;
    for (std::size_t k = 0; k < m.num_cells(); ++k) model.doping.push_back(m.cell(k).center.x < 0.5 ? 1.0 : -1.0);
    model.n_dirichlet.assign(m.num_dirichlet(), 1.0);
    model.p_dirichlet.assign(m.num_dirichlet(), 1.0);
    model.psi_dirichlet.assign(m.num_dirichlet(), 0.0);
    return model;
}

}  // namespace

TEST_CASE("scharfetter-gummel flux examples") {
    CHECK(sg_flux(1.0, 0.0, 3.0, 1.0, Carrier::Electron) == 2.0);
    for (double d : {0.5, 5.0}) CHECK(sg_flux(1.0, d, 2.0, 2.0, Carrier::Electron) == doctest::Approx(2.0 * d).epsilon(1e-14));
    CHECK(sg_flux(2.0, 1.0, 1.0, 1.0, Carrier::Electron) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(sg_flux(2.0, 1.0, 1.0, 1.0, Carrier::Hole) == doctest::Approx(-2.0).epsilon(1e-14));
}

TEST_CASE("flux antisymmetry on random data") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-30.0, 30.0), u(0.0, 5.0), t(0.1, 4.0);
    for (int i = 0; i < 5000; ++i) {
        const double tau = t(rng), dpsi = d(rng), a = u(rng), b = u(rng);
        for (Carrier c : {Carrier::Electron, Carrier::Hole}) {
            const double f = sg_flux(tau, dpsi, a, b, c), g = sg_flux(tau, -dpsi, b, a, c);
            CHECK(std::abs(f + g) <= 1e-13 * (std::abs(f) + std::abs(g) + 1e-300));
        }
    }
}

TEST_CASE("recombination models") {
    for (auto r : {RecombinationSpec::none(), RecombinationSpec::constant(2.0), RecombinationSpec::srh(1.0, 3.0),
                   RecombinationSpec::auger(0.5, 0.1)})
        CHECK(recombination_rate(1.0, 1.0, r) == 0.0);
    CHECK(recombination_rate(2.0, 2.0, RecombinationSpec::constant(1.0)) == 3.0);
    CHECK(recombination_rate(2.0, 2.0, RecombinationSpec::srh(1.0, 1.0)) == 0.5);
    CHECK(recombination_rate(2.0, 3.0, RecombinationSpec::auger(1.0, 2.0)) == doctest::Approx(8.0 * 5.0));
    CHECK(RecombinationSpec::srh(1.0, 1.0).rbar() == 0.5);
    CHECK(RecombinationSpec::auger(0.5, 0.2).rbar() == 0.5);
    CHECK(RecombinationSpec::none().rbar() == 0.0);
    for (auto r : {RecombinationSpec::none(), RecombinationSpec::constant(2.0), RecombinationSpec::srh(1.0, 3.0),
                   RecombinationSpec::auger(0.5, 0.1)})
        CHECK_NOTHROW(validate_growth_bound(r));
    RecombinationSpec bad = RecombinationSpec::srh(1.0, 1.0);
    bad.tau_n = -0.9;
    CHECK(kind_of([&] { validate_growth_bound(bad); }) == ErrorKind::HypothesisViolation);
    CHECK(kind_of([] { RecombinationSpec::srh(0.0, 1.0); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("single cell residual matches hand evaluation") {
    const OneCell oc;
    const auto [mesh, model] = oc.setup();
    const State prev = oc.state(model, oc.n_prev, oc.p_prev, 0.1);
    const State next = oc.state(model, 0.9, 1.4, -0.25);
    const SchemeResidual r = residual(next, prev, mesh, model, oc.dt);
    const auto ref = oc.eval(0.9L, 1.4L, -0.25L);
    CHECK(std::abs(r.electron[0] - double(ref[0])) <= 1e-14 * (1.0 + std::abs(double(ref[0]))) * 10);
    CHECK(std::abs(r.hole[0] - double(ref[1])) <= 1e-14 * (1.0 + std::abs(double(ref[1]))) * 10);
    CHECK(std::abs(r.poisson[0] - double(ref[2])) <= 1e-14 * 10);
}

TEST_CASE("single cell step matches brute force root") {
    const OneCell oc;
    const auto [mesh, model] = oc.setup();
    const auto root = oc.solve();
    const auto check_f = oc.eval(root[0], root[1], root[2]);
    for (auto v : check_f) REQUIRE(std::abs(double(v)) <= 1e-12);

    State prev = oc.state(model, oc.n_prev, oc.p_prev, 0.0);
    StepConfig cfg;
    cfg.dt = oc.dt;
    cfg.gummel_tol = 1e-12;
    const StepResult res = step(prev, mesh, model, cfg);
    CHECK(res.dt_used == oc.dt);
    CHECK(res.state.time_index == 1);
    CHECK(std::abs(res.state.n_cells[0] - double(root[0])) <= 1e-9);
    CHECK(std::abs(res.state.p_cells[0] - double(root[1])) <= 1e-9);
    CHECK(std::abs(res.state.psi.cell_values[0] - double(root[2])) <= 1e-9);
}

TEST_CASE("constant states on an insulated mesh") {
    const Mesh m = build_rectangular_mesh(3, 3, {0, 1, 0, 1});
    DeviceModel model;
    model.doping.assign(m.num_cells(), 0.0);
    model.recombination = RecombinationSpec::constant(0.5);
    State prev, next;
    prev.n_cells.assign(9, 2.0);
    prev.p_cells.assign(9, 1.0);
    prev.psi = {std::vector<double>(9, 0.0), {}};
    next = prev;
    next.n_cells.assign(9, 1.5);
    next.p_cells.assign(9, 0.5);
    const SchemeResidual r = residual(next, prev, m, model, 0.1);
    const double vol = 1.0 / 9.0, rate = 0.5 * (1.5 * 0.5 - 1.0);
    for (std::size_t k = 0; k < 9; ++k) {
        CHECK(r.electron[k] == doctest::Approx(vol * ((1.5 - 2.0) / 0.1 + rate)).epsilon(1e-13));
        CHECK(r.hole[k] == doctest::Approx(vol * ((0.5 - 1.0) / 0.1 + rate)).epsilon(1e-13));
    }
}

TEST_CASE("equilibrium is a fixed point of the scheme") {
    const Mesh m = testing::x_contacts(12, 6);
    const DeviceModel model = pn_model(m, 0.5, RecombinationSpec::srh(1.0, 1.0));
    const EquilibriumState eq = solve_equilibrium(m, model.lambda, model.doping, 0.0, model.psi_dirichlet);
    State s;
    s.n_cells = eq.n_star;
    s.p_cells = eq.p_star;
    s.psi = eq.psi_star;
    s.n_dirichlet = model.n_dirichlet;
    s.p_dirichlet = model.p_dirichlet;
    CHECK(residual(s, s, m, model, 0.1).sup_norm() <= 1e-10);
    const StepResult res = step(s, m, model, {});
    for (std::size_t k = 0; k < m.num_cells(); ++k) {
        CHECK(std::abs(res.state.n_cells[k] - s.n_cells[k]) <= 1e-9);
        CHECK(std::abs(res.state.p_cells[k] - s.p_cells[k]) <= 1e-9);
        CHECK(std::abs(res.state.psi.cell_values[k] - s.psi.cell_values[k]) <= 1e-9);
    }
}

TEST_CASE("electron hole symmetry with zero doping") {
    const Mesh m = testing::x_contacts(7, 5);
    DeviceModel model;
    model.doping.assign(m.num_cells(), 0.0);
    model.recombination = RecombinationSpec::srh(1.0, 1.0);
    model.n_dirichlet.assign(m.num_dirichlet(), 1.0);
    model.p_dirichlet.assign(m.num_dirichlet(), 1.0);
    model.psi_dirichlet.assign(m.num_dirichlet(), 0.0);
    std::vector<double> u0(m.num_cells());
    for (std::size_t k = 0; k < u0.size(); ++k) u0[k] = 0.2 + 3.0 * m.cell(k).center.x * m.cell(k).center.y;
    State s = make_initial_state(m, model, u0, u0);
    for (int n = 0; n < 3; ++n) {
        s = step(s, m, model, {}).state;
        for (std::size_t k = 0; k < u0.size(); ++k) {
            CHECK(s.n_cells[k] == s.p_cells[k]);
            CHECK(std::abs(s.psi.cell_values[k]) <= 1e-14);
        }
    }
}

TEST_CASE("continuity systems are M-matrix structured") {
    const Mesh m = testing::x_contacts(6, 4);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-3.0, 3.0), pos(0.0, 2.0);
    PotentialField psi;
    for (std::size_t k = 0; k < m.num_cells(); ++k) psi.cell_values.push_back(u(rng));
    for (std::size_t i = 0; i < m.num_dirichlet(); ++i) psi.dirichlet_values.push_back(u(rng));
    std::vector<double> prev(m.num_cells()), r0(m.num_cells()), partner(m.num_cells()), bd(m.num_dirichlet(), 1.0);
    for (std::size_t k = 0; k < prev.size(); ++k) {
        prev[k] = pos(rng);
        r0[k] = pos(rng);
        partner[k] = pos(rng);
    }
    for (Carrier c : {Carrier::Electron, Carrier::Hole}) {
        const ContinuitySystem sys = assemble_continuity_system(m, psi, c, 0.1, prev, bd, r0, partner);
        for (int col = 0; col < sys.matrix.outerSize(); ++col)
            for (SparseMatrix::InnerIterator it(sys.matrix, col); it; ++it) {
                if (it.row() == it.col()) CHECK(it.value() > 0.0);
                else CHECK(it.value() <= 0.0);
            }
        for (int i = 0; i < sys.rhs.size(); ++i) CHECK(sys.rhs[i] >= 0.0);
    }
}

TEST_CASE("step rejects negative input and keeps densities nonnegative") {
    const Mesh m = testing::x_contacts(10, 2);
    const DeviceModel model = pn_model(m, 0.3, RecombinationSpec::constant(1.0));
    std::vector<double> n0(m.num_cells(), 1.0), p0(m.num_cells(), 1.0);
    n0[3] = -1e-3;
    State bad = make_initial_state(m, model, n0, p0);
    CHECK(kind_of([&] { step(bad, m, model, {}); }) == ErrorKind::Precondition);

    n0.assign(m.num_cells(), 0.0);
    p0.assign(m.num_cells(), 0.0);
    State s = make_initial_state(m, model, n0, p0);
    StepConfig cfg;
    cfg.dt = 0.5;
    for (int n = 0; n < 5; ++n) {
        const StepResult res = step(s, m, model, cfg);
        CHECK(res.scaled_residual <= cfg.gummel_tol);
        s = res.state;
        for (std::size_t k = 0; k < m.num_cells(); ++k) {
            CHECK(s.n_cells[k] >= 0.0);
            CHECK(s.p_cells[k] >= 0.0);
        }
    }
}

TEST_CASE("step is deterministic") {
    const Mesh m = testing::x_contacts(9, 3);
    const DeviceModel model = pn_model(m, 1.0, RecombinationSpec::srh(1.0, 1.0));
    const State s = make_initial_state(m, model, std::vector<double>(27, 1.0), std::vector<double>(27, 1.0));
    const StepResult a = step(s, m, model, {}), b = step(s, m, model, {});
    CHECK(a.state.n_cells == b.state.n_cells);
    CHECK(a.state.p_cells == b.state.p_cells);
    CHECK(a.state.psi.cell_values == b.state.psi.cell_values);
}
