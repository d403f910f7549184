#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "ddfv/poisson.hpp"
#include "support.hpp"

using namespace ddfv;
using testing::kind_of;

namespace {

std::vector<double> dirichlet_from(const Mesh& m, double (*f)(const Point2&)) {
    std::vector<double> v;
    for (auto e : m.dirichlet_edges()) v.push_back(f(m.edge(e).geometry->midpoint()));
    return v;
}

// root of exp(-a - s) - exp(a + s) + c = 0 in s, by bisection
double constant_root(double alpha, double c) {
    double lo = -50.0, hi = 50.0;
    auto g = [&](double s) { return std::exp(-alpha - s) - std::exp(alpha + s) + c; };
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("laplacian structure") {
    const SparseMatrix a1 = assemble_laplacian(testing::all_dirichlet(1, 1));
    CHECK(a1.rows() == 1);
    CHECK(a1.coeff(0, 0) == doctest::Approx(8.0).epsilon(1e-15));

    const Mesh neumann = build_rectangular_mesh(2, 2, {0, 1, 0, 1});
    const Eigen::MatrixXd d(assemble_laplacian(neumann));
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(d.row(i).sum()) <= 1e-15);
        CHECK(d(i, i) == doctest::Approx(2.0));
        for (int j = 0; j < 4; ++j) {
            CHECK(d(i, j) == d(j, i));
            if (i != j) CHECK((d(i, j) == 0.0 || d(i, j) == doctest::Approx(-1.0)));
        }
    }

    const Mesh m = testing::x_contacts(4, 3);
    const Eigen::MatrixXd dd(assemble_laplacian(m));
    CHECK((dd - dd.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(dd);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);

    std::vector<double> ones(m.num_cells(), 2.5), bd(m.num_dirichlet(), 2.5);
    const PotentialField constant{ones, bd};
    const std::vector<double> zero(m.num_cells(), 0.0);
    for (double r : poisson_residual(m, 1.3, constant, zero)) CHECK(std::abs(r) <= 1e-14);
}

TEST_CASE("poisson exact on constants and linear profiles") {
    const Mesh m = testing::x_contacts(8, 5);
    const std::vector<double> zero(m.num_cells(), 0.0);
    SUBCASE("constant") {
        const PotentialField psi = solve_poisson(m, 1.0, zero, std::vector<double>(m.num_dirichlet(), 3.0));
        for (double v : psi.cell_values) CHECK(std::abs(v - 3.0) <= 1e-12);
    }
    SUBCASE("linear") {
        const auto bd = dirichlet_from(m, [](const Point2& p) { return p.x; });
        const PotentialField psi = solve_poisson(m, 1.0, zero, bd);
        for (std::size_t k = 0; k < m.num_cells(); ++k)
            CHECK(std::abs(psi.cell_values[k] - m.cell(k).center.x) <= 1e-10);
    }
}

TEST_CASE("poisson maximum principle and lambda scaling") {
    const Mesh m = testing::all_dirichlet(6, 6);
    const auto bd = dirichlet_from(m, [](const Point2& p) { return std::sin(3.0 * p.x) + p.y * p.y; });
    const std::vector<double> zero(m.num_cells(), 0.0);
    const PotentialField harmonic = solve_poisson(m, 1.0, zero, bd);
    const double lo = *std::min_element(bd.begin(), bd.end()), hi = *std::max_element(bd.begin(), bd.end());
    for (double v : harmonic.cell_values) {
        CHECK(v >= lo - 1e-12);
        CHECK(v <= hi + 1e-12);
    }

    std::vector<double> rhs(m.num_cells());
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = std::cos(5.0 * m.cell(k).center.x) - 0.3;
    const std::vector<double> bzero(m.num_dirichlet(), 0.0);
    const PotentialField one = solve_poisson(m, 1.0, rhs, bzero);
    const PotentialField two = solve_poisson(m, 2.0, rhs, bzero);
    for (std::size_t k = 0; k < rhs.size(); ++k)
        CHECK(std::abs(two.cell_values[k] - one.cell_values[k] / 4.0) <= 1e-13);

    const PotentialField cg = solve_poisson(m, 1.0, rhs, bzero, {LinearSolverKind::ConjugateGradient, 1e-13});
    for (std::size_t k = 0; k < rhs.size(); ++k) CHECK(std::abs(cg.cell_values[k] - one.cell_values[k]) <= 1e-10);
    for (double r : poisson_residual(m, 1.0, one, rhs)) CHECK(std::abs(r) <= 1e-12);
}

TEST_CASE("quasi-Fermi constant") {
    CHECK(compute_alpha(std::vector<double>{1, 1, 1}, std::vector<double>{0, 0, 0}) == 0.0);
    const double e2 = std::exp(2.0);
    CHECK(compute_alpha(std::vector<double>{e2, e2}, std::vector<double>{1, 1}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(kind_of([] {
              compute_alpha(std::vector<double>{1.0, std::exp(1.0)}, std::vector<double>{0, 0}, 1e-10);
          }) == ErrorKind::InconsistentBoundaryData);
    CHECK(kind_of([] { compute_alpha(std::vector<double>{0.0}, std::vector<double>{0.0}); }) ==
          ErrorKind::InvalidArgument);
}

TEST_CASE("equilibrium with zero doping is trivial") {
    const Mesh m = testing::x_contacts(16, 16);
    const std::vector<double> c(m.num_cells(), 0.0);
    const EquilibriumState eq = solve_equilibrium(m, 1.0, c, 0.0, std::vector<double>(m.num_dirichlet(), 0.0));
    for (std::size_t k = 0; k < m.num_cells(); ++k) {
        CHECK(std::abs(eq.psi_star.cell_values[k]) <= 1e-12);
        CHECK(std::abs(eq.n_star[k] - 1.0) <= 1e-12);
        CHECK(std::abs(eq.p_star[k] - 1.0) <= 1e-12);
    }
}

TEST_CASE("equilibrium with constant doping matches scalar root") {
    const double alpha = 0.3, c0 = 1.5;
    const double root = constant_root(alpha, c0);
    const Mesh m = testing::all_dirichlet(5, 4);
    const std::vector<double> c(m.num_cells(), c0);
    const EquilibriumState eq = solve_equilibrium(m, 0.7, c, alpha, std::vector<double>(m.num_dirichlet(), root));
    for (double v : eq.psi_star.cell_values) CHECK(std::abs(v - root) <= 1e-12);
    CHECK(eq.alpha == alpha);
}

TEST_CASE("equilibrium with pn doping") {
    const Mesh m = testing::x_contacts(24, 3);
    std::vector<double> c(m.num_cells());
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = m.cell(k).center.x < 0.5 ? 4.0 : -4.0;
    std::vector<double> psid;
    for (auto e : m.dirichlet_edges()) psid.push_back(m.edge(e).geometry->midpoint().x < 0.5 ? 0.4 : -0.4);
    const double alpha = -0.2;
    const EquilibriumState eq = solve_equilibrium(m, 0.25, c, alpha, psid);

    for (std::size_t i = 1; i < eq.residual_history.size(); ++i)
        CHECK(eq.residual_history[i] <= eq.residual_history[i - 1]);
    for (double r : equilibrium_residual(m, 0.25, c, alpha, eq.psi_star)) CHECK(std::abs(r) <= 1e-10 * 5.0);
    for (std::size_t k = 0; k < c.size(); ++k) {
        CHECK(eq.n_star[k] == std::exp(alpha + eq.psi_star.cell_values[k]));
        CHECK(eq.p_star[k] == std::exp(-alpha - eq.psi_star.cell_values[k]));
        CHECK(std::abs(eq.n_star[k] * eq.p_star[k] - 1.0) <= 1e-14);
    }

    // feeding the equilibrium densities back into the linear Poisson problem
    std::vector<double> rhs(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) rhs[k] = eq.p_star[k] - eq.n_star[k] + c[k];
    const PotentialField again = solve_poisson(m, 0.25, rhs, psid);
    for (std::size_t k = 0; k < c.size(); ++k)
        CHECK(std::abs(again.cell_values[k] - eq.psi_star.cell_values[k]) <= 1e-9);
}
