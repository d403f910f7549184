#include "ddfv/poisson.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <string>

#include "ddfv/errors.hpp"
#include "ddfv/format.hpp"

namespace ddfv {

namespace {

constexpr double exp_guard = 700.0;

void check_residual(const SparseMatrix& a, const Eigen::VectorXd& x, const Eigen::VectorXd& b, const char* who) {
    const double bnorm = b.norm();
    const double rnorm = (a * x - b).norm();
    if (!std::isfinite(rnorm) || rnorm > 1e-10 * bnorm)
        throw Error(ErrorKind::Solver, std::string(who) + ": linear solve breakdown, residual " + format_double(rnorm) +
                                           " for right-hand side norm " + format_double(bnorm));
}

}  // namespace

double sup_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

SparseMatrix assemble_laplacian(const Mesh& mesh) {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(4 * mesh.num_edges());
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        const Edge& ed = mesh.edge(e);
        const auto k = static_cast<Eigen::Index>(ed.k);
        switch (ed.kind) {
            case EdgeKind::Interior: {
                const auto l = static_cast<Eigen::Index>(ed.l);
                triplets.emplace_back(k, k, ed.tau);
                triplets.emplace_back(l, l, ed.tau);
                triplets.emplace_back(k, l, -ed.tau);
                triplets.emplace_back(l, k, -ed.tau);
                break;
            }
            case EdgeKind::Dirichlet:
                triplets.emplace_back(k, k, ed.tau);
                break;
            case EdgeKind::Neumann:
                break;
        }
    }
    const auto n = static_cast<Eigen::Index>(mesh.num_cells());
    SparseMatrix a(n, n);
    a.setFromTriplets(triplets.begin(), triplets.end());
    return a;
}

Eigen::VectorXd dirichlet_coupling(const Mesh& mesh, std::span<const double> dirichlet_values) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_cells()));
    for (auto e : mesh.dirichlet_edges()) {
        const Edge& ed = mesh.edge(e);
        b[static_cast<Eigen::Index>(ed.k)] += ed.tau * dirichlet_values[mesh.dirichlet_slot(e)];
    }
    return b;
}

Eigen::VectorXd solve_spd(const SparseMatrix& a, const Eigen::VectorXd& b, const LinearSolverOptions& opts) {
    Eigen::VectorXd x;
    if (opts.kind == LinearSolverKind::Direct) {
        Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
        if (ldlt.info() != Eigen::Success) throw Error(ErrorKind::Solver, "solve_spd: LDL^T factorization failed");
        x = ldlt.solve(b);
    } else {
        Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg;
        cg.setTolerance(opts.tolerance);
        cg.setMaxIterations(std::max<Eigen::Index>(1000, 10 * a.rows()));
        cg.compute(a);
        x = cg.solve(b);
        if (cg.info() != Eigen::Success)
            throw Error(ErrorKind::Solver, "solve_spd: conjugate gradient did not converge, estimated error " +
                                               format_double(cg.error()));
    }
    check_residual(a, x, b, "solve_spd");
    return x;
}

Eigen::VectorXd solve_general(const SparseMatrix& a, const Eigen::VectorXd& b) {
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(a);
    lu.factorize(a);
    if (lu.info() != Eigen::Success) throw Error(ErrorKind::Solver, "solve_general: LU factorization failed");
    Eigen::VectorXd x = lu.solve(b);
    check_residual(a, x, b, "solve_general");
    return x;
}

std::vector<double> poisson_residual(const Mesh& mesh, double lambda, const PotentialField& psi,
                                     std::span<const double> rhs_cells) {
    const double l2 = lambda * lambda;
    std::vector<double> r(mesh.num_cells(), 0.0);
    for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
        double flux = 0.0;
        for (auto e : mesh.cell_edges(k))
            flux -= mesh.edge(e).tau * difference(mesh, e, k, psi.cell_values, psi.dirichlet_values);
        r[k] = l2 * flux - mesh.cell(k).measure * rhs_cells[k];
    }
    return r;
}

PotentialField solve_poisson(const Mesh& mesh, double lambda, std::span<const double> rhs_cells,
                             std::span<const double> dirichlet, const LinearSolverOptions& opts) {
    if (!(lambda > 0.0)) throw invalid_argument("solve_poisson: lambda must be positive");
    if (rhs_cells.size() != mesh.num_cells() || dirichlet.size() != mesh.num_dirichlet())
        throw invalid_argument("solve_poisson: size mismatch");
    if (!(mesh.dirichlet_measure() > 0.0))
        throw Error(ErrorKind::MeasureZeroDirichlet, "solve_poisson: no Dirichlet boundary");

    const double l2 = lambda * lambda;
    SparseMatrix a = assemble_laplacian(mesh) * l2;
    Eigen::VectorXd b = dirichlet_coupling(mesh, dirichlet) * l2;
    for (std::size_t k = 0; k < mesh.num_cells(); ++k)
        b[static_cast<Eigen::Index>(k)] += mesh.cell(k).measure * rhs_cells[k];
    const Eigen::VectorXd x = solve_spd(a, b, opts);

    PotentialField psi{std::vector<double>(x.data(), x.data() + x.size()),
                       std::vector<double>(dirichlet.begin(), dirichlet.end())};
    const auto r = poisson_residual(mesh, lambda, psi, rhs_cells);
    const double scale =
        std::max({b.lpNorm<Eigen::Infinity>(), a.diagonal().maxCoeff() * x.lpNorm<Eigen::Infinity>(), 1e-300});
    if (sup_norm(r) > 1e-10 * scale)
        throw Error(ErrorKind::Solver, "solve_poisson: residual " + format_double(sup_norm(r) / scale) + " too large");
    return psi;
}

double compute_alpha(std::span<const double> nd_edges, std::span<const double> psid_edges, double tol) {
    if (nd_edges.size() != psid_edges.size() || nd_edges.empty())
        throw invalid_argument("compute_alpha: need matching, non-empty boundary vectors");
    std::vector<double> candidates;
    candidates.reserve(nd_edges.size());
    for (std::size_t i = 0; i < nd_edges.size(); ++i) {
        if (!(nd_edges[i] > 0.0)) throw invalid_argument("compute_alpha: N^D must be positive");
        candidates.push_back(std::log(nd_edges[i]) - psid_edges[i]);
    }
    double mean = 0.0;
    for (double c : candidates) mean += c;
    mean /= static_cast<double>(candidates.size());
    double deviation = 0.0;
    for (double c : candidates) deviation = std::max(deviation, std::abs(c - mean));
    if (deviation > tol)
        throw Error(ErrorKind::InconsistentBoundaryData,
                    "boundary data not in thermal equilibrium: log N^D - Psi^D varies by " + format_double(deviation));
    return mean;
}

std::vector<double> equilibrium_residual(const Mesh& mesh, double lambda, std::span<const double> doping, double alpha,
                                         const PotentialField& psi) {
    std::vector<double> rhs(mesh.num_cells());
    for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
        const double s = alpha + psi.cell_values[k];
        rhs[k] = std::exp(-s) - std::exp(s) + doping[k];
    }
    return poisson_residual(mesh, lambda, psi, rhs);
}

EquilibriumState solve_equilibrium(const Mesh& mesh, double lambda, std::span<const double> doping, double alpha,
                                   std::span<const double> psid, const NewtonOptions& opts) {
    if (!(lambda > 0.0)) throw invalid_argument("solve_equilibrium: lambda must be positive");
    if (doping.size() != mesh.num_cells() || psid.size() != mesh.num_dirichlet())
        throw invalid_argument("solve_equilibrium: size mismatch");

    const std::size_t n = mesh.num_cells();
    const double doping_scale = 1.0 + sup_norm(doping);
    const double target = 1e-12 * doping_scale;
    const double accept = 1e-10 * doping_scale;

    // Warm start: linear problem with the exponential terms frozen at alpha = 0, psi = 0.
    PotentialField psi = solve_poisson(mesh, lambda, doping, psid, opts.linear);
    for (auto& v : psi.cell_values) v = std::clamp(v, -exp_guard - alpha, exp_guard - alpha);

    const SparseMatrix laplacian = assemble_laplacian(mesh) * (lambda * lambda);
    auto residual_of = [&](const PotentialField& p) { return equilibrium_residual(mesh, lambda, doping, alpha, p); };

    EquilibriumState eq;
    eq.alpha = alpha;
    std::vector<double> r = residual_of(psi);
    double rnorm = sup_norm(r);
    eq.residual_history.push_back(rnorm);

    for (int it = 0; it < opts.max_iterations && rnorm > target; ++it) {
        SparseMatrix jac = laplacian;
        for (std::size_t k = 0; k < n; ++k) {
            const double s = alpha + psi.cell_values[k];
            jac.coeffRef(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) +=
                mesh.cell(k).measure * (std::exp(-s) + std::exp(s));
        }
        const Eigen::VectorXd delta = solve_spd(jac, -Eigen::Map<const Eigen::VectorXd>(r.data(), r.size()), opts.linear);

        bool accepted = false;
        double step = 1.0;
        for (int h = 0; h <= opts.max_halvings; ++h, step *= 0.5) {
            PotentialField trial = psi;
            bool overflow = false;
            for (std::size_t k = 0; k < n; ++k) {
                trial.cell_values[k] += step * delta[static_cast<Eigen::Index>(k)];
                overflow = overflow || std::abs(alpha + trial.cell_values[k]) > exp_guard;
            }
            if (overflow) continue;
            auto trial_r = residual_of(trial);
            const double trial_norm = sup_norm(trial_r);
            if (trial_norm < rnorm) {
                psi = std::move(trial);
                r = std::move(trial_r);
                rnorm = trial_norm;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // No descent possible: we are at rounding level or the iteration stalled.
            if (rnorm <= accept) break;
            throw Error(ErrorKind::NonConvergence,
                        "solve_equilibrium: line search failed, residual " + format_double(rnorm));
        }
        eq.residual_history.push_back(rnorm);
        if (delta.lpNorm<Eigen::Infinity>() * step <= 1e-15 * (1.0 + sup_norm(psi.cell_values)) && rnorm <= accept) break;
    }
    if (!(rnorm <= accept))
        throw Error(ErrorKind::NonConvergence, "solve_equilibrium: Newton did not converge, residual " +
                                                   format_double(rnorm));

    eq.psi_star = std::move(psi);
    eq.n_star.resize(n);
    eq.p_star.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double s = alpha + eq.psi_star.cell_values[k];
        eq.n_star[k] = std::exp(s);
        eq.p_star[k] = std::exp(-s);
    }
    return eq;
}

}  // namespace ddfv
