#include "ddfv/transport.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ddfv/format.hpp"
#include "ddfv/kernels.hpp"

namespace ddfv {

RecombinationSpec RecombinationSpec::constant(double r0) {
    if (!(r0 > 0.0)) throw invalid_argument("constant recombination needs r0 > 0");
    RecombinationSpec s;
    s.kind = Kind::Constant;
    s.r0 = r0;
    return s;
}

RecombinationSpec RecombinationSpec::srh(double tau_n, double tau_p) {
    if (!(tau_n > 0.0) || !(tau_p > 0.0)) throw invalid_argument("srh recombination needs positive lifetimes");
    RecombinationSpec s;
    s.kind = Kind::Srh;
    s.tau_n = tau_n;
    s.tau_p = tau_p;
    return s;
}

RecombinationSpec RecombinationSpec::auger(double c_n, double c_p) {
    if (!(c_n > 0.0) || !(c_p > 0.0)) throw invalid_argument("auger recombination needs positive coefficients");
    RecombinationSpec s;
    s.kind = Kind::Auger;
    s.c_n = c_n;
    s.c_p = c_p;
    return s;
}

double RecombinationSpec::prefactor(double n, double p) const {
    switch (kind) {
        case Kind::None: return 0.0;
        case Kind::Constant: return r0;
        case Kind::Srh: return 1.0 / (tau_p * (n + 1.0) + tau_n * (p + 1.0));
        case Kind::Auger: return c_n * n + c_p * p;
    }
    return 0.0;
}

double RecombinationSpec::rbar() const {
    switch (kind) {
        case Kind::None: return 0.0;
        case Kind::Constant: return r0;
        // maximal at n = p = 0
        case Kind::Srh: return 1.0 / (tau_n + tau_p);
        case Kind::Auger: return std::max(c_n, c_p);
    }
    return 0.0;
}

std::string RecombinationSpec::describe() const {
    switch (kind) {
        case Kind::None: return "none";
        case Kind::Constant: return "constant(r0=" + format_double(r0) + ")";
        case Kind::Srh: return "srh(tau_n=" + format_double(tau_n) + ", tau_p=" + format_double(tau_p) + ")";
        case Kind::Auger: return "auger(c_n=" + format_double(c_n) + ", c_p=" + format_double(c_p) + ")";
    }
    return "none";
}

void validate_growth_bound(const RecombinationSpec& spec) {
    const double rbar = spec.rbar();
    std::vector<double> samples{0.0};
    for (int e = -6; e <= 6; ++e) {
        samples.push_back(std::pow(10.0, e));
        samples.push_back(3.0 * std::pow(10.0, e));
    }
    for (double n : samples) {
        for (double p : samples) {
            const double r0 = spec.prefactor(n, p);
            if (!(r0 >= 0.0) || r0 > rbar * (1.0 + n + p) * (1.0 + 1e-12))
                throw Error(ErrorKind::HypothesisViolation,
                            "recombination growth: " + spec.describe() + " violates 0 <= R0 <= Rbar (1 + N + P) at N=" +
                                format_double(n) + ", P=" + format_double(p));
        }
    }
}

double recombination_rate(double n, double p, const RecombinationSpec& spec) {
    return spec.prefactor(n, p) * (n * p - 1.0);
}

double sg_flux(double tau, double d_psi, double u_k, double u_ksigma, Carrier carrier) {
    if (carrier == Carrier::Electron) return tau * (bernoulli(-d_psi) * u_k - bernoulli(d_psi) * u_ksigma);
    return tau * (bernoulli(d_psi) * u_k - bernoulli(-d_psi) * u_ksigma);
}

double State::sup_norm() const {
    return std::max({ddfv::sup_norm(n_cells), ddfv::sup_norm(p_cells), ddfv::sup_norm(psi.cell_values)});
}

double SchemeResidual::sup_norm() const {
    return std::max({ddfv::sup_norm(electron), ddfv::sup_norm(hole), ddfv::sup_norm(poisson)});
}

State make_initial_state(const Mesh& mesh, const DeviceModel& model, std::vector<double> n0, std::vector<double> p0,
                         const LinearSolverOptions& linear) {
    if (n0.size() != mesh.num_cells() || p0.size() != mesh.num_cells())
        throw invalid_argument("make_initial_state: density size mismatch");
    std::vector<double> rhs(mesh.num_cells());
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] = p0[k] - n0[k] + model.doping[k];
    State s;
    s.psi = solve_poisson(mesh, model.lambda, rhs, model.psi_dirichlet, linear);
    s.n_cells = std::move(n0);
    s.p_cells = std::move(p0);
    s.n_dirichlet = model.n_dirichlet;
    s.p_dirichlet = model.p_dirichlet;
    return s;
}

SchemeResidual residual(const State& next, const State& prev, const Mesh& mesh, const DeviceModel& model, double dt) {
    const std::size_t n = mesh.num_cells();
    SchemeResidual r;
    r.electron.assign(n, 0.0);
    r.hole.assign(n, 0.0);
    std::vector<double> charge(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double vol = mesh.cell(k).measure;
        const double nk = next.n_cells[k];
        const double pk = next.p_cells[k];
        double fn = 0.0;
        double fp = 0.0;
        for (auto e : mesh.cell_edges(k)) {
            const Edge& ed = mesh.edge(e);
            if (ed.kind == EdgeKind::Neumann) continue;
            const double dpsi = difference(mesh, e, k, next.psi.cell_values, next.psi.dirichlet_values);
            fn += sg_flux(ed.tau, dpsi, nk, value_across(mesh, e, k, next.n_cells, next.n_dirichlet), Carrier::Electron);
            fp += sg_flux(ed.tau, dpsi, pk, value_across(mesh, e, k, next.p_cells, next.p_dirichlet), Carrier::Hole);
        }
        const double rec = vol * recombination_rate(nk, pk, model.recombination);
        r.electron[k] = vol * (nk - prev.n_cells[k]) / dt + fn + rec;
        r.hole[k] = vol * (pk - prev.p_cells[k]) / dt + fp + rec;
        charge[k] = pk - nk + model.doping[k];
    }
    r.poisson = poisson_residual(mesh, model.lambda, next.psi, charge);
    return r;
}

ContinuitySystem assemble_continuity_system(const Mesh& mesh, const PotentialField& psi, Carrier carrier, double dt,
                                            std::span<const double> previous, std::span<const double> dirichlet,
                                            std::span<const double> r0_lagged, std::span<const double> partner_lagged) {
    const std::size_t n = mesh.num_cells();
    const double sign = carrier == Carrier::Electron ? 1.0 : -1.0;
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(n + 2 * mesh.num_edges());
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
        const auto row = static_cast<Eigen::Index>(k);
        const double vol = mesh.cell(k).measure;
        double diag = vol / dt + vol * r0_lagged[k] * partner_lagged[k];
        double b = vol / dt * previous[k] + vol * r0_lagged[k];
        for (auto e : mesh.cell_edges(k)) {
            const Edge& ed = mesh.edge(e);
            if (ed.kind == EdgeKind::Neumann) continue;
            // electron: tau [B(-d) u_K - B(d) u_Ks]; hole: d -> -d
            const double d = sign * difference(mesh, e, k, psi.cell_values, psi.dirichlet_values);
            diag += ed.tau * bernoulli(-d);
            const double off = ed.tau * bernoulli(d);
            if (ed.kind == EdgeKind::Interior)
                triplets.emplace_back(row, static_cast<Eigen::Index>(mesh.other_cell(e, k)), -off);
            else
                b += off * dirichlet[mesh.dirichlet_slot(e)];
        }
        triplets.emplace_back(row, row, diag);
        rhs[row] = b;
    }
    ContinuitySystem sys{SparseMatrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)), std::move(rhs)};
    sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
    return sys;
}

namespace {

/// Nonlinear Poisson with quasi-Fermi levels frozen at the current iterate:
/// N = N_k e^{Psi - Psi_k}, P = P_k e^{-(Psi - Psi_k)}. Its fixed point is the scheme's Poisson equation.
PotentialField gummel_poisson(const Mesh& mesh, const DeviceModel& model, const State& it, const StepConfig& cfg) {
    const std::size_t n = mesh.num_cells();
    const double l2 = model.lambda * model.lambda;
    const SparseMatrix laplacian = assemble_laplacian(mesh) * l2;
    const std::vector<double>& base = it.psi.cell_values;

    auto eval = [&](const PotentialField& psi) {
        std::vector<double> charge(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double shift = psi.cell_values[k] - base[k];
            charge[k] = it.p_cells[k] * std::exp(-shift) - it.n_cells[k] * std::exp(shift) + model.doping[k];
        }
        return poisson_residual(mesh, model.lambda, psi, charge);
    };

    PotentialField psi = it.psi;
    psi.dirichlet_values = model.psi_dirichlet;
    std::vector<double> r = eval(psi);
    double rnorm = sup_norm(r);
    for (int iter = 0; iter < cfg.newton_max_iters; ++iter) {
        SparseMatrix jac = laplacian;
        for (std::size_t k = 0; k < n; ++k) {
            const double shift = psi.cell_values[k] - base[k];
            jac.coeffRef(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) +=
                mesh.cell(k).measure * (it.p_cells[k] * std::exp(-shift) + it.n_cells[k] * std::exp(shift));
        }
        const Eigen::VectorXd delta =
            solve_spd(jac, -Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(n)), cfg.linear);
        const double dmax = delta.lpNorm<Eigen::Infinity>();
        // cap the update at one thermal unit, then halve until the residual drops
        double t = std::min(1.0, 1.0 / std::max(dmax, 1e-300));
        bool accepted = false;
        for (int h = 0; h < 30; ++h, t *= 0.5) {
            PotentialField trial = psi;
            for (std::size_t k = 0; k < n; ++k) trial.cell_values[k] += t * delta[static_cast<Eigen::Index>(k)];
            auto tr = eval(trial);
            const double tn = sup_norm(tr);
            if (tn < rnorm) {
                psi = std::move(trial);
                r = std::move(tr);
                rnorm = tn;
                accepted = true;
                break;
            }
        }
        if (!accepted || t * dmax <= cfg.newton_tol * (1.0 + sup_norm(psi.cell_values))) break;
    }
    return psi;
}

StepResult gummel_step(const State& state, const Mesh& mesh, const DeviceModel& model, const StepConfig& cfg,
                       double dt) {
    const std::size_t n = mesh.num_cells();
    State it = state;
    it.time_index = state.time_index + 1;
    it.n_dirichlet = model.n_dirichlet;
    it.p_dirichlet = model.p_dirichlet;
    std::vector<double> r0(n);
    double scaled = 0.0;
    for (int iter = 1; iter <= cfg.gummel_max_iters; ++iter) {
        it.psi = gummel_poisson(mesh, model, it, cfg);
        for (std::size_t k = 0; k < n; ++k) r0[k] = model.recombination.prefactor(it.n_cells[k], it.p_cells[k]);

        const auto sys_n = assemble_continuity_system(mesh, it.psi, Carrier::Electron, dt, state.n_cells,
                                                      model.n_dirichlet, r0, it.p_cells);
        const auto sys_p = assemble_continuity_system(mesh, it.psi, Carrier::Hole, dt, state.p_cells,
                                                      model.p_dirichlet, r0, it.n_cells);
        const Eigen::VectorXd nn = solve_general(sys_n.matrix, sys_n.rhs);
        const Eigen::VectorXd pp = solve_general(sys_p.matrix, sys_p.rhs);
        it.n_cells.assign(nn.data(), nn.data() + nn.size());
        it.p_cells.assign(pp.data(), pp.data() + pp.size());

        const double floor = -1e-12 * (1.0 + it.sup_norm());
        const double min_density = std::min(*std::min_element(it.n_cells.begin(), it.n_cells.end()),
                                            *std::min_element(it.p_cells.begin(), it.p_cells.end()));
        const auto res = residual(it, state, mesh, model, dt);
        scaled = res.sup_norm() / (1.0 + it.sup_norm());
        if (min_density < floor)
            throw StepError(ErrorKind::NonConvergence, "negative density " + format_double(min_density), scaled, it);
        if (scaled <= cfg.gummel_tol) return {it, dt, 0, iter, scaled};
    }
    throw StepError(ErrorKind::NonConvergence,
                    "Gummel iteration did not converge in " + std::to_string(cfg.gummel_max_iters) +
                        " iterations, scaled residual " + format_double(scaled),
                    scaled, it);
}

}  // namespace

StepResult step(const State& state, const Mesh& mesh, const DeviceModel& model, const StepConfig& cfg) {
    if (!(cfg.dt > 0.0)) throw invalid_argument("step: dt must be positive");
    for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
        if (!(state.n_cells[k] >= 0.0) || !(state.p_cells[k] >= 0.0))
            throw Error(ErrorKind::Precondition, "step: input state has a negative density");
    }
    double dt = cfg.dt;
    for (int attempt = 0;; ++attempt) {
        try {
            StepResult result = gummel_step(state, mesh, model, cfg, dt);
            result.dt_halvings = attempt;
            return result;
        } catch (const StepError& failure) {
            if (attempt >= cfg.max_dt_halvings)
                throw StepError(failure.kind(),
                                std::string(failure.what()) + " (after " + std::to_string(attempt) + " dt halvings)",
                                failure.last_residual(), failure.last_iterate());
            dt *= 0.5;
        }
    }
}

}  // namespace ddfv
