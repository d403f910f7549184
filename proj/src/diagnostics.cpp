#include "ddfv/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ddfv/errors.hpp"

namespace ddfv {

double h1_seminorm(std::span<const double> u_cells, std::span<const double> u_dirichlet, const Mesh& mesh) {
    double sum = 0.0;
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        const Edge& ed = mesh.edge(e);
        if (ed.kind == EdgeKind::Neumann) continue;
        const double d = difference(mesh, e, ed.k, u_cells, u_dirichlet);
        sum += ed.tau * d * d;
    }
    return std::sqrt(sum);
}

std::vector<double> entropy_cell_terms(const State& state, const EquilibriumState& eq, const Mesh& mesh) {
    std::vector<double> terms(mesh.num_cells());
    for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
        terms[k] = mesh.cell(k).measure * (relative_entropy_density(state.n_cells[k], eq.n_star[k]) +
                                           relative_entropy_density(state.p_cells[k], eq.p_star[k]));
    }
    return terms;
}

double relative_entropy(const State& state, const EquilibriumState& eq, const Mesh& mesh, double lambda) {
    std::vector<double> gap(mesh.num_cells());
    for (std::size_t k = 0; k < gap.size(); ++k) gap[k] = state.psi.cell_values[k] - eq.psi_star.cell_values[k];
    std::vector<double> gap_boundary(mesh.num_dirichlet());
    for (std::size_t i = 0; i < gap_boundary.size(); ++i)
        gap_boundary[i] = state.psi.dirichlet_values[i] - eq.psi_star.dirichlet_values[i];
    const double semi = h1_seminorm(gap, gap_boundary, mesh);
    double total = 0.5 * lambda * lambda * semi * semi;
    for (double t : entropy_cell_terms(state, eq, mesh)) total += t;
    return total;
}

EntropyProduction entropy_production(const State& state, const Mesh& mesh, const RecombinationSpec& rec,
                                     const KernelConfig& kernels) {
    EntropyProduction out;
    const auto& psi = state.psi;
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        const Edge& ed = mesh.edge(e);
        if (ed.kind == EdgeKind::Neumann) continue;
        const std::size_t k = ed.k;
        const double psi_k = psi.cell_values[k];
        const double psi_s = value_across(mesh, e, k, psi.cell_values, psi.dirichlet_values);
        const double n_k = state.n_cells[k];
        const double n_s = value_across(mesh, e, k, state.n_cells, state.n_dirichlet);
        const double p_k = state.p_cells[k];
        const double p_s = value_across(mesh, e, k, state.p_cells, state.p_dirichlet);

        // a vanishing weight kills the edge term
        if (const double w = std::min(n_k, n_s); w > 0.0) {
            const double d = (std::log(n_s) - psi_s) - (std::log(n_k) - psi_k);
            out.electron_edges += ed.tau * w * d * d;
        }
        if (const double w = std::min(p_k, p_s); w > 0.0) {
            const double d = (std::log(p_s) + psi_s) - (std::log(p_k) + psi_k);
            out.hole_edges += ed.tau * w * d * d;
        }
    }
    for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
        const double vol = mesh.cell(k).measure;
        const double x = state.n_cells[k] * state.p_cells[k];
        const double r0 = rec.prefactor(state.n_cells[k], state.p_cells[k]);
        if (r0 == 0.0) continue;
        double term = vol * r0 * (x - 1.0) * guarded_log(x, kernels.log_floor);
        if (x < kernels.log_floor) {
            term = std::min(term, 1e6 * vol);
            out.flagged = true;
        }
        out.recombination += term;
    }
    return out;
}

double gamma_bound(const PotentialField& psi, const Mesh& mesh) {
    double gamma = 1.0;
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        const Edge& ed = mesh.edge(e);
        if (ed.kind == EdgeKind::Neumann) continue;
        const double d = std::abs(difference(mesh, e, ed.k, psi.cell_values, psi.dirichlet_values));
        gamma = std::min(gamma, bernoulli(d));
    }
    return gamma;
}

double v_moment(const State& state, double m_cap, double q, const Mesh& mesh) {
    if (!(q >= 1.0)) throw invalid_argument("v_moment: q must be >= 1");
    if (!(m_cap > 0.0)) throw invalid_argument("v_moment: M must be positive");
    double v = 0.0;
    for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
        const double nm = std::max(state.n_cells[k] - m_cap, 0.0);
        const double pm = std::max(state.p_cells[k] - m_cap, 0.0);
        if (nm == 0.0 && pm == 0.0) continue;
        v += mesh.cell(k).measure * (std::pow(nm, q) + std::pow(pm, q));
    }
    return v;
}

std::vector<double> default_q_list() { return {1.0, 2.0, 3.0, 5.0, 9.0, 17.0}; }

DissipationCheck check_dissipation(const DiagnosticsRecord& rec_prev, const DiagnosticsRecord& rec_next) {
    if (rec_next.time_index != rec_prev.time_index + 1)
        throw Error(ErrorKind::Precondition, "check_dissipation: records " + std::to_string(rec_prev.time_index) +
                                                 " and " + std::to_string(rec_next.time_index) + " are not consecutive");
    DissipationCheck c;
    c.lower = rec_next.entropy + rec_next.dt_used * rec_next.production;
    c.residual = c.lower - rec_prev.entropy;
    const double slack = rec_next.dissipation_slack;
    c.pass = c.residual <= slack && c.lower >= -slack && rec_next.entropy >= -slack;
    return c;
}

double dissipation_slack(double tol, const State& state, const EquilibriumState& eq, double dt, const Mesh& mesh) {
    double w = 0.0;
    for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
        const double ln = std::abs(guarded_log(state.n_cells[k], 1e-300) - std::log(eq.n_star[k]));
        const double lp = std::abs(guarded_log(state.p_cells[k], 1e-300) - std::log(eq.p_star[k]));
        w = std::max(w, ln + lp);
    }
    return 10.0 * tol * (1.0 + state.sup_norm()) * static_cast<double>(mesh.num_cells()) * (1.0 + dt) * (1.0 + w);
}

DiagnosticsRecord make_record(const State& state, const EquilibriumState& eq, const Mesh& mesh,
                              const DeviceModel& model, std::span<const double> q_list, double m_cap, double time,
                              double dt_used) {
    DiagnosticsRecord rec;
    rec.time_index = state.time_index;
    rec.time = time;
    rec.dt_used = dt_used;
    rec.entropy = relative_entropy(state, eq, mesh, model.lambda);
    const auto prod = entropy_production(state, mesh, model.recombination);
    rec.production = prod.total();
    rec.production_flagged = prod.flagged;
    rec.gamma = gamma_bound(state.psi, mesh);
    rec.linf_n = sup_norm(state.n_cells);
    rec.linf_p = sup_norm(state.p_cells);
    rec.min_density = std::min(*std::min_element(state.n_cells.begin(), state.n_cells.end()),
                               *std::min_element(state.p_cells.begin(), state.p_cells.end()));
    for (double q : q_list) rec.v_values[q] = v_moment(state, m_cap, q, mesh);
    return rec;
}

double apriori_gamma(double entropy0, double lambda, double psi_star_seminorm, double c0) {
    const double seminorm_bound = std::sqrt(2.0 * std::max(entropy0, 0.0)) / lambda + psi_star_seminorm;
    return bernoulli(seminorm_bound / std::sqrt(c0));
}

}  // namespace ddfv
