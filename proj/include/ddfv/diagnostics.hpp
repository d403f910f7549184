#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "ddfv/kernels.hpp"
#include "ddfv/mesh.hpp"
#include "ddfv/poisson.hpp"
#include "ddfv/transport.hpp"

namespace ddfv {

/// Discrete functionals of one time level.
struct DiagnosticsRecord {
    std::size_t time_index = 0;
    double time = 0.0;
    double dt_used = 0.0;
    double entropy = 0.0;
    double production = 0.0;
    double gamma = 1.0;
    double linf_n = 0.0;
    double linf_p = 0.0;
    double min_density = 0.0;
    std::map<double, double> v_values;  ///< q -> V_q
    double dissipation_residual = 0.0;  ///< E^{n+1} + dt I^{n+1} - E^n (0 at n = 0)
    double dissipation_slack = 0.0;
    /// Entropy production hit a zero density product and its recombination term was capped.
    bool production_flagged = false;
    std::map<double, double> prop2_residuals;  ///< q -> LHS - RHS of the moment inequality
    std::map<double, double> prop2_slacks;
};

double h1_seminorm(std::span<const double> u_cells, std::span<const double> u_dirichlet, const Mesh& mesh);

/// Per-cell Bregman terms |K| (h(N, N*) + h(P, P*)); each is nonnegative.
std::vector<double> entropy_cell_terms(const State& state, const EquilibriumState& eq, const Mesh& mesh);

double relative_entropy(const State& state, const EquilibriumState& eq, const Mesh& mesh, double lambda);

struct EntropyProduction {
    double electron_edges = 0.0;
    double hole_edges = 0.0;
    double recombination = 0.0;
    bool flagged = false;

    double total() const { return electron_edges + hole_edges + recombination; }
};

EntropyProduction entropy_production(const State& state, const Mesh& mesh, const RecombinationSpec& rec,
                                     const KernelConfig& kernels = {});

/// min over edges of B(|D_{K,sigma} Psi|), in (0, 1].
double gamma_bound(const PotentialField& psi, const Mesh& mesh);

/// V_q = sum |K| [((N - M)^+)^q + ((P - M)^+)^q].
double v_moment(const State& state, double m_cap, double q, const Mesh& mesh);

/// Default q list for V_q recording.
std::vector<double> default_q_list();

struct DissipationCheck {
    double residual = 0.0;  ///< E^{n+1} + dt I^{n+1} - E^n
    double lower = 0.0;     ///< E^{n+1} + dt I^{n+1}
    bool pass = false;
};

/// Checks 0 <= E^{n+1} + dt I^{n+1} <= E^n within rec_next.dissipation_slack.
/// Throws Precondition if the records are not consecutive.
DissipationCheck check_dissipation(const DiagnosticsRecord& rec_prev, const DiagnosticsRecord& rec_next);

/// Slack for the dissipation check: 10 * tol * (1 + |u|_inf) * #cells * (1 + dt) * (1 + w), where w bounds
/// the entropy variables |log(N/N*)| + |log(P/P*)|. Residuals of size tol perturb the inequality by at most this.
double dissipation_slack(double tol, const State& state, const EquilibriumState& eq, double dt, const Mesh& mesh);

/// Evaluate every functional of one level (prop2 fields and dissipation residual left empty).
DiagnosticsRecord make_record(const State& state, const EquilibriumState& eq, const Mesh& mesh,
                              const DeviceModel& model, std::span<const double> q_list, double m_cap, double time,
                              double dt_used);

/// Gamma derived from the entropy bound: |Psi^n|_1 <= sqrt(2 E^0)/lambda + |Psi*|_1 and
/// tau_sigma (D_sigma Psi)^2 <= |Psi|_1^2 gives D_sigma Psi <= |Psi|_1 / sqrt(c0).
double apriori_gamma(double entropy0, double lambda, double psi_star_seminorm, double c0);

}  // namespace ddfv
