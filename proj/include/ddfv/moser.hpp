#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ddfv/diagnostics.hpp"
#include "ddfv/mesh.hpp"
#include "ddfv/transport.hpp"

namespace ddfv {

struct MuNu {
    double mu = 0.0;
    double nu = 0.0;
};

/// Constants of the per-step moment inequality, traced through its proof:
/// mu = |C|/l^2 + M|C|/l^2 + Rbar(1+2M) + 4 Rbar, nu = M|C|/l^2 + Rbar(1+2M).
MuNu derive_mu_nu(double norm_c, double lambda, double m_cap, double rbar);

struct Prop2Terms {
    double growth = 0.0;    ///< (V_{q+1}^{n+1} - V_{q+1}^n) / dt
    double gradient = 0.0;  ///< sum tau [(D (N_M)^{(q+1)/2})^2 + (D (P_M)^{(q+1)/2})^2] at n+1
    double lhs = 0.0;
    double rhs = 0.0;

    double residual() const { return lhs - rhs; }
};

Prop2Terms prop2_terms(const State& prev, const State& next, double dt, double q, double m_cap, double mu, double nu,
                       double gamma, const Mesh& mesh);

/// LHS - RHS of
///   (V_{q+1}^{n+1} - V_{q+1}^n)/dt + 4q/(q+1) gamma sum_sigma tau [...] <= mu q V_{q+1}^{n+1} + nu |Omega|.
double check_prop2(const State& prev, const State& next, double dt, double q, double m_cap, double mu, double nu,
                   double gamma, const Mesh& mesh);

/// 10 * tol * (1 + max density)^{q+1} * (q + 1) * #cells.
double prop2_slack(double q, double tol, double max_density, std::size_t num_cells);

/// (sum |K| chi^2)^{1+2/d} / [(sum tau (D chi)^2) (sum |K| |chi|)^{4/d}] with chi = 0 on Dirichlet edges.
/// Returns 0 for chi == 0.
double nash_ratio(const Mesh& mesh, std::span<const double> chi);

struct NashProbeResult {
    std::vector<double> ratios;
    double empirical_constant = 0.0;  ///< max ratio, surrogate for C~/xi
    std::string mesh_id;
    std::size_t samples = 0;
    std::size_t skipped = 0;
};

/// Random smooth cell functions vanishing linearly at the Dirichlet boundary. The sample
/// functions are defined on the domain, so the same seed probes the same functions on every mesh.
NashProbeResult nash_probe(const Mesh& mesh, std::size_t samples, std::uint64_t seed, std::string mesh_id = {});

struct MoserLevelConstants {
    int k = 0;
    double zeta = 0.0;  ///< 2^k - 1
    double eps = 0.0;   ///< gamma A / zeta
    double delta = 0.0; ///< B zeta^{d/2} (zeta + eps) / eps
};

struct MoserConstants {
    int dimension = Mesh::dimension;
    double mu = 0.0;
    double nu = 0.0;
    double gamma = 1.0;
    double a_const = 0.0;
    double b_const = 0.0;
    double d_const = 0.0;         ///< B / A
    double kappa_seed = 1.0;      ///< max(1, sup_n W_0^n)
    double nash_empirical = 0.0;  ///< measured C~/xi
    double nash_young = 0.0;      ///< constant of the epsilon-split form, (2 * measured)^{d/2}
    double domain_measure = 0.0;
    double kappa = 0.0;           ///< 2^{5+d} D K
    std::vector<MoserLevelConstants> levels;  ///< k = 1..k_levels
};

/// (gamma A / q)(mu q + gamma A / q) <= 4 gamma q / (q + 1).
bool a_condition_holds(double a, double mu, double gamma, double q);

/// Largest A in (0, 1] (bisection to 1e-12) with the A-condition true for every integer q in [1, q_max].
double choose_a(double mu, double gamma, int q_max);

/// Assemble all constants. Levels are computed for k = 1..max(k_max, 6).
MoserConstants derive_constants(const MuNu& munu, double gamma, double nash_empirical, double domain_measure,
                                double kappa_seed, int k_max);

struct MoserLevelReport {
    int k = 0;
    double zeta = 0.0;
    double eps = 0.0;
    double delta = 0.0;
    double sup_w_measured = 0.0;
    std::size_t argmax_index = 0;  ///< time index where the sup is attained
    double log_bound_inductive = 0.0;
    double log_bound_closed_form = 0.0;
    double recursion_worst = 0.0;  ///< max over steps of LHS - RHS of the level recursion (informational)
    bool pass = false;
};

struct MoserReport {
    MoserConstants constants;
    int k_max = 0;
    double m_cap = 0.0;
    std::vector<MoserLevelReport> levels;  ///< k = 0..k_max
    bool a_condition_ok = false;
    bool delta_growth_ok = false;
    bool telescoping_ok = false;
    double sup_truncated_n = 0.0;  ///< sup_n |(N^n - M)^+|_inf
    double sup_truncated_p = 0.0;
    bool kappa_ok = false;
    std::vector<std::string> failures;

    bool pass() const { return failures.empty(); }
};

/// Consumes per-step V_q values (q = 2^k must be present for k <= k_max).
MoserReport moser_cascade(std::span<const DiagnosticsRecord> trajectory, const MoserConstants& constants, int k_max,
                          double m_cap);

/// Throws ErrorKind::Verification listing the failures.
void require_pass(const MoserReport& report);

void write_moser_text(std::ostream& out, const MoserReport& report);

/// Columns: k, zeta_k, eps_k, delta_k, sup_W_measured, bound_inductive, bound_closed_form, pass.
void write_moser_csv(std::ostream& out, const MoserReport& report);

}  // namespace ddfv
