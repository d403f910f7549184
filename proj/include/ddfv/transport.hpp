#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ddfv/errors.hpp"
#include "ddfv/mesh.hpp"
#include "ddfv/poisson.hpp"

namespace ddfv {

enum class Carrier { Electron, Hole };

/// R(N,P) = R0(N,P) (NP - 1) with one of the supported R0 models.
struct RecombinationSpec {
    enum class Kind { None, Constant, Srh, Auger };

    Kind kind = Kind::None;
    double r0 = 0.0;
    double tau_n = 1.0;
    double tau_p = 1.0;
    double c_n = 0.0;
    double c_p = 0.0;

    static RecombinationSpec none() { return {}; }
    static RecombinationSpec constant(double r0);
    static RecombinationSpec srh(double tau_n, double tau_p);
    static RecombinationSpec auger(double c_n, double c_p);

    /// R0(n, p) >= 0.
    double prefactor(double n, double p) const;

    /// Growth constant Rbar with 0 <= R0(n,p) <= Rbar (1 + n + p) for n, p >= 0.
    double rbar() const;

    std::string describe() const;
};

/// Samples R0 over a log grid and throws HypothesisViolation if the growth bound fails.
void validate_growth_bound(const RecombinationSpec& spec);

double recombination_rate(double n, double p, const RecombinationSpec& spec);

/// Scharfetter-Gummel flux from K across sigma, given D_{K,sigma} Psi.
double sg_flux(double tau, double d_psi, double u_k, double u_ksigma, Carrier carrier);

/// Everything in the scheme that is fixed over a run.
struct DeviceModel {
    double lambda = 1.0;
    std::vector<double> doping;  ///< C_K
    RecombinationSpec recombination;
    std::vector<double> n_dirichlet;  ///< per Dirichlet edge
    std::vector<double> p_dirichlet;
    std::vector<double> psi_dirichlet;
};

struct State {
    std::vector<double> n_cells;
    std::vector<double> p_cells;
    PotentialField psi;
    std::vector<double> n_dirichlet;
    std::vector<double> p_dirichlet;
    std::size_t time_index = 0;

    /// max(|N|_inf, |P|_inf, |Psi|_inf) over cells.
    double sup_norm() const;
};

/// Initial level: given cell densities, Psi^0 solves the Poisson equation at level 0.
State make_initial_state(const Mesh& mesh, const DeviceModel& model, std::vector<double> n0, std::vector<double> p0,
                         const LinearSolverOptions& linear = {});

struct StepConfig {
    double dt = 0.1;
    double gummel_tol = 1e-9;
    int gummel_max_iters = 200;
    double newton_tol = 1e-13;
    int newton_max_iters = 50;
    int max_dt_halvings = 3;
    LinearSolverOptions linear;
};

/// Per-cell residuals of the three scheme equations at level n+1.
struct SchemeResidual {
    std::vector<double> electron;
    std::vector<double> hole;
    std::vector<double> poisson;

    double sup_norm() const;
};

SchemeResidual residual(const State& next, const State& prev, const Mesh& mesh, const DeviceModel& model, double dt);

/// Linear continuity system for one carrier with Psi fixed and R0 / the partner density lagged.
struct ContinuitySystem {
    SparseMatrix matrix;
    Eigen::VectorXd rhs;
};

ContinuitySystem assemble_continuity_system(const Mesh& mesh, const PotentialField& psi, Carrier carrier, double dt,
                                            std::span<const double> previous, std::span<const double> dirichlet,
                                            std::span<const double> r0_lagged, std::span<const double> partner_lagged);

struct StepResult {
    State state;
    double dt_used = 0.0;
    int dt_halvings = 0;
    int gummel_iterations = 0;
    double scaled_residual = 0.0;  ///< residual sup-norm / (1 + |state|_inf)
};

/// Step failure that survived all time-step halvings; carries the last iterate.
class StepError : public Error {
public:
    StepError(ErrorKind kind, const std::string& what, double residual, State iterate)
        : Error(kind, what), residual_(residual), iterate_(std::move(iterate)) {}

    double last_residual() const { return residual_; }
    const State& last_iterate() const { return iterate_; }

private:
    double residual_;
    State iterate_;
};

/// One backward-Euler step of the coupled scheme, solved by Gummel iteration.
StepResult step(const State& state, const Mesh& mesh, const DeviceModel& model, const StepConfig& cfg);

}  // namespace ddfv
