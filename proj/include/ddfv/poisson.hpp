#pragma once

#include <Eigen/Sparse>
#include <span>
#include <vector>

#include "ddfv/mesh.hpp"

namespace ddfv {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Psi on cells and on Dirichlet edges.
struct PotentialField {
    std::vector<double> cell_values;
    std::vector<double> dirichlet_values;
};

enum class LinearSolverKind { Direct, ConjugateGradient };

struct LinearSolverOptions {
    LinearSolverKind kind = LinearSolverKind::Direct;
    double tolerance = 1e-12;  ///< relative residual for the iterative fallback
};

struct NewtonOptions {
    int max_iterations = 100;
    int max_halvings = 30;
    LinearSolverOptions linear;
};

struct EquilibriumState {
    double alpha = 0.0;
    PotentialField psi_star;
    std::vector<double> n_star;
    std::vector<double> p_star;
    /// Sup-norm of the nonlinear residual after each accepted Newton step (entry 0: initial guess).
    std::vector<double> residual_history;
};

/// Two-point operator without the lambda^2 factor: diagonal sum of tau over interior and
/// Dirichlet edges of K, off-diagonal -tau for interior edges.
SparseMatrix assemble_laplacian(const Mesh& mesh);

/// Per-cell sum of tau_sigma * u_sigma over the cell's Dirichlet edges.
Eigen::VectorXd dirichlet_coupling(const Mesh& mesh, std::span<const double> dirichlet_values);

/// Solve SPD system, direct LDL^T or CG fallback. Throws ErrorKind::Solver on breakdown.
Eigen::VectorXd solve_spd(const SparseMatrix& a, const Eigen::VectorXd& b, const LinearSolverOptions& opts = {});

/// Solve a general sparse system by LU. Throws ErrorKind::Solver on breakdown.
Eigen::VectorXd solve_general(const SparseMatrix& a, const Eigen::VectorXd& b);

/// lambda^2 * sum_sigma tau (Psi_K - Psi_{K,sigma}) - |K| rhs_K, per cell.
std::vector<double> poisson_residual(const Mesh& mesh, double lambda, const PotentialField& psi,
                                     std::span<const double> rhs_cells);

/// Solve -lambda^2 sum tau D_{K,sigma} Psi = |K| rhs_K with the given Dirichlet values.
PotentialField solve_poisson(const Mesh& mesh, double lambda, std::span<const double> rhs_cells,
                             std::span<const double> dirichlet, const LinearSolverOptions& opts = {});

/// Mean of log N^D - Psi^D over Dirichlet edges; throws InconsistentBoundaryData if any
/// edge deviates from the mean by more than tol.
double compute_alpha(std::span<const double> nd_edges, std::span<const double> psid_edges, double tol = 1e-8);

/// Residual of the discrete thermal-equilibrium Poisson equation, per cell.
std::vector<double> equilibrium_residual(const Mesh& mesh, double lambda, std::span<const double> doping, double alpha,
                                         const PotentialField& psi);

/// Damped Newton solve of the discrete thermal-equilibrium system.
EquilibriumState solve_equilibrium(const Mesh& mesh, double lambda, std::span<const double> doping, double alpha,
                                   std::span<const double> psid, const NewtonOptions& opts = {});

double sup_norm(std::span<const double> v);

}  // namespace ddfv
