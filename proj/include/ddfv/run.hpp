#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ddfv/diagnostics.hpp"
#include "ddfv/errors.hpp"
#include "ddfv/moser.hpp"
#include "ddfv/scenario.hpp"

namespace ddfv {

/// Cell fields of one time level.
struct Snapshot {
    std::size_t time_index = 0;
    double time = 0.0;
    std::vector<double> n;
    std::vector<double> p;
    std::vector<double> psi;
};

/// Inputs of the Moser constants that are measured during a run.
struct MoserInputs {
    MuNu munu;
    double gamma = 1.0;  ///< min over the trajectory of the measured gamma
    double domain_measure = 0.0;
    double kappa_seed = 1.0;
};

struct TrajectoryStore {
    std::string scenario_text;  ///< canonical scenario document
    std::string scenario_hash;
    std::string mesh_text;      ///< only for scenarios reading a mesh file
    double m_cap = 0.0;
    double gummel_tol = 0.0;
    double alpha = 0.0;
    double apriori_gamma = 0.0;
    std::vector<double> q_list;   ///< configured q values (CSV columns)
    std::vector<double> prop2_q;
    int k_max = 0;
    MoserInputs moser_inputs;

    std::vector<DiagnosticsRecord> records;
    std::vector<Snapshot> snapshots;
    std::size_t dt_halvings = 0;

    bool complete = false;
    std::string failure;
    ErrorKind failure_kind = ErrorKind::NonConvergence;

    std::optional<NashProbeResult> nash;
    std::optional<MoserConstants> moser_constants;
    std::optional<MoserReport> moser;

    /// Appends a record of the same scenario; time indices must be consecutive.
    void append(const DiagnosticsRecord& rec, const std::string& hash);

    const Snapshot& snapshot_at(std::size_t time_index) const;
};

struct RunOptions {
    /// Called after each accepted step.
    std::function<void(const DiagnosticsRecord&)> progress;
};

/// Time-steps the scenario, recording diagnostics every step and fields every snapshot_stride steps.
/// A step that fails after all halvings ends the run with complete = false.
TrajectoryStore run(const Scenario& scenario, const RunOptions& options = {});

/// Nash probe, constants and cascade for k_max (stored k_max when omitted).
void finalize_moser(TrajectoryStore& store, const Mesh& mesh, std::uint64_t seed, std::size_t samples,
                    std::optional<int> k_max = std::nullopt);

/// Rebuilds the scenario a store was produced from.
Scenario scenario_of(const TrajectoryStore& store);

struct VerifyReport {
    std::size_t dissipation_checked = 0;
    std::size_t prop2_checked = 0;
    std::size_t prop2_recomputed = 0;
    std::vector<std::string> failures;

    bool pass() const { return failures.empty(); }
};

/// Offline re-check of the dissipation inequality from stored functionals, of the stored moment
/// inequality residuals, and a recomputation of the latter from consecutive snapshots.
VerifyReport verify(const TrajectoryStore& store);

void save_store(std::ostream& out, const TrajectoryStore& store);
TrajectoryStore load_store(std::istream& in);
void save_store_file(const std::string& path, const TrajectoryStore& store);
TrajectoryStore load_store_file(const std::string& path);

/// step,time,dt,entropy,production,gamma,linf_n,linf_p,dissipation_residual,v_<q>...
void write_diagnostics_csv(std::ostream& out, const TrajectoryStore& store);

/// cell_id,x,y,N,P,Psi. Throws InvalidArgument for a step without snapshot.
void write_fields_csv(std::ostream& out, const TrajectoryStore& store, const Mesh& mesh, std::size_t step);
void write_fields_csv(std::ostream& out, const Mesh& mesh, std::span<const double> n, std::span<const double> p,
                      std::span<const double> psi);

}  // namespace ddfv
