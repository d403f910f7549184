#include "ddfv/run.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ddfv/format.hpp"

namespace ddfv {

namespace {

Snapshot snapshot_of(const State& s, double time) {
    return {s.time_index, time, s.n_cells, s.p_cells, s.psi.cell_values};
}

State state_of(const Snapshot& snap, const DeviceModel& model) {
    State s;
    s.n_cells = snap.n;
    s.p_cells = snap.p;
    s.psi = {snap.psi, model.psi_dirichlet};
    s.n_dirichlet = model.n_dirichlet;
    s.p_dirichlet = model.p_dirichlet;
    s.time_index = snap.time_index;
    return s;
}

double max_density(const State& a, const State& b) {
    return std::max({sup_norm(a.n_cells), sup_norm(a.p_cells), sup_norm(b.n_cells), sup_norm(b.p_cells)});
}

std::vector<double> recorded_q(const ScenarioSpec& spec) {
    std::set<double> qs(spec.q_list.begin(), spec.q_list.end());
    for (int k = 0; k <= spec.k_max; ++k) qs.insert(std::ldexp(1.0, k));
    return {qs.begin(), qs.end()};
}

void fill_prop2(DiagnosticsRecord& rec, const State& prev, const State& next, const Mesh& mesh, double m_cap,
                const MuNu& munu, std::span<const double> prop2_q, double tol) {
    const double top = max_density(prev, next);
    for (double q : prop2_q) {
        rec.prop2_residuals[q] = check_prop2(prev, next, rec.dt_used, q, m_cap, munu.mu, munu.nu, rec.gamma, mesh);
        rec.prop2_slacks[q] = prop2_slack(q, tol, top, mesh.num_cells());
    }
}

}  // namespace

void TrajectoryStore::append(const DiagnosticsRecord& rec, const std::string& hash) {
    if (hash != scenario_hash) throw Error(ErrorKind::Precondition, "store: scenario hash mismatch on append");
    if (!records.empty() && rec.time_index != records.back().time_index + 1)
        throw Error(ErrorKind::Precondition, "store: record " + std::to_string(rec.time_index) + " does not follow " +
                                                 std::to_string(records.back().time_index));
    records.push_back(rec);
}

const Snapshot& TrajectoryStore::snapshot_at(std::size_t time_index) const {
    for (const auto& s : snapshots)
        if (s.time_index == time_index) return s;
    throw invalid_argument("store: no snapshot for step " + std::to_string(time_index));
}

TrajectoryStore run(const Scenario& scenario, const RunOptions& options) {
    const ScenarioSpec& spec = scenario.spec;
    const Mesh& mesh = scenario.mesh;
    const DeviceModel& model = scenario.model;

    TrajectoryStore store;
    store.scenario_text = spec.canonical();
    store.scenario_hash = scenario.hash();
    if (!spec.mesh_file.empty()) store.mesh_text = scenario.mesh_text;
    store.m_cap = scenario.m_cap;
    store.gummel_tol = spec.gummel_tol;
    store.alpha = scenario.alpha;
    store.q_list = spec.q_list;
    store.prop2_q = spec.prop2_q;
    store.k_max = spec.k_max;

    const EquilibriumState eq = solve_equilibrium(mesh, model.lambda, model.doping, scenario.alpha, model.psi_dirichlet);
    const std::vector<double> qs = recorded_q(spec);
    const MuNu munu = derive_mu_nu(sup_norm(model.doping), model.lambda, scenario.m_cap, model.recombination.rbar());
    store.moser_inputs.munu = munu;
    store.moser_inputs.domain_measure = mesh.domain_measure();

    State state = make_initial_state(mesh, model, scenario.n0, scenario.p0);
    double time = 0.0;
    DiagnosticsRecord rec0 = make_record(state, eq, mesh, model, qs, scenario.m_cap, time, 0.0);
    store.append(rec0, store.scenario_hash);
    store.snapshots.push_back(snapshot_of(state, time));

    const double psi_star_semi = h1_seminorm(eq.psi_star.cell_values, eq.psi_star.dirichlet_values, mesh);
    store.apriori_gamma = apriori_gamma(rec0.entropy, model.lambda, psi_star_semi, regularity_constants(mesh).c0);

    StepConfig cfg;
    cfg.dt = spec.dt;
    cfg.gummel_tol = spec.gummel_tol;

    store.complete = true;
    for (std::size_t n = 0; n < spec.n_steps; ++n) {
        StepResult res;
        try {
            res = step(state, mesh, model, cfg);
        } catch (const Error& e) {
            store.complete = false;
            store.failure = "step " + std::to_string(n + 1) + ": " + e.what();
            store.failure_kind = e.kind();
            break;
        }
        time += res.dt_used;
        store.dt_halvings += static_cast<std::size_t>(res.dt_halvings);
        DiagnosticsRecord rec = make_record(res.state, eq, mesh, model, qs, scenario.m_cap, time, res.dt_used);
        const DiagnosticsRecord& prev = store.records.back();
        rec.dissipation_residual = rec.entropy + rec.dt_used * rec.production - prev.entropy;
        rec.dissipation_slack = dissipation_slack(spec.gummel_tol, res.state, eq, rec.dt_used, mesh);
        fill_prop2(rec, state, res.state, mesh, scenario.m_cap, munu, spec.prop2_q, spec.gummel_tol);
        store.append(rec, store.scenario_hash);
        state = std::move(res.state);
        if (state.time_index % spec.snapshot_stride == 0 || n + 1 == spec.n_steps)
            store.snapshots.push_back(snapshot_of(state, time));
        if (options.progress) options.progress(store.records.back());
    }
    if (!store.complete && store.snapshots.back().time_index != state.time_index)
        store.snapshots.push_back(snapshot_of(state, time));

    double gamma = 1.0;
    double w0 = 0.0;
    for (const auto& r : store.records) {
        gamma = std::min(gamma, r.gamma);
        w0 = std::max(w0, r.v_values.at(1.0));
    }
    store.moser_inputs.gamma = gamma;
    store.moser_inputs.kappa_seed = std::max(1.0, w0);

    if (spec.k_max > 0 && store.complete) finalize_moser(store, mesh, spec.seed, spec.nash_samples);
    return store;
}

void finalize_moser(TrajectoryStore& store, const Mesh& mesh, std::uint64_t seed, std::size_t samples,
                    std::optional<int> k_max) {
    const int k = k_max.value_or(store.k_max);
    if (!store.nash || store.nash->samples != samples) store.nash = nash_probe(mesh, samples, seed, store.scenario_hash);
    const auto& in = store.moser_inputs;
    store.moser_constants =
        derive_constants(in.munu, in.gamma, store.nash->empirical_constant, in.domain_measure, in.kappa_seed, k);
    store.moser = moser_cascade(store.records, *store.moser_constants, k, store.m_cap);
}

Scenario scenario_of(const TrajectoryStore& store) {
    return load_scenario_with_mesh(store.scenario_text, store.mesh_text);
}

VerifyReport verify(const TrajectoryStore& store) {
    VerifyReport report;
    auto fail = [&](const std::string& what) { report.failures.push_back(what); };

    if (!store.complete) fail("run incomplete: " + store.failure);
    for (std::size_t i = 1; i < store.records.size(); ++i) {
        const auto& a = store.records[i - 1];
        const auto& b = store.records[i];
        if (b.time_index != a.time_index + 1) {
            fail("records " + std::to_string(a.time_index) + " and " + std::to_string(b.time_index) +
                 " are not consecutive");
            continue;
        }
        const DissipationCheck c = check_dissipation(a, b);
        ++report.dissipation_checked;
        if (!c.pass)
            fail("dissipation at step " + std::to_string(b.time_index) + ": residual " + format_double(c.residual) +
                 " > slack " + format_double(b.dissipation_slack));
        for (const auto& [q, r] : b.prop2_residuals) {
            ++report.prop2_checked;
            if (r > b.prop2_slacks.at(q))
                fail("moment inequality q=" + format_double(q) + " at step " + std::to_string(b.time_index) +
                     ": residual " + format_double(r) + " > slack " + format_double(b.prop2_slacks.at(q)));
        }
    }
    for (const auto& r : store.records) {
        if (r.min_density < -store.gummel_tol)
            fail("negative density " + format_double(r.min_density) + " at step " + std::to_string(r.time_index));
        if (r.entropy < -r.dissipation_slack)
            fail("negative entropy at step " + std::to_string(r.time_index));
    }

    // recompute the moment inequality wherever two consecutive levels were stored
    if (!store.snapshots.empty()) {
        const Scenario sc = scenario_of(store);
        if (sc.hash() != store.scenario_hash) {
            fail("scenario hash mismatch");
            return report;
        }
        // stored fields must reproduce the recorded moments
        for (const auto& snap : store.snapshots) {
            if (snap.time_index >= store.records.size()) continue;
            const State s = state_of(snap, sc.model);
            for (const auto& [q, v] : store.records[snap.time_index].v_values)
                if (std::abs(v_moment(s, store.m_cap, q, sc.mesh) - v) > 1e-12 * (1.0 + std::abs(v)))
                    fail("snapshot " + std::to_string(snap.time_index) + " does not reproduce V_" + format_double(q));
        }
        for (std::size_t i = 1; i < store.snapshots.size(); ++i) {
            const auto& sa = store.snapshots[i - 1];
            const auto& sb = store.snapshots[i];
            if (sb.time_index != sa.time_index + 1 || sb.time_index >= store.records.size()) continue;
            const State a = state_of(sa, sc.model);
            const State b = state_of(sb, sc.model);
            const DiagnosticsRecord& rec = store.records[sb.time_index];
            for (double q : store.prop2_q) {
                const double r = check_prop2(a, b, rec.dt_used, q, store.m_cap, store.moser_inputs.munu.mu,
                                             store.moser_inputs.munu.nu, rec.gamma, sc.mesh);
                ++report.prop2_recomputed;
                const double slack = prop2_slack(q, store.gummel_tol, max_density(a, b), sc.mesh.num_cells());
                if (r > slack)
                    fail("recomputed moment inequality q=" + format_double(q) + " at step " +
                         std::to_string(sb.time_index) + ": residual " + format_double(r));
            }
        }
    }
    if (store.moser && !store.moser->pass())
        for (const auto& f : store.moser->failures) fail("moser: " + f);
    return report;
}

}  // namespace ddfv
