#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ddfv/format.hpp"
#include "ddfv/run.hpp"

namespace ddfv {

using json = nlohmann::json;

namespace {

constexpr int store_version = 1;

json num(double x) {
    if (std::isfinite(x)) return x;
    return format_double(x);
}

double to_num(const json& j) {
    if (j.is_string()) return parse_double(j.get<std::string>());
    return j.get<double>();
}

json num_vec(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

std::vector<double> to_vec(const json& j) {
    std::vector<double> v;
    v.reserve(j.size());
    for (const auto& x : j) v.push_back(to_num(x));
    return v;
}

json num_map(const std::map<double, double>& m) {
    json o = json::object();
    for (const auto& [k, v] : m) o[format_double(k)] = num(v);
    return o;
}

std::map<double, double> to_map(const json& j) {
    std::map<double, double> m;
    for (const auto& [k, v] : j.items()) m[parse_double(k)] = to_num(v);
    return m;
}

json record_json(const DiagnosticsRecord& r) {
    return {{"time_index", r.time_index},
            {"time", num(r.time)},
            {"dt_used", num(r.dt_used)},
            {"entropy", num(r.entropy)},
            {"production", num(r.production)},
            {"gamma", num(r.gamma)},
            {"linf_n", num(r.linf_n)},
            {"linf_p", num(r.linf_p)},
            {"min_density", num(r.min_density)},
            {"v", num_map(r.v_values)},
            {"dissipation_residual", num(r.dissipation_residual)},
            {"dissipation_slack", num(r.dissipation_slack)},
            {"production_flagged", r.production_flagged},
            {"prop2_residuals", num_map(r.prop2_residuals)},
            {"prop2_slacks", num_map(r.prop2_slacks)}};
}

DiagnosticsRecord record_from(const json& j) {
    DiagnosticsRecord r;
    r.time_index = j.at("time_index").get<std::size_t>();
    r.time = to_num(j.at("time"));
    r.dt_used = to_num(j.at("dt_used"));
    r.entropy = to_num(j.at("entropy"));
    r.production = to_num(j.at("production"));
    r.gamma = to_num(j.at("gamma"));
    r.linf_n = to_num(j.at("linf_n"));
    r.linf_p = to_num(j.at("linf_p"));
    r.min_density = to_num(j.at("min_density"));
    r.v_values = to_map(j.at("v"));
    r.dissipation_residual = to_num(j.at("dissipation_residual"));
    r.dissipation_slack = to_num(j.at("dissipation_slack"));
    r.production_flagged = j.at("production_flagged").get<bool>();
    r.prop2_residuals = to_map(j.at("prop2_residuals"));
    r.prop2_slacks = to_map(j.at("prop2_slacks"));
    return r;
}

json constants_json(const MoserConstants& c) {
    json levels = json::array();
    for (const auto& l : c.levels) levels.push_back({{"k", l.k}, {"zeta", num(l.zeta)}, {"eps", num(l.eps)}, {"delta", num(l.delta)}});
    return {{"dimension", c.dimension},       {"mu", num(c.mu)},
            {"nu", num(c.nu)},                {"gamma", num(c.gamma)},
            {"A", num(c.a_const)},            {"B", num(c.b_const)},
            {"D", num(c.d_const)},            {"kappa_seed", num(c.kappa_seed)},
            {"nash_empirical", num(c.nash_empirical)}, {"nash_young", num(c.nash_young)},
            {"domain_measure", num(c.domain_measure)}, {"kappa", num(c.kappa)},
            {"levels", levels}};
}

MoserConstants constants_from(const json& j) {
    MoserConstants c;
    c.dimension = j.at("dimension").get<int>();
    c.mu = to_num(j.at("mu"));
    c.nu = to_num(j.at("nu"));
    c.gamma = to_num(j.at("gamma"));
    c.a_const = to_num(j.at("A"));
    c.b_const = to_num(j.at("B"));
    c.d_const = to_num(j.at("D"));
    c.kappa_seed = to_num(j.at("kappa_seed"));
    c.nash_empirical = to_num(j.at("nash_empirical"));
    c.nash_young = to_num(j.at("nash_young"));
    c.domain_measure = to_num(j.at("domain_measure"));
    c.kappa = to_num(j.at("kappa"));
    for (const auto& l : j.at("levels"))
        c.levels.push_back({l.at("k").get<int>(), to_num(l.at("zeta")), to_num(l.at("eps")), to_num(l.at("delta"))});
    return c;
}

json report_json(const MoserReport& r) {
    json levels = json::array();
    for (const auto& l : r.levels)
        levels.push_back({{"k", l.k},
                          {"sup_w_measured", num(l.sup_w_measured)},
                          {"argmax_index", l.argmax_index},
                          {"log_bound_inductive", num(l.log_bound_inductive)},
                          {"log_bound_closed_form", num(l.log_bound_closed_form)},
                          {"recursion_worst", num(l.recursion_worst)},
                          {"pass", l.pass}});
    return {{"k_max", r.k_max},
            {"a_condition_ok", r.a_condition_ok},
            {"delta_growth_ok", r.delta_growth_ok},
            {"telescoping_ok", r.telescoping_ok},
            {"kappa_ok", r.kappa_ok},
            {"sup_truncated_n", num(r.sup_truncated_n)},
            {"sup_truncated_p", num(r.sup_truncated_p)},
            {"failures", r.failures},
            {"levels", levels}};
}

}  // namespace

void save_store(std::ostream& out, const TrajectoryStore& s) {
    json j;
    j["version"] = store_version;
    j["scenario"] = s.scenario_text;
    j["scenario_hash"] = s.scenario_hash;
    j["mesh"] = s.mesh_text;
    j["m_cap"] = num(s.m_cap);
    j["gummel_tol"] = num(s.gummel_tol);
    j["alpha"] = num(s.alpha);
    j["apriori_gamma"] = num(s.apriori_gamma);
    j["q_list"] = num_vec(s.q_list);
    j["prop2_q"] = num_vec(s.prop2_q);
    j["k_max"] = s.k_max;
    j["moser_inputs"] = {{"mu", num(s.moser_inputs.munu.mu)},
                         {"nu", num(s.moser_inputs.munu.nu)},
                         {"gamma", num(s.moser_inputs.gamma)},
                         {"domain_measure", num(s.moser_inputs.domain_measure)},
                         {"kappa_seed", num(s.moser_inputs.kappa_seed)}};
    j["complete"] = s.complete;
    j["failure"] = s.failure;
    j["failure_kind"] = to_string(s.failure_kind);
    j["dt_halvings"] = s.dt_halvings;
    json recs = json::array();
    for (const auto& r : s.records) recs.push_back(record_json(r));
    j["records"] = std::move(recs);
    json snaps = json::array();
    for (const auto& sn : s.snapshots)
        snaps.push_back({{"time_index", sn.time_index},
                         {"time", num(sn.time)},
                         {"n", num_vec(sn.n)},
                         {"p", num_vec(sn.p)},
                         {"psi", num_vec(sn.psi)}});
    j["snapshots"] = std::move(snaps);
    if (s.nash)
        j["nash"] = {{"ratios", num_vec(s.nash->ratios)},
                     {"empirical_constant", num(s.nash->empirical_constant)},
                     {"mesh_id", s.nash->mesh_id},
                     {"samples", s.nash->samples},
                     {"skipped", s.nash->skipped}};
    if (s.moser_constants) j["moser_constants"] = constants_json(*s.moser_constants);
    if (s.moser) j["moser_report"] = report_json(*s.moser);
    out << j.dump(1) << '\n';
}

TrajectoryStore load_store(std::istream& in) {
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("store: ") + e.what());
    }
    try {
        if (j.at("version").get<int>() != store_version) throw Error(ErrorKind::Parse, "store: unsupported version");
        TrajectoryStore s;
        s.scenario_text = j.at("scenario").get<std::string>();
        s.scenario_hash = j.at("scenario_hash").get<std::string>();
        s.mesh_text = j.at("mesh").get<std::string>();
        s.m_cap = to_num(j.at("m_cap"));
        s.gummel_tol = to_num(j.at("gummel_tol"));
        s.alpha = to_num(j.at("alpha"));
        s.apriori_gamma = to_num(j.at("apriori_gamma"));
        s.q_list = to_vec(j.at("q_list"));
        s.prop2_q = to_vec(j.at("prop2_q"));
        s.k_max = j.at("k_max").get<int>();
        const auto& mi = j.at("moser_inputs");
        s.moser_inputs.munu = {to_num(mi.at("mu")), to_num(mi.at("nu"))};
        s.moser_inputs.gamma = to_num(mi.at("gamma"));
        s.moser_inputs.domain_measure = to_num(mi.at("domain_measure"));
        s.moser_inputs.kappa_seed = to_num(mi.at("kappa_seed"));
        s.complete = j.at("complete").get<bool>();
        s.failure = j.at("failure").get<std::string>();
        s.dt_halvings = j.at("dt_halvings").get<std::size_t>();
        const auto kind = j.at("failure_kind").get<std::string>();
        for (auto k : {ErrorKind::Solver, ErrorKind::NonConvergence, ErrorKind::Precondition})
            if (kind == to_string(k)) s.failure_kind = k;
        for (const auto& r : j.at("records")) {
            if (s.records.empty()) s.records.push_back(record_from(r));
            else s.append(record_from(r), s.scenario_hash);
        }
        for (const auto& sn : j.at("snapshots"))
            s.snapshots.push_back({sn.at("time_index").get<std::size_t>(), to_num(sn.at("time")), to_vec(sn.at("n")),
                                   to_vec(sn.at("p")), to_vec(sn.at("psi"))});
        if (j.contains("nash")) {
            const auto& nj = j.at("nash");
            s.nash = NashProbeResult{to_vec(nj.at("ratios")), to_num(nj.at("empirical_constant")),
                                     nj.at("mesh_id").get<std::string>(), nj.at("samples").get<std::size_t>(),
                                     nj.at("skipped").get<std::size_t>()};
        }
        if (j.contains("moser_constants")) {
            s.moser_constants = constants_from(j.at("moser_constants"));
            const int k = j.at("moser_report").at("k_max").get<int>();
            s.moser = moser_cascade(s.records, *s.moser_constants, k, s.m_cap);
        }
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, std::string("store: ") + e.what());
    }
}

void save_store_file(const std::string& path, const TrajectoryStore& store) {
    std::ofstream f(path);
    if (!f) throw invalid_argument("cannot write " + path);
    save_store(f, store);
}

TrajectoryStore load_store_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw invalid_argument("cannot open store " + path);
    return load_store(f);
}

void write_diagnostics_csv(std::ostream& out, const TrajectoryStore& store) {
    out << "step,time,dt,entropy,production,gamma,linf_n,linf_p,dissipation_residual";
    for (double q : store.q_list) out << ",v_" << format_double(q);
    out << '\n';
    for (const auto& r : store.records) {
        out << r.time_index << ',' << format_double(r.time) << ',' << format_double(r.dt_used) << ','
            << format_double(r.entropy) << ',' << format_double(r.production) << ',' << format_double(r.gamma) << ','
            << format_double(r.linf_n) << ',' << format_double(r.linf_p) << ','
            << format_double(r.dissipation_residual);
        for (double q : store.q_list) out << ',' << format_double(r.v_values.at(q));
        out << '\n';
    }
}

void write_fields_csv(std::ostream& out, const Mesh& mesh, std::span<const double> n, std::span<const double> p,
                      std::span<const double> psi) {
    if (n.size() != mesh.num_cells() || p.size() != mesh.num_cells() || psi.size() != mesh.num_cells())
        throw invalid_argument("fields: size mismatch with mesh");
    out << "cell_id,x,y,N,P,Psi\n";
    for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
        const Point2 c = mesh.cell(k).center;
        out << k << ',' << format_double(c.x) << ',' << format_double(c.y) << ',' << format_double(n[k]) << ','
            << format_double(p[k]) << ',' << format_double(psi[k]) << '\n';
    }
}

void write_fields_csv(std::ostream& out, const TrajectoryStore& store, const Mesh& mesh, std::size_t step) {
    const Snapshot& s = store.snapshot_at(step);
    write_fields_csv(out, mesh, s.n, s.p, s.psi);
}

}  // namespace ddfv
