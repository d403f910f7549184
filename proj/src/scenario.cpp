#include "ddfv/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "ddfv/errors.hpp"
#include "ddfv/format.hpp"
#include "ddfv/poisson.hpp"

namespace ddfv {

namespace {

Error parse_error(const std::string& what) { return {ErrorKind::Parse, "scenario: " + what}; }

Error hypothesis(const std::string& tag, const std::string& what) {
    return {ErrorKind::HypothesisViolation, tag + ": " + what};
}

std::vector<std::string> split_ws(std::string_view s) {
    std::istringstream is{std::string(s)};
    std::vector<std::string> out;
    for (std::string t; is >> t;) out.push_back(t);
    return out;
}

/// `name(a=1, b=2)` or `name(1)` or `name`.
struct Call {
    std::string name;
    std::map<std::string, double> named;
    std::vector<double> positional;
};

Call parse_call(std::string_view text) {
    text = trim(text);
    Call call;
    const auto open = text.find('(');
    if (open == std::string_view::npos) {
        call.name = std::string(text);
        return call;
    }
    if (text.back() != ')') throw parse_error("unbalanced parentheses in '" + std::string(text) + "'");
    call.name = std::string(trim(text.substr(0, open)));
    std::string_view args = text.substr(open + 1, text.size() - open - 2);
    while (!trim(args).empty()) {
        const auto comma = args.find(',');
        std::string_view item = trim(args.substr(0, comma));
        if (const auto eq = item.find('='); eq != std::string_view::npos)
            call.named[std::string(trim(item.substr(0, eq)))] = parse_double(item.substr(eq + 1));
        else
            call.positional.push_back(parse_double(item));
        if (comma == std::string_view::npos) break;
        args.remove_prefix(comma + 1);
    }
    return call;
}

double take(Call& call, const std::string& key) {
    auto it = call.named.find(key);
    if (it == call.named.end()) throw parse_error(call.name + "(...) needs parameter '" + key + "'");
    const double v = it->second;
    call.named.erase(it);
    return v;
}

void expect_consumed(const Call& call) {
    if (!call.named.empty()) throw parse_error(call.name + "(...) has unknown parameter '" + call.named.begin()->first + "'");
    if (!call.positional.empty()) throw parse_error(call.name + "(...) has unexpected positional arguments");
}

RecombinationSpec parse_recombination(const std::string& text) {
    Call call = parse_call(text);
    RecombinationSpec spec;
    if (call.name == "none") {
        spec = RecombinationSpec::none();
    } else if (call.name == "constant") {
        double r0 = 0.0;
        if (call.positional.size() == 1) {
            r0 = call.positional[0];
            call.positional.clear();
        } else {
            r0 = take(call, "r0");
        }
        spec = RecombinationSpec::constant(r0);
    } else if (call.name == "srh") {
        const double tn = take(call, "tau_n");
        const double tp = take(call, "tau_p");
        spec = RecombinationSpec::srh(tn, tp);
    } else if (call.name == "auger") {
        const double cn = take(call, "c_n");
        const double cp = take(call, "c_p");
        spec = RecombinationSpec::auger(cn, cp);
    } else {
        throw parse_error("unknown recombination model '" + call.name + "'");
    }
    expect_consumed(call);
    return spec;
}

std::string recombination_canonical(const RecombinationSpec& r) {
    switch (r.kind) {
        case RecombinationSpec::Kind::None: return "none";
        case RecombinationSpec::Kind::Constant: return "constant(r0=" + format_double(r.r0) + ")";
        case RecombinationSpec::Kind::Srh:
            return "srh(tau_n=" + format_double(r.tau_n) + ", tau_p=" + format_double(r.tau_p) + ")";
        case RecombinationSpec::Kind::Auger:
            return "auger(c_n=" + format_double(r.c_n) + ", c_p=" + format_double(r.c_p) + ")";
    }
    return "none";
}

double overlap(double a0, double a1, double b0, double b1) { return std::max(0.0, std::min(a1, b1) - std::max(a0, b0)); }

std::string join_numbers(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
    return s;
}

double single_number(const std::string& key, const std::string& value) {
    const auto tokens = split_ws(value);
    if (tokens.size() != 1) {
        if (tokens.size() > 1 && (key == "n" || key == "p" || key == "psi"))
            throw Error(ErrorKind::InvalidArgument,
                        "scenario: boundary value '" + key + "' lists several values; time-dependent boundary data is not supported");
        throw parse_error("key '" + key + "' needs exactly one number");
    }
    return parse_double(tokens[0]);
}

}  // namespace

Profile Profile::parse(const std::string& text) {
    Call call = parse_call(text);
    Profile p;
    if (call.name.empty()) throw parse_error("empty profile");
    if (call.name == "zero") {
        p.kind = Kind::Constant;
        p.value = 0.0;
    } else if (call.name == "constant") {
        p.kind = Kind::Constant;
        if (call.positional.size() == 1) {
            p.value = call.positional[0];
            call.positional.clear();
        } else {
            p.value = take(call, "c");
        }
    } else if (call.name == "pn") {
        p.kind = Kind::Pn;
        p.x_split = take(call, "x_split");
        p.c_plus = take(call, "c_plus");
        p.c_minus = take(call, "c_minus");
    } else if (call.name == "pnp") {
        p.kind = Kind::Pnp;
        p.x_left = take(call, "x_left");
        p.x_right = take(call, "x_right");
        p.c_outer = take(call, "c_outer");
        p.c_inner = take(call, "c_inner");
        if (!(p.x_left < p.x_right)) throw parse_error("pnp profile needs x_left < x_right");
    } else {
        p.kind = Kind::Constant;
        p.value = parse_double(call.name);
    }
    expect_consumed(call);
    return p;
}

std::string Profile::canonical() const {
    switch (kind) {
        case Kind::Constant: return "constant(c=" + format_double(value) + ")";
        case Kind::Pn:
            return "pn(x_split=" + format_double(x_split) + ", c_plus=" + format_double(c_plus) +
                   ", c_minus=" + format_double(c_minus) + ")";
        case Kind::Pnp:
            return "pnp(x_left=" + format_double(x_left) + ", x_right=" + format_double(x_right) +
                   ", c_outer=" + format_double(c_outer) + ", c_inner=" + format_double(c_inner) + ")";
    }
    return {};
}

double Profile::value_at(const Point2& x) const {
    switch (kind) {
        case Kind::Constant: return value;
        case Kind::Pn: return x.x < x_split ? c_plus : c_minus;
        case Kind::Pnp: return (x.x >= x_left && x.x < x_right) ? c_inner : c_outer;
    }
    return 0.0;
}

double Profile::cell_mean(const Cell& cell) const {
    if (kind == Kind::Constant) return value;
    if (!cell.box) return value_at(cell.center);
    const double x0 = cell.box->x_min;
    const double x1 = cell.box->x_max;
    const double w = x1 - x0;
    if (kind == Kind::Pn) {
        const double f = overlap(x0, x1, x0, std::max(x0, x_split)) / w;
        if (f == 1.0) return c_plus;
        if (f == 0.0) return c_minus;
        return f * c_plus + (1.0 - f) * c_minus;
    }
    const double f = overlap(x0, x1, x_left, x_right) / w;
    if (f == 1.0) return c_inner;
    if (f == 0.0) return c_outer;
    return f * c_inner + (1.0 - f) * c_outer;
}

double Profile::sup_abs() const {
    switch (kind) {
        case Kind::Constant: return std::abs(value);
        case Kind::Pn: return std::max(std::abs(c_plus), std::abs(c_minus));
        case Kind::Pnp: return std::max(std::abs(c_outer), std::abs(c_inner));
    }
    return 0.0;
}

std::string ScenarioSpec::canonical() const {
    std::ostringstream out;
    out << "[mesh]\n";
    if (!mesh_file.empty()) {
        out << "file = " << mesh_file << '\n';
    } else {
        out << "nx = " << nx << "\nny = " << ny << "\ndomain = " << format_double(domain.x_min) << ' '
            << format_double(domain.x_max) << ' ' << format_double(domain.y_min) << ' ' << format_double(domain.y_max)
            << '\n';
    }
    out << "\n[physics]\nlambda = " << format_double(lambda) << "\ndoping = " << doping.canonical()
        << "\nrecombination = " << recombination_canonical(recombination) << '\n';
    if (m_cap) out << "m_cap = " << format_double(*m_cap) << '\n';
    for (const auto& seg : boundary) {
        out << "\n[boundary." << seg.name << "]\nwhere =";
        for (const auto& w : seg.where) out << ' ' << w;
        out << "\nkind = " << (seg.kind == EdgeKind::Dirichlet ? "dirichlet" : "neumann") << '\n';
        if (seg.kind == EdgeKind::Dirichlet) {
            out << "n = " << format_double(seg.n) << '\n';
            if (seg.p) out << "p = " << format_double(*seg.p) << '\n';
            out << "psi = " << format_double(seg.psi) << '\n';
        }
    }
    out << "\n[initial]\nn = " << n0.canonical() << "\np = " << p0.canonical() << '\n';
    out << "\n[time]\ndt = " << format_double(dt) << "\nsteps = " << n_steps << "\ngummel_tol = " << format_double(gummel_tol)
        << '\n';
    out << "\n[verify]\nq_list = " << join_numbers(q_list) << "\nprop2_q = " << join_numbers(prop2_q)
        << "\nk_max = " << k_max << "\nseed = " << seed << "\nnash_samples = " << nash_samples
        << "\nsnapshot_stride = " << snapshot_stride << '\n';
    return out.str();
}

ScenarioSpec parse_scenario_text(const std::string& text) {
    // collect sections
    std::vector<std::pair<std::string, std::map<std::string, std::string>>> sections;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto view = trim(line);
        if (view.empty()) continue;
        if (view.front() == '[') {
            if (view.back() != ']') throw parse_error("line " + std::to_string(line_no) + ": malformed section header");
            const std::string name(trim(view.substr(1, view.size() - 2)));
            for (const auto& s : sections)
                if (s.first == name) throw parse_error("duplicate section [" + name + "]");
            sections.emplace_back(name, std::map<std::string, std::string>{});
            continue;
        }
        const auto eq = view.find('=');
        if (eq == std::string_view::npos || sections.empty())
            throw parse_error("line " + std::to_string(line_no) + ": expected 'key = value' inside a section");
        const std::string key(trim(view.substr(0, eq)));
        if (!sections.back().second.emplace(key, std::string(trim(view.substr(eq + 1)))).second)
            throw parse_error("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }

    ScenarioSpec spec;
    bool have_mesh = false, have_physics = false, have_initial = false, have_time = false;
    for (auto& [name, kv] : sections) {
        auto get = [&](const std::string& key) -> std::optional<std::string> {
            auto it = kv.find(key);
            if (it == kv.end()) return std::nullopt;
            std::string v = it->second;
            kv.erase(it);
            return v;
        };
        auto need = [&](const std::string& key) {
            auto v = get(key);
            if (!v) throw parse_error("[" + name + "] needs key '" + key + "'");
            return *v;
        };

        if (name == "mesh") {
            have_mesh = true;
            if (auto f = get("file")) {
                spec.mesh_file = *f;
            } else {
                spec.nx = static_cast<int>(parse_integer(need("nx")));
                spec.ny = static_cast<int>(parse_integer(need("ny")));
                if (auto d = get("domain")) {
                    const auto t = split_ws(*d);
                    if (t.size() != 4) throw parse_error("[mesh] domain needs 'x_min x_max y_min y_max'");
                    spec.domain = {parse_double(t[0]), parse_double(t[1]), parse_double(t[2]), parse_double(t[3])};
                }
            }
        } else if (name == "physics") {
            have_physics = true;
            spec.lambda = parse_double(need("lambda"));
            spec.doping = Profile::parse(get("doping").value_or("zero"));
            spec.recombination = parse_recombination(get("recombination").value_or("none"));
            if (auto m = get("m_cap")) spec.m_cap = parse_double(*m);
        } else if (name.rfind("boundary.", 0) == 0) {
            BoundarySegment seg;
            seg.name = name.substr(9);
            seg.where = split_ws(need("where"));
            const auto kind = need("kind");
            if (kind == "dirichlet") {
                seg.kind = EdgeKind::Dirichlet;
                seg.n = single_number("n", need("n"));
                if (auto p = get("p")) seg.p = single_number("p", *p);
                seg.psi = single_number("psi", need("psi"));
            } else if (kind == "neumann") {
                seg.kind = EdgeKind::Neumann;
            } else {
                throw parse_error("[" + name + "] kind must be 'dirichlet' or 'neumann'");
            }
            for (const auto& w : seg.where) {
                static const std::set<std::string> known{"x_min", "x_max", "y_min", "y_max", "all"};
                if (!known.count(w)) throw parse_error("[" + name + "] unknown boundary selector '" + w + "'");
            }
            spec.boundary.push_back(seg);
        } else if (name == "initial") {
            have_initial = true;
            spec.n0 = Profile::parse(need("n"));
            spec.p0 = Profile::parse(need("p"));
        } else if (name == "time") {
            have_time = true;
            spec.dt = parse_double(need("dt"));
            const long long steps = parse_integer(need("steps"));
            if (steps < 0) throw parse_error("[time] steps must be >= 0");
            spec.n_steps = static_cast<std::size_t>(steps);
            if (auto t = get("gummel_tol")) spec.gummel_tol = parse_double(*t);
        } else if (name == "verify") {
            if (auto q = get("q_list")) {
                spec.q_list.clear();
                for (const auto& t : split_ws(*q)) spec.q_list.push_back(parse_double(t));
            }
            if (auto q = get("prop2_q")) {
                spec.prop2_q.clear();
                for (const auto& t : split_ws(*q)) spec.prop2_q.push_back(parse_double(t));
            }
            if (auto k = get("k_max")) spec.k_max = static_cast<int>(parse_integer(*k));
            if (auto s = get("seed")) spec.seed = static_cast<std::uint64_t>(parse_integer(*s));
            if (auto s = get("nash_samples")) spec.nash_samples = static_cast<std::size_t>(parse_integer(*s));
            if (auto s = get("snapshot_stride")) spec.snapshot_stride = static_cast<std::size_t>(parse_integer(*s));
        } else {
            throw parse_error("unknown section [" + name + "]");
        }
        if (!kv.empty()) throw parse_error("[" + name + "] has unknown key '" + kv.begin()->first + "'");
    }
    if (!have_mesh) throw parse_error("missing [mesh]");
    if (!have_physics) throw parse_error("missing [physics]");
    if (!have_initial) throw parse_error("missing [initial]");
    if (!have_time) throw parse_error("missing [time]");
    if (spec.boundary.empty()) throw parse_error("no [boundary.*] sections");
    if (spec.q_list.empty()) spec.q_list = {1.0, 2.0, 3.0, 5.0, 9.0, 17.0};
    return spec;
}

namespace {

Scenario build_impl(ScenarioSpec spec, const std::string& base_dir, const std::string* mesh_text_in) {
    if (!(spec.lambda > 0.0)) throw invalid_argument("scenario: lambda must be positive");
    if (!(spec.dt > 0.0)) throw invalid_argument("scenario: dt must be positive");
    if (!(spec.gummel_tol > 0.0 && spec.gummel_tol < 1.0)) throw invalid_argument("scenario: gummel_tol must lie in (0, 1)");
    if (spec.k_max < 0 || spec.k_max > 10) throw invalid_argument("scenario: k_max must lie in [0, 10]");
    if (spec.snapshot_stride < 1) throw invalid_argument("scenario: snapshot_stride must be >= 1");
    for (double q : spec.q_list)
        if (!(q >= 1.0)) throw invalid_argument("scenario: q_list entries must be >= 1");
    for (double q : spec.prop2_q)
        if (!(q >= 1.0)) throw invalid_argument("scenario: prop2_q entries must be >= 1");

    // mesh
    std::optional<Mesh> mesh;
    std::string mesh_text;
    if (!spec.mesh_file.empty()) {
        std::optional<Mesh> loaded;
        if (mesh_text_in) {
            std::istringstream f(*mesh_text_in);
            loaded.emplace(read_mesh(f));
        } else {
            const auto path = std::filesystem::path(base_dir) / spec.mesh_file;
            std::ifstream f(path);
            if (!f) throw invalid_argument("scenario: cannot open mesh file " + path.string());
            loaded.emplace(read_mesh(f));
        }
        Mesh raw = std::move(*loaded);
        if (spec.boundary.size() != 1 || spec.boundary[0].where != std::vector<std::string>{"all"} ||
            spec.boundary[0].kind != EdgeKind::Dirichlet)
            throw Error(ErrorKind::Partition,
                        "scenario: meshes read from file carry their own edge kinds; use one dirichlet section with 'where = all'");
        if (!(raw.dirichlet_measure() > 0.0))
            throw Error(ErrorKind::MeasureZeroDirichlet, "scenario: mesh file has no Dirichlet edges");
        std::ostringstream os;
        write_mesh(os, raw);
        mesh_text = os.str();
        mesh.emplace(std::move(raw));
    } else {
        const Mesh raw = build_rectangular_mesh(spec.nx, spec.ny, spec.domain);
        std::vector<BoundaryRule> rules;
        for (const auto& seg : spec.boundary) {
            std::vector<std::function<bool(const Point2&)>> preds;
            bool all = false;
            for (const auto& w : seg.where) {
                if (w == "all") all = true;
                else if (w == "x_min") preds.push_back(on_face(Face::XMin, spec.domain));
                else if (w == "x_max") preds.push_back(on_face(Face::XMax, spec.domain));
                else if (w == "y_min") preds.push_back(on_face(Face::YMin, spec.domain));
                else preds.push_back(on_face(Face::YMax, spec.domain));
            }
            rules.push_back({seg.name,
                             [preds, all](const Point2& p) {
                                 if (all) return true;
                                 return std::any_of(preds.begin(), preds.end(), [&](const auto& f) { return f(p); });
                             },
                             seg.kind});
        }
        mesh.emplace(boundary_partition(raw, rules));
    }
    const Mesh& m = *mesh;

    // cell data
    DeviceModel model;
    model.lambda = spec.lambda;
    model.recombination = spec.recombination;
    std::vector<double> n0(m.num_cells()), p0(m.num_cells());
    model.doping.resize(m.num_cells());
    for (std::size_t k = 0; k < m.num_cells(); ++k) {
        model.doping[k] = spec.doping.cell_mean(m.cell(k));
        n0[k] = spec.n0.cell_mean(m.cell(k));
        p0[k] = spec.p0.cell_mean(m.cell(k));
        if (!std::isfinite(model.doping[k])) throw hypothesis("bounded doping", "doping is not bounded");
    }

    // boundary data: segments are constant, so edge means equal the segment values
    for (auto e : m.dirichlet_edges()) {
        const int seg_index = spec.mesh_file.empty() ? m.edge(e).segment : 0;
        const BoundarySegment& seg = spec.boundary.at(static_cast<std::size_t>(seg_index));
        model.n_dirichlet.push_back(seg.n);
        model.p_dirichlet.push_back(seg.p_value());
        model.psi_dirichlet.push_back(seg.psi);
    }
    for (const auto& seg : spec.boundary) {
        if (seg.kind != EdgeKind::Dirichlet) continue;
        if (!(seg.n > 0.0) || !(seg.p_value() > 0.0))
            throw hypothesis("boundary equilibrium", "boundary '" + seg.name + "' needs positive N^D and P^D");
        if (std::abs(seg.n * seg.p_value() - 1.0) > 1e-12)
            throw hypothesis("boundary equilibrium", "boundary '" + seg.name + "' has N^D P^D = " + format_double(seg.n * seg.p_value()) +
                                       " != 1");
    }

    double data_max = 0.0;
    for (std::size_t k = 0; k < m.num_cells(); ++k) {
        if (!(n0[k] >= 0.0) || !(p0[k] >= 0.0)) throw hypothesis("density cap", "initial densities must be nonnegative");
        data_max = std::max({data_max, n0[k], p0[k]});
    }
    for (std::size_t i = 0; i < model.n_dirichlet.size(); ++i)
        data_max = std::max({data_max, model.n_dirichlet[i], model.p_dirichlet[i]});
    const double m_cap = spec.m_cap.value_or(data_max);
    if (!(m_cap > 0.0)) throw hypothesis("density cap", "M must be positive");
    if (data_max > m_cap)
        throw hypothesis("density cap", "initial or boundary density " + format_double(data_max) + " exceeds M = " +
                                   format_double(m_cap));

    validate_growth_bound(spec.recombination);
    const double alpha = compute_alpha(model.n_dirichlet, model.psi_dirichlet);

    return Scenario{std::move(spec), std::move(*mesh), std::move(model), std::move(n0), std::move(p0), m_cap, alpha,
                    std::move(mesh_text)};
}

}  // namespace

Scenario build_scenario(ScenarioSpec spec, const std::string& base_dir) {
    return build_impl(std::move(spec), base_dir, nullptr);
}

Scenario load_scenario_with_mesh(const std::string& text, const std::string& mesh_text) {
    ScenarioSpec spec = parse_scenario_text(text);
    if (spec.mesh_file.empty()) return build_impl(std::move(spec), ".", nullptr);
    return build_impl(std::move(spec), ".", &mesh_text);
}

std::string Scenario::hash() const { return fnv1a_hex(spec.canonical() + mesh_text); }

Scenario load_scenario_text(const std::string& text, const std::string& base_dir) {
    return build_scenario(parse_scenario_text(text), base_dir);
}

Scenario load_scenario_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw invalid_argument("cannot open scenario file " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    const auto dir = std::filesystem::path(path).parent_path();
    return load_scenario_text(ss.str(), dir.empty() ? "." : dir.string());
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace ddfv
