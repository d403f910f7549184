#include "ddfv/moser.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "ddfv/errors.hpp"
#include "ddfv/format.hpp"

namespace ddfv {

namespace {

constexpr double pi = 3.14159265358979323846;

double truncated_power(double u, double m_cap, double exponent) {
    const double t = std::max(u - m_cap, 0.0);
    return t == 0.0 ? 0.0 : std::pow(t, exponent);
}

std::string level_tag(int k, std::size_t n) {
    return "(k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")";
}

}  // namespace

MuNu derive_mu_nu(double norm_c, double lambda, double m_cap, double rbar) {
    if (!(norm_c >= 0.0) || !(lambda > 0.0) || !(m_cap > 0.0) || !(rbar >= 0.0))
        throw invalid_argument("derive_mu_nu: need |C| >= 0, lambda > 0, M > 0, Rbar >= 0");
    const double field = norm_c / (lambda * lambda);
    MuNu out;
    out.mu = field + m_cap * field + rbar * (1.0 + 2.0 * m_cap) + 4.0 * rbar;
    out.nu = m_cap * field + rbar * (1.0 + 2.0 * m_cap);
    return out;
}

Prop2Terms prop2_terms(const State& prev, const State& next, double dt, double q, double m_cap, double mu, double nu,
                       double gamma, const Mesh& mesh) {
    if (!(q >= 1.0)) throw invalid_argument("check_prop2: q must be >= 1");
    if (!(dt > 0.0)) throw invalid_argument("check_prop2: dt must be positive");
    const double half = 0.5 * (q + 1.0);

    std::vector<double> chi_n(mesh.num_cells());
    std::vector<double> chi_p(mesh.num_cells());
    for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
        chi_n[k] = truncated_power(next.n_cells[k], m_cap, half);
        chi_p[k] = truncated_power(next.p_cells[k], m_cap, half);
    }
    std::vector<double> bn(mesh.num_dirichlet());
    std::vector<double> bp(mesh.num_dirichlet());
    for (std::size_t i = 0; i < bn.size(); ++i) {
        bn[i] = truncated_power(next.n_dirichlet[i], m_cap, half);
        bp[i] = truncated_power(next.p_dirichlet[i], m_cap, half);
    }

    Prop2Terms t;
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        const Edge& ed = mesh.edge(e);
        if (ed.kind == EdgeKind::Neumann) continue;
        const double dn = difference(mesh, e, ed.k, chi_n, bn);
        const double dp = difference(mesh, e, ed.k, chi_p, bp);
        t.gradient += ed.tau * (dn * dn + dp * dp);
    }
    const double v_next = v_moment(next, m_cap, q + 1.0, mesh);
    const double v_prev = v_moment(prev, m_cap, q + 1.0, mesh);
    t.growth = (v_next - v_prev) / dt;
    t.lhs = t.growth + 4.0 * q / (q + 1.0) * gamma * t.gradient;
    t.rhs = mu * q * v_next + nu * mesh.domain_measure();
    return t;
}

double check_prop2(const State& prev, const State& next, double dt, double q, double m_cap, double mu, double nu,
                   double gamma, const Mesh& mesh) {
    return prop2_terms(prev, next, dt, q, m_cap, mu, nu, gamma, mesh).residual();
}

double prop2_slack(double q, double tol, double max_density, std::size_t num_cells) {
    return 10.0 * tol * std::pow(1.0 + max_density, q + 1.0) * (q + 1.0) * static_cast<double>(num_cells);
}

double nash_ratio(const Mesh& mesh, std::span<const double> chi) {
    const double d = Mesh::dimension;
    double mass2 = 0.0;
    double mass1 = 0.0;
    for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
        mass2 += mesh.cell(k).measure * chi[k] * chi[k];
        mass1 += mesh.cell(k).measure * std::abs(chi[k]);
    }
    if (mass1 == 0.0) return 0.0;
    const std::vector<double> zeros(mesh.num_dirichlet(), 0.0);
    const double grad = std::pow(h1_seminorm(chi, zeros, mesh), 2.0);
    return std::pow(mass2, 1.0 + 2.0 / d) / (grad * std::pow(mass1, 4.0 / d));
}

NashProbeResult nash_probe(const Mesh& mesh, std::size_t samples, std::uint64_t seed, std::string mesh_id) {
    if (samples < 1) throw invalid_argument("nash_probe: need at least one sample");
    if (!(mesh.dirichlet_measure() > 0.0))
        throw Error(ErrorKind::MeasureZeroDirichlet, "nash_probe: mesh has no Dirichlet boundary");

    // bounding box of the domain
    Rectangle box{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& c : mesh.cells()) {
        const Rectangle r = c.box.value_or(Rectangle{c.center.x, c.center.x, c.center.y, c.center.y});
        box.x_min = std::min(box.x_min, r.x_min);
        box.x_max = std::max(box.x_max, r.x_max);
        box.y_min = std::min(box.y_min, r.y_min);
        box.y_max = std::max(box.y_max, r.y_max);
    }
    const double wx = std::max(box.width(), 1e-300);
    const double wy = std::max(box.height(), 1e-300);
    const double diam = std::hypot(wx, wy);

    std::vector<Point2> anchors;
    for (auto e : mesh.dirichlet_edges()) {
        const Edge& ed = mesh.edge(e);
        anchors.push_back(ed.geometry ? ed.geometry->midpoint() : mesh.cell(ed.k).center);
    }
    std::vector<double> dist(mesh.num_cells(), std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
        const Point2 x = mesh.cell(k).center;
        for (const auto& a : anchors) dist[k] = std::min(dist[k], std::hypot(x.x - a.x, x.y - a.y));
        dist[k] /= diam;
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    NashProbeResult result;
    result.mesh_id = std::move(mesh_id);
    result.samples = samples;
    std::vector<double> chi(mesh.num_cells());
    while (result.ratios.size() < samples) {
        if (result.skipped > 100 * samples) throw Error(ErrorKind::Verification, "nash_probe: too many zero samples");
        const bool bump = unit(rng) < 0.5;
        if (bump) {
            const double cx = unit(rng);
            const double cy = unit(rng);
            const double radius = 0.15 + 0.45 * unit(rng);
            for (std::size_t k = 0; k < chi.size(); ++k) {
                const double x = (mesh.cell(k).center.x - box.x_min) / wx - cx;
                const double y = (mesh.cell(k).center.y - box.y_min) / wy - cy;
                chi[k] = std::max(0.0, 1.0 - (x * x + y * y) / (radius * radius)) * dist[k];
            }
        } else {
            double coeff[3][3];
            for (int a = 0; a < 3; ++a)
                for (int b = 0; b < 3; ++b) coeff[a][b] = normal(rng) / (1.0 + a + b);
            for (std::size_t k = 0; k < chi.size(); ++k) {
                const double x = (mesh.cell(k).center.x - box.x_min) / wx;
                const double y = (mesh.cell(k).center.y - box.y_min) / wy;
                double f = 0.0;
                for (int a = 0; a < 3; ++a)
                    for (int b = 0; b < 3; ++b) f += coeff[a][b] * std::sin((a + 1) * pi * x) * std::cos(b * pi * y);
                chi[k] = f * dist[k];
            }
        }
        const double ratio = nash_ratio(mesh, chi);
        if (ratio == 0.0) {
            ++result.skipped;
            continue;
        }
        result.ratios.push_back(ratio);
        result.empirical_constant = std::max(result.empirical_constant, ratio);
    }
    return result;
}

bool a_condition_holds(double a, double mu, double gamma, double q) {
    const double eps = gamma * a / q;
    return eps * (mu * q + eps) <= 4.0 * gamma * q / (q + 1.0);
}

double choose_a(double mu, double gamma, int q_max) {
    auto ok = [&](double a) {
        for (int q = 1; q <= std::max(q_max, 1); ++q)
            if (!a_condition_holds(a, mu, gamma, q)) return false;
        return true;
    };
    if (ok(1.0)) return 1.0;
    double lo = 0.0;
    double hi = 1.0;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? lo : hi) = mid;
    }
    return lo;
}

MoserConstants derive_constants(const MuNu& munu, double gamma, double nash_empirical, double domain_measure,
                                double kappa_seed, int k_max) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw invalid_argument("derive_constants: gamma must lie in (0, 1]");
    if (!(nash_empirical > 0.0)) throw invalid_argument("derive_constants: Nash constant must be positive");
    if (k_max < 0) throw invalid_argument("derive_constants: k_max must be >= 0");
    MoserConstants c;
    const double d = c.dimension;
    c.mu = munu.mu;
    c.nu = munu.nu;
    c.gamma = gamma;
    c.domain_measure = domain_measure;
    c.kappa_seed = std::max(1.0, kappa_seed);
    c.nash_empirical = nash_empirical;
    c.nash_young = std::pow(2.0 * nash_empirical, d / 2.0);
    c.a_const = choose_a(c.mu, gamma, 1 << k_max);
    const double young_a = c.nash_young * std::pow(c.a_const, -d / 2.0);
    c.b_const = std::pow(gamma, -d / 2.0) * std::max({c.nu * domain_measure, young_a, young_a * c.mu});
    c.d_const = c.b_const / c.a_const;
    c.kappa = std::pow(2.0, 5.0 + d) * c.d_const * c.kappa_seed;
    for (int k = 1; k <= std::max(k_max, 6); ++k) {
        MoserLevelConstants lv;
        lv.k = k;
        lv.zeta = std::ldexp(1.0, k) - 1.0;
        lv.eps = gamma * c.a_const / lv.zeta;
        lv.delta = c.b_const * std::pow(lv.zeta, d / 2.0) * (lv.zeta + lv.eps) / lv.eps;
        c.levels.push_back(lv);
    }
    return c;
}

MoserReport moser_cascade(std::span<const DiagnosticsRecord> trajectory, const MoserConstants& constants, int k_max,
                          double m_cap) {
    if (k_max < 0) throw invalid_argument("moser_cascade: k_max must be >= 0");
    if (trajectory.empty()) throw invalid_argument("moser_cascade: empty trajectory");
    if (static_cast<int>(constants.levels.size()) < k_max)
        throw invalid_argument("moser_cascade: constants derived for fewer levels than k_max");
    for (const auto& rec : trajectory) {
        for (int k = 0; k <= k_max; ++k) {
            if (!rec.v_values.count(std::ldexp(1.0, k)))
                throw invalid_argument("moser_cascade: record " + std::to_string(rec.time_index) + " lacks V_" +
                                       std::to_string(1 << k));
        }
    }

    const double d = constants.dimension;
    MoserReport report;
    report.constants = constants;
    report.k_max = k_max;
    report.m_cap = m_cap;
    const double log_kseed = std::log(constants.kappa_seed);
    const double log_closed_base = std::log(std::pow(2.0, 5.0 + d) * constants.d_const * constants.kappa_seed);

    auto level_constants = [&](int k) -> const MoserLevelConstants& { return constants.levels[k - 1]; };
    auto log_product = [&](int k) {
        // log prod_{j=0}^{k-1} (2 delta_{k-j})^{2^j}
        double s = 0.0;
        for (int j = 0; j < k; ++j) s += std::ldexp(1.0, j) * std::log(2.0 * level_constants(k - j).delta);
        return s;
    };

    for (int k = 0; k <= k_max; ++k) {
        MoserLevelReport lv;
        lv.k = k;
        const double q = std::ldexp(1.0, k);
        if (k > 0) {
            lv.zeta = level_constants(k).zeta;
            lv.eps = level_constants(k).eps;
            lv.delta = level_constants(k).delta;
        } else {
            lv.eps = std::numeric_limits<double>::quiet_NaN();
            lv.delta = std::numeric_limits<double>::quiet_NaN();
        }
        for (const auto& rec : trajectory) {
            const double w = rec.v_values.at(q);
            if (w > lv.sup_w_measured) {
                lv.sup_w_measured = w;
                lv.argmax_index = rec.time_index;
            }
        }
        lv.log_bound_inductive = log_product(k) + q * log_kseed;
        lv.log_bound_closed_form = q * log_closed_base;
        const double log_measured = lv.sup_w_measured > 0.0 ? std::log(lv.sup_w_measured)
                                                             : -std::numeric_limits<double>::infinity();
        lv.pass = log_measured <= lv.log_bound_inductive && log_measured <= lv.log_bound_closed_form;
        if (!lv.pass) report.failures.push_back("measured W_k exceeds bound at " + level_tag(k, lv.argmax_index));

        lv.recursion_worst = -std::numeric_limits<double>::infinity();
        if (k > 0) {
            const double zeta_term = std::pow(lv.zeta, d / 2.0) * (lv.zeta + lv.eps);
            for (std::size_t i = 1; i < trajectory.size(); ++i) {
                const auto& a = trajectory[i - 1];
                const auto& b = trajectory[i];
                if (b.time_index != a.time_index + 1 || !(b.dt_used > 0.0)) continue;
                const double w_prev = a.v_values.at(q);
                const double w_next = b.v_values.at(q);
                const double w_low = b.v_values.at(q / 2.0);
                const double lhs = (w_next - w_prev) / b.dt_used + lv.eps * w_next;
                const double rhs = constants.b_const * (zeta_term * w_low * w_low + 1.0);
                lv.recursion_worst = std::max(lv.recursion_worst, lhs - rhs);
            }
        }
        report.levels.push_back(lv);
    }

    report.a_condition_ok = true;
    for (int q = 1; q <= (1 << k_max); ++q) {
        if (!a_condition_holds(constants.a_const, constants.mu, constants.gamma, q)) {
            report.a_condition_ok = false;
            report.failures.push_back("A-condition fails at q=" + std::to_string(q));
        }
    }

    report.delta_growth_ok = true;
    report.telescoping_ok = true;
    for (int k = 1; k <= k_max; ++k) {
        const double growth = constants.d_const * std::pow(2.0, (2.0 + d / 2.0) * k);
        if (!(level_constants(k).delta <= growth)) {
            report.delta_growth_ok = false;
            report.failures.push_back("delta_k exceeds D 2^{(2+d/2)k} at k=" + std::to_string(k));
        }
        const double closed = std::ldexp(1.0, k) * std::log(std::pow(2.0, 5.0 + d) * constants.d_const);
        if (!(log_product(k) <= closed)) {
            report.telescoping_ok = false;
            report.failures.push_back("product telescoping bound fails at k=" + std::to_string(k));
        }
    }

    for (const auto& rec : trajectory) {
        report.sup_truncated_n = std::max(report.sup_truncated_n, std::max(rec.linf_n - m_cap, 0.0));
        report.sup_truncated_p = std::max(report.sup_truncated_p, std::max(rec.linf_p - m_cap, 0.0));
    }
    report.kappa_ok = report.sup_truncated_n <= constants.kappa && report.sup_truncated_p <= constants.kappa;
    if (!report.kappa_ok) report.failures.push_back("kappa does not dominate sup |(u - M)^+|_inf");
    return report;
}

void require_pass(const MoserReport& report) {
    if (report.pass()) return;
    std::string msg = "Moser cascade verification failed:";
    for (const auto& f : report.failures) msg += "\n  " + f;
    throw Error(ErrorKind::Verification, msg);
}

void write_moser_text(std::ostream& out, const MoserReport& report) {
    const auto& c = report.constants;
    out << "Moser cascade report\n"
        << "  dimension d        " << c.dimension << '\n'
        << "  M                  " << format_double(report.m_cap) << '\n'
        << "  mu, nu             " << format_double(c.mu) << ", " << format_double(c.nu) << '\n'
        << "  gamma (run min)    " << format_double(c.gamma) << '\n'
        << "  Nash C~/xi (meas.) " << format_double(c.nash_empirical) << '\n'
        << "  Nash split const.  " << format_double(c.nash_young) << "  (= (2 * measured)^{d/2})\n"
        << "  A                  " << format_double(c.a_const) << '\n'
        << "  B                  " << format_double(c.b_const) << '\n'
        << "  D = B/A            " << format_double(c.d_const) << '\n'
        << "  K = max(1,sup W_0) " << format_double(c.kappa_seed) << '\n'
        << "  kappa = 2^{5+d}DK  " << format_double(c.kappa) << '\n'
        << "  sup |(N-M)^+|_inf  " << format_double(report.sup_truncated_n) << '\n'
        << "  sup |(P-M)^+|_inf  " << format_double(report.sup_truncated_p) << '\n'
        << "  A-condition        " << (report.a_condition_ok ? "ok" : "FAIL") << '\n'
        << "  delta_k growth     " << (report.delta_growth_ok ? "ok" : "FAIL") << '\n'
        << "  telescoping        " << (report.telescoping_ok ? "ok" : "FAIL") << '\n'
        << "  kappa dominates    " << (report.kappa_ok ? "ok" : "FAIL") << '\n';
    out << "\n  k  sup_W (at n)            log inductive   log closed      recursion worst\n";
    for (const auto& lv : report.levels) {
        out << "  " << lv.k << "  " << format_double(lv.sup_w_measured) << " (" << lv.argmax_index << ")  "
            << format_double(lv.log_bound_inductive) << "  " << format_double(lv.log_bound_closed_form) << "  "
            << (lv.k > 0 ? format_double(lv.recursion_worst) : std::string("-")) << "  " << (lv.pass ? "ok" : "FAIL")
            << '\n';
    }
    out << "\n  extended levels (informational)\n";
    for (const auto& lv : c.levels) {
        const double growth = c.d_const * std::pow(2.0, (2.0 + c.dimension / 2.0) * lv.k);
        out << "  k=" << lv.k << " zeta=" << format_double(lv.zeta) << " eps=" << format_double(lv.eps)
            << " delta=" << format_double(lv.delta) << " D2^{(2+d/2)k}=" << format_double(growth) << '\n';
    }
    out << (report.pass() ? "\nPASS\n" : "\nFAIL\n");
    for (const auto& f : report.failures) out << "  " << f << '\n';
}

void write_moser_csv(std::ostream& out, const MoserReport& report) {
    out << "k,zeta_k,eps_k,delta_k,sup_W_measured,bound_inductive,bound_closed_form,pass\n";
    for (const auto& lv : report.levels) {
        out << lv.k << ',' << format_double(lv.zeta) << ',' << format_double(lv.eps) << ','
            << format_double(lv.delta) << ',' << format_double(lv.sup_w_measured) << ','
            << format_double(std::exp(lv.log_bound_inductive)) << ','
            << format_double(std::exp(lv.log_bound_closed_form)) << ',' << (lv.pass ? 1 : 0) << '\n';
    }
}

}  // namespace ddfv
