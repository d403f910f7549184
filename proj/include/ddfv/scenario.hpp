#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ddfv/mesh.hpp"
#include "ddfv/transport.hpp"

namespace ddfv {

/// Named scalar field over the domain. All shipped profiles are piecewise constant in x.
struct Profile {
    enum class Kind { Constant, Pn, Pnp };

    Kind kind = Kind::Constant;
    double value = 0.0;  ///< Constant
    double x_split = 0.5, c_plus = 1.0, c_minus = -1.0;                 ///< Pn: c_plus for x < x_split
    double x_left = 1.0 / 3.0, x_right = 2.0 / 3.0, c_outer = -1.0, c_inner = 1.0;  ///< Pnp stripe

    /// Accepts a bare number, `zero`, `constant(c)`, `pn(x_split=, c_plus=, c_minus=)`,
    /// `pnp(x_left=, x_right=, c_outer=, c_inner=)`.
    static Profile parse(const std::string& text);
    std::string canonical() const;

    double value_at(const Point2& x) const;
    /// Mean over the cell box when known (exact for these profiles), center value otherwise.
    double cell_mean(const Cell& cell) const;
    double sup_abs() const;
};

struct BoundarySegment {
    std::string name;
    std::vector<std::string> where;  ///< subset of x_min, x_max, y_min, y_max, or {all}
    EdgeKind kind = EdgeKind::Neumann;
    double n = 1.0;
    std::optional<double> p;  ///< derived as 1/n when omitted
    double psi = 0.0;

    double p_value() const { return p.value_or(1.0 / n); }
};

/// Parsed and validated scenario document.
struct ScenarioSpec {
    // [mesh]
    int nx = 0;
    int ny = 0;
    Rectangle domain;
    std::string mesh_file;  ///< alternative to nx/ny, resolved relative to the scenario file
    // [physics]
    double lambda = 1.0;
    Profile doping;
    RecombinationSpec recombination;
    std::optional<double> m_cap;
    // [boundary.*]
    std::vector<BoundarySegment> boundary;
    // [initial]
    Profile n0;
    Profile p0;
    // [time]
    double dt = 0.1;
    std::size_t n_steps = 0;
    // [verify]
    std::vector<double> q_list;
    std::vector<double> prop2_q{1.0, 2.0, 4.0, 8.0};
    int k_max = 0;
    std::uint64_t seed = 1;
    std::size_t nash_samples = 200;
    std::size_t snapshot_stride = 10;
    double gummel_tol = 1e-9;

    /// Deterministic re-serialization; parse(canonical()) reproduces the same spec.
    std::string canonical() const;
};

/// A scenario ready to run: parsed document plus mesh, device model and initial cell means.
struct Scenario {
    ScenarioSpec spec;
    Mesh mesh;
    DeviceModel model;
    std::vector<double> n0;
    std::vector<double> p0;
    double m_cap = 0.0;
    double alpha = 0.0;
    std::string mesh_text;  ///< canonical mesh serialization, part of the hash for file meshes

    /// Stable 64-bit FNV-1a hash of the canonical scenario text, as 16 hex digits.
    std::string hash() const;
};

ScenarioSpec parse_scenario_text(const std::string& text);

/// Builds mesh and fields and checks bounded doping, equilibrium boundary data, the density cap and recombination growth.
Scenario build_scenario(ScenarioSpec spec, const std::string& base_dir = ".");

Scenario load_scenario_text(const std::string& text, const std::string& base_dir = ".");
Scenario load_scenario_file(const std::string& path);
/// As load_scenario_text, with the mesh of a `file =` scenario given as serialized text.
Scenario load_scenario_with_mesh(const std::string& text, const std::string& mesh_text);

std::string fnv1a_hex(const std::string& text);

}  // namespace ddfv
