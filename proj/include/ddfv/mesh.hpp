#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ddfv {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Axis-aligned rectangle [x_min, x_max] x [y_min, y_max].
struct Rectangle {
    double x_min = 0.0;
    double x_max = 1.0;
    double y_min = 0.0;
    double y_max = 1.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
};

enum class EdgeKind { Interior, Dirichlet, Neumann };

inline constexpr std::size_t no_cell = std::numeric_limits<std::size_t>::max();

struct Cell {
    Point2 center;
    double measure = 0.0;
    /// Cell extent; present for generated tensor meshes, absent for meshes read from file.
    std::optional<Rectangle> box;
};

struct EdgeGeometry {
    Point2 a;
    Point2 b;

    Point2 midpoint() const { return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}; }
};

struct Edge {
    EdgeKind kind = EdgeKind::Neumann;
    std::size_t k = no_cell;  ///< first (or only) incident cell
    std::size_t l = no_cell;  ///< second cell, interior edges only
    double measure = 0.0;     ///< |sigma|
    double d_sigma = 0.0;     ///< d(x_K, x_L) or d(x_K, sigma)
    double d_k = 0.0;         ///< d(x_K, sigma)
    double d_l = 0.0;         ///< d(x_L, sigma), interior edges only
    double tau = 0.0;         ///< |sigma| / d_sigma
    std::optional<EdgeGeometry> geometry;
    int segment = -1;  ///< index of the boundary rule that tagged this edge

    bool is_boundary() const { return kind != EdgeKind::Interior; }
};

struct MeshRegularity {
    double xi = 0.0;
    double c0 = 0.0;
};

/// Admissible two-point finite-volume mesh in two dimensions. Immutable once built.
class Mesh {
public:
    static constexpr int dimension = 2;

    /// Validates all structural invariants; throws InvalidArgument on violation.
    Mesh(std::vector<Cell> cells, std::vector<Edge> edges, double domain_measure);

    std::size_t num_cells() const { return cells_.size(); }
    std::size_t num_edges() const { return edges_.size(); }
    std::size_t num_dirichlet() const { return dirichlet_.size(); }

    const Cell& cell(std::size_t i) const { return cells_[i]; }
    const Edge& edge(std::size_t i) const { return edges_[i]; }
    std::span<const Cell> cells() const { return cells_; }
    std::span<const Edge> edges() const { return edges_; }

    /// Edge ids incident to cell K, i.e. the set E_K.
    std::span<const std::size_t> cell_edges(std::size_t k) const;

    /// Edge ids of Dirichlet edges, in the order used by per-Dirichlet-edge vectors.
    std::span<const std::size_t> dirichlet_edges() const { return dirichlet_; }

    /// Position of a Dirichlet edge inside per-Dirichlet-edge vectors.
    std::size_t dirichlet_slot(std::size_t edge) const { return dirichlet_slot_[edge]; }

    double domain_measure() const { return domain_measure_; }
    double dirichlet_measure() const;

    /// Distance from the center of `cell` to edge `edge` (cell must be incident).
    double distance_to_edge(std::size_t edge, std::size_t cell) const;

    /// Neighbour cell across an interior edge.
    std::size_t other_cell(std::size_t edge, std::size_t cell) const;

private:
    std::vector<Cell> cells_;
    std::vector<Edge> edges_;
    std::vector<std::size_t> adjacency_offsets_;
    std::vector<std::size_t> adjacency_;
    std::vector<std::size_t> dirichlet_;
    std::vector<std::size_t> dirichlet_slot_;
    double domain_measure_ = 0.0;

    void validate() const;
};

/// u_{K,sigma}: u_L across an interior edge, u_sigma on a Dirichlet edge, u_K on a Neumann edge.
double value_across(const Mesh& mesh, std::size_t edge, std::size_t cell, std::span<const double> cell_values,
                    std::span<const double> dirichlet_values);

/// D_{K,sigma} u = u_{K,sigma} - u_K.
inline double difference(const Mesh& mesh, std::size_t edge, std::size_t cell, std::span<const double> cell_values,
                         std::span<const double> dirichlet_values) {
    return value_across(mesh, edge, cell, cell_values, dirichlet_values) - cell_values[cell];
}

/// Uniform nx-by-ny tensor grid; all boundary edges are tagged Neumann.
Mesh build_rectangular_mesh(int nx, int ny, const Rectangle& domain);

/// A boundary rule tags every boundary edge whose midpoint it matches.
struct BoundaryRule {
    std::string name;
    std::function<bool(const Point2&)> matches;
    EdgeKind kind = EdgeKind::Neumann;
};

enum class Face { XMin, XMax, YMin, YMax };

/// Predicate true on points lying on one face of `domain` (relative tolerance 1e-9).
std::function<bool(const Point2&)> on_face(Face face, const Rectangle& domain);

/// Retag boundary edges. Every boundary edge must match exactly one rule, and the
/// resulting Dirichlet part must have positive measure.
Mesh boundary_partition(const Mesh& mesh, std::span<const BoundaryRule> rules);

MeshRegularity regularity_constants(const Mesh& mesh);

/// Line-oriented text format, header `FVMESH 1`.
void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);

}  // namespace ddfv
