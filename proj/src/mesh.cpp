#include "ddfv/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ddfv/errors.hpp"

namespace ddfv {

namespace {

double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

Mesh::Mesh(std::vector<Cell> cells, std::vector<Edge> edges, double domain_measure)
    : cells_(std::move(cells)), edges_(std::move(edges)), domain_measure_(domain_measure) {
    if (cells_.empty()) throw invalid_argument("mesh has no cells");

    std::vector<std::size_t> counts(cells_.size() + 1, 0);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        auto& edge = edges_[e];
        if (edge.k >= cells_.size())
            throw invalid_argument("edge " + std::to_string(e) + " references unknown cell");
        ++counts[edge.k + 1];
        if (edge.kind == EdgeKind::Interior) {
            if (edge.l >= cells_.size() || edge.l == edge.k)
                throw invalid_argument("interior edge " + std::to_string(e) + " needs two distinct cells");
            ++counts[edge.l + 1];
        } else if (edge.l != no_cell) {
            throw invalid_argument("boundary edge " + std::to_string(e) + " references two cells");
        }
        if (!(edge.measure > 0.0) || !(edge.d_sigma > 0.0))
            throw invalid_argument("edge " + std::to_string(e) + " has non-positive measure or distance");
        edge.tau = edge.measure / edge.d_sigma;
    }
    for (std::size_t i = 1; i < counts.size(); ++i) counts[i] += counts[i - 1];
    adjacency_offsets_ = counts;
    adjacency_.assign(counts.back(), 0);
    std::vector<std::size_t> fill(counts.begin(), counts.end() - 1);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        adjacency_[fill[edges_[e].k]++] = e;
        if (edges_[e].kind == EdgeKind::Interior) adjacency_[fill[edges_[e].l]++] = e;
    }

    dirichlet_slot_.assign(edges_.size(), no_cell);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
        if (edges_[e].kind == EdgeKind::Dirichlet) {
            dirichlet_slot_[e] = dirichlet_.size();
            dirichlet_.push_back(e);
        }
    }
    validate();
}

void Mesh::validate() const {
    double total = 0.0;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        if (!(cells_[i].measure > 0.0)) throw invalid_argument("cell " + std::to_string(i) + " has non-positive measure");
        total += cells_[i].measure;
    }
    if (std::abs(total - domain_measure_) > 1e-12 * domain_measure_)
        throw invalid_argument("cell measures do not sum to the domain measure");

    for (std::size_t e = 0; e < edges_.size(); ++e) {
        const Edge& edge = edges_[e];
        if (!(edge.tau > 0.0)) throw invalid_argument("edge " + std::to_string(e) + " has non-positive transmissibility");
        if (!(edge.d_k > 0.0)) throw invalid_argument("edge " + std::to_string(e) + " has non-positive d(x_K, sigma)");
        if (edge.kind == EdgeKind::Interior) {
            if (!(edge.d_l > 0.0))
                throw invalid_argument("edge " + std::to_string(e) + " has non-positive d(x_L, sigma)");
            if (std::abs(edge.d_k + edge.d_l - edge.d_sigma) > 1e-12 * edge.d_sigma)
                throw invalid_argument("edge " + std::to_string(e) + ": d_K + d_L != d_sigma");
            const Point2& xk = cells_[edge.k].center;
            const Point2& xl = cells_[edge.l].center;
            if (std::abs(distance(xk, xl) - edge.d_sigma) > 1e-10 * edge.d_sigma)
                throw invalid_argument("edge " + std::to_string(e) + ": d_sigma differs from |x_K - x_L|");
            if (edge.geometry) {
                const double tx = edge.geometry->b.x - edge.geometry->a.x;
                const double ty = edge.geometry->b.y - edge.geometry->a.y;
                const double cosine = ((xl.x - xk.x) * tx + (xl.y - xk.y) * ty) / (std::hypot(tx, ty) * edge.d_sigma);
                if (std::abs(cosine) > 1e-10)
                    throw invalid_argument("edge " + std::to_string(e) + ": x_K x_L not orthogonal to sigma");
            }
        } else if (std::abs(edge.d_k - edge.d_sigma) > 1e-12 * edge.d_sigma) {
            throw invalid_argument("boundary edge " + std::to_string(e) + ": d_sigma must equal d(x_K, sigma)");
        }
    }
}

std::span<const std::size_t> Mesh::cell_edges(std::size_t k) const {
    return std::span<const std::size_t>(adjacency_).subspan(adjacency_offsets_[k],
                                                             adjacency_offsets_[k + 1] - adjacency_offsets_[k]);
}

double Mesh::dirichlet_measure() const {
    double m = 0.0;
    for (auto e : dirichlet_) m += edges_[e].measure;
    return m;
}

double Mesh::distance_to_edge(std::size_t edge, std::size_t cell) const {
    const Edge& ed = edges_[edge];
    return cell == ed.k ? ed.d_k : ed.d_l;
}

std::size_t Mesh::other_cell(std::size_t edge, std::size_t cell) const {
    const Edge& ed = edges_[edge];
    return cell == ed.k ? ed.l : ed.k;
}

double value_across(const Mesh& mesh, std::size_t edge, std::size_t cell, std::span<const double> cell_values,
                    std::span<const double> dirichlet_values) {
    const Edge& ed = mesh.edge(edge);
    switch (ed.kind) {
        case EdgeKind::Interior:
            return cell_values[mesh.other_cell(edge, cell)];
        case EdgeKind::Dirichlet:
            return dirichlet_values[mesh.dirichlet_slot(edge)];
        case EdgeKind::Neumann:
            break;
    }
    return cell_values[cell];
}

Mesh build_rectangular_mesh(int nx, int ny, const Rectangle& domain) {
    if (nx < 1 || ny < 1) throw invalid_argument("build_rectangular_mesh: nx and ny must be positive");
    if (!(domain.width() > 0.0) || !(domain.height() > 0.0))
        throw invalid_argument("build_rectangular_mesh: degenerate rectangle");

    const double hx = domain.width() / nx;
    const double hy = domain.height() / ny;
    auto xnode = [&](int i) { return i == nx ? domain.x_max : domain.x_min + i * hx; };
    auto ynode = [&](int j) { return j == ny ? domain.y_max : domain.y_min + j * hy; };
    auto id = [nx](int i, int j) { return static_cast<std::size_t>(j) * nx + i; };

    std::vector<Cell> cells;
    cells.reserve(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            Rectangle box{xnode(i), xnode(i + 1), ynode(j), ynode(j + 1)};
            cells.push_back({{0.5 * (box.x_min + box.x_max), 0.5 * (box.y_min + box.y_max)}, hx * hy, box});
        }
    }

    std::vector<Edge> edges;
    auto interior = [&](std::size_t k, std::size_t l, double measure, double d, EdgeGeometry g) {
        Edge e;
        e.kind = EdgeKind::Interior;
        e.k = k;
        e.l = l;
        e.measure = measure;
        e.d_sigma = d;
        e.d_k = 0.5 * d;
        e.d_l = 0.5 * d;
        e.geometry = g;
        edges.push_back(e);
    };
    auto boundary = [&](std::size_t k, double measure, double d, EdgeGeometry g) {
        Edge e;
        e.kind = EdgeKind::Neumann;
        e.k = k;
        e.measure = measure;
        e.d_sigma = d;
        e.d_k = d;
        e.geometry = g;
        edges.push_back(e);
    };

    // vertical edges (normal along x)
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i <= nx; ++i) {
            EdgeGeometry g{{xnode(i), ynode(j)}, {xnode(i), ynode(j + 1)}};
            if (i == 0)
                boundary(id(0, j), hy, 0.5 * hx, g);
            else if (i == nx)
                boundary(id(nx - 1, j), hy, 0.5 * hx, g);
            else
                interior(id(i - 1, j), id(i, j), hy, hx, g);
        }
    }
    // horizontal edges (normal along y)
    for (int j = 0; j <= ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            EdgeGeometry g{{xnode(i), ynode(j)}, {xnode(i + 1), ynode(j)}};
            if (j == 0)
                boundary(id(i, 0), hx, 0.5 * hy, g);
            else if (j == ny)
                boundary(id(i, ny - 1), hx, 0.5 * hy, g);
            else
                interior(id(i, j - 1), id(i, j), hx, hy, g);
        }
    }

    double total = 0.0;
    for (const auto& c : cells) total += c.measure;
    // Tensor cells have identical measure; the rectangle area and the cell sum agree to rounding.
    const double area = domain.width() * domain.height();
    if (std::abs(total - area) > 1e-12 * area) throw invalid_argument("build_rectangular_mesh: inconsistent measures");
    return Mesh(std::move(cells), std::move(edges), total);
}

std::function<bool(const Point2&)> on_face(Face face, const Rectangle& domain) {
    const double tol = 1e-9 * std::max(domain.width(), domain.height());
    switch (face) {
        case Face::XMin:
            return [=](const Point2& p) { return std::abs(p.x - domain.x_min) <= tol; };
        case Face::XMax:
            return [=](const Point2& p) { return std::abs(p.x - domain.x_max) <= tol; };
        case Face::YMin:
            return [=](const Point2& p) { return std::abs(p.y - domain.y_min) <= tol; };
        case Face::YMax:
            break;
    }
    return [=](const Point2& p) { return std::abs(p.y - domain.y_max) <= tol; };
}

Mesh boundary_partition(const Mesh& mesh, std::span<const BoundaryRule> rules) {
    for (const auto& rule : rules) {
        if (rule.kind == EdgeKind::Interior)
            throw Error(ErrorKind::Partition, "boundary rule '" + rule.name + "' cannot tag edges as interior");
    }
    std::vector<Cell> cells(mesh.cells().begin(), mesh.cells().end());
    std::vector<Edge> edges(mesh.edges().begin(), mesh.edges().end());
    for (std::size_t e = 0; e < edges.size(); ++e) {
        Edge& edge = edges[e];
        if (!edge.is_boundary()) continue;
        if (!edge.geometry)
            throw Error(ErrorKind::Partition, "boundary edge " + std::to_string(e) + " has no geometry to match against");
        const Point2 mid = edge.geometry->midpoint();
        int matched = -1;
        for (std::size_t r = 0; r < rules.size(); ++r) {
            if (!rules[r].matches(mid)) continue;
            if (matched >= 0)
                throw Error(ErrorKind::Partition, "boundary edge " + std::to_string(e) + " matched by both '" +
                                                      rules[matched].name + "' and '" + rules[r].name + "'");
            matched = static_cast<int>(r);
        }
        if (matched < 0)
            throw Error(ErrorKind::Partition, "boundary edge " + std::to_string(e) + " at (" + std::to_string(mid.x) +
                                                  ", " + std::to_string(mid.y) + ") matched by no rule");
        edge.kind = rules[matched].kind;
        edge.segment = matched;
    }
    Mesh result(std::move(cells), std::move(edges), mesh.domain_measure());
    if (!(result.dirichlet_measure() > 0.0))
        throw Error(ErrorKind::MeasureZeroDirichlet, "boundary partition leaves no Dirichlet edges");
    return result;
}

MeshRegularity regularity_constants(const Mesh& mesh) {
    MeshRegularity reg{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    for (const auto& edge : mesh.edges()) {
        reg.c0 = std::min(reg.c0, edge.tau);
        reg.xi = std::min(reg.xi, edge.d_k / edge.d_sigma);
        if (edge.kind == EdgeKind::Interior) reg.xi = std::min(reg.xi, edge.d_l / edge.d_sigma);
    }
    return reg;
}

}  // namespace ddfv
