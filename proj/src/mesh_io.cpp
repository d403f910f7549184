#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ddfv/errors.hpp"
#include "ddfv/format.hpp"
#include "ddfv/mesh.hpp"

namespace ddfv {

namespace {

char kind_code(EdgeKind kind) {
    switch (kind) {
        case EdgeKind::Interior: return 'I';
        case EdgeKind::Dirichlet: return 'D';
        case EdgeKind::Neumann: break;
    }
    return 'N';
}

std::vector<std::string> split_ws(const std::string& line) {
    std::istringstream is(line);
    std::vector<std::string> out;
    for (std::string tok; is >> tok;) out.push_back(tok);
    return out;
}

Error parse_error(std::size_t line_no, const std::string& what) {
    return {ErrorKind::Parse, "mesh line " + std::to_string(line_no) + ": " + what};
}

}  // namespace

void write_mesh(std::ostream& out, const Mesh& mesh) {
    out << "FVMESH 1\n";
    for (std::size_t i = 0; i < mesh.num_cells(); ++i) {
        const Cell& c = mesh.cell(i);
        out << "cell " << i << ' ' << format_double(c.center.x) << ' ' << format_double(c.center.y) << ' '
            << format_double(c.measure) << '\n';
    }
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        const Edge& ed = mesh.edge(e);
        out << "edge " << e << ' ' << kind_code(ed.kind) << ' ' << ed.k;
        if (ed.kind == EdgeKind::Interior) out << ' ' << ed.l;
        out << ' ' << format_double(ed.measure) << ' ' << format_double(ed.d_sigma) << ' ' << format_double(ed.d_k);
        if (ed.kind == EdgeKind::Interior) out << ' ' << format_double(ed.d_l);
        out << '\n';
    }
}

Mesh read_mesh(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    std::map<long long, Cell> cells;
    std::map<long long, Edge> edges;
    while (std::getline(in, line)) {
        ++line_no;
        auto view = trim(line);
        if (view.empty() || view.front() == '#') continue;
        if (!header) {
            if (view != "FVMESH 1") throw parse_error(line_no, "expected header 'FVMESH 1'");
            header = true;
            continue;
        }
        const auto tok = split_ws(std::string(view));
        if (tok[0] == "cell") {
            if (tok.size() != 5) throw parse_error(line_no, "cell record needs 4 fields");
            Cell c;
            c.center = {parse_double(tok[2]), parse_double(tok[3])};
            c.measure = parse_double(tok[4]);
            if (!cells.emplace(parse_integer(tok[1]), c).second) throw parse_error(line_no, "duplicate cell id");
        } else if (tok[0] == "edge") {
            if (tok.size() < 3 || tok[2].size() != 1) throw parse_error(line_no, "malformed edge record");
            Edge ed;
            const char code = tok[2][0];
            const bool interior = code == 'I';
            if (code == 'I')
                ed.kind = EdgeKind::Interior;
            else if (code == 'D')
                ed.kind = EdgeKind::Dirichlet;
            else if (code == 'N')
                ed.kind = EdgeKind::Neumann;
            else
                throw parse_error(line_no, "edge kind must be I, D or N");
            const std::size_t expected = interior ? 9 : 7;
            if (tok.size() != expected) throw parse_error(line_no, "edge record has wrong field count");
            std::size_t pos = 3;
            ed.k = static_cast<std::size_t>(parse_integer(tok[pos++]));
            if (interior) ed.l = static_cast<std::size_t>(parse_integer(tok[pos++]));
            ed.measure = parse_double(tok[pos++]);
            ed.d_sigma = parse_double(tok[pos++]);
            ed.d_k = parse_double(tok[pos++]);
            if (interior) ed.d_l = parse_double(tok[pos++]);
            if (ed.kind == EdgeKind::Dirichlet) ed.segment = 0;
            if (!edges.emplace(parse_integer(tok[1]), ed).second) throw parse_error(line_no, "duplicate edge id");
        } else {
            throw parse_error(line_no, "unknown record '" + tok[0] + "'");
        }
    }
    if (!header) throw Error(ErrorKind::Parse, "mesh: missing 'FVMESH 1' header");

    auto dense = [](auto& table, const char* what) {
        using Value = typename std::decay_t<decltype(table)>::mapped_type;
        std::vector<Value> out;
        out.reserve(table.size());
        long long expected = 0;
        for (auto& [id, value] : table) {
            if (id != expected++) throw Error(ErrorKind::Parse, std::string("mesh: ") + what + " ids must be 0..n-1");
            out.push_back(value);
        }
        return out;
    };
    auto cell_vec = dense(cells, "cell");
    auto edge_vec = dense(edges, "edge");
    double total = 0.0;
    for (const auto& c : cell_vec) total += c.measure;
    return Mesh(std::move(cell_vec), std::move(edge_vec), total);
}

}  // namespace ddfv
