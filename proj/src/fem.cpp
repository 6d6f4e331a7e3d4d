#include "qgs/fem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "qgs/error.hpp"

namespace qgs {
namespace {

using Triplet = Eigen::Triplet<double>;

void sort_unique(std::vector<VertexIndex>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

std::vector<VertexIndex> selection_vertices(const MetricGraph& graph, std::span<const EdgeIndex> edges) {
  std::vector<VertexIndex> out;
  for (EdgeIndex e : edges) {
    out.push_back(graph.edge(e).from);
    out.push_back(graph.edge(e).to);
  }
  sort_unique(out);
  return out;
}

// Scatter target of one element-matrix entry.
struct Scatter {
  std::vector<Triplet> free;
  std::vector<Triplet> coupling;

  void add(const GraphMesh& mesh, std::size_t a, std::size_t b, double value) {
    const auto da = mesh.dof(a);
    const auto db = mesh.dof(b);
    if (da != GraphMesh::kConstrained && db != GraphMesh::kConstrained) {
      free.emplace_back(da, db, value);
      if (a != b) free.emplace_back(db, da, value);
    } else if (da != GraphMesh::kConstrained) {
      coupling.emplace_back(da, mesh.constrained_index(b), value);
    } else if (db != GraphMesh::kConstrained) {
      coupling.emplace_back(db, mesh.constrained_index(a), value);
    }
  }
};

SparseMatrix to_matrix(Eigen::Index rows, Eigen::Index cols, const std::vector<Triplet>& triplets) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return m;
}

}  // namespace

std::string to_string(Domain domain) {
  switch (domain) {
    case Domain::whole_graph:
      return "whole graph";
    case Domain::subgraph:
      return "subgraph";
    case Domain::complement:
      return "complement";
  }
  return "?";
}

std::vector<VertexIndex> DirichletTruncationSpec::vertices() const {
  std::vector<VertexIndex> out = inner;
  out.insert(out.end(), outer.begin(), outer.end());
  out.insert(out.end(), boundary.begin(), boundary.end());
  sort_unique(out);
  return out;
}

DirichletTruncationSpec whole_graph_truncation(const MetricGraph& graph, bool dirichlet_boundary) {
  DirichletTruncationSpec spec;
  if (dirichlet_boundary) spec.boundary = graph.boundary();
  return spec;
}

DirichletTruncationSpec level_truncation(const MetricGraph& graph, const Exhaustion& exhaustion,
                                         std::size_t n, bool dirichlet_boundary) {
  DirichletTruncationSpec spec;
  spec.outer = exhaustion.interface(n);
  if (dirichlet_boundary) {
    for (VertexIndex v : selection_vertices(graph, exhaustion.level(n))) {
      if (graph.is_boundary(v)) spec.boundary.push_back(v);
    }
  }
  return spec;
}

DirichletTruncationSpec annulus_truncation(const MetricGraph& graph, const Exhaustion& exhaustion,
                                           std::size_t inner, std::size_t outer, bool dirichlet_boundary) {
  if (outer <= inner) throw ValidationError("annulus needs outer level > inner level");
  DirichletTruncationSpec spec;
  const std::vector<EdgeIndex> edges = exhaustion.annulus(inner, outer);
  for (VertexIndex v : selection_vertices(graph, edges)) {
    if (exhaustion.vertex_in_level(v, inner)) {
      spec.inner.push_back(v);
      continue;
    }
    bool cut = false;
    for (EdgeIndex e : graph.incident(v)) cut = cut || !exhaustion.edge_in_level(e, outer);
    if (cut) spec.outer.push_back(v);
    if (dirichlet_boundary && graph.is_boundary(v)) spec.boundary.push_back(v);
  }
  return spec;
}

std::optional<std::size_t> GraphMesh::local_edge(EdgeIndex e) const {
  auto it = std::lower_bound(edges_.begin(), edges_.end(), e);
  if (it == edges_.end() || *it != e) return std::nullopt;
  return static_cast<std::size_t>(it - edges_.begin());
}

std::optional<std::size_t> GraphMesh::vertex_node(VertexIndex v) const {
  if (v >= vertex_nodes_.size() || vertex_nodes_[v] < 0) return std::nullopt;
  return static_cast<std::size_t>(vertex_nodes_[v]);
}

double GraphMesh::max_cell_size() const {
  double out = 0.0;
  for (const auto& xs : offsets_) {
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) out = std::max(out, xs[k + 1] - xs[k]);
  }
  return out;
}

Vector GraphMesh::expand(const Vector& free, double fill) const {
  if (static_cast<std::size_t>(free.size()) != dof_count()) {
    throw ValidationError("free vector size does not match the DOF count");
  }
  Vector nodal = Vector::Constant(static_cast<Eigen::Index>(node_count()), fill);
  for (std::size_t d = 0; d < dof_count(); ++d) nodal[static_cast<Eigen::Index>(node_of_dof_[d])] = free[d];
  return nodal;
}

Vector GraphMesh::restrict_to_free(const Vector& nodal) const {
  if (static_cast<std::size_t>(nodal.size()) != node_count()) {
    throw ValidationError("nodal vector size does not match the node count");
  }
  Vector free(static_cast<Eigen::Index>(dof_count()));
  for (std::size_t d = 0; d < dof_count(); ++d) free[d] = nodal[static_cast<Eigen::Index>(node_of_dof_[d])];
  return free;
}

GraphMesh build_mesh(const MetricGraph& graph, std::span<const EdgeIndex> selection, double h,
                     const DirichletTruncationSpec& constraints) {
  if (!(h > 0.0)) throw ValidationError("mesh size h must be positive");
  if (selection.empty()) throw ValidationError("mesh selection is empty");

  GraphMesh mesh;
  mesh.graph_ = &graph;
  mesh.edges_.assign(selection.begin(), selection.end());
  std::sort(mesh.edges_.begin(), mesh.edges_.end());
  mesh.edges_.erase(std::unique(mesh.edges_.begin(), mesh.edges_.end()), mesh.edges_.end());
  for (EdgeIndex e : mesh.edges_) {
    if (e >= graph.edge_count()) throw ValidationError("mesh selection names an unknown edge");
  }
  mesh.vertex_nodes_.assign(graph.vertex_count(), -1);

  std::set<VertexIndex> constrained_vertices;
  for (VertexIndex v : constraints.vertices()) constrained_vertices.insert(v);

  auto vertex_node = [&](VertexIndex v, EdgeIndex e, double offset) {
    if (mesh.vertex_nodes_[v] < 0) {
      mesh.vertex_nodes_[v] = static_cast<std::ptrdiff_t>(mesh.nodes_.size());
      mesh.nodes_.push_back(MeshNode{e, offset, v, constrained_vertices.count(v) > 0});
    }
    return static_cast<std::size_t>(mesh.vertex_nodes_[v]);
  };

  for (EdgeIndex e : mesh.edges_) {
    const Edge& edge = graph.edge(e);
    const auto cells = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(edge.length / h * (1.0 - 1e-12))));
    std::vector<double> xs;
    for (std::size_t k = 0; k <= cells; ++k) xs.push_back(k == cells ? edge.length : edge.length * k / cells);

    // Cut points: reuse a node within rounding distance, otherwise insert one.
    const double snap = 1e-12 * edge.length;
    std::vector<double> cuts;
    for (const Point& p : constraints.cut_points) {
      if (p.edge != e) continue;
      if (p.offset < 0.0 || p.offset > edge.length) throw ValidationError("cut point lies off its edge");
      auto it = std::lower_bound(xs.begin(), xs.end(), p.offset);
      double snapped = p.offset;
      if (it != xs.end() && std::abs(*it - p.offset) <= snap) {
        snapped = *it;
      } else if (it != xs.begin() && std::abs(*(it - 1) - p.offset) <= snap) {
        snapped = *(it - 1);
      } else {
        xs.insert(it, p.offset);
      }
      cuts.push_back(snapped);
    }

    std::vector<std::size_t> ids;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const bool is_cut = std::find(cuts.begin(), cuts.end(), xs[k]) != cuts.end();
      if (k == 0 || k + 1 == xs.size()) {
        const VertexIndex v = k == 0 ? edge.from : edge.to;
        const std::size_t id = vertex_node(v, e, xs[k]);
        if (is_cut) mesh.nodes_[id].constrained = true;
        ids.push_back(id);
      } else {
        ids.push_back(mesh.nodes_.size());
        mesh.nodes_.push_back(MeshNode{e, xs[k], std::nullopt, is_cut});
      }
    }
    mesh.offsets_.push_back(std::move(xs));
    mesh.edge_nodes_.push_back(std::move(ids));
  }

  mesh.dof_of_node_.assign(mesh.nodes_.size(), GraphMesh::kConstrained);
  mesh.constrained_index_.assign(mesh.nodes_.size(), GraphMesh::kConstrained);
  for (std::size_t i = 0; i < mesh.nodes_.size(); ++i) {
    if (mesh.nodes_[i].constrained) {
      mesh.constrained_index_[i] = static_cast<std::ptrdiff_t>(mesh.constrained_nodes_.size());
      mesh.constrained_nodes_.push_back(i);
    } else {
      mesh.dof_of_node_[i] = static_cast<std::ptrdiff_t>(mesh.node_of_dof_.size());
      mesh.node_of_dof_.push_back(i);
    }
  }
  return mesh;
}

SparseMatrix AssembledForms::stiffness() const {
  SparseMatrix k = K_p + K_q;
  k.makeCompressed();
  return k;
}

AssembledForms assemble(std::shared_ptr<const GraphMesh> mesh, const CoefficientField& field, Domain domain) {
  if (!mesh) throw ValidationError("assemble: no mesh");
  const MetricGraph& graph = mesh->graph();
  Scatter kp, kq, mass;

  for (std::size_t local = 0; local < mesh->edges().size(); ++local) {
    const EdgeIndex e = mesh->edges()[local];
    const EdgeField coeff = field.on(graph, e);
    const auto xs = mesh->offsets(local);
    const auto ids = mesh->edge_nodes(local);
    const std::string& edge_id = graph.edge(e).id;

    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
      const double a = xs[k];
      const double b = xs[k + 1];
      const double width = b - a;
      // Linear shape functions on [a, b].
      auto left = [a, width](double x) { return (a + width - x) / width; };
      auto right = [a, width](double x) { return (x - a) / width; };

      const double p_int = coeff.integrate(a, b, [&](double x, const CoefficientSample& c) {
        if (!(c.p > 0.0)) {
          throw HypothesisError("p must be positive; p = " + std::to_string(c.p) + " on edge '" + edge_id +
                                "' at offset " + std::to_string(x));
        }
        return c.p;
      });
      auto weighted = [&](auto coefficient, auto phi_i, auto phi_j) {
        return coeff.integrate(a, b, [&](double x, const CoefficientSample& c) {
          return coefficient(x, c) * phi_i(x) * phi_j(x);
        });
      };
      auto q_of = [](double, const CoefficientSample& c) { return c.q; };
      auto w_of = [&](double x, const CoefficientSample& c) {
        if (!(c.w > 0.0)) {
          throw HypothesisError("w must be positive; w = " + std::to_string(c.w) + " on edge '" + edge_id +
                                "' at offset " + std::to_string(x));
        }
        return c.w;
      };

      const double stiff = p_int / (width * width);
      const double q00 = weighted(q_of, left, left);
      const double q01 = weighted(q_of, left, right);
      const double q11 = weighted(q_of, right, right);
      const double m00 = weighted(w_of, left, left);
      const double m01 = weighted(w_of, left, right);
      const double m11 = weighted(w_of, right, right);

      const std::size_t i = ids[k];
      const std::size_t j = ids[k + 1];
      kp.add(*mesh, i, i, stiff);
      kp.add(*mesh, i, j, -stiff);
      kp.add(*mesh, j, j, stiff);
      kq.add(*mesh, i, i, q00);
      kq.add(*mesh, i, j, q01);
      kq.add(*mesh, j, j, q11);
      mass.add(*mesh, i, i, m00);
      mass.add(*mesh, i, j, m01);
      mass.add(*mesh, j, j, m11);
    }
  }

  const auto n = static_cast<Eigen::Index>(mesh->dof_count());
  const auto c = static_cast<Eigen::Index>(mesh->constrained_nodes().size());
  AssembledForms forms;
  forms.domain = domain;
  forms.K_p = to_matrix(n, n, kp.free);
  forms.K_q = to_matrix(n, n, kq.free);
  forms.M = to_matrix(n, n, mass.free);
  forms.K_p_coupling = to_matrix(n, c, kp.coupling);
  forms.K_q_coupling = to_matrix(n, c, kq.coupling);
  forms.M_coupling = to_matrix(n, c, mass.coupling);
  forms.mesh = std::move(mesh);
  return forms;
}

double kirchhoff_residual(const GraphMesh& mesh, const CoefficientField& field, const Vector& nodal,
                          VertexIndex v) {
  const auto node = mesh.vertex_node(v);
  if (!node) throw ValidationError("vertex '" + mesh.graph().vertex_name(v) + "' is not in the mesh");
  if (mesh.node(*node).constrained) {
    throw ValidationError("vertex '" + mesh.graph().vertex_name(v) + "' is constrained");
  }
  if (static_cast<std::size_t>(nodal.size()) != mesh.node_count()) {
    throw ValidationError("nodal vector size does not match the node count");
  }
  const Vector& f = nodal;
  const double fv = f[static_cast<Eigen::Index>(*node)];
  double flux = 0.0;
  for (EdgeIndex e : mesh.graph().incident(v)) {
    const auto local = mesh.local_edge(e);
    if (!local) continue;
    const auto xs = mesh.offsets(*local);
    const auto ids = mesh.edge_nodes(*local);
    const EdgeField coeff = field.on(mesh.graph(), e);
    const bool at_start = ids.front() == *node;
    const std::size_t k = at_start ? 0 : xs.size() - 2;
    const double width = xs[k + 1] - xs[k];
    const std::size_t neighbour = at_start ? ids[1] : ids[ids.size() - 2];
    const double p_avg = coeff.integral(Integrand::p, xs[k], xs[k + 1]) / width;
    flux += p_avg * (f[static_cast<Eigen::Index>(neighbour)] - fv) / width;
  }
  return std::abs(flux);
}

void write_matrix_market(std::ostream& out, const SparseMatrix& matrix, bool symmetric,
                         const std::string& comment) {
  std::vector<std::tuple<Eigen::Index, Eigen::Index, double>> entries;
  for (Eigen::Index col = 0; col < matrix.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(matrix, col); it; ++it) {
      if (symmetric && it.row() < it.col()) continue;
      entries.emplace_back(it.row(), it.col(), it.value());
    }
  }
  out << "%%MatrixMarket matrix coordinate real " << (symmetric ? "symmetric" : "general") << "\n";
  if (!comment.empty()) {
    std::istringstream lines(comment);
    for (std::string line; std::getline(lines, line);) out << "% " << line << "\n";
  }
  out << matrix.rows() << " " << matrix.cols() << " " << entries.size() << "\n";
  char buffer[64];
  for (const auto& [row, col, value] : entries) {
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    out << row + 1 << " " << col + 1 << " " << buffer << "\n";
  }
}

SparseMatrix read_matrix_market(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("Matrix Market: empty input", 1);
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket" || object != "matrix" || format != "coordinate" || field != "real") {
    throw ParseError("Matrix Market: unsupported banner '" + line + "'", 1);
  }
  if (symmetry != "symmetric" && symmetry != "general") {
    throw ParseError("Matrix Market: unsupported symmetry '" + symmetry + "'", 1);
  }
  std::size_t lineno = 1;
  do {
    if (!std::getline(in, line)) throw ParseError("Matrix Market: missing size line", lineno);
    ++lineno;
  } while (!line.empty() && line[0] == '%');
  std::istringstream size_line(line);
  Eigen::Index rows = 0, cols = 0;
  std::size_t count = 0;
  if (!(size_line >> rows >> cols >> count)) throw ParseError("Matrix Market: bad size line", lineno);

  std::vector<Triplet> triplets;
  for (std::size_t k = 0; k < count; ++k) {
    ++lineno;
    if (!std::getline(in, line)) throw ParseError("Matrix Market: truncated entries", lineno);
    std::istringstream entry(line);
    Eigen::Index r = 0, c = 0;
    double v = 0.0;
    if (!(entry >> r >> c >> v) || r < 1 || c < 1 || r > rows || c > cols) {
      throw ParseError("Matrix Market: bad entry on line " + std::to_string(lineno), lineno);
    }
    triplets.emplace_back(r - 1, c - 1, v);
    if (symmetry == "symmetric" && r != c) triplets.emplace_back(c - 1, r - 1, v);
  }
  return to_matrix(rows, cols, triplets);
}

}  // namespace qgs
