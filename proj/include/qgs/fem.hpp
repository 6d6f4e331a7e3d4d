#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "qgs/coeff.hpp"
#include "qgs/graph.hpp"

namespace qgs {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

enum class Domain { whole_graph, subgraph, complement };

std::string to_string(Domain domain);

/// Dirichlet constraints of a truncated problem.
///
/// For an annulus Γ_N \ Γ_n, `inner` holds the vertices shared with Γ_n and
/// `outer` the vertices where the host graph is cut at level N. For a ball
/// problem on Γ_n only `outer` is used. `boundary` holds the ∂Γ vertices that
/// carry a Dirichlet condition.
struct DirichletTruncationSpec {
  std::vector<VertexIndex> inner;
  std::vector<VertexIndex> outer;
  std::vector<VertexIndex> boundary;
  std::vector<Point> cut_points;

  std::vector<VertexIndex> vertices() const;
};

/// Vertices of the whole graph with Dirichlet at ∂Γ when requested.
DirichletTruncationSpec whole_graph_truncation(const MetricGraph& graph, bool dirichlet_boundary);
/// Γ_n with Dirichlet where it meets the rest of the graph.
DirichletTruncationSpec level_truncation(const MetricGraph& graph, const Exhaustion& exhaustion,
                                         std::size_t n, bool dirichlet_boundary);
/// Γ_N \ Γ_n with Dirichlet on both interfaces.
DirichletTruncationSpec annulus_truncation(const MetricGraph& graph, const Exhaustion& exhaustion,
                                           std::size_t inner, std::size_t outer, bool dirichlet_boundary);

struct MeshNode {
  EdgeIndex edge = 0;      // an edge carrying the node
  double offset = 0.0;     // local coordinate on that edge
  std::optional<VertexIndex> vertex;
  bool constrained = false;
};

/// Piecewise-linear mesh on a selection of edges. Edge-end nodes at a shared
/// vertex are one node, which enforces continuity; constrained nodes are
/// eliminated from the degree-of-freedom numbering.
class GraphMesh {
 public:
  static constexpr std::ptrdiff_t kConstrained = -1;

  const MetricGraph& graph() const { return *graph_; }
  std::span<const EdgeIndex> edges() const { return edges_; }
  /// Local index of a graph edge within the selection.
  std::optional<std::size_t> local_edge(EdgeIndex e) const;

  /// Node offsets and node indices along the i-th selected edge, from o(e).
  std::span<const double> offsets(std::size_t local) const { return offsets_.at(local); }
  std::span<const std::size_t> edge_nodes(std::size_t local) const { return edge_nodes_.at(local); }

  std::size_t node_count() const { return nodes_.size(); }
  const MeshNode& node(std::size_t i) const { return nodes_.at(i); }
  std::optional<std::size_t> vertex_node(VertexIndex v) const;

  std::size_t dof_count() const { return node_of_dof_.size(); }
  std::ptrdiff_t dof(std::size_t node) const { return dof_of_node_.at(node); }
  std::size_t node_of_dof(std::size_t dof) const { return node_of_dof_.at(dof); }
  std::span<const std::size_t> constrained_nodes() const { return constrained_nodes_; }
  /// Position of a constrained node within constrained_nodes().
  std::ptrdiff_t constrained_index(std::size_t node) const { return constrained_index_.at(node); }

  double max_cell_size() const;

  /// Nodal vector from free DOF values; constrained nodes take `fill`.
  Vector expand(const Vector& free, double fill = 0.0) const;
  Vector restrict_to_free(const Vector& nodal) const;

 private:
  friend GraphMesh build_mesh(const MetricGraph&, std::span<const EdgeIndex>, double,
                              const DirichletTruncationSpec&);

  const MetricGraph* graph_ = nullptr;
  std::vector<EdgeIndex> edges_;
  std::vector<std::vector<double>> offsets_;
  std::vector<std::vector<std::size_t>> edge_nodes_;
  std::vector<MeshNode> nodes_;
  std::vector<std::ptrdiff_t> vertex_nodes_;
  std::vector<std::ptrdiff_t> dof_of_node_;
  std::vector<std::size_t> node_of_dof_;
  std::vector<std::size_t> constrained_nodes_;
  std::vector<std::ptrdiff_t> constrained_index_;
};

/// Subdivides every selected edge into ⌈|e|/h⌉ equal cells, inserts a node at
/// each cut point on a selected edge, and constrains the nodes named by
/// `constraints`. The graph must outlive the mesh.
GraphMesh build_mesh(const MetricGraph& graph, std::span<const EdgeIndex> selection, double h,
                     const DirichletTruncationSpec& constraints = {});

/// Sparse symmetric pencil blocks of a quadratic form on a mesh.
///
/// K_p, K_q, M act on free DOFs. The *_coupling blocks map constrained-node
/// values (ordered as GraphMesh::constrained_nodes) into free rows; they carry
/// boundary data for lifted solves.
struct AssembledForms {
  std::shared_ptr<const GraphMesh> mesh;
  Domain domain = Domain::whole_graph;
  SparseMatrix K_p;
  SparseMatrix K_q;
  SparseMatrix M;
  SparseMatrix K_p_coupling;
  SparseMatrix K_q_coupling;
  SparseMatrix M_coupling;

  /// K_p + K_q.
  SparseMatrix stiffness() const;
};

/// Linear-element assembly of ∫ p f′g′, ∫ q f g and ∫ w f g. Raises
/// HypothesisError if p or w is not positive at a quadrature sample.
AssembledForms assemble(std::shared_ptr<const GraphMesh> mesh, const CoefficientField& field,
                        Domain domain = Domain::whole_graph);

/// |Σ_{e ∈ E_v} (p f′)_e(v)| with outward one-sided difference quotients and
/// the cell average of p. `nodal` holds values on every mesh node.
double kirchhoff_residual(const GraphMesh& mesh, const CoefficientField& field, const Vector& nodal,
                          VertexIndex v);

/// Matrix Market coordinate format. Symmetric matrices are written as their
/// lower triangle with the "symmetric" qualifier.
void write_matrix_market(std::ostream& out, const SparseMatrix& matrix, bool symmetric = true,
                         const std::string& comment = {});
SparseMatrix read_matrix_market(std::istream& in);

}  // namespace qgs
