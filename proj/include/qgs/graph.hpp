#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace qgs {

using VertexIndex = std::size_t;
using EdgeIndex = std::size_t;

// An edge as written in a graph document: endpoints by vertex name.
struct SourceEdge {
  std::string id;
  std::string from;
  std::string to;
  double length = 0.0;

  friend bool operator==(const SourceEdge&, const SourceEdge&) = default;
};

// A normalized edge. Each edge is the interval [0, length] oriented from
// `from` (o(e)) to `to` (t(e)). Halves of a split loop keep the id of the
// document edge in `source_id` and their start position in `source_offset`.
struct Edge {
  std::string id;
  VertexIndex from = 0;
  VertexIndex to = 0;
  double length = 0.0;
  std::string source_id;
  double source_offset = 0.0;
};

// A point on the graph: arclength offset from o(edge).
struct Point {
  EdgeIndex edge = 0;
  double offset = 0.0;
};

/// A finite, connected, locally finite metric graph.
///
/// Loops are split at load time by an artificial midpoint vertex of degree 2,
/// so every edge has two distinct endpoints. Parallel edges are kept: all
/// downstream indexing is per edge, never per vertex pair.
class MetricGraph {
 public:
  MetricGraph(std::vector<std::string> vertices, std::vector<SourceEdge> edges,
              std::optional<std::string> root = std::nullopt,
              std::vector<std::string> host_boundary = {});

  /// Document schema:
  ///   {"vertices": [id...], "edges": [{"id","from","to","length"}...],
  ///    "root": id, "host_boundary": [id...]}
  /// "root" and "host_boundary" are optional; any other key is rejected.
  static MetricGraph from_json(const nlohmann::json& doc);
  static MetricGraph parse(std::string_view text);
  static MetricGraph load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  std::size_t vertex_count() const { return names_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  std::span<const Edge> edges() const { return edges_; }
  const Edge& edge(EdgeIndex e) const { return edges_.at(e); }

  const std::string& vertex_name(VertexIndex v) const { return names_.at(v); }
  std::optional<VertexIndex> find_vertex(std::string_view name) const;
  VertexIndex vertex(std::string_view name) const;
  std::optional<EdgeIndex> find_edge(std::string_view id) const;

  std::span<const EdgeIndex> incident(VertexIndex v) const { return incident_.at(v); }
  std::size_t degree(VertexIndex v) const { return incident_.at(v).size(); }
  VertexIndex opposite(EdgeIndex e, VertexIndex v) const;

  /// ∂Γ: vertices of degree one.
  std::vector<VertexIndex> boundary() const;
  bool is_boundary(VertexIndex v) const { return degree(v) == 1; }
  bool is_artificial(VertexIndex v) const { return artificial_.at(v); }

  /// Vertices where a finite host graph truncates an infinite one.
  std::span<const VertexIndex> host_boundary() const { return host_boundary_; }
  bool is_host_boundary(VertexIndex v) const;

  std::optional<VertexIndex> root() const { return root_; }

  /// d* = sup |e| and d_* = inf |e|.
  double max_edge_length() const;
  double min_edge_length() const;

  /// Shortest-path distances from `source` to every vertex.
  std::vector<double> distances_from(VertexIndex source) const;

  /// The point at `offset` along document edge `source_id`, resolved to the
  /// normalized edge that contains it.
  Point point_on(std::string_view source_id, double offset) const;
  Point at_vertex(VertexIndex v) const;

  /// ρ(x, y), the length of the shortest path between two points.
  double distance(const Point& x, const Point& y) const;

  /// The document edge list, recovered by merging split loop halves.
  std::vector<SourceEdge> source_edges() const;
  std::vector<std::string> source_vertices() const;

 private:
  void check_point(const Point& p) const;

  std::vector<std::string> names_;
  std::vector<bool> artificial_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeIndex>> incident_;
  std::unordered_map<std::string, VertexIndex> vertex_lookup_;
  std::unordered_map<std::string, EdgeIndex> edge_lookup_;
  std::optional<VertexIndex> root_;
  std::vector<VertexIndex> host_boundary_;
};

/// The exhaustion Γ_0 ⊆ Γ_1 ⊆ ... around a fixed root vertex o.
///
/// Γ_n is the union of edges whose endpoints both lie within distance n of o.
/// The halo of Γ_n holds the edges with exactly one endpoint in Γ_n, so that
/// Γ̃_n = Γ_n ∪ halo(n).
class Exhaustion {
 public:
  Exhaustion(const MetricGraph& graph, VertexIndex root, std::size_t max_level);

  VertexIndex root() const { return root_; }
  std::size_t max_level() const { return levels_.size() - 1; }
  double root_distance(VertexIndex v) const { return distance_.at(v); }

  bool vertex_in_level(VertexIndex v, std::size_t n) const;
  bool edge_in_level(EdgeIndex e, std::size_t n) const;

  std::span<const EdgeIndex> level(std::size_t n) const { return levels_.at(n); }
  std::span<const EdgeIndex> halo(std::size_t n) const { return haloes_.at(n); }
  std::vector<EdgeIndex> extended(std::size_t n) const;
  /// Edges of Γ_outer \ Γ_inner.
  std::vector<EdgeIndex> annulus(std::size_t inner, std::size_t outer) const;

  /// Vertices of Γ_n incident to some edge outside Γ_n.
  std::vector<VertexIndex> interface(std::size_t n) const;

  /// Interior edge positions where the metric ball Γ(o; radius) ends.
  std::vector<Point> ball_cut_points(double radius) const;

 private:
  const MetricGraph* graph_;
  VertexIndex root_;
  std::vector<double> distance_;
  std::vector<std::vector<EdgeIndex>> levels_;
  std::vector<std::vector<EdgeIndex>> haloes_;
};

Exhaustion build_exhaustion(const MetricGraph& graph, VertexIndex root, std::size_t max_level);

// Built-in families. All edges share `length`; vertex names are v0, v1, ...
// unless stated. Each family sets a root.
namespace families {

/// v0 - v1 - ... - v<edges>, root v0, far end marked as host boundary.
MetricGraph path(std::size_t edges, double length = 1.0);
/// Center "c" joined to leaves x1..x<arms>, root c.
MetricGraph star(std::size_t arms, double length = 1.0);
/// Complete binary tree with `depth` levels of edges, root v0 at the top.
MetricGraph binary_tree(std::size_t depth, double length = 1.0);
/// Two rails of `rungs` vertices each, joined by rungs; root at a corner.
MetricGraph ladder(std::size_t rungs, double length = 1.0);
MetricGraph cycle(std::size_t edges, double length = 1.0);

}  // namespace families

}  // namespace qgs
