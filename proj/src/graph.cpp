#include "qgs/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <sstream>

#include "qgs/error.hpp"

namespace qgs {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Relative slack for "distance at most n" comparisons on summed lengths.
constexpr double kLevelSlack = 1e-9;

std::string id_string(const nlohmann::json& value, const std::string& where) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return value.dump();
  throw ParseError(where + ": id must be a string or an integer", 0);
}

std::string midpoint_name(const std::string& edge_id) { return edge_id + "#mid"; }

}  // namespace

MetricGraph::MetricGraph(std::vector<std::string> vertices, std::vector<SourceEdge> edges,
                         std::optional<std::string> root,
                         std::vector<std::string> host_boundary) {
  auto add_vertex = [this](const std::string& name, bool artificial) {
    if (!vertex_lookup_.emplace(name, names_.size()).second) {
      throw ValidationError("duplicate vertex id '" + name + "'");
    }
    names_.push_back(name);
    artificial_.push_back(artificial);
    incident_.emplace_back();
  };
  for (const auto& name : vertices) add_vertex(name, false);
  if (names_.empty()) throw ValidationError("graph has no vertices");
  if (edges.empty()) throw ValidationError("graph has no edges");

  auto add_edge = [this](Edge e) {
    if (!edge_lookup_.emplace(e.id, edges_.size()).second) {
      throw ValidationError("duplicate edge id '" + e.id + "'");
    }
    incident_[e.from].push_back(edges_.size());
    incident_[e.to].push_back(edges_.size());
    edges_.push_back(std::move(e));
  };

  for (const auto& se : edges) {
    if (!(se.length > 0.0) || !std::isfinite(se.length)) {
      std::ostringstream msg;
      msg << "edge '" << se.id << "' has nonpositive or nonfinite length " << se.length;
      throw ValidationError(msg.str());
    }
    const VertexIndex from = vertex(se.from);
    const VertexIndex to = vertex(se.to);
    if (from != to) {
      add_edge(Edge{se.id, from, to, se.length, se.id, 0.0});
      continue;
    }
    // Loop: split at its midpoint.
    const std::string mid = midpoint_name(se.id);
    add_vertex(mid, true);
    const VertexIndex m = names_.size() - 1;
    const double half = 0.5 * se.length;
    add_edge(Edge{se.id + "#0", from, m, half, se.id, 0.0});
    add_edge(Edge{se.id + "#1", m, to, se.length - half, se.id, half});
  }

  // Connectivity: label components by BFS.
  std::vector<int> component(names_.size(), -1);
  int count = 0;
  for (VertexIndex s = 0; s < names_.size(); ++s) {
    if (component[s] >= 0) continue;
    std::queue<VertexIndex> frontier;
    frontier.push(s);
    component[s] = count;
    while (!frontier.empty()) {
      const VertexIndex v = frontier.front();
      frontier.pop();
      for (EdgeIndex e : incident_[v]) {
        const VertexIndex u = opposite(e, v);
        if (component[u] < 0) {
          component[u] = count;
          frontier.push(u);
        }
      }
    }
    ++count;
  }
  if (count > 1) {
    std::ostringstream msg;
    msg << "graph is disconnected (" << count << " components):";
    for (int c = 0; c < count; ++c) {
      msg << " {";
      bool first = true;
      for (VertexIndex v = 0; v < names_.size(); ++v) {
        if (component[v] != c) continue;
        msg << (first ? "" : ",") << names_[v];
        first = false;
      }
      msg << "}";
    }
    throw ValidationError(msg.str());
  }

  if (root) root_ = vertex(*root);
  for (const auto& name : host_boundary) host_boundary_.push_back(vertex(name));
  std::sort(host_boundary_.begin(), host_boundary_.end());
  host_boundary_.erase(std::unique(host_boundary_.begin(), host_boundary_.end()),
                       host_boundary_.end());
}

MetricGraph MetricGraph::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("graph document must be a JSON object", 1);
  for (const auto& [key, value] : doc.items()) {
    if (key != "vertices" && key != "edges" && key != "root" && key != "host_boundary") {
      throw ParseError("graph document: unknown key '" + key + "'", 1);
    }
  }
  if (!doc.contains("vertices") || !doc["vertices"].is_array()) {
    throw ParseError("graph document: 'vertices' must be an array", 1);
  }
  if (!doc.contains("edges") || !doc["edges"].is_array()) {
    throw ParseError("graph document: 'edges' must be an array", 1);
  }
  std::vector<std::string> vertices;
  for (const auto& v : doc["vertices"]) vertices.push_back(id_string(v, "vertices"));

  std::vector<SourceEdge> edges;
  std::size_t index = 0;
  for (const auto& e : doc["edges"]) {
    const std::string where = "edges[" + std::to_string(index++) + "]";
    if (!e.is_object()) throw ParseError(where + ": must be an object", 1);
    for (const auto& [key, value] : e.items()) {
      if (key != "id" && key != "from" && key != "to" && key != "length") {
        throw ParseError(where + ": unknown key '" + key + "'", 1);
      }
    }
    for (const char* field : {"id", "from", "to", "length"}) {
      if (!e.contains(field)) throw ParseError(where + ": missing field '" + field + "'", 1);
    }
    if (!e["length"].is_number()) throw ParseError(where + ".length: must be a number", 1);
    edges.push_back(SourceEdge{id_string(e["id"], where + ".id"), id_string(e["from"], where + ".from"),
                               id_string(e["to"], where + ".to"), e["length"].get<double>()});
  }
  std::optional<std::string> root;
  if (doc.contains("root")) root = id_string(doc["root"], "root");
  std::vector<std::string> host;
  if (doc.contains("host_boundary")) {
    if (!doc["host_boundary"].is_array()) {
      throw ParseError("graph document: 'host_boundary' must be an array", 1);
    }
    for (const auto& v : doc["host_boundary"]) host.push_back(id_string(v, "host_boundary"));
  }
  return MetricGraph(std::move(vertices), std::move(edges), std::move(root), std::move(host));
}

MetricGraph MetricGraph::parse(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // byte offset -> line number
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n')) + 1;
    throw ParseError("graph document: line " + std::to_string(line) + ": " + e.what(), line);
  }
  return from_json(doc);
}

MetricGraph MetricGraph::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open graph file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

nlohmann::json MetricGraph::to_json() const {
  nlohmann::json doc;
  doc["vertices"] = source_vertices();
  doc["edges"] = nlohmann::json::array();
  for (const auto& e : source_edges()) {
    doc["edges"].push_back({{"id", e.id}, {"from", e.from}, {"to", e.to}, {"length", e.length}});
  }
  if (root_) doc["root"] = names_[*root_];
  if (!host_boundary_.empty()) {
    doc["host_boundary"] = nlohmann::json::array();
    for (VertexIndex v : host_boundary_) doc["host_boundary"].push_back(names_[v]);
  }
  return doc;
}

std::optional<VertexIndex> MetricGraph::find_vertex(std::string_view name) const {
  auto it = vertex_lookup_.find(std::string(name));
  if (it == vertex_lookup_.end()) return std::nullopt;
  return it->second;
}

VertexIndex MetricGraph::vertex(std::string_view name) const {
  if (auto v = find_vertex(name)) return *v;
  throw ValidationError("unknown vertex '" + std::string(name) + "'");
}

std::optional<EdgeIndex> MetricGraph::find_edge(std::string_view id) const {
  auto it = edge_lookup_.find(std::string(id));
  if (it == edge_lookup_.end()) return std::nullopt;
  return it->second;
}

VertexIndex MetricGraph::opposite(EdgeIndex e, VertexIndex v) const {
  const Edge& edge = edges_.at(e);
  if (edge.from == v) return edge.to;
  if (edge.to == v) return edge.from;
  throw ValidationError("vertex '" + names_.at(v) + "' is not an endpoint of edge '" + edge.id + "'");
}

std::vector<VertexIndex> MetricGraph::boundary() const {
  std::vector<VertexIndex> out;
  for (VertexIndex v = 0; v < names_.size(); ++v) {
    if (is_boundary(v)) out.push_back(v);
  }
  return out;
}

bool MetricGraph::is_host_boundary(VertexIndex v) const {
  return std::binary_search(host_boundary_.begin(), host_boundary_.end(), v);
}

double MetricGraph::max_edge_length() const {
  double out = 0.0;
  for (const auto& e : edges_) out = std::max(out, e.length);
  return out;
}

double MetricGraph::min_edge_length() const {
  double out = kInf;
  for (const auto& e : edges_) out = std::min(out, e.length);
  return out;
}

std::vector<double> MetricGraph::distances_from(VertexIndex source) const {
  std::vector<double> dist(names_.size(), kInf);
  using Item = std::pair<double, VertexIndex>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  dist.at(source) = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, v] = queue.top();
    queue.pop();
    if (d > dist[v]) continue;
    for (EdgeIndex e : incident_[v]) {
      const VertexIndex u = opposite(e, v);
      const double candidate = d + edges_[e].length;
      if (candidate < dist[u]) {
        dist[u] = candidate;
        queue.emplace(candidate, u);
      }
    }
  }
  return dist;
}

Point MetricGraph::point_on(std::string_view source_id, double offset) const {
  for (EdgeIndex e = 0; e < edges_.size(); ++e) {
    const Edge& edge = edges_[e];
    if (edge.source_id != source_id) continue;
    if (offset >= edge.source_offset && offset <= edge.source_offset + edge.length) {
      return Point{e, offset - edge.source_offset};
    }
  }
  std::ostringstream msg;
  msg << "point (" << source_id << ", " << offset << ") is off the graph";
  throw ValidationError(msg.str());
}

Point MetricGraph::at_vertex(VertexIndex v) const {
  const auto& inc = incident_.at(v);
  const EdgeIndex e = inc.front();
  return edges_[e].from == v ? Point{e, 0.0} : Point{e, edges_[e].length};
}

void MetricGraph::check_point(const Point& p) const {
  if (p.edge >= edges_.size() || !(p.offset >= 0.0) || p.offset > edges_[p.edge].length) {
    std::ostringstream msg;
    msg << "point (edge " << p.edge << ", offset " << p.offset << ") is off the graph";
    throw ValidationError(msg.str());
  }
}

double MetricGraph::distance(const Point& x, const Point& y) const {
  check_point(x);
  check_point(y);
  const Edge& ex = edges_[x.edge];
  const Edge& ey = edges_[y.edge];
  double best = x.edge == y.edge ? std::abs(x.offset - y.offset) : kInf;

  const std::vector<double> from_o = distances_from(ex.from);
  const std::vector<double> from_t = distances_from(ex.to);
  const double to_o = x.offset;
  const double to_t = ex.length - x.offset;
  const double y_from_o = y.offset;
  const double y_from_t = ey.length - y.offset;
  for (const auto& [lead, table] : {std::pair{to_o, &from_o}, std::pair{to_t, &from_t}}) {
    best = std::min(best, lead + (*table)[ey.from] + y_from_o);
    best = std::min(best, lead + (*table)[ey.to] + y_from_t);
  }
  return best;
}

std::vector<SourceEdge> MetricGraph::source_edges() const {
  std::vector<SourceEdge> out;
  for (const auto& e : edges_) {
    if (e.id == e.source_id) {
      out.push_back(SourceEdge{e.id, names_[e.from], names_[e.to], e.length});
    } else if (e.source_offset == 0.0) {
      // First half of a split loop; the second half ends where this started.
      const Edge& second = edges_[edge_lookup_.at(e.source_id + "#1")];
      out.push_back(SourceEdge{e.source_id, names_[e.from], names_[second.to], e.length + second.length});
    }
  }
  return out;
}

std::vector<std::string> MetricGraph::source_vertices() const {
  std::vector<std::string> out;
  for (VertexIndex v = 0; v < names_.size(); ++v) {
    if (!artificial_[v]) out.push_back(names_[v]);
  }
  return out;
}

Exhaustion::Exhaustion(const MetricGraph& graph, VertexIndex root, std::size_t max_level)
    : graph_(&graph), root_(root) {
  if (root >= graph.vertex_count()) throw ValidationError("exhaustion root is not a vertex of the graph");
  distance_ = graph.distances_from(root);
  levels_.resize(max_level + 1);
  haloes_.resize(max_level + 1);
  for (std::size_t n = 0; n <= max_level; ++n) {
    for (EdgeIndex e = 0; e < graph.edge_count(); ++e) {
      const Edge& edge = graph.edge(e);
      const int inside = int(vertex_in_level(edge.from, n)) + int(vertex_in_level(edge.to, n));
      if (inside == 2) levels_[n].push_back(e);
      if (inside == 1) haloes_[n].push_back(e);
    }
  }
}

bool Exhaustion::vertex_in_level(VertexIndex v, std::size_t n) const {
  const double r = static_cast<double>(n);
  return distance_.at(v) <= r + kLevelSlack * (1.0 + r);
}

bool Exhaustion::edge_in_level(EdgeIndex e, std::size_t n) const {
  const Edge& edge = graph_->edge(e);
  return vertex_in_level(edge.from, n) && vertex_in_level(edge.to, n);
}

std::vector<EdgeIndex> Exhaustion::extended(std::size_t n) const {
  std::vector<EdgeIndex> out(levels_.at(n).begin(), levels_.at(n).end());
  out.insert(out.end(), haloes_.at(n).begin(), haloes_.at(n).end());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<EdgeIndex> Exhaustion::annulus(std::size_t inner, std::size_t outer) const {
  std::vector<EdgeIndex> out;
  for (EdgeIndex e : levels_.at(outer)) {
    if (!edge_in_level(e, inner)) out.push_back(e);
  }
  return out;
}

std::vector<VertexIndex> Exhaustion::interface(std::size_t n) const {
  std::vector<VertexIndex> out;
  for (VertexIndex v = 0; v < graph_->vertex_count(); ++v) {
    if (!vertex_in_level(v, n)) continue;
    for (EdgeIndex e : graph_->incident(v)) {
      if (!edge_in_level(e, n)) {
        out.push_back(v);
        break;
      }
    }
  }
  return out;
}

std::vector<Point> Exhaustion::ball_cut_points(double radius) const {
  std::vector<Point> out;
  for (EdgeIndex e = 0; e < graph_->edge_count(); ++e) {
    const Edge& edge = graph_->edge(e);
    const double d_from = distance_[edge.from];
    const double d_to = distance_[edge.to];
    // ρ(o, x) = min(d_from + x, d_to + |e| - x); collect interior roots of ρ = radius.
    std::vector<double> roots;
    const double x1 = radius - d_from;
    const double x2 = edge.length - (radius - d_to);
    for (double x : {x1, x2}) {
      if (x <= 0.0 || x >= edge.length) continue;
      const double rho = std::min(d_from + x, d_to + edge.length - x);
      if (std::abs(rho - radius) <= kLevelSlack * (1.0 + radius)) roots.push_back(x);
    }
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
    for (double x : roots) out.push_back(Point{e, x});
  }
  return out;
}

Exhaustion build_exhaustion(const MetricGraph& graph, VertexIndex root, std::size_t max_level) {
  return Exhaustion(graph, root, max_level);
}

namespace families {
namespace {

std::string v(std::size_t i) { return "v" + std::to_string(i); }

std::vector<std::string> names(std::size_t count) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(v(i));
  return out;
}

}  // namespace

MetricGraph path(std::size_t edges, double length) {
  std::vector<SourceEdge> es;
  for (std::size_t i = 0; i < edges; ++i) es.push_back({"e" + std::to_string(i + 1), v(i), v(i + 1), length});
  return MetricGraph(names(edges + 1), std::move(es), v(0), {v(edges)});
}

MetricGraph star(std::size_t arms, double length) {
  std::vector<std::string> vs{"c"};
  std::vector<SourceEdge> es;
  for (std::size_t i = 1; i <= arms; ++i) {
    vs.push_back("x" + std::to_string(i));
    es.push_back({"e" + std::to_string(i), "c", vs.back(), length});
  }
  return MetricGraph(std::move(vs), std::move(es), std::string("c"));
}

MetricGraph binary_tree(std::size_t depth, double length) {
  const std::size_t count = (std::size_t{1} << (depth + 1)) - 1;
  std::vector<SourceEdge> es;
  for (std::size_t child = 1; child < count; ++child) {
    es.push_back({"e" + std::to_string(child), v((child - 1) / 2), v(child), length});
  }
  return MetricGraph(names(count), std::move(es), v(0));
}

MetricGraph ladder(std::size_t rungs, double length) {
  // rail a: v0..v<rungs-1>, rail b: v<rungs>..v<2 rungs - 1>
  std::vector<SourceEdge> es;
  std::size_t id = 0;
  for (std::size_t i = 0; i < rungs; ++i) {
    es.push_back({"r" + std::to_string(id++), v(i), v(rungs + i), length});
    if (i + 1 < rungs) {
      es.push_back({"a" + std::to_string(i), v(i), v(i + 1), length});
      es.push_back({"b" + std::to_string(i), v(rungs + i), v(rungs + i + 1), length});
    }
  }
  return MetricGraph(names(2 * rungs), std::move(es), v(0));
}

MetricGraph cycle(std::size_t edges, double length) {
  std::vector<SourceEdge> es;
  for (std::size_t i = 0; i < edges; ++i) {
    es.push_back({"e" + std::to_string(i + 1), v(i), v((i + 1) % edges), length});
  }
  return MetricGraph(names(edges), std::move(es), v(0));
}

}  // namespace families
}  // namespace qgs
