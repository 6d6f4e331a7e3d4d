#include <doctest.h>

#include <algorithm>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "qgs/eig.hpp"
#include "qgs/error.hpp"
#include "qgs/fem.hpp"
#include "qgs/graph.hpp"

using namespace qgs;

namespace {

std::vector<std::string> names(const MetricGraph& g, const std::vector<VertexIndex>& vs) {
  std::vector<std::string> out;
  for (auto v : vs) out.push_back(g.vertex_name(v));
  std::sort(out.begin(), out.end());
  return out;
}

// Floyd-Warshall over the vertex graph.
std::vector<std::vector<double>> all_pairs(const MetricGraph& g) {
  const auto n = g.vertex_count();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, std::numeric_limits<double>::infinity()));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
  for (const Edge& e : g.edges()) {
    d[e.from][e.to] = std::min(d[e.from][e.to], e.length);
    d[e.to][e.from] = std::min(d[e.to][e.from], e.length);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

}  // namespace

TEST_CASE("single edge is the smallest graph") {
  const auto g = MetricGraph::parse(R"({"vertices":["a","b"],"edges":[{"id":"e","from":"a","to":"b","length":1}]})");
  CHECK(g.vertex_count() == 2);
  CHECK(names(g, g.boundary()) == std::vector<std::string>{"a", "b"});
  CHECK(g.max_edge_length() == 1.0);
  CHECK(g.min_edge_length() == 1.0);
  CHECK_FALSE(g.root());
}

TEST_CASE("star degrees and boundary") {
  const auto g = families::star(3);
  CHECK(g.degree(g.vertex("c")) == 3);
  CHECK(names(g, g.boundary()) == std::vector<std::string>{"x1", "x2", "x3"});
  CHECK(g.root() == g.vertex("c"));
}

TEST_CASE("loops are split at an artificial midpoint") {
  const auto g = MetricGraph::parse(R"({"vertices":["a"],"edges":[{"id":"l","from":"a","to":"a","length":2}],"root":"a"})");
  REQUIRE(g.edge_count() == 2);
  for (const Edge& e : g.edges()) CHECK(e.length == 1.0);
  const auto mid = g.find_vertex("l#mid");
  REQUIRE(mid);
  CHECK(g.is_artificial(*mid));
  CHECK(g.degree(*mid) == 2);
  CHECK(g.degree(g.vertex("a")) == 2);
  CHECK(g.boundary().empty());
  CHECK(g.source_vertices() == std::vector<std::string>{"a"});
  CHECK(g.source_edges() == std::vector<SourceEdge>{{"l", "a", "a", 2.0}});
}

TEST_CASE("loop spectrum matches a directly discretized circle") {
  const auto g = MetricGraph::parse(R"({"vertices":["a"],"edges":[{"id":"l","from":"a","to":"a","length":2}]})");
  std::vector<EdgeIndex> all{0, 1};
  const auto forms = assemble(std::make_shared<const GraphMesh>(build_mesh(g, all, 0.1)), CoefficientField{});
  const Vector split = dense_eigenvalues(forms.stiffness(), forms.M);

  // Periodic P1 on a circle of length 2 with 20 cells.
  const int n = 20;
  const double h = 0.1;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n), M = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    K(i, i) += 1 / h, K(j, j) += 1 / h, K(i, j) -= 1 / h, K(j, i) -= 1 / h;
    M(i, i) += h / 3, M(j, j) += h / 3, M(i, j) += h / 6, M(j, i) += h / 6;
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> direct(K, M, Eigen::EigenvaluesOnly);
  REQUIRE(split.size() == n);
  for (int k = 0; k < n; ++k) CHECK(split[k] == doctest::Approx(direct.eigenvalues()[k]).epsilon(1e-10));
}

TEST_CASE("parallel edges are kept") {
  const auto g = MetricGraph::parse(
      R"({"vertices":["a","b"],"edges":[{"id":"p","from":"a","to":"b","length":1},{"id":"q","from":"a","to":"b","length":2}]})");
  CHECK(g.edge_count() == 2);
  CHECK(g.degree(g.vertex("a")) == 2);
  CHECK(g.distance(g.at_vertex(0), g.at_vertex(1)) == 1.0);
}

TEST_CASE("re-splitting reproduces the edge multiset") {
  const MetricGraph g({"a", "b"}, {{"l", "a", "a", 3.0}, {"e", "a", "b", 1.0}, {"m", "b", "b", 0.5}});
  const MetricGraph again(g.source_vertices(), g.source_edges());
  REQUIRE(again.edge_count() == g.edge_count());
  for (EdgeIndex e = 0; e < g.edge_count(); ++e) {
    const auto f = again.find_edge(g.edge(e).id);
    REQUIRE(f);
    CHECK(again.edge(*f).length == g.edge(e).length);
    CHECK(again.vertex_name(again.edge(*f).from) == g.vertex_name(g.edge(e).from));
    CHECK(again.vertex_name(again.edge(*f).to) == g.vertex_name(g.edge(e).to));
  }
}

TEST_CASE("load errors") {
  SUBCASE("disconnected graph lists components") {
    try {
      MetricGraph::parse(R"({"vertices":["a","b","c","d"],"edges":[{"id":"e","from":"a","to":"b","length":1},{"id":"f","from":"c","to":"d","length":1}]})");
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      const std::string what = e.what();
      CHECK(what.find("a") != std::string::npos);
      CHECK(what.find("c") != std::string::npos);
    }
  }
  SUBCASE("nonpositive length") {
    CHECK_THROWS_AS(MetricGraph::parse(R"({"vertices":["a","b"],"edges":[{"id":"e","from":"a","to":"b","length":0}]})"),
                    ValidationError);
    CHECK_THROWS_AS(MetricGraph::parse(R"({"vertices":["a","b"],"edges":[{"id":"e","from":"a","to":"b","length":-1}]})"),
                    ValidationError);
  }
  SUBCASE("syntax error carries the line") {
    try {
      MetricGraph::parse("{\n\"vertices\": [\"a\",\n}");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.position() == 3);
    }
  }
  SUBCASE("unknown keys are rejected") {
    CHECK_THROWS_AS(MetricGraph::parse(R"({"vertices":["a","b"],"edges":[{"id":"e","from":"a","to":"b","length":1}],"color":1})"),
                    ParseError);
    CHECK_THROWS_AS(MetricGraph::parse(R"({"vertices":["a","b"],"edges":[{"id":"e","from":"a","to":"b","length":1,"w":2}]})"),
                    ParseError);
  }
  SUBCASE("unknown root and endpoints") {
    CHECK_THROWS(MetricGraph::parse(R"({"vertices":["a","b"],"edges":[{"id":"e","from":"a","to":"b","length":1}],"root":"z"})"));
    CHECK_THROWS(MetricGraph::parse(R"({"vertices":["a","b"],"edges":[{"id":"e","from":"a","to":"q","length":1}]})"));
  }
  SUBCASE("duplicate edge ids") {
    CHECK_THROWS_AS(MetricGraph({"a", "b"}, {{"e", "a", "b", 1.0}, {"e", "b", "a", 1.0}}), ValidationError);
  }
}

TEST_CASE("json round trip") {
  const auto g = families::path(3);
  const auto again = MetricGraph::from_json(g.to_json());
  CHECK(again.source_edges() == g.source_edges());
  CHECK(again.root() == g.root());
  CHECK(again.host_boundary().size() == 1);
  CHECK(again.is_host_boundary(again.vertex("v3")));
}

TEST_CASE("distances") {
  SUBCASE("same point") {
    const auto g = families::star(3);
    const Point p{1, 0.3};
    CHECK(g.distance(p, p) == 0.0);
  }
  SUBCASE("path a-b-c") {
    const MetricGraph g({"a", "b", "c"}, {{"ab", "a", "b", 1.0}, {"bc", "b", "c", 2.0}});
    CHECK(g.distance(g.at_vertex(g.vertex("a")), g.at_vertex(g.vertex("c"))) == 3.0);
    CHECK(g.distance(g.point_on("ab", 0.25), g.point_on("bc", 1.5)) == doctest::Approx(2.25));
  }
  SUBCASE("cycle of four") {
    const auto g = families::cycle(4);
    const auto d = g.distances_from(g.vertex("v0"));
    CHECK(d[g.vertex("v2")] == 2.0);
    // Both routes around the cycle.
    CHECK(g.distance(g.point_on("e1", 0.5), g.point_on("e3", 0.5)) == 2.0);
  }
  SUBCASE("same-edge points may route around") {
    const auto g = families::cycle(3);
    CHECK(g.distance(g.point_on("e1", 0.1), g.point_on("e1", 0.9)) == doctest::Approx(0.8));
  }
  SUBCASE("off-graph points") {
    const auto g = families::path(2);
    CHECK_THROWS(g.distance(Point{0, 1.5}, Point{0, 0.0}));
    CHECK_THROWS(g.distance(Point{7, 0.0}, Point{0, 0.0}));
    CHECK_THROWS(g.point_on("nope", 0.0));
  }
}

TEST_CASE("distance is a metric on random triples") {
  std::mt19937_64 rng(7);
  for (const auto& g : {families::ladder(5), families::binary_tree(3), families::cycle(5)}) {
    std::uniform_int_distribution<std::size_t> edge(0, g.edge_count() - 1);
    auto point = [&] {
      const auto e = edge(rng);
      return Point{e, std::uniform_real_distribution<double>(0.0, g.edge(e).length)(rng)};
    };
    for (int t = 0; t < 200; ++t) {
      const Point x = point(), y = point(), z = point();
      CHECK(g.distance(x, y) >= 0.0);
      CHECK(g.distance(x, y) == doctest::Approx(g.distance(y, x)).epsilon(1e-14));
      CHECK(g.distance(x, y) <= g.distance(x, z) + g.distance(z, y) + 1e-12);
    }
  }
}

TEST_CASE("exhaustion levels and haloes") {
  SUBCASE("path o-v1-v2") {
    const auto g = families::path(2);
    const Exhaustion ex(g, g.vertex("v0"), 2);
    REQUIRE(ex.level(1).size() == 1);
    CHECK(g.edge(ex.level(1)[0]).id == "e1");
    const auto ext = ex.extended(1);
    CHECK(ext.size() == 2);
    CHECK(ex.halo(1).size() == 1);
    CHECK(g.edge(ex.halo(1)[0]).id == "e2");
  }
  SUBCASE("root-only level") {
    const auto g = families::star(3);
    const Exhaustion ex(g, g.vertex("c"), 1);
    CHECK(ex.level(0).empty());
    CHECK(ex.halo(0).size() == 3);
  }
  SUBCASE("binary tree depth 3, level 2 against a distance table") {
    const auto g = families::binary_tree(3);
    const auto d = all_pairs(g);
    const auto root = g.vertex("v0");
    std::size_t expected = 0;
    for (const Edge& e : g.edges()) expected += d[root][e.from] <= 2.0 && d[root][e.to] <= 2.0;
    CHECK(expected == 6);
    const Exhaustion ex = build_exhaustion(g, root, 3);
    CHECK(ex.level(2).size() == expected);
  }
  SUBCASE("nesting and disjoint haloes") {
    const auto g = families::ladder(6);
    const Exhaustion ex(g, *g.root(), 8);
    for (std::size_t n = 0; n + 1 <= ex.max_level(); ++n) {
      for (EdgeIndex e : ex.level(n)) {
        if (n < ex.max_level()) CHECK(ex.edge_in_level(e, n + 1));
        CHECK(std::find(ex.halo(n).begin(), ex.halo(n).end(), e) == ex.halo(n).end());
      }
      for (EdgeIndex e : ex.halo(n)) {
        CHECK(ex.vertex_in_level(g.edge(e).from, n) != ex.vertex_in_level(g.edge(e).to, n));
      }
    }
    CHECK(ex.level(ex.max_level()).size() == g.edge_count());
  }
  SUBCASE("annulus and interface") {
    const auto g = families::path(6);
    const Exhaustion ex(g, 0, 6);
    const auto ring = ex.annulus(2, 5);
    CHECK(ring.size() == 3);
    const auto iface = ex.interface(2);
    REQUIRE(iface.size() == 1);
    CHECK(g.vertex_name(iface[0]) == "v2");
  }
  SUBCASE("ball cut points lie inside edges") {
    const auto g = families::path(3);
    const Exhaustion ex(g, 0, 3);
    const auto cuts = ex.ball_cut_points(1.5);
    REQUIRE(cuts.size() == 1);
    CHECK(g.edge(cuts[0].edge).id == "e2");
    CHECK(cuts[0].offset == doctest::Approx(0.5));
  }
  SUBCASE("root must exist") {
    const auto g = families::path(1);
    CHECK_THROWS(Exhaustion(g, 17, 1));
  }
}

TEST_CASE("families") {
  CHECK(families::path(40).edge_count() == 40);
  CHECK(families::binary_tree(3).edge_count() == 14);
  CHECK(families::ladder(4).edge_count() == 10);
  CHECK(families::cycle(4).boundary().empty());
  const auto p = families::path(5);
  REQUIRE(p.host_boundary().size() == 1);
  CHECK(p.vertex_name(p.host_boundary()[0]) == "v5");
}
