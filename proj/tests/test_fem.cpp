#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "qgs/coeff.hpp"
#include "qgs/eig.hpp"
#include "qgs/error.hpp"
#include "qgs/expression.hpp"
#include "qgs/fem.hpp"

using namespace qgs;

namespace {

std::vector<EdgeIndex> all_edges(const MetricGraph& g) {
  std::vector<EdgeIndex> out;
  for (EdgeIndex e = 0; e < g.edge_count(); ++e) out.push_back(e);
  return out;
}

std::shared_ptr<const GraphMesh> mesh_of(const MetricGraph& g, double h, bool dirichlet) {
  return std::make_shared<const GraphMesh>(build_mesh(g, all_edges(g), h, whole_graph_truncation(g, dirichlet)));
}

double max_abs(const SparseMatrix& a) {
  double out = 0.0;
  for (Eigen::Index k = 0; k < a.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) out = std::max(out, std::abs(it.value()));
  }
  return out;
}

// Smallest generalized eigenvalue through a dense Cholesky reduction.
double dense_lambda1(const SparseMatrix& K, const SparseMatrix& M) {
  const Eigen::MatrixXd k(K), m(M);
  const Eigen::LLT<Eigen::MatrixXd> chol(m);
  const Eigen::MatrixXd L = chol.matrixL();
  const Eigen::MatrixXd a = L.triangularView<Eigen::Lower>().solve(
      L.triangularView<Eigen::Lower>().solve(k).transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

CoefficientField smooth_field() {
  EdgeCoefficients c;
  c.p = Expression::parse("1 + 0.5*sin(x)");
  c.q = Expression::parse("cos(2*x) - 0.3");
  c.w = Expression::parse("1 + x^2");
  return CoefficientField(c);
}

}  // namespace

TEST_CASE("degree-of-freedom counts") {
  const auto star = families::star(3);
  CHECK(mesh_of(star, 1.0, true)->dof_count() == 1);
  CHECK(mesh_of(star, 0.5, true)->dof_count() == 4);
  CHECK(mesh_of(star, 0.5, false)->dof_count() == 7);
  CHECK(mesh_of(star, 0.5, false)->node_count() == 7);
}

TEST_CASE("interval element matrices at h = 1/3") {
  const auto g = families::path(1);
  const auto forms = assemble(mesh_of(g, 1.0 / 3.0, true), CoefficientField{});
  REQUIRE(forms.K_p.rows() == 2);
  const Eigen::MatrixXd K(forms.K_p), M(forms.M);
  CHECK(K(0, 0) == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(K(0, 1) == doctest::Approx(-3.0).epsilon(1e-14));
  CHECK(K(1, 1) == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(M(0, 0) == doctest::Approx(2.0 / 9.0).epsilon(1e-14));
  CHECK(M(0, 1) == doctest::Approx(1.0 / 18.0).epsilon(1e-14));
  CHECK(max_abs(forms.K_q) == 0.0);
  CHECK(forms.K_p_coupling.rows() == 2);
  CHECK(forms.K_p_coupling.cols() == 2);
}

TEST_CASE("constant q gives K_q = cM") {
  const auto g = families::path(1);
  EdgeCoefficients c;
  c.q = 2.5;
  const auto forms = assemble(mesh_of(g, 0.1, true), CoefficientField(c));
  CHECK(max_abs(forms.K_q - 2.5 * forms.M) <= 1e-15);
}

TEST_CASE("star center row") {
  const auto star = families::star(3);
  const auto mesh = mesh_of(star, 0.5, true);
  const auto forms = assemble(mesh, CoefficientField{});
  const auto center = mesh->dof(*mesh->vertex_node(star.vertex("c")));
  REQUIRE(center >= 0);
  const Eigen::MatrixXd K(forms.K_p);
  CHECK(K(center, center) == doctest::Approx(6.0));
  int arms = 0;
  for (Eigen::Index j = 0; j < K.cols(); ++j) {
    if (j == center || K(center, j) == 0.0) continue;
    CHECK(K(center, j) == doctest::Approx(-2.0));
    ++arms;
  }
  CHECK(arms == 3);
}

TEST_CASE("Kirchhoff residual") {
  SUBCASE("constant and linear functions") {
    const auto g = families::path(2);
    const auto mesh = mesh_of(g, 0.25, false);
    const CoefficientField field;
    const VertexIndex middle = g.vertex("v1");
    Vector ones = Vector::Ones(static_cast<Eigen::Index>(mesh->node_count()));
    CHECK(kirchhoff_residual(*mesh, field, ones, middle) == 0.0);
    Vector linear(ones.size());
    for (std::size_t i = 0; i < mesh->node_count(); ++i) {
      const auto& node = mesh->node(i);
      linear[static_cast<Eigen::Index>(i)] = g.distance(g.at_vertex(g.vertex("v0")), Point{node.edge, node.offset});
    }
    CHECK(kirchhoff_residual(*mesh, field, linear, middle) <= 1e-14);
  }
  SUBCASE("star eigenvector under refinement") {
    const auto star = families::star(3);
    double previous = 0.0;
    for (double h : {0.1, 0.05, 0.025}) {
      const auto mesh = mesh_of(star, h, true);
      const auto forms = assemble(mesh, CoefficientField{});
      const auto eig = smallest_eigenpair(forms);
      const Vector nodal = mesh->expand(eig.vector);
      const double r = kirchhoff_residual(*mesh, CoefficientField{}, nodal, star.vertex("c"));
      CAPTURE(h);
      if (previous > 0.0) CHECK(r < 0.75 * previous);
      previous = r;
    }
  }
  SUBCASE("constrained vertex") {
    const auto star = families::star(3);
    const auto mesh = mesh_of(star, 0.5, true);
    const Vector nodal = Vector::Zero(static_cast<Eigen::Index>(mesh->node_count()));
    CHECK_THROWS_AS(kirchhoff_residual(*mesh, CoefficientField{}, nodal, star.vertex("x1")), ValidationError);
  }
}

TEST_CASE("assembly invariants on random coefficients") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  const MetricGraph graphs[] = {families::star(4, 0.7), families::binary_tree(2), families::ladder(3), families::cycle(5)};
  for (const auto& g : graphs) {
    CoefficientField field;
    for (const auto& e : g.source_edges()) {
      EdgeCoefficients c;
      c.p = Piecewise{{0.0, 0.3 * e.length}, {u(rng), u(rng)}};
      c.q = u(rng) - 1.5;
      c.w = u(rng);
      field.set(e.id, c);
    }
    const auto free = assemble(mesh_of(g, 0.1, false), field);
    CHECK(max_abs(free.K_p - SparseMatrix(free.K_p.transpose())) == 0.0);
    CHECK(max_abs(free.K_q - SparseMatrix(free.K_q.transpose())) == 0.0);
    CHECK(max_abs(free.M - SparseMatrix(free.M.transpose())) == 0.0);
    // constants lie in the kernel of the p-part
    const Vector ones = Vector::Ones(free.K_p.rows());
    CHECK((free.K_p * ones).cwiseAbs().maxCoeff() <= 1e-12 * max_abs(free.K_p));
    // M positive definite
    const Eigen::LLT<Eigen::MatrixXd> chol{Eigen::MatrixXd(free.M)};
    CHECK(chol.info() == Eigen::Success);
  }
}

TEST_CASE("non-positive w is a hypothesis failure") {
  const auto g = families::path(2);
  CoefficientField field;
  EdgeCoefficients bad;
  bad.w = 0.0;
  field.set("e2", bad);
  CHECK_THROWS_AS(assemble(mesh_of(g, 0.25, true), field), HypothesisError);
  EdgeCoefficients negative_p;
  negative_p.p = Expression::parse("x - 0.5");
  CHECK_THROWS_AS(assemble(mesh_of(g, 0.25, true), CoefficientField(negative_p)), HypothesisError);
}

TEST_CASE("domain monotonicity") {
  const auto g = families::binary_tree(3);
  const auto field = smooth_field();
  const auto ex = build_exhaustion(g, *g.root(), 3);
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t n = 1; n <= 3; ++n) {
    const auto level = ex.level(n);
    const auto spec = level_truncation(g, ex, n, true);
    const auto mesh = std::make_shared<const GraphMesh>(build_mesh(g, level, 0.1, spec));
    const auto forms = assemble(mesh, field, Domain::subgraph);
    const double lambda = dense_lambda1(forms.stiffness(), forms.M);
    CAPTURE(n);
    CHECK(lambda <= previous + 1e-12);
    previous = lambda;
  }
}

TEST_CASE("pencil identities") {
  const auto g = families::star(3);
  EdgeCoefficients c;
  c.p = Expression::parse("1 + 0.5*sin(x)");
  c.q = Expression::parse("cos(2*x) - 0.3");
  c.w = Expression::parse("1 + x^2");
  const auto mesh = mesh_of(g, 0.05, true);
  const auto base = assemble(mesh, CoefficientField(c));
  const double lambda = dense_lambda1(base.stiffness(), base.M);

  SUBCASE("q + 7w") {
    EdgeCoefficients shifted = c;
    shifted.q = Expression::parse("(cos(2*x) - 0.3) + 7*(1 + x^2)");
    const auto forms = assemble(mesh, CoefficientField(shifted));
    CHECK(max_abs(forms.K_q - base.K_q - 7.0 * base.M) <= 1e-12 * max_abs(base.M));
    CHECK(std::abs(dense_lambda1(forms.stiffness(), forms.M) - (lambda + 7.0)) <= 1e-12 * (1.0 + std::abs(lambda)));
  }
  SUBCASE("(cp, cq, cw)") {
    EdgeCoefficients scaled;
    scaled.p = Expression::parse("0.3*(1 + 0.5*sin(x))");
    scaled.q = Expression::parse("0.3*(cos(2*x) - 0.3)");
    scaled.w = Expression::parse("0.3*(1 + x^2)");
    const auto forms = assemble(mesh, CoefficientField(scaled));
    CHECK(std::abs(dense_lambda1(forms.stiffness(), forms.M) - lambda) <= 1e-12 * std::abs(lambda));
  }
}

TEST_CASE("cut point inserts a Dirichlet node") {
  const auto g = families::path(1);
  DirichletTruncationSpec spec = whole_graph_truncation(g, true);
  spec.cut_points.push_back(Point{0, 0.5});
  const auto mesh = std::make_shared<const GraphMesh>(build_mesh(g, all_edges(g), 0.045, spec));
  const auto forms = assemble(mesh, CoefficientField{});
  const double lambda = dense_lambda1(forms.stiffness(), forms.M);
  const double exact = 4.0 * std::numbers::pi * std::numbers::pi;
  CHECK(std::abs(lambda - exact) / exact < 1e-2);
  bool cut_constrained = false;
  for (std::size_t i = 0; i < mesh->node_count(); ++i) {
    if (mesh->node(i).offset == 0.5) cut_constrained = mesh->node(i).constrained;
  }
  CHECK(cut_constrained);
  spec.cut_points = {Point{0, 1.5}};
  CHECK_THROWS_AS(build_mesh(g, all_edges(g), 0.3, spec), ValidationError);
}

TEST_CASE("Matrix Market round trip") {
  const auto forms = assemble(mesh_of(families::star(3), 0.2, true), smooth_field());
  for (const SparseMatrix* a : {&forms.K_p, &forms.M}) {
    std::stringstream io;
    write_matrix_market(io, *a, true, "round trip");
    const SparseMatrix back = read_matrix_market(io);
    CHECK(max_abs(back - *a) == 0.0);
  }
  std::stringstream general;
  write_matrix_market(general, forms.K_p_coupling, false);
  CHECK(max_abs(read_matrix_market(general) - forms.K_p_coupling) == 0.0);
  std::stringstream junk("%%MatrixMarket matrix array real general\n");
  CHECK_THROWS_AS(read_matrix_market(junk), ParseError);
}

TEST_CASE("mesh errors") {
  const auto g = families::path(2);
  CHECK_THROWS_AS(build_mesh(g, {}, 0.1), ValidationError);
  CHECK_THROWS_AS(build_mesh(g, all_edges(g), 0.0), ValidationError);
  CHECK_THROWS_AS(build_mesh(g, all_edges(g), -1.0), ValidationError);
  const std::vector<EdgeIndex> unknown{7};
  CHECK_THROWS_AS(build_mesh(g, unknown, 0.1), ValidationError);
}
