#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Dense>

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

AssembledForms forms_of(const MetricGraph& g, double h, const CoefficientField& field = {}, bool dirichlet = true) {
  auto mesh = std::make_shared<const GraphMesh>(build_mesh(g, all_edges(g), h, whole_graph_truncation(g, dirichlet)));
  return assemble(std::move(mesh), field);
}

SparseMatrix sparse_identity(Eigen::Index n) {
  SparseMatrix out(n, n);
  out.setIdentity();
  return out;
}

// Tridiagonal 1-D P1 pencil written out by hand, independent of the assembler.
void interval_pencil(int cells, SparseMatrix& K, SparseMatrix& M) {
  const double h = 1.0 / cells;
  const int n = cells - 1;
  std::vector<Eigen::Triplet<double>> k, m;
  for (int i = 0; i < n; ++i) {
    k.emplace_back(i, i, 2.0 / h);
    m.emplace_back(i, i, 4.0 * h / 6.0);
    if (i + 1 < n) {
      k.emplace_back(i, i + 1, -1.0 / h);
      k.emplace_back(i + 1, i, -1.0 / h);
      m.emplace_back(i, i + 1, h / 6.0);
      m.emplace_back(i + 1, i, h / 6.0);
    }
  }
  K.resize(n, n);
  M.resize(n, n);
  K.setFromTriplets(k.begin(), k.end());
  M.setFromTriplets(m.begin(), m.end());
}

double dense_min(const SparseMatrix& K, const SparseMatrix& M) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> s(Eigen::MatrixXd(K), Eigen::MatrixXd(M),
                                                               Eigen::EigenvaluesOnly);
  return s.eigenvalues()(0);
}

}  // namespace

TEST_CASE("identity pencil") {
  const auto I = sparse_identity(6);
  const auto r = smallest_eigenpair(I, I);
  CHECK(r.converged);
  CHECK(r.iterations == 1);
  CHECK(r.lambda == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r.vector.dot(r.vector) == doctest::Approx(1.0));
}

TEST_CASE("interval converges to pi^2 at second order") {
  const double exact = std::numbers::pi * std::numbers::pi;
  double previous_error = 0.0;
  for (int cells : {25, 50, 100, 200}) {
    SparseMatrix K, M;
    interval_pencil(cells, K, M);
    const auto r = smallest_eigenpair(K, M);
    // discrete P1 eigenvalue in closed form
    const double h = 1.0 / cells;
    const double c = std::cos(std::numbers::pi * h);
    const double discrete = 6.0 / (h * h) * (1.0 - c) / (2.0 + c);
    CHECK(std::abs(r.lambda - discrete) <= 1e-9 * discrete);
    const double error = r.lambda - exact;
    CHECK(error > 0.0);
    if (previous_error > 0.0) {
      CAPTURE(cells);
      CHECK(previous_error / error == doctest::Approx(4.0).epsilon(0.05));
    }
    previous_error = error;
  }
}

TEST_CASE("assembled interval agrees with the hand-written pencil") {
  SparseMatrix K, M;
  interval_pencil(40, K, M);
  const auto forms = forms_of(families::path(1), 1.0 / 40.0);
  CHECK(smallest_eigenpair(forms).lambda == doctest::Approx(smallest_eigenpair(K, M).lambda).epsilon(1e-12));
}

TEST_CASE("K + cM shifts the eigenvalue by c") {
  const auto forms = forms_of(families::star(3), 0.05);
  const auto base = smallest_eigenpair(forms);
  const SparseMatrix shifted = forms.stiffness() + 5.0 * forms.M;
  const auto r = smallest_eigenpair(shifted, forms.M);
  CHECK(std::abs(r.lambda - base.lambda - 5.0) <= 1e-9);
  CHECK(base.lambda == doctest::Approx(std::numbers::pi * std::numbers::pi / 4).epsilon(1e-3));
}

TEST_CASE("lower bound") {
  SUBCASE("diagonal pencil is exact") {
    SparseMatrix K(3, 3), M = sparse_identity(3);
    K.insert(0, 0) = 4.0;
    K.insert(1, 1) = -2.0;
    K.insert(2, 2) = 7.0;
    CHECK(eigen_lower_bound(K, M) == -2.0);
  }
  SUBCASE("never above the smallest eigenvalue") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.2, 3.0);
    const MetricGraph graphs[] = {families::star(3), families::binary_tree(3), families::ladder(4), families::cycle(6)};
    for (const auto& g : graphs) {
      CoefficientField field;
      for (const auto& e : g.source_edges()) {
        EdgeCoefficients c;
        c.p = u(rng);
        c.q = 4.0 * (u(rng) - 1.5);
        c.w = u(rng);
        field.set(e.id, c);
      }
      for (bool dirichlet : {true, false}) {
        const auto forms = forms_of(g, 0.2, field, dirichlet);
        const double bound = eigen_lower_bound(forms);
        CHECK(bound <= dense_min(forms.stiffness(), forms.M) + 1e-12);
      }
    }
  }
  SUBCASE("empty or mismatched pencils") {
    CHECK_THROWS_AS(eigen_lower_bound(SparseMatrix(0, 0), SparseMatrix(0, 0)), ValidationError);
    CHECK_THROWS_AS(eigen_lower_bound(sparse_identity(2), sparse_identity(3)), ValidationError);
  }
}

TEST_CASE("dense gate and residual contract") {
  const MetricGraph graphs[] = {families::star(5, 0.8), families::binary_tree(3), families::ladder(5),
                                families::cycle(7)};
  EdgeCoefficients c;
  c.p = Expression::parse("1 + 0.5*sin(3*x)");
  c.q = Expression::parse("2*cos(x) - 1");
  c.w = Expression::parse("1 + 0.25*x");
  const CoefficientField field(c);
  for (const auto& g : graphs) {
    for (bool dirichlet : {true, false}) {
      const auto forms = forms_of(g, 0.25, field, dirichlet);
      REQUIRE(forms.M.rows() <= 200);
      EigenOptions options;
      options.tol = 1e-10;
      const auto r = smallest_eigenpair(forms, options);
      const double reference = dense_min(forms.stiffness(), forms.M);
      CHECK(std::abs(r.lambda - reference) <= std::max(1e-10, 1e-10 * std::abs(reference)));
      CHECK(r.residual <= options.tol);
      CHECK(eigen_residual(forms.stiffness(), forms.M, r.vector, r.lambda) == doctest::Approx(r.residual));
      CHECK(r.vector.dot(forms.M * r.vector) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(r.vector.sum() >= 0.0);
    }
  }
}

TEST_CASE("non-convergence") {
  const auto forms = forms_of(families::path(1), 0.01);
  EigenOptions options;
  options.max_iter = 1;
  options.basis = 2;
  options.tol = 1e-14;
  CHECK_THROWS_AS(smallest_eigenpair(forms, options), NumericalError);
  options.require_convergence = false;
  const auto r = smallest_eigenpair(forms, options);
  CHECK_FALSE(r.converged);
  CHECK(r.iterations == 1);
}

TEST_CASE("history rows") {
  const auto forms = forms_of(families::star(3), 0.05);
  std::ostringstream history;
  EigenOptions options;
  options.history = &history;
  const auto r = smallest_eigenpair(forms, options);
  std::istringstream rows(history.str());
  std::string line;
  std::size_t count = 0;
  while (std::getline(rows, line)) {
    ++count;
    CHECK(line.rfind(std::to_string(count) + ",", 0) == 0);
  }
  CHECK(count == r.iterations);
}

TEST_CASE("shift above the spectrum is lowered") {
  const auto forms = forms_of(families::path(1), 0.05);
  EigenOptions options;
  options.shift = 50.0;
  const auto r = smallest_eigenpair(forms, options);
  CHECK(r.shift < 50.0);
  CHECK(r.lambda == doctest::Approx(std::numbers::pi * std::numbers::pi).epsilon(1e-2));
  EigenOptions zero_tol;
  zero_tol.tol = 0.0;
  CHECK_THROWS_AS(smallest_eigenpair(forms.stiffness(), forms.M, zero_tol), ValidationError);
}
