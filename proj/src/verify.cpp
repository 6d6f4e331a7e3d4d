#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "qgs/coeff.hpp"
#include "qgs/eig.hpp"
#include "qgs/error.hpp"
#include "qgs/expression.hpp"
#include "qgs/fem.hpp"
#include "qgs/graph.hpp"
#include "qgs/parallel.hpp"
#include "qgs/run.hpp"
#include "qgs/spectral.hpp"

namespace qgs {
namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

constexpr const char* kP = "1 + 0.5*sin(3*x)";
constexpr const char* kQ = "cos(2*x) - 0.5";
constexpr const char* kW = "1 + 0.3*x^2";

EdgeCoefficients smooth_coefficients() {
  EdgeCoefficients c;
  c.p = Expression::parse(kP);
  c.q = Expression::parse(kQ);
  c.w = Expression::parse(kW);
  return c;
}

// (scale·p, scale·(q + shift·w), scale·w).
CoefficientField transformed(double shift, double scale) {
  char s[32], k[32];
  std::snprintf(s, sizeof s, "%.17g", scale);
  std::snprintf(k, sizeof k, "%.17g", shift);
  EdgeCoefficients c;
  c.p = Expression::parse(std::string(s) + "*(" + kP + ")");
  c.q = Expression::parse(std::string(s) + "*((" + kQ + ") + " + k + "*(" + kW + "))");
  c.w = Expression::parse(std::string(s) + "*(" + kW + ")");
  return CoefficientField(c);
}

struct Fixture {
  std::string name;
  MetricGraph graph;
};

std::vector<Fixture> fixtures() {
  std::vector<Fixture> out;
  out.push_back({"interval", families::path(1)});
  out.push_back({"star3", families::star(3)});
  out.push_back({"tree3", families::binary_tree(3)});
  out.push_back({"ladder4", families::ladder(4)});
  out.push_back({"cycle6", MetricGraph({"a", "b", "c", "d", "e", "f", "t"},
                                       {{"c1", "a", "b", 1.0}, {"c2", "b", "c", 1.0}, {"c3", "c", "d", 1.0},
                                        {"c4", "d", "e", 1.0}, {"c5", "e", "f", 1.0}, {"c6", "f", "a", 1.0},
                                        {"tail", "a", "t", 1.5}},
                                       std::string("a"))});
  return out;
}

Exhaustion full_exhaustion(const MetricGraph& graph) {
  const VertexIndex root = graph.root().value_or(0);
  const auto d = graph.distances_from(root);
  const double far = *std::max_element(d.begin(), d.end());
  return Exhaustion(graph, root, std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(far - 1e-12))));
}

std::shared_ptr<const GraphMesh> mesh_on(const MetricGraph& graph, double h, const DirichletTruncationSpec& spec) {
  std::vector<EdgeIndex> all(graph.edge_count());
  for (EdgeIndex e = 0; e < all.size(); ++e) all[e] = e;
  return std::make_shared<const GraphMesh>(build_mesh(graph, all, h, spec));
}

double max_asymmetry(const SparseMatrix& A) {
  const SparseMatrix D = A - SparseMatrix(A.transpose());
  double out = 0.0;
  for (int k = 0; k < D.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(D, k); it; ++it) out = std::max(out, std::abs(it.value()));
  }
  return out;
}

class Suite {
 public:
  void add(std::string name, double measured, double threshold, bool pass, std::string detail = {}) {
    checks_.push_back(VerifyCheck{std::move(name), pass, measured, threshold, std::move(detail)});
  }
  // Runs body; an exception is a failed check carrying its message.
  void guard(const std::string& name, const std::function<void()>& body) {
    try {
      body();
    } catch (const std::exception& e) {
      add(name, std::nan(""), 0.0, false, e.what());
    }
  }
  std::vector<VerifyCheck> take() { return std::move(checks_); }

 private:
  std::vector<VerifyCheck> checks_;
};

// --- graph ---------------------------------------------------------------

void graph_checks(Suite& suite, Rng& rng) {
  suite.guard("graph.metric_axioms", [&] {
    double worst = 0.0;
    for (const auto& fx : fixtures()) {
      const MetricGraph& g = fx.graph;
      auto random_point = [&] {
        const auto e = std::uniform_int_distribution<std::size_t>(0, g.edge_count() - 1)(rng);
        return Point{e, uniform(rng, 0.0, g.edge(e).length)};
      };
      for (int t = 0; t < 50; ++t) {
        const Point x = random_point(), y = random_point(), z = random_point();
        const double xy = g.distance(x, y), yx = g.distance(y, x);
        const double xz = g.distance(x, z), zy = g.distance(z, y);
        worst = std::max({worst, -xy, std::abs(xy - yx), xy - (xz + zy), g.distance(x, x)});
      }
    }
    suite.add("graph.metric_axioms", worst, 1e-12, worst <= 1e-12, "max violation over 250 random triples");
  });

  suite.guard("graph.exhaustion_nesting", [&] {
    int violations = 0;
    for (const auto& fx : fixtures()) {
      const Exhaustion ex = full_exhaustion(fx.graph);
      for (std::size_t n = 0; n <= ex.max_level(); ++n) {
        for (EdgeIndex e : ex.level(n)) {
          if (n < ex.max_level() && !ex.edge_in_level(e, n + 1)) ++violations;
          const auto halo = ex.halo(n);
          if (std::find(halo.begin(), halo.end(), e) != halo.end()) ++violations;
        }
        for (EdgeIndex e : ex.halo(n)) {
          const Edge& edge = fx.graph.edge(e);
          if (ex.vertex_in_level(edge.from, n) == ex.vertex_in_level(edge.to, n)) ++violations;
        }
      }
      const auto last = ex.level(ex.max_level());
      if (last.size() != fx.graph.edge_count()) ++violations;
    }
    suite.add("graph.exhaustion_nesting", violations, 0, violations == 0);
  });

  suite.guard("graph.loop_resplit", [&] {
    const MetricGraph g({"a", "b"}, {{"loop", "a", "a", 2.0}, {"e", "a", "b", 1.0}, {"p", "a", "b", 0.5}},
                        std::string("a"));
    const MetricGraph again(g.source_vertices(), g.source_edges(), std::string("a"));
    auto multiset = [](const MetricGraph& m) {
      std::vector<std::tuple<std::string, std::string, std::string, double>> out;
      for (const Edge& e : m.edges()) out.emplace_back(e.id, m.vertex_name(e.from), m.vertex_name(e.to), e.length);
      std::sort(out.begin(), out.end());
      return out;
    };
    const bool same = multiset(g) == multiset(again);
    suite.add("graph.loop_resplit", same ? 0 : 1, 0, same, "edge multiset after re-splitting");
  });
}

// --- coeff ---------------------------------------------------------------

std::string random_expression(Rng& rng, int depth) {
  auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
  if (depth == 0 || pick(4) == 0) {
    if (pick(2) == 0) return "x";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", uniform(rng, 0.1, 3.0));
    return buf;
  }
  static const char* ops[] = {"+", "-", "*", "/", "^"};
  static const char* fns[] = {"sin", "cos", "exp", "sqrt", "abs"};
  switch (pick(3)) {
    case 0:
      return fns[pick(5)] + std::string("(") + random_expression(rng, depth - 1) + ")";
    case 1:
      return "-" + random_expression(rng, depth - 1);
    default: {
      const char* op = ops[pick(5)];
      if (*op == '^') return "(" + random_expression(rng, depth - 1) + ")^2";
      return "(" + random_expression(rng, depth - 1) + ")" + op + "(" + random_expression(rng, depth - 1) + ")";
    }
  }
}

void coeff_checks(Suite& suite, Rng& rng) {
  suite.guard("coeff.q_split", [&] {
    EdgeCoefficients c;
    c.q = Expression::parse("sin(5*x) - 0.3");
    const CoefficientField field(c);
    const MetricGraph g = families::path(3);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      const EdgeIndex e = static_cast<EdgeIndex>(t % 3);
      double a = uniform(rng, 0.0, 1.0), b = uniform(rng, 0.0, 1.0);
      if (a > b) std::swap(a, b);
      const double plus = field.edge_integral(g, e, Integrand::q_plus, a, b);
      const double minus = field.edge_integral(g, e, Integrand::q_minus, a, b);
      const double q = field.edge_integral(g, e, Integrand::q, a, b);
      worst = std::max({worst, -plus, -minus, std::abs(plus - minus - q)});
    }
    suite.add("coeff.q_split", worst, 1e-13, worst <= 1e-13, "q = q+ - q-, both nonnegative");
  });

  suite.guard("coeff.additivity", [&] {
    EdgeCoefficients c;
    c.w = Expression::parse("1 + 0.5*sin(x)");
    c.p = Expression::parse("exp(x)");
    const CoefficientField field(c);
    const MetricGraph g = families::path(1, 2.0);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      double xs[3] = {uniform(rng, 0.0, 2.0), uniform(rng, 0.0, 2.0), uniform(rng, 0.0, 2.0)};
      std::sort(xs, xs + 3);
      for (Integrand f : {Integrand::w, Integrand::inv_p}) {
        const double whole = field.edge_integral(g, 0, f, xs[0], xs[2]);
        const double parts = field.edge_integral(g, 0, f, xs[0], xs[1]) + field.edge_integral(g, 0, f, xs[1], xs[2]);
        worst = std::max(worst, std::abs(whole - parts) / std::max(std::abs(whole), 1e-300));
      }
    }
    suite.add("coeff.additivity", worst, 1e-13, worst <= 1e-13, "relative");
  });

  suite.guard("coeff.parser_roundtrip", [&] {
    double worst = 0.0;
    int mismatched_errors = 0;
    for (int t = 0; t < 50; ++t) {
      const Expression e = Expression::parse(random_expression(rng, 4));
      const Expression again = Expression::parse(e.to_string());
      for (int k = 0; k < 100; ++k) {
        const double x = uniform(rng, -3.0, 3.0);
        double u = 0.0, v = 0.0;
        bool u_fail = false, v_fail = false;
        try { u = e(x); } catch (const EvaluationError&) { u_fail = true; }
        try { v = again(x); } catch (const EvaluationError&) { v_fail = true; }
        if (u_fail != v_fail) ++mismatched_errors;
        if (!u_fail && !v_fail) worst = std::max(worst, std::abs(u - v) / std::max(1.0, std::abs(u)));
      }
    }
    const bool pass = worst <= 1e-14 && mismatched_errors == 0;
    suite.add("coeff.parser_roundtrip", worst, 1e-14, pass,
              "50 random expressions x 100 points; evaluation-error mismatches: " + std::to_string(mismatched_errors));
  });
}

// --- fem and eig ---------------------------------------------------------

void fem_checks(Suite& suite) {
  const CoefficientField field(smooth_coefficients());

  suite.guard("fem.exact_symmetry", [&] {
    double worst = 0.0;
    for (const auto& fx : fixtures()) {
      const auto forms = assemble(mesh_on(fx.graph, 0.1, whole_graph_truncation(fx.graph, true)), field);
      worst = std::max({worst, max_asymmetry(forms.K_p), max_asymmetry(forms.K_q), max_asymmetry(forms.M)});
    }
    suite.add("fem.exact_symmetry", worst, 0, worst == 0.0, "bitwise max |A - A^T|");
  });

  suite.guard("fem.constant_kernel", [&] {
    double worst = 0.0;
    for (const auto& fx : fixtures()) {
      const auto forms = assemble(mesh_on(fx.graph, 0.1, {}), field);
      const Vector r = forms.K_p * Vector::Ones(forms.K_p.cols());
      worst = std::max(worst, r.lpNorm<Eigen::Infinity>() / Eigen::MatrixXd(forms.K_p).lpNorm<Eigen::Infinity>());
    }
    suite.add("fem.constant_kernel", worst, 1e-12, worst <= 1e-12, "|K_p 1|_inf / |K_p|");
  });

  suite.guard("fem.mass_definite", [&] {
    double smallest = std::numeric_limits<double>::infinity();
    for (const auto& fx : fixtures()) {
      const auto forms = assemble(mesh_on(fx.graph, 0.1, whole_graph_truncation(fx.graph, true)), field);
      const Eigen::LDLT<Eigen::MatrixXd> ldlt{Eigen::MatrixXd(forms.M)};
      smallest = std::min(smallest, ldlt.vectorD().minCoeff());
    }
    suite.add("fem.mass_definite", smallest, 0, smallest > 0.0, "smallest LDLT pivot of M");
  });

  suite.guard("fem.domain_monotonicity", [&] {
    double worst = 0.0;
    for (const auto& fx : fixtures()) {
      DirichletTruncationSpec spec;
      std::vector<double> lambdas;
      lambdas.push_back(smallest_eigenpair(assemble(mesh_on(fx.graph, 0.1, spec), field)).lambda);
      spec = whole_graph_truncation(fx.graph, true);
      lambdas.push_back(smallest_eigenpair(assemble(mesh_on(fx.graph, 0.1, spec), field)).lambda);
      spec.cut_points.push_back(Point{0, 0.5 * fx.graph.edge(0).length});
      lambdas.push_back(smallest_eigenpair(assemble(mesh_on(fx.graph, 0.1, spec), field)).lambda);
      for (std::size_t i = 1; i < lambdas.size(); ++i) worst = std::max(worst, lambdas[i - 1] - lambdas[i]);
    }
    suite.add("fem.domain_monotonicity", worst, 1e-9, worst <= 1e-9, "largest drop after adding constraints");
  });

  auto identity_check = [&](const std::string& name, double shift, double scale) {
    suite.guard(name, [&] {
      double worst = 0.0;
      for (const auto& fx : fixtures()) {
        const Exhaustion ex = full_exhaustion(fx.graph);
        SpectralOptions options;
        options.h = 0.05;
        const auto base = inf_spectrum(fx.graph, field, ex, options);
        const auto moved = inf_spectrum(fx.graph, transformed(shift, scale), ex, options);
        for (std::size_t i = 0; i < base.rows.size(); ++i) {
          const double expected = base.rows[i].lambda + shift;
          worst = std::max(worst, std::abs(moved.rows[i].lambda - expected) / std::max(1.0, std::abs(expected)));
        }
      }
      suite.add(name, worst, 1e-12, worst <= 1e-12, "every reported eigenvalue, all fixtures");
    });
  };
  identity_check("fem.q_shift_c7", 7.0, 1.0);
  identity_check("fem.scaling_c0.3", 0.0, 0.3);
}

void eig_checks(Suite& suite) {
  const CoefficientField field(smooth_coefficients());
  suite.guard("eig.dense_oracle_gate", [&] {
    double worst_gap = 0.0, worst_residual = 0.0, worst_norm = 0.0, worst_bound = 0.0;
    int pencils = 0;
    for (const auto& fx : fixtures()) {
      for (double h : {0.5, 0.25, 0.1}) {
        for (bool bc : {true, false}) {
          const auto forms = assemble(mesh_on(fx.graph, h, whole_graph_truncation(fx.graph, bc)), field);
          if (forms.M.rows() > 200) continue;
          ++pencils;
          const SparseMatrix K = forms.stiffness();
          const EigenResult r = smallest_eigenpair(K, forms.M);
          const double dense = dense_eigenvalues(K, forms.M)[0];
          worst_gap = std::max(worst_gap, std::abs(r.lambda - dense));
          const Vector Mx = forms.M * r.vector;
          const double recomputed = (K * r.vector - r.lambda * Mx).norm() / Mx.norm();
          worst_residual = std::max(worst_residual, std::abs(recomputed - r.residual));
          worst_norm = std::max(worst_norm, std::abs(r.vector.dot(Mx) - 1.0));
          worst_bound = std::max(worst_bound, eigen_lower_bound(K, forms.M) - dense);
        }
      }
    }
    suite.add("eig.dense_oracle_gate", worst_gap, 1e-10, worst_gap <= 1e-10,
              std::to_string(pencils) + " pencils with <= 200 DOFs");
    suite.add("eig.residual_contract", worst_residual, 1e-14, worst_residual <= 1e-14);
    suite.add("eig.m_normalized", worst_norm, 1e-12, worst_norm <= 1e-12);
    suite.add("eig.lower_bound", worst_bound, 0, worst_bound <= 0.0, "lower bound minus dense minimum");
  });
}

// --- spectral ------------------------------------------------------------

void spectral_checks(Suite& suite, Rng& rng, std::size_t workers) {
  const CoefficientField field(smooth_coefficients());

  suite.guard("spectral.ap_consistency", [&] {
    const auto fxs = fixtures();
    std::vector<std::vector<double>> lambdas(fxs.size());
    for (auto& ls : lambdas) {
      for (int k = 0; k < 20; ++k) ls.push_back(uniform(rng, -3.0, 3.0));
    }
    std::vector<int> contradictions(fxs.size()), certificates(fxs.size());
    std::vector<double> min_cert(fxs.size(), std::numeric_limits<double>::infinity());
    parallel_for(fxs.size(), workers, [&](std::size_t i) {
      const Exhaustion ex = full_exhaustion(fxs[i].graph);
      SpectralOptions options;
      options.h = 0.05;
      // A level without Dirichlet nodes admits no positive solution below λ₁.
      std::size_t n = ex.max_level();
      while (n > 1 && fxs[i].graph.boundary().empty() && ex.level(n).size() == fxs[i].graph.edge_count()) --n;
      const double l1 = smallest_eigenpair(level_forms(fxs[i].graph, field, ex, n, options)).lambda;
      for (double offset : lambdas[i]) {
        const double lambda = l1 + offset;
        const ApResult r = ap_check(fxs[i].graph, field, ex, lambda, n, options);
        const ApOutcome expected = lambda < l1 - options.tol   ? ApOutcome::certificate
                                   : lambda > l1 + options.tol ? ApOutcome::refutation
                                                               : ApOutcome::indeterminate;
        if (r.outcome != expected) ++contradictions[i];
        if (r.certificate) {
          ++certificates[i];
          min_cert[i] = std::min(min_cert[i], r.certificate->min_val);
        }
      }
    });
    int total = 0, certs = 0;
    double min_val = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < fxs.size(); ++i) {
      total += contradictions[i];
      certs += certificates[i];
      min_val = std::min(min_val, min_cert[i]);
    }
    suite.add("spectral.ap_consistency", total, 0, total == 0 && min_val > 0.0,
              std::to_string(certs) + " certificates, smallest nodal value " + std::to_string(min_val));
  });

  suite.guard("spectral.persson_monotonicity", [&] {
    const MetricGraph g = families::path(20);
    const Exhaustion ex(g, 0, 20);
    SpectralOptions options;
    options.h = 0.05;
    options.workers = workers;
    const PerssonTrace trace = persson_limit(g, CoefficientField{}, ex, {{1, 2, 3}, {8, 12, 16}}, options);
    suite.add("spectral.persson_monotonicity", trace.estimate, 0, true,
              std::to_string(trace.rows.size()) + " rows, assertions held");
  });

  suite.guard("spectral.compact_perturbation", [&] {
    const MetricGraph g = families::path(12);
    const Exhaustion ex(g, 0, 12);
    CoefficientField well;
    EdgeCoefficients deep;
    deep.q = -5.0;
    well.set("e1", deep);
    SpectralOptions options;
    options.h = 0.05;
    int differing = 0;
    for (std::size_t n = 1; n <= 4; ++n) {
      for (std::size_t N : {8, 12}) {
        const auto a = annulus_forms(g, CoefficientField{}, ex, n, N, options);
        const auto b = annulus_forms(g, well, ex, n, N, options);
        const bool same = Eigen::MatrixXd(a.K_q) == Eigen::MatrixXd(b.K_q) &&
                          Eigen::MatrixXd(a.K_p) == Eigen::MatrixXd(b.K_p) &&
                          Eigen::MatrixXd(a.M) == Eigen::MatrixXd(b.M);
        if (!same) ++differing;
      }
    }
    suite.add("spectral.compact_perturbation", differing, 0, differing == 0, "pencils differing bitwise, n >= 1");
  });

  suite.guard("spectral.cutoff_contract", [&] {
    double worst = 0.0;
    for (const auto& fx : fixtures()) {
      const Exhaustion ex = full_exhaustion(fx.graph);
      for (std::size_t n = 0; n < ex.max_level(); ++n) {
        if (ex.extended(n).size() >= fx.graph.edge_count()) continue;
        const CutoffFunction phi = cutoff_build(fx.graph, field, ex, n);
        for (EdgeIndex e : ex.halo(n)) {
          const double L = fx.graph.edge(e).length;
          const bool rising = phi.piece(e) == CutoffPiece::rising;
          worst = std::max({worst, std::abs(phi(e, 0.0) - (rising ? 0.0 : 1.0)),
                            std::abs(phi(e, L) - (rising ? 1.0 : 0.0))});
          const double slope = std::abs(phi.weighted_derivative(e, 0.0));
          for (int k = 0; k <= 32; ++k) {
            const double x = L * k / 32;
            const double v = phi(e, x);
            worst = std::max({worst, -v, v - 1.0, std::abs(std::abs(phi.weighted_derivative(e, x)) - slope)});
          }
          worst = std::max(worst, std::abs(slope - 1.0 / phi.halo_integral(e)));
        }
      }
    }
    suite.add("spectral.cutoff_contract", worst, 1e-12, worst <= 1e-12, "range, endpoints, constant slope");
  });

  suite.guard("spectral.sobolev_inequality", [&] {
    const MetricGraph g = families::star(3);
    const double eps = 1.0;
    const SobolevEstimate est = sobolev_constant(g, field, eps);
    const auto mesh = mesh_on(g, 0.05, {});
    int violations = 0;
    double worst_ratio = 0.0;
    std::normal_distribution<double> normal;
    for (int t = 0; t < 200; ++t) {
      Vector f(static_cast<Eigen::Index>(mesh->node_count()));
      for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = normal(rng) * (1.0 + 10.0 * (t % 5 == 0));
      for (std::size_t local = 0; local < mesh->edges().size(); ++local) {
        const EdgeField coeff = field.on(g, mesh->edges()[local]);
        const auto xs = mesh->offsets(local);
        const auto ids = mesh->edge_nodes(local);
        double sup = 0.0, grad = 0.0, mass = 0.0;
        for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
          const double fa = f[static_cast<Eigen::Index>(ids[k])], fb = f[static_cast<Eigen::Index>(ids[k + 1])];
          const double a = xs[k], width = xs[k + 1] - xs[k], slope = (fb - fa) / width;
          sup = std::max({sup, fa * fa, fb * fb});
          grad += coeff.integrate(a, xs[k + 1], [&](double, const CoefficientSample& c) { return c.p * slope * slope; });
          mass += coeff.integrate(a, xs[k + 1], [&](double x, const CoefficientSample& c) {
            const double v = fa + slope * (x - a);
            return c.w * v * v;
          });
        }
        const double rhs = eps * grad + est.C_epsilon * mass;
        worst_ratio = std::max(worst_ratio, sup / rhs);
        if (sup > rhs) ++violations;
      }
    }
    suite.add("spectral.sobolev_inequality", violations, 0, violations == 0,
              "C_eps = " + std::to_string(est.C_epsilon) + ", worst sup/rhs = " + std::to_string(worst_ratio));
  });

  suite.guard("spectral.sobolev_monotone", [&] {
    const MetricGraph g = families::star(3);
    double previous = std::numeric_limits<double>::infinity();
    double worst = 0.0;
    for (double eps : {0.25, 0.5, 1.0, 2.0}) {
      const double C = sobolev_constant(g, field, eps).C_epsilon;
      worst = std::max(worst, C - previous);
      previous = C;
    }
    suite.add("spectral.sobolev_monotone", worst, 0, worst <= 0.0, "largest increase of C_eps in eps");
  });

  suite.guard("spectral.ground_state_refinement", [&] {
    const MetricGraph g = families::path(1);
    const Exhaustion ex(g, 0, 1);
    std::vector<double> residuals;
    for (double h : {0.04, 0.02, 0.01}) {
      SpectralOptions options;
      options.h = h;
      const PositiveSolutionCert cert = positive_solution(g, field, ex, 1, -1.0, options);
      Vector eta(static_cast<Eigen::Index>(cert.mesh->node_count()));
      for (std::size_t i = 0; i < cert.mesh->node_count(); ++i) {
        const double x = cert.mesh->node(i).offset;
        eta[static_cast<Eigen::Index>(i)] = std::max(0.0, 0.3 - std::abs(x - 0.5));
      }
      residuals.push_back(ground_state_transform_check(field, cert, eta).residual);
    }
    const double ratio = std::min(residuals[0] / residuals[1], residuals[1] / residuals[2]);
    suite.add("spectral.ground_state_refinement", ratio, 1.0, ratio > 1.0, "smallest residual ratio per halving");
  });
}

}  // namespace

std::vector<VerifyCheck> verify(std::uint64_t seed, std::size_t workers) {
  Suite suite;
  Rng rng(seed);
  graph_checks(suite, rng);
  coeff_checks(suite, rng);
  fem_checks(suite);
  eig_checks(suite);
  spectral_checks(suite, rng, workers);
  return suite.take();
}

}  // namespace qgs
