#include "qgs/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/SparseCholesky>

#include "qgs/error.hpp"
#include "qgs/parallel.hpp"

namespace qgs {
namespace {

EigenOptions eigen_options(const SpectralOptions& options) {
  EigenOptions out;
  out.tol = options.solver_tol;
  out.max_iter = options.max_iter;
  return out;
}

void check_options(const SpectralOptions& options) {
  if (!(options.h > 0.0)) throw ValidationError("mesh size h must be positive");
  if (!(options.tol > 0.0)) throw ValidationError("tolerance must be positive");
}

AssembledForms forms_on(const MetricGraph& graph, const CoefficientField& field, std::span<const EdgeIndex> edges,
                        const DirichletTruncationSpec& constraints, double h, Domain domain) {
  auto mesh = std::make_shared<const GraphMesh>(build_mesh(graph, edges, h, constraints));
  if (mesh->dof_count() == 0) throw ValidationError("truncated problem has no free degrees of freedom");
  return assemble(std::move(mesh), field, domain);
}

// Warnings for selections that reach the edge of a finite host standing in
// for an infinite graph. Graphs without declared host boundary are compact.
void host_warnings(const MetricGraph& graph, std::span<const EdgeIndex> edges, const std::string& what,
                   std::vector<std::string>& warnings) {
  if (graph.host_boundary().empty()) return;
  if (edges.size() == graph.edge_count()) {
    warnings.push_back(what + " covers the whole host graph");
    return;
  }
  for (EdgeIndex e : edges) {
    const Edge& edge = graph.edge(e);
    if (graph.is_host_boundary(edge.from) || graph.is_host_boundary(edge.to)) {
      warnings.push_back(what + " touches the host boundary");
      return;
    }
  }
}

std::string describe_node(const GraphMesh& mesh, std::size_t node) {
  const MeshNode& n = mesh.node(node);
  std::ostringstream out;
  if (n.vertex) {
    out << "vertex '" << mesh.graph().vertex_name(*n.vertex) << "'";
  } else {
    out << "edge '" << mesh.graph().edge(n.edge).id << "' at offset " << n.offset;
  }
  return out.str();
}

PositiveSolutionCert solve_positive(const AssembledForms& forms, const CoefficientField& field, VertexIndex root,
                                    std::size_t level, double lambda) {
  const GraphMesh& mesh = *forms.mesh;
  if (mesh.constrained_nodes().empty()) {
    throw ValidationError("positive solution needs Dirichlet nodes to carry boundary data");
  }
  const auto root_node = mesh.vertex_node(root);
  if (!root_node) throw ValidationError("the exhaustion root is not in the mesh of Γ_n");

  SparseMatrix A = forms.stiffness() - lambda * forms.M;
  const SparseMatrix B = forms.K_p_coupling + forms.K_q_coupling - lambda * forms.M_coupling;
  const Vector ones = Vector::Ones(B.cols());
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> solver(A);
  if (solver.info() != Eigen::Success || !(solver.vectorD().minCoeff() > 0.0)) {
    throw NumericalError("K - lambda*M is not positive definite; lambda is too close to lambda_1");
  }
  const Vector free = solver.solve(Vector(-(B * ones)));

  PositiveSolutionCert cert;
  cert.lambda = lambda;
  cert.level = level;
  cert.values = mesh.expand(free, 1.0);
  const double scale = cert.values[static_cast<Eigen::Index>(*root_node)];
  if (!(scale > 0.0)) {
    throw NumericalError("positive solution is not positive at the root (value " + std::to_string(scale) + ")");
  }
  cert.values /= scale;
  cert.values[static_cast<Eigen::Index>(*root_node)] = 1.0;

  Eigen::Index arg_min = 0;
  cert.min_val = cert.values.minCoeff(&arg_min);
  cert.max_val = cert.values.maxCoeff();
  cert.positive = cert.min_val > 0.0;
  if (!cert.positive) {
    std::ostringstream msg;
    msg << "discrete positive solution has a nonpositive node: y = " << cert.min_val << " at "
        << describe_node(mesh, static_cast<std::size_t>(arg_min)) << " (lambda = " << lambda
        << ", level " << level << ", h = " << mesh.max_cell_size()
        << "); the discrete maximum principle failed, refine the mesh";
    throw NumericalError(msg.str());
  }
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    const MeshNode& node = mesh.node(i);
    if (node.vertex && !node.constrained) {
      cert.kirchhoff.emplace_back(*node.vertex, kirchhoff_residual(mesh, field, cert.values, *node.vertex));
    }
  }
  cert.mesh = forms.mesh;
  return cert;
}

double lambda1(const AssembledForms& forms, const SpectralOptions& options) {
  return smallest_eigenpair(forms, eigen_options(options)).lambda;
}

}  // namespace

AssembledForms level_forms(const MetricGraph& graph, const CoefficientField& field, const Exhaustion& exhaustion,
                           std::size_t n, const SpectralOptions& options) {
  check_options(options);
  const auto edges = exhaustion.level(n);
  if (edges.empty()) throw ValidationError("level " + std::to_string(n) + " of the exhaustion is empty");
  const Domain domain = edges.size() == graph.edge_count() ? Domain::whole_graph : Domain::subgraph;
  return forms_on(graph, field, edges, level_truncation(graph, exhaustion, n, options.dirichlet_boundary),
                  options.h, domain);
}

AssembledForms annulus_forms(const MetricGraph& graph, const CoefficientField& field,
                             const Exhaustion& exhaustion, std::size_t n, std::size_t N,
                             const SpectralOptions& options) {
  check_options(options);
  const std::vector<EdgeIndex> edges = exhaustion.annulus(n, N);
  if (edges.empty()) {
    throw ValidationError("annulus between levels " + std::to_string(n) + " and " + std::to_string(N) +
                          " is empty");
  }
  return forms_on(graph, field, edges, annulus_truncation(graph, exhaustion, n, N, options.dirichlet_boundary),
                  options.h, Domain::complement);
}

SpectralReport inf_spectrum(const MetricGraph& graph, const CoefficientField& field, const Exhaustion& exhaustion,
                            const SpectralOptions& options, std::span<const std::size_t> levels) {
  check_options(options);
  std::vector<std::size_t> ns(levels.begin(), levels.end());
  if (ns.empty()) {
    for (std::size_t n = 1; n <= exhaustion.max_level(); ++n) ns.push_back(n);
  }
  std::erase_if(ns, [&](std::size_t n) { return n > exhaustion.max_level() || exhaustion.level(n).empty(); });
  if (ns.empty()) throw ValidationError("no nonempty exhaustion level to solve on");

  SpectralReport report;
  report.rows.resize(ns.size());
  parallel_for(ns.size(), options.workers, [&](std::size_t i) {
    const AssembledForms forms = level_forms(graph, field, exhaustion, ns[i], options);
    const EigenResult eig = smallest_eigenpair(forms, eigen_options(options));
    report.rows[i] = SpectrumRow{ns[i], eig.lambda, eig.residual, forms.mesh->dof_count()};
  });
  for (std::size_t n : ns) host_warnings(graph, exhaustion.level(n), "level " + std::to_string(n), report.warnings);

  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    const double rise = report.rows[i].lambda - report.rows[i - 1].lambda;
    if (rise > 10.0 * options.tol) {
      std::ostringstream msg;
      msg << "lambda_1(level " << report.rows[i].n << ") = " << report.rows[i].lambda << " exceeds lambda_1(level "
          << report.rows[i - 1].n << ") = " << report.rows[i - 1].lambda << " by " << rise;
      throw NumericalError(msg.str());
    }
  }
  report.estimate = report.rows.back().lambda;
  report.error_proxy =
      report.rows.size() > 1 ? std::abs(report.rows[report.rows.size() - 2].lambda - report.estimate) : 0.0;
  return report;
}

PositiveSolutionCert positive_solution(const MetricGraph& graph, const CoefficientField& field,
                                       const Exhaustion& exhaustion, std::size_t n, double lambda,
                                       const SpectralOptions& options) {
  const AssembledForms forms = level_forms(graph, field, exhaustion, n, options);
  const double bottom = lambda1(forms, options);
  if (!(lambda < bottom - options.tol)) {
    std::ostringstream msg;
    msg << "lambda = " << lambda << " is not below lambda_1(level " << n << ") - tol = " << bottom - options.tol;
    throw ValidationError(msg.str());
  }
  return solve_positive(forms, field, exhaustion.root(), n, lambda);
}

std::string to_string(ApOutcome outcome) {
  switch (outcome) {
    case ApOutcome::certificate:
      return "certificate";
    case ApOutcome::refutation:
      return "refutation";
    case ApOutcome::indeterminate:
      return "indeterminate";
  }
  return "?";
}

ApResult ap_check(const MetricGraph& graph, const CoefficientField& field, const Exhaustion& exhaustion,
                  double lambda, std::size_t n, const SpectralOptions& options) {
  const AssembledForms forms = level_forms(graph, field, exhaustion, n, options);
  ApResult result;
  result.lambda = lambda;
  result.lambda1 = lambda1(forms, options);
  if (lambda < result.lambda1 - options.tol) {
    result.outcome = ApOutcome::certificate;
    result.certificate = solve_positive(forms, field, exhaustion.root(), n, lambda);
  } else if (lambda > result.lambda1 + options.tol) {
    result.outcome = ApOutcome::refutation;
  } else {
    result.outcome = ApOutcome::indeterminate;
  }
  return result;
}

GroundStateCheck ground_state_transform_check(const CoefficientField& field, const PositiveSolutionCert& cert,
                                              const Vector& trial) {
  if (!cert.mesh) throw ValidationError("certificate has no mesh");
  const GraphMesh& mesh = *cert.mesh;
  if (static_cast<std::size_t>(trial.size()) != mesh.node_count()) {
    throw ValidationError("trial function size does not match the certificate mesh");
  }
  const double scale = trial.cwiseAbs().maxCoeff();
  for (std::size_t node : mesh.constrained_nodes()) {
    if (std::abs(trial[static_cast<Eigen::Index>(node)]) > 1e-14 * scale) {
      throw ValidationError("trial function must vanish on the Dirichlet nodes (" + describe_node(mesh, node) + ")");
    }
  }
  for (std::size_t i = 0; i < mesh.node_count(); ++i) {
    if (!(cert.values[static_cast<Eigen::Index>(i)] > 0.0)) {
      throw ValidationError("positive solution is not positive at " + describe_node(mesh, i));
    }
  }

  const double lambda = cert.lambda;
  GroundStateCheck out;
  for (std::size_t local = 0; local < mesh.edges().size(); ++local) {
    const EdgeField coeff = field.on(mesh.graph(), mesh.edges()[local]);
    const auto xs = mesh.offsets(local);
    const auto ids = mesh.edge_nodes(local);
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
      const double a = xs[k];
      const double width = xs[k + 1] - a;
      const double eta_a = trial[static_cast<Eigen::Index>(ids[k])];
      const double eta_b = trial[static_cast<Eigen::Index>(ids[k + 1])];
      const double y_a = cert.values[static_cast<Eigen::Index>(ids[k])];
      const double y_b = cert.values[static_cast<Eigen::Index>(ids[k + 1])];
      const double g_a = eta_a / y_a;
      const double g_b = eta_b / y_b;
      const double deta = (eta_b - eta_a) / width;
      const double dg = (g_b - g_a) / width;
      auto lerp = [a, width](double u, double v, double x) { return u + (v - u) * (x - a) / width; };

      out.form += coeff.integrate(a, xs[k + 1], [&](double x, const CoefficientSample& c) {
        const double eta = lerp(eta_a, eta_b, x);
        return c.p * deta * deta + c.q * eta * eta;
      });
      out.transformed += coeff.integrate(a, xs[k + 1], [&](double x, const CoefficientSample& c) {
        const double eta = lerp(eta_a, eta_b, x);
        const double y = lerp(y_a, y_b, x);
        return c.p * dg * dg * y * y + lambda * c.w * eta * eta;
      });
    }
  }
  out.residual = std::abs(out.form - out.transformed) / (std::abs(out.form) + 1.0);
  return out;
}

HarnackReport harnack_probe(const Exhaustion& exhaustion, std::span<const PositiveSolutionCert> certs,
                            std::size_t m) {
  if (certs.empty()) throw ValidationError("harnack_probe needs at least one certificate");
  HarnackReport report;
  report.C_m1 = -std::numeric_limits<double>::infinity();
  report.C_m2 = std::numeric_limits<double>::infinity();
  const double lambda = certs.front().lambda;
  for (const auto& cert : certs) {
    if (cert.lambda != lambda) throw ValidationError("certificates have mismatched lambda");
    if (!cert.positive || !cert.mesh) throw ValidationError("certificate is not a positive solution");
    if (cert.level < m) {
      throw ValidationError("certificate of level " + std::to_string(cert.level) + " does not cover level " +
                            std::to_string(m));
    }
    const GraphMesh& mesh = *cert.mesh;
    const auto root = mesh.vertex_node(exhaustion.root());
    if (!root || cert.values[static_cast<Eigen::Index>(*root)] != 1.0) {
      throw ValidationError("certificate is not normalized to y(o) = 1");
    }
    double sup = cert.values[static_cast<Eigen::Index>(*root)];
    double inf = sup;
    for (EdgeIndex e : exhaustion.level(m)) {
      const auto local = mesh.local_edge(e);
      if (!local) throw ValidationError("certificate mesh does not cover level " + std::to_string(m));
      for (std::size_t node : mesh.edge_nodes(*local)) {
        sup = std::max(sup, cert.values[static_cast<Eigen::Index>(node)]);
        inf = std::min(inf, cert.values[static_cast<Eigen::Index>(node)]);
      }
    }
    report.C_m1 = std::max(report.C_m1, sup);
    report.C_m2 = std::min(report.C_m2, inf);
    report.rows.push_back(HarnackRow{cert.level, sup, inf, report.C_m1, report.C_m2});
  }
  return report;
}

PerssonTrace persson_limit(const MetricGraph& graph, const CoefficientField& field, const Exhaustion& exhaustion,
                           const PerssonSchedule& schedule, const SpectralOptions& options) {
  check_options(options);
  const auto& ns = schedule.levels;
  const auto& Ns = schedule.outer;
  if (ns.empty() || Ns.empty()) throw ValidationError("Persson schedule needs inner and outer levels");
  for (std::size_t i = 1; i < ns.size(); ++i) {
    if (ns[i] <= ns[i - 1]) throw ValidationError("inner levels must be strictly increasing");
  }
  for (std::size_t i = 1; i < Ns.size(); ++i) {
    if (Ns[i] <= Ns[i - 1]) throw ValidationError("outer levels must be strictly increasing");
  }
  if (Ns.front() <= ns.back()) throw ValidationError("every outer level N must exceed every inner level n");
  if (Ns.back() > exhaustion.max_level()) {
    throw ValidationError("outer level " + std::to_string(Ns.back()) + " exceeds the exhaustion depth " +
                          std::to_string(exhaustion.max_level()));
  }

  PerssonTrace trace;
  host_warnings(graph, exhaustion.level(Ns.back()), "outer level " + std::to_string(Ns.back()), trace.warnings);

  std::vector<std::vector<PerssonRow>> per_level(ns.size());
  std::vector<PerssonLevel> summary(ns.size());
  parallel_for(ns.size(), options.workers, [&](std::size_t i) {
    const std::size_t n = ns[i];
    PerssonLevel level{n, 0, 0.0, 0.0, false};
    for (std::size_t N : Ns) {
      const AssembledForms forms = annulus_forms(graph, field, exhaustion, n, N, options);
      const EigenResult eig = smallest_eigenpair(forms, eigen_options(options));
      auto& rows = per_level[i];
      if (!rows.empty()) {
        const double decrement = rows.back().lambda - eig.lambda;
        if (decrement < -10.0 * options.tol) {
          std::ostringstream msg;
          msg << "lambda_{n,N} increased in N at n = " << n << ": lambda(" << rows.back().N
              << ") = " << rows.back().lambda << ", lambda(" << N << ") = " << eig.lambda
              << "; the mesh is under-resolved";
          throw NumericalError(msg.str());
        }
        level.decrement = decrement;
      }
      rows.push_back(PerssonRow{n, N, eig.lambda, eig.residual, forms.mesh->dof_count()});
      level.N = N;
      level.lambda = eig.lambda;
      if (rows.size() > 1 && std::abs(level.decrement) < options.tol) {
        level.settled = true;
        break;
      }
    }
    summary[i] = level;
  });

  // Monotonicity in n: same-N rows and the per-level limits.
  for (std::size_t i = 1; i < ns.size(); ++i) {
    for (const PerssonRow& next : per_level[i]) {
      for (const PerssonRow& prev : per_level[i - 1]) {
        if (prev.N == next.N && next.lambda < prev.lambda - 10.0 * options.tol) {
          std::ostringstream msg;
          msg << "lambda_{n,N} decreased in n at N = " << next.N << ": lambda(" << prev.n << ") = " << prev.lambda
              << ", lambda(" << next.n << ") = " << next.lambda;
          throw NumericalError(msg.str());
        }
      }
    }
    if (summary[i].lambda < summary[i - 1].lambda - 10.0 * options.tol) {
      std::ostringstream msg;
      msg << "lambda_n decreased from " << summary[i - 1].lambda << " (n = " << summary[i - 1].n << ") to "
          << summary[i].lambda << " (n = " << summary[i].n << ")";
      throw NumericalError(msg.str());
    }
  }

  for (auto& rows : per_level) trace.rows.insert(trace.rows.end(), rows.begin(), rows.end());
  trace.levels = std::move(summary);
  const PerssonLevel& last = trace.levels.back();
  trace.estimate = last.lambda;
  trace.bracket_high = last.lambda;
  trace.bracket_low = last.lambda - std::max(0.0, last.decrement);
  return trace;
}

double CutoffFunction::operator()(EdgeIndex e, double x) const {
  const Edge& edge = graph_->edge(e);
  if (!(x >= 0.0 && x <= edge.length)) throw ValidationError("cutoff evaluated off its edge");
  switch (pieces_.at(e)) {
    case CutoffPiece::zero:
      return 0.0;
    case CutoffPiece::one:
      return 1.0;
    case CutoffPiece::rising:
    case CutoffPiece::falling:
      break;
  }
  const EdgeField coeff = field_->on(*graph_, e);
  auto density = [](double, const CoefficientSample& c) { return std::sqrt(c.w / c.p); };
  // Integral from the endpoint in Γ_n up to x.
  const double partial = pieces_[e] == CutoffPiece::rising ? coeff.integrate(0.0, x, density)
                                                           : coeff.integrate(x, edge.length, density);
  return partial / totals_[e];
}

double CutoffFunction::weighted_derivative(EdgeIndex e, double x) const {
  const CutoffPiece piece = pieces_.at(e);
  if (piece == CutoffPiece::zero || piece == CutoffPiece::one) return 0.0;
  const EdgeField coeff = field_->on(*graph_, e);
  const double p = coeff.p(x);
  const double w = coeff.w(x);
  const double slope = std::sqrt(w / p) / totals_[e];
  const double value = std::sqrt(p / w) * slope;
  return piece == CutoffPiece::rising ? value : -value;
}

CutoffFunction cutoff_build(const MetricGraph& graph, const CoefficientField& field, const Exhaustion& exhaustion,
                            std::size_t n) {
  if (n > exhaustion.max_level()) {
    throw ValidationError("cutoff level " + std::to_string(n) + " exceeds the exhaustion depth");
  }
  CutoffFunction phi;
  phi.graph_ = &graph;
  phi.field_ = &field;
  phi.level_ = n;
  phi.pieces_.assign(graph.edge_count(), CutoffPiece::one);
  phi.totals_.assign(graph.edge_count(), 0.0);
  for (EdgeIndex e : exhaustion.level(n)) phi.pieces_[e] = CutoffPiece::zero;
  for (EdgeIndex e : exhaustion.halo(n)) {
    const Edge& edge = graph.edge(e);
    phi.pieces_[e] = exhaustion.vertex_in_level(edge.from, n) ? CutoffPiece::rising : CutoffPiece::falling;
    const EdgeField coeff = field.on(graph, e);
    const double total = coeff.integrate(0.0, edge.length, [](double, const CoefficientSample& c) {
      if (!(c.p > 0.0) || !(c.w > 0.0)) throw HypothesisError("cutoff needs p > 0 and w > 0");
      return std::sqrt(c.w / c.p);
    });
    if (!(total > 0.0)) {
      throw HypothesisError("halo edge '" + edge.id + "' has vanishing integral of sqrt(w/p)");
    }
    phi.totals_[e] = total;
    constexpr int kSamples = 65;
    for (int k = 0; k < kSamples; ++k) {
      const double x = edge.length * k / (kSamples - 1);
      phi.sup_ = std::max(phi.sup_, std::abs(phi.weighted_derivative(e, x)));
    }
  }
  return phi;
}

SobolevEstimate sobolev_constant(const MetricGraph& graph, const CoefficientField& field, double epsilon,
                                 SobolevOptions options) {
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  const double d_low = graph.min_edge_length();
  const int samples = std::max(options.window_samples, 2);

  // Window starts on [0, |e| - width]: a uniform grid plus starts and ends
  // aligned with coefficient breakpoints.
  auto starts = [&](const EdgeField& coeff, double width) {
    const double last = coeff.length() - width;
    std::vector<double> out;
    for (int k = 0; k < samples; ++k) out.push_back(last * k / (samples - 1));
    for (double b : coeff.breakpoints(0.0, coeff.length())) {
      out.push_back(std::clamp(b, 0.0, last));
      out.push_back(std::clamp(b - width, 0.0, last));
    }
    return out;
  };
  auto max_window = [&](Integrand which, double width) {
    double out = -std::numeric_limits<double>::infinity();
    for (EdgeIndex e = 0; e < graph.edge_count(); ++e) {
      const EdgeField coeff = field.on(graph, e);
      for (double s : starts(coeff, width)) out = std::max(out, coeff.integral(which, s, s + width));
    }
    return out;
  };
  auto min_window = [&](Integrand which, double width) {
    double out = std::numeric_limits<double>::infinity();
    for (EdgeIndex e = 0; e < graph.edge_count(); ++e) {
      const EdgeField coeff = field.on(graph, e);
      for (double s : starts(coeff, width)) out = std::min(out, coeff.integral(which, s, s + width));
    }
    return out;
  };
  auto admissible = [&](double delta) { return max_window(Integrand::inv_p, delta) < 0.5 * epsilon; };

  // δ < d_*/2 strictly.
  double hi = 0.5 * d_low;
  double lo = 0.0;
  const double top = std::nextafter(hi, 0.0);
  if (admissible(top)) {
    lo = top;
  } else {
    for (int k = 0; k < options.bisection_steps; ++k) {
      const double mid = 0.5 * (lo + hi);
      (admissible(mid) ? lo : hi) = mid;
    }
  }
  if (!(lo > 0.0)) {
    throw HypothesisError("no admissible window length: the integral of 1/p is not small on short windows");
  }

  SobolevEstimate out;
  out.epsilon = epsilon;
  out.delta = lo;
  out.c = min_window(Integrand::w, 0.5 * lo);
  if (!(out.c > 0.0)) throw HypothesisError("the integral of w over short windows is not bounded below");
  out.C_epsilon = 2.0 / out.c;
  return out;
}

}  // namespace qgs
