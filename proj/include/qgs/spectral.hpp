#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qgs/coeff.hpp"
#include "qgs/eig.hpp"
#include "qgs/fem.hpp"
#include "qgs/graph.hpp"

namespace qgs {

struct SpectralOptions {
  double h = 0.02;                 // target mesh cell length
  double tol = 1e-6;               // decision band, decrement and monotonicity tolerance
  double solver_tol = 1e-10;       // eigensolver residual tolerance
  std::size_t max_iter = 500;
  bool dirichlet_boundary = true;  // Dirichlet at ∂Γ (t_q); false gives s_q
  std::size_t workers = 1;
};

/// Pencil of the problem on Γ_n, Dirichlet where Γ_n meets the rest of Γ.
AssembledForms level_forms(const MetricGraph& graph, const CoefficientField& field, const Exhaustion& exhaustion,
                           std::size_t n, const SpectralOptions& options);
/// Pencil of the problem on Γ_N \ Γ_n, Dirichlet on both interfaces.
AssembledForms annulus_forms(const MetricGraph& graph, const CoefficientField& field,
                             const Exhaustion& exhaustion, std::size_t n, std::size_t N,
                             const SpectralOptions& options);

// --- inf σ ------------------------------------------------------------------

struct SpectrumRow {
  std::size_t n = 0;
  double lambda = 0.0;
  double residual = 0.0;
  std::size_t dofs = 0;
};

struct SpectralReport {
  std::vector<SpectrumRow> rows;
  double estimate = 0.0;     // λ₁ on the largest level
  double error_proxy = 0.0;  // last decrement
  std::vector<std::string> warnings;
};

/// λ₁(Γ_n) for every nonempty level n in `levels` (all levels 1..max when
/// empty). The sequence is nonincreasing in n; a rise beyond 10·tol raises
/// NumericalError.
SpectralReport inf_spectrum(const MetricGraph& graph, const CoefficientField& field, const Exhaustion& exhaustion,
                            const SpectralOptions& options, std::span<const std::size_t> levels = {});

// --- Allegretto-Piepenbrink -------------------------------------------------

struct PositiveSolutionCert {
  double lambda = 0.0;
  std::size_t level = 0;
  std::shared_ptr<const GraphMesh> mesh;
  Vector values;       // nodal values on every mesh node, y(o) = 1
  double min_val = 0.0;
  double max_val = 0.0;
  std::vector<std::pair<VertexIndex, double>> kirchhoff;  // per free vertex
  bool positive = false;
};

/// Solves (K − λM)y = 0 on the free nodes of Γ_n with y ≡ 1 on its Dirichlet
/// nodes, then scales so that y(o) = 1. Requires λ < λ₁(Γ_n) − tol. Raises
/// NumericalError if a nodal value is not positive.
PositiveSolutionCert positive_solution(const MetricGraph& graph, const CoefficientField& field,
                                       const Exhaustion& exhaustion, std::size_t n, double lambda,
                                       const SpectralOptions& options);

enum class ApOutcome { certificate, refutation, indeterminate };
std::string to_string(ApOutcome outcome);

struct ApResult {
  ApOutcome outcome = ApOutcome::indeterminate;
  double lambda = 0.0;
  double lambda1 = 0.0;  // λ₁ of the Dirichlet problem on Γ_n
  std::optional<PositiveSolutionCert> certificate;
};

/// Certificate when λ < λ₁ − tol, refutation when λ > λ₁ + tol, otherwise
/// indeterminate.
ApResult ap_check(const MetricGraph& graph, const CoefficientField& field, const Exhaustion& exhaustion,
                  double lambda, std::size_t n, const SpectralOptions& options);

struct GroundStateCheck {
  double form = 0.0;         // ∫ p|η′|² + q|η|²
  double transformed = 0.0;  // ∫ p|g′|²y² + λ ∫ w|η|²,  g = η/y
  double residual = 0.0;     // |form − transformed| / (|form| + 1)
};

/// Evaluates both sides of the ground-state transform identity for a trial
/// nodal function η on the certificate's mesh. η must vanish on constrained
/// nodes.
GroundStateCheck ground_state_transform_check(const CoefficientField& field, const PositiveSolutionCert& cert,
                                              const Vector& trial);

struct HarnackRow {
  std::size_t n = 0;
  double sup = 0.0;  // sup of y_n over Γ_m
  double inf = 0.0;  // inf of y_n over Γ_m
  double C_m1 = 0.0; // running max of sup
  double C_m2 = 0.0; // running min of inf
};

struct HarnackReport {
  double C_m1 = 0.0;
  double C_m2 = 0.0;
  std::vector<HarnackRow> rows;
};

/// Two-sided bounds of normalized positive solutions over Γ_m, across levels.
HarnackReport harnack_probe(const Exhaustion& exhaustion, std::span<const PositiveSolutionCert> certs,
                            std::size_t m);

// --- Persson ----------------------------------------------------------------

struct PerssonSchedule {
  std::vector<std::size_t> levels;  // n
  std::vector<std::size_t> outer;   // N, each N > every n
};

struct PerssonRow {
  std::size_t n = 0;
  std::size_t N = 0;
  double lambda = 0.0;
  double residual = 0.0;
  std::size_t dofs = 0;
};

struct PerssonLevel {
  std::size_t n = 0;
  std::size_t N = 0;        // last outer level solved
  double lambda = 0.0;      // λ_{n,N} at that level
  double decrement = 0.0;   // λ_{n,N_prev} − λ_{n,N}
  bool settled = false;     // decrement fell below tol
};

struct PerssonTrace {
  std::vector<PerssonRow> rows;
  std::vector<PerssonLevel> levels;
  double estimate = 0.0;
  double bracket_low = 0.0;
  double bracket_high = 0.0;
  std::vector<std::string> warnings;
};

/// λ_{n,N} = λ₁(Γ_N \ Γ_n) over the schedule. For each n, N increases until
/// the decrement drops below tol. Monotonicity in N and in n is asserted;
/// violations beyond 10·tol raise NumericalError.
PerssonTrace persson_limit(const MetricGraph& graph, const CoefficientField& field, const Exhaustion& exhaustion,
                           const PerssonSchedule& schedule, const SpectralOptions& options);

// --- Cutoff -----------------------------------------------------------------

enum class CutoffPiece { zero, one, rising, falling };

/// φ_n: 0 on Γ_n, 1 off Γ̃_n, and on a halo edge the normalized integral of
/// √(w/p) measured from its endpoint in Γ_n. Holds views of the graph and
/// field, which must outlive it.
class CutoffFunction {
 public:
  std::size_t level() const { return level_; }
  CutoffPiece piece(EdgeIndex e) const { return pieces_.at(e); }
  /// ∫_e √(w/p) on a halo edge, 0 elsewhere.
  double halo_integral(EdgeIndex e) const { return totals_.at(e); }

  double operator()(EdgeIndex e, double x) const;
  /// (√p/√w) φ_n′ at x.
  double weighted_derivative(EdgeIndex e, double x) const;
  /// Sampled sup of |(√p/√w) φ_n′| over all edges.
  double sup_weighted_derivative() const { return sup_; }

 private:
  friend CutoffFunction cutoff_build(const MetricGraph&, const CoefficientField&, const Exhaustion&, std::size_t);

  const MetricGraph* graph_ = nullptr;
  const CoefficientField* field_ = nullptr;
  std::size_t level_ = 0;
  std::vector<CutoffPiece> pieces_;
  std::vector<double> totals_;
  double sup_ = 0.0;
};

CutoffFunction cutoff_build(const MetricGraph& graph, const CoefficientField& field, const Exhaustion& exhaustion,
                            std::size_t n);
CutoffFunction cutoff_build(MetricGraph&&, const CoefficientField&, const Exhaustion&, std::size_t) = delete;
CutoffFunction cutoff_build(const MetricGraph&, CoefficientField&&, const Exhaustion&, std::size_t) = delete;

// --- Sobolev-type bound -----------------------------------------------------

struct SobolevEstimate {
  double epsilon = 0.0;
  double delta = 0.0;
  double c = 0.0;
  double C_epsilon = 0.0;  // 2 / c
};

struct SobolevOptions {
  int window_samples = 129;  // window start positions per edge
  int bisection_steps = 60;
};

/// Constant C_ε with sup_e |f|² ≤ ε ∫_e p|f′|² + C_ε ∫_e w|f|² on every edge.
///
/// δ is the largest value below d_*/2 (found by bisection) such that every
/// window of length δ inside an edge has ∫ 1/p < ε/2; c is the smallest ∫ w
/// over windows of length δ/2.
SobolevEstimate sobolev_constant(const MetricGraph& graph, const CoefficientField& field, double epsilon,
                                 SobolevOptions options = {});

}  // namespace qgs
