#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qgs/error.hpp"
#include "qgs/expression.hpp"
#include "qgs/graph.hpp"

namespace qgs {

/// Step function on an edge: values[i] holds on [breaks[i], breaks[i+1]).
/// breaks[0] is 0 and breaks are strictly increasing.
struct Piecewise {
  std::vector<double> breaks;
  std::vector<double> values;

  double operator()(double x) const;
};

/// One of p, q, w on one document edge, in that edge's coordinate.
class CoefficientSpec {
 public:
  CoefficientSpec(double value = 0.0) : impl_(value) {}  // NOLINT: numbers are specs
  CoefficientSpec(Piecewise table);
  CoefficientSpec(Expression expr) : impl_(std::move(expr)) {}

  /// number | {"piecewise": [[break, value], ...]} | {"expr": "..."}
  static CoefficientSpec from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  double operator()(double x) const;

  /// True for constants and step functions: quadrature on a breakpoint-aligned
  /// panel is then exact for polynomial weights.
  bool is_piecewise_constant() const;
  /// Jump locations strictly inside (a, b).
  void breakpoints(double a, double b, std::vector<double>& out) const;

 private:
  std::variant<double, Piecewise, Expression> impl_;
};

struct EdgeCoefficients {
  CoefficientSpec p{1.0};
  CoefficientSpec q{0.0};
  CoefficientSpec w{1.0};
};

enum class Integrand { p, inv_p, q, q_plus, q_minus, w };

struct CoefficientSample {
  double p;
  double q;
  double w;
};

/// Composite Gauss-Legendre rule. For expression coefficients each initial
/// panel is halved until the halves agree with the whole to rel_tol (relative
/// to the integral of |f|), at most max_depth times.
struct QuadratureOptions {
  int order = 5;          // Gauss-Legendre points per panel, 1..5
  int panels = 2;         // initial panels per smooth segment
  double rel_tol = 1e-14;
  int max_depth = 10;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
std::span<const std::array<double, 2>> gauss_legendre(int order);

/// Coefficients restricted to one normalized edge, in its local coordinate
/// x ∈ [0, |e|].
class EdgeField {
 public:
  EdgeField(const EdgeCoefficients& coefficients, double source_offset, double length,
            QuadratureOptions quadrature)
      : coefficients_(&coefficients),
        offset_(source_offset),
        length_(length),
        quadrature_(quadrature) {}

  double length() const { return length_; }
  double p(double x) const { return coefficients_->p(offset_ + x); }
  double q(double x) const { return coefficients_->q(offset_ + x); }
  double w(double x) const { return coefficients_->w(offset_ + x); }
  CoefficientSample sample(double x) const { return {p(x), q(x), w(x)}; }
  bool is_piecewise_constant() const;

  /// Sorted jump locations of p, q, w strictly inside (a, b).
  std::vector<double> breakpoints(double a, double b) const;

  /// ∫_a^b f(x, sample(x)) dx by composite Gauss quadrature on panels aligned
  /// to breakpoints, refined adaptively for expression coefficients. Raises
  /// IntegrabilityError on a nonfinite sample.
  template <class F>
  double integrate(double a, double b, F&& f) const;

  double integral(Integrand which, double a, double b) const;

 private:
  const EdgeCoefficients* coefficients_;
  double offset_;
  double length_;
  QuadratureOptions quadrature_;
};

/// Edgewise p, q, w over a graph, keyed by document edge id with a default.
class CoefficientField {
 public:
  CoefficientField() = default;
  explicit CoefficientField(EdgeCoefficients fallback) : fallback_(std::move(fallback)) {}

  void set(const std::string& source_edge_id, EdgeCoefficients coefficients);
  void set_default(EdgeCoefficients coefficients) { fallback_ = std::move(coefficients); }
  void set_quadrature(QuadratureOptions quadrature) { quadrature_ = quadrature; }
  QuadratureOptions quadrature() const { return quadrature_; }

  /// Document: {"default" | edge id: {"p": spec, "q": spec, "w": spec}}.
  /// Missing p, q, w default to 1, 0, 1.
  static CoefficientField from_json(const nlohmann::json& doc);
  static CoefficientField parse(std::string_view text);
  static CoefficientField load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// Raises ValidationError if an entry names an edge absent from `graph`.
  void check_against(const MetricGraph& graph) const;

  const EdgeCoefficients& on_source(const std::string& source_edge_id) const;
  EdgeField on(const MetricGraph& graph, EdgeIndex e) const;

  double edge_integral(const MetricGraph& graph, EdgeIndex e, Integrand which, double a, double b) const;

 private:
  EdgeCoefficients fallback_;
  std::map<std::string, EdgeCoefficients> entries_;
  QuadratureOptions quadrature_;
};

struct HypothesisOptions {
  double eta = 1.0;               // declared exponent with 1/p ∈ L^η; infinity allowed
  int samples_per_edge = 256;     // for sampled minima of p and w
};

struct HypothesisReport {
  double eta = 1.0;
  double C_q = 0.0;        // sup_e ∫_e q₋
  double C_w = 0.0;        // sampled min of w outside the compact subgraph
  double d_star_low = 0.0; // inf |e|
  double min_p = 0.0;      // sampled, whole graph
  double min_w = 0.0;      // sampled, whole graph
  std::array<bool, 4> clause{};  // clauses (1)-(4)
  bool positivity = false;       // p > 0 and w > 0 at every sample
  std::array<std::string, 4> detail;

  bool all_pass() const { return positivity && clause[0] && clause[1] && clause[2] && clause[3]; }
};

/// Computes C_q, C_w, d_* and flags each clause of the essential-spectrum
/// hypotheses. Failures are reported, never thrown.
HypothesisReport validate_hypotheses(const MetricGraph& graph, const CoefficientField& field,
                                     std::span<const EdgeIndex> compact, HypothesisOptions options = {});

template <class F>
double EdgeField::integrate(double a, double b, F&& f) const {
  if (!(a <= b)) throw ValidationError("integration bounds out of order");
  const auto rule = gauss_legendre(quadrature_.order);
  std::vector<double> cuts{a};
  for (double x : breakpoints(a, b)) cuts.push_back(x);
  cuts.push_back(b);
  const bool exact = is_piecewise_constant();
  const int panels = exact ? 1 : quadrature_.panels;

  struct Panel {
    double lo, hi, value, magnitude;
    int depth;
  };
  // Gauss sum of f and of |f| on [lo, hi].
  auto gauss = [&](double lo, double hi, int depth) {
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    Panel out{lo, hi, 0.0, 0.0, depth};
    for (const auto& [node, weight] : rule) {
      const double x = mid + half * node;
      CoefficientSample c;
      try {
        c = sample(x);
      } catch (const EvaluationError& e) {
        throw IntegrabilityError(std::string("coefficient evaluation failed: ") + e.what());
      }
      const double value = f(x, c);
      if (!std::isfinite(value)) {
        throw IntegrabilityError("nonfinite integrand sample at local offset " + std::to_string(x));
      }
      out.value += weight * value;
      out.magnitude += weight * std::abs(value);
    }
    out.value *= half;
    out.magnitude *= half;
    return out;
  };

  // Each panel is halved until its halves agree with it, left to right.
  double total = 0.0;
  std::vector<Panel> pending;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double width = (cuts[s + 1] - cuts[s]) / panels;
    if (width == 0.0) continue;
    for (int k = panels - 1; k >= 0; --k) {
      const double lo = cuts[s] + k * width;
      pending.push_back(gauss(lo, k + 1 == panels ? cuts[s + 1] : lo + width, 0));
    }
    while (!pending.empty()) {
      const Panel whole = pending.back();
      pending.pop_back();
      if (exact) {
        total += whole.value;
        continue;
      }
      const double mid = 0.5 * (whole.lo + whole.hi);
      const Panel left = gauss(whole.lo, mid, whole.depth + 1);
      const Panel right = gauss(mid, whole.hi, whole.depth + 1);
      const double change = std::abs(left.value + right.value - whole.value);
      if (change <= quadrature_.rel_tol * (left.magnitude + right.magnitude) ||
          whole.depth + 1 >= quadrature_.max_depth) {
        total += left.value + right.value;
      } else {
        pending.push_back(right);
        pending.push_back(left);
      }
    }
  }
  return total;
}

}  // namespace qgs
