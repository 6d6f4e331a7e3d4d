#include "qgs/coeff.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace qgs {
namespace {

constexpr std::array<std::array<double, 2>, 1> kGauss1{{{0.0, 2.0}}};
constexpr std::array<std::array<double, 2>, 2> kGauss2{{{-0.57735026918962576451, 1.0},
                                                        {0.57735026918962576451, 1.0}}};
constexpr std::array<std::array<double, 2>, 3> kGauss3{{{-0.77459666924148337704, 5.0 / 9.0},
                                                        {0.0, 8.0 / 9.0},
                                                        {0.77459666924148337704, 5.0 / 9.0}}};
constexpr std::array<std::array<double, 2>, 4> kGauss4{{{-0.86113631159405257522, 0.34785484513745385737},
                                                        {-0.33998104358485626480, 0.65214515486254614263},
                                                        {0.33998104358485626480, 0.65214515486254614263},
                                                        {0.86113631159405257522, 0.34785484513745385737}}};
constexpr std::array<std::array<double, 2>, 5> kGauss5{{{-0.90617984593866399280, 0.23692688505618908751},
                                                        {-0.53846931010568309104, 0.47862867049936646804},
                                                        {0.0, 0.56888888888888888889},
                                                        {0.53846931010568309104, 0.47862867049936646804},
                                                        {0.90617984593866399280, 0.23692688505618908751}}};

double apply(Integrand which, const CoefficientSample& c) {
  switch (which) {
    case Integrand::p:
      return c.p;
    case Integrand::inv_p:
      return 1.0 / c.p;
    case Integrand::q:
      return c.q;
    case Integrand::q_plus:
      return std::max(c.q, 0.0);
    case Integrand::q_minus:
      return -std::min(c.q, 0.0);
    case Integrand::w:
      return c.w;
  }
  return 0.0;
}

}  // namespace

std::span<const std::array<double, 2>> gauss_legendre(int order) {
  switch (order) {
    case 1:
      return kGauss1;
    case 2:
      return kGauss2;
    case 3:
      return kGauss3;
    case 4:
      return kGauss4;
    case 5:
      return kGauss5;
    default:
      throw ValidationError("Gauss-Legendre order must be in 1..5, got " + std::to_string(order));
  }
}

double Piecewise::operator()(double x) const {
  // last break <= x
  auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
  const auto i = it == breaks.begin() ? 0 : static_cast<std::size_t>(it - breaks.begin()) - 1;
  return values[i];
}

CoefficientSpec::CoefficientSpec(Piecewise table) {
  if (table.breaks.empty() || table.breaks.size() != table.values.size()) {
    throw ValidationError("piecewise table needs matching, nonempty breaks and values");
  }
  if (table.breaks.front() != 0.0) throw ValidationError("piecewise table must start at break 0");
  for (std::size_t i = 1; i < table.breaks.size(); ++i) {
    if (!(table.breaks[i] > table.breaks[i - 1])) {
      throw ValidationError("piecewise breaks must be strictly increasing");
    }
  }
  impl_ = std::move(table);
}

CoefficientSpec CoefficientSpec::from_json(const nlohmann::json& doc) {
  if (doc.is_number()) return CoefficientSpec(doc.get<double>());
  if (!doc.is_object() || doc.size() != 1) {
    throw ParseError("coefficient spec must be a number, {\"piecewise\": ...} or {\"expr\": ...}", 1);
  }
  if (doc.contains("expr")) {
    if (!doc["expr"].is_string()) throw ParseError("\"expr\" must be a string", 1);
    return CoefficientSpec(Expression::parse(doc["expr"].get<std::string>()));
  }
  if (doc.contains("piecewise")) {
    Piecewise table;
    if (!doc["piecewise"].is_array()) throw ParseError("\"piecewise\" must be an array of [break, value]", 1);
    for (const auto& row : doc["piecewise"]) {
      if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number()) {
        throw ParseError("\"piecewise\" rows must be [break, value] number pairs", 1);
      }
      table.breaks.push_back(row[0].get<double>());
      table.values.push_back(row[1].get<double>());
    }
    return CoefficientSpec(std::move(table));
  }
  throw ParseError("unknown coefficient spec key '" + doc.begin().key() + "'", 1);
}

nlohmann::json CoefficientSpec::to_json() const {
  if (const auto* c = std::get_if<double>(&impl_)) return *c;
  if (const auto* t = std::get_if<Piecewise>(&impl_)) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < t->breaks.size(); ++i) rows.push_back({t->breaks[i], t->values[i]});
    return {{"piecewise", rows}};
  }
  return {{"expr", std::get<Expression>(impl_).source()}};
}

double CoefficientSpec::operator()(double x) const {
  if (const auto* c = std::get_if<double>(&impl_)) return *c;
  if (const auto* t = std::get_if<Piecewise>(&impl_)) return (*t)(x);
  return std::get<Expression>(impl_)(x);
}

bool CoefficientSpec::is_piecewise_constant() const {
  if (const auto* e = std::get_if<Expression>(&impl_)) return e->is_constant();
  return true;
}

void CoefficientSpec::breakpoints(double a, double b, std::vector<double>& out) const {
  if (const auto* t = std::get_if<Piecewise>(&impl_)) {
    for (double x : t->breaks) {
      if (x > a && x < b) out.push_back(x);
    }
  }
}

bool EdgeField::is_piecewise_constant() const {
  return coefficients_->p.is_piecewise_constant() && coefficients_->q.is_piecewise_constant() &&
         coefficients_->w.is_piecewise_constant();
}

std::vector<double> EdgeField::breakpoints(double a, double b) const {
  std::vector<double> source;
  const double lo = offset_ + a;
  const double hi = offset_ + b;
  coefficients_->p.breakpoints(lo, hi, source);
  coefficients_->q.breakpoints(lo, hi, source);
  coefficients_->w.breakpoints(lo, hi, source);
  std::vector<double> out;
  for (double x : source) {
    const double local = x - offset_;
    if (local > a && local < b) out.push_back(local);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double EdgeField::integral(Integrand which, double a, double b) const {
  if (!(a >= 0.0 && a <= b && b <= length_ * (1.0 + 1e-14))) {
    std::ostringstream msg;
    msg << "integration range [" << a << ", " << b << "] outside edge [0, " << length_ << "]";
    throw ValidationError(msg.str());
  }
  auto f = [which](double, const CoefficientSample& c) { return apply(which, c); };
  if ((which != Integrand::q_plus && which != Integrand::q_minus) || is_piecewise_constant() || a == b) {
    return integrate(a, b, f);
  }
  // Split at sign changes of q so each piece is smooth.
  auto q_at = [this](double x) {
    try {
      return sample(x).q;
    } catch (const EvaluationError& e) {
      throw IntegrabilityError(std::string("coefficient evaluation failed: ") + e.what());
    }
  };
  const int steps = std::max(16, static_cast<int>(std::ceil(64.0 * (b - a))));
  std::vector<double> cuts{a};
  double x0 = a;
  double q0 = q_at(a);
  for (int k = 1; k <= steps; ++k) {
    const double x1 = k == steps ? b : a + (b - a) * k / steps;
    const double q1 = q_at(x1);
    if ((q0 < 0.0 && q1 > 0.0) || (q0 > 0.0 && q1 < 0.0)) {
      double lo = x0, hi = x1;
      const bool rising = q0 < 0.0;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        ((q_at(mid) < 0.0) == rising ? lo : hi) = mid;
      }
      cuts.push_back(0.5 * (lo + hi));
    }
    x0 = x1;
    q0 = q1;
  }
  cuts.push_back(b);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) total += integrate(cuts[k], cuts[k + 1], f);
  return total;
}

void CoefficientField::set(const std::string& source_edge_id, EdgeCoefficients coefficients) {
  entries_.insert_or_assign(source_edge_id, std::move(coefficients));
}

CoefficientField CoefficientField::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("coefficient document must be a JSON object", 1);
  CoefficientField field;
  for (const auto& [key, entry] : doc.items()) {
    if (!entry.is_object()) throw ParseError("coefficient entry '" + key + "' must be an object", 1);
    EdgeCoefficients c;
    for (const auto& [name, spec] : entry.items()) {
      try {
        if (name == "p") {
          c.p = CoefficientSpec::from_json(spec);
        } else if (name == "q") {
          c.q = CoefficientSpec::from_json(spec);
        } else if (name == "w") {
          c.w = CoefficientSpec::from_json(spec);
        } else {
          throw ParseError("unknown key '" + name + "'", 1);
        }
      } catch (const ParseError& e) {
        throw ParseError("coefficient entry '" + key + "': " + e.what(), e.position());
      }
    }
    if (key == "default") {
      field.fallback_ = std::move(c);
    } else {
      field.entries_.insert_or_assign(key, std::move(c));
    }
  }
  return field;
}

CoefficientField CoefficientField::parse(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = static_cast<std::size_t>(std::count(text.begin(), text.begin() + upto, '\n')) + 1;
    throw ParseError("coefficient document: line " + std::to_string(line) + ": " + e.what(), line);
  }
  return from_json(doc);
}

CoefficientField CoefficientField::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open coefficient file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

nlohmann::json CoefficientField::to_json() const {
  auto entry = [](const EdgeCoefficients& c) {
    return nlohmann::json{{"p", c.p.to_json()}, {"q", c.q.to_json()}, {"w", c.w.to_json()}};
  };
  nlohmann::json doc;
  doc["default"] = entry(fallback_);
  for (const auto& [id, c] : entries_) doc[id] = entry(c);
  return doc;
}

void CoefficientField::check_against(const MetricGraph& graph) const {
  for (const auto& [id, c] : entries_) {
    bool found = false;
    for (const auto& e : graph.edges()) found = found || e.source_id == id;
    if (!found) throw ValidationError("coefficients given for unknown edge '" + id + "'");
  }
}

const EdgeCoefficients& CoefficientField::on_source(const std::string& source_edge_id) const {
  auto it = entries_.find(source_edge_id);
  return it == entries_.end() ? fallback_ : it->second;
}

EdgeField CoefficientField::on(const MetricGraph& graph, EdgeIndex e) const {
  const Edge& edge = graph.edge(e);
  return EdgeField(on_source(edge.source_id), edge.source_offset, edge.length, quadrature_);
}

double CoefficientField::edge_integral(const MetricGraph& graph, EdgeIndex e, Integrand which, double a,
                                       double b) const {
  return on(graph, e).integral(which, a, b);
}

HypothesisReport validate_hypotheses(const MetricGraph& graph, const CoefficientField& field,
                                     std::span<const EdgeIndex> compact, HypothesisOptions options) {
  HypothesisReport report;
  report.eta = options.eta;
  report.d_star_low = graph.min_edge_length();
  report.min_p = std::numeric_limits<double>::infinity();
  report.min_w = std::numeric_limits<double>::infinity();
  report.C_w = std::numeric_limits<double>::infinity();
  report.positivity = true;

  bool integrable = true;
  std::string integrability_detail;
  bool cq_finite = true;
  const int samples = std::max(options.samples_per_edge, 2);

  for (EdgeIndex e = 0; e < graph.edge_count(); ++e) {
    const EdgeField f = field.on(graph, e);
    const bool in_compact = std::find(compact.begin(), compact.end(), e) != compact.end();

    // Sampled minima on a uniform grid that includes both endpoints, plus
    // both sides of each breakpoint.
    std::vector<double> xs;
    for (int k = 0; k < samples; ++k) xs.push_back(f.length() * k / (samples - 1));
    for (double b : f.breakpoints(0.0, f.length())) {
      xs.push_back(std::nextafter(b, 0.0));
      xs.push_back(b);
    }
    for (double x : xs) {
      double p = 0.0;
      double w = 0.0;
      try {
        p = f.p(x);
        w = f.w(x);
      } catch (const EvaluationError& err) {
        integrable = false;
        integrability_detail = "edge '" + graph.edge(e).id + "': " + err.what();
        continue;
      }
      report.min_p = std::min(report.min_p, p);
      report.min_w = std::min(report.min_w, w);
      if (!(p > 0.0) || !(w > 0.0)) report.positivity = false;
      if (!in_compact) report.C_w = std::min(report.C_w, w);
    }

    try {
      double inv_p_eta = 0.0;
      if (std::isinf(options.eta)) {
        for (double x : xs) inv_p_eta = std::max(inv_p_eta, 1.0 / f.p(x));
      } else {
        const double eta = options.eta;
        inv_p_eta = f.integrate(0.0, f.length(),
                                [eta](double, const CoefficientSample& c) { return std::pow(1.0 / c.p, eta); });
      }
      const double abs_q = f.integrate(0.0, f.length(),
                                       [](double, const CoefficientSample& c) { return std::abs(c.q); });
      const double w_int = f.integral(Integrand::w, 0.0, f.length());
      if (!std::isfinite(inv_p_eta) || !std::isfinite(abs_q) || !std::isfinite(w_int)) {
        integrable = false;
        integrability_detail = "edge '" + graph.edge(e).id + "': nonfinite integral";
      }
    } catch (const IntegrabilityError& err) {
      integrable = false;
      integrability_detail = "edge '" + graph.edge(e).id + "': " + err.what();
    }

    try {
      report.C_q = std::max(report.C_q, f.integral(Integrand::q_minus, 0.0, f.length()));
    } catch (const IntegrabilityError&) {
      cq_finite = false;
    }
  }

  std::ostringstream d;
  report.clause[0] = integrable;
  d << "1/p in L^" << options.eta << ", q and w locally integrable";
  report.detail[0] = integrable ? d.str() : integrability_detail;

  // An empty complement leaves C_w = +inf.
  report.clause[1] = report.C_w > 0.0;
  d.str("");
  d << "C_w = ess inf of w outside the compact subgraph = " << report.C_w
    << (report.clause[1] ? " > 0" : " is not positive");
  report.detail[1] = d.str();

  report.clause[2] = report.d_star_low > 0.0;
  d.str("");
  d << "d_* = inf |e| = " << report.d_star_low;
  report.detail[2] = d.str();

  report.clause[3] = cq_finite && std::isfinite(report.C_q);
  d.str("");
  d << "C_q = sup_e of the integral of q_- over e = " << report.C_q;
  report.detail[3] = d.str();
  return report;
}

}  // namespace qgs
