#include "qgs/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "qgs/coeff.hpp"
#include "qgs/csv.hpp"
#include "qgs/error.hpp"
#include "qgs/fem.hpp"
#include "qgs/graph.hpp"
#include "qgs/spectral.hpp"

namespace qgs {
namespace {

constexpr const char* kCommandNames[] = {"spectrum", "persson", "ap-check", "positive-solution",
                                         "sobolev",  "validate", "verify"};

// The exhaustion points into `graph`, so a Loaded never moves.
struct Loaded {
  MetricGraph graph;
  CoefficientField field;
  std::optional<Exhaustion> exhaustion_slot;

  const Exhaustion& exhaustion() const { return *exhaustion_slot; }
};

std::unique_ptr<Loaded> load_inputs(const RunConfig& config) {
  auto in = std::make_unique<Loaded>(Loaded{
      MetricGraph::load(config.graph),
      config.coeffs.empty() ? CoefficientField{} : CoefficientField::load(config.coeffs), std::nullopt});
  const MetricGraph& graph = in->graph;
  in->field.check_against(graph);

  VertexIndex root = 0;
  if (config.root) {
    root = graph.vertex(*config.root);
  } else if (graph.root()) {
    root = *graph.root();
  } else {
    throw UsageError("the graph document has no root; pass --root");
  }
  const auto distances = graph.distances_from(root);
  const double far = *std::max_element(distances.begin(), distances.end());
  const auto max_level = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(far * (1.0 - 1e-12))));
  in->exhaustion_slot.emplace(graph, root, max_level);
  return in;
}

SpectralOptions spectral_options(const RunConfig& config) {
  SpectralOptions options;
  options.h = config.h;
  options.tol = config.tol;
  options.dirichlet_boundary = config.dirichlet_boundary;
  options.workers = config.workers;
  return options;
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

std::string hypothesis_summary(const HypothesisReport& report) {
  std::ostringstream out;
  out << "C_q=" << csv_real(report.C_q) << " C_w=" << csv_real(report.C_w)
      << " d_*=" << csv_real(report.d_star_low) << " eta=" << report.eta;
  for (int i = 0; i < 4; ++i) out << " (" << i + 1 << "):" << (report.clause[i] ? "pass" : "FAIL");
  out << " positivity:" << (report.positivity ? "pass" : "FAIL");
  return out.str();
}

void write_header(CsvWriter& csv, const RunConfig& config, const Loaded* inputs, const HypothesisReport* report) {
  csv.comment(std::string("qgs ") + QGS_VERSION);
  csv.comment("command: " + to_string(config.command));
  csv.comment("config: " + config.to_json().dump());
  csv.comment("seed: " + std::to_string(config.seed));
  if (inputs) {
    csv.comment("graph: " + inputs->graph.to_json().dump());
    csv.comment("coeffs: " + inputs->field.to_json().dump());
  }
  if (report) csv.comment("hypotheses: " + hypothesis_summary(*report));
  csv.comment("timestamp: " + timestamp());
}

HypothesisReport check_hypotheses(const RunConfig& config, const Loaded& inputs) {
  HypothesisOptions options;
  options.eta = config.eta;
  return validate_hypotheses(inputs.graph, inputs.field, inputs.exhaustion().level(config.compact_level), options);
}

void report_failures(const HypothesisReport& report, std::ostream& err) {
  if (!report.positivity) {
    err << "error: p > 0 and w > 0 fail at a sample (min p = " << report.min_p << ", min w = " << report.min_w
        << ")\n";
  }
  for (int i = 0; i < 4; ++i) {
    if (!report.clause[i]) {
      err << "error: clause (" << i + 1 << ") of the essential-spectrum hypotheses fails: " << report.detail[i]
          << "\n";
    }
  }
}

void dump(const std::filesystem::path& dir, const std::string& stem, const AssembledForms& forms) {
  std::filesystem::create_directories(dir);
  const std::pair<const char*, const SparseMatrix*> blocks[] = {{"Kp", &forms.K_p}, {"Kq", &forms.K_q}, {"M", &forms.M}};
  for (const auto& [name, matrix] : blocks) {
    std::ofstream file(dir / (stem + "_" + name + ".mtx"));
    if (!file) throw UsageError("cannot write to " + dir.string());
    write_matrix_market(file, *matrix, true, stem + " " + name + " domain=" + to_string(forms.domain));
  }
}

std::string optional_real(bool present, double value) { return present ? csv_real(value) : std::string(); }

void cmd_spectrum(const RunConfig& config, const Loaded& in, CsvWriter& csv, std::ostream& err) {
  const SpectralOptions options = spectral_options(config);
  const SpectralReport report = inf_spectrum(in.graph, in.field, in.exhaustion(), options, config.levels);
  for (const auto& warning : report.warnings) err << "warning: " << warning << "\n";
  csv.row({"n", "lambda"});
  for (const auto& row : report.rows) {
    csv.row({std::to_string(row.n), csv_real(row.lambda)});
    if (!config.dump_matrices.empty()) {
      dump(config.dump_matrices, "level" + std::to_string(row.n),
           level_forms(in.graph, in.field, in.exhaustion(), row.n, options));
    }
  }
  err << "estimate " << csv_real(report.estimate) << " error proxy " << csv_real(report.error_proxy) << "\n";
}

void cmd_persson(const RunConfig& config, const Loaded& in, CsvWriter& csv, std::ostream& err) {
  const SpectralOptions options = spectral_options(config);
  const PerssonTrace trace =
      persson_limit(in.graph, in.field, in.exhaustion(), PerssonSchedule{config.levels, config.outer}, options);
  for (const auto& warning : trace.warnings) err << "warning: " << warning << "\n";
  csv.row({"n", "N", "lambda", "residual"});
  for (const auto& row : trace.rows) {
    csv.row({std::to_string(row.n), std::to_string(row.N), csv_real(row.lambda), csv_real(row.residual)});
    if (!config.dump_matrices.empty()) {
      dump(config.dump_matrices, "annulus" + std::to_string(row.n) + "_" + std::to_string(row.N),
           annulus_forms(in.graph, in.field, in.exhaustion(), row.n, row.N, options));
    }
  }
  for (const auto& level : trace.levels) {
    if (!level.settled) {
      err << "warning: n = " << level.n << " did not settle by N = " << level.N << " (last decrement "
          << csv_real(level.decrement) << ")\n";
    }
  }
  err << "estimate " << csv_real(trace.estimate) << " bracket [" << csv_real(trace.bracket_low) << ", "
      << csv_real(trace.bracket_high) << "]\n";
}

void cmd_ap_check(const RunConfig& config, const Loaded& in, CsvWriter& csv, std::ostream& err) {
  const ApResult result = ap_check(in.graph, in.field, in.exhaustion(), *config.lambda, *config.level,
                                   spectral_options(config));
  const bool cert = result.certificate.has_value();
  csv.row({"lambda", "n", "lambda1", "outcome", "min_val", "max_val"});
  csv.row({csv_real(result.lambda), std::to_string(*config.level), csv_real(result.lambda1),
           to_string(result.outcome), optional_real(cert, cert ? result.certificate->min_val : 0.0),
           optional_real(cert, cert ? result.certificate->max_val : 0.0)});
  err << to_string(result.outcome) << ": lambda = " << csv_real(result.lambda) << ", lambda_1(level "
      << *config.level << ") = " << csv_real(result.lambda1) << "\n";
}

void cmd_positive_solution(const RunConfig& config, const Loaded& in, CsvWriter& csv, std::ostream& err) {
  const PositiveSolutionCert cert = positive_solution(in.graph, in.field, in.exhaustion(), *config.level,
                                                      *config.lambda, spectral_options(config));
  const GraphMesh& mesh = *cert.mesh;
  csv.row({"edge", "offset", "vertex", "y"});
  for (std::size_t local = 0; local < mesh.edges().size(); ++local) {
    const Edge& edge = in.graph.edge(mesh.edges()[local]);
    const auto offsets = mesh.offsets(local);
    const auto nodes = mesh.edge_nodes(local);
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      const MeshNode& node = mesh.node(nodes[k]);
      csv.row({edge.id, csv_real(offsets[k]), node.vertex ? in.graph.vertex_name(*node.vertex) : std::string(),
               csv_real(cert.values[static_cast<Eigen::Index>(nodes[k])])});
    }
  }
  double flux = 0.0;
  for (const auto& [v, r] : cert.kirchhoff) flux = std::max(flux, r);
  err << "min " << csv_real(cert.min_val) << " max " << csv_real(cert.max_val) << " max Kirchhoff residual "
      << csv_real(flux) << "\n";
}

void cmd_sobolev(const RunConfig& config, const Loaded& in, CsvWriter& csv, std::ostream&) {
  std::vector<double> epsilons = config.epsilon;
  if (epsilons.empty()) epsilons.push_back(1.0);
  csv.row({"epsilon", "delta", "c", "C"});
  for (double eps : epsilons) {
    const SobolevEstimate est = sobolev_constant(in.graph, in.field, eps);
    csv.row({csv_real(est.epsilon), csv_real(est.delta), csv_real(est.c), csv_real(est.C_epsilon)});
  }
}

void cmd_validate(const HypothesisReport& report, CsvWriter& csv) {
  csv.row({"clause", "pass", "value", "detail"});
  const double values[4] = {report.eta, report.C_w, report.d_star_low, report.C_q};
  for (int i = 0; i < 4; ++i) {
    csv.row({std::to_string(i + 1), report.clause[i] ? "true" : "false", csv_real(values[i]), report.detail[i]});
  }
  csv.row({"positivity", report.positivity ? "true" : "false", csv_real(std::min(report.min_p, report.min_w)),
           "min p = " + csv_real(report.min_p) + ", min w = " + csv_real(report.min_w)});
}

int cmd_verify(const RunConfig& config, CsvWriter& csv, std::ostream& err) {
  const auto checks = verify(config.seed, config.workers);
  csv.row({"check", "status", "measured", "threshold", "detail"});
  int failures = 0;
  for (const auto& check : checks) {
    csv.row({check.name, check.pass ? "pass" : "FAIL", csv_real(check.measured), csv_real(check.threshold),
             check.detail});
    if (!check.pass) {
      ++failures;
      err << "FAIL " << check.name << ": " << check.detail << "\n";
    }
  }
  err << checks.size() - failures << "/" << checks.size() << " checks passed\n";
  return failures ? kExitVerifyFailed : kExitOk;
}

bool strictly_increasing(const std::vector<std::size_t>& xs) {
  return std::adjacent_find(xs.begin(), xs.end(), std::greater_equal<>()) == xs.end();
}

int execute(const RunConfig& config, std::ostream& body, std::ostream& err) {
  CsvWriter csv(body);
  if (config.command == Command::verify) {
    write_header(csv, config, nullptr, nullptr);
    return cmd_verify(config, csv, err);
  }

  const auto loaded = load_inputs(config);
  const Loaded& in = *loaded;
  if (config.compact_level > in.exhaustion().max_level()) {
    throw UsageError("--compact-level exceeds the exhaustion depth " + std::to_string(in.exhaustion().max_level()));
  }
  const HypothesisReport report = check_hypotheses(config, in);
  write_header(csv, config, &in, &report);

  if (config.command == Command::validate) {
    cmd_validate(report, csv);
    if (!report.all_pass()) {
      report_failures(report, err);
      return config.override_hypotheses ? kExitOk : kExitHypothesis;
    }
    return kExitOk;
  }
  if (!report.all_pass()) {
    report_failures(report, err);
    if (!config.override_hypotheses) return kExitHypothesis;
    err << "warning: continuing past failed hypotheses (--override)\n";
  }

  switch (config.command) {
    case Command::spectrum:
      cmd_spectrum(config, in, csv, err);
      break;
    case Command::persson:
      cmd_persson(config, in, csv, err);
      break;
    case Command::ap_check:
      cmd_ap_check(config, in, csv, err);
      break;
    case Command::positive_solution:
      cmd_positive_solution(config, in, csv, err);
      break;
    case Command::sobolev:
      cmd_sobolev(config, in, csv, err);
      break;
    case Command::validate:
    case Command::verify:
      break;
  }
  return kExitOk;
}

}  // namespace

std::string to_string(Command command) { return kCommandNames[static_cast<int>(command)]; }

Command command_from_string(const std::string& name) {
  for (int i = 0; i < 7; ++i) {
    if (name == kCommandNames[i]) return static_cast<Command>(i);
  }
  throw UsageError("unknown command '" + name + "'");
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json doc{
      {"command", to_string(command)},
      {"graph", graph.string()},
      {"coeffs", coeffs.string()},
      {"h", h},
      {"tol", tol},
      {"levels", levels},
      {"outer", outer},
      {"dirichlet_boundary", dirichlet_boundary},
      {"workers", workers},
      {"seed", seed},
      {"epsilon", epsilon},
      {"compact_level", compact_level},
      {"eta", eta},
      {"override", override_hypotheses},
  };
  doc["root"] = root ? nlohmann::json(*root) : nlohmann::json(nullptr);
  doc["lambda"] = lambda ? nlohmann::json(*lambda) : nlohmann::json(nullptr);
  doc["level"] = level ? nlohmann::json(*level) : nlohmann::json(nullptr);
  return doc;
}

void check_config(const RunConfig& config) {
  if (!(config.h > 0.0) || !std::isfinite(config.h)) throw UsageError("--h must be positive");
  if (!(config.tol > 0.0) || !std::isfinite(config.tol)) throw UsageError("--tol must be positive");
  if (config.workers == 0) throw UsageError("--workers must be at least 1");
  if (!(config.eta >= 1.0)) throw UsageError("--eta must be at least 1");
  if (!strictly_increasing(config.levels)) throw UsageError("--levels must be strictly increasing");
  if (!strictly_increasing(config.outer)) throw UsageError("--outer must be strictly increasing");
  if (config.command != Command::verify && config.graph.empty()) throw UsageError("--graph is required");

  switch (config.command) {
    case Command::persson:
      if (config.levels.empty() || config.outer.empty()) throw UsageError("persson needs --levels and --outer");
      if (config.outer.front() <= config.levels.back()) {
        throw UsageError("every outer level N must exceed every inner level n");
      }
      break;
    case Command::ap_check:
    case Command::positive_solution:
      if (!config.lambda) throw UsageError(to_string(config.command) + " needs --lambda");
      if (!config.level) throw UsageError(to_string(config.command) + " needs --level");
      break;
    case Command::sobolev:
      for (double eps : config.epsilon) {
        if (!(eps > 0.0)) throw UsageError("--epsilon values must be positive");
      }
      break;
    default:
      break;
  }
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    check_config(config);
    std::ostringstream body;
    const int status = execute(config, body, err);
    if (config.out.empty()) {
      out << body.str();
    } else {
      std::ofstream file(config.out, std::ios::binary);
      if (!file) throw UsageError("cannot open " + config.out.string() + " for writing");
      file << body.str();
    }
    return status;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const HypothesisError& e) {
    err << "hypothesis failure: " << e.what() << "\n";
    return kExitHypothesis;
  } catch (const IntegrabilityError& e) {
    err << "hypothesis failure: " << e.what() << "\n";
    return kExitHypothesis;
  } catch (const EvaluationError& e) {
    err << "hypothesis failure: " << e.what() << "\n";
    return kExitHypothesis;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace qgs
