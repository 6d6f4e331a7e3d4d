// qgs: spectral bottom and essential-spectrum bottom of Sturm-Liouville
// operators on metric graphs.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qgs/run.hpp"

namespace {

void add_common(CLI::App& cmd, qgs::RunConfig& cfg) {
  cmd.add_option("--graph", cfg.graph, "Graph JSON document")->required()->check(CLI::ExistingFile);
  cmd.add_option("--coeffs", cfg.coeffs, "Coefficient JSON document (default p = w = 1, q = 0)")
      ->check(CLI::ExistingFile);
  cmd.add_option("--h", cfg.h, "Target mesh cell length")->capture_default_str();
  cmd.add_option("--tol", cfg.tol, "Decision and decrement tolerance")->capture_default_str();
  cmd.add_option("--root", cfg.root, "Exhaustion root (overrides the document root)");
  cmd.add_flag("--no-boundary-dirichlet", "Drop the Dirichlet condition at degree-one vertices")
      ->each([&cfg](const std::string&) { cfg.dirichlet_boundary = false; });
  cmd.add_option("--workers", cfg.workers, "Worker threads for independent solves")->capture_default_str();
  cmd.add_option("--compact-level", cfg.compact_level, "Level m whose Γ_m is the compact subgraph")
      ->capture_default_str();
  cmd.add_option("--eta", cfg.eta, "Declared exponent with 1/p in L^eta")->capture_default_str();
  cmd.add_flag("--override", cfg.override_hypotheses, "Continue when hypothesis validation fails");
}

void add_output(CLI::App& cmd, qgs::RunConfig& cfg) {
  cmd.add_option("--out", cfg.out, "CSV output path (default standard output)");
  cmd.add_option("--seed", cfg.seed, "Seed recorded in the header")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  qgs::RunConfig cfg;
  CLI::App app{"Spectral solver for Sturm-Liouville operators on metric graphs"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", std::string("qgs ") + QGS_VERSION);
  app.require_subcommand(1);

  auto* spectrum = app.add_subcommand("spectrum", "lambda_1 on the exhaustion levels Γ_n");
  add_common(*spectrum, cfg);
  add_output(*spectrum, cfg);
  spectrum->add_option("--levels", cfg.levels, "Levels n (default all)")->delimiter(',');
  spectrum->add_option("--dump-matrices", cfg.dump_matrices, "Directory for Matrix Market dumps");

  auto* persson = app.add_subcommand("persson", "Annulus eigenvalues lambda_{n,N} and their limit");
  add_common(*persson, cfg);
  add_output(*persson, cfg);
  persson->add_option("--levels", cfg.levels, "Inner levels n")->delimiter(',')->required();
  persson->add_option("--outer", cfg.outer, "Outer levels N")->delimiter(',')->required();
  persson->add_option("--dump-matrices", cfg.dump_matrices, "Directory for Matrix Market dumps");

  auto* ap = app.add_subcommand("ap-check", "Positive-solution test of lambda against lambda_1(Γ_n)");
  auto* positive = app.add_subcommand("positive-solution", "Positive solution of ly = lambda y on Γ_n");
  for (auto* cmd : {ap, positive}) {
    add_common(*cmd, cfg);
    add_output(*cmd, cfg);
    cmd->add_option("--lambda", cfg.lambda, "Spectral parameter")->required();
    cmd->add_option("--level", cfg.level, "Level n")->required();
  }

  auto* sobolev = app.add_subcommand("sobolev", "Constant C_eps of the edgewise Sobolev bound");
  add_common(*sobolev, cfg);
  add_output(*sobolev, cfg);
  sobolev->add_option("--epsilon", cfg.epsilon, "Values of epsilon (default 1)")->delimiter(',');

  auto* validate = app.add_subcommand("validate", "Check the coefficient hypotheses");
  add_common(*validate, cfg);
  add_output(*validate, cfg);

  auto* verify = app.add_subcommand("verify", "Run the property suite on built-in fixtures");
  add_output(*verify, cfg);
  verify->add_option("--workers", cfg.workers, "Worker threads")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : qgs::kExitUsage;
  }

  cfg.command = qgs::command_from_string(app.get_subcommands().front()->get_name());
  return qgs::run(cfg, std::cout, std::cerr);
}
