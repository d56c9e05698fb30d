#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "redispatch/error.hpp"
#include "redispatch/pipeline.hpp"

using namespace redispatch;

namespace {

enum ExitCode {
  kOk = 0,
  kInvalidInput = 2,
  kParse = 3,
  kPowerFlowDivergence = 4,
  kOpfFailure = 5,
  kPlayerCap = 6,
  kSingular = 7,
  kIo = 8,
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return kInvalidInput;
    case ErrorKind::parse: return kParse;
    case ErrorKind::singular_matrix: return kSingular;
    case ErrorKind::power_flow_divergence: return kPowerFlowDivergence;
    case ErrorKind::opf_failure: return kOpfFailure;
    case ErrorKind::player_cap_exceeded: return kPlayerCap;
  }
  return kInvalidInput;
}

bool write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
  return static_cast<bool>(out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shapley-value allocation of redispatch costs over congested lines"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string report = "table";
  std::string graph_path, graph_state = "pf", output_path, cache_path, clearing = "base";
  bool verbose = false, cold = false;

  CLI::App* run = app.add_subcommand("run", "Run the allocation pipeline on one case");
  run->add_option("--case", cfg.case_name, "Catalog case name or MATPOWER file")->required();
  run->add_option("--formulation", cfg.formulation, "dc or ac")
      ->transform(CLI::CheckedTransformer(std::map<std::string, Formulation>{{"dc", Formulation::dc},
                                                                             {"ac", Formulation::ac}},
                                          CLI::ignore_case));
  run->add_option("--workers", cfg.workers, "Parallel OPF workers")->check(CLI::PositiveNumber);
  run->add_option("--max-players", cfg.max_players, "Largest player set to enumerate")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--report", report, "Report format")->check(CLI::IsMember({"table", "json", "csv"}));
  run->add_option("--output", output_path, "Write the report here instead of stdout");
  run->add_option("--graph", graph_path, "Write a Graphviz rendering");
  run->add_option("--graph-state", graph_state, "State drawn in the graph: pf (base case) or opf")
      ->check(CLI::IsMember({"pf", "opf"}));
  run->add_option("--cache", cache_path, "Characteristic cost cache (read and updated)");
  run->add_option("--pf-tol", cfg.power_flow.tolerance, "Power flow mismatch tolerance, pu")
      ->check(CLI::PositiveNumber);
  run->add_option("--pf-max-iter", cfg.power_flow.max_iterations)->check(CLI::PositiveNumber);
  run->add_flag("--enforce-q-limits", cfg.power_flow.enforce_q_limits, "Switch PV buses at Q limits");
  run->add_option("--opf-tol", cfg.opf_tolerance, "OPF KKT tolerance, pu")->check(CLI::PositiveNumber);
  run->add_option("--congestion-tol", cfg.congestion_tolerance, "Relative overload threshold")
      ->check(CLI::PositiveNumber);
  run->add_option("--market-clearing", clearing, "Dispatch of the base power flow: base or relaxed-opf")
      ->check(CLI::IsMember({"base", "relaxed-opf"}));
  run->add_flag("--no-warm-start", cold, "Solve every coalition from the default start");
  run->add_flag("-v,--verbose", verbose, "Print solver progress to stderr");

  CLI11_PARSE(app, argc, argv);

  if (!cache_path.empty()) cfg.cache_path = cache_path;
  cfg.warm_start = !cold;
  cfg.market_clearing = clearing == "base" ? MarketClearing::base_dispatch : MarketClearing::relaxed_opf;
  if (verbose) {
    cfg.solver_trace = [](const IpmIterate& it) {
      std::cerr << fmt::format("  ipm {:3d}  f={:.8e}  feas={:.2e}  stat={:.2e}  comp={:.2e}  step={:.3f}\n",
                               it.iteration, it.objective, it.residuals.primal, it.residuals.stationarity,
                               it.residuals.complementarity, it.step_primal);
    };
    cfg.on_solve = [](Coalition c, const OpfSolution& s) {
      std::cerr << fmt::format("coalition {:#x}: {} {:.4f} $/h, {} iterations, {:.2f} s\n", c,
                               to_string(s.status), s.objective, s.iterations, s.wall_time);
    };
  }

  const ReportFormat format = report == "json"  ? ReportFormat::json
                              : report == "csv" ? ReportFormat::csv
                                                : ReportFormat::table;
  try {
    const PipelineRun result = run_pipeline(cfg);
    if (verbose) {
      for (const auto& st : result.stages)
        std::cerr << fmt::format("stage {:<10} input {:<20} {:.3f} s\n", st.stage, st.input, st.seconds);
    }
    const std::string text = emit_report(result.report, format);
    if (output_path.empty()) {
      std::cout << text;
    } else if (!write_file(output_path, text)) {
      std::cerr << "error: cannot write " << output_path << "\n";
      return kIo;
    }
    if (!graph_path.empty()) {
      std::string dot;
      if (graph_state == "opf") {
        const OpfSolution& s = result.game->grand_solution();
        dot = export_graph(*result.network, s.flows, s.gen_p, result.congestions.branches());
      } else {
        dot = export_graph(*result.network, result.power_flow.flows, result.power_flow.gen_p,
                           result.congestions.branches());
      }
      if (!write_file(graph_path, dot)) {
        std::cerr << "error: cannot write " << graph_path << "\n";
        return kIo;
      }
    }
    for (const auto& w : result.report.warnings) {
      if (format != ReportFormat::table) std::cerr << "warning: " << w << "\n";
    }
    return kOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
}
