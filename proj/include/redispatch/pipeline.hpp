#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "redispatch/congestion.hpp"
#include "redispatch/opf.hpp"
#include "redispatch/power_flow.hpp"
#include "redispatch/shapley.hpp"

namespace redispatch {

enum class ReportFormat { table, json, csv };

const char* to_string(ReportFormat f) noexcept;

/// Dispatch that the base-case power flow runs on.
enum class MarketClearing {
  base_dispatch,  // generator set points from the case file
  relaxed_opf,    // OPF without any line limits
};

struct RunConfig {
  /// Catalog name (case9, case39, ...) or path to a MATPOWER file. Files
  /// are used as they are, catalog cases get their modifications applied.
  std::string case_name;
  Formulation formulation = Formulation::dc;
  PowerFlowOptions power_flow;
  double opf_tolerance = 1e-8;          // KKT residuals, per-unit
  double congestion_tolerance = 1e-4;   // relative overload
  int max_players = 20;
  int workers = 1;
  bool warm_start = true;
  MarketClearing market_clearing = MarketClearing::base_dispatch;
  /// Characteristic values are read from and written back to this file.
  std::optional<std::filesystem::path> cache_path;
  std::function<void(const IpmIterate&)> solver_trace;
  std::function<void(Coalition, const OpfSolution&)> on_solve;

  /// Throws Error(invalid_input) on non-positive tolerances or workers.
  void validate() const;
};

struct StageTimes {
  double load = 0.0;  // s
  double power_flow = 0.0;
  double congestion = 0.0;
  double shapley = 0.0;
  double total = 0.0;
};

struct AllocationReport {
  std::string case_name;
  Formulation formulation = Formulation::dc;
  int buses = 0;
  int lines = 0;
  std::vector<int> players;            // 1-based line numbers
  std::vector<double> player_flows;    // MVA (MW for DC), base case
  std::vector<double> player_limits;   // MVA
  double total_cost = 0.0;             // $/h
  double redispatch_cost = 0.0;        // $/h
  std::vector<double> shapley;         // $/h, one per player
  int opf_solves = 0;
  StageTimes times;
  std::vector<std::string> warnings;
};

/// Which intermediate each stage consumed.
struct StageRecord {
  std::string stage;
  std::string input;
  double seconds = 0.0;
};

struct PipelineRun {
  std::shared_ptr<const Network> network;
  std::optional<OpfSolution> market_clearing;  // relaxed OPF, when used
  PowerFlowSolution power_flow;
  CongestionSet congestions;
  std::shared_ptr<Game> game;
  Allocation allocation;
  AllocationReport report;
  std::vector<StageRecord> stages;
};

/// Load → power flow → congestion detection → coalition OPFs → Shapley
/// values. Errors keep their kind and get the stage name prefixed.
PipelineRun run_pipeline(const RunConfig& config);

/// Loads a catalog case or a MATPOWER file.
Network load_case(const std::string& name_or_path);

/// Currency and flows at 0.1 resolution, runtimes as h:mm:ss.
std::string emit_report(const AllocationReport& report, ReportFormat format);
std::string format_duration(double seconds);

nlohmann::json report_to_json(const AllocationReport& report);
AllocationReport report_from_json(const nlohmann::json& j);

/// Graphviz rendering of a solved state. `flows` has one entry per branch,
/// `gen_p` one per generator (MW). Buses with net generation are green,
/// net loads red; pen width grows with the flow relative to the largest.
std::string export_graph(const Network& net, const std::vector<BranchFlow>& flows,
                         const std::vector<double>& gen_p, const std::vector<int>& player_branches);

}  // namespace redispatch
