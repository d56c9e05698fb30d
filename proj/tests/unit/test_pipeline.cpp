#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <regex>

#include "redispatch/case_io.hpp"
#include "redispatch/error.hpp"
#include "redispatch/pipeline.hpp"
#include "support.hpp"

using namespace redispatch;

namespace {

RunConfig config(const std::string& name, Formulation f) {
  RunConfig c;
  c.case_name = name;
  c.formulation = f;
  return c;
}

int count(const std::string& text, const std::string& needle) {
  int n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("case9 DC run") {
  const PipelineRun run = run_pipeline(config("case9", Formulation::dc));
  const AllocationReport& r = run.report;
  CHECK(r.case_name == "case9");
  CHECK(r.buses == 9);
  CHECK(r.lines == 9);
  CHECK(r.players == std::vector<int>{1, 2});
  CHECK(r.total_cost == doctest::Approx(6566.0).epsilon(0.01));
  CHECK(std::abs(r.shapley[0]) < 1.0);
  CHECK(r.shapley[1] == doctest::Approx(r.redispatch_cost).epsilon(1e-6));
  CHECK(r.opf_solves == 4);
  CHECK(run.game->cache().size() == 4);
  CHECK(run.power_flow.formulation == Formulation::dc);
}

TEST_CASE("case9 AC run shifts the main congestion to line 1") {
  const PipelineRun run = run_pipeline(config("case9", Formulation::ac));
  const AllocationReport& r = run.report;
  CHECK(r.players == std::vector<int>{1, 2});
  CHECK(std::abs(r.shapley[1]) < 1.0);
  CHECK(r.shapley[0] > r.shapley[1]);
  CHECK(run.power_flow.formulation == Formulation::ac);
}

TEST_CASE("case without overloads") {
  Network net = load_builtin_case("case9");
  for (Branch& br : net.branches) br.s_limit = net.to_pu(1000.0);
  const auto path = temp_file("redispatch_case9_loose.m");
  std::ofstream(path) << serialize_case(net);
  const PipelineRun run = run_pipeline(config(path.string(), Formulation::dc));
  CHECK(run.report.players.empty());
  CHECK(run.report.shapley.empty());
  CHECK(run.report.redispatch_cost == 0.0);
  CHECK(run.report.opf_solves == 1);
  std::filesystem::remove(path);
}

TEST_CASE("stages record their inputs") {
  const PipelineRun run = run_pipeline(config("case9", Formulation::dc));
  REQUIRE(run.stages.size() == 4);
  CHECK(run.stages[0].stage == "load");
  CHECK(run.stages[1].input == "case dispatch");
  CHECK(run.stages[2].stage == "congestion");
  CHECK(run.stages[2].input == "power flow");
  CHECK(run.stages[3].stage == "shapley");
  CHECK(run.stages[3].input == "OPF");
  CHECK_FALSE(run.market_clearing.has_value());
}

TEST_CASE("relaxed OPF market clearing") {
  RunConfig c = config("case9", Formulation::dc);
  c.market_clearing = MarketClearing::relaxed_opf;
  const PipelineRun run = run_pipeline(c);
  REQUIRE(run.market_clearing.has_value());
  CHECK(run.stages[1].input == "relaxed OPF dispatch");
  for (int g = 0; g < 3; ++g) CHECK(run.power_flow.gen_p[g] == doctest::Approx(run.market_clearing->gen_p[g]).epsilon(1e-6));
}

TEST_CASE("runs are deterministic") {
  RunConfig c = config("case300", Formulation::dc);
  const AllocationReport a = run_pipeline(c).report;
  c.workers = 2;
  const AllocationReport b = run_pipeline(c).report;
  CHECK(a.players == b.players);
  CHECK(a.shapley == b.shapley);
  CHECK(a.total_cost == b.total_cost);
  CHECK(a.redispatch_cost == b.redispatch_cost);
}

TEST_CASE("cache file is written and reused") {
  const auto path = temp_file("redispatch_cache_test.json");
  std::filesystem::remove(path);
  RunConfig c = config("case9", Formulation::ac);
  c.cache_path = path;
  const AllocationReport first = run_pipeline(c).report;
  CHECK(std::filesystem::exists(path));
  const AllocationReport second = run_pipeline(c).report;
  CHECK(second.opf_solves == 0);
  CHECK(second.shapley == first.shapley);
  std::filesystem::remove(path);
}

TEST_CASE("stage errors keep their kind and name the stage") {
  try {
    run_pipeline(config("no_such_case", Formulation::dc));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_input);
    CHECK(std::string(e.what()).rfind("load: ", 0) == 0);
  }
  RunConfig capped = config("case9", Formulation::dc);
  capped.max_players = 1;
  try {
    run_pipeline(capped);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::player_cap_exceeded);
    CHECK(std::string(e.what()).rfind("shapley: ", 0) == 0);
  }
  try {
    run_pipeline(config("case39", Formulation::ac));
    FAIL("expected an error");
  } catch (const CoalitionFailure& e) {
    CHECK(e.kind() == ErrorKind::opf_failure);
  }
  RunConfig bad = config("case9", Formulation::dc);
  bad.workers = 0;
  CHECK_THROWS_AS(run_pipeline(bad), Error);
  bad.workers = 1;
  bad.congestion_tolerance = 0.0;
  CHECK_THROWS_AS(run_pipeline(bad), Error);
}

TEST_CASE("report formats") {
  AllocationReport r;
  SUBCASE("empty report renders the header only") {
    const std::string table = emit_report(r, ReportFormat::table);
    CHECK(count(table, "\n") == 2);  // header and rule
    CHECK(table.find("Congested Lines") != std::string::npos);
    CHECK(count(emit_report(r, ReportFormat::csv), "\n") == 1);
  }
  r.case_name = "case9";
  r.buses = 9;
  r.lines = 9;
  r.players = {1, 2};
  r.player_flows = {315.0, 140.15};
  r.player_limits = {70.0, 40.0};
  r.total_cost = 6566.04;
  r.redispatch_cost = 123.46;
  r.shapley = {-0.00001, 123.46};
  r.times.total = 56.2;
  SUBCASE("table row") {
    const std::string table = emit_report(r, ReportFormat::table);
    for (const char* col : {"Case", "Congested Lines", "Total system costs ($)", "Total redispatch costs ($)",
                            "Shapley Values ($)", "Runtime"})
      CHECK(table.find(col) != std::string::npos);
    CHECK(table.find("(1,2)") != std::string::npos);
    CHECK(table.find("6566.0") != std::string::npos);
    CHECK(table.find("(0.0,123.5)") != std::string::npos);
    CHECK(table.find("0:00:56") != std::string::npos);
  }
  SUBCASE("csv quotes tuples") {
    const std::string csv = emit_report(r, ReportFormat::csv);
    CHECK(csv.find("\"(1,2)\"") != std::string::npos);
    CHECK(count(csv, "\n") == 2);
  }
  SUBCASE("json round trip") {
    const std::string text = emit_report(r, ReportFormat::json);
    const AllocationReport back = report_from_json(nlohmann::json::parse(text));
    CHECK(report_to_json(back) == report_to_json(r));
    CHECK(emit_report(back, ReportFormat::json) == text);
    CHECK_THROWS_AS(report_from_json(nlohmann::json::object()), Error);
  }
  SUBCASE("deterministic") {
    CHECK(emit_report(r, ReportFormat::table) == emit_report(r, ReportFormat::table));
  }
}

TEST_CASE("durations") {
  CHECK(format_duration(0.4) == "0:00:00");
  CHECK(format_duration(56.0) == "0:00:56");
  CHECK(format_duration(15 * 3600 + 16 * 60 + 43) == "15:16:43");
}

TEST_CASE("graph export") {
  SUBCASE("two buses") {
    const Network net = testing_support::two_bus(0.0, 0.1, 0.5);
    const PowerFlowSolution pf = dc_power_flow(net);
    const std::string dot = export_graph(net, pf.flows, pf.gen_p, {});
    CHECK(count(dot, "fillcolor=green") == 1);
    CHECK(count(dot, "fillcolor=red") == 1);
    CHECK(count(dot, " -- ") == 1);
  }
  SUBCASE("case9 overloads are highlighted") {
    const PipelineRun run = run_pipeline(config("case9", Formulation::dc));
    const std::string dot = export_graph(*run.network, run.power_flow.flows, run.power_flow.gen_p,
                                         run.congestions.branches());
    CHECK(count(dot, "color=orange") == 2);
    CHECK(dot.find("label=\"L1\"") != std::string::npos);
    CHECK(dot.find("label=\"L2\"") != std::string::npos);
    CHECK(dot.find("penwidth=8.00") != std::string::npos);  // the 315 MW line
  }
  SUBCASE("one edge per in-service branch") {
    Network net = load_builtin_case("case39");
    net.branches[10].in_service = false;
    const PowerFlowSolution pf = dc_power_flow(net);
    const std::string dot = export_graph(net, pf.flows, pf.gen_p, {});
    CHECK(count(dot, " -- ") == net.branch_count() - 1);
    CHECK(count(dot, "label=") == net.bus_count() + net.branch_count() - 1);
  }
  SUBCASE("size mismatch") {
    const Network net = testing_support::two_bus(0.0, 0.1, 0.5);
    CHECK_THROWS_AS(export_graph(net, {}, {0.0}, {}), Error);
  }
}
