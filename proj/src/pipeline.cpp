#include "redispatch/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "redispatch/case_io.hpp"
#include "redispatch/error.hpp"

namespace redispatch {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class F>
auto in_stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const CoalitionFailure& e) {
    throw CoalitionFailure(e.coalition(), e.status(), fmt::format("{}: {}", name, e.what()));
  } catch (const Error& e) {
    throw Error(e.kind(), fmt::format("{}: {}", name, e.what()));
  }
}

Formulation parse_formulation(const std::string& s) {
  if (s == "dc") return Formulation::dc;
  if (s == "ac") return Formulation::ac;
  throw Error(ErrorKind::invalid_input, "unknown formulation " + s);
}

// Rounds to 0.1 without printing "-0.0".
std::string money(double x) {
  const double r = std::round(x * 10.0) / 10.0;
  return fmt::format("{:.1f}", r == 0.0 ? 0.0 : r);
}

std::string tuple_of(const std::vector<int>& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s + ")";
}

std::string tuple_of(const std::vector<double>& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + money(v[i]);
  return s + ")";
}

std::vector<std::string> header_cells() {
  return {"Case",
          "Formulation",
          "Busses",
          "Lines",
          "Congested Lines",
          "Total system costs ($)",
          "Total redispatch costs ($)",
          "Shapley Values ($)",
          "Runtime"};
}

std::vector<std::string> row_cells(const AllocationReport& r) {
  return {r.case_name,
          to_string(r.formulation),
          std::to_string(r.buses),
          std::to_string(r.lines),
          tuple_of(r.players),
          money(r.total_cost),
          money(r.redispatch_cost),
          tuple_of(r.shapley),
          format_duration(r.times.total)};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

const char* to_string(ReportFormat f) noexcept {
  switch (f) {
    case ReportFormat::table: return "table";
    case ReportFormat::json: return "json";
    case ReportFormat::csv: return "csv";
  }
  return "unknown";
}

void RunConfig::validate() const {
  if (case_name.empty()) throw Error(ErrorKind::invalid_input, "no case given");
  if (!(power_flow.tolerance > 0.0) || !(opf_tolerance > 0.0) || !(congestion_tolerance > 0.0))
    throw Error(ErrorKind::invalid_input, "tolerances must be positive");
  if (power_flow.max_iterations < 1) throw Error(ErrorKind::invalid_input, "power flow needs at least one iteration");
  if (workers < 1) throw Error(ErrorKind::invalid_input, "worker count must be at least 1");
  if (max_players < 0) throw Error(ErrorKind::invalid_input, "negative player cap");
}

Network load_case(const std::string& name_or_path) {
  if (lookup_catalog(name_or_path)) return load_builtin_case(name_or_path);
  const std::filesystem::path path(name_or_path);
  if (!std::filesystem::exists(path))
    throw Error(ErrorKind::invalid_input, fmt::format("'{}' is neither a catalog case nor a file", name_or_path));
  return load_matpower_case(path);
}

PipelineRun run_pipeline(const RunConfig& config) {
  config.validate();
  const auto t_start = Clock::now();
  PipelineRun run;
  AllocationReport& rep = run.report;
  rep.formulation = config.formulation;

  auto t0 = Clock::now();
  run.network = in_stage("load", [&] {
    auto net = std::make_shared<Network>(load_case(config.case_name));
    net->validate();
    return std::shared_ptr<const Network>(std::move(net));
  });
  const Network& net = *run.network;
  rep.case_name = net.name;
  rep.buses = net.bus_count();
  rep.lines = net.branch_count();
  rep.times.load = seconds_since(t0);
  run.stages.push_back({"load", config.case_name, rep.times.load});

  OpfOptions opf;
  opf.ipm.feasibility_tol = opf.ipm.stationarity_tol = opf.ipm.complementarity_tol = config.opf_tolerance;
  opf.ipm.acceptable_tol = std::max(opf.ipm.acceptable_tol, config.opf_tolerance);
  opf.ipm.trace = config.solver_trace;

  t0 = Clock::now();
  run.power_flow = in_stage("power flow", [&] {
    Network dispatched = net;
    if (config.market_clearing == MarketClearing::relaxed_opf) {
      run.market_clearing = solve_opf({run.network, LimitMask(net, {}), config.formulation}, OpfStart::flat(), opf);
      if (run.market_clearing->status != OpfStatus::optimal)
        throw Error(ErrorKind::opf_failure, "market clearing OPF: " + run.market_clearing->message);
      for (int g = 0; g < net.generator_count(); ++g) {
        Generator& gen = dispatched.generators[g];
        gen.p = net.to_pu(run.market_clearing->gen_p[g]);
        if (config.formulation == Formulation::ac) gen.v_set = run.market_clearing->magnitudes[gen.bus];
      }
    }
    if (config.formulation == Formulation::dc) return dc_power_flow(dispatched);
    PowerFlowSolution pf = ac_power_flow(dispatched, std::nullopt, config.power_flow);
    if (!pf.converged) {
      throw Error(ErrorKind::power_flow_divergence,
                  fmt::format("no convergence in {} iterations, mismatch {:.3e} pu", pf.iterations,
                              pf.max_mismatch));
    }
    return pf;
  });
  rep.times.power_flow = seconds_since(t0);
  run.stages.push_back({"power flow",
                        config.market_clearing == MarketClearing::base_dispatch ? "case dispatch"
                                                                                : "relaxed OPF dispatch",
                        rep.times.power_flow});

  t0 = Clock::now();
  run.congestions = in_stage("congestion", [&] {
    return detect_congestions(net, run.power_flow, config.congestion_tolerance);
  });
  rep.times.congestion = seconds_since(t0);
  run.stages.push_back({"congestion", "power flow", rep.times.congestion});
  for (const Player& p : run.congestions.players) {
    rep.players.push_back(p.line_number());
    rep.player_flows.push_back(p.flow);
    rep.player_limits.push_back(p.limit);
  }

  t0 = Clock::now();
  std::atomic<int> solves{0};
  GameOptions go;
  go.opf = opf;
  go.workers = config.workers;
  go.max_players = config.max_players;
  go.warm_start = config.warm_start;
  go.on_solve = [&](Coalition c, const OpfSolution& s) {
    ++solves;
    if (config.on_solve) config.on_solve(c, s);
  };
  run.allocation = in_stage("shapley", [&] {
    run.game = std::make_shared<Game>(run.network, run.congestions, config.formulation, go);
    if (config.cache_path && std::filesystem::exists(*config.cache_path)) {
      std::ifstream in(*config.cache_path);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, fmt::format("cache {}: {}", config.cache_path->string(), e.what()));
      }
      run.game->import_cache(j);
    }
    auto save = [&] {
      if (!config.cache_path) return;
      std::ofstream out(*config.cache_path);
      out << run.game->export_cache().dump(1) << '\n';
    };
    try {
      Allocation a = shapley_values(*run.game);
      save();
      return a;
    } catch (...) {
      save();
      throw;
    }
  });
  rep.times.shapley = seconds_since(t0);
  run.stages.push_back({"shapley", "OPF", rep.times.shapley});

  rep.total_cost = run.allocation.total_cost;
  rep.redispatch_cost = run.allocation.redispatch_cost;
  rep.shapley = run.allocation.values;
  rep.warnings = run.allocation.warnings;
  rep.opf_solves = solves.load();
  rep.times.total = seconds_since(t_start);
  return run;
}

std::string format_duration(double seconds) {
  const long s = std::lround(std::max(0.0, seconds));
  return fmt::format("{}:{:02}:{:02}", s / 3600, s / 60 % 60, s % 60);
}

std::string emit_report(const AllocationReport& report, ReportFormat format) {
  const bool empty = report.case_name.empty();
  switch (format) {
    case ReportFormat::json:
      return report_to_json(report).dump(2) + "\n";
    case ReportFormat::csv: {
      std::string out;
      auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + csv_field(cells[i]);
        out += "\n";
      };
      line(header_cells());
      if (!empty) line(row_cells(report));
      return out;
    }
    case ReportFormat::table: {
      std::vector<std::vector<std::string>> rows{header_cells()};
      if (!empty) rows.push_back(row_cells(report));
      std::vector<std::size_t> width(rows[0].size(), 0);
      for (const auto& r : rows)
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
      std::string out;
      auto line = [&](const std::vector<std::string>& r) {
        for (std::size_t i = 0; i < r.size(); ++i) {
          out += fmt::format("{}{:<{}}", i ? " | " : "", r[i], width[i]);
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        out += "\n";
      };
      line(rows[0]);
      std::string rule;
      for (std::size_t i = 0; i < width.size(); ++i) rule += (i ? "-+-" : "") + std::string(width[i], '-');
      out += rule + "\n";
      for (std::size_t k = 1; k < rows.size(); ++k) line(rows[k]);
      for (const auto& w : report.warnings) out += "warning: " + w + "\n";
      return out;
    }
  }
  return {};
}

nlohmann::json report_to_json(const AllocationReport& r) {
  return {{"case", r.case_name},
          {"formulation", to_string(r.formulation)},
          {"buses", r.buses},
          {"lines", r.lines},
          {"players", r.players},
          {"player_flows", r.player_flows},
          {"player_limits", r.player_limits},
          {"total_cost", r.total_cost},
          {"redispatch_cost", r.redispatch_cost},
          {"shapley", r.shapley},
          {"opf_solves", r.opf_solves},
          {"times",
           {{"load", r.times.load},
            {"power_flow", r.times.power_flow},
            {"congestion", r.times.congestion},
            {"shapley", r.times.shapley},
            {"total", r.times.total}}},
          {"runtime", format_duration(r.times.total)},
          {"warnings", r.warnings}};
}

AllocationReport report_from_json(const nlohmann::json& j) {
  try {
    AllocationReport r;
    r.case_name = j.at("case").get<std::string>();
    r.formulation = parse_formulation(j.at("formulation").get<std::string>());
    r.buses = j.at("buses").get<int>();
    r.lines = j.at("lines").get<int>();
    r.players = j.at("players").get<std::vector<int>>();
    r.player_flows = j.at("player_flows").get<std::vector<double>>();
    r.player_limits = j.at("player_limits").get<std::vector<double>>();
    r.total_cost = j.at("total_cost").get<double>();
    r.redispatch_cost = j.at("redispatch_cost").get<double>();
    r.shapley = j.at("shapley").get<std::vector<double>>();
    r.opf_solves = j.at("opf_solves").get<int>();
    const auto& t = j.at("times");
    r.times = {t.at("load").get<double>(), t.at("power_flow").get<double>(), t.at("congestion").get<double>(),
               t.at("shapley").get<double>(), t.at("total").get<double>()};
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed report: ") + e.what());
  }
}

std::string export_graph(const Network& net, const std::vector<BranchFlow>& flows,
                         const std::vector<double>& gen_p, const std::vector<int>& player_branches) {
  if (static_cast<int>(flows.size()) != net.branch_count() ||
      static_cast<int>(gen_p.size()) != net.generator_count())
    throw Error(ErrorKind::invalid_input, "solution does not match the network");

  std::vector<double> net_injection(net.bus_count(), 0.0);
  for (int i = 0; i < net.bus_count(); ++i) net_injection[i] = -net.to_mw(net.buses[i].p_load);
  for (int g = 0; g < net.generator_count(); ++g) {
    if (net.generators[g].in_service) net_injection[net.generators[g].bus] += gen_p[g];
  }
  double s_top = 0.0;
  for (int k = 0; k < net.branch_count(); ++k) {
    if (net.branches[k].in_service) s_top = std::max(s_top, flows[k].s_max());
  }

  std::ostringstream out;
  out << "graph \"" << net.name << "\" {\n";
  out << "  node [shape=circle, style=filled, fontsize=10];\n";
  for (int i = 0; i < net.bus_count(); ++i) {
    const double inj = net_injection[i];
    const char* color = inj > 1e-9 ? "green" : inj < -1e-9 ? "red" : "lightgray";
    out << fmt::format("  b{} [label=\"{}\", fillcolor={}, tooltip=\"{:.1f} MW\"];\n", net.buses[i].number,
                       net.buses[i].number, color, inj);
  }
  for (int k = 0; k < net.branch_count(); ++k) {
    const Branch& br = net.branches[k];
    if (!br.in_service) continue;
    const double s = flows[k].s_max();
    const double width = 0.5 + 7.5 * (s_top > 0.0 ? s / s_top : 0.0);
    const bool player = std::find(player_branches.begin(), player_branches.end(), k) != player_branches.end();
    out << fmt::format("  b{} -- b{} [penwidth={:.2f}, color={}, label=\"{}{}\", tooltip=\"{:.1f} MVA\"];\n",
                       net.buses[br.from].number, net.buses[br.to].number, width, player ? "orange" : "blue",
                       player ? "L" : "", player ? std::to_string(k + 1) : std::string(), s);
  }
  out << "}\n";
  return out.str();
}

}  // namespace redispatch
