#include "redispatch/case_io.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "redispatch/error.hpp"

namespace redispatch {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

struct Row {
  int line;
  std::vector<double> values;
};

struct RawCase {
  std::string name;
  std::optional<double> base_mva;
  std::unordered_map<std::string, std::vector<Row>> matrices;
  std::unordered_map<std::string, int> matrix_line;
  int last_line = 0;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '\'') quoted = !quoted;
    if (line[i] == '%' && !quoted) return line.substr(0, i);
  }
  return line;
}

double parse_number(std::string_view token, int line) {
  std::string s(token);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw ParseError(line, "malformed number '" + s + "'");
  }
  return v;
}

// Splits matrix content into rows on ';'; `row_open` carries a row that
// continues past the end of a physical line.
void consume_matrix_text(std::string_view text, int line, std::vector<Row>& rows,
                         bool& row_open) {
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t semi = text.find(';', start);
    const std::string_view segment =
        text.substr(start, semi == std::string_view::npos ? std::string_view::npos : semi - start);
    std::vector<double> values;
    std::size_t i = 0;
    while (i < segment.size()) {
      while (i < segment.size() && (std::isspace(static_cast<unsigned char>(segment[i])) || segment[i] == ',')) ++i;
      std::size_t j = i;
      while (j < segment.size() && !std::isspace(static_cast<unsigned char>(segment[j])) && segment[j] != ',') ++j;
      if (j > i) values.push_back(parse_number(segment.substr(i, j - i), line));
      i = j;
    }
    if (!values.empty()) {
      if (row_open && !rows.empty()) {
        rows.back().values.insert(rows.back().values.end(), values.begin(), values.end());
      } else {
        rows.push_back({line, std::move(values)});
      }
    }
    if (semi == std::string_view::npos) {
      // A newline also terminates a MATPOWER matrix row.
      row_open = false;
      break;
    }
    row_open = false;
    start = semi + 1;
  }
}

RawCase scan(std::string_view text) {
  RawCase raw;
  std::string current;       // matrix being read, empty if none
  bool skipping_cell = false;
  bool row_open = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    line = trim(strip_comment(line));

    if (skipping_cell) {
      if (line.find('}') != std::string_view::npos) skipping_cell = false;
      continue;
    }
    if (!current.empty()) {
      const std::size_t close = line.find(']');
      auto& rows = raw.matrices[current];
      consume_matrix_text(line.substr(0, close), line_no, rows, row_open);
      if (close != std::string_view::npos) current.clear();
      continue;
    }
    if (line.empty()) continue;
    if (line.starts_with("function")) {
      const std::size_t eq = line.find('=');
      raw.name = std::string(trim(eq == std::string_view::npos ? line.substr(8) : line.substr(eq + 1)));
      continue;
    }
    if (line == "end" || line == "return" || line == "end;") continue;
    if (!line.starts_with("mpc.")) {
      throw ParseError(line_no, "unsupported statement '" + std::string(line) + "'");
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(line_no, "expected assignment");
    }
    const std::string field(trim(line.substr(4, eq - 4)));
    std::string_view value = trim(line.substr(eq + 1));
    if (value.starts_with('[')) {
      value.remove_prefix(1);
      const std::size_t close = value.find(']');
      auto& rows = raw.matrices[field];
      rows.clear();
      raw.matrix_line[field] = line_no;
      row_open = false;
      consume_matrix_text(value.substr(0, close), line_no, rows, row_open);
      if (close == std::string_view::npos) current = field;
    } else if (value.starts_with('{')) {
      if (value.find('}') == std::string_view::npos) skipping_cell = true;
    } else if (field == "baseMVA") {
      if (value.ends_with(';')) value.remove_suffix(1);
      raw.base_mva = parse_number(trim(value), line_no);
    }
  }
  raw.last_line = line_no;
  if (!current.empty()) {
    throw ParseError(line_no, "unterminated matrix mpc." + current);
  }
  return raw;
}

const std::vector<Row>& require_matrix(const RawCase& raw, const std::string& name,
                                       std::size_t min_cols) {
  auto it = raw.matrices.find(name);
  if (it == raw.matrices.end()) {
    throw ParseError(raw.last_line, "missing mpc." + name);
  }
  for (const Row& r : it->second) {
    if (r.values.size() < min_cols) {
      throw ParseError(r.line, fmt::format("mpc.{} row has {} columns, need at least {}",
                                           name, r.values.size(), min_cols));
    }
  }
  return it->second;
}

BusKind bus_kind(double code, int line) {
  switch (static_cast<int>(code)) {
    case 1: return BusKind::pq;
    case 2: return BusKind::pv;
    case 3: return BusKind::slack;
    default:
      throw ParseError(line, fmt::format("unsupported bus type {}", code));
  }
}

CostCurve polynomial_cost(const Row& row) {
  const auto& v = row.values;
  if (static_cast<int>(v[0]) != 2) {
    throw ParseError(row.line, "only polynomial (model 2) generator costs are supported");
  }
  const int n = static_cast<int>(v[3]);
  if (n < 0 || v.size() < static_cast<std::size_t>(4 + n)) {
    throw ParseError(row.line, "gencost row shorter than its coefficient count");
  }
  CostCurve c;
  for (int k = 0; k < n; ++k) {
    const int power = n - 1 - k;
    const double coef = v[4 + k];
    if (power == 2) c.a = coef;
    else if (power == 1) c.b = coef;
    else if (power == 0) c.c = coef;
    else if (coef != 0.0) throw ParseError(row.line, "cost polynomials above degree 2 are not supported");
  }
  return c;
}

}  // namespace

Network parse_matpower_case(std::string_view text) {
  const RawCase raw = scan(text);
  if (!raw.base_mva) throw ParseError(raw.last_line, "missing mpc.baseMVA");

  Network net;
  net.name = raw.name;
  net.base_mva = *raw.base_mva;
  if (!(net.base_mva > 0.0)) throw ParseError(raw.last_line, "baseMVA must be positive");
  const double base = net.base_mva;

  std::unordered_map<int, int> index_of;
  for (const Row& r : require_matrix(raw, "bus", 13)) {
    const auto& v = r.values;
    Bus b;
    b.number = static_cast<int>(v[0]);
    b.kind = bus_kind(v[1], r.line);
    b.p_load = v[2] / base;
    b.q_load = v[3] / base;
    b.shunt_g = v[4] / base;
    b.shunt_b = v[5] / base;
    b.area = static_cast<int>(v[6]);
    b.v_init = v[7];
    b.angle_init = v[8] * kDeg;
    b.base_kv = v[9];
    b.zone = static_cast<int>(v[10]);
    b.v_max = v[11];
    b.v_min = v[12];
    if (!index_of.emplace(b.number, net.bus_count()).second) {
      throw ParseError(r.line, fmt::format("duplicate bus number {}", b.number));
    }
    net.buses.push_back(b);
  }
  const auto bus_ref = [&](double number, int line) {
    auto it = index_of.find(static_cast<int>(number));
    if (it == index_of.end()) {
      throw ParseError(line, fmt::format("unknown bus {}", number));
    }
    return it->second;
  };

  for (const Row& r : require_matrix(raw, "gen", 10)) {
    const auto& v = r.values;
    Generator g;
    g.bus = bus_ref(v[0], r.line);
    g.p = v[1] / base;
    g.q = v[2] / base;
    g.q_max = v[3] / base;
    g.q_min = v[4] / base;
    g.v_set = v[5];
    g.m_base = v[6];
    g.in_service = v[7] > 0.0;
    g.p_max = v[8] / base;
    g.p_min = v[9] / base;
    net.generators.push_back(g);
  }

  for (const Row& r : require_matrix(raw, "branch", 11)) {
    const auto& v = r.values;
    Branch br;
    br.from = bus_ref(v[0], r.line);
    br.to = bus_ref(v[1], r.line);
    br.r = v[2];
    br.x = v[3];
    br.charging_b = v[4];
    br.s_limit = v[5] / base;
    br.rate_b = v[6] / base;
    br.rate_c = v[7] / base;
    br.tap = v[8] == 0.0 ? 1.0 : v[8];
    br.shift = v[9] * kDeg;
    br.in_service = v[10] > 0.0;
    if (v.size() >= 13) {
      br.angle_min = v[11];
      br.angle_max = v[12];
    }
    net.branches.push_back(br);
  }

  if (raw.matrices.contains("gencost")) {
    const auto& rows = require_matrix(raw, "gencost", 4);
    if (rows.size() < net.generators.size()) {
      throw ParseError(raw.matrix_line.at("gencost"),
                       fmt::format("mpc.gencost has {} rows for {} generators",
                                   rows.size(), net.generators.size()));
    }
    // Rows past the generator count hold reactive costs, which are ignored.
    for (std::size_t k = 0; k < net.generators.size(); ++k) {
      net.generators[k].cost = polynomial_cost(rows[k]);
    }
  }
  return net;
}

Network load_matpower_case(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::parse, "cannot open case file " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  Network net = parse_matpower_case(buffer.str());
  if (net.name.empty()) net.name = path.stem().string();
  return net;
}

std::string serialize_case(const Network& net) {
  const double base = net.base_mva;
  const auto num = [](double v) { return fmt::format("{:.17g}", v); };
  std::string out;
  out += fmt::format("function mpc = {}\n\n", net.name.empty() ? "case" : net.name);
  out += "%% MATPOWER Case Format : Version 2\nmpc.version = '2';\n\n";
  out += fmt::format("%% system MVA base\nmpc.baseMVA = {};\n\n", num(base));

  out += "%% bus data\n%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin\nmpc.bus = [\n";
  for (const Bus& b : net.buses) {
    out += fmt::format("\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{};\n", b.number,
                       static_cast<int>(b.kind), num(b.p_load * base), num(b.q_load * base),
                       num(b.shunt_g * base), num(b.shunt_b * base), b.area, num(b.v_init),
                       num(b.angle_init / kDeg), num(b.base_kv), b.zone, num(b.v_max), num(b.v_min));
  }
  out += "];\n\n%% generator data\n%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin\nmpc.gen = [\n";
  for (const Generator& g : net.generators) {
    out += fmt::format("\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{};\n", net.buses[g.bus].number,
                       num(g.p * base), num(g.q * base), num(g.q_max * base), num(g.q_min * base),
                       num(g.v_set), num(g.m_base), g.in_service ? 1 : 0, num(g.p_max * base),
                       num(g.p_min * base));
  }
  out += "];\n\n%% branch data\n%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax\nmpc.branch = [\n";
  for (const Branch& br : net.branches) {
    out += fmt::format("\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{};\n",
                       net.buses[br.from].number, net.buses[br.to].number, num(br.r), num(br.x),
                       num(br.charging_b), num(br.s_limit * base), num(br.rate_b * base),
                       num(br.rate_c * base), num(br.tap), num(br.shift / kDeg),
                       br.in_service ? 1 : 0, num(br.angle_min), num(br.angle_max));
  }
  out += "];\n\n%% generator cost data\n%\t2\tstartup\tshutdown\tn\tc2\tc1\tc0\nmpc.gencost = [\n";
  for (const Generator& g : net.generators) {
    out += fmt::format("\t2\t0\t0\t3\t{}\t{}\t{};\n", num(g.cost.a), num(g.cost.b), num(g.cost.c));
  }
  out += "];\n";
  return out;
}

nlohmann::json network_to_json(const Network& net) {
  using nlohmann::json;
  const double base = net.base_mva;
  json buses = json::array();
  for (const Bus& b : net.buses) {
    buses.push_back({{"number", b.number},
                     {"type", static_cast<int>(b.kind)},
                     {"pd_mw", b.p_load * base},
                     {"qd_mvar", b.q_load * base},
                     {"gs_mw", b.shunt_g * base},
                     {"bs_mvar", b.shunt_b * base},
                     {"area", b.area},
                     {"vm", b.v_init},
                     {"va_deg", b.angle_init / kDeg},
                     {"base_kv", b.base_kv},
                     {"zone", b.zone},
                     {"vmax", b.v_max},
                     {"vmin", b.v_min}});
  }
  json gens = json::array();
  for (const Generator& g : net.generators) {
    gens.push_back({{"bus", net.buses[g.bus].number},
                    {"pg_mw", g.p * base},
                    {"qg_mvar", g.q * base},
                    {"qmax_mvar", g.q_max * base},
                    {"qmin_mvar", g.q_min * base},
                    {"vg", g.v_set},
                    {"mbase", g.m_base},
                    {"in_service", g.in_service},
                    {"pmax_mw", g.p_max * base},
                    {"pmin_mw", g.p_min * base},
                    {"cost", {{"a", g.cost.a}, {"b", g.cost.b}, {"c", g.cost.c}}}});
  }
  json branches = json::array();
  for (const Branch& br : net.branches) {
    branches.push_back({{"from", net.buses[br.from].number},
                        {"to", net.buses[br.to].number},
                        {"r", br.r},
                        {"x", br.x},
                        {"b", br.charging_b},
                        {"rate_a_mva", br.s_limit * base},
                        {"rate_b_mva", br.rate_b * base},
                        {"rate_c_mva", br.rate_c * base},
                        {"tap", br.tap},
                        {"shift_deg", br.shift / kDeg},
                        {"in_service", br.in_service}});
  }
  return {{"name", net.name},
          {"base_mva", base},
          {"buses", std::move(buses)},
          {"generators", std::move(gens)},
          {"branches", std::move(branches)}};
}

namespace {

bool close(double a, double b, double rel) {
  if (a == b) return true;
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

bool structurally_equal(const Network& a, const Network& b, double rel) {
  if (!close(a.base_mva, b.base_mva, rel) || a.bus_count() != b.bus_count() ||
      a.branch_count() != b.branch_count() || a.generator_count() != b.generator_count()) {
    return false;
  }
  for (int i = 0; i < a.bus_count(); ++i) {
    const Bus &x = a.buses[i], &y = b.buses[i];
    if (x.number != y.number || x.kind != y.kind || x.area != y.area || x.zone != y.zone) return false;
    for (auto [u, v] : {std::pair{x.p_load, y.p_load}, {x.q_load, y.q_load}, {x.shunt_g, y.shunt_g},
                        {x.shunt_b, y.shunt_b}, {x.v_init, y.v_init}, {x.angle_init, y.angle_init},
                        {x.base_kv, y.base_kv}, {x.v_max, y.v_max}, {x.v_min, y.v_min}}) {
      if (!close(u, v, rel)) return false;
    }
  }
  for (int k = 0; k < a.branch_count(); ++k) {
    const Branch &x = a.branches[k], &y = b.branches[k];
    if (x.from != y.from || x.to != y.to || x.in_service != y.in_service) return false;
    for (auto [u, v] : {std::pair{x.r, y.r}, {x.x, y.x}, {x.charging_b, y.charging_b},
                        {x.s_limit, y.s_limit}, {x.rate_b, y.rate_b}, {x.rate_c, y.rate_c},
                        {x.tap, y.tap}, {x.shift, y.shift}}) {
      if (!close(u, v, rel)) return false;
    }
  }
  for (int k = 0; k < a.generator_count(); ++k) {
    const Generator &x = a.generators[k], &y = b.generators[k];
    if (x.bus != y.bus || x.in_service != y.in_service) return false;
    for (auto [u, v] : {std::pair{x.p, y.p}, {x.q, y.q}, {x.q_max, y.q_max}, {x.q_min, y.q_min},
                        {x.v_set, y.v_set}, {x.p_max, y.p_max}, {x.p_min, y.p_min},
                        {x.cost.a, y.cost.a}, {x.cost.b, y.cost.b}, {x.cost.c, y.cost.c}}) {
      if (!close(u, v, rel)) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Modifications

bool is_absolute(const CaseEdit& e) {
  return !std::holds_alternative<edit::IncreaseBranchLimit>(e) &&
         !std::holds_alternative<edit::ScaleBranchLimits>(e);
}

std::string describe(const CaseEdit& e) {
  struct {
    std::string operator()(const edit::SetBranchLimit& x) const { return fmt::format("set_branch_limit(line {}, {} MVA)", x.line, x.mva); }
    std::string operator()(const edit::IncreaseBranchLimit& x) const { return fmt::format("increase_branch_limit(line {}, +{} MVA)", x.line, x.mva); }
    std::string operator()(const edit::SetAllBranchLimits& x) const { return fmt::format("set_all_branch_limits({} MVA)", x.mva); }
    std::string operator()(const edit::ScaleBranchLimits& x) const { return fmt::format("scale_branch_limits({})", x.factor); }
    std::string operator()(const edit::SetGenCost& x) const { return fmt::format("set_gen_cost(gen {}, {}, {}, {})", x.gen, x.cost.a, x.cost.b, x.cost.c); }
    std::string operator()(const edit::SetGenDispatch& x) const { return fmt::format("set_gen_dispatch(gen {}, {} MW)", x.gen, x.p_mw); }
    std::string operator()(const edit::SetGenLimits& x) const { return fmt::format("set_gen_limits(gen {}, P [{}, {}] MW, Q [{}, {}] MVAr)", x.gen, x.p_min, x.p_max, x.q_min, x.q_max); }
    std::string operator()(const edit::MoveGenerator& x) const { return fmt::format("move_gen(gen {} -> bus {})", x.gen, x.bus); }
    std::string operator()(const edit::MoveLoad& x) const { return fmt::format("move_load(bus {} -> bus {})", x.from_bus, x.to_bus); }
  } visitor;
  return std::visit(visitor, e);
}

Network apply_modifications(const Network& net, const CaseModification& mod) {
  Network out = net;
  const double base = out.base_mva;
  const auto branch = [&](int line) -> Branch& {
    if (line < 1 || line > out.branch_count()) {
      throw Error(ErrorKind::invalid_input, fmt::format("{}: no line {}", mod.case_name, line));
    }
    return out.branches[line - 1];
  };
  const auto gen = [&](int k) -> Generator& {
    if (k < 1 || k > out.generator_count()) {
      throw Error(ErrorKind::invalid_input, fmt::format("{}: no generator {}", mod.case_name, k));
    }
    return out.generators[k - 1];
  };
  const auto bus = [&](int number) {
    for (int i = 0; i < out.bus_count(); ++i) {
      if (out.buses[i].number == number) return i;
    }
    throw Error(ErrorKind::invalid_input, fmt::format("{}: no bus {}", mod.case_name, number));
  };

  for (const CaseEdit& e : mod.edits) {
    if (auto* x = std::get_if<edit::SetBranchLimit>(&e)) {
      branch(x->line).s_limit = x->mva / base;
    } else if (auto* x = std::get_if<edit::IncreaseBranchLimit>(&e)) {
      branch(x->line).s_limit += x->mva / base;
    } else if (auto* x = std::get_if<edit::SetAllBranchLimits>(&e)) {
      for (Branch& br : out.branches) br.s_limit = x->mva / base;
    } else if (auto* x = std::get_if<edit::ScaleBranchLimits>(&e)) {
      for (Branch& br : out.branches) br.s_limit *= x->factor;
    } else if (auto* x = std::get_if<edit::SetGenCost>(&e)) {
      gen(x->gen).cost = x->cost;
    } else if (auto* x = std::get_if<edit::SetGenDispatch>(&e)) {
      gen(x->gen).p = x->p_mw / base;
    } else if (auto* x = std::get_if<edit::SetGenLimits>(&e)) {
      Generator& g = gen(x->gen);
      g.p_min = x->p_min / base;
      g.p_max = x->p_max / base;
      g.q_min = x->q_min / base;
      g.q_max = x->q_max / base;
    } else if (auto* x = std::get_if<edit::MoveGenerator>(&e)) {
      gen(x->gen).bus = bus(x->bus);
    } else if (auto* x = std::get_if<edit::MoveLoad>(&e)) {
      const int from = bus(x->from_bus), to = bus(x->to_bus);
      if (from != to) {
        out.buses[to].p_load += out.buses[from].p_load;
        out.buses[to].q_load += out.buses[from].q_load;
        out.buses[from].p_load = 0.0;
        out.buses[from].q_load = 0.0;
      }
    }
  }
  return out;
}

const std::vector<CatalogEntry>& builtin_catalog() {
  using namespace edit;
  static const std::vector<CatalogEntry> catalog = [] {
    std::vector<CatalogEntry> c;
    // Generation on buses 1-3 as active-power units dispatched entirely at
    // bus 1 for market clearing; loads stay on buses 5, 7, 9.
    c.push_back({"case9", "case9.m",
                 {"case9",
                  {MoveGenerator{1, 1}, MoveGenerator{2, 2}, MoveGenerator{3, 3},
                   SetGenCost{1, {0.0, 30.0, 0.0}}, SetGenCost{2, {0.0, 25.0, 0.0}},
                   SetGenCost{3, {0.0, 20.0, 0.0}},
                   SetGenLimits{1, 0.0, 300.0, 0.0, 0.0}, SetGenLimits{2, 0.0, 300.0, 0.0, 0.0},
                   SetGenLimits{3, 0.0, 300.0, 0.0, 0.0},
                   SetGenDispatch{2, 0.0}, SetGenDispatch{3, 0.0},
                   SetBranchLimit{1, 70.0}, SetBranchLimit{2, 40.0}}}});
    c.push_back({"case39", "case39.m",
                 {"case39", {SetBranchLimit{1, 100.0}, SetBranchLimit{4, 90.0}}}});
    c.push_back({"case300", "case300.m", {"case300", {SetAllBranchLimits{1000.0}}}});
    c.push_back({"case118", "pglib_opf_case118_ieee.m", {"case118", {}}});
    c.push_back({"case793", "pglib_opf_case793_goc.m", {"case793", {ScaleBranchLimits{1.4}}}});
    c.push_back({"case1354", "pglib_opf_case1354_pegase.m", {"case1354", {}}});
    c.push_back({"case2383", "case2383wp.m",
                 {"case2383",
                  {IncreaseBranchLimit{24, 100.0}, IncreaseBranchLimit{169, 200.0},
                   IncreaseBranchLimit{292, 200.0}, IncreaseBranchLimit{321, 100.0},
                   IncreaseBranchLimit{322, 10.0}, IncreaseBranchLimit{1381, 10.0}}}});
    return c;
  }();
  return catalog;
}

std::optional<CatalogEntry> lookup_catalog(std::string_view case_name) {
  for (const CatalogEntry& e : builtin_catalog()) {
    if (e.case_name == case_name) return e;
  }
  return std::nullopt;
}

#ifndef REDISPATCH_DATA_DIR
#define REDISPATCH_DATA_DIR "data"
#endif

std::filesystem::path data_directory() {
  if (const char* env = std::getenv("REDISPATCH_DATA_DIR"); env && *env) return env;
  return REDISPATCH_DATA_DIR;
}

Network load_builtin_case(std::string_view case_name) {
  const auto entry = lookup_catalog(case_name);
  if (!entry) {
    throw Error(ErrorKind::invalid_input, fmt::format("unknown catalog case '{}'", case_name));
  }
  const auto path = data_directory() / entry->file_name;
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorKind::parse, fmt::format("case file {} for {} not found", path.string(), case_name));
  }
  Network net = apply_modifications(load_matpower_case(path), entry->modification);
  net.name = entry->case_name;
  return net;
}

}  // namespace redispatch
