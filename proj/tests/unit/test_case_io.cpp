#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "redispatch/case_io.hpp"
#include "redispatch/error.hpp"

using namespace redispatch;

namespace {

const char* kTwoBus = R"(function mpc = two_bus
mpc.version = '2';
mpc.baseMVA = 100;
% bus data
mpc.bus = [
  1 3 0  0  0 0 1 1 0 230 1 1.1 0.9;
  2 1 50 10 0 0 1 1 0 230 1 1.1 0.9;
];
mpc.gen = [
  1 50 0 100 -100 1.0 100 1 200 0 0 0 0 0 0 0 0 0 0 0 0;
];
mpc.branch = [
  1 2 0.01 0.1 0.02 120 0 0 0 0 1 -360 360;
];
mpc.gencost = [
  2 0 0 3 0.01 20 5;
];
)";

int error_line(const std::string& text) {
  try {
    parse_matpower_case(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("minimal two-bus case") {
  const Network net = parse_matpower_case(kTwoBus);
  CHECK(net.bus_count() == 2);
  CHECK(net.branch_count() == 1);
  CHECK(net.generator_count() == 1);
  CHECK(net.base_mva == 100.0);
  CHECK(net.buses[1].p_load == doctest::Approx(0.5));
  CHECK(net.branches[0].s_limit == doctest::Approx(1.2));
  CHECK(net.branches[0].tap == 1.0);
  CHECK(net.generators[0].cost.a == 0.01);
  CHECK(net.generators[0].cost.b == 20.0);
  CHECK(net.generators[0].cost.c == 5.0);
  CHECK_NOTHROW(net.validate());
}

TEST_CASE("case9 file dimensions") {
  const Network net = load_matpower_case(data_directory() / "case9.m");
  CHECK(net.bus_count() == 9);
  CHECK(net.branch_count() == 9);
  CHECK(net.generator_count() == 3);
}

TEST_CASE("parse serialize parse round trip") {
  SUBCASE("two bus") {
    const Network a = parse_matpower_case(kTwoBus);
    CHECK(structurally_equal(a, parse_matpower_case(serialize_case(a))));
  }
  for (const char* file : {"case9.m", "case39.m", "case300.m", "pglib_opf_case118_ieee.m"}) {
    CAPTURE(file);
    const Network a = load_matpower_case(data_directory() / file);
    const std::string text = serialize_case(a);
    const Network b = parse_matpower_case(text);
    CHECK(structurally_equal(a, b));
    CHECK(serialize_case(b) == text);
  }
}

TEST_CASE("parse errors carry line numbers") {
  CHECK(error_line(replace(kTwoBus, "0.01 0.1 0.02", "0.01 x0.1 0.02")) == 13);
  CHECK(error_line(replace(kTwoBus, "  2 1 50 10 0 0 1 1 0 230 1 1.1 0.9;", "  2 1 50 10 0;")) == 7);
  CHECK(error_line(replace(kTwoBus, "  1 2 0.01", "  1 7 0.01")) == 13);
  CHECK(error_line(replace(kTwoBus, "2 0 0 3 0.01 20 5", "1 0 0 2 0 0 10 5")) == 16);
  CHECK(error_line(replace(kTwoBus, "mpc.baseMVA = 100;", "")) > 0);
  CHECK(error_line(replace(kTwoBus, "mpc.branch = [", "mpc.lines = [")) > 0);
  CHECK(error_line(std::string(kTwoBus) + "x = 3 +;\n") == 18);
}

TEST_CASE("JSON mirror") {
  const Network net = parse_matpower_case(kTwoBus);
  const nlohmann::json j = network_to_json(net);
  CHECK(j.at("buses").size() == 2);
  CHECK(j.at("branches").size() == 1);
  CHECK(j.at("branches")[0].at("rate_a_mva").get<double>() == doctest::Approx(120.0));
}

TEST_CASE("modifications") {
  const Network base = load_matpower_case(data_directory() / "case39.m");

  SUBCASE("empty edit list is the identity") {
    CHECK(structurally_equal(apply_modifications(base, {"case39", {}}), base, 0.0));
  }
  SUBCASE("case39 limits change only lines 1 and 4") {
    const Network m = apply_modifications(base, lookup_catalog("case39")->modification);
    for (int k = 0; k < base.branch_count(); ++k) {
      CAPTURE(k);
      if (k == 0) CHECK(m.to_mw(m.branches[k].s_limit) == doctest::Approx(100.0));
      else if (k == 3) CHECK(m.to_mw(m.branches[k].s_limit) == doctest::Approx(90.0));
      else CHECK(m.branches[k].s_limit == base.branches[k].s_limit);
    }
    Network restored = m;
    restored.branches[0].s_limit = base.branches[0].s_limit;
    restored.branches[3].s_limit = base.branches[3].s_limit;
    CHECK(structurally_equal(restored, base, 0.0));
  }
  SUBCASE("scaling multiplies every nonzero limit") {
    const Network m = apply_modifications(base, {"x", {edit::ScaleBranchLimits{1.4}}});
    for (int k = 0; k < base.branch_count(); ++k)
      CHECK(m.branches[k].s_limit == doctest::Approx(1.4 * base.branches[k].s_limit));
  }
  SUBCASE("increase adds to the existing limit") {
    const Network m = apply_modifications(base, {"x", {edit::IncreaseBranchLimit{2, 100.0}}});
    CHECK(m.to_mw(m.branches[1].s_limit) == doctest::Approx(base.to_mw(base.branches[1].s_limit) + 100.0));
  }
  SUBCASE("absolute edits are idempotent and the input is untouched") {
    const CaseModification mod = lookup_catalog("case9")->modification;
    const Network c9 = load_matpower_case(data_directory() / "case9.m");
    const std::string before = serialize_case(c9);
    const Network once = apply_modifications(c9, mod);
    const Network twice = apply_modifications(once, mod);
    CHECK(structurally_equal(once, twice, 0.0));
    CHECK(serialize_case(c9) == before);
    for (const CaseEdit& e : mod.edits) CHECK(is_absolute(e));
  }
  SUBCASE("relative edits are flagged") {
    CHECK_FALSE(is_absolute(edit::ScaleBranchLimits{1.4}));
    CHECK_FALSE(is_absolute(edit::IncreaseBranchLimit{1, 10.0}));
  }
  SUBCASE("references to missing elements") {
    CHECK_THROWS_AS(apply_modifications(base, {"x", {edit::SetBranchLimit{47, 1.0}}}), Error);
    CHECK_THROWS_AS(apply_modifications(base, {"x", {edit::SetGenCost{11, {}}}}), Error);
    CHECK_THROWS_AS(apply_modifications(base, {"x", {edit::MoveGenerator{1, 999}}}), Error);
  }
  SUBCASE("moving a load") {
    const Network m = apply_modifications(base, {"x", {edit::MoveLoad{3, 4}}});
    CHECK(m.buses[2].p_load == 0.0);
    CHECK(m.buses[3].p_load == doctest::Approx(base.buses[2].p_load + base.buses[3].p_load));
    CHECK(m.buses[3].q_load == doctest::Approx(base.buses[2].q_load + base.buses[3].q_load));
  }
}

TEST_CASE("builtin catalog") {
  CHECK(builtin_catalog().size() == 7);
  CHECK(lookup_catalog("case118")->modification.edits.empty());
  CHECK(lookup_catalog("case1354")->modification.edits.empty());
  CHECK_FALSE(lookup_catalog("case14").has_value());

  const auto c2383 = lookup_catalog("case2383")->modification.edits;
  REQUIRE(c2383.size() == 6);
  const std::vector<std::pair<int, double>> expected{{24, 100}, {169, 200}, {292, 200},
                                                      {321, 100}, {322, 10}, {1381, 10}};
  for (std::size_t i = 0; i < 6; ++i) {
    const auto* e = std::get_if<edit::IncreaseBranchLimit>(&c2383[i]);
    REQUIRE(e);
    CHECK(e->line == expected[i].first);
    CHECK(e->mva == expected[i].second);
  }

  const Network c9 = load_builtin_case("case9");
  CHECK(c9.name == "case9");
  CHECK(c9.to_mw(c9.branches[0].s_limit) == doctest::Approx(70.0));
  CHECK(c9.to_mw(c9.branches[1].s_limit) == doctest::Approx(40.0));
  CHECK(c9.generators[0].cost.b == 30.0);
  CHECK(c9.generators[1].cost.b == 25.0);
  CHECK(c9.generators[2].cost.b == 20.0);

  const Network c300 = load_builtin_case("case300");
  for (const Branch& br : c300.branches) CHECK(c300.to_mw(br.s_limit) == doctest::Approx(1000.0));

  const auto c793 = lookup_catalog("case793")->modification.edits;
  REQUIRE(c793.size() == 1);
  CHECK(std::get<edit::ScaleBranchLimits>(c793[0]).factor == 1.4);
}

TEST_CASE("missing case files") {
  const auto entry = lookup_catalog("case793");
  if (!std::filesystem::exists(data_directory() / entry->file_name)) {
    CHECK_THROWS_AS(load_builtin_case("case793"), Error);
  }
  CHECK_THROWS_AS(load_matpower_case("/nonexistent/case.m"), Error);
  CHECK_THROWS_AS(load_builtin_case("nope"), Error);
}

TEST_CASE("data directory override") {
  const auto dir = std::filesystem::temp_directory_path() / "redispatch_data_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "case9.m") << kTwoBus;
  setenv("REDISPATCH_DATA_DIR", dir.c_str(), 1);
  CHECK(data_directory() == dir);
  CHECK_THROWS_AS(load_builtin_case("case9"), Error);  // edits reference generator 2
  unsetenv("REDISPATCH_DATA_DIR");
  std::filesystem::remove_all(dir);
  CHECK(load_builtin_case("case9").bus_count() == 9);
}
