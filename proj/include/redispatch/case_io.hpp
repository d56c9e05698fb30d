#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "redispatch/grid_model.hpp"

namespace redispatch {

/// Parses the MATPOWER case-struct subset (mpc.baseMVA, mpc.bus, mpc.gen,
/// mpc.branch, mpc.gencost). Other `mpc.*` assignments are skipped.
/// Throws ParseError with the offending line number.
Network parse_matpower_case(std::string_view text);
Network load_matpower_case(const std::filesystem::path& path);

/// Re-parseable MATPOWER text; numbers carry 17 significant digits.
std::string serialize_case(const Network& net);

/// Mirror of the network in MW/MVAr/degrees for external tooling.
nlohmann::json network_to_json(const Network& net);

/// True when both networks agree element by element to `rel_tol`.
bool structurally_equal(const Network& a, const Network& b, double rel_tol = 1e-12);

// Modifications. Line and generator numbers are 1-based row positions in
// the case file; bus numbers are external bus ids.
namespace edit {
struct SetBranchLimit { int line; double mva; };
struct IncreaseBranchLimit { int line; double mva; };
struct SetAllBranchLimits { double mva; };
struct ScaleBranchLimits { double factor; };
struct SetGenCost { int gen; CostCurve cost; };
struct SetGenDispatch { int gen; double p_mw; };
struct SetGenLimits { int gen; double p_min, p_max, q_min, q_max; };
struct MoveGenerator { int gen; int bus; };
struct MoveLoad { int from_bus; int to_bus; };
}  // namespace edit

using CaseEdit = std::variant<edit::SetBranchLimit, edit::IncreaseBranchLimit,
                              edit::SetAllBranchLimits, edit::ScaleBranchLimits,
                              edit::SetGenCost, edit::SetGenDispatch,
                              edit::SetGenLimits, edit::MoveGenerator, edit::MoveLoad>;

/// Absolute edits overwrite a field; relative ones (increase, scale) do not
/// commute with themselves.
bool is_absolute(const CaseEdit& e);
std::string describe(const CaseEdit& e);

struct CaseModification {
  std::string case_name;
  std::vector<CaseEdit> edits;
};

/// Returns a modified copy. Throws Error(invalid_input) on a reference to a
/// missing line, generator or bus.
Network apply_modifications(const Network& net, const CaseModification& mod);

struct CatalogEntry {
  std::string case_name;
  std::string file_name;  // under the data directory
  CaseModification modification;
};

/// Congestion-inducing modifications for the seven benchmark grids.
const std::vector<CatalogEntry>& builtin_catalog();
std::optional<CatalogEntry> lookup_catalog(std::string_view case_name);

/// Directory holding the bundled case files: $REDISPATCH_DATA_DIR if set,
/// the build-time data directory otherwise.
std::filesystem::path data_directory();

/// Loads a catalog case (file + modifications) by name.
Network load_builtin_case(std::string_view case_name);

}  // namespace redispatch
