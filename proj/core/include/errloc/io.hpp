#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "errloc/dataset.hpp"
#include "errloc/metrics.hpp"
#include "errloc/slicing.hpp"
#include "errloc/strategies.hpp"

namespace errloc {

using json = nlohmann::ordered_json;

// Infinite interval ends are written as null.
json to_json(const Predicate& p);
Predicate predicate_from_json(const json& j);
json to_json(const Slice& s);
Slice slice_from_json(const json& j);
json slices_to_json(const std::vector<Slice>& slices);
std::vector<Slice> slices_from_json(const json& j);

json to_json(const AttentionRule& rule);
AttentionRule rule_from_json(const json& j);
json to_json(const FitFailure& failure);
/// Either a rule or {"strategy", "fit_failure": reason}.
json to_json(const FitResult& result);
FitResult fit_result_from_json(const json& j);

json to_json(const AttentionStats& s);
json to_json(const StepFunction& sf);
StepFunction step_function_from_json(const json& j);
/// budget,n,m rows; undefined points leave n and m empty.
void write_step_csv(const StepFunction& sf, std::ostream& out);

/// Optional values become null.
json optional_json(const std::optional<double>& v);

/// Writes through a temporary file in the same directory and renames it into
/// place, so readers never observe a partial file.
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);
json read_json_file(const std::string& path);

}  // namespace errloc
