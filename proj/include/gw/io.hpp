#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gw/conditioning.hpp"
#include "gw/lattice.hpp"
#include "gw/model.hpp"

namespace gw {

/// {"d": 2, "types": [{"atoms": [{"k": [0, 0], "p": 0.4}, ...]}, ...]}
BranchingModel model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const BranchingModel& model);
BranchingModel load_model(const std::filesystem::path& path);
void save_model(const BranchingModel& model, const std::filesystem::path& path);

/// FNV-1a (64 bit) of the canonical JSON text, as 16 hex digits.
std::string model_hash(const BranchingModel& model);

/// "(1,0)", "1,0" or "1".
State parse_state(std::string_view text, std::size_t d);
/// finite:[(1,1),(2,0)] | cofinite:[...] | norm=3 | norm>=3 | nonextinct
ConditioningSet parse_set(std::string_view text, std::size_t d);
/// "1:(1,1);3:(0,2)": observation times and states.
PathEvent parse_path(std::string_view text, State x0);

/// Shortest text that reads back as the same double (17 significant digits).
std::string format_double(double x);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}
  void header(const std::vector<std::string>& names);
  CsvWriter& cell(double x);
  CsvWriter& cell(long long x);
  CsvWriter& cell(int x) { return cell(static_cast<long long>(x)); }
  CsvWriter& cell(std::size_t x) { return cell(static_cast<long long>(x)); }
  CsvWriter& cell(std::string_view s);
  CsvWriter& cell(const State& x);
  void end_row();

 private:
  void sep();
  std::ostream& out_;
  bool first_ = true;
};

}  // namespace gw
