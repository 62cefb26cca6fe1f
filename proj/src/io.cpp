#include "gw/io.hpp"

#include <cctype>
#include <charconv>
#include <fstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "gw/errors.hpp"

namespace gw {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

int parse_int(std::string_view s) {
  s = trim(s);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw ValidationError(fmt::format("'{}' is not an integer", s));
  return v;
}

// Splits "(a),(b)" style lists at top-level commas.
std::vector<std::string_view> split_top(std::string_view s, char delim) {
  std::vector<std::string_view> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(' || s[i] == '[') ++depth;
    if (s[i] == ')' || s[i] == ']') --depth;
    if (s[i] == delim && depth == 0) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  out.push_back(s.substr(start));
  return out;
}

std::vector<State> parse_state_list(std::string_view s, std::size_t d) {
  s = trim(s);
  if (s.size() < 2 || s.front() != '[' || s.back() != ']')
    throw ValidationError(fmt::format("state list '{}' must be enclosed in [ ]", s));
  s = trim(s.substr(1, s.size() - 2));
  std::vector<State> out;
  if (s.empty()) return out;
  for (auto part : split_top(s, ',')) out.push_back(parse_state(part, d));
  return out;
}

}  // namespace

BranchingModel model_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || !j.contains("types")) throw ValidationError("model JSON needs a 'types' array");
    const auto& types = j.at("types");
    if (!types.is_array() || types.empty()) throw ValidationError("'types' must be a nonempty array");
    const std::size_t d = j.contains("d") ? j.at("d").get<std::size_t>() : types.size();
    if (d != types.size())
      throw ValidationError(fmt::format("'d' is {} but {} types are listed", d, types.size()));
    std::vector<OffspringLaw> laws;
    for (const auto& t : types) {
      OffspringLaw law;
      for (const auto& a : t.at("atoms")) law.atoms.push_back({a.at("k").get<State>(), a.at("p").get<double>()});
      laws.push_back(std::move(law));
    }
    return BranchingModel(std::move(laws));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("malformed model JSON: {}", e.what()));
  }
}

nlohmann::json model_to_json(const BranchingModel& model) {
  nlohmann::json types = nlohmann::json::array();
  for (const auto& law : model.laws()) {
    nlohmann::json atoms = nlohmann::json::array();
    for (const Atom& a : law.atoms) atoms.push_back({{"k", a.k}, {"p", a.p}});
    types.push_back({{"atoms", atoms}});
  }
  return {{"d", model.d()}, {"types", types}};
}

BranchingModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(fmt::format("cannot open model file '{}'", path.string()));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
  return model_from_json(j);
}

void save_model(const BranchingModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << model_to_json(model).dump(2) << '\n';
}

std::string model_hash(const BranchingModel& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : model_to_json(model).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

State parse_state(std::string_view text, std::size_t d) {
  std::string_view s = trim(text);
  if (!s.empty() && s.front() == '(') {
    if (s.back() != ')') throw ValidationError(fmt::format("unbalanced state '{}'", text));
    s = s.substr(1, s.size() - 2);
  }
  State x;
  for (auto part : split_top(s, ',')) x.push_back(parse_int(part));
  if (x.size() != d)
    throw ValidationError(fmt::format("state '{}' has {} coordinates, expected {}", text, x.size(), d));
  for (int c : x)
    if (c < 0) throw ValidationError(fmt::format("state '{}' has a negative coordinate", text));
  return x;
}

ConditioningSet parse_set(std::string_view text, std::size_t d) {
  const std::string_view s = trim(text);
  auto starts = [&](std::string_view p) { return s.substr(0, p.size()) == p; };
  if (s == "nonextinct") return ConditioningSet::non_extinct();
  if (starts("norm>=")) return ConditioningSet::norm_at_least(parse_int(s.substr(6)));
  if (starts("norm=")) return ConditioningSet::norm_equals(parse_int(s.substr(5)));
  if (starts("finite:")) return ConditioningSet::finite(parse_state_list(s.substr(7), d));
  if (starts("cofinite:")) return ConditioningSet::cofinite(parse_state_list(s.substr(9), d));
  throw ValidationError(fmt::format(
      "unknown set '{}'; use finite:[...], cofinite:[...], norm=m, norm>=m or nonextinct", text));
}

PathEvent parse_path(std::string_view text, State x0) {
  PathEvent ev;
  const std::size_t d = x0.size();
  ev.x0 = std::move(x0);
  for (auto part : split_top(trim(text), ';')) {
    part = trim(part);
    if (part.empty()) continue;
    const auto colon = part.find(':');
    if (colon == std::string_view::npos)
      throw ValidationError(fmt::format("path item '{}' must read time:(state)", part));
    ev.marks.push_back({parse_int(part.substr(0, colon)), parse_state(part.substr(colon + 1), d)});
  }
  ev.check(d);
  return ev;
}

std::string format_double(double x) { return fmt::format("{:.17g}", x); }

void CsvWriter::header(const std::vector<std::string>& names) {
  for (const auto& n : names) cell(std::string_view(n));
  end_row();
}

void CsvWriter::sep() {
  if (!first_) out_ << ',';
  first_ = false;
}

CsvWriter& CsvWriter::cell(double x) {
  sep();
  out_ << format_double(x);
  return *this;
}

CsvWriter& CsvWriter::cell(long long x) {
  sep();
  out_ << x;
  return *this;
}

CsvWriter& CsvWriter::cell(std::string_view s) {
  sep();
  if (s.find_first_of(",\"\n") != std::string_view::npos) {
    out_ << '"';
    for (char c : s) {
      if (c == '"') out_ << '"';
      out_ << c;
    }
    out_ << '"';
  } else {
    out_ << s;
  }
  return *this;
}

CsvWriter& CsvWriter::cell(const State& x) {
  return cell(std::string_view(fmt::format("({})", fmt::join(x, ";"))));
}

void CsvWriter::end_row() {
  out_ << '\n';
  first_ = true;
}

}  // namespace gw
