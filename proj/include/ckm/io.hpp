#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ckm/error.hpp"
#include "ckm/geometry.hpp"
#include "ckm/kmedian.hpp"
#include "ckm/list_kmeans.hpp"
#include "ckm/lowerbound.hpp"
#include "ckm/oracle.hpp"
#include "ckm/partition.hpp"

namespace ckm {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  const bool commas = line.find(',') != std::string_view::npos;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t end = commas ? line.find(',', pos) : line.find_first_of(" \t", pos);
    if (end == std::string_view::npos) {
      end = line.size();
    }
    const auto field = trim(line.substr(pos, end - pos));
    if (commas || !field.empty()) {
      out.push_back(field);
    }
    pos = end + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') {
    s.remove_prefix(1);
  }
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace detail

/// Parses a point CSV: one point per row, numeric columns separated by
/// commas (or whitespace), '#' comment lines and blank lines skipped, and
/// an optional non-numeric header as the first row.
inline Dataset parse_csv(std::istream& in) {
  std::vector<double> coords;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  bool seen_row = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') {
      continue;
    }
    const auto fields = detail::split_fields(body);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (!detail::parse_double(fields[j], row[j])) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (!seen_row) {
        seen_row = true;  // header
        continue;
      }
      throw InvalidArgument("non-numeric value on CSV line " + std::to_string(line_no));
    }
    if (dim == 0) {
      dim = row.size();
    } else if (row.size() != dim) {
      throw InvalidArgument("CSV line " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                            " columns, expected " + std::to_string(dim));
    }
    seen_row = true;
    coords.insert(coords.end(), row.begin(), row.end());
  }
  if (coords.empty()) {
    throw InvalidArgument("CSV holds no points");
  }
  return Dataset(dim, std::move(coords));
}

inline Dataset dataset_from_json(const json& j) {
  if (!j.is_object() || !j.contains("points") || !j.at("points").is_array()) {
    throw InvalidArgument("dataset JSON needs a \"points\" array");
  }
  std::vector<Point> rows;
  for (const auto& p : j.at("points")) {
    if (!p.is_array()) {
      throw InvalidArgument("each point must be an array of numbers");
    }
    Point row;
    for (const auto& v : p) {
      if (!v.is_number()) {
        throw InvalidArgument("point coordinates must be numbers");
      }
      row.push_back(v.get<double>());
    }
    rows.push_back(std::move(row));
  }
  return Dataset::from_rows(rows);
}

/// Loads a dataset from a .json file ({"points": [[...], ...]}) or CSV.
inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open dataset '" + path + "'");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto body = detail::trim(text);
  const bool is_json = (path.size() >= 5 && path.substr(path.size() - 5) == ".json") ||
                       (!body.empty() && body.front() == '{');
  if (is_json) {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw InvalidArgument(std::string("dataset JSON does not parse: ") + e.what());
    }
    return dataset_from_json(j);
  }
  std::istringstream in2(text);
  return parse_csv(in2);
}

inline void write_csv(std::ostream& out, const Dataset& data) {
  out << std::setprecision(17);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto r = data.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      out << (j ? "," : "") << r[j];
    }
    out << '\n';
  }
}

inline json to_json(std::span<const double> p) { return json(std::vector<double>(p.begin(), p.end())); }

inline json to_json(const CenterSet& c) {
  json arr = json::array();
  for (std::size_t i = 0; i < c.size(); ++i) {
    arr.push_back(to_json(c.row(i)));
  }
  return arr;
}

inline CenterSet center_set_from_json(const json& j) {
  std::vector<Point> rows;
  for (const auto& p : j) {
    rows.push_back(p.get<Point>());
  }
  return CenterSet::from_rows(rows);
}

inline json to_json(const ConstraintFamily& f) {
  json j;
  j["type"] = f.name();
  switch (f.kind) {
    case ConstraintFamily::Kind::r_gather:
      j["r"] = f.r;
      break;
    case ConstraintFamily::Kind::r_capacity:
      j["cap"] = f.cap;
      break;
    case ConstraintFamily::Kind::exact_sizes:
      j["sizes"] = f.sizes;
      break;
    default:
      break;
  }
  return j;
}

inline ConstraintFamily constraint_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    throw InvalidArgument("constraint JSON needs a \"type\" string");
  }
  const auto type = j.at("type").get<std::string>();
  auto positive = [&](const char* key) -> std::size_t {
    if (!j.contains(key) || !j.at(key).is_number_integer() || j.at(key).get<long long>() < 0) {
      throw InvalidArgument(std::string("constraint '") + type + "' needs a nonnegative integer \"" + key + "\"");
    }
    return j.at(key).get<std::size_t>();
  };
  if (type == "unconstrained" || type == "none" || type == "k-means") {
    return ConstraintFamily::unconstrained();
  }
  if (type == "r-gather") {
    return ConstraintFamily::r_gather(positive("r"));
  }
  if (type == "r-capacity") {
    return ConstraintFamily::r_capacity(j.contains("cap") ? positive("cap") : positive("r"));
  }
  if (type == "exact-sizes") {
    if (!j.contains("sizes") || !j.at("sizes").is_array()) {
      throw InvalidArgument("exact-sizes needs a \"sizes\" array");
    }
    std::vector<std::size_t> sizes;
    for (const auto& s : j.at("sizes")) {
      if (!s.is_number_integer() || s.get<long long>() < 0) {
        throw InvalidArgument("exact sizes must be nonnegative integers");
      }
      sizes.push_back(s.get<std::size_t>());
    }
    return ConstraintFamily::exact(std::move(sizes));
  }
  throw InvalidArgument("unknown constraint type '" + type + "'");
}

inline json to_json(const ListParams& p) {
  json j;
  j["k"] = p.k;
  j["epsilon"] = p.epsilon;
  j["mode"] = p.mode == ListMode::exact ? "exact" : "practical";
  j["N"] = p.N;
  j["M"] = p.M;
  j["repeats"] = p.repeats;
  j["subset_budget"] = p.subset_budget ? json(*p.subset_budget) : json(nullptr);
  return j;
}

/// Full problem configuration as read from a JSON config file.
struct ProblemConfig {
  std::string problem = "k-means";
  ListParams list;
  double alpha = 1.0;
  double beta = 1.0;
  std::string generator = "default";
  std::optional<std::size_t> generator_budget;

  MedianParams median() const {
    MedianParams m;
    m.list = list;
    m.alpha = alpha;
    m.beta = beta;
    m.generator = generator;
    m.generator_budget = generator_budget;
    return m;
  }
};

/// Reads {"k":..,"epsilon":..,"mode":"exact"|"practical","N":..,"M":..,
/// "repeats":..,"subset_budget":..|null} with an optional "problem"
/// discriminator ("k-means" or "k-median") and k-median extras ("alpha",
/// "beta", "generator", "generator_budget"). Exact mode fills in the
/// closed-form values; practical mode requires N and M.
inline ProblemConfig problem_config_from_json(const json& j) {
  if (!j.is_object()) {
    throw InvalidArgument("parameter config must be a JSON object");
  }
  if (j.contains("schema") && j.at("schema") != kSchemaVersion) {
    throw InvalidArgument("unsupported config schema version");
  }
  ProblemConfig cfg;
  try {
    cfg.problem = j.value("problem", std::string("k-means"));
    if (cfg.problem != "k-means" && cfg.problem != "k-median") {
      throw InvalidArgument("problem must be \"k-means\" or \"k-median\"");
    }
    const auto k = j.at("k").get<std::size_t>();
    const double eps = j.at("epsilon").get<double>();
    const auto mode = j.value("mode", std::string("practical"));
    cfg.alpha = j.value("alpha", 1.0);
    cfg.beta = j.value("beta", 1.0);
    cfg.generator = j.value("generator", std::string("default"));
    if (j.contains("generator_budget") && !j.at("generator_budget").is_null()) {
      cfg.generator_budget = j.at("generator_budget").get<std::size_t>();
    }
    if (mode == "exact") {
      cfg.list = cfg.problem == "k-median" ? exact_median_params(k, eps, cfg.alpha, cfg.beta).list
                                           : paper_params(k, eps);
      auto pinned = [&](const char* key, std::uint64_t want) {
        if (j.contains(key) && !j.at(key).is_null() && j.at(key).get<std::uint64_t>() != want) {
          throw InvalidArgument(std::string("exact mode fixes ") + key + " = " + std::to_string(want));
        }
      };
      pinned("N", cfg.list.N);
      pinned("M", cfg.list.M);
      pinned("repeats", cfg.list.repeats);
      if (j.contains("subset_budget") && !j.at("subset_budget").is_null()) {
        throw InvalidArgument("exact mode enumerates every subset; subset_budget must be null");
      }
    } else if (mode == "practical") {
      std::optional<std::uint64_t> budget;
      if (j.contains("subset_budget") && !j.at("subset_budget").is_null()) {
        budget = j.at("subset_budget").get<std::uint64_t>();
      }
      const std::uint64_t repeats = j.contains("repeats") ? j.at("repeats").get<std::uint64_t>()
                                                          : (std::uint64_t{1} << std::min<std::size_t>(k, 62));
      cfg.list = practical_params(k, eps, j.at("N").get<std::uint64_t>(), j.at("M").get<std::uint64_t>(), repeats,
                                  budget);
    } else {
      throw InvalidArgument("mode must be \"exact\" or \"practical\"");
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad parameter config: ") + e.what());
  }
  return cfg;
}

inline json to_json(const TreeStats& s) {
  return json{{"nodes_visited", s.nodes_visited}, {"subsets_enumerated", s.subsets_enumerated}, {"leaves", s.leaves}};
}

inline json to_json(const CandidateList& list) {
  json j;
  j["schema"] = kSchemaVersion;
  j["problem"] = list.problem;
  j["params"] = to_json(list.params);
  j["seed"] = list.seed;
  j["stats"] = to_json(list.stats);
  json centers = json::array();
  for (const auto& c : list.entries) {
    centers.push_back(to_json(c));
  }
  j["centers"] = std::move(centers);
  return j;
}

inline CandidateList candidate_list_from_json(const json& j) {
  CandidateList list;
  try {
    list.problem = j.value("problem", std::string("k-means"));
    list.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("params")) {
      json p = j.at("params");
      p["problem"] = list.problem;
      list.params = problem_config_from_json(p).list;
    }
    for (const auto& c : j.at("centers")) {
      list.entries.push_back(center_set_from_json(c));
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad candidate list JSON: ") + e.what());
  }
  return list;
}

inline json to_json(const Solution& s) {
  json j;
  j["schema"] = kSchemaVersion;
  j["problem"] = s.objective == Objective::linear ? "k-median" : "k-means";
  j["cost"] = s.cost;
  j["centers"] = to_json(s.centers);
  j["assignment"] = s.clustering.assignment;
  j["cluster_sizes"] = s.clustering.sizes();
  j["constraint"] = to_json(s.constraint);
  j["constraint_satisfied"] = s.constraint.satisfied_by(s.clustering);
  return j;
}

inline Solution solution_from_json(const json& j) {
  Solution s;
  try {
    s.objective = j.value("problem", std::string("k-means")) == "k-median" ? Objective::linear : Objective::squared;
    s.cost = j.at("cost").get<double>();
    s.centers = center_set_from_json(j.at("centers"));
    s.clustering = Clustering(j.at("assignment").get<std::vector<std::uint32_t>>(), s.centers.size());
    s.constraint = constraint_from_json(j.at("constraint"));
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("bad solution JSON: ") + e.what());
  }
  return s;
}

inline json to_json(const ListQualityReport& r) {
  json j;
  j["schema"] = kSchemaVersion;
  j["seeds"] = r.seeds;
  j["success"] = r.success;
  j["successes"] = r.successes;
  j["trials"] = r.seeds.size();
  j["rate"] = r.rate;
  j["lower_bound_99"] = r.lower_bound_99;
  j["target_opt"] = r.target_opt;
  j["epsilon"] = r.epsilon;
  j["guarantee_applies"] = r.contract_applies;
  return j;
}

inline json to_json(const CountingReport& r) {
  json j;
  j["k"] = r.k;
  j["m"] = r.m;
  j["family_size"] = r.family_size.str();
  j["log2_family_size"] = r.log2_family_size;
  j["coverage_bound"] = r.coverage_bound ? json(r.coverage_bound->str()) : json(nullptr);
  j["log2_coverage_bound"] = r.log2_coverage_bound ? json(*r.log2_coverage_bound) : json(nullptr);
  j["list_size_lower_bound"] = r.list_bound ? json(*r.list_bound) : json(nullptr);
  j["log2_list_size_lower_bound"] = r.log2_list_bound ? json(*r.log2_list_bound) : json(nullptr);
  return j;
}

inline constexpr char kCacheMagic[4] = {'C', 'K', 'M', 'L'};

/// Binary list cache: magic "CKML", u32 version, u64 k, u64 dim, u64 count,
/// then count*k*dim little-endian doubles.
inline void write_candidate_cache(const std::string& path, const CandidateList& list) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write cache '" + path + "'");
  }
  const std::uint32_t version = kSchemaVersion;
  const std::uint64_t k = list.params.k;
  const std::uint64_t dim = list.entries.empty() ? 0 : list.entries.front().dim();
  const std::uint64_t count = list.entries.size();
  out.write(kCacheMagic, 4);
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&k), sizeof k);
  out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
  out.write(reinterpret_cast<const char*>(&count), sizeof count);
  for (const auto& c : list.entries) {
    out.write(reinterpret_cast<const char*>(c.coords().data()),
              static_cast<std::streamsize>(c.coords().size() * sizeof(double)));
  }
  if (!out) {
    throw IoError("failed writing cache '" + path + "'");
  }
}

inline std::vector<CenterSet> read_candidate_cache(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open cache '" + path + "'");
  }
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t k = 0, dim = 0, count = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&k), sizeof k);
  in.read(reinterpret_cast<char*>(&dim), sizeof dim);
  in.read(reinterpret_cast<char*>(&count), sizeof count);
  if (!in || std::memcmp(magic, kCacheMagic, 4) != 0 || version != kSchemaVersion) {
    throw IoError("'" + path + "' is not a candidate cache");
  }
  std::vector<CenterSet> out;
  std::vector<double> buf(k * dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
    if (!in) {
      throw IoError("truncated cache '" + path + "'");
    }
    CenterSet c(dim);
    for (std::uint64_t r = 0; r < k; ++r) {
      c.push_back(std::span<const double>(buf).subspan(r * dim, dim));
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace ckm
