#pragma once

// Command-line front end. Exit codes:
//   0  success
//   1  internal error
//   2  bad configuration (flags, parameter values, malformed files)
//   3  infeasible constraint
//   4  I/O failure
//   5  verify: success rate below --min-rate

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ckm/ckm.hpp"

namespace ckm::cli {

enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kBadConfig = 2,
  kInfeasible = 3,
  kIo = 4,
  kRateBelow = 5,
};

struct RunConfig {
  std::string command;
  std::string input;
  std::optional<std::string> problem;
  std::optional<std::size_t> k;
  std::optional<double> epsilon;
  std::string constraint = "{\"type\":\"unconstrained\"}";
  std::optional<std::uint64_t> N;
  std::optional<std::uint64_t> M;
  std::optional<std::uint64_t> repeats;
  std::optional<std::string> subset_budget;
  std::optional<std::string> mode;
  std::optional<std::string> generator;
  std::optional<std::size_t> generator_budget;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string output;
  std::string format = "json";
  unsigned threads = 0;
  bool verbose = false;
  // list
  std::string cache;
  // verify
  std::size_t trials = 0;
  std::optional<double> min_rate;
  // lowerbound
  std::optional<std::size_t> m;
  std::string csv;
  // bench
  std::string budgets;
  std::string sample_sizes;
  std::string subset_sizes;
};

namespace detail {

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open '" + path + "'");
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument("'" + path + "' is not valid JSON: " + e.what());
  }
}

/// --constraint takes inline JSON or @path to a JSON file.
inline ConstraintFamily parse_constraint(const std::string& text) {
  if (!text.empty() && text.front() == '@') {
    return constraint_from_json(read_json_file(text.substr(1)));
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("--constraint is not valid JSON: ") + e.what());
  }
  return constraint_from_json(j);
}

inline std::optional<std::uint64_t> parse_budget(const std::string& s) {
  if (s == "none" || s == "unlimited" || s == "null") {
    return std::nullopt;
  }
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InvalidArgument("subset budget must be a nonnegative integer or 'none'");
  }
  return v;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

inline std::uint64_t parse_count(const std::string& s, const char* what) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw InvalidArgument(std::string(what) + " grid entries must be nonnegative integers");
  }
  return v;
}

/// Merges --config with the flag overrides and fills practical defaults
/// (N = 64, M = 8, subset budget 32, repeats 2^k).
inline ProblemConfig resolve_params(const RunConfig& rc) {
  json j = rc.config_path.empty() ? json::object() : read_json_file(rc.config_path);
  if (!j.is_object()) {
    throw InvalidArgument("parameter config must be a JSON object");
  }
  if (rc.problem) j["problem"] = *rc.problem;
  if (rc.k) j["k"] = *rc.k;
  if (rc.epsilon) j["epsilon"] = *rc.epsilon;
  if (rc.mode) j["mode"] = *rc.mode;
  if (rc.N) j["N"] = *rc.N;
  if (rc.M) j["M"] = *rc.M;
  if (rc.repeats) j["repeats"] = *rc.repeats;
  if (rc.subset_budget) {
    const auto b = parse_budget(*rc.subset_budget);
    j["subset_budget"] = b ? json(*b) : json(nullptr);
  }
  if (rc.generator) j["generator"] = *rc.generator;
  if (rc.generator_budget) j["generator_budget"] = *rc.generator_budget;
  if (rc.alpha) j["alpha"] = *rc.alpha;
  if (rc.beta) j["beta"] = *rc.beta;
  if (!j.contains("k") || !j.contains("epsilon")) {
    throw InvalidArgument("--k and --epsilon are required (directly or via --config)");
  }
  if (!j.contains("mode")) {
    j["mode"] = "practical";
  }
  if (j["mode"] == "practical") {
    if (!j.contains("N")) j["N"] = 64;
    if (!j.contains("M")) j["M"] = 8;
    if (!j.contains("subset_budget")) j["subset_budget"] = 32;
  }
  ProblemConfig cfg = problem_config_from_json(j);
  if (cfg.problem == "k-median") {
    validate(cfg.median());
  } else {
    validate(cfg.list);
  }
  return cfg;
}

inline CandidateList build_list(const Dataset& data, const ProblemConfig& cfg, std::uint64_t seed,
                                unsigned threads) {
  if (cfg.problem == "k-median") {
    return list_k_median(data, cfg.median(), seed, threads);
  }
  return list_k_means(data, cfg.list, seed, threads);
}

/// Writes to --output, or to `out` when no path is given.
inline void emit(const RunConfig& rc, std::ostream& out, const std::string& text) {
  if (rc.output.empty() || rc.output == "-") {
    out << text;
    return;
  }
  std::ofstream f(rc.output, std::ios::binary);
  if (!f) {
    throw IoError("cannot write '" + rc.output + "'");
  }
  f << text;
  if (!f) {
    throw IoError("failed writing '" + rc.output + "'");
  }
}

inline void log_stats(const RunConfig& rc, std::ostream& err, const CandidateList& list) {
  if (rc.verbose) {
    err << "tree: nodes=" << list.stats.nodes_visited << " subsets=" << list.stats.subsets_enumerated
        << " leaves=" << list.stats.leaves << " list=" << list.entries.size() << '\n';
  }
}

inline int cmd_solve(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const ProblemConfig cfg = resolve_params(rc);
  const ConstraintFamily family = parse_constraint(rc.constraint);
  const Dataset data = load_dataset(rc.input);
  family.check(data.size(), cfg.list.k);
  const unsigned threads = resolve_threads(rc.threads);
  const CandidateList list = build_list(data, cfg, rc.seed, threads);
  log_stats(rc, err, list);
  const Solution sol = select_best(list, data, family, threads);
  if (rc.format == "csv") {
    std::ostringstream s;
    s << "point,cluster\n";
    for (std::size_t i = 0; i < sol.clustering.size(); ++i) {
      s << i << ',' << sol.clustering.assignment[i] << '\n';
    }
    emit(rc, out, s.str());
  } else {
    emit(rc, out, to_json(sol).dump(2) + "\n");
  }
  return kOk;
}

inline int cmd_list(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const ProblemConfig cfg = resolve_params(rc);
  const Dataset data = load_dataset(rc.input);
  const CandidateList list = build_list(data, cfg, rc.seed, resolve_threads(rc.threads));
  log_stats(rc, err, list);
  if (!rc.cache.empty()) {
    write_candidate_cache(rc.cache, list);
  }
  emit(rc, out, to_json(list).dump() + "\n");
  return kOk;
}

inline int cmd_verify(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const ProblemConfig cfg = resolve_params(rc);
  if (cfg.problem != "k-means") {
    throw InvalidArgument("verify supports the k-means list only");
  }
  const ConstraintFamily family = parse_constraint(rc.constraint);
  const Dataset data = load_dataset(rc.input);
  if (data.size() > kMaxOracleN) {
    throw InvalidArgument("verify needs n <= " + std::to_string(kMaxOracleN) + " for the brute-force target");
  }
  family.check(data.size(), cfg.list.k);
  if (rc.min_rate && !(*rc.min_rate >= 0.0 && *rc.min_rate <= 1.0)) {
    throw InvalidArgument("--min-rate must lie in [0, 1]");
  }
  const std::size_t trials = rc.trials == 0 ? 20 : rc.trials;
  std::vector<std::uint64_t> seeds(trials);
  for (std::size_t i = 0; i < trials; ++i) {
    seeds[i] = rc.seed + i;
  }
  const ListQualityReport rep = verify_list_quality(data, cfg.list.k, cfg.list.epsilon, family, cfg.list, seeds,
                                                    resolve_threads(rc.threads));
  json j = to_json(rep);
  j["constraint"] = to_json(family);
  j["params"] = to_json(cfg.list);
  if (rc.min_rate) {
    j["min_rate"] = *rc.min_rate;
  }
  const bool pass = !rc.min_rate || rep.rate >= *rc.min_rate;
  j["pass"] = pass;
  emit(rc, out, j.dump(2) + "\n");
  if (rc.verbose) {
    err << "rate=" << rep.rate << " lower99=" << rep.lower_bound_99 << '\n';
  }
  if (!pass) {
    err << "success rate " << rep.rate << " is below --min-rate " << *rc.min_rate << '\n';
    return kRateBelow;
  }
  return kOk;
}

inline int cmd_lowerbound(const RunConfig& rc, std::ostream& out, std::ostream&) {
  if (!rc.k) {
    throw InvalidArgument("--k is required");
  }
  std::size_t m = 0;
  double eps = 0.0;
  if (rc.m) {
    m = *rc.m;
    eps = rc.epsilon ? *rc.epsilon : 1.0 / static_cast<double>(m * m);
  } else if (rc.epsilon) {
    eps = *rc.epsilon;
    m = lower_bound_m(eps);
  } else {
    throw InvalidArgument("give --epsilon or --m");
  }
  if (m < 2) {
    throw InvalidArgument("m = ceil(1/sqrt(epsilon)) must be at least 2");
  }
  if (*rc.k < 1) {
    throw InvalidArgument("k must be at least 1");
  }
  if (*rc.k * m > 4096) {
    throw InvalidArgument("instance dimension k*m above 4096");
  }
  const LowerBoundInstance inst = build_instance_m(*rc.k, m);
  std::ostringstream csv;
  write_csv(csv, inst.data);
  if (!rc.csv.empty()) {
    std::ofstream f(rc.csv);
    if (!f) {
      throw IoError("cannot write '" + rc.csv + "'");
    }
    f << csv.str();
  }
  if (rc.format == "csv") {
    emit(rc, out, csv.str());
    return kOk;
  }
  const IdentityChecks chk = identity_checks(inst, eps, rc.trials == 0 ? 100 : rc.trials, rc.seed);
  json j;
  j["schema"] = kSchemaVersion;
  j["k"] = inst.k;
  j["m"] = inst.m;
  j["epsilon"] = eps;
  j["dim"] = inst.dim();
  j["points"] = inst.data.size();
  j["opt"] = opt_equal_partition(inst.k, inst.m);
  j["counting"] = to_json(counting_report(inst.k, inst.m));
  json ic;
  ic["trials"] = chk.trials;
  ic["opt_exact"] = chk.opt_exact;
  ic["max_opt_error"] = chk.max_opt_error;
  ic["max_residual"] = chk.max_residual;
  ic["served_trials"] = chk.served_trials;
  ic["max_served_residual_norm_sum"] = chk.max_served_norm_sum;
  ic["residual_budget"] = chk.residual_budget;
  ic["residual_bound_holds"] = chk.residual_bound_holds;
  ic["disagreement_scanned"] = chk.disagreement_scanned;
  ic["disagreement_asserted"] = chk.disagreement_asserted;
  ic["served_pairs"] = chk.served_pairs;
  ic["max_disagreement"] = chk.max_disagreement;
  ic["disagreement_bound"] = chk.disagreement_bound;
  ic["disagreement_holds"] = chk.disagreement_holds;
  j["identity_checks"] = std::move(ic);
  if (!rc.csv.empty()) {
    j["instance_csv"] = rc.csv;
  }
  emit(rc, out, j.dump(2) + "\n");
  return kOk;
}

/// Sweeps the grid budgets x N x M; one CSV row per cell. Columns:
/// N,M,subset_budget,repeats,list_size,nodes_visited,wall_seconds,
/// best_cost,opt,ratio. list_size grows with the budget; ratio >= 1.
inline int cmd_bench(const RunConfig& rc, std::ostream& out, std::ostream& err) {
  const ProblemConfig base = resolve_params(rc);
  const ConstraintFamily family = parse_constraint(rc.constraint);
  const Dataset data = load_dataset(rc.input);
  family.check(data.size(), base.list.k);
  const unsigned threads = resolve_threads(rc.threads);

  std::vector<std::optional<std::uint64_t>> budgets;
  for (const auto& s : split_list(rc.budgets)) {
    budgets.push_back(parse_budget(s));
  }
  if (budgets.empty()) budgets.push_back(base.list.subset_budget);
  std::vector<std::uint64_t> ns, ms;
  for (const auto& s : split_list(rc.sample_sizes)) ns.push_back(parse_count(s, "--Ns"));
  for (const auto& s : split_list(rc.subset_sizes)) ms.push_back(parse_count(s, "--Ms"));
  if (ns.empty()) ns.push_back(base.list.N);
  if (ms.empty()) ms.push_back(base.list.M);

  // Validate every cell before any compute.
  std::vector<ProblemConfig> cells;
  for (auto n : ns) {
    for (auto m : ms) {
      for (const auto& b : budgets) {
        ProblemConfig cfg = base;
        cfg.list.mode = ListMode::practical;
        cfg.list.N = n;
        cfg.list.M = m;
        cfg.list.subset_budget = b;
        validate(cfg.list);
        cells.push_back(cfg);
      }
    }
  }

  const Objective obj = base.problem == "k-median" ? Objective::linear : Objective::squared;
  std::optional<double> opt;
  if (obj == Objective::squared && data.size() <= kMaxOracleN) {
    try {
      opt = brute_force_opt(data, base.list.k, family, 5'000'000).cost;
    } catch (const InvalidArgument&) {
      // enumeration too large: ratio column left empty
    }
  }

  std::ostringstream csv;
  csv << std::setprecision(17);
  csv << "N,M,subset_budget,repeats,list_size,nodes_visited,wall_seconds,best_cost,opt,ratio\n";
  for (const auto& cfg : cells) {
    const auto t0 = std::chrono::steady_clock::now();
    const CandidateList list = build_list(data, cfg, rc.seed, threads);
    const Solution sol = select_best(list, data, family, threads);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log_stats(rc, err, list);
    csv << cfg.list.N << ',' << cfg.list.M << ','
        << (cfg.list.subset_budget ? std::to_string(*cfg.list.subset_budget) : std::string("none")) << ','
        << cfg.list.repeats << ',' << list.entries.size() << ',' << list.stats.nodes_visited << ',' << secs << ','
        << sol.cost << ',';
    if (opt) {
      csv << *opt << ',' << (*opt > 0.0 ? sol.cost / *opt : 1.0);
    } else {
      csv << ',';
    }
    csv << '\n';
  }
  emit(rc, out, csv.str());
  return kOk;
}

}  // namespace detail

/// Parses `args` (without the program name) and runs the subcommand.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"constrained k-means / k-median via candidate lists", "ckm"};
  app.require_subcommand(1);
  RunConfig rc;

  auto add_params = [&](CLI::App* sub) {
    sub->add_option("--problem", rc.problem, "k-means | k-median")->check(CLI::IsMember({"k-means", "k-median"}));
    sub->add_option("--k", rc.k, "number of clusters");
    sub->add_option("--epsilon", rc.epsilon, "approximation parameter in (0, 1]");
    sub->add_option("--N", rc.N, "D^2 samples per node");
    sub->add_option("--M", rc.M, "subset size");
    sub->add_option("--repeats", rc.repeats, "independent repetitions (default 2^k)");
    sub->add_option("--subset-budget", rc.subset_budget, "subsets per node, or 'none'");
    sub->add_option("--mode", rc.mode, "exact | practical")->check(CLI::IsMember({"exact", "practical"}));
    sub->add_option("--generator", rc.generator, "k-median core generator");
    sub->add_option("--generator-budget", rc.generator_budget, "candidates per subset for k-median");
    sub->add_option("--alpha", rc.alpha, "k-median sample constant");
    sub->add_option("--beta", rc.beta, "k-median subset constant");
    sub->add_option("--config", rc.config_path, "JSON parameter file");
    sub->add_option("--seed", rc.seed, "root seed");
    sub->add_option("--threads", rc.threads, "worker threads (else CKM_THREADS, else 1)");
    sub->add_option("--output", rc.output, "output path (default stdout)");
    sub->add_flag("--verbose", rc.verbose, "print tree statistics to stderr");
  };

  auto* solve = app.add_subcommand("solve", "build a list and return the best constrained solution");
  add_params(solve);
  solve->add_option("--input", rc.input, "dataset (.csv or .json)")->required();
  solve->add_option("--constraint", rc.constraint, "constraint JSON or @file");
  solve->add_option("--format", rc.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));

  auto* list = app.add_subcommand("list", "emit the candidate list");
  add_params(list);
  list->add_option("--input", rc.input, "dataset (.csv or .json)")->required();
  list->add_option("--cache", rc.cache, "also write a binary list cache");

  auto* verify = app.add_subcommand("verify", "measure how often the list serves the brute-force optimum");
  add_params(verify);
  verify->add_option("--input", rc.input, "dataset (.csv or .json), n <= 14")->required();
  verify->add_option("--constraint", rc.constraint, "constraint JSON or @file");
  verify->add_option("--trials", rc.trials, "number of seeds (default 20)");
  verify->add_option("--min-rate", rc.min_rate, "exit 5 when the success rate is below this");

  auto* lower = app.add_subcommand("lowerbound", "emit the hard instance and its counting report");
  lower->add_option("--k", rc.k, "number of clusters")->required();
  lower->add_option("--epsilon", rc.epsilon, "epsilon; m = ceil(1/sqrt(epsilon))");
  lower->add_option("--m", rc.m, "points per cluster (overrides the epsilon-derived m)");
  lower->add_option("--instance,--csv", rc.csv, "write the instance CSV here");
  lower->add_option("--trials", rc.trials, "identity-check trials (default 100)");
  lower->add_option("--seed", rc.seed, "seed for identity checks");
  lower->add_option("--output", rc.output, "output path (default stdout)");
  lower->add_option("--format", rc.format, "json | csv")->check(CLI::IsMember({"json", "csv"}));

  auto* bench = app.add_subcommand("bench", "sweep list parameters and record cost and time as CSV");
  add_params(bench);
  bench->add_option("--input", rc.input, "dataset (.csv or .json)")->required();
  bench->add_option("--constraint", rc.constraint, "constraint JSON or @file");
  bench->add_option("--budgets", rc.budgets, "comma-separated subset budgets");
  bench->add_option("--Ns", rc.sample_sizes, "comma-separated N values");
  bench->add_option("--Ms", rc.subset_sizes, "comma-separated M values");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kBadConfig;
  }

  try {
    if (*solve) return detail::cmd_solve(rc, out, err);
    if (*list) return detail::cmd_list(rc, out, err);
    if (*verify) return detail::cmd_verify(rc, out, err);
    if (*lower) return detail::cmd_lowerbound(rc, out, err);
    if (*bench) return detail::cmd_bench(rc, out, err);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kBadConfig;
  } catch (const Infeasible& e) {
    err << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}

}  // namespace ckm::cli
