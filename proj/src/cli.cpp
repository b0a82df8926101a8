#include "prfcw/cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "prfcw/error.hpp"
#include "prfcw/format.hpp"
#include "prfcw/harness.hpp"
#include "prfcw/landscape.hpp"
#include "prfcw/recovery.hpp"
#include "prfcw/sampler.hpp"
#include "prfcw/statistics.hpp"

namespace prfcw {

namespace {

using nlohmann::json;

struct Key {
  const char* name;
  const char* help;
};

// Fixed order of the echoed header.
const std::vector<Key> kKeys = {
    {"command", "subcommand, when not given on the command line"},
    {"n", "number of spins"},
    {"k", "clique size"},
    {"theta1", "inverse temperature, or critical for theta_c"},
    {"field", "field law, e.g. twopoint(a=0.5, b=-0.5, p=0.5)"},
    {"clique", "0-based clique indices, comma separated"},
    {"mode", "field mode: fresh or quenched"},
    {"m", "number of observations"},
    {"seed", "64-bit seed"},
    {"test", "test id or auto"},
    {"branch", "local, global or auto"},
    {"method", "recovery method: scan, screen, rowsum, spectral"},
    {"out", "output path, - for standard output"},
    {"format", "json, csv, binary or auto"},
    {"input", "binary sample file to test or recover instead of sampling"},
    {"replicates", "Monte Carlo replicates"},
    {"delta", "target error level"},
    {"threshold", "threshold override"},
    {"c1", "SDP constant"},
    {"rho", "spectral soft-threshold level"},
    {"node_budget", "branch-and-bound node budget"},
    {"grid", "m grid for power curves"},
    {"target_power", "power target for the sample complexity"},
    {"n_grid", "n grid for verify-clt"},
    {"theta1_ratios", "theta1 / theta_c grid for phase"},
    {"k_ratios", "k / n grid for phase"},
};

const std::vector<std::pair<const char*, const char*>> kCommands = {
    {"analyze", "classify the regime of a field and temperature"},
    {"sample", "draw observations"},
    {"test", "run a detection test on one sample"},
    {"recover", "estimate the clique from one sample"},
    {"power", "power curve or sample complexity over m"},
    {"phase", "power over theta1 / theta_c and k / n"},
    {"verify-clt", "limit theorem checks over n"},
    {"check-bounds", "overlap probability bound"},
};

[[noreturn]] void usage(const std::string& what) { throw Error(ErrorCode::UsageError, what); }

bool is_none(const std::string& s) { return s == "none" || s.empty(); }

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  std::string s = text;
  s.erase(0, s.find_first_not_of(" \t"));
  s.erase(s.find_last_not_of(" \t") + 1);
  T value{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty())
    usage("invalid value '" + text + "' for " + key);
  return value;
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  if (is_none(text)) return out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_value<T>(key, item));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) s += ',';
    if constexpr (std::is_floating_point_v<T>)
      s += format_number(values[i]);
    else
      s += std::to_string(values[i]);
  }
  return s.empty() ? "none" : s;
}

template <typename T>
std::string optional_text(const std::optional<T>& v) {
  if (!v) return "none";
  if constexpr (std::is_floating_point_v<T>)
    return format_number(*v);
  else
    return std::to_string(*v);
}

std::string hyphenated(std::string name) {
  std::replace(name.begin(), name.end(), '_', '-');
  return name;
}

struct Parsed {
  std::map<std::string, std::string> values;
  std::string subcommand;
};

// Throws CLI::ParseError (including help requests).
Parsed parse_args(const std::vector<std::string>& args, CLI::App& app) {
  Parsed parsed;
  app.set_config("--config", "", "key = value file; flags override it");
  app.get_config_formatter_base()->arrayDelimiter(';');
  app.require_subcommand(0, 1);
  std::map<std::string, std::string> raw;
  std::map<std::string, CLI::Option*> options;
  for (const Key& key : kKeys) {
    std::string names = std::string("--") + key.name;
    if (hyphenated(key.name) != key.name) names += ",--" + hyphenated(key.name);
    options[key.name] = app.add_option(names, raw[key.name], key.help);
  }
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : kCommands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    subs.push_back(sub);
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  app.parse(reversed);
  for (const auto& [name, option] : options)
    if (option->count() > 0) parsed.values[name] = raw[name];
  for (CLI::App* sub : subs)
    if (sub->parsed()) parsed.subcommand = sub->get_name();
  return parsed;
}

std::vector<int> draw_clique(int n, int k, std::uint64_t seed) {
  // Stream 2 of the seed, as for harness replicates.
  Rng rng(derive_seed(seed, 2));
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < k; ++i) {
    const int j = std::min(n - 1, i + static_cast<int>(uniform01(rng) * (n - i)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

RunConfig to_config(const Parsed& parsed) {
  RunConfig c;
  const auto& v = parsed.values;
  auto get = [&](const char* key) -> const std::string* {
    auto it = v.find(key);
    return it == v.end() ? nullptr : &it->second;
  };
  c.command = parsed.subcommand;
  if (c.command.empty() && get("command")) c.command = *get("command");
  if (c.command.empty()) usage("a subcommand is required");
  if (std::none_of(kCommands.begin(), kCommands.end(),
                   [&](const auto& cmd) { return c.command == cmd.first; }))
    usage("unknown subcommand '" + c.command + "'");

  if (auto s = get("n"); s && !is_none(*s)) c.n = parse_value<int>("n", *s);
  if (auto s = get("k"); s && !is_none(*s)) c.k = parse_value<int>("k", *s);
  if (auto s = get("field")) c.field = *s;
  if (auto s = get("theta1")) {
    try {
      c.theta1 = *s == "critical" ? critical_temperature(FieldDistribution::parse(c.field))
                                  : parse_value<double>("theta1", *s);
    } catch (const Error& e) {
      usage(e.what());
    }
  }
  if (auto s = get("clique")) c.clique = parse_list<int>("clique", *s);
  if (auto s = get("mode")) c.mode = *s;
  if (auto s = get("m")) c.m = parse_value<std::int64_t>("m", *s);
  if (auto s = get("seed")) c.seed = parse_value<std::uint64_t>("seed", *s);
  if (auto s = get("test")) c.test = *s;
  if (auto s = get("branch")) c.branch = *s;
  if (auto s = get("method")) c.method = *s;
  if (auto s = get("out")) c.out = *s;
  if (auto s = get("format")) c.format = *s;
  if (auto s = get("input"); s && !is_none(*s)) c.input = *s;
  if (auto s = get("replicates")) c.replicates = parse_value<int>("replicates", *s);
  if (auto s = get("delta")) c.delta = parse_value<double>("delta", *s);
  if (auto s = get("threshold"); s && !is_none(*s))
    c.threshold = parse_value<double>("threshold", *s);
  if (auto s = get("c1")) c.c1 = parse_value<double>("c1", *s);
  if (auto s = get("rho"); s && !is_none(*s)) c.rho = parse_value<double>("rho", *s);
  if (auto s = get("node_budget")) c.node_budget = parse_value<std::int64_t>("node_budget", *s);
  if (auto s = get("grid")) c.grid = parse_list<std::int64_t>("grid", *s);
  if (auto s = get("target_power"); s && !is_none(*s))
    c.target_power = parse_value<double>("target_power", *s);
  if (auto s = get("n_grid")) c.n_grid = parse_list<int>("n_grid", *s);
  if (auto s = get("theta1_ratios")) c.theta1_ratios = parse_list<double>("theta1_ratios", *s);
  if (auto s = get("k_ratios")) c.k_ratios = parse_list<double>("k_ratios", *s);
  return c;
}

void validate_and_default(RunConfig& c) {
  c.field = FieldDistribution::parse(c.field).to_string();
  if (c.mode != "fresh" && c.mode != "quenched") usage("mode must be fresh or quenched");
  if (c.branch != "auto" && c.branch != "local" && c.branch != "global")
    usage("branch must be local, global or auto");
  if (c.test != "auto") parse_test_id(c.test);
  parse_recovery_method(c.method);
  if (c.m < 1) usage("m must be positive");
  if (c.replicates < 1) usage("replicates must be positive");
  if (!(c.delta > 0.0 && c.delta < 1.0)) usage("delta must lie in (0, 1)");
  if (c.n && *c.n < 1) usage("n must be positive");
  if (c.k && (*c.k < 1 || (c.n && *c.k > *c.n))) usage("k must lie in [1, n]");
  if (c.theta1 < 0.0) usage("theta1 must be >= 0");

  const std::string& cmd = c.command;
  if (c.format == "auto")
    c.format = cmd == "sample" || cmd == "power" || cmd == "phase" ? "csv" : "json";
  const bool binary_ok = cmd == "sample";
  if (c.format != "json" && c.format != "csv" && !(binary_ok && c.format == "binary"))
    usage("format '" + c.format + "' is not available for " + cmd);
  if (c.format == "binary" && c.out == "-") usage("binary output needs --out");

  const bool needs_n = cmd == "sample" || cmd == "power" || cmd == "phase" ||
                       ((cmd == "test" || cmd == "recover") && c.input.empty());
  if (needs_n && !c.n) usage(cmd + " needs --n");
  if (!c.clique.empty()) {
    if (c.k && *c.k != static_cast<int>(c.clique.size())) usage("k must equal the clique size");
    c.k = static_cast<int>(c.clique.size());
    std::sort(c.clique.begin(), c.clique.end());
  }
  const bool alternative = c.theta1 > 0.0;
  if ((cmd == "sample" && alternative) || cmd == "test" || cmd == "recover" || cmd == "power")
    if (!c.k) usage(cmd + (cmd == "sample" ? " with theta1 > 0" : "") + " needs --k");
  if (cmd == "analyze" && !(c.theta1 > 0.0))
    usage("analyze needs --theta1 > 0");

  if (cmd == "sample" || cmd == "test" || cmd == "recover") {
    if (alternative && c.clique.empty() && c.n) c.clique = draw_clique(*c.n, *c.k, c.seed);
  }
  if (cmd == "power" && c.grid.empty()) c.grid = {25, 50, 100, 200, 400, 800};
  if (cmd == "verify-clt" && c.n_grid.empty()) c.n_grid = {500, 1000, 2000, 4000, 8000, 16000};
  if (cmd == "phase") {
    if (c.theta1_ratios.empty()) c.theta1_ratios = {0.5, 1.0, 1.5};
    if (c.k_ratios.empty()) {
      if (!c.k) c.k_ratios = {0.05, 0.1, 0.2};
    }
  }
  for (auto m : c.grid)
    if (m < 1) usage("every m on the grid must be positive");
  for (auto n : c.n_grid)
    if (n < 1) usage("every n on the grid must be positive");
}

ModelSpec spec_of(const RunConfig& c) {
  ModelSpec spec;
  spec.n = c.n.value_or(1);
  spec.field = FieldDistribution::parse(c.field);
  spec.theta1 = c.theta1;
  spec.field_mode =
      c.mode == "quenched" ? FieldMode::QuenchedSharedRealization : FieldMode::FreshPerObservation;
  if (c.theta1 > 0.0) {
    spec.clique = c.clique;
    spec.k = static_cast<int>(c.clique.size());
  } else {
    spec.k = c.k.value_or(0);
  }
  return spec;
}

TestOverrides overrides_of(const RunConfig& c) {
  TestOverrides o;
  if (c.test != "auto") o.test = parse_test_id(c.test);
  if (c.branch == "local") o.branch = Branch::LocalScan;
  if (c.branch == "global") o.branch = Branch::Global;
  o.threshold = c.threshold;
  o.c1 = c.c1;
  o.node_budget = c.node_budget;
  return o;
}

// Output target: standard output or a file.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback, bool binary = false) {
    if (path == "-") {
      stream_ = &fallback;
      return;
    }
    file_.open(path, binary ? std::ios::binary : std::ios::out);
    if (!file_) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
    stream_ = &file_;
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
};

SpinSample load_or_sample(const RunConfig& c) {
  if (!c.input.empty()) {
    std::ifstream in(c.input, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + c.input + "'");
    return read_binary(in);
  }
  return sample(spec_of(c), c.m, c.seed);
}

void emit(const RunConfig& c, std::ostream& out, const json& body) {
  out << config_header(c) << body.dump(2) << '\n';
}

int run_analyze(const RunConfig& c, std::ostream& out) {
  const FieldDistribution field = FieldDistribution::parse(c.field);
  const RegimeInfo regime = classify_regime(field, c.theta1);
  const MomentSet mom = moments(field);
  json body;
  body["field"] = field.to_string();
  body["moments"] = {{"sech2_mean", mom.sech2_mean},   {"tanh_mean", mom.tanh_mean},
                     {"tanh_var", mom.tanh_var},       {"sech4_mean", mom.sech4_mean},
                     {"sech2tanh2_mean", mom.sech2tanh2_mean}};
  body["regime"] = regime_to_json(regime);
  const double m_star = clique_magnetization(regime);
  if (regime.is_critical()) {
    const int tau = regime_tau(regime);
    const CriticalVarianceForms f = critical_variance_forms(field, c.theta1, tau, m_star);
    body["critical_variance"] = {{"stirling", f.stirling},
                                 {"derivative_form", f.derivative_form},
                                 {"scaled_stirling", f.scaled_stirling},
                                 {"taylor", f.taylor},
                                 {"second_moment", critical_second_moment(f.taylor, tau)},
                                 {"scaling_exponent", scaling_exponent(tau)}};
  } else if (regime.centered && regime.is_high()) {
    body["variance"] = high_temp_variance(field, c.theta1);
  } else {
    body["variance"] = low_temp_variance(field, c.theta1, m_star);
  }
  if (c.n && c.k) {
    const Branch branch = c.branch == "local"    ? Branch::LocalScan
                          : c.branch == "global" ? Branch::Global
                                                 : default_branch(regime, *c.n, *c.k);
    const TestId id = c.test != "auto" ? parse_test_id(c.test) : default_test(regime, branch);
    body["branch"] = std::string(to_string(branch));
    body["test_id"] = std::string(to_string(id));
    if (id != TestId::Sdp) {
      const ThresholdInterval iv = threshold_interval(id, regime, field, *c.n, *c.k);
      body["threshold_interval"] = {iv.lo, iv.hi};
      body["threshold"] = iv.midpoint();
    }
  }
  Sink sink(c.out, out);
  emit(c, *sink, body);
  return kExitOk;
}

int run_sample(const RunConfig& c, std::ostream& out) {
  const SpinSample s = sample(spec_of(c), c.m, c.seed);
  if (c.format == "binary") {
    {
      Sink sink(c.out, out, true);
      write_binary(s, *sink);
    }
    Sink side(c.out + ".cfg", out);
    *side << config_header(c);
    return kExitOk;
  }
  Sink sink(c.out, out);
  if (c.format == "json") {
    json body;
    body["seed"] = s.seed;
    body["spec_digest"] = s.spec_digest;
    body["spins"] = json::array();
    for (Eigen::Index r = 0; r < s.m(); ++r) {
      std::vector<int> row(s.n());
      for (Eigen::Index i = 0; i < s.n(); ++i) row[i] = s.spins(r, i);
      body["spins"].push_back(row);
    }
    emit(c, *sink, body);
  } else {
    *sink << config_header(c);
    write_csv(s, *sink);
  }
  return kExitOk;
}

int run_test_command(const RunConfig& c, std::ostream& out) {
  const SpinSample s = load_or_sample(c);
  const int n = static_cast<int>(s.n());
  if (*c.k > n) usage("k must lie in [1, n]");
  const FieldDistribution field = FieldDistribution::parse(c.field);
  const TestReport report = run_test({n, *c.k, c.theta1, field}, s, overrides_of(c));
  Sink sink(c.out, out);
  if (c.format == "csv")
    *sink << config_header(c) << TestReport::csv_header() << '\n' << report.csv_row() << '\n';
  else
    emit(c, *sink, report.to_json());
  return kExitOk;
}

int run_recover(const RunConfig& c, std::ostream& out) {
  const SpinSample s = load_or_sample(c);
  const int k = *c.k;
  const FieldDistribution field = FieldDistribution::parse(c.field);
  const RegimeInfo regime = classify_regime(field, c.theta1);
  RecoveryReport report;
  switch (parse_recovery_method(c.method)) {
    case RecoveryMethod::Scan:
      report = scan_recover(s, k, regime, c.node_budget);
      break;
    case RecoveryMethod::Screen: {
      RecoveryReport first = rowsum_recover(s, k, regime);
      report = first;
      report.method = RecoveryMethod::Screen;
      report.estimate = screen(s, first.estimate, k, regime);
      break;
    }
    case RecoveryMethod::RowSum:
      report = rowsum_recover(s, k, regime);
      break;
    case RecoveryMethod::Spectral:
      report = spectral_recover(s, k, c.rho.value_or(default_spectral_rho(regime, field, k)));
      break;
  }
  if (c.input.empty() && !c.clique.empty()) report.compare_with(c.clique);
  Sink sink(c.out, out);
  if (c.format == "csv")
    *sink << config_header(c) << RecoveryReport::csv_header() << '\n' << report.csv_row() << '\n';
  else
    emit(c, *sink, report.to_json());
  return kExitOk;
}

ExperimentPlan plan_of(const RunConfig& c) {
  ExperimentPlan plan;
  plan.base_spec = ModelSpec::null_model(*c.n, FieldDistribution::parse(c.field));
  plan.base_spec.field_mode =
      c.mode == "quenched" ? FieldMode::QuenchedSharedRealization : FieldMode::FreshPerObservation;
  plan.base_spec.theta1 = c.theta1;
  plan.base_spec.k = c.k.value_or(1);
  if (!c.clique.empty()) {
    plan.base_spec.clique = c.clique;
    plan.random_clique = false;
  }
  plan.m = c.m;
  plan.test = overrides_of(c);
  plan.replicates = c.replicates;
  plan.delta = c.delta;
  plan.seed = c.seed;
  return plan;
}

void write_sweep(const RunConfig& c, std::ostream& out, const SweepResult& r, json extra = {}) {
  Sink sink(c.out, out);
  if (c.format == "csv") {
    *sink << config_header(c);
    r.write_csv(*sink);
  } else {
    extra["rows"] = r.to_json();
    emit(c, *sink, extra);
  }
}

int run_power(const RunConfig& c, std::ostream& out) {
  const ExperimentPlan plan = plan_of(c);
  if (c.target_power) {
    const SampleComplexity sc = sample_complexity(plan, c.grid, *c.target_power);
    write_sweep(c, out, sc.evaluated, {{"sample_complexity", sc.m}});
  } else {
    write_sweep(c, out, power_curve(plan, c.grid));
  }
  return kExitOk;
}

int run_phase(const RunConfig& c, std::ostream& out) {
  ExperimentPlan plan = plan_of(c);
  plan.sweep.push_back({"theta1_ratio", c.theta1_ratios});
  if (!c.k_ratios.empty()) plan.sweep.push_back({"k_ratio", c.k_ratios});
  write_sweep(c, out, sweep(plan));
  return kExitOk;
}

int run_verify_clt(const RunConfig& c, std::ostream& out) {
  CltPlan plan;
  plan.field = FieldDistribution::parse(c.field);
  plan.theta1 = c.theta1;
  plan.n_grid = c.n_grid;
  plan.replicates = c.replicates;
  plan.seed = c.seed;
  const CltReport report = verify_clt(plan);
  Sink sink(c.out, out);
  if (c.format == "csv") {
    *sink << config_header(c);
    report.rows.write_csv(*sink);
  } else {
    emit(c, *sink, report.to_json());
  }
  return kExitOk;
}

int run_check_bounds(const RunConfig& c, std::ostream& out) {
  std::vector<std::pair<int, int>> cases;
  if (c.n && c.k) {
    cases.emplace_back(*c.n, *c.k);
  } else {
    for (int n : {50, 100, 200, 500, 1000, 2000})
      for (int k : {2, 5, 10, 20, 50})
        if (k <= n) cases.emplace_back(n, k);
  }
  json body;
  body["cases"] = json::array();
  bool all = true;
  double worst = 0.0;
  for (auto [n, k] : cases) {
    const OverlapReport r = overlap_bound_check(n, k);
    all = all && r.all_hold && r.normalized;
    worst = std::max(worst, r.max_ratio);
    body["cases"].push_back(r.to_json());
  }
  body["all_hold"] = all;
  body["max_ratio"] = worst;
  Sink sink(c.out, out);
  if (c.format == "csv") {
    *sink << config_header(c) << "n,k,v,probability,bound,holds\n";
    for (const auto& cs : body["cases"])
      for (const auto& row : cs["rows"])
        *sink << cs["n"].get<int>() << ',' << cs["k"].get<int>() << ',' << row["v"].get<int>()
              << ',' << format_number(row["probability"].get<double>()) << ','
              << format_number(row["bound"].get<double>()) << ','
              << (row["holds"].get<bool>() ? 1 : 0) << '\n';
  } else {
    emit(c, *sink, body);
  }
  return all ? kExitOk : kExitRuntime;
}

int dispatch(const RunConfig& c, std::ostream& out) {
  if (c.command == "analyze") return run_analyze(c, out);
  if (c.command == "sample") return run_sample(c, out);
  if (c.command == "test") return run_test_command(c, out);
  if (c.command == "recover") return run_recover(c, out);
  if (c.command == "power") return run_power(c, out);
  if (c.command == "phase") return run_phase(c, out);
  if (c.command == "verify-clt") return run_verify_clt(c, out);
  return run_check_bounds(c, out);
}

RunConfig resolve(const Parsed& parsed) {
  RunConfig c = to_config(parsed);
  try {
    validate_and_default(c);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::UsageError) throw;
    throw Error(ErrorCode::UsageError, e.what());
  }
  return c;
}

}  // namespace

RunConfig resolve_config(const std::vector<std::string>& args) {
  CLI::App app("prfcw", "prfcw");
  Parsed parsed;
  try {
    parsed = parse_args(args, app);
  } catch (const CLI::ParseError& e) {
    usage(e.what());
  }
  return resolve(parsed);
}

std::string config_header(const RunConfig& c) {
  const std::map<std::string, std::string> values = {
      {"command", c.command},
      {"n", optional_text(c.n)},
      {"k", optional_text(c.k)},
      {"theta1", format_number(c.theta1)},
      {"field", c.field},
      {"clique", join(c.clique)},
      {"mode", c.mode},
      {"m", std::to_string(c.m)},
      {"seed", std::to_string(c.seed)},
      {"test", c.test},
      {"branch", c.branch},
      {"method", c.method},
      {"out", c.out},
      {"format", c.format},
      {"input", c.input.empty() ? "none" : c.input},
      {"replicates", std::to_string(c.replicates)},
      {"delta", format_number(c.delta)},
      {"threshold", optional_text(c.threshold)},
      {"c1", format_number(c.c1)},
      {"rho", optional_text(c.rho)},
      {"node_budget", std::to_string(c.node_budget)},
      {"grid", join(c.grid)},
      {"target_power", optional_text(c.target_power)},
      {"n_grid", join(c.n_grid)},
      {"theta1_ratios", join(c.theta1_ratios)},
      {"k_ratios", join(c.k_ratios)},
  };
  std::string text;
  for (const Key& key : kKeys) text += std::string("# ") + key.name + " = " + values.at(key.name) + '\n';
  return text;
}

std::string header_to_config(const std::string& output_text) {
  std::istringstream in(output_text);
  std::string line, config;
  while (std::getline(in, line) && line.rfind("# ", 0) == 0) config += line.substr(2) + '\n';
  return config;
}

int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out,
                       std::ostream& err) {
  CLI::App app("Planted random field Curie-Weiss simulator", "prfcw");
  RunConfig config;
  try {
    config = resolve(parse_args(args, app));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << " (run with --help)\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << " (run with --help)\n";
    return kExitUsage;
  }
  try {
    return dispatch(config, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::UsageError ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace prfcw
