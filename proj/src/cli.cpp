#include "sgdchain/cli.hpp"

#include "sgdchain/objectives.hpp"
#include "sgdchain/rng.hpp"
#include "sgdchain/sgd.hpp"
#include "sgdchain/stats.hpp"
#include "sgdchain/theory.hpp"
#include "text.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace sgdchain {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Value codecs
// ---------------------------------------------------------------------------

std::string fmt(double v) { return text::format_double(v); }

std::string fmt_point(const Point& p) {
  std::string s;
  for (std::size_t i = 0; i < p.dim(); ++i) {
    if (i) s += ',';
    s += fmt(p[i]);
  }
  return s;
}

Point parse_point(std::string_view v) {
  const auto parts = text::split(v, ',');
  Vector c(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) c[static_cast<Eigen::Index>(i)] = text::parse_double(parts[i]);
  if (c.size() == 0) throw InvalidArgument("empty point");
  return Point(std::move(c));
}

std::optional<Point> parse_optional_point(std::string_view v) {
  if (text::trim(v).empty()) return std::nullopt;
  return parse_point(v);
}

std::string fmt_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

std::vector<double> parse_doubles(std::string_view v) {
  std::vector<double> out;
  if (text::trim(v).empty()) return out;
  for (const auto& p : text::split(v, ',')) out.push_back(text::parse_double(p));
  return out;
}

std::string fmt_strings(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

std::vector<std::string> parse_strings(std::string_view v) {
  std::vector<std::string> out;
  if (text::trim(v).empty()) return out;
  for (const auto& p : text::split(v, ',')) out.emplace_back(text::trim(p));
  return out;
}

bool parse_bool(std::string_view v) {
  const auto t = text::trim(v);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw InvalidArgument("not a boolean: '" + std::string(t) + "'");
}

std::size_t parse_size(std::string_view v) { return static_cast<std::size_t>(text::parse_u64(v)); }

// ---------------------------------------------------------------------------
// Key table
// ---------------------------------------------------------------------------

struct Key {
  const char* name;
  std::function<std::string(const RunSpec&)> get;
  std::function<void(RunSpec&, std::string_view)> set;
};

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"objective.name", [](const RunSpec& s) { return s.objective.name; },
       [](RunSpec& s, std::string_view v) { s.objective.name = std::string(text::trim(v)); }},
      {"objective.dim", [](const RunSpec& s) { return std::to_string(s.objective.dim); },
       [](RunSpec& s, std::string_view v) { s.objective.dim = parse_size(v); }},
      {"objective.lambda", [](const RunSpec& s) { return fmt(s.objective.lambda); },
       [](RunSpec& s, std::string_view v) { s.objective.lambda = text::parse_double(v); }},
      {"objective.nu", [](const RunSpec& s) { return fmt(s.objective.nu); },
       [](RunSpec& s, std::string_view v) { s.objective.nu = text::parse_double(v); }},
      {"objective.R", [](const RunSpec& s) { return fmt(s.objective.R); },
       [](RunSpec& s, std::string_view v) { s.objective.R = text::parse_double(v); }},
      {"objective.center",
       [](const RunSpec& s) { return s.objective.center ? fmt_point(*s.objective.center) : ""; },
       [](RunSpec& s, std::string_view v) { s.objective.center = parse_optional_point(v); }},
      {"objective.data", [](const RunSpec& s) { return s.objective.data_path; },
       [](RunSpec& s, std::string_view v) { s.objective.data_path = std::string(text::trim(v)); }},
      {"objective.data_m", [](const RunSpec& s) { return std::to_string(s.objective.data_m); },
       [](RunSpec& s, std::string_view v) { s.objective.data_m = parse_size(v); }},
      {"objective.data_df", [](const RunSpec& s) { return fmt(s.objective.data_df); },
       [](RunSpec& s, std::string_view v) { s.objective.data_df = text::parse_double(v); }},
      {"objective.data_seed", [](const RunSpec& s) { return std::to_string(s.objective.data_seed); },
       [](RunSpec& s, std::string_view v) { s.objective.data_seed = text::parse_u64(v); }},

      {"noise.kind", [](const RunSpec& s) { return s.noise.kind; },
       [](RunSpec& s, std::string_view v) { s.noise.kind = std::string(text::trim(v)); }},
      {"noise.sigma", [](const RunSpec& s) { return fmt(s.noise.sigma); },
       [](RunSpec& s, std::string_view v) { s.noise.sigma = text::parse_double(v); }},
      {"noise.df", [](const RunSpec& s) { return fmt(s.noise.df); },
       [](RunSpec& s, std::string_view v) { s.noise.df = text::parse_double(v); }},
      {"noise.scale", [](const RunSpec& s) { return fmt(s.noise.scale); },
       [](RunSpec& s, std::string_view v) { s.noise.scale = text::parse_double(v); }},
      {"noise.with_replacement",
       [](const RunSpec& s) { return std::string(s.noise.with_replacement ? "true" : "false"); },
       [](RunSpec& s, std::string_view v) { s.noise.with_replacement = parse_bool(v); }},

      {"sgd.eta", [](const RunSpec& s) { return fmt(s.sgd.eta); },
       [](RunSpec& s, std::string_view v) { s.sgd.eta = text::parse_double(v); }},
      {"sgd.n_iters", [](const RunSpec& s) { return std::to_string(s.sgd.n_iters); },
       [](RunSpec& s, std::string_view v) { s.sgd.n_iters = parse_size(v); }},
      {"sgd.burn_in", [](const RunSpec& s) { return std::to_string(s.sgd.burn_in); },
       [](RunSpec& s, std::string_view v) { s.sgd.burn_in = parse_size(v); }},
      {"sgd.theta0", [](const RunSpec& s) { return s.sgd.theta0 ? fmt_point(*s.sgd.theta0) : ""; },
       [](RunSpec& s, std::string_view v) { s.sgd.theta0 = parse_optional_point(v); }},
      {"sgd.seed", [](const RunSpec& s) { return std::to_string(s.sgd.seed); },
       [](RunSpec& s, std::string_view v) { s.sgd.seed = text::parse_u64(v); }},
      {"sgd.batch_size", [](const RunSpec& s) { return std::to_string(s.sgd.batch_size); },
       [](RunSpec& s, std::string_view v) { s.sgd.batch_size = parse_size(v); }},

      {"test.functions", [](const RunSpec& s) { return fmt_strings(s.test_functions); },
       [](RunSpec& s, std::string_view v) { s.test_functions = parse_strings(v); }},

      {"experiment.N", [](const RunSpec& s) { return std::to_string(s.experiment.N); },
       [](RunSpec& s, std::string_view v) { s.experiment.N = parse_size(v); }},
      {"experiment.etas", [](const RunSpec& s) { return fmt_doubles(s.experiment.etas); },
       [](RunSpec& s, std::string_view v) { s.experiment.etas = parse_doubles(v); }},
      {"experiment.inits",
       [](const RunSpec& s) {
         std::string out;
         for (std::size_t i = 0; i < s.experiment.inits.size(); ++i) {
           out += (i ? ";" : "") + fmt_point(s.experiment.inits[i]);
         }
         return out;
       },
       [](RunSpec& s, std::string_view v) {
         s.experiment.inits.clear();
         if (text::trim(v).empty()) return;
         for (const auto& p : text::split(v, ';')) s.experiment.inits.push_back(parse_point(p));
       }},
      {"experiment.skew_tol", [](const RunSpec& s) { return fmt(s.experiment.skew_tol); },
       [](RunSpec& s, std::string_view v) { s.experiment.skew_tol = text::parse_double(v); }},
      {"experiment.kurt_tol", [](const RunSpec& s) { return fmt(s.experiment.kurt_tol); },
       [](RunSpec& s, std::string_view v) { s.experiment.kurt_tol = text::parse_double(v); }},
      {"experiment.level", [](const RunSpec& s) { return fmt(s.experiment.level); },
       [](RunSpec& s, std::string_view v) { s.experiment.level = text::parse_double(v); }},
      {"experiment.strategy", [](const RunSpec& s) { return s.experiment.strategy; },
       [](RunSpec& s, std::string_view v) { s.experiment.strategy = std::string(text::trim(v)); }},
      {"experiment.batch_len", [](const RunSpec& s) { return std::to_string(s.experiment.batch_len); },
       [](RunSpec& s, std::string_view v) { s.experiment.batch_len = parse_size(v); }},
      {"experiment.trace_points",
       [](const RunSpec& s) { return std::to_string(s.experiment.trace_points); },
       [](RunSpec& s, std::string_view v) { s.experiment.trace_points = parse_size(v); }},
      {"experiment.force",
       [](const RunSpec& s) { return std::string(s.experiment.force ? "true" : "false"); },
       [](RunSpec& s, std::string_view v) { s.experiment.force = parse_bool(v); }},

      {"output.dir", [](const RunSpec& s) { return s.output_dir; },
       [](RunSpec& s, std::string_view v) { s.output_dir = std::string(text::trim(v)); }},
  };
  return table;
}

}  // namespace

// ---------------------------------------------------------------------------
// RunSpec
// ---------------------------------------------------------------------------

std::vector<std::string> run_spec_keys() {
  std::vector<std::string> out;
  for (const auto& k : keys()) out.emplace_back(k.name);
  return out;
}

void apply_setting(RunSpec& spec, std::string_view key, std::string_view value) {
  key = text::trim(key);
  for (const auto& k : keys()) {
    if (key == k.name) {
      try {
        k.set(spec, value);
      } catch (const InvalidArgument& e) {
        throw InvalidArgument(std::string(key) + ": " + e.what());
      }
      return;
    }
  }
  throw InvalidArgument("unknown config key '" + std::string(key) + "'");
}

std::string serialize_run_spec(const RunSpec& spec) {
  std::string out;
  for (const auto& k : keys()) out += std::string(k.name) + " = " + k.get(spec) + "\n";
  return out;
}

RunSpec parse_run_spec(std::string_view text_in) {
  RunSpec spec;
  std::size_t line_no = 0;
  for (const auto& raw : text::split(text_in, '\n')) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    apply_setting(spec, line.substr(0, eq), line.substr(eq + 1));
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

ObjectivePtr build_objective(const RunSpec& spec) { return make_objective(spec.objective); }

NoiseModel build_noise(const RunSpec& spec, const ObjectivePtr& objective) {
  const auto& n = spec.noise;
  if (n.kind == "none") return NoiseModel::none();
  if (n.kind == "gaussian") return NoiseModel::gaussian(n.sigma);
  if (n.kind == "student-t") return NoiseModel::student_t(n.df, n.scale);
  if (n.kind == "minibatch") {
    auto fs_obj = std::dynamic_pointer_cast<const FiniteSumObjective>(objective);
    if (!fs_obj) {
      throw InvalidArgument("minibatch noise needs a data-driven objective (cauchy-mle or bz-mle)");
    }
    return NoiseModel::minibatch(fs_obj, spec.sgd.batch_size, n.with_replacement);
  }
  throw InvalidArgument("unknown noise kind '" + n.kind +
                        "' (expected none, gaussian, student-t or minibatch)");
}

TestFunction build_test_function(std::string_view name, const ObjectivePtr& objective) {
  if (name == "norm") return TestFunction::norm();
  if (name == "norm2") return TestFunction::square_norm();
  if (name == "sigmoid_f") return TestFunction::sigmoid_of_f(objective);
  if (name == "constant") {
    return TestFunction::custom("constant", [](const Vector&) { return 1.0; }, 0.0, 0.0);
  }
  if (name.starts_with("coord:")) {
    const auto i = parse_size(name.substr(6));
    if (i >= objective->dim()) throw InvalidArgument("coordinate index out of range");
    return TestFunction::coordinate(i);
  }
  throw InvalidArgument("unknown test function '" + std::string(name) +
                        "' (expected norm, norm2, sigmoid_f, constant or coord:<i>)");
}

SgdConfig build_sgd_config(const RunSpec& spec, std::size_t dim) {
  SgdConfig cfg;
  cfg.eta = spec.sgd.eta;
  cfg.n_iters = spec.sgd.n_iters;
  cfg.burn_in = spec.sgd.burn_in;
  cfg.theta0 = spec.sgd.theta0.value_or(Point::zeros(dim));
  cfg.seed = spec.sgd.seed;
  cfg.batch_size = spec.sgd.batch_size;
  cfg.validate();
  if (cfg.theta0.dim() != dim) {
    throw InvalidArgument("sgd.theta0 has dimension " + std::to_string(cfg.theta0.dim()) +
                          ", objective has " + std::to_string(dim));
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace {

struct Context {
  RunSpec spec;
  std::set<std::string> assigned;  // keys set by the config file, flags or --set
  std::size_t workers = 1;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
};

json point_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json caps_json(const StepSizeBounds& b) {
  return {{"c_L_alpha", b.c_L_alpha}, {"c_dagger", b.c_dagger},       {"L_bar", b.L_bar},
          {"L_dagger", b.L_dagger},   {"overall_max", b.overall_max}, {"binding", b.binding}};
}

// Refuses etas at or above the cap unless forced; either way the caller
// learns which bound binds.
void check_step_sizes(const Context& ctx, const Objective& objective, const NoiseModel& noise,
                      const std::vector<double>& etas) {
  const auto caps = chain_step_size_bounds(objective, noise);
  const double worst = *std::max_element(etas.begin(), etas.end());
  if (worst < caps.overall_max) return;
  const std::string msg = "eta = " + fmt(worst) + " is not below the step-size cap " +
                          fmt(caps.overall_max) + " (binding: " + caps.binding + ")";
  if (!ctx.spec.experiment.force) throw PreconditionError(msg + "; pass --force to run anyway");
  *ctx.err << "warning: " << msg << "; continuing because of --force\n";
}

std::vector<double> etas_of(const RunSpec& spec) {
  return spec.experiment.etas.empty() ? std::vector<double>{spec.sgd.eta} : spec.experiment.etas;
}

fs::path out_path(const Context& ctx, const std::string& name) {
  return fs::path(ctx.spec.output_dir) / name;
}

void emit_json(const Context& ctx, const std::string& file, const std::string& body) {
  const auto path = out_path(ctx, file);
  write_text_file(path, body);
  *ctx.out << path.string() << '\n';
}

int cmd_run(const Context& ctx) {
  const auto objective = build_objective(ctx.spec);
  const auto noise = build_noise(ctx.spec, objective);
  const auto cfg = build_sgd_config(ctx.spec, objective->dim());
  check_step_sizes(ctx, *objective, noise, {cfg.eta});

  std::vector<TestFunction> fns;
  for (const auto& name : ctx.spec.test_functions) fns.push_back(build_test_function(name, objective));
  TrajectoryOptions topt;
  topt.store_iterates = true;
  const auto traj = run_trajectory(*objective, noise, cfg, fns, topt);

  const auto iter_path = out_path(ctx, "iterates.csv");
  write_iterates_csv(traj, cfg.burn_in, iter_path);
  *ctx.out << iter_path.string() << '\n';

  json means = json::object();
  for (std::size_t i = 0; i < fns.size(); ++i) means[fns[i].label()] = traj.mean(i);
  const json summary{{"objective", objective->name()},
                     {"noise", noise.describe()},
                     {"eta", cfg.eta},
                     {"n_iters", cfg.n_iters},
                     {"burn_in", cfg.burn_in},
                     {"seed", cfg.seed},
                     {"test_means", means},
                     {"mean_norm2", traj.mean_norm2()},
                     {"mean_norm4", traj.mean_norm4()},
                     {"polyak_ruppert", point_json(polyak_ruppert_average(traj).coords())},
                     {"last_theta", point_json(traj.last_theta)},
                     {"step_size_caps", caps_json(chain_step_size_bounds(*objective, noise))}};
  emit_json(ctx, "run.json", summary.dump(2));
  return kExitOk;
}

int cmd_clt(const Context& ctx) {
  const auto& spec = ctx.spec;
  const auto objective = build_objective(spec);
  const auto noise = build_noise(spec, objective);
  const auto base_cfg = build_sgd_config(spec, objective->dim());
  if (spec.experiment.N < 2) throw InvalidArgument("experiment.N must be at least 2");
  if (spec.test_functions.empty()) throw InvalidArgument("test.functions is empty");
  const auto phi = build_test_function(spec.test_functions.front(), objective);
  const auto etas = etas_of(spec);
  const auto inits = spec.experiment.inits.empty() ? std::vector<Point>{base_cfg.theta0}
                                                   : spec.experiment.inits;
  check_step_sizes(ctx, *objective, noise, etas);

  json cells = json::array();
  std::vector<std::vector<McEnsemble>> grid(etas.size());
  std::size_t cell = 0;
  for (std::size_t e = 0; e < etas.size(); ++e) {
    for (std::size_t j = 0; j < inits.size(); ++j, ++cell) {
      SgdConfig cfg = base_cfg;
      cfg.eta = etas[e];
      cfg.theta0 = inits[j];
      const auto seed = mix_seed(spec.sgd.seed, cell);
      auto ens = clt_experiment(*objective, noise, cfg, phi, spec.experiment.N, seed,
                                {ctx.workers});
      const auto report = normality_test(ens, spec.experiment.skew_tol, spec.experiment.kurt_tol);
      const std::string stem = "clt_cell" + std::to_string(cell);
      const auto csv = out_path(ctx, stem + ".csv");
      write_ensemble_csv(ens, csv);
      *ctx.out << csv.string() << '\n';
      emit_json(ctx, stem + "_normality.json", normality_json(report));

      const double se = ens.sd() / std::sqrt(static_cast<double>(ens.size()));
      cells.push_back({{"cell", cell},
                       {"eta", etas[e]},
                       {"theta0", point_json(inits[j].coords())},
                       {"base_seed", seed},
                       {"mean", ens.mean()},
                       {"sd", ens.sd()},
                       {"se", se},
                       {"normality_pass", report.pass}});
      grid[e].push_back(std::move(ens));
    }
  }

  json comparisons = json::array();
  for (std::size_t e = 0; e < etas.size(); ++e) {
    for (std::size_t j = 1; j < inits.size(); ++j) {
      const auto ks = two_sample_ks(grid[e][0].values, grid[e][j].values);
      const std::string file = "clt_ks_eta" + std::to_string(e) + "_init0_vs_init" + std::to_string(j) + ".json";
      emit_json(ctx, file, two_sample_json(ks, "theta0=" + fmt_point(inits[0]), "theta0=" + fmt_point(inits[j])));
    }
  }
  for (std::size_t e = 0; e + 1 < etas.size(); ++e) {
    const auto& a = grid[e][0];
    const auto& b = grid[e + 1][0];
    const double diff = b.mean() - a.mean();
    const double se = std::hypot(a.sd() / std::sqrt(static_cast<double>(a.size())),
                                 b.sd() / std::sqrt(static_cast<double>(b.size())));
    comparisons.push_back({{"eta_a", etas[e]},
                           {"eta_b", etas[e + 1]},
                           {"mean_difference", diff},
                           {"combined_se", se},
                           {"differ_at_2se", std::abs(diff) > 2.0 * se}});
  }
  const json summary{{"objective", objective->name()},
                     {"noise", noise.describe()},
                     {"test_function", phi.label()},
                     {"n_iters", base_cfg.n_iters},
                     {"burn_in", base_cfg.burn_in},
                     {"N", spec.experiment.N},
                     {"cells", cells},
                     {"eta_comparisons", comparisons}};
  emit_json(ctx, "clt_summary.json", summary.dump(2));
  return kExitOk;
}

int cmd_bias(const Context& ctx) {
  const auto& spec = ctx.spec;
  const auto objective = build_objective(spec);
  if (!objective->known_min()) {
    throw PreconditionError("objective '" + objective->name() +
                            "' has no known minimizer; bias mode supports quadratic, quadsine, "
                            "simplified-cauchy and simplified-bz");
  }
  const auto noise = build_noise(spec, objective);
  const auto base_cfg = build_sgd_config(spec, objective->dim());
  if (spec.test_functions.empty()) throw InvalidArgument("test.functions is empty");
  const auto phi = build_test_function(spec.test_functions.front(), objective);
  const auto etas = etas_of(spec);
  check_step_sizes(ctx, *objective, noise, etas);

  BiasSweepOptions opt;
  opt.workers = ctx.workers;
  opt.force = true;  // already vetted above
  opt.trace_points = spec.experiment.trace_points;
  opt.theta0 = base_cfg.theta0;
  const auto curve = bias_sweep(*objective, noise, phi, etas, base_cfg.n_iters, base_cfg.burn_in,
                                spec.experiment.N, spec.sgd.seed, opt);
  emit_json(ctx, "bias_curve.json", bias_curve_json(curve));
  const auto trace = out_path(ctx, "bias_trace.csv");
  write_bias_trace_csv(curve, trace);
  *ctx.out << trace.string() << '\n';
  return kExitOk;
}

int cmd_variance(const Context& ctx) {
  const auto& spec = ctx.spec;
  const double level = spec.experiment.level;
  if (!(level > 0.0 && level < 1.0)) {
    throw InvalidArgument("experiment.level must lie in (0, 1), got " + fmt(level));
  }
  const auto& strategy = spec.experiment.strategy;
  if (strategy != "batch-means" && strategy != "replication") {
    throw InvalidArgument("experiment.strategy must be batch-means or replication");
  }
  const auto objective = build_objective(spec);
  const auto noise = build_noise(spec, objective);
  const auto cfg = build_sgd_config(spec, objective->dim());
  if (spec.test_functions.empty()) throw InvalidArgument("test.functions is empty");
  const auto phi = build_test_function(spec.test_functions.front(), objective);
  check_step_sizes(ctx, *objective, noise, {cfg.eta});

  json j{{"objective", objective->name()}, {"noise", noise.describe()},
         {"test_function", phi.label()},   {"strategy", strategy},
         {"eta", cfg.eta},                 {"n_iters", cfg.n_iters},
         {"burn_in", cfg.burn_in},         {"level", level}};
  double mean = 0.0, sigma2 = 0.0;
  std::size_t n_total = 0;
  if (strategy == "batch-means") {
    const TestFunction fns[] = {phi};
    TrajectoryOptions topt;
    topt.store_test_values = true;
    const auto traj = run_trajectory(*objective, noise, cfg, fns, topt);
    const std::size_t b = spec.experiment.batch_len ? spec.experiment.batch_len
                                                    : default_batch_len(traj.n_recorded);
    sigma2 = asymp_var_batch_means(traj, 0, b);
    mean = traj.mean(0);
    n_total = traj.n_recorded;
    j["batch_len"] = b;
  } else {
    const auto ens = clt_experiment(*objective, noise, cfg, phi, spec.experiment.N, spec.sgd.seed,
                                    {ctx.workers});
    sigma2 = asymp_var_replication(ens.values);
    double s = 0.0;
    for (double m : ens.trajectory_means) s += m;
    mean = s / static_cast<double>(ens.size());
    n_total = ens.size() * cfg.n_recorded();
    j["N"] = ens.size();
  }
  const auto [lo, hi] = confidence_interval(mean, sigma2, n_total, level);
  j["sigma2"] = sigma2;
  j["mean"] = mean;
  j["n_total"] = n_total;
  j["ci"] = {lo, hi};
  emit_json(ctx, "variance.json", j.dump(2));
  return kExitOk;
}

struct CheckOptions {
  std::string assumption = "all";
  std::optional<double> alpha;
  double radius = 50.0;
  std::size_t samples = 10000;
  std::optional<double> R;
  std::optional<double> tail;
};

json violations_json(const std::vector<Violation>& vs) {
  json a = json::array();
  for (const auto& v : vs) a.push_back({{"theta", point_json(v.theta)}, {"lhs", v.lhs}, {"rhs", v.rhs}});
  return a;
}

int cmd_check(const Context& ctx, const CheckOptions& opt) {
  const auto objective = build_objective(ctx.spec);
  const auto& k = objective->constants();
  static const std::set<std::string> known = {"all", "growth", "dissipativity", "local-dissipativity",
                                              "lojasiewicz", "convexity"};
  if (!known.count(opt.assumption)) {
    throw InvalidArgument("unknown assumption '" + opt.assumption +
                          "' (expected growth, dissipativity, local-dissipativity, lojasiewicz, "
                          "convexity or all)");
  }
  std::vector<std::string> todo;
  if (opt.assumption == "all") {
    todo = {"growth", "dissipativity"};
    if (k.gamma) todo.push_back("lojasiewicz");
    if (k.delta) todo.push_back("local-dissipativity");
  } else {
    todo = {opt.assumption};
  }

  json results = json::object();
  bool all_ok = true;
  for (const auto& a : todo) {
    RngStream stream(ctx.spec.sgd.seed, 0);
    json r;
    bool ok = false;
    if (a == "growth") {
      const auto c = check_linear_growth(*objective, opt.radius, opt.samples, stream);
      ok = c.L_hat <= k.L * (1.0 + 1e-9);
      r = {{"L_hat", c.L_hat}, {"L_declared", k.L}, {"argmax", point_json(c.argmax)}};
    } else if (a == "dissipativity") {
      const auto c = check_dissipativity(*objective, opt.radius, opt.samples, stream, opt.alpha);
      ok = c.certified;
      r = {{"alpha", c.alpha},
           {"beta_hat", c.beta},
           {"alpha_declared", k.alpha},
           {"beta_declared", k.beta},
           {"worst_theta", point_json(c.worst_theta)}};
    } else if (a == "lojasiewicz" || a == "local-dissipativity") {
      if (!k.g_spec) {
        throw PreconditionError("objective '" + objective->name() + "' declares no local growth function");
      }
      const double R = opt.R.value_or(k.R_local.value_or(1.0));
      const auto cond = a == "lojasiewicz" ? LocalCondition::lojasiewicz
                                           : LocalCondition::localized_dissipativity;
      const auto c = check_local_growth(*objective, cond, *k.g_spec, R, opt.samples, stream, opt.tail);
      ok = c.certified;
      r = {{"g", c.g_description}, {"R", R}, {"violation_count", c.violation_count},
           {"violations", violations_json(c.violations)}};
      if (a == "lojasiewicz" && k.gamma) r["gamma"] = opt.tail.value_or(*k.gamma);
    } else {
      try {
        const auto w = hessian_negativity_witness(*objective);
        ok = false;
        r = {{"witness_theta", point_json(w.theta.coords())},
             {"direction", point_json(w.direction.coords())},
             {"curvature", w.value},
             {"band", {w.band_lo, w.band_hi}}};
      } catch (const NotFoundError& e) {
        ok = true;
        r = {{"note", e.what()}};
      }
    }
    r["certified"] = ok;
    r["samples"] = a == "convexity" ? 0 : opt.samples;
    results[a] = r;
    all_ok = all_ok && ok;
  }
  const json cert{{"objective", objective->name()}, {"certified", all_ok}, {"checks", results}};
  const std::string body = cert.dump(2);
  write_text_file(out_path(ctx, "certificate.json"), body);
  *ctx.out << body << '\n';
  return all_ok ? kExitOk : kExitCertification;
}

struct ConstantsOptions {
  std::optional<double> L, alpha, beta, L_xi, L_tilde, theta_star_norm;
};

int cmd_constants(const Context& ctx, const ConstantsOptions& opt) {
  double L = 0, alpha = 0, beta = 0, L_xi = 0, ts = 0;
  std::optional<double> L_tilde = opt.L_tilde;
  std::optional<LocalGrowthFn> g;
  std::optional<double> delta;
  std::string source = "explicit";

  if (opt.L || opt.alpha) {
    if (!opt.L || !opt.alpha) throw InvalidArgument("explicit constants need both --L and --alpha");
    L = *opt.L;
    alpha = *opt.alpha;
    beta = opt.beta.value_or(0.0);
    L_xi = opt.L_xi.value_or(0.0);
    ts = opt.theta_star_norm.value_or(0.0);
  } else {
    if (!ctx.assigned.count("objective.name")) {
      throw InvalidArgument("missing constants: pass --L and --alpha or an objective descriptor");
    }
    const auto objective = build_objective(ctx.spec);
    const auto noise = build_noise(ctx.spec, objective);
    const auto& k = objective->constants();
    source = objective->name();
    L = k.L;
    alpha = k.alpha;
    beta = opt.beta.value_or(k.beta);
    L_xi = opt.L_xi.value_or(noise.moment_constant(objective->dim()).value_or(k.L_xi.value_or(0.0)));
    ts = opt.theta_star_norm.value_or(objective->known_min() ? objective->known_min()->norm() : 0.0);
    if (!L_tilde) L_tilde = k.L_tilde;
    g = k.g_spec;
    delta = k.delta;
  }

  const auto caps = step_size_bounds(L, alpha, beta, L_xi, ts);
  const double mu2 = mu2_bound(alpha, beta);
  json j{{"source", source},
         {"L", L},
         {"alpha", alpha},
         {"beta", beta},
         {"L_xi", L_xi},
         {"theta_star_norm", ts},
         {"step_size_caps", caps_json(caps)},
         {"mu2", mu2},
         {"mu4", mu4_bound(L, alpha, beta, L_xi)},
         {"C", theorem4_C(L, L_xi, alpha, beta, mu2, ts)}};
  if (L_tilde) {
    const auto t5 = theorem5_moments(L, *L_tilde, L_xi, alpha, beta, mu2);
    j["L_tilde"] = *L_tilde;
    j["m"] = t5.m;
    j["M"] = t5.M;
  }
  if (ctx.assigned.count("sgd.eta")) {
    const double eta = ctx.spec.sgd.eta;
    const auto p3 = proposition3_constants(L, alpha, beta, L_xi, ts, eta);
    j["eta"] = eta;
    j["D"] = p3.D;
    j["rho"] = p3.rho;
    if (g && delta) {
      j["bias_bound_local_dissipativity"] =
          theorem4_bias_bound(theorem4_C(L, L_xi, alpha, beta, mu2, ts), eta, *delta, *g);
    }
    if (g && L_tilde && eta < 2.0 / *L_tilde) {
      j["bias_bound_lojasiewicz"] =
          theorem5_bias_bound(theorem5_moments(L, *L_tilde, L_xi, alpha, beta, mu2).M, *L_tilde, eta, *g);
    }
  }
  const std::string body = j.dump(2);
  write_text_file(out_path(ctx, "constants.json"), body);
  *ctx.out << body << '\n';
  return kExitOk;
}

int cmd_generate_data(std::size_t m, std::size_t d, double noise_df, std::uint64_t seed,
                      const std::string& stem, std::ostream& out) {
  if (m == 0 || d == 0) throw InvalidArgument("--m and --d must be positive");
  RngStream stream(seed, 0);
  const auto data = gen_regression_data(m, d, noise_df, stream);
  const auto [csv, sidecar] = write_regression_data(data, stem);
  out << csv.string() << '\n' << sidecar.string() << '\n';
  return kExitOk;
}

// Convenience flags and the config key each one writes.
struct FlagBinding {
  const char* flag;
  const char* key;
  const char* help;
};

constexpr FlagBinding kSpecFlags[] = {
    {"--objective", "objective.name",
     "quadratic, quadsine, simplified-cauchy, simplified-bz, cauchy-mle or bz-mle"},
    {"--dim", "objective.dim", "parameter dimension"},
    {"--lambda", "objective.lambda", "regularization strength"},
    {"--nu", "objective.nu", "Blake-Zisserman outlier weight"},
    {"--data", "objective.data", "regression CSV written by generate-data"},
    {"--data-m", "objective.data_m", "rows of the generated dataset when --data is absent"},
    {"--data-df", "objective.data_df", "Student-t df of the generated responses"},
    {"--data-seed", "objective.data_seed", "seed of the generated dataset"},
    {"--noise", "noise.kind", "none, gaussian, student-t or minibatch"},
    {"--sigma", "noise.sigma", "gaussian noise scale"},
    {"--df", "noise.df", "Student-t noise degrees of freedom"},
    {"--scale", "noise.scale", "Student-t noise scale"},
    {"--eta", "sgd.eta", "step size"},
    {"--n-iters", "sgd.n_iters", "iterations per trajectory"},
    {"--burn-in", "sgd.burn_in", "discarded leading iterations"},
    {"--theta0", "sgd.theta0", "initial point, comma separated"},
    {"--seed", "sgd.seed", "base seed"},
    {"--batch-size", "sgd.batch_size", "minibatch size"},
    {"--test", "test.functions", "test functions: norm, norm2, sigmoid_f, constant, coord:<i>"},
    {"-N,--replications", "experiment.N", "Monte Carlo replications"},
    {"--etas", "experiment.etas", "step sizes, comma separated"},
    {"--inits", "experiment.inits", "initial points separated by ';'"},
    {"--skew-tol", "experiment.skew_tol", "normality skewness tolerance"},
    {"--kurt-tol", "experiment.kurt_tol", "normality excess-kurtosis tolerance"},
    {"--level", "experiment.level", "confidence level"},
    {"--strategy", "experiment.strategy", "batch-means or replication"},
    {"--batch-len", "experiment.batch_len", "batch length (0: automatic)"},
    {"--trace-points", "experiment.trace_points", "iterations recorded in the bias trace"},
    {"--out", "output.dir", "output directory"},
};

struct SpecOptions {
  std::string config;
  std::vector<std::string> sets;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  bool force = false;
  std::size_t workers = 0;
};

void add_spec_options(CLI::App* sub, SpecOptions& so) {
  sub->add_option("--config", so.config, "config file with key = value lines");
  sub->add_option("--set", so.sets, "override a config key (key=value); repeatable");
  for (const auto& f : kSpecFlags) so.options[f.key] = sub->add_option(f.flag, so.values[f.key], f.help);
  sub->add_flag("--force", so.force, "allow step sizes above the theoretical cap");
  sub->add_option("--workers", so.workers, "worker threads (default: SGDCHAIN_WORKERS or all cores)");
}

Context make_context(const SpecOptions& so, std::ostream& out, std::ostream& err) {
  Context ctx;
  ctx.out = &out;
  ctx.err = &err;
  if (!so.config.empty()) {
    std::ifstream in(so.config, std::ios::binary);
    if (!in) throw InvalidArgument("cannot read config file " + so.config);
    std::stringstream ss;
    ss << in.rdbuf();
    ctx.spec = parse_run_spec(ss.str());
    for (const auto& line : text::split(ss.str(), '\n')) {
      const auto t = text::trim(line);
      if (t.empty() || t.front() == '#') continue;
      ctx.assigned.emplace(text::trim(t.substr(0, t.find('='))));
    }
  }
  for (const auto& [key, opt] : so.options) {
    if (opt->count() > 0) {
      apply_setting(ctx.spec, key, so.values.at(key));
      ctx.assigned.insert(key);
    }
  }
  for (const auto& s : so.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + s + "'");
    const auto key = std::string(text::trim(std::string_view(s).substr(0, eq)));
    apply_setting(ctx.spec, key, std::string_view(s).substr(eq + 1));
    ctx.assigned.insert(key);
  }
  if (so.force) ctx.spec.experiment.force = true;
  ctx.workers = so.workers ? so.workers : default_worker_count();
  return ctx;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Constant step size SGD as a Markov chain: simulation, diagnostics and bounds",
               "sgdchain"};
  app.require_subcommand(1);

  std::size_t gd_m = 0, gd_d = 0;
  double gd_df = 10.0;
  std::uint64_t gd_seed = 0;
  std::string gd_out = "data/regression";
  auto* gen = app.add_subcommand("generate-data", "write a synthetic heavy-tailed regression dataset");
  gen->add_option("--m", gd_m, "rows")->required();
  gen->add_option("--d", gd_d, "features")->required();
  gen->add_option("--noise-df", gd_df, "Student-t degrees of freedom of the response noise");
  gen->add_option("--seed", gd_seed, "seed")->required();
  gen->add_option("--out", gd_out, "output stem; writes <stem>.csv and <stem>.json");

  SpecOptions run_o, clt_o, bias_o, var_o, check_o, const_o;
  auto* run = app.add_subcommand("run", "one trajectory; writes iterates.csv and run.json");
  add_spec_options(run, run_o);
  auto* clt = app.add_subcommand("clt", "Monte Carlo CLT ensembles with normality diagnostics");
  add_spec_options(clt, clt_o);
  auto* bias = app.add_subcommand("bias", "bias of the stationary mean across step sizes");
  add_spec_options(bias, bias_o);
  auto* var = app.add_subcommand("variance", "asymptotic variance and confidence interval");
  add_spec_options(var, var_o);

  CheckOptions chk;
  auto* check = app.add_subcommand("check", "sample-based certificates for the regularity assumptions");
  add_spec_options(check, check_o);
  check->add_option("--assumption", chk.assumption,
                    "growth, dissipativity, local-dissipativity, lojasiewicz, convexity or all");
  check->add_option("--alpha", chk.alpha, "candidate dissipativity constant");
  check->add_option("--radius", chk.radius, "sampling radius");
  check->add_option("--samples", chk.samples, "number of sampled points");
  check->add_option("--R", chk.R, "local radius");
  check->add_option("--tail", chk.tail, "tail constant (alpha or gamma) outside the local ball");

  ConstantsOptions cst;
  auto* constants = app.add_subcommand("constants", "step-size caps, moment bounds and bias constants");
  add_spec_options(constants, const_o);
  constants->add_option("--L", cst.L, "linear growth constant");
  constants->add_option("--alpha", cst.alpha, "dissipativity alpha");
  constants->add_option("--beta", cst.beta, "dissipativity beta");
  constants->add_option("--L-xi", cst.L_xi, "noise moment constant");
  constants->add_option("--L-tilde", cst.L_tilde, "Hessian growth constant");
  constants->add_option("--theta-star-norm", cst.theta_star_norm, "norm of a critical point");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_generate_data(gd_m, gd_d, gd_df, gd_seed, gd_out, out);
    if (*run) return cmd_run(make_context(run_o, out, err));
    if (*clt) return cmd_clt(make_context(clt_o, out, err));
    if (*bias) return cmd_bias(make_context(bias_o, out, err));
    if (*var) return cmd_variance(make_context(var_o, out, err));
    if (*check) return cmd_check(make_context(check_o, out, err), chk);
    if (*constants) return cmd_constants(make_context(const_o, out, err), cst);
  } catch (const EnsembleError& e) {
    err << "error: " << e.what() << '\n';
    return e.any_divergence() ? kExitNumerical : kExitUsage;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const EvaluationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace sgdchain
