// netband: command-line front end for the network-interference bandit
// experiments.
//
//   netband simulate --policy etc-known,ucb --n 9 --arms 2 --sparsity 4 --out r.csv
//   netband sweep --axis n --values 5,6,7,8,9 --policy ucb --out s.csv
//   netband plot --in r.csv --out r.svg
//   netband transform-check --n 5 --arms 2 --sparsity 2 --seed 1
//
// Exit codes: 0 ok, 1 usage, 2 runtime failure, 3 diagnostic failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <netband/csv.hpp>
#include <netband/environment.hpp>
#include <netband/harness.hpp>
#include <netband/plot.hpp>

using namespace netband;

namespace {

enum Exit { kOk = 0, kUsage = 1, kRuntime = 2, kDiagnostic = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentFlags {
  std::vector<std::string> policies;
  int units = 9;
  int arms = 2;
  int sparsity = 4;
  std::optional<std::int64_t> horizon;
  int reps = 5;
  std::uint64_t seed = 0;
  std::string mode = "cv";
  double delta = 0.1;
  std::string noise = "gaussian";
  double noise_scale = 1.0;
  std::optional<int> max_degree;
  std::vector<int> known_units;  // 1-based on the command line
  std::optional<std::int64_t> record_every;
  bool fixed_env = false;
  std::optional<std::int64_t> exploration;
  double lambda = 0.0;
  CrossValidatedMode cv;
  double cv_threshold = -1.0;
};

void add_experiment_flags(CLI::App& app, ExperimentFlags& f, bool require_shape) {
  // sweep keeps defaults for the shape flags; simulate requires them
  const std::string n_default = require_shape ? "" : " (default 9)";
  const std::string a_default = require_shape ? "" : " (default 2)";
  const std::string s_default = require_shape ? "" : " (default 4)";
  auto* n = app.add_option("--n", f.units, "number of units N" + n_default);
  auto* a = app.add_option("--arms", f.arms, "actions per unit A, a power of two" + a_default);
  auto* s = app.add_option("--sparsity", f.sparsity, "neighborhood size s" + s_default);
  if (require_shape) {
    n->required();
    a->required();
    s->required();
  }
  app.add_option("--horizon", f.horizon, "horizon T (default 10*2^N)");
  app.add_option("--reps", f.reps, "repetitions (default 5)");
  app.add_option("--seed", f.seed, "base seed (default 0)");
  app.add_option("--mode", f.mode, "hyperparameters: theoretical|cv|fixed (default cv)")
      ->check(CLI::IsMember({"theoretical", "cv", "fixed"}));
  app.add_option("--delta", f.delta, "confidence level delta (default 0.1)");
  app.add_option("--noise", f.noise, "reward noise: gaussian|none (default gaussian)")
      ->check(CLI::IsMember({"gaussian", "none"}));
  app.add_option("--noise-scale", f.noise_scale, "Gaussian noise standard deviation (default 1)");
  app.add_option("--max-degree", f.max_degree, "degree cap d for the unknown-graph Lasso basis (default none)");
  app.add_option("--known-units", f.known_units, "1-based units whose neighborhoods etc-partial may use")
      ->delimiter(',');
  app.add_option("--record-every", f.record_every, "trace stride (default max(1, T/1000))");
  app.add_flag("--fixed-env", f.fixed_env, "reuse one environment for every repetition");
  app.add_option("--exploration", f.exploration, "exploration length E (fixed mode)");
  app.add_option("--lambda", f.lambda, "Lasso regularization (fixed mode, default 0)");
  app.add_option("--cv-folds", f.cv.folds, "CV folds (default 3)");
  app.add_option("--cv-threshold", f.cv_threshold, "CV error threshold (default (1+margin) * noise variance)");
  app.add_option("--cv-margin", f.cv.margin, "relative CV threshold margin (default 0.25)");
  app.add_option("--cv-max-fraction", f.cv.max_explore_fraction, "exploration cap as a fraction of T (default 0.5)");
  app.add_option("--cv-stable", f.cv.stable_checkpoints, "consecutive checkpoints with the same candidate (default 3)");
  app.add_option("--cv-lambda-points", f.cv.lambda_points, "Lasso grid size (default 10)");
  app.add_option("--cv-lambda-min-ratio", f.cv.lambda_min_ratio, "smallest grid lambda over lambda_max (default 0.05)");
}

ExperimentConfig to_config(const ExperimentFlags& f, PolicyKind policy) {
  ExperimentConfig c;
  c.units = f.units;
  c.arms = f.arms;
  c.sparsity = f.sparsity;
  c.horizon = f.horizon;
  c.policy = policy;
  c.mode = parse_mode(f.mode);
  c.delta = f.delta;
  c.cv = f.cv;
  if (f.cv_threshold >= 0.0) c.cv.threshold = f.cv_threshold;
  c.reps = f.reps;
  c.base_seed = f.seed;
  c.record_every = f.record_every;
  c.noise.kind = f.noise == "none" ? NoiseKind::none : NoiseKind::gaussian;
  c.noise.scale = f.noise_scale;
  c.max_degree = f.max_degree;
  for (int u : f.known_units) c.known_units.push_back(u - 1);
  c.fixed_environment = f.fixed_env;
  if (c.mode == ModeKind::fixed) {
    if (!f.exploration) throw UsageError("--mode fixed needs --exploration");
    c.fixed_exploration = *f.exploration;
    c.fixed_lambda = f.lambda;
  }
  if (c.policy == PolicyKind::etc_partial && c.known_units.empty()) {
    throw UsageError("etc-partial needs --known-units");
  }
  c.validate();
  make_mode(c);
  return c;
}

std::vector<PolicyKind> parse_policies(const std::vector<std::string>& tags) {
  if (tags.empty()) throw UsageError("--policy is required");
  std::vector<PolicyKind> out;
  for (const auto& t : tags) out.push_back(parse_policy(t));
  return out;
}

/// Writes `content` to `path` in one go, so a failed run leaves no file.
void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path);
}

void print_summary(const ExperimentConfig& c, const RepeatedResult& r) {
  std::printf("%-12s N=%d A=%d s=%d T=%lld reps=%d  final regret %.4f +- %.4f", std::string(policy_tag(c.policy)).c_str(),
              c.units, c.arms, c.sparsity, static_cast<long long>(c.horizon_value()), c.reps, r.final_mean(),
              r.final_std());
  const auto& d = r.traces.front().meta.diagnostics;
  if (d.exploration_rounds) {
    std::printf("  E:");
    for (const auto& t : r.traces) std::printf(" %lld", static_cast<long long>(t.meta.diagnostics.exploration_rounds.value_or(0)));
  }
  if (c.policy == PolicyKind::seq_elim) {
    std::printf("  epochs:");
    for (const auto& t : r.traces) std::printf(" %d", t.meta.diagnostics.epochs_completed);
  }
  std::printf("\n");
  for (const auto& t : r.traces) {
    for (const auto& w : t.meta.diagnostics.warnings) std::fprintf(stderr, "warning: rep %d: %s\n", t.meta.rep, w.c_str());
  }
}

int cmd_simulate(const ExperimentFlags& f, const std::string& out_path) {
  std::vector<ExperimentConfig> configs;
  try {
    for (PolicyKind p : parse_policies(f.policies)) configs.push_back(to_config(f, p));
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  std::ostringstream csv;
  csv << kTraceHeader << '\n';
  std::size_t run_id = 0;
  for (const auto& c : configs) {
    const RepeatedResult r = run_repeated(c);
    write_trace_rows(csv, r.traces, run_id);
    run_id += r.traces.size();
    print_summary(c, r);
  }
  write_file(out_path, csv.str());
  return kOk;
}

int cmd_sweep(const ExperimentFlags& f, const std::string& axis_tag_text, const std::vector<std::string>& values,
              const std::string& out_path) {
  SweepAxis axis{};
  std::vector<std::vector<ExperimentConfig>> plan;
  ExperimentFlags flags = f;
  std::vector<PolicyKind> policies;
  try {
    axis = parse_axis(axis_tag_text);
    if (axis == SweepAxis::policy) {
      if (!f.policies.empty()) throw UsageError("--policy conflicts with --axis policy");
      policies.push_back(parse_policy(values.empty() ? "ucb" : values.front()));
    } else {
      policies = parse_policies(f.policies);
    }
    for (PolicyKind p : policies) {
      const ExperimentConfig base = to_config(flags, p);
      auto configs = sweep_configs(base, axis, values, f.horizon.has_value());
      for (auto& c : configs) c.validate();
      plan.push_back(std::move(configs));
    }
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }

  std::vector<SweepPoint> points;
  bool ok = true;
  for (const auto& configs : plan) {
    for (std::size_t i = 0; i < configs.size(); ++i) {
      const auto& c = configs[i];
      SweepPoint p{values[i], std::string(policy_tag(c.policy)), 0.0, 0.0, std::nullopt};
      try {
        const RepeatedResult r = run_repeated(c);
        p.mean_final = r.final_mean();
        p.std_final = r.final_std();
        std::printf("%s=%s ", std::string(axis_tag(axis)).c_str(), values[i].c_str());
        print_summary(c, r);
      } catch (const std::exception& e) {
        p.error = e.what();
        std::fprintf(stderr, "error: %s=%s: %s\n", std::string(axis_tag(axis)).c_str(), values[i].c_str(), e.what());
        ok = false;
      }
      points.push_back(std::move(p));
    }
  }
  // failed points are left out of the file; the exit status reports them
  std::ostringstream csv;
  write_sweep_csv(csv, points);
  write_file(out_path, csv.str());
  return ok ? kOk : kRuntime;
}

int cmd_plot(const std::string& in_path, const std::string& out_path) {
  std::ifstream in(in_path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + in_path);
  const CsvTable table = read_csv(in);
  write_file(out_path, render_svg(plot_data(table)));
  return kOk;
}

int cmd_transform_check(int units, int arms, int sparsity, std::uint64_t seed, const std::string& model_path,
                        const std::string& dump_path) {
  SparseFourierModel model;
  try {
    if (!model_path.empty()) {
      std::ifstream in(model_path);
      if (!in) throw std::runtime_error("cannot read " + model_path);
      model = model_from_json(nlohmann::json::parse(in), false);
    } else {
      const int width = units * bits_per_unit(arms);
      if (units < 1 || width > kTransformCheckBits) {
        throw UsageError("N*log2(A) = " + std::to_string(width) + " exceeds the tabulation cap " +
                         std::to_string(kTransformCheckBits));
      }
      model = generate_model(generate_graph(units, sparsity, mix_seed(seed, 1)), arms, mix_seed(seed, 2));
    }
    if (model.width() > kTransformCheckBits) {
      throw UsageError("N*log2(A) = " + std::to_string(model.width()) + " exceeds the tabulation cap " +
                       std::to_string(kTransformCheckBits));
    }
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (!dump_path.empty()) write_file(dump_path, model_to_json(model).dump(2) + "\n");

  bool all = true;
  for (const auto& c : check_transform(model)) {
    std::printf("unit %d: %s (off-support %.3g, reconstruction %.3g)\n", c.unit + 1, c.pass ? "PASS" : "FAIL",
                c.max_off_support, c.max_reconstruction_error);
    all = all && c.pass;
  }
  return all ? kOk : kDiagnostic;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network-interference bandit experiments: simulate, sweep, plot, transform-check."};
  app.require_subcommand(1);

  ExperimentFlags sim_flags;
  std::string sim_out = "regret.csv";
  auto* sim = app.add_subcommand("simulate", "run repetitions of one or more policies and write a regret trace CSV");
  sim->add_option("--policy", sim_flags.policies,
                  "comma list of etc-known|etc-unknown|etc-partial|global-etc|seq-elim|ucb")
      ->delimiter(',')
      ->required();
  add_experiment_flags(*sim, sim_flags, true);
  sim->add_option("--out", sim_out, "output CSV (default regret.csv)");

  ExperimentFlags sweep_flags;
  std::string sweep_out = "sweep.csv", axis;
  std::vector<std::string> values;
  auto* sw = app.add_subcommand("sweep", "final regret over a parameter axis");
  sw->add_option("--axis", axis, "n|t|s|policy")->required();
  sw->add_option("--values", values, "comma list of axis values")->delimiter(',')->required();
  sw->add_option("--policy", sweep_flags.policies, "comma list of policies (not with --axis policy)")->delimiter(',');
  add_experiment_flags(*sw, sweep_flags, false);
  sw->add_option("--out", sweep_out, "output CSV (default sweep.csv)");

  std::string plot_in, plot_out = "regret.svg";
  auto* plot = app.add_subcommand("plot", "render a simulate or sweep CSV as an SVG line chart");
  plot->add_option("--in", plot_in, "input CSV")->required();
  plot->add_option("--out", plot_out, "output SVG (default regret.svg)");

  int tc_units = 5, tc_arms = 2, tc_sparsity = 2;
  std::uint64_t tc_seed = 0;
  std::string tc_model, tc_dump;
  auto* tc = app.add_subcommand("transform-check", "verify the sparse Fourier representation of generated rewards");
  tc->add_option("--n", tc_units, "number of units N (default 5)");
  tc->add_option("--arms", tc_arms, "actions per unit A (default 2)");
  tc->add_option("--sparsity", tc_sparsity, "neighborhood size s (default 2)");
  tc->add_option("--seed", tc_seed, "model seed (default 0)");
  tc->add_option("--model", tc_model, "check this model JSON instead of generating one");
  tc->add_option("--dump-model", tc_dump, "write the checked model as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*sim) return cmd_simulate(sim_flags, sim_out);
    if (*sw) return cmd_sweep(sweep_flags, axis, values, sweep_out);
    if (*plot) return cmd_plot(plot_in, plot_out);
    if (*tc) return cmd_transform_check(tc_units, tc_arms, tc_sparsity, tc_seed, tc_model, tc_dump);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\nRun with --help for the flag list.\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return kUsage;
}
