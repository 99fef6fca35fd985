#pragma once

// Experiment orchestration: seeded runs, pseudo-regret accounting against the
// environment oracle, repetitions and parameter sweeps.
//
// Seeding: rep r of a config with base seed b runs under
// rep_seed = mix_seed(b, r). Graph, model, noise and policy streams are
// derived from rep_seed with fixed salts, so every policy sees the same
// environment and noise draws for a given (b, r). The environment is redrawn
// for every rep unless `fixed_environment` is set.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "elimination.hpp"
#include "environment.hpp"
#include "etc.hpp"
#include "policy.hpp"
#include "random.hpp"
#include "ucb.hpp"

namespace netband {

enum class PolicyKind { etc_known, etc_unknown, etc_partial, global_etc, seq_elim, ucb };
enum class ModeKind { theoretical, cv, fixed };

inline std::string_view policy_tag(PolicyKind k) {
  switch (k) {
    case PolicyKind::etc_known: return "etc-known";
    case PolicyKind::etc_unknown: return "etc-unknown";
    case PolicyKind::etc_partial: return "etc-partial";
    case PolicyKind::global_etc: return "global-etc";
    case PolicyKind::seq_elim: return "seq-elim";
    case PolicyKind::ucb: return "ucb";
  }
  return "unknown";
}

inline PolicyKind parse_policy(std::string_view tag) {
  for (auto k : {PolicyKind::etc_known, PolicyKind::etc_unknown, PolicyKind::etc_partial, PolicyKind::global_etc,
                 PolicyKind::seq_elim, PolicyKind::ucb}) {
    if (policy_tag(k) == tag) return k;
  }
  throw std::invalid_argument("unknown policy '" + std::string(tag) + "'");
}

inline ModeKind parse_mode(std::string_view tag) {
  if (tag == "theoretical") return ModeKind::theoretical;
  if (tag == "cv") return ModeKind::cv;
  if (tag == "fixed") return ModeKind::fixed;
  throw std::invalid_argument("unknown mode '" + std::string(tag) + "'");
}

struct ExperimentConfig {
  int units = 9;
  int arms = 2;
  int sparsity = 4;
  /// Horizon; 10 * 2^N when unset.
  std::optional<std::int64_t> horizon;
  PolicyKind policy = PolicyKind::etc_known;
  ModeKind mode = ModeKind::cv;
  double delta = 0.1;
  std::int64_t fixed_exploration = 1;
  double fixed_lambda = 0.0;
  /// CV settings; noise_variance is overwritten from `noise`.
  CrossValidatedMode cv;
  int reps = 5;
  std::uint64_t base_seed = 0;
  /// Trace thinning stride; max(1, T / 1000) when unset.
  std::optional<std::int64_t> record_every;
  NoiseSpec noise;
  std::optional<int> max_degree;
  /// 0-based units whose neighborhoods etc-partial may use.
  std::vector<int> known_units;
  bool fixed_environment = false;
  /// Every rep reuses rep 0's seed (yields identical reps).
  bool same_seed_all_reps = false;

  std::int64_t horizon_value() const {
    if (horizon) return *horizon;
    if (units >= 58) throw std::overflow_error("default horizon 10 * 2^N overflows");
    return 10 * (std::int64_t{1} << units);
  }
  std::int64_t stride() const { return record_every ? *record_every : std::max<std::int64_t>(1, horizon_value() / 1000); }

  void validate() const {
    if (units < 1) throw std::invalid_argument("N must be >= 1");
    if (sparsity < 1 || sparsity > units) throw std::invalid_argument("s must lie in [1, N]");
    bits_per_unit(arms);
    if (reps < 1) throw std::invalid_argument("reps must be >= 1");
    if (horizon_value() < 1) throw std::invalid_argument("T must be >= 1");
    if (stride() < 1) throw std::invalid_argument("record_every must be >= 1");
    noise.validate();
    for (int u : known_units) {
      if (u < 0 || u >= units) throw std::invalid_argument("known unit out of range");
    }
  }
};

inline HyperparameterMode make_mode(const ExperimentConfig& c) {
  switch (c.mode) {
    case ModeKind::theoretical: return TheoreticalMode{c.delta};
    case ModeKind::fixed: return FixedMode{c.fixed_exploration, c.fixed_lambda};
    case ModeKind::cv: {
      CrossValidatedMode cv = c.cv;
      const double s = c.noise.effective_scale();
      cv.noise_variance = s * s;
      return cv;
    }
  }
  throw std::logic_error("unhandled mode");
}

// ---------------------------------------------------------------------------
// Environment with exact oracle

struct Environment {
  SparseFourierModel model;
  std::vector<double> mean_table;  // r̄ by profile index
  std::uint64_t optimal = 0;
  double optimal_value = 0.0;

  static Environment from_model(SparseFourierModel model) {
    Environment env{std::move(model), {}, 0, 0.0};
    env.mean_table = mean_reward_table(env.model);
    for (std::uint64_t i = 1; i < env.mean_table.size(); ++i) {
      if (env.mean_table[i] > env.mean_table[env.optimal]) env.optimal = i;
    }
    env.optimal_value = env.mean_table[env.optimal];
    return env;
  }

  static Environment generate(int units, int sparsity, int arms, std::uint64_t seed) {
    const auto graph = generate_graph(units, sparsity, mix_seed(seed, 1));
    return from_model(generate_model(graph, arms, mix_seed(seed, 2)));
  }

  const InterferenceGraph& graph() const { return model.graph; }
  double regret_of(std::uint64_t profile) const { return optimal_value - mean_table[profile]; }
};

// ---------------------------------------------------------------------------
// Traces

struct TraceMeta {
  std::string policy;
  int units = 0;
  int arms = 0;
  int sparsity = 0;
  std::int64_t horizon = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  std::uint64_t optimal_profile = 0;
  double optimal_value = 0.0;
  PolicyDiagnostics diagnostics;
};

struct RegretTrace {
  std::vector<std::int64_t> rounds;
  std::vector<double> inst;
  std::vector<double> cum;
  std::vector<Phase> phases;
  /// Rounds whose phase was not `commit`, over the full horizon.
  std::int64_t non_committed_rounds = 0;
  /// Sum of the per-round regrets over the full horizon.
  double total_regret = 0.0;
  TraceMeta meta;
};

/// Drives `policy` for `horizon` rounds against `env`, recording every
/// `stride`-th round plus the last one. Regret uses true means only.
inline RegretTrace run_policy(const Environment& env, Policy& policy, const NoiseSpec& noise, RandomEngine& noise_rng,
                              std::int64_t horizon, std::int64_t stride) {
  if (stride < 1) throw std::invalid_argument("record stride must be >= 1");
  RegretTrace trace;
  double cum = 0.0;
  for (std::int64_t t = 1; t <= horizon; ++t) {
    const ActionProfile a = policy.next_action();
    const std::uint64_t idx = a.index();
    const double inst = env.regret_of(idx);
    cum += inst;
    if (policy.phase() != Phase::commit) ++trace.non_committed_rounds;
    if (t % stride == 0 || t == horizon) {
      trace.rounds.push_back(t);
      trace.inst.push_back(inst);
      trace.cum.push_back(cum);
      trace.phases.push_back(policy.phase());
    }
    policy.observe(sample_round(env.model, a, noise, noise_rng, t));
  }
  trace.total_regret = cum;
  trace.meta.policy = policy.name();
  trace.meta.units = env.model.units();
  trace.meta.arms = env.model.arms;
  trace.meta.sparsity = env.graph().sparsity;
  trace.meta.horizon = horizon;
  trace.meta.optimal_profile = env.optimal;
  trace.meta.optimal_value = env.optimal_value;
  trace.meta.diagnostics = policy.diagnostics();
  return trace;
}

inline std::unique_ptr<Policy> make_policy(const ExperimentConfig& c, const Environment& env, std::uint64_t seed) {
  const std::int64_t horizon = c.horizon_value();
  switch (c.policy) {
    case PolicyKind::etc_known: return etc_known(env.graph(), c.arms, horizon, make_mode(c), seed);
    case PolicyKind::etc_unknown:
      return etc_unknown(c.units, c.arms, horizon, make_mode(c), c.max_degree, c.sparsity, seed);
    case PolicyKind::etc_partial: {
      std::vector<std::optional<std::vector<int>>> known(static_cast<std::size_t>(c.units));
      for (int u : c.known_units) known[static_cast<std::size_t>(u)] = env.graph().neighborhoods[static_cast<std::size_t>(u)];
      return etc_partial(std::move(known), c.arms, horizon, make_mode(c), c.max_degree, c.sparsity, seed);
    }
    case PolicyKind::global_etc: return global_etc_known(env.graph(), c.arms, horizon, make_mode(c), seed);
    case PolicyKind::seq_elim:
      return sequential_elimination(env.graph(), c.arms, horizon, c.delta, c.noise.effective_scale(), seed);
    case PolicyKind::ucb: return ucb_baseline(c.units, c.arms, horizon);
  }
  throw std::logic_error("unhandled policy kind");
}

inline std::uint64_t rep_seed(const ExperimentConfig& c, int rep) {
  return mix_seed(c.base_seed, c.same_seed_all_reps ? 0 : static_cast<std::uint64_t>(rep));
}

inline Environment make_environment(const ExperimentConfig& c, int rep) {
  const std::uint64_t env_seed = c.fixed_environment ? mix_seed(c.base_seed, 0xe1) : mix_seed(rep_seed(c, rep), 0xe1);
  return Environment::generate(c.units, c.sparsity, c.arms, env_seed);
}

inline RegretTrace run_once(const ExperimentConfig& c, int rep) {
  c.validate();
  const std::uint64_t seed = rep_seed(c, rep);
  try {
    const Environment env = make_environment(c, rep);
    auto policy = make_policy(c, env, mix_seed(seed, 4));
    RandomEngine noise_rng(mix_seed(seed, 3));
    RegretTrace trace = run_policy(env, *policy, c.noise, noise_rng, c.horizon_value(), c.stride());
    trace.meta.rep = rep;
    trace.meta.seed = seed;
    trace.meta.sparsity = c.sparsity;
    return trace;
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(policy_tag(c.policy)) + " N=" + std::to_string(c.units) + " rep " +
                             std::to_string(rep) + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Parallel execution

/// Worker count: NETBAND_THREADS when set and positive, else the hardware count.
inline unsigned worker_count() {
  if (const char* env = std::getenv("NETBAND_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

/// Runs job(i) for i in [0, count) on up to worker_count() threads. The
/// first failure (lowest index) is rethrown after all jobs finish.
template <typename Job>
void parallel_for(std::size_t count, Job&& job) {
  std::vector<std::exception_ptr> errors(count);
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(worker_count(), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            job(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct RepeatedResult {
  std::vector<RegretTrace> traces;
  std::vector<std::int64_t> rounds;
  std::vector<double> mean_cum;
  std::vector<double> std_cum;  // sample std (reps - 1 denominator), 0 when reps == 1

  double final_mean() const { return mean_cum.empty() ? 0.0 : mean_cum.back(); }
  double final_std() const { return std_cum.empty() ? 0.0 : std_cum.back(); }
};

/// Mean and sample standard deviation; std is 0 for fewer than two values.
/// Deviations are taken from the first value so identical inputs give an
/// exact mean and a std of exactly 0.
inline std::pair<double, double> mean_and_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double origin = v.front();
  double shift = 0.0;
  for (double x : v) shift += x - origin;
  shift /= static_cast<double>(v.size());
  const double mean = origin + shift;
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - origin - shift) * (x - origin - shift);
  return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

inline RepeatedResult run_repeated(const ExperimentConfig& c) {
  c.validate();
  RepeatedResult out;
  out.traces.resize(static_cast<std::size_t>(c.reps));
  parallel_for(out.traces.size(), [&](std::size_t r) { out.traces[r] = run_once(c, static_cast<int>(r)); });

  out.rounds = out.traces.front().rounds;
  std::vector<double> column(out.traces.size());
  for (std::size_t k = 0; k < out.rounds.size(); ++k) {
    for (std::size_t r = 0; r < out.traces.size(); ++r) column[r] = out.traces[r].cum[k];
    const auto [m, s] = mean_and_std(column);
    out.mean_cum.push_back(m);
    out.std_cum.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

enum class SweepAxis { units, horizon, sparsity, policy };

inline SweepAxis parse_axis(std::string_view tag) {
  if (tag == "n") return SweepAxis::units;
  if (tag == "t") return SweepAxis::horizon;
  if (tag == "s") return SweepAxis::sparsity;
  if (tag == "policy") return SweepAxis::policy;
  throw std::invalid_argument("unknown sweep axis '" + std::string(tag) + "'");
}

inline std::string_view axis_tag(SweepAxis a) {
  switch (a) {
    case SweepAxis::units: return "n";
    case SweepAxis::horizon: return "t";
    case SweepAxis::sparsity: return "s";
    case SweepAxis::policy: return "policy";
  }
  return "unknown";
}

struct SweepPoint {
  std::string value;
  std::string policy;
  double mean_final = 0.0;
  double std_final = 0.0;
  std::optional<std::string> error;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::units;
  std::vector<SweepPoint> points;

  bool all_ok() const {
    return std::all_of(points.begin(), points.end(), [](const SweepPoint& p) { return !p.error; });
  }
};

inline std::int64_t parse_integer(std::string_view text) {
  std::size_t used = 0;
  const std::string s(text);
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw std::invalid_argument("'" + s + "' is not an integer");
  return v;
}

/// Config for one sweep value. Sweeping N resets T to 10 * 2^N unless the
/// horizon is pinned.
inline ExperimentConfig sweep_point_config(const ExperimentConfig& base, SweepAxis axis, std::string_view value,
                                           bool horizon_pinned) {
  ExperimentConfig c = base;
  switch (axis) {
    case SweepAxis::units:
      c.units = static_cast<int>(parse_integer(value));
      if (!horizon_pinned) c.horizon.reset();
      break;
    case SweepAxis::horizon: c.horizon = parse_integer(value); break;
    case SweepAxis::sparsity: c.sparsity = static_cast<int>(parse_integer(value)); break;
    case SweepAxis::policy: c.policy = parse_policy(value); break;
  }
  return c;
}

/// Parses every value up front so malformed input fails before any run.
inline std::vector<ExperimentConfig> sweep_configs(const ExperimentConfig& base, SweepAxis axis,
                                                   const std::vector<std::string>& values, bool horizon_pinned) {
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  std::vector<ExperimentConfig> out;
  for (const auto& v : values) out.push_back(sweep_point_config(base, axis, v, horizon_pinned));
  return out;
}

inline SweepResult sweep(const ExperimentConfig& base, SweepAxis axis, const std::vector<std::string>& values,
                         bool horizon_pinned = false) {
  const auto configs = sweep_configs(base, axis, values, horizon_pinned);
  SweepResult out{axis, {}};
  for (std::size_t i = 0; i < configs.size(); ++i) {
    SweepPoint p{values[i], std::string(policy_tag(configs[i].policy)), 0.0, 0.0, std::nullopt};
    try {
      const RepeatedResult r = run_repeated(configs[i]);
      p.mean_final = r.final_mean();
      p.std_final = r.final_std();
    } catch (const std::exception& e) {
      p.error = e.what();
    }
    out.points.push_back(std::move(p));
  }
  return out;
}

}  // namespace netband
