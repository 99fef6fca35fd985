#pragma once

// Synthetic sparse network interference environments: interference graphs,
// sparse Fourier reward models, noisy reward sampling and exact oracles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fourier.hpp"
#include "random.hpp"

namespace netband {

// ---------------------------------------------------------------------------
// InterferenceGraph

struct InterferenceGraph {
  int units = 0;
  int sparsity = 0;
  /// neighborhoods[n] is N(n), 0-based unit ids sorted ascending.
  std::vector<std::vector<int>> neighborhoods;

  /// Throws if any neighborhood is malformed or larger than `sparsity`.
  void validate() const {
    if (units < 1) throw std::invalid_argument("graph needs at least one unit");
    if (static_cast<int>(neighborhoods.size()) != units) throw std::invalid_argument("one neighborhood per unit required");
    for (int n = 0; n < units; ++n) {
      const auto& nb = neighborhoods[static_cast<std::size_t>(n)];
      if (static_cast<int>(nb.size()) > sparsity) {
        throw std::invalid_argument("neighborhood of unit " + std::to_string(n + 1) + " exceeds sparsity");
      }
      if (!std::is_sorted(nb.begin(), nb.end()) || std::adjacent_find(nb.begin(), nb.end()) != nb.end()) {
        throw std::invalid_argument("neighborhood of unit " + std::to_string(n + 1) + " not sorted/unique");
      }
      for (int m : nb) {
        if (m < 0 || m >= units) throw std::out_of_range("neighbor id out of range");
      }
      if (!std::binary_search(nb.begin(), nb.end(), n)) {
        throw std::invalid_argument("unit " + std::to_string(n + 1) + " missing from its own neighborhood");
      }
    }
  }

  int max_neighborhood() const {
    std::size_t s = 0;
    for (const auto& nb : neighborhoods) s = std::max(s, nb.size());
    return static_cast<int>(s);
  }
};

/// Encoding positions owned by the given (0-based) units.
inline SubsetMask block_mask(std::span<const int> members, int units, int arms) {
  const int k = bits_per_unit(arms);
  const int width = units * k;
  if (width > kMaxEncodingWidth) throw std::invalid_argument("encoding wider than 64 bits");
  std::uint64_t bits = 0;
  for (int m : members) {
    if (m < 0 || m >= units) throw std::out_of_range("unit id out of range");
    bits |= low_bits(k) << (m * k);
  }
  return SubsetMask(bits, width);
}

/// B(n): encoding positions of the blocks owned by the neighbors of unit n.
inline SubsetMask block_index_set(const InterferenceGraph& graph, int unit, int arms) {
  return block_mask(graph.neighborhoods.at(static_cast<std::size_t>(unit)), graph.units, arms);
}

/// N(n) = {n} plus s-1 distinct other units drawn uniformly.
inline InterferenceGraph generate_graph(int units, int sparsity, std::uint64_t seed) {
  if (units < 1) throw std::invalid_argument("need at least one unit");
  if (sparsity < 1 || sparsity > units) {
    throw std::invalid_argument("sparsity " + std::to_string(sparsity) + " outside [1, " + std::to_string(units) + "]");
  }
  RandomEngine rng(seed);
  InterferenceGraph g{units, sparsity, {}};
  g.neighborhoods.resize(static_cast<std::size_t>(units));
  std::vector<int> pool;
  for (int n = 0; n < units; ++n) {
    pool.clear();
    for (int m = 0; m < units; ++m) {
      if (m != n) pool.push_back(m);
    }
    // partial Fisher-Yates: first s-1 entries become the sample
    for (int i = 0; i < sparsity - 1; ++i) {
      std::uniform_int_distribution<int> pick(i, static_cast<int>(pool.size()) - 1);
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    auto& nb = g.neighborhoods[static_cast<std::size_t>(n)];
    nb.assign(pool.begin(), pool.begin() + (sparsity - 1));
    nb.push_back(n);
    std::sort(nb.begin(), nb.end());
  }
  return g;
}

// ---------------------------------------------------------------------------
// SparseFourierModel

struct Coefficient {
  std::uint64_t mask = 0;  // SubsetMask bits
  double value = 0.0;
};

struct SparseFourierModel {
  InterferenceGraph graph;
  int arms = 2;
  /// coeffs[n] lists theta_{n,S} in canonical subset order.
  std::vector<std::vector<Coefficient>> coeffs;

  int units() const { return graph.units; }
  int width() const { return graph.units * bits_per_unit(arms); }

  /// Throws when a coefficient of unit n sits outside subsets of B(n).
  void validate_support() const {
    for (int n = 0; n < units(); ++n) {
      const std::uint64_t block = block_index_set(graph, n, arms).bits();
      for (const auto& c : coeffs[static_cast<std::size_t>(n)]) {
        if ((c.mask & ~block) != 0) {
          throw std::invalid_argument("unit " + std::to_string(n + 1) + " has a coefficient outside B(n)");
        }
      }
    }
  }
};

/// theta_{n,∅} = 1/2 and nonconstant coefficients c_S / (2 sum c) with
/// c_S ~ U[0,1], so every r_n lies in [0, 1]. The scale is shaved by a
/// relative 1e-12 so the bound survives floating-point summation.
inline SparseFourierModel generate_model(const InterferenceGraph& graph, int arms, std::uint64_t seed) {
  graph.validate();
  bits_per_unit(arms);
  RandomEngine rng(seed);
  std::uniform_real_distribution<double> unit_interval(0.0, 1.0);

  SparseFourierModel model{graph, arms, {}};
  model.coeffs.resize(static_cast<std::size_t>(graph.units));
  for (int n = 0; n < graph.units; ++n) {
    const auto subsets = enumerate_subsets(block_index_set(graph, n, arms));
    std::vector<double> raw(subsets.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 1; i < subsets.size(); ++i) {
      raw[i] = unit_interval(rng);
      total += raw[i];
    }
    const double scale = (1.0 - 1e-12) / (2.0 * total);
    auto& out = model.coeffs[static_cast<std::size_t>(n)];
    out.reserve(subsets.size());
    out.push_back({subsets[0].bits(), 0.5});
    for (std::size_t i = 1; i < subsets.size(); ++i) {
      out.push_back({subsets[i].bits(), total > 0.0 ? raw[i] * scale : 0.0});
    }
  }
  return model;
}

inline double unit_reward(const SparseFourierModel& model, int unit, std::uint64_t minus) {
  double r = 0.0;
  for (const auto& c : model.coeffs[static_cast<std::size_t>(unit)]) {
    r += (std::popcount(c.mask & minus) & 1) ? -c.value : c.value;
  }
  return r;
}

inline void check_profile(const SparseFourierModel& model, const ActionProfile& a) {
  if (a.units() != model.units() || a.arms() != model.arms) {
    throw std::invalid_argument("profile dimensions (N=" + std::to_string(a.units()) + ", A=" +
                                std::to_string(a.arms()) + ") do not match the model");
  }
}

/// r_n(a) for every unit, from the sparse coefficient lists.
inline std::vector<double> true_reward(const SparseFourierModel& model, const ActionProfile& a) {
  check_profile(model, a);
  const std::uint64_t minus = minus_mask(a);
  std::vector<double> out(static_cast<std::size_t>(model.units()));
  for (int n = 0; n < model.units(); ++n) out[static_cast<std::size_t>(n)] = unit_reward(model, n, minus);
  return out;
}

inline double mean_reward_at(const SparseFourierModel& model, std::uint64_t profile_index) {
  const std::uint64_t minus = minus_mask_of_index(profile_index, model.width());
  double acc = 0.0;
  for (int n = 0; n < model.units(); ++n) acc += unit_reward(model, n, minus);
  return acc / static_cast<double>(model.units());
}

/// r̄(a) for every profile index; refuses tables beyond 2^cap_bits.
inline std::vector<double> mean_reward_table(const SparseFourierModel& model, int cap_bits = kDefaultEnumerationBits) {
  const std::uint64_t count = profile_count(model.units(), model.arms, cap_bits);
  std::vector<double> table(count);
  for (std::uint64_t i = 0; i < count; ++i) table[i] = mean_reward_at(model, i);
  return table;
}

/// Exhaustive argmax of r̄; ties go to the lexicographically smallest profile.
inline std::pair<ActionProfile, double> optimal_action(const SparseFourierModel& model,
                                                       int cap_bits = kDefaultEnumerationBits) {
  const auto table = mean_reward_table(model, cap_bits);
  std::uint64_t best = 0;
  for (std::uint64_t i = 1; i < table.size(); ++i) {
    if (table[i] > table[best]) best = i;
  }
  return {ActionProfile::from_index(best, model.units(), model.arms), table[best]};
}

// ---------------------------------------------------------------------------
// Noise and observations

enum class NoiseKind { gaussian, none };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::gaussian;
  double scale = 1.0;

  void validate() const {
    if (kind == NoiseKind::gaussian && !(scale > 0.0)) throw std::invalid_argument("noise scale must be > 0");
  }
  /// Scale the learner assumes for its confidence widths (0 when noiseless).
  double effective_scale() const { return kind == NoiseKind::none ? 0.0 : scale; }
};

struct RewardObservation {
  std::int64_t round = 0;
  std::vector<double> per_unit;
  double mean = 0.0;
};

/// R_{nt} = r_n(a) + eps_{nt}, eps independent Gaussian(0, scale^2).
inline RewardObservation sample_round(const SparseFourierModel& model, const ActionProfile& a, const NoiseSpec& noise,
                                      RandomEngine& rng, std::int64_t round = 0) {
  noise.validate();
  RewardObservation obs{round, true_reward(model, a), 0.0};
  if (noise.kind == NoiseKind::gaussian) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& r : obs.per_unit) r += noise.scale * gauss(rng);
  }
  obs.mean = std::accumulate(obs.per_unit.begin(), obs.per_unit.end(), 0.0) / static_cast<double>(obs.per_unit.size());
  return obs;
}

// ---------------------------------------------------------------------------
// JSON serialization: {N, A, s, neighborhoods: [[1-based ids]], coeffs: [{"0x<mask>": value}]}

inline std::string mask_to_hex(std::uint64_t mask) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(mask));
  return buf;
}

inline std::uint64_t mask_from_hex(const std::string& text) {
  if (text.size() < 3 || text[0] != '0' || (text[1] != 'x' && text[1] != 'X')) {
    throw std::invalid_argument("mask key '" + text + "' is not 0x-prefixed hex");
  }
  std::size_t used = 0;
  const unsigned long long v = std::stoull(text.substr(2), &used, 16);
  if (used != text.size() - 2) throw std::invalid_argument("mask key '" + text + "' is not hex");
  return static_cast<std::uint64_t>(v);
}

inline nlohmann::json model_to_json(const SparseFourierModel& model) {
  nlohmann::json j;
  j["N"] = model.graph.units;
  j["A"] = model.arms;
  j["s"] = model.graph.sparsity;
  auto& nbs = j["neighborhoods"] = nlohmann::json::array();
  for (const auto& nb : model.graph.neighborhoods) {
    auto row = nlohmann::json::array();
    for (int m : nb) row.push_back(m + 1);
    nbs.push_back(row);
  }
  auto& cs = j["coeffs"] = nlohmann::json::array();
  for (const auto& unit : model.coeffs) {
    auto obj = nlohmann::json::object();
    for (const auto& c : unit) obj[mask_to_hex(c.mask)] = c.value;
    cs.push_back(obj);
  }
  return j;
}

/// Parses a model document. With `check_support` false, coefficients outside
/// B(n) are accepted (the transform diagnostic needs to load such models).
inline SparseFourierModel model_from_json(const nlohmann::json& j, bool check_support = true) {
  SparseFourierModel model;
  model.graph.units = j.at("N").get<int>();
  model.arms = j.at("A").get<int>();
  model.graph.sparsity = j.at("s").get<int>();
  for (const auto& row : j.at("neighborhoods")) {
    std::vector<int> nb;
    for (const auto& m : row) nb.push_back(m.get<int>() - 1);
    std::sort(nb.begin(), nb.end());
    model.graph.neighborhoods.push_back(std::move(nb));
  }
  model.graph.validate();
  const int width = model.width();
  if (width > kMaxEncodingWidth) throw std::invalid_argument("encoding wider than 64 bits");
  const auto& cs = j.at("coeffs");
  if (static_cast<int>(cs.size()) != model.graph.units) throw std::invalid_argument("one coefficient map per unit required");
  for (const auto& obj : cs) {
    std::vector<Coefficient> unit;
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      const std::uint64_t mask = mask_from_hex(it.key());
      if ((mask & ~low_bits(width)) != 0) throw std::invalid_argument("mask " + it.key() + " wider than N*log2(A)");
      unit.push_back({mask, it.value().get<double>()});
    }
    std::sort(unit.begin(), unit.end(), [](const Coefficient& a, const Coefficient& b) { return canonical_less(a.mask, b.mask); });
    model.coeffs.push_back(std::move(unit));
  }
  if (check_support) model.validate_support();
  return model;
}

// ---------------------------------------------------------------------------
// Transform diagnostic

inline constexpr int kTransformCheckBits = 7;

struct UnitTransformCheck {
  int unit = 0;  // 0-based
  double max_off_support = 0.0;
  double max_reconstruction_error = 0.0;
  bool pass = false;
};

/// Tabulates every r_n over [A]^N, transforms it, and checks that the mass
/// outside subsets of B(n) and the reconstruction error stay within `tol`.
/// Refuses encodings wider than `cap_bits` before doing any work.
inline std::vector<UnitTransformCheck> check_transform(const SparseFourierModel& model, double tol = 1e-9,
                                                       int cap_bits = kTransformCheckBits) {
  const std::uint64_t count = profile_count(model.units(), model.arms, cap_bits);
  const int width = model.width();
  std::vector<UnitTransformCheck> out;
  std::vector<double> table(count);
  for (int n = 0; n < model.units(); ++n) {
    for (std::uint64_t i = 0; i < count; ++i) table[i] = unit_reward(model, n, minus_mask_of_index(i, width));
    const auto coeffs = fourier_transform(table, model.units(), model.arms, cap_bits);
    const std::uint64_t block = block_index_set(model.graph, n, model.arms).bits();
    UnitTransformCheck c;
    c.unit = n;
    for (std::uint64_t s = 0; s < count; ++s) {
      if ((s & ~block) != 0) c.max_off_support = std::max(c.max_off_support, std::abs(coeffs.values[s]));
    }
    for (std::uint64_t i = 0; i < count; ++i) {
      c.max_reconstruction_error = std::max(c.max_reconstruction_error, std::abs(reconstruct(coeffs, i) - table[i]));
    }
    c.pass = c.max_off_support <= tol && c.max_reconstruction_error <= tol;
    out.push_back(c);
  }
  return out;
}

}  // namespace netband
