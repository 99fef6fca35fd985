#pragma once

// Boolean encoding of action profiles and Fourier characters on the
// hypercube {-1,+1}^p, p = N * log2(A).
//
// Conventions used throughout the library:
//   * actions are 1-based externally ([A] = {1..A}), 0-based internally;
//   * each unit owns a contiguous block of log2(A) encoding positions, and
//     the binary digits of (action - 1) are laid out most-significant first;
//   * encoding positions are 1-based; position i lives in bit (i - 1) of a
//     SubsetMask;
//   * a profile's lexicographic rank (unit 1 most significant) is its
//     "profile index"; index order is the canonical profile order.

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace netband {

/// Largest encoding width representable by SubsetMask.
inline constexpr int kMaxEncodingWidth = 64;

/// Default cap on exhaustive tables (A^N entries) and subset enumeration.
inline constexpr int kDefaultEnumerationBits = 24;

inline bool is_power_of_two(std::int64_t x) { return x > 0 && (x & (x - 1)) == 0; }

/// Number of encoding bits per unit, log2(A). Throws when A is not a power of 2.
inline int bits_per_unit(int arms) {
  if (!is_power_of_two(arms)) {
    throw std::invalid_argument("action count " + std::to_string(arms) +
                                " is not a power of 2 (see pad_action_count)");
  }
  return std::countr_zero(static_cast<unsigned>(arms));
}

/// Next power of two >= arms. Environments with a non power-of-2 action set
/// duplicate rewards over the padded actions.
inline int pad_action_count(int arms) {
  if (arms < 1) throw std::invalid_argument("action count must be >= 1");
  return static_cast<int>(std::bit_ceil(static_cast<unsigned>(arms)));
}

/// Integer power with overflow check; used for A^N and A^s.
inline std::uint64_t checked_pow(std::uint64_t base, int exp) {
  std::uint64_t out = 1;
  for (int i = 0; i < exp; ++i) {
    if (base != 0 && out > UINT64_MAX / base) throw std::overflow_error("integer power overflows 64 bits");
    out *= base;
  }
  return out;
}

inline std::uint64_t low_bits(int width) {
  return width >= 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << width) - 1);
}

// ---------------------------------------------------------------------------
// ActionProfile

class ActionProfile {
 public:
  ActionProfile() = default;

  ActionProfile(std::vector<int> actions, int arms) : actions_(std::move(actions)), arms_(arms) {
    if (arms_ < 1) throw std::invalid_argument("action count must be >= 1");
    for (int a : actions_) {
      if (a < 1 || a > arms_) {
        throw std::out_of_range("action " + std::to_string(a) + " outside [1, " + std::to_string(arms_) + "]");
      }
    }
  }

  /// Profile with the given lexicographic rank among [A]^N.
  static ActionProfile from_index(std::uint64_t index, int units, int arms) {
    std::vector<int> actions(static_cast<std::size_t>(units));
    for (int n = units - 1; n >= 0; --n) {
      actions[static_cast<std::size_t>(n)] = static_cast<int>(index % static_cast<std::uint64_t>(arms)) + 1;
      index /= static_cast<std::uint64_t>(arms);
    }
    if (index != 0) throw std::out_of_range("profile index exceeds A^N");
    return ActionProfile(std::move(actions), arms);
  }

  std::uint64_t index() const {
    std::uint64_t idx = 0;
    for (int a : actions_) idx = idx * static_cast<std::uint64_t>(arms_) + static_cast<std::uint64_t>(a - 1);
    return idx;
  }

  int arms() const { return arms_; }
  int units() const { return static_cast<int>(actions_.size()); }
  std::span<const int> actions() const { return actions_; }
  /// 1-based action of 0-based unit n.
  int operator[](std::size_t n) const { return actions_[n]; }

  bool operator==(const ActionProfile&) const = default;

 private:
  std::vector<int> actions_;
  int arms_ = 2;
};

// ---------------------------------------------------------------------------
// SubsetMask: a set S of encoding positions, width <= 64.

class SubsetMask {
 public:
  SubsetMask() = default;
  SubsetMask(std::uint64_t bits, int width) : bits_(bits), width_(width) {
    if (width < 0 || width > kMaxEncodingWidth) {
      throw std::invalid_argument("subset width " + std::to_string(width) + " outside [0, 64]");
    }
    if ((bits & ~low_bits(width)) != 0) throw std::invalid_argument("subset has bits beyond its width");
  }

  /// Mask from 1-based positions.
  static SubsetMask of(int width, std::initializer_list<int> positions) {
    return of(width, std::span<const int>(positions.begin(), positions.size()));
  }
  static SubsetMask of(int width, std::span<const int> positions) {
    std::uint64_t bits = 0;
    for (int i : positions) {
      if (i < 1 || i > width) throw std::out_of_range("position " + std::to_string(i) + " outside [1, width]");
      bits |= std::uint64_t{1} << (i - 1);
    }
    return SubsetMask(bits, width);
  }
  static SubsetMask full(int width) { return SubsetMask(low_bits(width), width); }

  std::uint64_t bits() const { return bits_; }
  int width() const { return width_; }
  int size() const { return std::popcount(bits_); }
  bool empty() const { return bits_ == 0; }
  bool contains(int position) const { return position >= 1 && position <= width_ && ((bits_ >> (position - 1)) & 1U); }
  bool is_subset_of(const SubsetMask& other) const { return (bits_ & ~other.bits_) == 0; }

  std::vector<int> positions() const {
    std::vector<int> out;
    for (std::uint64_t b = bits_; b != 0; b &= b - 1) out.push_back(std::countr_zero(b) + 1);
    return out;
  }

  bool operator==(const SubsetMask&) const = default;

 private:
  std::uint64_t bits_ = 0;
  int width_ = 0;
};

/// Canonical subset order: cardinality first, then lexicographic on the
/// ascending position lists.
inline bool canonical_less(std::uint64_t a, std::uint64_t b) {
  const int ca = std::popcount(a), cb = std::popcount(b);
  if (ca != cb) return ca < cb;
  while (a != 0 && b != 0) {
    const int la = std::countr_zero(a), lb = std::countr_zero(b);
    if (la != lb) return la < lb;
    a &= a - 1;
    b &= b - 1;
  }
  return false;
}

// ---------------------------------------------------------------------------
// BooleanVector

struct BooleanVector {
  std::vector<int> bits;  // each entry -1 or +1

  int width() const { return static_cast<int>(bits.size()); }

  /// Positions holding -1, as a mask.
  std::uint64_t minus_mask() const {
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i] == -1) m |= std::uint64_t{1} << i;
    }
    return m;
  }
};

/// Mask of positions equal to -1 in v(a) for the profile with the given
/// index. Only valid for power-of-2 A; `width` = N * log2(A).
inline std::uint64_t minus_mask_of_index(std::uint64_t index, int width) {
  // index bit (width - i) carries encoding position i.
  std::uint64_t plus = 0;
  for (int i = 1; i <= width; ++i) {
    if ((index >> (width - i)) & 1U) plus |= std::uint64_t{1} << (i - 1);
  }
  return ~plus & low_bits(width);
}

inline std::uint64_t minus_mask(const ActionProfile& a) {
  const int width = a.units() * bits_per_unit(a.arms());
  if (width > kMaxEncodingWidth) throw std::invalid_argument("encoding wider than 64 bits");
  return minus_mask_of_index(a.index(), width);
}

inline BooleanVector boolean_encode(const ActionProfile& a) {
  const int k = bits_per_unit(a.arms());
  BooleanVector v;
  v.bits.reserve(static_cast<std::size_t>(a.units() * k));
  for (int action : a.actions()) {
    const int code = action - 1;
    for (int b = k - 1; b >= 0; --b) v.bits.push_back(((code >> b) & 1) ? 1 : -1);
  }
  return v;
}

/// chi_S evaluated from the -1 mask of x: (-1)^{|S ∩ minus(x)|}.
inline int character_sign(std::uint64_t subset_bits, std::uint64_t minus_bits) {
  return (std::popcount(subset_bits & minus_bits) & 1) ? -1 : 1;
}

inline int character_value(const SubsetMask& s, const BooleanVector& v) {
  if (s.width() != v.width()) {
    throw std::invalid_argument("subset width " + std::to_string(s.width()) + " != vector length " +
                                std::to_string(v.width()));
  }
  int out = 1;
  for (int i : s.positions()) out *= v.bits[static_cast<std::size_t>(i - 1)];
  return out;
}

/// All subsets of `indices` (optionally |S| <= max_degree) in canonical order.
inline std::vector<SubsetMask> enumerate_subsets(const SubsetMask& indices, std::optional<int> max_degree = std::nullopt,
                                                 int cap_bits = kDefaultEnumerationBits) {
  const std::vector<int> pos = indices.positions();
  const int m = static_cast<int>(pos.size());
  if (m > cap_bits) {
    throw std::length_error("refusing to enumerate subsets of " + std::to_string(m) + " positions (cap " +
                            std::to_string(cap_bits) + ")");
  }
  if (max_degree && *max_degree < 0) throw std::invalid_argument("max_degree must be >= 0");
  const int top = max_degree ? std::min(*max_degree, m) : m;

  std::vector<SubsetMask> out;
  std::vector<int> comb;
  for (int k = 0; k <= top; ++k) {
    comb.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) comb[static_cast<std::size_t>(i)] = i;
    while (true) {
      std::uint64_t bits = 0;
      for (int c : comb) bits |= std::uint64_t{1} << (pos[static_cast<std::size_t>(c)] - 1);
      out.emplace_back(bits, indices.width());
      // next k-combination of {0..m-1} in lexicographic order
      int i = k - 1;
      while (i >= 0 && comb[static_cast<std::size_t>(i)] == m - k + i) --i;
      if (i < 0) break;
      ++comb[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j) comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exact transform over a full value table.

/// Dense Fourier coefficients, indexed by subset bits.
struct FourierCoefficients {
  int width = 0;
  std::vector<double> values;  // size 2^width

  double operator[](const SubsetMask& s) const { return values.at(static_cast<std::size_t>(s.bits())); }
};

/// Size of [A]^N, rejecting tables beyond 2^cap_bits entries.
inline std::uint64_t profile_count(int units, int arms, int cap_bits = kDefaultEnumerationBits) {
  const int width = units * bits_per_unit(arms);
  if (width > cap_bits) {
    throw std::length_error("A^N = 2^" + std::to_string(width) + " exceeds the table cap 2^" + std::to_string(cap_bits));
  }
  return std::uint64_t{1} << width;
}

/// theta_S = A^{-N} sum_a f(a) chi_S(v(a)) for every S, by direct summation.
/// `table[i]` is f at the profile with index i.
inline FourierCoefficients fourier_transform(std::span<const double> table, int units, int arms,
                                             int cap_bits = kDefaultEnumerationBits) {
  const std::uint64_t count = profile_count(units, arms, cap_bits);
  if (table.size() != count) {
    throw std::invalid_argument("table has " + std::to_string(table.size()) + " entries, expected " +
                                std::to_string(count));
  }
  const int width = units * bits_per_unit(arms);
  std::vector<std::uint64_t> minus(count);
  for (std::uint64_t i = 0; i < count; ++i) minus[i] = minus_mask_of_index(i, width);

  FourierCoefficients out{width, std::vector<double>(count, 0.0)};
  const double scale = 1.0 / static_cast<double>(count);
  for (std::uint64_t s = 0; s < count; ++s) {
    double acc = 0.0;
    for (std::uint64_t i = 0; i < count; ++i) acc += (std::popcount(s & minus[i]) & 1) ? -table[i] : table[i];
    out.values[s] = acc * scale;
  }
  return out;
}

/// sum_S theta_S chi_S(v(a)) at the profile with the given index.
inline double reconstruct(const FourierCoefficients& coeffs, std::uint64_t profile_index) {
  const std::uint64_t minus = minus_mask_of_index(profile_index, coeffs.width);
  double acc = 0.0;
  for (std::size_t s = 0; s < coeffs.values.size(); ++s) {
    acc += (std::popcount(s & minus) & 1) ? -coeffs.values[s] : coeffs.values[s];
  }
  return acc;
}

}  // namespace netband
