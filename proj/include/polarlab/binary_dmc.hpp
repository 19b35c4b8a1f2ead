// binary_dmc.hpp: exact classical engine for binary-input DMCs under the polar
// transform. Output symbols carry (P(y|0), P(y|1)); the minus/plus transforms
// grow the alphabet and symbols with equal likelihood ratio are merged, which
// is an exact sufficient-statistic reduction for I and the Bhattacharyya sum.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "polarlab/channels.hpp"
#include "polarlab/common.hpp"

namespace polarlab {

struct BinaryDmc {
  std::vector<std::array<double, 2>> sym;  // per output symbol: {P(y|0), P(y|1)}

  static BinaryDmc from_dmc(const ClassicalDMC& w) {
    if (w.input_size() != 2) throw InvalidDistribution("BinaryDmc: binary input required");
    BinaryDmc out;
    for (int y = 0; y < w.output_size(); ++y)
      out.sym.push_back({w.transition[0][y], w.transition[1][y]});
    return out;
  }

  double mutual_info() const {
    double i = 0.0;
    for (const auto& s : sym) {
      double m = 0.5 * (s[0] + s[1]);
      for (int u = 0; u < 2; ++u)
        if (s[u] > 0.0) i += 0.5 * s[u] * std::log2(s[u] / m);
    }
    return i < 0.0 ? 0.0 : i;
  }

  double bhattacharyya() const {
    double z = 0.0;
    for (const auto& s : sym) z += std::sqrt(s[0] * s[1]);
    return z;
  }
};

namespace detail {

// Merge output symbols with equal likelihood ratio. Key p1/(p0+p1) lies in
// [0,1]; symbols within merge_tol of each other collapse into one.
inline BinaryDmc merge_symbols(BinaryDmc w) {
  constexpr double merge_tol = 1e-12;
  std::vector<std::pair<double, std::array<double, 2>>> keyed;
  keyed.reserve(w.sym.size());
  for (const auto& s : w.sym) {
    double mass = s[0] + s[1];
    if (mass <= 1e-300) continue;
    keyed.push_back({s[1] / mass, s});
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  BinaryDmc out;
  for (const auto& [key, s] : keyed) {
    if (!out.sym.empty()) {
      double prev_mass = out.sym.back()[0] + out.sym.back()[1];
      double prev_key = out.sym.back()[1] / prev_mass;
      if (std::abs(key - prev_key) <= merge_tol) {
        out.sym.back()[0] += s[0];
        out.sym.back()[1] += s[1];
        continue;
      }
    }
    out.sym.push_back(s);
  }
  return out;
}

inline void guard_alphabet(const BinaryDmc& w) {
  // Pair enumeration is |A|^2; this guard keeps a single transform step under
  // a few hundred million operations.
  if (w.sym.size() > 20000)
    throw BudgetExceeded("BinaryDmc transform: merged alphabet exceeds limit");
}

}  // namespace detail

// W^- : (u1) -> (y1, y2) with u2 averaged out.
inline BinaryDmc polar_minus(const BinaryDmc& w) {
  detail::guard_alphabet(w);
  BinaryDmc out;
  out.sym.reserve(w.sym.size() * w.sym.size());
  for (const auto& a : w.sym)
    for (const auto& b : w.sym)
      out.sym.push_back({0.5 * (a[0] * b[0] + a[1] * b[1]), 0.5 * (a[1] * b[0] + a[0] * b[1])});
  return detail::merge_symbols(std::move(out));
}

// W^+ : (u2) -> (y1, y2, u1).
inline BinaryDmc polar_plus(const BinaryDmc& w) {
  detail::guard_alphabet(w);
  BinaryDmc out;
  out.sym.reserve(2 * w.sym.size() * w.sym.size());
  for (const auto& a : w.sym)
    for (const auto& b : w.sym)
      for (int u1 = 0; u1 < 2; ++u1)
        out.sym.push_back({0.5 * a[u1] * b[0], 0.5 * a[u1 ^ 1] * b[1]});
  return detail::merge_symbols(std::move(out));
}

// Per-index (I, Z) for all N synthesized channels, by the exact tree
// recursion: child 2i-1 is minus, child 2i is plus; index path follows the
// binary digits of i-1, most significant first.
struct ClassicalSplitParams {
  std::vector<double> mutual_info;
  std::vector<double> bhattacharyya;
};

inline ClassicalSplitParams classical_split_params(const BinaryDmc& w, std::size_t block_len) {
  unsigned n = log2_exact(block_len);
  std::vector<BinaryDmc> level = {w};
  for (unsigned l = 0; l < n; ++l) {
    std::vector<BinaryDmc> next;
    next.reserve(level.size() * 2);
    for (const auto& c : level) {
      next.push_back(polar_minus(c));
      next.push_back(polar_plus(c));
    }
    level = std::move(next);
  }
  ClassicalSplitParams out;
  for (const auto& c : level) {
    out.mutual_info.push_back(c.mutual_info());
    out.bhattacharyya.push_back(c.bhattacharyya());
  }
  return out;
}

// Erasure-probability recursion for the BEC: minus doubles erasures
// (2e - e^2), plus squares them (e^2). Exact for any block length.
inline std::vector<double> bec_erasure_recursion(double eps, std::size_t block_len) {
  unsigned n = log2_exact(block_len);
  if (n > 20) throw BudgetExceeded("bec_erasure_recursion: block length above 2^20");
  std::vector<double> level = {eps};
  for (unsigned l = 0; l < n; ++l) {
    std::vector<double> next;
    next.reserve(level.size() * 2);
    for (double e : level) {
      next.push_back(2.0 * e - e * e);
      next.push_back(e * e);
    }
    level = std::move(next);
  }
  return level;
}

}  // namespace polarlab
