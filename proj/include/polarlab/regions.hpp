// Achievable rate regions for multi-user settings: k-sender MAC regions with
// dominant-face corners, the 14-bound two-receiver interference region with
// its two induced three-sender MAC views, bipartite broadcast inner bounds
// (independent auxiliaries and binned auxiliaries with constructive corner
// points), polytope vertex enumeration, point membership with per-inequality
// slack, and JSON/CSV export.
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sc_decoder.hpp"

namespace polarlab {

// One linear bound sum_i coeff[i] * R_i <= bound. Coefficients are small
// nonnegative integers; the bound is an exactly evaluated entropic quantity.
struct RateIneq {
  std::vector<int> coeff;
  double bound = 0.0;
  std::string label;
};

// Intersection of rate bounds over named nonnegative rate variables. The
// variable order fixes the coefficient order in every inequality.
struct RateRegion {
  std::vector<std::string> vars;
  std::vector<RateIneq> ineqs;
  std::string generator;
};

struct SlackReport {
  bool inside = false;
  std::vector<double> slack;  // bound minus achieved value, one per inequality
};

namespace detail {

// Classical auxiliary tuple with one output state per joint value. Words use
// mixed radix with variable 0 slowest, so for all-binary variables the word
// equals the usual MSB-first packing.
struct AuxEnsemble {
  std::vector<int> sizes;
  std::vector<double> prob;
  std::vector<Cmat> states;
};

inline std::size_t aux_words(const std::vector<int>& sizes) {
  std::size_t w = 1;
  for (int s : sizes) w *= std::size_t(s);
  return w;
}

inline void aux_digits(const AuxEnsemble& e, std::size_t word, std::vector<int>& dg) {
  dg.resize(e.sizes.size());
  for (std::size_t i = e.sizes.size(); i-- > 0;) {
    dg[i] = int(word % std::size_t(e.sizes[i]));
    word /= std::size_t(e.sizes[i]);
  }
}

// H(B | G) = sum_g p(g) S(rho_g) with rho_g the normalized average over the
// words agreeing with g on the masked variables.
inline double cond_output_entropy(const AuxEnsemble& e, std::uint32_t gmask) {
  std::size_t groups = 1;
  for (std::size_t i = 0; i < e.sizes.size(); ++i)
    if (gmask >> i & 1u) groups *= std::size_t(e.sizes[i]);
  const Eigen::Index dim = e.states.front().rows();
  auto pg = std::vector<double>(groups, 0.0);
  auto sg = std::vector<Cmat>(groups, Cmat::Zero(dim, dim));
  std::vector<int> dg;
  for (std::size_t w = 0; w < e.prob.size(); ++w) {
    if (e.prob[w] <= 0.0) continue;
    aux_digits(e, w, dg);
    std::size_t key = 0;
    for (std::size_t i = 0; i < e.sizes.size(); ++i)
      if (gmask >> i & 1u) key = key * std::size_t(e.sizes[i]) + std::size_t(dg[i]);
    pg[key] += e.prob[w];
    sg[key] += e.prob[w] * e.states[w];
  }
  double h = 0.0;
  for (std::size_t g = 0; g < groups; ++g)
    if (pg[g] > 0.0) h += pg[g] * von_neumann_entropy(Cmat(sg[g] / pg[g]));
  return h;
}

// Shannon entropy of the marginal over the masked variables.
inline double aux_marginal_entropy(const AuxEnsemble& e, std::uint32_t gmask) {
  std::size_t groups = 1;
  for (std::size_t i = 0; i < e.sizes.size(); ++i)
    if (gmask >> i & 1u) groups *= std::size_t(e.sizes[i]);
  auto pg = std::vector<double>(groups, 0.0);
  std::vector<int> dg;
  for (std::size_t w = 0; w < e.prob.size(); ++w) {
    if (e.prob[w] <= 0.0) continue;
    aux_digits(e, w, dg);
    std::size_t key = 0;
    for (std::size_t i = 0; i < e.sizes.size(); ++i)
      if (gmask >> i & 1u) key = key * std::size_t(e.sizes[i]) + std::size_t(dg[i]);
    pg[key] += e.prob[w];
  }
  return shannon_entropy(pg);
}

// I(G_want ; B | G_given). Nonnegative by data processing; only numeric dust
// below zero is clamped.
inline double cond_mutual_info(const AuxEnsemble& e, std::uint32_t want, std::uint32_t given) {
  double v = cond_output_entropy(e, given) - cond_output_entropy(e, want | given);
  if (v < -tol::chain)
    throw InvariantViolation("cond_mutual_info: negative conditional information");
  return std::max(v, 0.0);
}

// Classical I(A ; B | C) among auxiliary variables via marginal entropies.
inline double classical_cmi(const AuxEnsemble& e, std::uint32_t a, std::uint32_t b,
                            std::uint32_t c) {
  double v = aux_marginal_entropy(e, a | c) + aux_marginal_entropy(e, b | c) -
             aux_marginal_entropy(e, c) - aux_marginal_entropy(e, a | b | c);
  if (v < -tol::chain)
    throw InvariantViolation("classical_cmi: negative conditional information");
  return std::max(v, 0.0);
}

// Bounds must stay finite and nonnegative for the region to make sense; a
// genuinely negative combination means the supplied distributions waste more
// correlation than the channel pays for.
inline double checked_bound(double v, const char* who) {
  if (!std::isfinite(v)) throw InvariantViolation(std::string(who) + ": bound not finite");
  if (v < -1e-7)
    throw InvariantViolation(std::string(who) +
                             ": negative bound for the supplied distributions");
  return std::max(v, 0.0);
}

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string joined_names(const std::vector<std::string>& names, std::uint32_t mask) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i)
    if (mask >> i & 1u) out += names[i];
  return out;
}

inline std::string info_label(const std::vector<std::string>& aux_names, std::uint32_t want,
                              std::uint32_t given, const std::string& output_name) {
  std::string s = "I(" + joined_names(aux_names, want) + ";" + output_name;
  if (given != 0) s += "|" + joined_names(aux_names, given);
  return s + ")";
}

inline void check_region(const RateRegion& r, const char* who) {
  if (r.vars.empty() || r.ineqs.empty())
    throw InvariantViolation(std::string(who) + ": empty region description");
  for (const RateIneq& q : r.ineqs)
    if (q.coeff.size() != r.vars.size())
      throw DimMismatch(std::string(who) + ": coefficient count != variable count");
}

}  // namespace detail

// Membership test. Rates are nonnegative by convention, so a point with a
// negative coordinate is outside even when every listed bound holds. The
// slack vector follows the inequality order of the region.
inline SlackReport point_in_region(const RateRegion& r, const std::vector<double>& point,
                                   double tolerance = tol::chain) {
  detail::check_region(r, "point_in_region");
  if (point.size() != r.vars.size())
    throw DimMismatch("point_in_region: point dimension != variable count");
  SlackReport rep;
  rep.inside = true;
  for (double c : point)
    if (c < -tolerance) rep.inside = false;
  for (const RateIneq& q : r.ineqs) {
    double v = 0.0;
    for (std::size_t i = 0; i < point.size(); ++i) v += q.coeff[i] * point[i];
    rep.slack.push_back(q.bound - v);
    if (rep.slack.back() < -tolerance) rep.inside = false;
  }
  return rep;
}

// All vertices of the polytope cut out by the region's inequalities together
// with nonnegativity of every rate. Every d-subset of the bounding
// hyperplanes is solved and the solution kept when it satisfies the full
// system; duplicates merge and the list comes back lexicographically sorted.
inline std::vector<std::vector<double>> enumerate_vertices(const RateRegion& r,
                                                           double eps = 1e-9) {
  detail::check_region(r, "enumerate_vertices");
  const std::size_t d = r.vars.size();
  auto rows = std::vector<std::vector<double>>();
  std::vector<double> rhs;
  for (const RateIneq& q : r.ineqs) {
    rows.emplace_back(q.coeff.begin(), q.coeff.end());
    rhs.push_back(q.bound);
  }
  for (std::size_t i = 0; i < d; ++i) {
    auto neg = std::vector<double>(d, 0.0);
    neg[i] = -1.0;
    rows.push_back(std::move(neg));
    rhs.push_back(0.0);
  }
  const std::size_t n = rows.size();
  std::uint64_t combos = 1;
  for (std::size_t i = 0; i < d; ++i)
    combos = detail::sat_mul(combos, std::uint64_t(n - i)) / (i + 1);
  if (combos > (std::uint64_t(1) << 22))
    throw BudgetExceeded("enumerate_vertices: too many hyperplane subsets");

  auto verts = std::vector<std::vector<double>>();
  auto idx = std::vector<std::size_t>(d);
  for (std::size_t i = 0; i < d; ++i) idx[i] = i;
  auto solve = [&](std::vector<double>& x) {
    auto m = std::vector<std::vector<double>>(d, std::vector<double>(d + 1, 0.0));
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) m[i][j] = rows[idx[i]][j];
      m[i][d] = rhs[idx[i]];
    }
    for (std::size_t col = 0; col < d; ++col) {
      std::size_t piv = col;
      for (std::size_t i = col + 1; i < d; ++i)
        if (std::abs(m[i][col]) > std::abs(m[piv][col])) piv = i;
      if (std::abs(m[piv][col]) < 1e-10) return false;
      std::swap(m[piv], m[col]);
      for (std::size_t i = col + 1; i < d; ++i) {
        double f = m[i][col] / m[col][col];
        for (std::size_t j = col; j <= d; ++j) m[i][j] -= f * m[col][j];
      }
    }
    x.assign(d, 0.0);
    for (std::size_t i = d; i-- > 0;) {
      double s = m[i][d];
      for (std::size_t j = i + 1; j < d; ++j) s -= m[i][j] * x[j];
      x[i] = s / m[i][i];
    }
    return true;
  };
  bool more = true;
  std::vector<double> x;
  while (more) {
    if (solve(x)) {
      bool feasible = true;
      for (std::size_t i = 0; i < n && feasible; ++i) {
        double v = 0.0;
        for (std::size_t j = 0; j < d; ++j) v += rows[i][j] * x[j];
        if (v > rhs[i] + eps) feasible = false;
      }
      if (feasible) {
        bool fresh = true;
        for (const auto& u : verts) {
          double dist = 0.0;
          for (std::size_t j = 0; j < d; ++j) dist = std::max(dist, std::abs(u[j] - x[j]));
          if (dist <= 100 * eps) {
            fresh = false;
            break;
          }
        }
        if (fresh) verts.push_back(x);
      }
    }
    more = false;
    for (std::size_t i = d; i-- > 0;) {
      if (idx[i] + (d - i) < n) {
        ++idx[i];
        for (std::size_t j = i + 1; j < d; ++j) idx[j] = idx[j - 1] + 1;
        more = true;
        break;
      }
    }
  }
  std::sort(verts.begin(), verts.end(), [eps](const auto& a, const auto& b) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (a[j] < b[j] - eps) return true;
      if (a[j] > b[j] + eps) return false;
    }
    return false;
  });
  return verts;
}

// Convex hull of planar points, counterclockwise, starting at the
// lexicographically smallest point, collinear interior points dropped.
inline std::vector<std::array<double, 2>> convex_hull_2d(
    std::vector<std::array<double, 2>> pts, double eps = 1e-9) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [eps](const auto& a, const auto& b) {
                          return std::abs(a[0] - b[0]) <= eps && std::abs(a[1] - b[1]) <= eps;
                        }),
            pts.end());
  if (pts.size() <= 2) return pts;
  auto cross = [](const std::array<double, 2>& o, const std::array<double, 2>& a,
                  const std::array<double, 2>& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  auto hull = std::vector<std::array<double, 2>>();
  for (const auto& p : pts) {
    while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), p) <= eps)
      hull.pop_back();
    hull.push_back(p);
  }
  std::size_t lower = hull.size() + 1;
  for (std::size_t i = pts.size() - 1; i-- > 0;) {
    const auto& p = pts[i];
    while (hull.size() >= lower && cross(hull[hull.size() - 2], hull.back(), p) <= eps)
      hull.pop_back();
    hull.push_back(p);
  }
  hull.pop_back();
  return hull;
}

// ---------------------------------------------------------------------------
// Multiple-access region.

struct MacRegion {
  RateRegion region;
  // Dominant-face endpoints for two senders: successive decoding in the two
  // orders. Empty for three or more senders.
  std::vector<std::array<double, 2>> corners;
};

// All 2^k - 1 subset bounds R_S <= I(X_S ; B | X_{S^c}) for a k-sender MAC
// with product inputs, ordered by subset size then by subset word. The
// telescoping identity sum_s I(X_s ; B | X_{<s}) = I(X_1..X_k ; B) is checked
// on every call.
inline MacRegion mac_region(const CqMac& mac, const std::vector<std::vector<double>>& dists) {
  if (int(dists.size()) != mac.senders)
    throw DimMismatch("mac_region: one input distribution per sender");
  for (const auto& p : dists) {
    if (p.size() != 2) throw DimMismatch("mac_region: senders are binary");
    require_distribution(p, "mac_region input");
  }
  const int k = mac.senders;
  detail::AuxEnsemble e;
  e.sizes.assign(std::size_t(k), 2);
  const std::size_t words = std::size_t(1) << k;
  e.prob.resize(words);
  e.states.resize(words);
  for (std::size_t w = 0; w < words; ++w) {
    double p = 1.0;
    for (int s = 0; s < k; ++s) p *= dists[std::size_t(s)][w >> (k - 1 - s) & 1u];
    e.prob[w] = p;
    e.states[w] = mac.outputs[w];
  }
  const std::uint32_t full = (std::uint32_t(1) << k) - 1;

  auto names = std::vector<std::string>();
  for (int s = 0; s < k; ++s) names.push_back("X" + std::to_string(s + 1));
  auto masks = std::vector<std::uint32_t>();
  for (std::uint32_t m = 1; m <= full; ++m) masks.push_back(m);
  std::sort(masks.begin(), masks.end(), [](std::uint32_t a, std::uint32_t b) {
    int pa = std::popcount(a), pb = std::popcount(b);
    return pa != pb ? pa < pb : a < b;
  });

  MacRegion out;
  for (int s = 0; s < k; ++s) out.region.vars.push_back("R" + std::to_string(s + 1));
  for (std::uint32_t m : masks) {
    RateIneq q;
    q.coeff.assign(std::size_t(k), 0);
    std::string lhs;
    for (int s = 0; s < k; ++s)
      if (m >> s & 1u) {
        q.coeff[std::size_t(s)] = 1;
        if (!lhs.empty()) lhs += "+";
        lhs += out.region.vars[std::size_t(s)];
      }
    q.bound = detail::checked_bound(detail::cond_mutual_info(e, m, full & ~m), "mac_region");
    q.label = lhs + " <= " + detail::info_label(names, m, full & ~m, "B");
    out.region.ineqs.push_back(std::move(q));
  }

  double telescoped = 0.0;
  std::uint32_t seen = 0;
  for (int s = 0; s < k; ++s) {
    telescoped += detail::cond_mutual_info(e, std::uint32_t(1) << s, seen);
    seen |= std::uint32_t(1) << s;
  }
  if (std::abs(telescoped - detail::cond_mutual_info(e, full, 0)) > tol::chain)
    throw InvariantViolation("mac_region: chain rule broken across sender splits");

  if (k == 2) {
    out.corners.push_back({detail::cond_mutual_info(e, 1u, 0u),
                           detail::cond_mutual_info(e, 2u, 1u)});
    out.corners.push_back({detail::cond_mutual_info(e, 1u, 2u),
                           detail::cond_mutual_info(e, 2u, 0u)});
  }
  out.region.generator = "mac " + std::to_string(k) + " senders, dim " +
                         std::to_string(mac.output_dim());
  detail::check_region(out.region, "mac_region");
  return out;
}

// ---------------------------------------------------------------------------
// Two-receiver interference region.

struct HkRegion {
  RateRegion region;  // variables S1, S2, T1, T2
  RateRegion mac1;    // receiver 1 view over (S1, T1, T2)
  RateRegion mac2;    // receiver 2 view over (S2, T1, T2)
  std::vector<std::vector<double>> vertices;       // of region plus nonnegativity
  std::vector<std::array<double, 2>> projection;   // hull of (S1+T1, S2+T2)
};

// Rate splitting over four binary auxiliaries: V1 is decoded by receiver 1
// only, V2 by receiver 2 only, V3 and V4 by both. Sender inputs are
// x1(v1, v2) and x2(v3, v4). Each receiver contributes the seven bounds of
// its induced three-sender MAC; in each bound the conditioning set is the
// complement of the bounded variables inside that receiver's own trio.
inline HkRegion hk_region(const InterferenceChannel& ic,
                          const std::vector<std::vector<double>>& aux,
                          const std::vector<std::vector<int>>& map1,
                          const std::vector<std::vector<int>>& map2,
                          std::uint64_t budget = kDefaultBudgetBytes) {
  if (aux.size() != 4) throw DimMismatch("hk_region: four auxiliary distributions");
  for (const auto& p : aux) {
    if (p.size() != 2) throw DimMismatch("hk_region: auxiliaries are binary");
    require_distribution(p, "hk_region auxiliary");
  }
  auto check_map = [](const std::vector<std::vector<int>>& m, const char* who) {
    if (m.size() != 2 || m[0].size() != 2 || m[1].size() != 2)
      throw DimMismatch(std::string(who) + ": map must be 2x2");
    for (const auto& row : m)
      for (int v : row)
        if (v != 0 && v != 1) throw DimMismatch(std::string(who) + ": map value not a bit");
  };
  check_map(map1, "hk_region map1");
  check_map(map2, "hk_region map2");
  const std::uint64_t joint = std::uint64_t(ic.d1) * std::uint64_t(ic.d2);
  detail::check_budget(
      detail::sat_mul(16, detail::sat_mul(detail::sat_mul(joint, joint), 16)), budget,
      "hk_region");

  detail::AuxEnsemble e1, e2;
  e1.sizes.assign(4, 2);
  e2.sizes.assign(4, 2);
  e1.prob.resize(16);
  e1.states.resize(16);
  e2.states.resize(16);
  for (std::size_t w = 0; w < 16; ++w) {
    int v1 = int(w >> 3 & 1u), v2 = int(w >> 2 & 1u), v3 = int(w >> 1 & 1u), v4 = int(w & 1u);
    e1.prob[w] = aux[0][std::size_t(v1)] * aux[1][std::size_t(v2)] *
                 aux[2][std::size_t(v3)] * aux[3][std::size_t(v4)];
    const Cmat& full = ic.at(map1[std::size_t(v1)][std::size_t(v2)],
                             map2[std::size_t(v3)][std::size_t(v4)]);
    e1.states[w] = partial_trace(full, {ic.d1, ic.d2}, {0});
    e2.states[w] = partial_trace(full, {ic.d1, ic.d2}, {1});
  }
  e2.prob = e1.prob;

  // Mask bit i selects variable i, so V1 is bit 0 even though it occupies the
  // slowest radix position inside the word index.
  const std::uint32_t mv1 = 1, mv2 = 2, mv3 = 4, mv4 = 8;
  const auto names = std::vector<std::string>{"V1", "V2", "V3", "V4"};
  struct Row {
    std::array<int, 4> coeff;  // over (S1, S2, T1, T2)
    std::uint32_t want, trio;
    int receiver;
  };
  const Row rows[] = {
      {{1, 0, 0, 0}, mv1, mv1 | mv3 | mv4, 1},
      {{0, 0, 1, 0}, mv3, mv1 | mv3 | mv4, 1},
      {{0, 0, 0, 1}, mv4, mv1 | mv3 | mv4, 1},
      {{1, 0, 1, 0}, mv1 | mv3, mv1 | mv3 | mv4, 1},
      {{1, 0, 0, 1}, mv1 | mv4, mv1 | mv3 | mv4, 1},
      {{0, 0, 1, 1}, mv3 | mv4, mv1 | mv3 | mv4, 1},
      {{1, 0, 1, 1}, mv1 | mv3 | mv4, mv1 | mv3 | mv4, 1},
      {{0, 1, 0, 0}, mv2, mv2 | mv3 | mv4, 2},
      {{0, 0, 1, 0}, mv3, mv2 | mv3 | mv4, 2},
      {{0, 0, 0, 1}, mv4, mv2 | mv3 | mv4, 2},
      {{0, 1, 1, 0}, mv2 | mv3, mv2 | mv3 | mv4, 2},
      {{0, 1, 0, 1}, mv2 | mv4, mv2 | mv3 | mv4, 2},
      {{0, 0, 1, 1}, mv3 | mv4, mv2 | mv3 | mv4, 2},
      {{0, 1, 1, 1}, mv2 | mv3 | mv4, mv2 | mv3 | mv4, 2},
  };

  HkRegion out;
  out.region.vars = {"S1", "S2", "T1", "T2"};
  out.mac1.vars = {"S1", "T1", "T2"};
  out.mac2.vars = {"S2", "T1", "T2"};
  const auto rate_names = std::vector<std::string>{"S1", "S2", "T1", "T2"};
  for (const Row& row : rows) {
    const detail::AuxEnsemble& e = row.receiver == 1 ? e1 : e2;
    const std::string bname = row.receiver == 1 ? "B1" : "B2";
    RateIneq q;
    q.coeff.assign(row.coeff.begin(), row.coeff.end());
    std::string lhs;
    for (std::size_t i = 0; i < 4; ++i)
      if (row.coeff[i]) {
        if (!lhs.empty()) lhs += "+";
        lhs += rate_names[i];
      }
    q.bound = detail::checked_bound(
        detail::cond_mutual_info(e, row.want, row.trio & ~row.want), "hk_region");
    q.label = lhs + " <= " + detail::info_label(names, row.want, row.trio & ~row.want, bname);
    RateRegion& view = row.receiver == 1 ? out.mac1 : out.mac2;
    RateIneq sub = q;
    sub.coeff.clear();
    for (std::size_t i = 0; i < 4; ++i)
      if (i != std::size_t(row.receiver == 1 ? 1 : 0)) sub.coeff.push_back(row.coeff[i]);
    view.ineqs.push_back(std::move(sub));
    out.region.ineqs.push_back(std::move(q));
  }
  out.region.generator = "interference channel, dims " + std::to_string(ic.d1) + "x" +
                         std::to_string(ic.d2);
  out.mac1.generator = out.region.generator + ", receiver 1";
  out.mac2.generator = out.region.generator + ", receiver 2";
  detail::check_region(out.region, "hk_region");
  detail::check_region(out.mac1, "hk_region");
  detail::check_region(out.mac2, "hk_region");

  out.vertices = enumerate_vertices(out.region);
  auto pts = std::vector<std::array<double, 2>>();
  for (const auto& v : out.vertices) pts.push_back({v[0] + v[2], v[1] + v[3]});
  out.projection = convex_hull_2d(std::move(pts));
  return out;
}

// ---------------------------------------------------------------------------
// Broadcast inner bounds.

// Independent code books for the two receivers with correlated auxiliaries:
// R1 <= I(U1;B1), R2 <= I(U2;B2), R1+R2 <= I(U1;B1)+I(U2;B2)-I(U1;U2) for the
// joint auxiliary state determined by p(u1,u2) and the deterministic input
// map f(u1,u2).
inline RateRegion marton_region(const BroadcastChannel& bc,
                                const std::vector<std::vector<double>>& joint,
                                const std::vector<std::vector<int>>& f) {
  if (joint.empty() || joint[0].empty()) throw DimMismatch("marton_region: empty joint");
  const std::size_t n1 = joint.size(), n2 = joint[0].size();
  if (f.size() != n1) throw DimMismatch("marton_region: map shape != joint shape");
  double total = 0.0;
  for (std::size_t a = 0; a < n1; ++a) {
    if (joint[a].size() != n2 || f[a].size() != n2)
      throw DimMismatch("marton_region: ragged joint or map");
    for (std::size_t b = 0; b < n2; ++b) {
      if (joint[a][b] < -tol::num)
        throw InvalidDistribution("marton_region: negative probability");
      if (f[a][b] < 0 || f[a][b] >= bc.input_size())
        throw DimMismatch("marton_region: map value outside channel inputs");
      total += joint[a][b];
    }
  }
  if (std::abs(total - 1.0) > tol::num)
    throw InvalidDistribution("marton_region: joint does not sum to one");

  detail::AuxEnsemble e1, e2;
  e1.sizes = {int(n1), int(n2)};
  e2.sizes = e1.sizes;
  for (std::size_t a = 0; a < n1; ++a)
    for (std::size_t b = 0; b < n2; ++b) {
      const Cmat& full = bc.outputs[std::size_t(f[a][b])];
      e1.prob.push_back(joint[a][b]);
      e1.states.push_back(partial_trace(full, {bc.d1, bc.d2}, {0}));
      e2.states.push_back(partial_trace(full, {bc.d1, bc.d2}, {1}));
    }
  e2.prob = e1.prob;

  const double i1 = detail::cond_mutual_info(e1, 1u, 0u);
  const double i2 = detail::cond_mutual_info(e2, 2u, 0u);
  const double iu = detail::classical_cmi(e1, 1u, 2u, 0u);

  RateRegion r;
  r.vars = {"R1", "R2"};
  r.ineqs.push_back({{1, 0}, detail::checked_bound(i1, "marton_region"), "R1 <= I(U1;B1)"});
  r.ineqs.push_back({{0, 1}, detail::checked_bound(i2, "marton_region"), "R2 <= I(U2;B2)"});
  r.ineqs.push_back({{1, 1}, detail::checked_bound(i1 + i2 - iu, "marton_region"),
                     "R1+R2 <= I(U1;B1)+I(U2;B2)-I(U1;U2)"});
  r.generator = "broadcast channel, dims " + std::to_string(bc.d1) + "x" +
                std::to_string(bc.d2) + ", aux " + std::to_string(n1) + "x" +
                std::to_string(n2);
  detail::check_region(r, "marton_region");
  return r;
}

struct MgpRegion {
  RateRegion region;
  // Constructive corner points (R1, R2) of the private-message region, rates
  // clamped at zero. corner_a pays the full alignment penalty on the weaker
  // receiver's side; corner_b moves the binning loss to the other message.
  std::array<double, 2> corner_a{};
  std::array<double, 2> corner_b{};
  // True when the receiver roles were exchanged inside the corner formulas
  // because receiver 2 was the weaker one for the common layer.
  bool swapped = false;
};

// Binned broadcast coding with a common layer V and satellites V1, V2 drawn
// through the factorization p(v) p(v2|v) p(v1|v2,v), input x = phi(v,v1,v2).
// Private regions carry four bounds; with_common adds R0 and the bound
// R0 <= min I(V;B_r).
inline MgpRegion mgp_region(const BroadcastChannel& bc, const std::vector<double>& pv,
                            const std::vector<std::vector<double>>& pv2_given_v,
                            const std::vector<std::vector<std::vector<double>>>& pv1_given_v2v,
                            const std::vector<std::vector<std::vector<int>>>& phi,
                            bool with_common = false,
                            std::uint64_t budget = kDefaultBudgetBytes) {
  auto fail = [](const char* msg) { throw InvalidFactorization(msg); };
  if (pv.empty()) fail("mgp_region: empty common distribution");
  const std::size_t nv = pv.size();
  auto row_ok = [](const std::vector<double>& p) {
    double s = 0.0;
    for (double v : p) {
      if (v < -tol::num) return false;
      s += v;
    }
    return std::abs(s - 1.0) <= tol::num;
  };
  if (!row_ok(pv)) fail("mgp_region: common marginal is not a distribution");
  if (pv2_given_v.size() != nv) fail("mgp_region: p(v2|v) needs one row per v");
  const std::size_t n2 = pv2_given_v[0].size();
  if (n2 == 0) fail("mgp_region: empty satellite alphabet");
  for (const auto& row : pv2_given_v)
    if (row.size() != n2 || !row_ok(row)) fail("mgp_region: p(v2|v) rows must be distributions");
  if (pv1_given_v2v.size() != nv) fail("mgp_region: p(v1|v2,v) needs one block per v");
  const std::size_t n1 = pv1_given_v2v[0].empty() ? 0 : pv1_given_v2v[0][0].size();
  if (n1 == 0) fail("mgp_region: empty satellite alphabet");
  for (const auto& block : pv1_given_v2v) {
    if (block.size() != n2) fail("mgp_region: p(v1|v2,v) needs one row per v2");
    for (const auto& row : block)
      if (row.size() != n1 || !row_ok(row))
        fail("mgp_region: p(v1|v2,v) rows must be distributions");
  }
  if (phi.size() != nv) throw DimMismatch("mgp_region: phi needs one block per v");
  for (const auto& block : phi) {
    if (block.size() != n1) throw DimMismatch("mgp_region: phi needs one row per v1");
    for (const auto& row : block) {
      if (row.size() != n2) throw DimMismatch("mgp_region: phi needs one entry per v2");
      for (int x : row)
        if (x < 0 || x >= bc.input_size())
          throw DimMismatch("mgp_region: phi value outside channel inputs");
    }
  }
  const std::uint64_t joint = std::uint64_t(bc.d1) * std::uint64_t(bc.d2);
  detail::check_budget(
      detail::sat_mul(std::uint64_t(nv * n1 * n2),
                      detail::sat_mul(detail::sat_mul(joint, joint), 16)),
      budget, "mgp_region");

  // Variables ordered (V, V1, V2), so V is mask bit 0, V1 bit 1, V2 bit 2.
  detail::AuxEnsemble e1, e2;
  e1.sizes = {int(nv), int(n1), int(n2)};
  e2.sizes = e1.sizes;
  for (std::size_t v = 0; v < nv; ++v)
    for (std::size_t a = 0; a < n1; ++a)
      for (std::size_t b = 0; b < n2; ++b) {
        const double p = pv[v] * pv2_given_v[v][b] * pv1_given_v2v[v][b][a];
        const Cmat& full = bc.outputs[std::size_t(phi[v][a][b])];
        e1.prob.push_back(p);
        e1.states.push_back(partial_trace(full, {bc.d1, bc.d2}, {0}));
        e2.states.push_back(partial_trace(full, {bc.d1, bc.d2}, {1}));
      }
  e2.prob = e1.prob;

  const std::uint32_t mv = 1, m1 = 2, m2 = 4;
  const double ivb1 = detail::cond_mutual_info(e1, mv, 0u);
  const double ivb2 = detail::cond_mutual_info(e2, mv, 0u);
  const double iv1b1cv = detail::cond_mutual_info(e1, m1, mv);
  const double iv2b2cv = detail::cond_mutual_info(e2, m2, mv);
  const double ivv1b1 = detail::cond_mutual_info(e1, mv | m1, 0u);
  const double ivv2b2 = detail::cond_mutual_info(e2, mv | m2, 0u);
  const double icc = detail::classical_cmi(e1, m1, m2, mv);
  if (std::abs(ivv1b1 - ivb1 - iv1b1cv) > tol::chain ||
      std::abs(ivv2b2 - ivb2 - iv2b2cv) > tol::chain)
    throw InvariantViolation("mgp_region: chain rule broken across the common layer");

  MgpRegion out;
  RateRegion& r = out.region;
  const double sum3 = detail::checked_bound(ivv1b1 + iv2b2cv - icc, "mgp_region");
  const double sum4 = detail::checked_bound(ivv2b2 + iv1b1cv - icc, "mgp_region");
  if (with_common) {
    r.vars = {"R0", "R1", "R2"};
    r.ineqs.push_back({{1, 0, 0}, detail::checked_bound(std::min(ivb1, ivb2), "mgp_region"),
                       "R0 <= min{I(V;B1),I(V;B2)}"});
    r.ineqs.push_back({{1, 1, 0}, detail::checked_bound(ivv1b1, "mgp_region"),
                       "R0+R1 <= I(V,V1;B1)"});
    r.ineqs.push_back({{1, 0, 1}, detail::checked_bound(ivv2b2, "mgp_region"),
                       "R0+R2 <= I(V,V2;B2)"});
    r.ineqs.push_back({{1, 1, 1}, sum3, "R0+R1+R2 <= I(V,V1;B1)+I(V2;B2|V)-I(V1;V2|V)"});
    r.ineqs.push_back({{1, 1, 1}, sum4, "R0+R1+R2 <= I(V,V2;B2)+I(V1;B1|V)-I(V1;V2|V)"});
  } else {
    r.vars = {"R1", "R2"};
    r.ineqs.push_back({{1, 0}, detail::checked_bound(ivv1b1, "mgp_region"),
                       "R1 <= I(V,V1;B1)"});
    r.ineqs.push_back({{0, 1}, detail::checked_bound(ivv2b2, "mgp_region"),
                       "R2 <= I(V,V2;B2)"});
    r.ineqs.push_back({{1, 1}, sum3, "R1+R2 <= I(V,V1;B1)+I(V2;B2|V)-I(V1;V2|V)"});
    r.ineqs.push_back({{1, 1}, sum4, "R1+R2 <= I(V,V2;B2)+I(V1;B1|V)-I(V1;V2|V)"});
  }
  r.generator = "broadcast channel, dims " + std::to_string(bc.d1) + "x" +
                std::to_string(bc.d2) + ", binned aux " + std::to_string(nv) + "," +
                std::to_string(n1) + "," + std::to_string(n2);
  detail::check_region(r, "mgp_region");

  // The common layer is decoded by both receivers, so the corner formulas
  // charge the alignment penalty against the receiver that resolves V less
  // well; exchange roles when that receiver is the second one.
  out.swapped = ivb1 > ivb2 + tol::chain;
  double a1, a2, b1, b2;
  if (!out.swapped) {
    a1 = ivv1b1 - icc - ivb2;
    a2 = ivv2b2;
    b1 = ivv1b1;
    b2 = iv2b2cv - icc;
  } else {
    a1 = ivv1b1;
    a2 = ivv2b2 - icc - ivb1;
    b1 = iv1b1cv - icc;
    b2 = ivv2b2;
  }
  out.corner_a = {std::max(a1, 0.0), std::max(a2, 0.0)};
  out.corner_b = {std::max(b1, 0.0), std::max(b2, 0.0)};
  for (const auto& c : {out.corner_a, out.corner_b}) {
    auto pt = std::vector<double>();
    if (with_common) pt.push_back(0.0);
    pt.push_back(c[0]);
    pt.push_back(c[1]);
    if (!point_in_region(r, pt).inside)
      throw InvariantViolation("mgp_region: corner point escaped the region");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Export.

inline std::string region_json(const RateRegion& r) {
  detail::check_region(r, "region_json");
  nlohmann::ordered_json j;
  j["variables"] = r.vars;
  j["generator"] = r.generator;
  auto arr = nlohmann::ordered_json::array();
  for (const RateIneq& q : r.ineqs) {
    nlohmann::ordered_json item;
    item["coeffs"] = q.coeff;
    item["bound"] = q.bound;
    item["label"] = q.label;
    arr.push_back(std::move(item));
  }
  j["inequalities"] = std::move(arr);
  return j.dump(2);
}

// One row per inequality: integer coefficients in variable order, the bound
// with full precision, then the label.
inline std::string region_csv(const RateRegion& r) {
  detail::check_region(r, "region_csv");
  std::string out = "#";
  for (std::size_t i = 0; i < r.vars.size(); ++i)
    out += (i ? "," : " ") + ("coeff_" + r.vars[i]);
  out += ",bound,label\n";
  for (const RateIneq& q : r.ineqs) {
    for (std::size_t i = 0; i < q.coeff.size(); ++i)
      out += (i ? "," : "") + std::to_string(q.coeff[i]);
    out += "," + detail::fmt17(q.bound) + "," + q.label + "\n";
  }
  return out;
}

inline std::string vertices_csv(const RateRegion& r,
                                const std::vector<std::vector<double>>& verts) {
  detail::check_region(r, "vertices_csv");
  std::string out = "#";
  for (std::size_t i = 0; i < r.vars.size(); ++i) out += (i ? "," : " ") + r.vars[i];
  out += "\n";
  for (const auto& v : verts) {
    if (v.size() != r.vars.size())
      throw DimMismatch("vertices_csv: vertex dimension != variable count");
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + detail::fmt17(v[i]);
    out += "\n";
  }
  return out;
}

inline std::string polyline_csv(const std::vector<std::array<double, 2>>& pts,
                                const std::string& xname, const std::string& yname) {
  std::string out = "# " + xname + "," + yname + "\n";
  for (const auto& p : pts) out += detail::fmt17(p[0]) + "," + detail::fmt17(p[1]) + "\n";
  return out;
}

}  // namespace polarlab
