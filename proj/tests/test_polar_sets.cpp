#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "polarlab/polar_core.hpp"

using namespace polarlab;

namespace {

// --- test-local transform oracle (explicit generator matrix) -----------------

int rev_bits(int r, int n) {
  int out = 0;
  for (int b = 0; b < n; ++b)
    if (r & (1 << b)) out |= 1 << (n - 1 - b);
  return out;
}

// Word-level transform through the explicit matrix G = B F^{(x)n}; words pack
// symbol t+1 into bit t.
std::size_t transform_word(std::size_t w, int n) {
  int len = 1 << n;
  std::size_t x = 0;
  for (int j = 0; j < len; ++j) {
    int bit = 0;
    for (int r = 0; r < len; ++r)
      if ((w >> r) & 1u) bit ^= ((j & ~rev_bits(r, n)) == 0) ? 1 : 0;
    x |= std::size_t(bit) << j;
  }
  return x;
}

// Z(U_i | U^{i-1}) from a full table over input words, by explicit
// branch/target/free grouping.
std::vector<double> z_fold(const std::vector<double>& pu, int n) {
  std::vector<double> z(std::size_t(n), 0.0);
  for (int i = 1; i <= n; ++i) {
    for (std::size_t b = 0; b < (std::size_t(1) << (i - 1)); ++b) {
      double m[2] = {0.0, 0.0};
      for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t f = 0; f < (std::size_t(1) << (n - i)); ++f)
          m[t] += pu[b | (t << (i - 1)) | (f << i)];
      z[std::size_t(i - 1)] += 2.0 * std::sqrt(m[0] * m[1]);
    }
  }
  return z;
}

// Same grouping with one unnormalized state per input word.
std::vector<double> z_fold_states(const std::vector<Cmat>& su, int n) {
  std::vector<double> z(std::size_t(n), 0.0);
  for (int i = 1; i <= n; ++i) {
    for (std::size_t b = 0; b < (std::size_t(1) << (i - 1)); ++b) {
      Cmat m0 = Cmat::Zero(su[0].rows(), su[0].cols());
      Cmat m1 = m0;
      for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t f = 0; f < (std::size_t(1) << (n - i)); ++f) {
          std::size_t w = b | (t << (i - 1)) | (f << i);
          (t ? m1 : m0) += su[w];
        }
      z[std::size_t(i - 1)] += 2.0 * sqrt_fidelity_raw(m0, m1);
    }
  }
  return z;
}

bool contains(const std::vector<int>& s, int i) {
  return std::find(s.begin(), s.end(), i) != s.end();
}

constexpr double kNum = tol::num;

}  // namespace

TEST_CASE("shaping_sets endpoint sources") {
  ShapingSets unif = shaping_sets(0.5, 4, 0.1);
  ShapingSets det = shaping_sets(0.0, 4, 0.1);
  for (int i = 0; i < 4; ++i) {
    REQUIRE(std::abs(unif.z_source[std::size_t(i)] - 1.0) < kNum);
    REQUIRE(det.z_source[std::size_t(i)] < kNum);
  }
  REQUIRE(unif.f_set == std::vector<int>{1, 2, 3, 4});
  REQUIRE(unif.f_complement.empty());
  REQUIRE(det.f_set.empty());
  REQUIRE(det.f_complement == std::vector<int>{1, 2, 3, 4});
}

TEST_CASE("shaping_sets matches the matrix-transform oracle") {
  double q1 = 0.11;
  int n = 3, len = 8;
  std::vector<double> pu(std::size_t(1) << len);
  for (std::size_t u = 0; u < pu.size(); ++u) {
    std::size_t x = transform_word(u, n);
    double p = 1.0;
    for (int t = 0; t < len; ++t) p *= ((x >> t) & 1u) ? q1 : 1.0 - q1;
    pu[u] = p;
  }
  std::vector<double> want = z_fold(pu, len);
  ShapingSets got = shaping_sets(q1, std::size_t(len), 0.2);
  for (int i = 0; i < len; ++i) {
    REQUIRE(std::abs(got.z_source[std::size_t(i)] - want[std::size_t(i)]) < 1e-10);
    REQUIRE(got.z_source[std::size_t(i)] >= -kNum);
    REQUIRE(got.z_source[std::size_t(i)] <= 1.0 + kNum);
  }
  // The two threshold sets never overlap for thresholds below one half.
  for (int i : got.f_set) REQUIRE(!contains(got.f_complement, i));
}

TEST_CASE("shaping_sets rejects bad block lengths") {
  REQUIRE_THROWS_AS(shaping_sets(0.3, 3, 0.1), BadLength);
  REQUIRE_THROWS_AS(shaping_sets(0.3, 1 << 17, 0.1), BudgetExceeded);
}

TEST_CASE("shaping_info_set side-information values match a direct oracle") {
  double q1 = 0.3, flip = 0.25;
  int n = 2, len = 4;
  ClassicalDMC w = bsc(flip);

  // Joint P(u, y) = P_U(u) prod_t W(y_t | x_t(u)); side sets grouped per index.
  std::vector<double> want(std::size_t(len), 0.0);
  for (int i = 1; i <= len; ++i) {
    for (std::size_t b = 0; b < (std::size_t(1) << (i - 1)); ++b) {
      std::vector<double> s[2]{std::vector<double>(16, 0.0), std::vector<double>(16, 0.0)};
      for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t f = 0; f < (std::size_t(1) << (len - i)); ++f) {
          std::size_t u = b | (t << (i - 1)) | (f << i);
          std::size_t x = transform_word(u, n);
          double p = 1.0;
          for (int tt = 0; tt < len; ++tt) p *= ((x >> tt) & 1u) ? q1 : 1.0 - q1;
          for (std::size_t y = 0; y < 16; ++y) {
            double py = p;
            for (int tt = 0; tt < len; ++tt)
              py *= w.transition[(x >> tt) & 1u][(y >> tt) & 1u];
            s[t][y] += py;
          }
        }
      for (std::size_t y = 0; y < 16; ++y)
        want[std::size_t(i - 1)] += 2.0 * std::sqrt(s[0][y] * s[1][y]);
    }
  }

  ShapingInfoSet got = shaping_info_set(embed_diagonal(w), q1, std::size_t(len), 0.2);
  for (int i = 0; i < len; ++i) {
    REQUIRE(std::abs(got.z_side_info[std::size_t(i)] - want[std::size_t(i)]) < 1e-9);
    REQUIRE(got.z_side_info[std::size_t(i)] <= got.source.z_source[std::size_t(i)] + kNum);
  }
  // info_set + leftover frozen indices partition the high set.
  std::vector<int> merged = got.info_set;
  merged.insert(merged.end(), got.f_minus_info.begin(), got.f_minus_info.end());
  std::sort(merged.begin(), merged.end());
  REQUIRE(merged == got.source.f_set);
}

TEST_CASE("uniform shaping reduces to plain code construction") {
  CqChannel w = embed_diagonal(bsc(0.1));
  ShapingInfoSet s = shaping_info_set(w, 0.5, 8, 0.5);
  REQUIRE(s.source.f_set == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8});

  PolarCode code = construct(w, 8, 4);
  for (int i = 0; i < 8; ++i)
    REQUIRE(std::abs(s.z_side_info[std::size_t(i)] -
                     code.record.sqrt_fidelity[std::size_t(i)]) < 1e-12);

  // Threshold between the 4th and 5th order statistic recovers the same set.
  std::vector<double> srt = s.z_side_info;
  std::sort(srt.begin(), srt.end());
  double t = 0.5 * (srt[3] + srt[4]);
  ShapingInfoSet mid = shaping_info_set(w, 0.5, 8, t);
  REQUIRE(mid.info_set == code.info_set);
}

TEST_CASE("broadcast families match a full configuration-space oracle") {
  // Joint-output broadcast channel: one entangled output, one product output.
  Cmat bell = Cmat::Zero(4, 4);
  bell(0, 0) = bell(0, 3) = bell(3, 0) = bell(3, 3) = 0.5;
  Cmat rho0 = 0.7 * bell + 0.3 * 0.25 * Cmat::Identity(4, 4);
  Cmat q1m(2, 2), q2m(2, 2);
  q1m << 0.8, 0.15, 0.15, 0.2;
  q2m << complexd(0.35, 0.0), complexd(0.0, 0.2), complexd(0.0, -0.2), complexd(0.65, 0.0);
  Cmat rho1 = kron(q1m, q2m);
  BroadcastChannel bc(2, 2, {rho0, rho1});

  BroadcastPrior prior;
  prior.v_one = 0.4;
  prior.v2_one_given_v = {0.3, 0.6};
  prior.v1_one_given_v_v2 = {{{0.2, 0.7}, {0.5, 0.9}}};

  std::array<int, 8> phi{};
  for (int idx = 0; idx < 8; ++idx) phi[std::size_t(idx)] = ((idx >> 2) ^ (idx >> 1) ^ idx) & 1;

  const int n = 2, len = 4;
  const std::size_t nw = 16;
  const double delta = 0.5;
  PolarizationSets sets = broadcast_sets(bc, prior, phi, std::size_t(len), delta);
  REQUIRE(sets.block_len == 4);
  REQUIRE(sets.z_families.size() == 8);
  REQUIRE(sets.index_sets.size() == 21);

  // Oracle: enumerate every (v, v1, v2) word triple, accumulate joint weights
  // and reduced receiver states, then group by transformed words.
  Cmat b1[2], b2[2];
  for (int x = 0; x < 2; ++x) {
    const Cmat& r = x ? rho1 : rho0;
    b1[x] = partial_trace(r, {2, 2}, {0});
    b2[x] = partial_trace(r, {2, 2}, {1});
  }
  auto pv = [&](int v) { return v ? prior.v_one : 1.0 - prior.v_one; };
  auto pv2 = [&](int v, int v2) {
    return v2 ? prior.v2_one_given_v[std::size_t(v)] : 1.0 - prior.v2_one_given_v[std::size_t(v)];
  };
  auto pv1 = [&](int v, int v2, int v1) {
    return v1 ? prior.v1_one_given_v_v2[std::size_t(v)][std::size_t(v2)]
              : 1.0 - prior.v1_one_given_v_v2[std::size_t(v)][std::size_t(v2)];
  };

  std::vector<double> pu_v(nw, 0.0);
  std::vector<std::vector<double>> p_v_u1(nw, std::vector<double>(nw, 0.0));
  std::vector<std::vector<double>> p_v_u2(nw, std::vector<double>(nw, 0.0));
  std::vector<double> p_vv2_u1(std::size_t(nw) * nw * nw, 0.0);
  Cmat z16 = Cmat::Zero(16, 16);
  std::vector<Cmat> s1v(nw, z16), s2v(nw, z16);
  std::vector<std::vector<Cmat>> s1_vu1(nw, std::vector<Cmat>(nw, z16));
  std::vector<std::vector<Cmat>> s2_vu2(nw, std::vector<Cmat>(nw, z16));

  for (std::size_t vw = 0; vw < nw; ++vw)
    for (std::size_t v1w = 0; v1w < nw; ++v1w)
      for (std::size_t v2w = 0; v2w < nw; ++v2w) {
        double p = 1.0;
        Cmat j1 = Cmat::Identity(1, 1), j2 = j1;
        for (int t = 0; t < len; ++t) {
          int v = int((vw >> t) & 1u), v1 = int((v1w >> t) & 1u), v2 = int((v2w >> t) & 1u);
          p *= pv(v) * pv2(v, v2) * pv1(v, v2, v1);
          int x = v ^ v1 ^ v2;
          j1 = kron(j1, b1[x]);
          j2 = kron(j2, b2[x]);
        }
        std::size_t uv = transform_word(vw, n);
        std::size_t u1 = transform_word(v1w, n);
        std::size_t u2 = transform_word(v2w, n);
        pu_v[uv] += p;
        p_v_u1[vw][u1] += p;
        p_v_u2[vw][u2] += p;
        p_vv2_u1[(vw * nw + v2w) * nw + u1] += p;
        s1v[uv] += p * j1;
        s2v[uv] += p * j2;
        s1_vu1[vw][u1] += p * j1;
        s2_vu2[vw][u2] += p * j2;
      }

  auto accum = [&](std::vector<double>& into, const std::vector<double>& part) {
    for (int i = 0; i < len; ++i) into[std::size_t(i)] += part[std::size_t(i)];
  };
  std::vector<double> want_v = z_fold(pu_v, len);
  std::vector<double> want_vb1 = z_fold_states(s1v, len);
  std::vector<double> want_vb2 = z_fold_states(s2v, len);
  std::vector<double> want_v1v(std::size_t(len), 0.0), want_v2v(std::size_t(len), 0.0);
  std::vector<double> want_v1vb1(std::size_t(len), 0.0), want_v2vb2(std::size_t(len), 0.0);
  std::vector<double> want_v1vv2(std::size_t(len), 0.0);
  for (std::size_t vw = 0; vw < nw; ++vw) {
    accum(want_v1v, z_fold(p_v_u1[vw], len));
    accum(want_v2v, z_fold(p_v_u2[vw], len));
    accum(want_v1vb1, z_fold_states(s1_vu1[vw], len));
    accum(want_v2vb2, z_fold_states(s2_vu2[vw], len));
    for (std::size_t v2w = 0; v2w < nw; ++v2w) {
      std::vector<double> slice(p_vv2_u1.begin() + long((vw * nw + v2w) * nw),
                                p_vv2_u1.begin() + long((vw * nw + v2w + 1) * nw));
      accum(want_v1vv2, z_fold(slice, len));
    }
  }

  std::vector<std::pair<std::string, std::vector<double>>> expect{
      {"Z_V", want_v},           {"Z_V|B1", want_vb1},       {"Z_V|B2", want_vb2},
      {"Z_V1|V", want_v1v},      {"Z_V2|V", want_v2v},       {"Z_V1|V,B1", want_v1vb1},
      {"Z_V2|V,B2", want_v2vb2}, {"Z_V1|V,V2", want_v1vv2}};
  for (const auto& [name, want] : expect) {
    const std::vector<double>& got = sets.z(name);
    for (int i = 0; i < len; ++i) {
      INFO(name << " index " << i + 1);
      REQUIRE(std::abs(got[std::size_t(i)] - want[std::size_t(i)]) < 1e-8);
      REQUIRE(got[std::size_t(i)] >= -kNum);
      REQUIRE(got[std::size_t(i)] <= 1.0 + kNum);
    }
  }

  // Extra conditioning never raises a Bhattacharyya value.
  for (int i = 0; i < len; ++i) {
    std::size_t ii = std::size_t(i);
    REQUIRE(sets.z("Z_V|B1")[ii] <= sets.z("Z_V")[ii] + kNum);
    REQUIRE(sets.z("Z_V|B2")[ii] <= sets.z("Z_V")[ii] + kNum);
    REQUIRE(sets.z("Z_V1|V,B1")[ii] <= sets.z("Z_V1|V")[ii] + kNum);
    REQUIRE(sets.z("Z_V2|V,B2")[ii] <= sets.z("Z_V2|V")[ii] + kNum);
    REQUIRE(sets.z("Z_V1|V,V2")[ii] <= sets.z("Z_V1|V")[ii] + kNum);
  }

  // High/low sets partition the index range per family, thresholded at delta.
  for (const auto& fam : sets.z_families) {
    std::string suffix = fam.first.substr(2);
    const auto& high = sets.set("H_" + suffix);
    const auto& low = sets.set("L_" + suffix);
    REQUIRE(high.size() + low.size() == std::size_t(len));
    for (int i = 1; i <= len; ++i) {
      bool h = fam.second[std::size_t(i - 1)] >= delta;
      REQUIRE(contains(high, i) == h);
      REQUIRE(contains(low, i) == !h);
    }
  }

  // Derived message sets follow their defining intersections.
  for (int i = 1; i <= len; ++i) {
    std::size_t ii = std::size_t(i - 1);
    bool hv = sets.z("Z_V")[ii] >= delta;
    REQUIRE(contains(sets.set("I_sup2"), i) == (hv && sets.z("Z_V|B2")[ii] < delta));
    REQUIRE(contains(sets.set("I_v1"), i) == (hv && sets.z("Z_V|B1")[ii] < delta));
    REQUIRE(contains(sets.set("I_bin2"), i) ==
            (sets.z("Z_V2|V")[ii] >= delta && sets.z("Z_V2|V,B2")[ii] < delta));
    REQUIRE(contains(sets.set("I_1"), i) ==
            (sets.z("Z_V1|V")[ii] >= delta && sets.z("Z_V1|V,B1")[ii] < delta));
    REQUIRE(contains(sets.set("F_1"), i) ==
            (sets.z("Z_V1|V,V2")[ii] < delta && sets.z("Z_V1|V")[ii] >= delta &&
             sets.z("Z_V1|V,B1")[ii] >= delta));
  }

  REQUIRE_THROWS_AS(sets.z("Z_nope"), Error);
  REQUIRE_THROWS_AS(sets.set("H_nope"), Error);
}

TEST_CASE("broadcast with a revealing first receiver empties the hidden sets") {
  // Each output writes the channel input into both receiver registers.
  Cmat o0 = Cmat::Zero(4, 4), o1 = Cmat::Zero(4, 4);
  o0(0, 0) = 1.0;
  o1(3, 3) = 1.0;
  BroadcastChannel bc(2, 2, {o0, o1});
  BroadcastPrior prior;
  prior.v_one = 0.4;
  prior.v2_one_given_v = {0.3, 0.6};
  prior.v1_one_given_v_v2 = {{{0.2, 0.7}, {0.5, 0.9}}};

  // phi selects the first auxiliary, so receiver 1 sees V1 exactly.
  std::array<int, 8> phi{};
  for (int idx = 0; idx < 8; ++idx) phi[std::size_t(idx)] = (idx >> 1) & 1;
  PolarizationSets sets = broadcast_sets(bc, prior, phi, 4, 0.5);
  for (double z : sets.z("Z_V1|V,B1")) REQUIRE(z < 1e-10);
  REQUIRE(sets.set("H_V1|V,B1").empty());
  REQUIRE(sets.set("F_1").empty());
  REQUIRE(sets.set("I_1") == sets.set("H_V1|V"));
}

TEST_CASE("broadcast with a deterministic top layer empties its message sets") {
  Cmat bell = Cmat::Zero(4, 4);
  bell(0, 0) = bell(0, 3) = bell(3, 0) = bell(3, 3) = 0.5;
  Cmat rho0 = 0.7 * bell + 0.3 * 0.25 * Cmat::Identity(4, 4);
  Cmat rho1 = Cmat::Zero(4, 4);
  rho1(1, 1) = 0.6;
  rho1(2, 2) = 0.4;
  BroadcastChannel bc(2, 2, {rho0, rho1});
  BroadcastPrior prior;
  prior.v_one = 1.0;
  prior.v2_one_given_v = {0.3, 0.6};
  prior.v1_one_given_v_v2 = {{{0.2, 0.7}, {0.5, 0.9}}};
  std::array<int, 8> phi{};
  for (int idx = 0; idx < 8; ++idx) phi[std::size_t(idx)] = ((idx >> 2) ^ (idx >> 1) ^ idx) & 1;

  PolarizationSets sets = broadcast_sets(bc, prior, phi, 4, 0.5);
  for (double z : sets.z("Z_V")) REQUIRE(z < 1e-10);
  REQUIRE(sets.set("H_V").empty());
  REQUIRE(sets.set("I_sup2").empty());
  REQUIRE(sets.set("I_v1").empty());
}

TEST_CASE("broadcast argument validation") {
  Cmat o0 = Cmat::Zero(4, 4), o1 = Cmat::Zero(4, 4);
  o0(0, 0) = 1.0;
  o1(3, 3) = 1.0;
  BroadcastChannel bc(2, 2, {o0, o1});
  BroadcastPrior prior;
  std::array<int, 8> bad{};
  bad[3] = 7;
  REQUIRE_THROWS_AS(broadcast_sets(bc, prior, bad, 4, 0.5), ConfigError);
  std::array<int, 8> phi{};
  REQUIRE_THROWS_AS(broadcast_sets(bc, prior, phi, 16, 0.5), BudgetExceeded);
  REQUIRE_THROWS_AS(broadcast_sets(bc, prior, phi, 3, 0.5), BadLength);
}
