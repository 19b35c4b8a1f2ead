#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "polarlab/polar_core.hpp"

using namespace polarlab;

namespace {

std::mt19937_64 rng(20240819);

Cmat random_density(int d) {
  std::normal_distribution<double> g;
  Cmat m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = complexd(g(rng), g(rng));
  Cmat p = m * m.adjoint();
  return p / p.trace().real();
}

// --- independent oracles -----------------------------------------------------

// n-bit reversal for the matrix oracle.
int rev_bits(int r, int n) {
  int out = 0;
  for (int b = 0; b < n; ++b)
    if (r & (1 << b)) out |= 1 << (n - 1 - b);
  return out;
}

// G = B F^{(x)n} from first principles: F^{(x)n}[a][b] = 1 iff the support of
// b is contained in the support of a (binary, high bit = first tensor slot).
std::vector<std::vector<int>> transform_matrix(int n) {
  int len = 1 << n;
  std::vector<std::vector<int>> g(len, std::vector<int>(len));
  for (int r = 0; r < len; ++r)
    for (int j = 0; j < len; ++j) g[r][j] = ((j & ~rev_bits(r, n)) == 0) ? 1 : 0;
  return g;
}

// Symbol-indexed matrix encode: x_j = sum_i u_i G[i][j] over GF(2).
std::vector<int> encode_by_matrix(const std::vector<int>& u) {
  int n = 0;
  while ((1 << n) < int(u.size())) ++n;
  auto g = transform_matrix(n);
  std::vector<int> x(u.size(), 0);
  for (std::size_t j = 0; j < u.size(); ++j)
    for (std::size_t i = 0; i < u.size(); ++i) x[j] ^= u[i] & g[i][j];
  return x;
}

// W_N(y^N | u^N) by the defining combining recursion:
// W_2k(y|u) = W_k(y_first | u_odd + u_even) W_k(y_second | u_even).
std::vector<double> oracle_output_dist(const std::vector<std::vector<double>>& rows,
                                       const std::vector<int>& u) {
  if (u.size() == 1) return rows[std::size_t(u[0])];
  std::vector<int> a(u.size() / 2), b(u.size() / 2);
  for (std::size_t j = 0; j < a.size(); ++j) {
    a[j] = u[2 * j] ^ u[2 * j + 1];
    b[j] = u[2 * j + 1];
  }
  auto va = oracle_output_dist(rows, a);
  auto vb = oracle_output_dist(rows, b);
  std::vector<double> out(va.size() * vb.size());
  for (std::size_t i = 0; i < va.size(); ++i)
    for (std::size_t j = 0; j < vb.size(); ++j) out[i * vb.size() + j] = va[i] * vb[j];
  return out;
}

struct OracleSplit {
  std::vector<double> mi, z;
};

// Exact split parameters for a classical channel, straight from the joint
// distribution P(u, y) = 2^{-N} W_N(y|u). Mutual information is evaluated as
// a direct relative-entropy sum, not as an entropy difference.
OracleSplit classical_split_oracle(const std::vector<std::vector<double>>& rows, int block_len) {
  int dy = int(rows[0].size());
  std::size_t dimy = 1;
  for (int t = 0; t < block_len; ++t) dimy *= std::size_t(dy);

  std::vector<std::vector<double>> wy(std::size_t(1) << block_len);
  for (std::size_t uw = 0; uw < wy.size(); ++uw) {
    std::vector<int> u(static_cast<std::size_t>(block_len));
    for (int t = 0; t < block_len; ++t) u[std::size_t(t)] = int((uw >> t) & 1u);
    wy[uw] = oracle_output_dist(rows, u);
  }

  OracleSplit out;
  double unif = 1.0 / double(std::size_t(1) << block_len);
  for (int i = 1; i <= block_len; ++i) {
    std::size_t nbranch = std::size_t(1) << (i - 1);
    std::size_t nfree = std::size_t(1) << (block_len - i);
    double mi = 0.0, z = 0.0;
    for (std::size_t b = 0; b < nbranch; ++b) {
      std::vector<double> s[2]{std::vector<double>(dimy, 0.0), std::vector<double>(dimy, 0.0)};
      for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t f = 0; f < nfree; ++f) {
          std::size_t uw = b | (t << (i - 1)) | (f << i);
          for (std::size_t y = 0; y < dimy; ++y) s[t][y] += unif * wy[uw][y];
        }
      for (std::size_t y = 0; y < dimy; ++y) {
        z += 2.0 * std::sqrt(s[0][y] * s[1][y]);
        double pby = s[0][y] + s[1][y];
        for (std::size_t t = 0; t < 2; ++t)
          if (s[t][y] > 0.0) mi += s[t][y] * std::log2(s[t][y] / (0.5 * pby));
      }
    }
    out.mi.push_back(mi);
    out.z.push_back(z);
  }
  return out;
}

// BEC erasure-probability recursion, written directly from the two formulas.
std::vector<double> bec_oracle(double eps, int block_len) {
  std::vector<double> level{eps};
  while (int(level.size()) < block_len) {
    std::vector<double> next;
    for (double e : level) {
      next.push_back(2.0 * e - e * e);
      next.push_back(e * e);
    }
    level = next;
  }
  return level;
}

constexpr double kNum = tol::num;

}  // namespace

TEST_CASE("encode matches the pinned examples") {
  REQUIRE(encode({0, 0}) == Bits{0, 0});
  REQUIRE(encode({1, 0}) == Bits{1, 0});
  REQUIRE(encode({0, 1}) == Bits{1, 1});  // (u1+u2, u2)
  REQUIRE(encode({0, 0, 0, 0, 0, 0, 0, 0}) == Bits(8, 0));
}

TEST_CASE("encode agrees with the explicit matrix oracle at N=4") {
  for (int uw = 0; uw < 16; ++uw) {
    std::vector<int> u(4);
    Bits ub(4);
    for (int t = 0; t < 4; ++t) u[std::size_t(t)] = ub[std::size_t(t)] = std::uint8_t((uw >> t) & 1);
    auto want = encode_by_matrix(u);
    Bits got = encode(ub);
    for (int t = 0; t < 4; ++t) REQUIRE(int(got[std::size_t(t)]) == want[std::size_t(t)]);
    REQUIRE(encode_word(std::size_t(uw), 2) == bits_to_word(got));
  }
}

TEST_CASE("encode is self-inverse up to N = 65536") {
  std::bernoulli_distribution coin(0.5);
  for (unsigned n : {1u, 3u, 6u, 10u, 16u}) {
    Bits u(std::size_t(1) << n);
    for (auto& b : u) b = coin(rng);
    REQUIRE(encode(encode(u)) == u);
  }
}

TEST_CASE("encode rejects bad lengths") {
  REQUIRE_THROWS_AS(encode(Bits{1, 0, 1}), BadLength);
  REQUIRE_THROWS_AS(encode(Bits{}), BadLength);
}

TEST_CASE("coset_encode pinned examples") {
  PolarCode all;
  all.block_len = 4;
  all.info_set = {1, 2, 3, 4};
  Bits w{1, 0, 1, 1};
  REQUIRE(coset_encode(all, w) == encode(w));

  PolarCode none;
  none.block_len = 4;
  none.frozen_values = {1, 0, 1, 1};
  REQUIRE(coset_encode(none, {}) == encode({1, 0, 1, 1}));

  PolarCode mid;
  mid.block_len = 4;
  mid.info_set = {2, 4};
  mid.frozen_values = {0, 0};
  Bits got = coset_encode(mid, {1, 1});
  // Direct coset formula: x = row_2(G) + row_4(G) over GF(2).
  auto g = transform_matrix(2);
  for (int j = 0; j < 4; ++j) REQUIRE(int(got[std::size_t(j)]) == (g[1][j] ^ g[3][j]));

  REQUIRE_THROWS_AS(coset_encode(mid, {1, 0, 1}), LengthMismatch);
}

TEST_CASE("split_channel N=1 returns the channel itself") {
  CqChannel w = pure_state_cq(0.5);
  SplitChannel sc = split_channel(w, 1, 1);
  REQUIRE(sc.weights.size() == 1);
  REQUIRE(std::abs(sc.weights[0] - 1.0) < kNum);
  for (int t = 0; t < 2; ++t)
    REQUIRE((sc.states[0][std::size_t(t)] - w.outputs[std::size_t(t)]).cwiseAbs().maxCoeff() < kNum);
}

TEST_CASE("split_channel N=2 branch states match the combining rule") {
  CqChannel w(std::vector<Cmat>{random_density(2), random_density(2)});
  SplitChannel sc = split_channel(w, 2, 2);
  REQUIRE(sc.weights.size() == 2);
  for (std::size_t u1 = 0; u1 < 2; ++u1) {
    REQUIRE(std::abs(sc.weights[u1] - 0.5) < kNum);
    for (std::size_t u2 = 0; u2 < 2; ++u2) {
      Cmat want = kron(w.outputs[u1 ^ u2], w.outputs[u2]);
      REQUIRE((sc.states[u1][u2] - want).cwiseAbs().maxCoeff() < kNum);
    }
  }
}

TEST_CASE("split_channel enforces budget and length constraints") {
  CqChannel w = pure_state_cq(0.5);
  REQUIRE_THROWS_AS(split_channel(w, 3, 1), BadLength);
  REQUIRE_THROWS_AS(split_channel(w, 2, 3), BadLength);
  SplitOptions tiny;
  tiny.budget = 64;
  REQUIRE_THROWS_AS(split_channel(w, 8, 4, tiny), BudgetExceeded);
}

TEST_CASE("split_params trivial channels polarize to the endpoints") {
  // Perfect channel: orthogonal pure outputs.
  Cmat d0 = Cmat::Zero(2, 2), d1 = Cmat::Zero(2, 2);
  d0(0, 0) = 1.0;
  d1(1, 1) = 1.0;
  SplitParams perfect = split_params(CqChannel({d0, d1}), 4);
  // Useless channel: identical outputs.
  SplitParams useless = split_params(CqChannel({d0, d0}), 4);
  for (int i = 0; i < 4; ++i) {
    REQUIRE(std::abs(perfect.mutual_info[std::size_t(i)] - 1.0) < kNum);
    REQUIRE(perfect.sqrt_fidelity[std::size_t(i)] < kNum);
    REQUIRE(useless.mutual_info[std::size_t(i)] < kNum);
    REQUIRE(std::abs(useless.sqrt_fidelity[std::size_t(i)] - 1.0) < kNum);
  }
}

TEST_CASE("BEC split at N=2 matches the erasure formulas") {
  double eps = 0.3;
  CqChannel w = embed_diagonal(bec(eps));
  SplitParams p = split_params(w, 2);
  REQUIRE(std::abs(p.mutual_info[0] - (1.0 - eps) * (1.0 - eps)) < kNum);
  REQUIRE(std::abs(p.mutual_info[1] - (1.0 - eps * eps)) < kNum);
  REQUIRE(std::abs(p.sqrt_fidelity[0] - (2.0 * eps - eps * eps)) < kNum);
  REQUIRE(std::abs(p.sqrt_fidelity[1] - eps * eps) < kNum);
}

TEST_CASE("classical split parameters match the recursion-defined oracle") {
  for (const ClassicalDMC& w : {bsc(0.1), bec(0.3)}) {
    OracleSplit want = classical_split_oracle(w.transition, 4);
    CqChannel cq = embed_diagonal(w);

    for (SplitBackend bk : {SplitBackend::recursion, SplitBackend::diagonal, SplitBackend::dense}) {
      SplitOptions opts;
      opts.backend = bk;
      SplitParams got = split_params(cq, 4, opts);
      for (int i = 0; i < 4; ++i) {
        REQUIRE(std::abs(got.mutual_info[std::size_t(i)] - want.mi[std::size_t(i)]) < 1e-9);
        REQUIRE(std::abs(got.sqrt_fidelity[std::size_t(i)] - want.z[std::size_t(i)]) < 1e-9);
      }
    }
  }
}

TEST_CASE("BSC N=8 recursion backend stays exact") {
  OracleSplit want = classical_split_oracle(bsc(0.1).transition, 8);
  SplitParams got = split_params(embed_diagonal(bsc(0.1)), 8);
  for (int i = 0; i < 8; ++i) {
    REQUIRE(std::abs(got.mutual_info[std::size_t(i)] - want.mi[std::size_t(i)]) < 1e-9);
    REQUIRE(std::abs(got.sqrt_fidelity[std::size_t(i)] - want.z[std::size_t(i)]) < 1e-9);
  }
}

TEST_CASE("pure-state Gram backend agrees with dense enumeration") {
  CqChannel w = pure_state_cq(0.7);
  SplitOptions pure_opts, dense_opts;
  pure_opts.backend = SplitBackend::pure_state;
  dense_opts.backend = SplitBackend::dense;
  SplitParams a = split_params(w, 4, pure_opts);
  SplitParams b = split_params(w, 4, dense_opts);
  for (int i = 0; i < 4; ++i) {
    REQUIRE(std::abs(a.mutual_info[std::size_t(i)] - b.mutual_info[std::size_t(i)]) < 1e-7);
    REQUIRE(std::abs(a.sqrt_fidelity[std::size_t(i)] - b.sqrt_fidelity[std::size_t(i)]) < 1e-7);
  }
}

TEST_CASE("reversed-order and shaped splits agree across backends") {
  CqChannel cq = embed_diagonal(bsc(0.2));
  for (double q1 : {0.5, 0.3}) {
    for (SplitOrder ord : {SplitOrder::standard, SplitOrder::reversed}) {
      SplitOptions da, de;
      da.backend = SplitBackend::diagonal;
      de.backend = SplitBackend::dense;
      da.order = de.order = ord;
      da.source_one_prob = de.source_one_prob = q1;
      SplitParams a = split_params(cq, 4, da);
      SplitParams b = split_params(cq, 4, de);
      for (int i = 0; i < 4; ++i)
        REQUIRE(std::abs(a.sqrt_fidelity[std::size_t(i)] - b.sqrt_fidelity[std::size_t(i)]) < 1e-9);
    }
  }
  // Pure backend under reversed order against dense.
  CqChannel w = pure_state_cq(0.6);
  SplitOptions pa, pb;
  pa.backend = SplitBackend::pure_state;
  pb.backend = SplitBackend::dense;
  pa.order = pb.order = SplitOrder::reversed;
  SplitParams a = split_params(w, 4, pa);
  SplitParams b = split_params(w, 4, pb);
  for (int i = 0; i < 4; ++i)
    REQUIRE(std::abs(a.sqrt_fidelity[std::size_t(i)] - b.sqrt_fidelity[std::size_t(i)]) < 1e-7);
}

TEST_CASE("backend overrides validate channel structure") {
  SplitOptions rec;
  rec.backend = SplitBackend::recursion;
  REQUIRE_THROWS_AS(split_params(pure_state_cq(0.5), 2, rec), InvariantViolation);
  SplitOptions pure_opts;
  pure_opts.backend = SplitBackend::pure_state;
  CqChannel mixed(std::vector<Cmat>{random_density(2), random_density(2)});
  REQUIRE_THROWS_AS(split_params(mixed, 2, pure_opts), InvariantViolation);
}

TEST_CASE("fidelity recursion at N=2 on random cq channels") {
  for (int rep = 0; rep < 5; ++rep) {
    CqChannel w(std::vector<Cmat>{random_density(2), random_density(2)});
    double base = sqrt_fidelity(DensityMatrix(w.outputs[0]), DensityMatrix(w.outputs[1]));
    SplitParams p = split_params(w, 2);
    REQUIRE(std::abs(p.sqrt_fidelity[1] - base * base) < kNum);
    REQUIRE(p.sqrt_fidelity[0] <= 2.0 * base + kNum);
  }
}

TEST_CASE("splitting moves information in the polarization direction") {
  for (const CqChannel& w :
       {embed_diagonal(bec(0.4)), embed_diagonal(bsc(0.15)), pure_state_cq(0.6)}) {
    double iw = holevo_information({0.5, 0.5}, w.outputs);
    SplitParams p = split_params(w, 2);
    REQUIRE(p.mutual_info[0] <= iw + kNum);
    REQUIRE(iw <= p.mutual_info[1] + kNum);
  }
}

TEST_CASE("conservation of information across splitting") {
  CqChannel w1 = pure_state_cq(0.8);
  ConservationCheck c1 = conservation_check(w1, 1);
  REQUIRE(std::abs(c1.sum_split_info - c1.n_times_channel_info) < kNum);

  double eps = 0.45;
  ConservationCheck c2 = conservation_check(embed_diagonal(bec(eps)), 2);
  REQUIRE(std::abs(c2.sum_split_info - 2.0 * (1.0 - eps)) < kNum);
  REQUIRE(std::abs(c2.n_times_channel_info - 2.0 * (1.0 - eps)) < kNum);

  // All test channels at N in {2, 4, 8}; the mixed channel stays at N <= 4
  // where dense enumeration is cheap.
  std::vector<CqChannel> fast{embed_diagonal(bsc(0.1)), embed_diagonal(bec(0.3)),
                              pure_state_cq(0.6)};
  for (const auto& w : fast)
    for (std::size_t n : {2, 4, 8}) {
      ConservationCheck c = conservation_check(w, n);
      REQUIRE(std::abs(c.sum_split_info - c.n_times_channel_info) < tol::chain);
    }
  CqChannel mixed(std::vector<Cmat>{random_density(2), random_density(2)});
  for (std::size_t n : {2, 4}) {
    ConservationCheck c = conservation_check(mixed, n);
    REQUIRE(std::abs(c.sum_split_info - c.n_times_channel_info) < tol::chain);
  }
}

TEST_CASE("construct selects the K best indices deterministically") {
  CqChannel w = embed_diagonal(bec(0.5));
  PolarCode code = construct(w, 8, 4);
  REQUIRE(code.info_set.size() == 4);

  // Oracle: rank exact BEC erasure probabilities, smallest first.
  std::vector<double> eps = bec_oracle(0.5, 8);
  std::vector<int> order(8);
  for (int i = 0; i < 8; ++i) order[std::size_t(i)] = i + 1;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return eps[std::size_t(a - 1)] < eps[std::size_t(b - 1)]; });
  std::vector<int> want(order.begin(), order.begin() + 4);
  std::sort(want.begin(), want.end());
  REQUIRE(code.info_set == want);

  // Split values recorded for every index, and the BEC sqrtF equals the
  // erasure probability exactly.
  for (int i = 0; i < 8; ++i)
    REQUIRE(std::abs(code.record.sqrt_fidelity[std::size_t(i)] - eps[std::size_t(i)]) < 1e-12);

  // Polar coding rule: worst kept index beats best discarded index.
  double worst_kept = 0.0, best_dropped = 1.0;
  std::vector<bool> in_a(9, false);
  for (int i : code.info_set) in_a[std::size_t(i)] = true;
  for (int i = 1; i <= 8; ++i) {
    double z = code.record.sqrt_fidelity[std::size_t(i - 1)];
    if (in_a[std::size_t(i)]) worst_kept = std::max(worst_kept, z);
    else best_dropped = std::min(best_dropped, z);
  }
  REQUIRE(worst_kept <= best_dropped + kNum);
}

TEST_CASE("construct edge cases and tie-breaking") {
  CqChannel w = embed_diagonal(bsc(0.2));
  PolarCode all = construct(w, 4, 4);
  REQUIRE(all.info_set == std::vector<int>{1, 2, 3, 4});
  PolarCode none = construct(w, 4, 0);
  REQUIRE(none.info_set.empty());
  REQUIRE(none.frozen_values == Bits(4, 0));
  REQUIRE_THROWS_AS(construct(w, 4, 5), BadLength);

  // Perfect channel: every sqrtF is 0, ties resolve to the lowest indices.
  Cmat d0 = Cmat::Zero(2, 2), d1 = Cmat::Zero(2, 2);
  d0(0, 0) = 1.0;
  d1(1, 1) = 1.0;
  PolarCode tie = construct(CqChannel({d0, d1}), 4, 2);
  REQUIRE(tie.info_set == std::vector<int>{1, 2});

  // Random frozen bits are reproducible from the seed.
  ConstructOptions ro;
  ro.random_frozen = true;
  ro.seed = 7;
  PolarCode r1 = construct(w, 8, 3, ro);
  PolarCode r2 = construct(w, 8, 3, ro);
  REQUIRE(r1.frozen_values == r2.frozen_values);
  REQUIRE(r1.frozen_values.size() == 5);
}
