// Polar transform, exact split-channel computation, code construction, and
// the polarization index sets used by the shaping and broadcast schemes.
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "binary_dmc.hpp"
#include "channels.hpp"
#include "common.hpp"
#include "qmath.hpp"

namespace polarlab {

// ---------------------------------------------------------------------------
// Polar transform x = u G, G = B F^{(x)n}. Self-inverse over GF(2).

inline std::size_t encode_word(std::size_t u, unsigned n) {
  if (n > 6) throw BadLength("encode_word: word form limited to 64 symbols");
  std::size_t len = std::size_t(1) << n;
  std::size_t v = 0;
  for (std::size_t t = 0; t < len; ++t)
    if ((u >> t) & 1u) v |= std::size_t(1) << bit_reverse(t, n);
  for (std::size_t s = len >> 1; s >= 1; s >>= 1) {
    std::size_t mask = 0;
    for (std::size_t t = 0; t < len; ++t)
      if (!(t & s)) mask |= std::size_t(1) << t;
    v ^= (v >> s) & mask;
  }
  return v;
}

inline Bits encode(const Bits& u) {
  if (u.empty() || !is_pow2(u.size())) throw BadLength("encode: length must be a power of two");
  unsigned n = log2_exact(u.size());
  Bits v(u.size());
  for (std::size_t t = 0; t < u.size(); ++t) v[bit_reverse(t, n)] = u[t] & 1u;
  for (std::size_t s = u.size() >> 1; s >= 1; s >>= 1)
    for (std::size_t t = 0; t < u.size(); ++t)
      if (!(t & s)) v[t] ^= v[t | s];
  return v;
}

namespace detail {

// All encoded words for a block, indexed by the input word.
inline std::vector<std::uint32_t> encode_table(std::size_t block_len) {
  unsigned n = log2_exact(block_len);
  if (block_len > 20) throw BudgetExceeded("encode_table: block length above 20 symbols");
  std::vector<std::uint32_t> tab(std::size_t(1) << block_len);
  for (std::size_t u = 0; u < tab.size(); ++u)
    tab[u] = std::uint32_t(encode_word(u, n));
  return tab;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Split-channel machinery.

enum class SplitOrder {
  standard,  // condition on earlier indices u_1 .. u_{i-1}
  reversed   // condition on later indices u_{i+1} .. u_N
};

enum class SplitBackend {
  automatic,   // cheapest exact representation for the channel structure
  recursion,   // classical symbol-merged recursion (diagonal, standard, uniform)
  diagonal,    // probability-vector enumeration (diagonal outputs)
  pure_state,  // Gram-matrix enumeration (pure outputs)
  dense        // density-matrix enumeration (any channel)
};

struct SplitOptions {
  SplitOrder order = SplitOrder::standard;
  SplitBackend backend = SplitBackend::automatic;
  double source_one_prob = 0.5;  // per-letter P(X=1); 0.5 is plain channel splitting
  std::uint64_t budget = kDefaultBudgetBytes;
  bool need_mutual_info = true;
  bool need_sqrt_fidelity = true;
};

struct SplitParams {
  std::vector<double> mutual_info;    // I(W_N^(i)) in bits, 0 when not requested
  std::vector<double> sqrt_fidelity;  // ||sqrt(rho_0) sqrt(rho_1)||_1 per index
};

// Exact split channel: per branch, the two u_i-conditioned joint states.
struct SplitChannel {
  std::size_t block_len = 1;
  int index = 1;  // 1-based
  SplitOrder order = SplitOrder::standard;
  std::vector<double> weights;                   // branch probabilities, sum to 1
  std::vector<std::array<double, 2>> target_probs;  // P(u_i = t | branch)
  std::vector<std::array<Cmat, 2>> states;       // normalized joint states
};

namespace detail {

struct SplitShape {
  unsigned n = 0;
  std::size_t block_len = 1;
  int index = 1;
  SplitOrder order = SplitOrder::standard;
  unsigned branch_bits = 0;
  unsigned free_bits = 0;

  std::size_t assemble(std::size_t branch, std::size_t target, std::size_t free) const {
    unsigned i = unsigned(index);
    if (order == SplitOrder::standard)
      return branch | (target << (i - 1)) | (free << i);
    return free | (target << (i - 1)) | (branch << i);
  }
};

inline SplitShape make_shape(std::size_t block_len, int index, SplitOrder order) {
  SplitShape s;
  s.n = log2_exact(block_len);
  s.block_len = block_len;
  s.index = index;
  s.order = order;
  if (index < 1 || std::size_t(index) > block_len)
    throw BadLength("split: index out of range");
  unsigned before = unsigned(index) - 1;
  unsigned after = unsigned(block_len) - unsigned(index);
  s.branch_bits = (order == SplitOrder::standard) ? before : after;
  s.free_bits = (order == SplitOrder::standard) ? after : before;
  return s;
}

// Letter-weight table: weight of an encoded word is prod_t q(x_t).
struct WordWeights {
  std::vector<double> pw0, pw1;
  unsigned len;

  WordWeights(double q1, unsigned block_len) : pw0(block_len + 1), pw1(block_len + 1), len(block_len) {
    if (q1 < 0.0 || q1 > 1.0) throw InvalidDistribution("source probability outside [0,1]");
    pw0[0] = pw1[0] = 1.0;
    for (unsigned k = 1; k <= block_len; ++k) {
      pw0[k] = pw0[k - 1] * (1.0 - q1);
      pw1[k] = pw1[k - 1] * q1;
    }
  }

  double operator()(std::size_t x) const {
    unsigned pop = unsigned(std::popcount(std::uint64_t(x)));
    return pw1[pop] * pw0[len - pop];
  }
};

inline void check_budget(std::uint64_t bytes, std::uint64_t budget, const char* where) {
  if (bytes > budget) throw BudgetExceeded(std::string(where) + ": exact enumeration exceeds memory budget");
}

// checked pow for joint dimensions
inline std::uint64_t checked_dim_pow(std::uint64_t base, unsigned e, const char* where) {
  std::uint64_t r = 1;
  for (unsigned k = 0; k < e; ++k) {
    if (r > (std::uint64_t(1) << 40)) throw BudgetExceeded(std::string(where) + ": joint dimension overflow");
    r *= base;
  }
  return r;
}

inline Cmat tensor_outputs(const std::vector<Cmat>& letter, std::size_t x, unsigned num_symbols) {
  Cmat acc = Cmat::Identity(1, 1);
  for (unsigned t = 0; t < num_symbols; ++t) acc = kron(acc, letter[(x >> t) & 1u]);
  return acc;
}

// Entropy of an unnormalized diagonal state given as a probability vector.
inline double vector_entropy(const std::vector<double>& v, double mass) {
  if (mass <= 0.0) return 0.0;
  double h = 0.0;
  for (double p : v) h -= xlog2x(p / mass);
  return h < 0.0 ? 0.0 : h;
}

// Dense enumeration over all indices. Exact for any binary-input cq channel.
inline SplitParams accumulate_dense(const CqChannel& w, std::size_t block_len,
                                    const SplitOptions& opts) {
  std::uint64_t dimj = checked_dim_pow(std::uint64_t(w.output_dim()), unsigned(block_len), "split");
  std::uint64_t bytes = ((std::uint64_t(1) << block_len) + 4) * dimj * dimj * 16;
  check_budget(bytes, opts.budget, "split (dense)");

  auto xtab = encode_table(block_len);
  WordWeights wgt(opts.source_one_prob, unsigned(block_len));

  // Joint states are shared by every index; build them once.
  std::vector<Cmat> joint(std::size_t(1) << block_len);
  for (std::size_t u = 0; u < joint.size(); ++u)
    joint[u] = tensor_outputs(w.outputs, xtab[u], unsigned(block_len));

  SplitParams out;
  out.mutual_info.assign(block_len, 0.0);
  out.sqrt_fidelity.assign(block_len, 0.0);
  for (int idx = 1; idx <= int(block_len); ++idx) {
    SplitShape shape = make_shape(block_len, idx, opts.order);
    for (std::size_t b = 0; b < (std::size_t(1) << shape.branch_bits); ++b) {
      Cmat s0 = Cmat::Zero(Eigen::Index(dimj), Eigen::Index(dimj));
      Cmat s1 = s0;
      double p0 = 0.0, p1 = 0.0;
      for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t f = 0; f < (std::size_t(1) << shape.free_bits); ++f) {
          std::size_t u = shape.assemble(b, t, f);
          double ww = wgt(xtab[u]);
          if (ww == 0.0) continue;
          (t ? s1 : s0) += ww * joint[u];
          (t ? p1 : p0) += ww;
        }
      if (opts.need_sqrt_fidelity && p0 > 0.0 && p1 > 0.0)
        out.sqrt_fidelity[idx - 1] += 2.0 * sqrt_fidelity_raw(s0, s1);
      if (opts.need_mutual_info) {
        double wb = p0 + p1;
        if (wb > 0.0) {
          double acc = wb * von_neumann_entropy(Cmat((s0 + s1) / wb));
          if (p0 > 0.0) acc -= p0 * von_neumann_entropy(Cmat(s0 / p0));
          if (p1 > 0.0) acc -= p1 * von_neumann_entropy(Cmat(s1 / p1));
          out.mutual_info[idx - 1] += acc;
        }
      }
    }
  }
  return out;
}

// Probability-vector enumeration for diagonal (classical) channels.
inline SplitParams accumulate_diagonal(const CqChannel& w, std::size_t block_len,
                                       const SplitOptions& opts) {
  ClassicalDMC dmc = to_dmc(w);
  std::size_t dy = std::size_t(dmc.output_size());
  std::uint64_t dimj = checked_dim_pow(dy, unsigned(block_len), "split");
  std::uint64_t bytes = ((std::uint64_t(1) << block_len) + 4) * dimj * 8;
  check_budget(bytes, opts.budget, "split (diagonal)");

  auto xtab = encode_table(block_len);
  WordWeights wgt(opts.source_one_prob, unsigned(block_len));

  std::vector<std::vector<double>> joint(std::size_t(1) << block_len);
  for (std::size_t u = 0; u < joint.size(); ++u) {
    std::vector<double> v{1.0};
    for (unsigned t = 0; t < unsigned(block_len); ++t) {
      const auto& row = dmc.transition[(xtab[u] >> t) & 1u];
      std::vector<double> nv(v.size() * dy);
      for (std::size_t a = 0; a < v.size(); ++a)
        for (std::size_t y = 0; y < dy; ++y) nv[a * dy + y] = v[a] * row[y];
      v = std::move(nv);
    }
    joint[u] = std::move(v);
  }

  SplitParams out;
  out.mutual_info.assign(block_len, 0.0);
  out.sqrt_fidelity.assign(block_len, 0.0);
  std::vector<double> s0(dimj), s1(dimj);
  for (int idx = 1; idx <= int(block_len); ++idx) {
    SplitShape shape = make_shape(block_len, idx, opts.order);
    for (std::size_t b = 0; b < (std::size_t(1) << shape.branch_bits); ++b) {
      std::fill(s0.begin(), s0.end(), 0.0);
      std::fill(s1.begin(), s1.end(), 0.0);
      double p0 = 0.0, p1 = 0.0;
      for (std::size_t t = 0; t < 2; ++t)
        for (std::size_t f = 0; f < (std::size_t(1) << shape.free_bits); ++f) {
          std::size_t u = shape.assemble(b, t, f);
          double ww = wgt(xtab[u]);
          if (ww == 0.0) continue;
          auto& s = t ? s1 : s0;
          const auto& j = joint[u];
          for (std::size_t y = 0; y < dimj; ++y) s[y] += ww * j[y];
          (t ? p1 : p0) += ww;
        }
      if (opts.need_sqrt_fidelity) {
        double z = 0.0;
        for (std::size_t y = 0; y < dimj; ++y) z += std::sqrt(s0[y] * s1[y]);
        out.sqrt_fidelity[idx - 1] += 2.0 * z;
      }
      if (opts.need_mutual_info) {
        double wb = p0 + p1;
        if (wb > 0.0) {
          std::vector<double> sum(dimj);
          for (std::size_t y = 0; y < dimj; ++y) sum[y] = s0[y] + s1[y];
          double acc = wb * vector_entropy(sum, wb);
          if (p0 > 0.0) acc -= p0 * vector_entropy(s0, p0);
          if (p1 > 0.0) acc -= p1 * vector_entropy(s1, p1);
          out.mutual_info[idx - 1] += acc;
        }
      }
    }
  }
  return out;
}

// Gram-matrix enumeration for channels with pure outputs. Joint states are
// never materialized; all spectra come from member-overlap Gram matrices with
// entries prod_t <psi_{x_t} | psi_{x'_t}>.
inline SplitParams accumulate_pure(const CqChannel& w, std::size_t block_len,
                                   const SplitOptions& opts) {
  auto xtab = encode_table(block_len);
  WordWeights wgt(opts.source_one_prob, unsigned(block_len));

  std::array<Cvec, 2> ket{pure_ket(w.outputs[0]), pure_ket(w.outputs[1])};
  std::array<std::array<complexd, 2>, 2> ov;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) ov[a][b] = (ket[a].adjoint() * ket[b])(0, 0);

  std::uint64_t max_members = std::uint64_t(1) << (block_len - 1);
  check_budget(4 * (2 * max_members) * (2 * max_members) * 16, opts.budget, "split (pure)");

  SplitParams out;
  out.mutual_info.assign(block_len, 0.0);
  out.sqrt_fidelity.assign(block_len, 0.0);
  for (int idx = 1; idx <= int(block_len); ++idx) {
    SplitShape shape = make_shape(block_len, idx, opts.order);
    std::size_t m = std::size_t(1) << shape.free_bits;
    std::vector<std::uint32_t> xw[2];
    std::vector<double> root(2 * m);  // sqrt weights, members of u_i=0 then u_i=1
    for (std::size_t b = 0; b < (std::size_t(1) << shape.branch_bits); ++b) {
      for (std::size_t t = 0; t < 2; ++t) {
        xw[t].clear();
        for (std::size_t f = 0; f < m; ++f) {
          std::uint32_t x = xtab[shape.assemble(b, t, f)];
          xw[t].push_back(x);
          root[t * m + f] = std::sqrt(wgt(x));
        }
      }
      // Union Gram over both target values; diagonal blocks condition on u_i.
      Cmat gu = Cmat::Zero(Eigen::Index(2 * m), Eigen::Index(2 * m));
      for (std::size_t a = 0; a < 2 * m; ++a) {
        std::uint32_t xa = xw[a / m][a % m];
        for (std::size_t c = 0; c <= a; ++c) {
          std::uint32_t xc = xw[c / m][c % m];
          complexd prod = root[a] * root[c];
          for (unsigned t = 0; t < unsigned(block_len) && prod != complexd(0.0, 0.0); ++t)
            prod *= ov[(xa >> t) & 1u][(xc >> t) & 1u];
          gu(Eigen::Index(a), Eigen::Index(c)) = prod;
          gu(Eigen::Index(c), Eigen::Index(a)) = std::conj(prod);
        }
      }
      Cmat g0 = gu.topLeftCorner(Eigen::Index(m), Eigen::Index(m));
      Cmat g1 = gu.bottomRightCorner(Eigen::Index(m), Eigen::Index(m));
      double p0 = g0.real().trace(), p1 = g1.real().trace();
      if (opts.need_sqrt_fidelity && p0 > 0.0 && p1 > 0.0)
        out.sqrt_fidelity[idx - 1] += 2.0 * lowrank::sqrt_fidelity_from_grams(
                                                g0, g1, gu.topRightCorner(Eigen::Index(m), Eigen::Index(m)));
      if (opts.need_mutual_info) {
        double wb = p0 + p1;
        if (wb > 0.0) {
          double acc = wb * lowrank::entropy_from_gram(gu, wb);
          if (p0 > 0.0) acc -= p0 * lowrank::entropy_from_gram(g0, p0);
          if (p1 > 0.0) acc -= p1 * lowrank::entropy_from_gram(g1, p1);
          out.mutual_info[idx - 1] += acc;
        }
      }
    }
  }
  return out;
}

inline SplitBackend resolve_backend(const CqChannel& w, const SplitOptions& opts) {
  bool diag = is_diagonal(w);
  bool rec_ok = diag && opts.order == SplitOrder::standard && opts.source_one_prob == 0.5;
  if (opts.backend == SplitBackend::automatic) {
    if (rec_ok) return SplitBackend::recursion;
    if (diag) return SplitBackend::diagonal;
    if (is_pure(w)) return SplitBackend::pure_state;
    return SplitBackend::dense;
  }
  if (opts.backend == SplitBackend::recursion && !rec_ok)
    throw InvariantViolation("split: recursion backend needs a diagonal channel, standard order, uniform input");
  if (opts.backend == SplitBackend::diagonal && !diag)
    throw InvariantViolation("split: diagonal backend on a non-diagonal channel");
  if (opts.backend == SplitBackend::pure_state && !is_pure(w))
    throw InvariantViolation("split: pure-state backend on a mixed-output channel");
  return opts.backend;
}

}  // namespace detail

inline SplitParams split_params(const CqChannel& w, std::size_t block_len, SplitOptions opts = {}) {
  if (w.input_size() != 2) throw InvalidDistribution("split_params: binary-input channel required");
  if (!is_pow2(block_len)) throw BadLength("split_params: block length must be a power of two");
  switch (detail::resolve_backend(w, opts)) {
    case SplitBackend::recursion: {
      ClassicalSplitParams c = classical_split_params(BinaryDmc::from_dmc(to_dmc(w)), block_len);
      return SplitParams{std::move(c.mutual_info), std::move(c.bhattacharyya)};
    }
    case SplitBackend::diagonal:
      return detail::accumulate_diagonal(w, block_len, opts);
    case SplitBackend::pure_state:
      return detail::accumulate_pure(w, block_len, opts);
    default:
      return detail::accumulate_dense(w, block_len, opts);
  }
}

// Materialized split channel (dense states regardless of structure).
inline SplitChannel split_channel(const CqChannel& w, std::size_t block_len, int index,
                                  SplitOptions opts = {}) {
  if (w.input_size() != 2) throw InvalidDistribution("split_channel: binary-input channel required");
  if (!is_pow2(block_len)) throw BadLength("split_channel: block length must be a power of two");
  detail::SplitShape shape = detail::make_shape(block_len, index, opts.order);
  std::uint64_t dimj =
      detail::checked_dim_pow(std::uint64_t(w.output_dim()), unsigned(block_len), "split_channel");
  std::uint64_t nbranch = std::uint64_t(1) << shape.branch_bits;
  detail::check_budget((2 * nbranch + 2) * dimj * dimj * 16, opts.budget, "split_channel");

  auto xtab = detail::encode_table(block_len);
  detail::WordWeights wgt(opts.source_one_prob, unsigned(block_len));

  SplitChannel out;
  out.block_len = block_len;
  out.index = index;
  out.order = opts.order;
  for (std::size_t b = 0; b < nbranch; ++b) {
    Cmat s0 = Cmat::Zero(Eigen::Index(dimj), Eigen::Index(dimj));
    Cmat s1 = s0;
    double p0 = 0.0, p1 = 0.0;
    for (std::size_t t = 0; t < 2; ++t)
      for (std::size_t f = 0; f < (std::size_t(1) << shape.free_bits); ++f) {
        std::size_t u = shape.assemble(b, t, f);
        double ww = wgt(xtab[u]);
        if (ww == 0.0) continue;
        (t ? s1 : s0) += ww * detail::tensor_outputs(w.outputs, xtab[u], unsigned(block_len));
        (t ? p1 : p0) += ww;
      }
    double wb = p0 + p1;
    out.weights.push_back(wb);
    out.target_probs.push_back({wb > 0.0 ? p0 / wb : 0.0, wb > 0.0 ? p1 / wb : 0.0});
    out.states.push_back({p0 > 0.0 ? Cmat(s0 / p0) : s0, p1 > 0.0 ? Cmat(s1 / p1) : s1});
  }
  return out;
}

struct ConservationCheck {
  double sum_split_info = 0.0;      // sum_i I(W_N^(i))
  double n_times_channel_info = 0.0;  // N * I(W)
};

inline ConservationCheck conservation_check(const CqChannel& w, std::size_t block_len,
                                            SplitOptions opts = {}) {
  opts.need_mutual_info = true;
  opts.need_sqrt_fidelity = false;
  SplitParams p = split_params(w, block_len, opts);
  ConservationCheck out;
  for (double v : p.mutual_info) out.sum_split_info += v;
  out.n_times_channel_info = double(block_len) * holevo_information({0.5, 0.5}, w.outputs);
  return out;
}

// ---------------------------------------------------------------------------
// Code construction.

struct PolarCode {
  std::size_t block_len = 0;
  std::vector<int> info_set;  // 1-based, ascending
  Bits frozen_values;         // aligned with the ascending frozen positions
  SplitParams record;         // per-index construction record
};

struct ConstructOptions {
  SplitOptions split;
  bool random_frozen = false;
  std::uint64_t seed = 0;
};

inline PolarCode construct(const CqChannel& w, std::size_t block_len, std::size_t k,
                           ConstructOptions opts = {}) {
  if (k > block_len) throw BadLength("construct: K exceeds block length");
  PolarCode code;
  code.block_len = block_len;
  code.record = split_params(w, block_len, opts.split);
  std::vector<int> order(block_len);
  for (std::size_t i = 0; i < block_len; ++i) order[i] = int(i) + 1;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return code.record.sqrt_fidelity[a - 1] < code.record.sqrt_fidelity[b - 1];
  });
  code.info_set.assign(order.begin(), order.begin() + std::ptrdiff_t(k));
  std::sort(code.info_set.begin(), code.info_set.end());
  code.frozen_values.assign(block_len - k, 0);
  if (opts.random_frozen) {
    std::mt19937_64 rng(opts.seed);
    for (auto& b : code.frozen_values) b = std::uint8_t(rng() & 1u);
  }
  return code;
}

inline Bits coset_encode(const PolarCode& code, const Bits& info_bits) {
  if (info_bits.size() != code.info_set.size())
    throw LengthMismatch("coset_encode: info length does not match |A|");
  Bits u(code.block_len, 0);
  std::size_t next_info = 0, next_frozen = 0;
  for (std::size_t pos = 1; pos <= code.block_len; ++pos) {
    if (next_info < code.info_set.size() && code.info_set[next_info] == int(pos))
      u[pos - 1] = info_bits[next_info++] & 1u;
    else
      u[pos - 1] = code.frozen_values[next_frozen++] & 1u;
  }
  return encode(u);
}

// ---------------------------------------------------------------------------
// Source polarization sets for shaping.

struct ShapingSets {
  double threshold = 0.0;
  std::vector<double> z_source;   // Z(U_i | U_1^{i-1})
  std::vector<int> f_set;         // high set: Z >= 1 - threshold (uniform bits)
  std::vector<int> f_complement;  // low set: Z <= threshold (determined bits)
};

namespace detail {

// Per-index prefix Bhattacharyya of the transformed source, from the full
// distribution over input words. Folds suffix positions one at a time.
inline std::vector<double> source_fold_z(std::vector<double> pu, std::size_t block_len) {
  std::vector<double> z(block_len);
  for (std::size_t i = block_len; i >= 1; --i) {
    std::size_t half = std::size_t(1) << (i - 1);
    double acc = 0.0;
    for (std::size_t v = 0; v < half; ++v) acc += std::sqrt(pu[v] * pu[v + half]);
    z[i - 1] = 2.0 * acc;
    for (std::size_t v = 0; v < half; ++v) pu[v] += pu[v + half];
    pu.resize(half);
  }
  return z;
}

inline void check_classical_block(std::size_t block_len, const char* where) {
  if (!is_pow2(block_len)) throw BadLength(std::string(where) + ": block length must be a power of two");
  if (block_len > 16)
    throw BudgetExceeded(std::string(where) + ": enumeration over 2^N words limited to N <= 16");
}

}  // namespace detail

inline ShapingSets shaping_sets(double source_one_prob, std::size_t block_len, double threshold) {
  detail::check_classical_block(block_len, "shaping_sets");
  auto xtab = detail::encode_table(block_len);
  detail::WordWeights wgt(source_one_prob, unsigned(block_len));
  std::vector<double> pu(std::size_t(1) << block_len);
  for (std::size_t u = 0; u < pu.size(); ++u) pu[u] = wgt(xtab[u]);

  ShapingSets out;
  out.threshold = threshold;
  out.z_source = detail::source_fold_z(std::move(pu), block_len);
  for (std::size_t i = 1; i <= block_len; ++i) {
    if (out.z_source[i - 1] >= 1.0 - threshold) out.f_set.push_back(int(i));
    if (out.z_source[i - 1] <= threshold) out.f_complement.push_back(int(i));
  }
  return out;
}

struct ShapingInfoSet {
  ShapingSets source;
  std::vector<double> z_side_info;  // Z(U_i | U_1^{i-1}, B^N)
  std::vector<int> info_set;        // I = {i in F : side-information Z <= threshold}
  std::vector<int> f_minus_info;    // F \ I
};

inline ShapingInfoSet shaping_info_set(const CqChannel& w, double source_one_prob,
                                       std::size_t block_len, double threshold,
                                       SplitOptions opts = {}) {
  detail::check_classical_block(block_len, "shaping_info_set");
  ShapingInfoSet out;
  out.source = shaping_sets(source_one_prob, block_len, threshold);
  opts.order = SplitOrder::standard;
  opts.source_one_prob = source_one_prob;
  opts.need_mutual_info = false;
  opts.need_sqrt_fidelity = true;
  out.z_side_info = split_params(w, block_len, opts).sqrt_fidelity;
  for (std::size_t i = 1; i <= block_len; ++i) {
    if (out.z_side_info[i - 1] > out.source.z_source[i - 1] + tol::num)
      throw InvariantViolation("shaping_info_set: side information increased a Bhattacharyya value");
  }
  for (int i : out.source.f_set) {
    if (out.z_side_info[std::size_t(i) - 1] <= threshold) out.info_set.push_back(i);
    else out.f_minus_info.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Broadcast polarization sets.

struct PolarizationSets {
  std::size_t block_len = 0;
  double threshold = 0.0;
  std::vector<std::pair<std::string, std::vector<double>>> z_families;
  std::vector<std::pair<std::string, std::vector<int>>> index_sets;

  const std::vector<double>& z(const std::string& name) const {
    for (const auto& f : z_families)
      if (f.first == name) return f.second;
    throw Error("PolarizationSets: unknown family " + name);
  }
  const std::vector<int>& set(const std::string& name) const {
    for (const auto& s : index_sets)
      if (s.first == name) return s.second;
    throw Error("PolarizationSets: unknown set " + name);
  }
};

// Input distributions for the superposition/binning construction:
// V ~ Bern(v_one); V2 | V; V1 | (V, V2). The channel input is x = phi(v,v1,v2).
struct BroadcastPrior {
  double v_one = 0.5;
  std::array<double, 2> v2_one_given_v{0.5, 0.5};
  std::array<std::array<double, 2>, 2> v1_one_given_v_v2{{{0.5, 0.5}, {0.5, 0.5}}};
};

namespace detail {

inline std::vector<int> intersect_sorted(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

// Z(U_i | U^{i-1}, S^N) where the source letters X_t are independent given a
// side sequence S^N, with P(X=1 | S=s) = cond_one[s] and S-word weights given.
inline std::vector<double> conditional_source_z(const std::array<double, 2>& cond_one,
                                                const std::vector<double>& side_weight,
                                                std::size_t block_len) {
  auto xtab = encode_table(block_len);
  std::vector<double> z(block_len, 0.0);
  std::vector<double> q(std::size_t(1) << block_len);
  for (std::size_t s = 0; s < side_weight.size(); ++s) {
    if (side_weight[s] == 0.0) continue;
    for (std::size_t u = 0; u < q.size(); ++u) {
      double p = 1.0;
      std::size_t x = xtab[u];
      for (unsigned t = 0; t < unsigned(block_len); ++t) {
        double c1 = cond_one[(s >> t) & 1u];
        p *= ((x >> t) & 1u) ? c1 : 1.0 - c1;
      }
      q[u] = p;
    }
    std::vector<double> part = source_fold_z(q, block_len);
    for (std::size_t i = 0; i < block_len; ++i) z[i] += side_weight[s] * part[i];
  }
  return z;
}

}  // namespace detail

// All polarization sets of the two-user broadcast construction, computed by
// exact enumeration. phi maps (v<<2)|(v1<<1)|v2 to a channel input symbol.
inline PolarizationSets broadcast_sets(const BroadcastChannel& bc, const BroadcastPrior& prior,
                                       const std::array<int, 8>& phi, std::size_t block_len,
                                       double delta, std::uint64_t budget = kDefaultBudgetBytes) {
  detail::check_classical_block(block_len, "broadcast_sets");
  if (block_len > 8)
    throw BudgetExceeded("broadcast_sets: side-sequence enumeration limited to N <= 8");
  for (int e : phi)
    if (e < 0 || e >= bc.input_size()) throw ConfigError("broadcast_sets: phi maps outside the input alphabet");

  auto pv = [&](int v) { return v ? prior.v_one : 1.0 - prior.v_one; };
  auto pv2 = [&](int v, int v2) {
    return v2 ? prior.v2_one_given_v[v] : 1.0 - prior.v2_one_given_v[v];
  };
  auto pv1 = [&](int v, int v2, int v1) {
    return v1 ? prior.v1_one_given_v_v2[v][v2] : 1.0 - prior.v1_one_given_v_v2[v][v2];
  };

  // Receiver marginals of the composed channel, and the conditional states
  // seen through each auxiliary layer.
  std::array<std::array<Cmat, 2>, 2> m;  // m[l][...] built below per receiver
  std::array<Cmat, 2> tau1, tau2;        // V -> B_l effective outputs
  std::array<std::array<Cmat, 2>, 2> sig1, sig2;  // sig1[v][v1] on B1, sig2[v][v2] on B2
  std::array<std::array<double, 2>, 2> p1_marg{};  // P(V1 = v1 | V = v)
  for (int v = 0; v < 2; ++v) {
    tau1[v] = Cmat::Zero(bc.d1, bc.d1);
    tau2[v] = Cmat::Zero(bc.d2, bc.d2);
    for (int v1 = 0; v1 < 2; ++v1) {
      sig1[v][v1] = Cmat::Zero(bc.d1, bc.d1);
      sig2[v][v1] = Cmat::Zero(bc.d2, bc.d2);
    }
    for (int v2 = 0; v2 < 2; ++v2)
      for (int v1 = 0; v1 < 2; ++v1) {
        const Cmat& rho = bc.outputs[std::size_t(phi[(v << 2) | (v1 << 1) | v2])];
        Cmat b1 = partial_trace(rho, {bc.d1, bc.d2}, {0});
        Cmat b2 = partial_trace(rho, {bc.d1, bc.d2}, {1});
        double pj = pv2(v, v2) * pv1(v, v2, v1);
        tau1[v] += pj * b1;
        tau2[v] += pj * b2;
        sig1[v][v1] += pj * b1;
        sig2[v][v2] += pv1(v, v2, v1) * b2;
        p1_marg[v][v1] += pj;
      }
    for (int v1 = 0; v1 < 2; ++v1)
      if (p1_marg[v][v1] > 0.0) sig1[v][v1] /= p1_marg[v][v1];
  }

  PolarizationSets out;
  out.block_len = block_len;
  out.threshold = delta;

  // Family 1: source polarization of V.
  out.z_families.emplace_back("Z_V", shaping_sets(prior.v_one, block_len, delta).z_source);

  // Families 2-3: V against each receiver, shaped by P(V).
  for (int l = 1; l <= 2; ++l) {
    std::vector<Cmat> outs{l == 1 ? tau1[0] : tau2[0], l == 1 ? tau1[1] : tau2[1]};
    SplitOptions so;
    so.source_one_prob = prior.v_one;
    so.need_mutual_info = false;
    so.budget = budget;
    SplitParams p = split_params(CqChannel(outs), block_len, so);
    out.z_families.emplace_back(l == 1 ? "Z_V|B1" : "Z_V|B2", std::move(p.sqrt_fidelity));
  }

  // Side-sequence weights for V words.
  std::vector<double> vw(std::size_t(1) << block_len);
  for (std::size_t v = 0; v < vw.size(); ++v) {
    double p = 1.0;
    for (unsigned t = 0; t < unsigned(block_len); ++t) p *= pv(int((v >> t) & 1u));
    vw[v] = p;
  }

  // Families 4-5: each auxiliary against the V sequence alone.
  std::array<double, 2> p1_one{p1_marg[0][1], p1_marg[1][1]};
  std::array<double, 2> p2_one{prior.v2_one_given_v[0], prior.v2_one_given_v[1]};
  out.z_families.emplace_back("Z_V1|V", detail::conditional_source_z(p1_one, vw, block_len));
  out.z_families.emplace_back("Z_V2|V", detail::conditional_source_z(p2_one, vw, block_len));

  // Families 6-7: each auxiliary against (V sequence, own receiver).
  auto quantum_layer_z = [&](const std::array<std::array<Cmat, 2>, 2>& sig,
                             const std::array<double, 2>& cond_one, int dim) {
    std::uint64_t dimj = detail::checked_dim_pow(std::uint64_t(dim), unsigned(block_len), "broadcast_sets");
    detail::check_budget(4 * dimj * dimj * 16, budget, "broadcast_sets");
    auto xtab = detail::encode_table(block_len);
    std::vector<double> z(block_len, 0.0);
    for (std::size_t vword = 0; vword < vw.size(); ++vword) {
      if (vw[vword] == 0.0) continue;
      for (int idx = 1; idx <= int(block_len); ++idx) {
        detail::SplitShape shape = detail::make_shape(block_len, idx, SplitOrder::standard);
        double zsum = 0.0;
        for (std::size_t b = 0; b < (std::size_t(1) << shape.branch_bits); ++b) {
          Cmat s0 = Cmat::Zero(Eigen::Index(dimj), Eigen::Index(dimj));
          Cmat s1 = s0;
          for (std::size_t t = 0; t < 2; ++t)
            for (std::size_t f = 0; f < (std::size_t(1) << shape.free_bits); ++f) {
              std::size_t x = xtab[shape.assemble(b, t, f)];
              double ww = 1.0;
              Cmat joint = Cmat::Identity(1, 1);
              for (unsigned pos = 0; pos < unsigned(block_len); ++pos) {
                int vv = int((vword >> pos) & 1u);
                int xx = int((x >> pos) & 1u);
                double c1 = cond_one[vv];
                ww *= xx ? c1 : 1.0 - c1;
                if (ww == 0.0) break;
                joint = kron(joint, sig[vv][xx]);
              }
              if (ww == 0.0) continue;
              (t ? s1 : s0) += ww * joint;
            }
          zsum += 2.0 * sqrt_fidelity_raw(s0, s1);
        }
        z[idx - 1] += vw[vword] * zsum;
      }
    }
    return z;
  };
  out.z_families.emplace_back("Z_V1|V,B1", quantum_layer_z(sig1, p1_one, bc.d1));
  out.z_families.emplace_back("Z_V2|V,B2", quantum_layer_z(sig2, p2_one, bc.d2));

  // Family 8: V1 against (V, V2) sequences.
  {
    auto xtab = detail::encode_table(block_len);
    std::vector<double> z(block_len, 0.0);
    std::vector<double> q(std::size_t(1) << block_len);
    for (std::size_t vword = 0; vword < vw.size(); ++vword) {
      if (vw[vword] == 0.0) continue;
      for (std::size_t v2word = 0; v2word < vw.size(); ++v2word) {
        double sw = vw[vword];
        for (unsigned t = 0; t < unsigned(block_len); ++t) {
          sw *= pv2(int((vword >> t) & 1u), int((v2word >> t) & 1u));
          if (sw == 0.0) break;
        }
        if (sw == 0.0) continue;
        for (std::size_t u = 0; u < q.size(); ++u) {
          double p = 1.0;
          std::size_t x = xtab[u];
          for (unsigned t = 0; t < unsigned(block_len); ++t)
            p *= pv1(int((vword >> t) & 1u), int((v2word >> t) & 1u), int((x >> t) & 1u));
          q[u] = p;
        }
        std::vector<double> part = detail::source_fold_z(q, block_len);
        for (std::size_t i = 0; i < block_len; ++i) z[i] += sw * part[i];
      }
    }
    out.z_families.emplace_back("Z_V1|V,V2", std::move(z));
  }

  // High/low sets per family. Exact threshold ties land in the high set so
  // each pair stays disjoint.
  for (const auto& fam : out.z_families) {
    std::string suffix = fam.first.substr(2);  // strip "Z_"
    std::vector<int> high, low;
    for (std::size_t i = 1; i <= block_len; ++i) {
      if (fam.second[i - 1] >= delta) high.push_back(int(i));
      else low.push_back(int(i));
    }
    out.index_sets.emplace_back("H_" + suffix, std::move(high));
    out.index_sets.emplace_back("L_" + suffix, std::move(low));
  }

  // Derived message sets of the superposition/binning scheme.
  const auto& hv = out.set("H_V");
  out.index_sets.emplace_back("I_sup2", detail::intersect_sorted(hv, out.set("L_V|B2")));
  out.index_sets.emplace_back("I_v1", detail::intersect_sorted(hv, out.set("L_V|B1")));
  out.index_sets.emplace_back("I_bin2",
                              detail::intersect_sorted(out.set("H_V2|V"), out.set("L_V2|V,B2")));
  out.index_sets.emplace_back("I_1",
                              detail::intersect_sorted(out.set("H_V1|V"), out.set("L_V1|V,B1")));
  out.index_sets.emplace_back(
      "F_1", detail::intersect_sorted(out.set("L_V1|V,V2"),
                                      detail::intersect_sorted(out.set("H_V1|V"), out.set("H_V1|V,B1"))));
  return out;
}

}  // namespace polarlab
