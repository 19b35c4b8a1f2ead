// Successive-cancellation decoding: exact classical SC at scale, exact quantum
// SC by sequential projective-measurement simulation, block-error evaluation
// with its square-root bounds, and a Monte Carlo estimator.
#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <thread>
#include <utility>
#include <vector>

#include "channels.hpp"
#include "common.hpp"
#include "polar_core.hpp"
#include "qmath.hpp"

namespace polarlab {

namespace detail {

inline void check_code(const PolarCode& code, const char* where) {
  std::size_t block_len = code.block_len;
  if (!is_pow2(block_len)) throw BadLength(std::string(where) + ": block length must be a power of two");
  int prev = 0;
  for (int i : code.info_set) {
    if (i <= prev || std::size_t(i) > block_len)
      throw ConfigError(std::string(where) + ": info set must be ascending within 1..N");
    prev = i;
  }
  if (!code.frozen_values.empty() &&
      code.frozen_values.size() + code.info_set.size() != block_len)
    throw LengthMismatch(std::string(where) + ": frozen values do not cover the frozen set");
}

// Frozen indicator (1-based) and the frozen value at each frozen step. An
// empty frozen_values vector means all zeros.
inline std::pair<std::vector<std::uint8_t>, Bits> frozen_layout(const PolarCode& code) {
  std::vector<std::uint8_t> mask(code.block_len + 1, 1);
  for (int i : code.info_set) mask[std::size_t(i)] = 0;
  Bits at(code.block_len + 1, 0);
  std::size_t fz = 0;
  for (std::size_t i = 1; i <= code.block_len; ++i)
    if (mask[i] && !code.frozen_values.empty()) at[i] = code.frozen_values[fz++] & 1u;
  return {std::move(mask), std::move(at)};
}

// Saturating product for budget formulas, so oversized requests cannot wrap
// past the guard.
inline std::uint64_t sat_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > std::numeric_limits<std::uint64_t>::max() / a)
    return std::numeric_limits<std::uint64_t>::max();
  return a * b;
}

// Impossible branches keep zero likelihood instead of a fake uniform, so the
// message stays proportional to the exact marginal sums at every node.
inline std::array<double, 2> sc_normalize(std::array<double, 2> p) {
  double s = p[0] + p[1];
  if (s <= 0.0) return {0.0, 0.0};
  return {p[0] / s, p[1] / s};
}

// Check-node combination: likelihood of the first bit of a pair with the
// second marginalized uniformly.
inline std::array<double, 2> sc_f(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  return sc_normalize({a[0] * b[0] + a[1] * b[1], a[0] * b[1] + a[1] * b[0]});
}

// Variable-node combination once the first bit of the pair is known.
inline std::array<double, 2> sc_g(const std::array<double, 2>& a, const std::array<double, 2>& b,
                                  int first_bit) {
  return sc_normalize({a[std::size_t(first_bit)] * b[0], a[std::size_t(first_bit ^ 1)] * b[1]});
}

// Message-passing state over the combining tree. A node at level l covers a
// contiguous output segment; its first child carries the parity stream, the
// second the pass-through stream. Indices are served in order, so each even
// request reuses the child messages stored by the preceding odd request.
class ClassicalSc {
 public:
  ClassicalSc(unsigned depth, std::vector<std::array<double, 2>> leaf)
      : depth_(depth), leaf_(std::move(leaf)) {
    la_.resize(depth_);
    lb_.resize(depth_);
    lastv_.resize(depth_);
    for (unsigned l = 0; l < depth_; ++l) {
      la_[l].resize(std::size_t(1) << l);
      lb_[l].resize(std::size_t(1) << l);
      lastv_[l].resize(std::size_t(1) << l, 0);
    }
  }

  std::array<double, 2> request(unsigned lev, std::size_t node, std::size_t index) {
    if (lev == depth_) return leaf_[node];
    std::size_t pair = (index + 1) / 2;
    if (index & 1u) {
      la_[lev][node] = request(lev + 1, 2 * node, pair);
      lb_[lev][node] = request(lev + 1, 2 * node + 1, pair);
      return sc_f(la_[lev][node], lb_[lev][node]);
    }
    return sc_g(la_[lev][node], lb_[lev][node], lastv_[lev][node]);
  }

  void commit(unsigned lev, std::size_t node, std::size_t index, int value) {
    if (lev == depth_) return;
    if (index & 1u) {
      lastv_[lev][node] = value;
      return;
    }
    commit(lev + 1, 2 * node, index / 2, lastv_[lev][node] ^ value);
    commit(lev + 1, 2 * node + 1, index / 2, value);
  }

 private:
  unsigned depth_;
  std::vector<std::array<double, 2>> leaf_;
  std::vector<std::vector<std::array<double, 2>>> la_, lb_;
  std::vector<std::vector<int>> lastv_;
};

}  // namespace detail

// Exact successive-cancellation decode of one received word. Frozen positions
// are forced; information positions take the more likely value, ties to 0.
// Normalized likelihoods closer than tol::eig count as tied, which resolves
// exact ties the same way regardless of summation order, and matches the
// measurement decoder's zero-eigenvalue rule.
inline Bits classical_sc_decode(const PolarCode& code, const ClassicalDMC& dmc,
                                const std::vector<int>& received) {
  detail::check_code(code, "classical_sc_decode");
  std::size_t block_len = code.block_len;
  if (received.size() != block_len) throw BadLength("classical_sc_decode: wrong received length");
  if (dmc.input_size() != 2)
    throw InvalidDistribution("classical_sc_decode: binary-input channel required");
  for (int y : received)
    if (y < 0 || y >= dmc.output_size())
      throw ConfigError("classical_sc_decode: received symbol outside the output alphabet");

  unsigned depth = log2_exact(block_len);
  std::vector<std::array<double, 2>> leaf(block_len);
  for (std::size_t t = 0; t < block_len; ++t)
    leaf[t] = {dmc.transition[0][std::size_t(received[t])],
               dmc.transition[1][std::size_t(received[t])]};
  detail::ClassicalSc sc(depth, std::move(leaf));
  auto [frozen_mask, frozen_at] = detail::frozen_layout(code);

  Bits u(block_len);
  for (std::size_t i = 1; i <= block_len; ++i) {
    std::array<double, 2> lik = sc.request(0, 0, i);
    int v = frozen_mask[i] ? int(frozen_at[i]) : (lik[1] > lik[0] + tol::eig ? 1 : 0);
    u[i - 1] = std::uint8_t(v);
    sc.commit(0, 0, i, v);
  }
  return u;
}

// ---------------------------------------------------------------------------
// Quantum sequential measurement decoding.

// Measurement family of the sequential decoder: at step i on a branch word
// holding the i-1 prior input bits, the outcome-0 projector is the projector
// onto the nonnegative eigenspace of sqrt(rho0-bar) - sqrt(rho1-bar), where
// rho_t-bar is the branch output state averaged uniformly over the later
// inputs. Frozen steps measure nothing (identity). Projectors are built on
// demand and cached per (step, branch).
struct QuantumSCDecoder {
  PolarCode code;
  CqChannel channel;
  std::uint64_t budget = kDefaultBudgetBytes;
  std::vector<std::uint8_t> frozen_mask;  // 1-based, nonzero marks a frozen step
  Bits frozen_at;                         // 1-based frozen values
  mutable std::map<std::pair<int, std::size_t>, Cmat> projectors;

  // Unnormalized sums over the free later inputs of the joint output state,
  // for target bit 0 and 1 on the given branch.
  std::pair<Cmat, Cmat> branch_sums(int step, std::size_t branch) const {
    detail::SplitShape shape = detail::make_shape(code.block_len, step, SplitOrder::standard);
    auto xtab = detail::encode_table(code.block_len);
    Eigen::Index dimj = Eigen::Index(detail::checked_dim_pow(
        std::uint64_t(channel.output_dim()), unsigned(code.block_len), "branch_sums"));
    Cmat s0 = Cmat::Zero(dimj, dimj), s1 = s0;
    for (std::size_t t = 0; t < 2; ++t)
      for (std::size_t f = 0; f < (std::size_t(1) << shape.free_bits); ++f) {
        std::size_t x = xtab[shape.assemble(branch, t, f)];
        (t ? s1 : s0) += detail::tensor_outputs(channel.outputs, x, unsigned(code.block_len));
      }
    return {std::move(s0), std::move(s1)};
  }

  // The two sums share a normalization, so their square-root difference has
  // the same eigenspace signs as the normalized version.
  const Cmat& projector0(int step, std::size_t branch) const {
    auto key = std::make_pair(step, branch);
    auto it = projectors.find(key);
    if (it != projectors.end()) return it->second;
    auto [s0, s1] = branch_sums(step, branch);
    Cmat p = nonneg_eigenspace_projector(Cmat(matrix_sqrt(s0).m - matrix_sqrt(s1).m)).m;
    return projectors.emplace(key, std::move(p)).first->second;
  }
};

inline QuantumSCDecoder make_quantum_sc_decoder(const PolarCode& code, const CqChannel& w,
                                                std::uint64_t budget = kDefaultBudgetBytes) {
  detail::check_code(code, "quantum sc decoder");
  if (w.input_size() != 2)
    throw InvalidDistribution("quantum sc decoder: binary-input channel required");
  std::uint64_t dimj = detail::checked_dim_pow(std::uint64_t(w.output_dim()),
                                               unsigned(code.block_len), "quantum sc decoder");
  std::uint64_t bytes = detail::sat_mul(std::uint64_t(1) << code.block_len,
                                        detail::sat_mul(dimj, detail::sat_mul(dimj, 16)));
  detail::check_budget(bytes, budget, "quantum sc decoder");
  auto [mask, at] = detail::frozen_layout(code);
  return QuantumSCDecoder{code, w, budget, std::move(mask), std::move(at), {}};
}

struct DecodingTranscript {
  Bits true_input;
  Bits decoded;  // per-step more likely outcome along the true-prefix run, ties to 0
  std::vector<std::array<double, 2>> step_probs;  // outcome probabilities given the true prefix
  bool success = false;
};

struct QuantumScResult {
  double genie_success = 0.0;    // product of correct-outcome weights along the true path
  double decoder_success = 0.0;  // correct-word weight summed from the full outcome tree
  std::vector<std::pair<std::size_t, double>> outcome_distribution;  // (decoded word, probability)
  DecodingTranscript transcript;
};

namespace detail {

inline void sc_outcome_tree(const QuantumSCDecoder& dec, std::size_t step, std::size_t prefix,
                            const Cmat& state, std::vector<std::pair<std::size_t, double>>& out) {
  std::size_t block_len = dec.code.block_len;
  if (step > block_len) {
    out.emplace_back(prefix, state.trace().real());
    return;
  }
  if (dec.frozen_mask[step]) {
    std::size_t v = dec.frozen_at[step];
    sc_outcome_tree(dec, step + 1, prefix | (v << (step - 1)), state, out);
    return;
  }
  const Cmat& p0 = dec.projector0(int(step), prefix);
  Cmat ps = p0 * state;
  Cmat b0 = ps * p0;
  Cmat b1 = state - ps - ps.adjoint() + b0;  // (1 - P) state (1 - P), state Hermitian
  sc_outcome_tree(dec, step + 1, prefix, b0, out);
  sc_outcome_tree(dec, step + 1, prefix | (std::size_t(1) << (step - 1)), b1, out);
}

}  // namespace detail

// Exact sequential-measurement decoding for a fixed input word. Two figures
// are computed along different routes: the success weight along the true
// outcome path (each projector conditioned on the true prior bits), and the
// same event read off the full outcome tree in which later projectors
// condition on earlier measured outcomes. They agree because the only tree
// path that decodes every bit correctly applies exactly the true-path
// projector sequence. The input word must match the decoder's frozen values
// at the frozen positions.
inline QuantumScResult quantum_sc_decode_exact(const QuantumSCDecoder& dec, const Bits& u) {
  std::size_t block_len = dec.code.block_len;
  if (u.size() != block_len) throw BadLength("quantum_sc_decode_exact: wrong input length");
  for (std::size_t i = 1; i <= block_len; ++i)
    if (dec.frozen_mask[i] && (u[i - 1] & 1u) != dec.frozen_at[i])
      throw ConfigError("quantum_sc_decode_exact: input disagrees with a frozen value");
  std::uint64_t dimj = detail::checked_dim_pow(std::uint64_t(dec.channel.output_dim()),
                                               unsigned(block_len), "quantum_sc_decode_exact");
  std::uint64_t bytes = detail::sat_mul(std::uint64_t(1) << block_len,
                                        detail::sat_mul(dimj, detail::sat_mul(dimj, 16)));
  detail::check_budget(bytes, dec.budget, "quantum_sc_decode_exact");

  std::size_t uw = bits_to_word(u);
  Cmat rho = detail::tensor_outputs(dec.channel.outputs, detail::encode_table(block_len)[uw],
                                    unsigned(block_len));

  QuantumScResult res;
  res.transcript.true_input = u;
  res.transcript.decoded.assign(block_len, 0);
  res.transcript.step_probs.assign(block_len, {0.0, 0.0});

  // True-path run.
  Cmat state = rho;
  double mass = 1.0;
  for (std::size_t i = 1; i <= block_len; ++i) {
    if (dec.frozen_mask[i]) {
      int v = dec.frozen_at[i];
      res.transcript.step_probs[i - 1][std::size_t(v)] = 1.0;
      res.transcript.decoded[i - 1] = std::uint8_t(v);
      continue;
    }
    std::size_t branch = uw & ((std::size_t(1) << (i - 1)) - 1);
    const Cmat& p0 = dec.projector0(int(i), branch);
    Cmat ps = p0 * state;
    double p_zero = mass > 0.0 ? std::clamp(ps.trace().real() / mass, 0.0, 1.0) : 0.0;
    res.transcript.step_probs[i - 1] = {p_zero, 1.0 - p_zero};
    res.transcript.decoded[i - 1] = std::uint8_t(1.0 - p_zero > p_zero ? 1 : 0);
    Cmat b0 = ps * p0;
    if (u[i - 1] == 0)
      state = std::move(b0);
    else
      state = state - ps - ps.adjoint() + b0;
    mass = state.trace().real();
  }
  res.genie_success = state.trace().real();
  res.transcript.success = res.transcript.decoded == u;

  // Full outcome tree, frozen steps pass through without branching.
  detail::sc_outcome_tree(dec, 1, 0, rho, res.outcome_distribution);
  double total = 0.0;
  for (const auto& [word, p] : res.outcome_distribution) {
    total += p;
    if (word == uw) res.decoder_success = p;
  }
  if (std::abs(total - 1.0) > tol::num)
    throw InvariantViolation("quantum_sc_decode_exact: outcome tree mass is not one");
  return res;
}

struct BlockErrorReport {
  double p_error_exact = 0.0;
  double sen_bound = 0.0;       // 2 sqrt(sum of step errors)
  double gao_bound = 0.0;       // 4 times the sum of step errors
  double fidelity_bound = 0.0;  // twice the summed root fidelity over the info set
  std::vector<double> step_errors;  // average pair-test error per step, frozen steps zero
};

// Exact block-error statistics under the uniform average over all input
// words, so frozen patterns are averaged with the rest, plus the square-root
// measurement bounds derived from the per-step pair tests.
inline BlockErrorReport block_error(const PolarCode& code, const CqChannel& w,
                                    std::uint64_t budget = kDefaultBudgetBytes) {
  std::size_t block_len = code.block_len;
  QuantumSCDecoder dec = make_quantum_sc_decoder(code, w, budget);
  std::uint64_t dimj =
      detail::checked_dim_pow(std::uint64_t(w.output_dim()), unsigned(block_len), "block_error");
  if (block_len > 15)
    throw BudgetExceeded("block_error: enumeration over all input words limited to N <= 15");
  detail::check_budget(detail::sat_mul(std::uint64_t(1) << (2 * block_len),
                                       detail::sat_mul(dimj, detail::sat_mul(dimj, 16))),
                       budget, "block_error");

  BlockErrorReport rep;
  rep.step_errors.assign(block_len, 0.0);

  // Per-step average error of the branch pair tests.
  for (std::size_t i = 1; i <= block_len; ++i) {
    if (dec.frozen_mask[i]) continue;
    double eps = 0.0;
    std::size_t nbranch = std::size_t(1) << (i - 1);
    double m = double(std::size_t(1) << (block_len - i));  // free words per target value
    for (std::size_t b = 0; b < nbranch; ++b) {
      auto [s0, s1] = dec.branch_sums(int(i), b);
      const Cmat& p0 = dec.projector0(int(i), b);
      double e0 = (s0.trace().real() - (p0 * s0).trace().real()) / m;  // tr((1-P0) rho0-bar)
      double e1 = (p0 * s1).trace().real() / m;                        // tr(P0 rho1-bar)
      eps += 0.5 * (e0 + e1) / double(nbranch);
    }
    rep.step_errors[i - 1] = eps;
  }
  double eps_sum = 0.0;
  for (double e : rep.step_errors) eps_sum += e;
  rep.gao_bound = 4.0 * eps_sum;
  rep.sen_bound = 2.0 * std::sqrt(eps_sum);

  // Exact error: uniform average of one minus the true-path success weight.
  auto xtab = detail::encode_table(block_len);
  double fail = 0.0;
  for (std::size_t uw = 0; uw < (std::size_t(1) << block_len); ++uw) {
    Cmat state = detail::tensor_outputs(w.outputs, xtab[uw], unsigned(block_len));
    for (std::size_t i = 1; i <= block_len; ++i) {
      if (dec.frozen_mask[i]) continue;
      const Cmat& p0 = dec.projector0(int(i), uw & ((std::size_t(1) << (i - 1)) - 1));
      Cmat ps = p0 * state;
      Cmat b0 = ps * p0;
      if (((uw >> (i - 1)) & 1u) == 0)
        state = std::move(b0);
      else
        state = state - ps - ps.adjoint() + b0;
    }
    fail += 1.0 - state.trace().real();
  }
  rep.p_error_exact = fail / double(std::size_t(1) << block_len);

  std::vector<double> fresh;
  const std::vector<double>* z = &code.record.sqrt_fidelity;
  if (z->size() != block_len) {
    fresh = split_params(w, block_len).sqrt_fidelity;
    z = &fresh;
  }
  for (int i : code.info_set) rep.fidelity_bound += 2.0 * (*z)[std::size_t(i) - 1];
  return rep;
}

struct McBlockError {
  double p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t errors = 0;
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t block) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (block + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline double unit_double(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

}  // namespace detail

// Monte Carlo block error with a Wilson 95% interval. Trials are processed in
// fixed blocks with per-block derived seeds, so the result is identical for
// any worker count.
inline McBlockError mc_block_error(const PolarCode& code, const ClassicalDMC& dmc,
                                   std::uint64_t trials, std::uint64_t seed, unsigned threads = 1) {
  detail::check_code(code, "mc_block_error");
  if (trials == 0) throw ConfigError("mc_block_error: at least one trial required");
  if (dmc.input_size() != 2)
    throw InvalidDistribution("mc_block_error: binary-input channel required");
  const std::uint64_t kBlock = 4096;
  std::size_t nblocks = std::size_t((trials + kBlock - 1) / kBlock);
  std::vector<std::uint64_t> block_errors(nblocks, 0);
  auto [frozen_mask, frozen_at] = detail::frozen_layout(code);

  auto run_block = [&](std::size_t b) {
    std::mt19937_64 rng(detail::mix_seed(seed, b));
    std::uint64_t lo = std::uint64_t(b) * kBlock;
    std::uint64_t hi = std::min<std::uint64_t>(trials, lo + kBlock);
    std::uint64_t errs = 0;
    Bits u(code.block_len, 0);
    std::vector<int> y(code.block_len);
    for (std::uint64_t t = lo; t < hi; ++t) {
      for (std::size_t i = 1; i <= code.block_len; ++i)
        u[i - 1] = frozen_mask[i] ? frozen_at[i] : std::uint8_t(rng() & 1u);
      Bits x = encode(u);
      for (std::size_t j = 0; j < code.block_len; ++j) {
        double r = detail::unit_double(rng), acc = 0.0;
        const auto& row = dmc.transition[x[j]];
        int pick = int(row.size()) - 1;
        for (std::size_t k = 0; k < row.size(); ++k) {
          acc += row[k];
          if (r < acc) {
            pick = int(k);
            break;
          }
        }
        y[j] = pick;
      }
      if (classical_sc_decode(code, dmc, y) != u) ++errs;
    }
    block_errors[b] = errs;
  };

  unsigned workers = std::max(1u, threads);
  if (workers == 1 || nblocks == 1) {
    for (std::size_t b = 0; b < nblocks; ++b) run_block(b);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    std::size_t nw = std::min<std::size_t>(workers, nblocks);
    for (std::size_t t = 0; t < nw; ++t)
      pool.emplace_back([&] {
        for (std::size_t b = next.fetch_add(1); b < nblocks; b = next.fetch_add(1)) run_block(b);
      });
    for (auto& th : pool) th.join();
  }

  McBlockError out;
  out.trials = trials;
  for (std::uint64_t e : block_errors) out.errors += e;
  double nn = double(trials);
  double p = double(out.errors) / nn;
  const double z = 1.959963984540054;  // 97.5% normal quantile
  double denom = 1.0 + z * z / nn;
  double center = (p + z * z / (2.0 * nn)) / denom;
  double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
  out.p_hat = p;
  out.ci_low = std::max(0.0, center - half);
  out.ci_high = std::min(1.0, center + half);
  return out;
}

}  // namespace polarlab
