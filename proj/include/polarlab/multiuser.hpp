// Monotone chain rules for the multiple access channel: decode paths and
// their exact rate pairs, neighbor distance, path scaling, per-step split
// channels, joint successive-cancellation decoding, and k-sender path
// enumeration.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <iterator>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "channels.hpp"
#include "common.hpp"
#include "polar_core.hpp"
#include "qmath.hpp"
#include "sc_decoder.hpp"

namespace polarlab {

// ---------------------------------------------------------------------------
// Decode paths.

// Decoding order for a k-sender block: symbol b_t names the sender whose next
// input bit is settled at step t. A path is an interleaving, so the relative
// order within each sender is preserved by construction; per-sender counters
// are derived, never stored.
struct DecodePath {
  int num_senders = 2;
  std::vector<std::uint8_t> symbols;  // values in [0, num_senders)

  std::vector<int> sender_counts() const {
    std::vector<int> c(num_senders, 0);
    for (auto s : symbols) ++c[s];
    return c;
  }
};

inline std::string path_literal(const DecodePath& p) {
  std::string s;
  s.reserve(p.symbols.size());
  for (auto b : p.symbols) s.push_back(char('0' + b));
  return s;
}

// Parses a path literal over the digit alphabet {0..k-1}. With num_senders
// zero the alphabet size is deduced from the largest digit (at least two).
inline DecodePath make_path(const std::string& literal, int num_senders = 0) {
  if (literal.empty()) throw ParseError("make_path: empty literal");
  DecodePath p;
  int top = 0;
  for (char ch : literal) {
    if (ch < '0' || ch > '9') throw ParseError("make_path: literal must use digits 0..9");
    p.symbols.push_back(std::uint8_t(ch - '0'));
    top = std::max(top, ch - '0');
  }
  p.num_senders = num_senders > 0 ? num_senders : std::max(2, top + 1);
  if (top >= p.num_senders) throw ConfigError("make_path: symbol outside the sender alphabet");
  auto counts = p.sender_counts();
  for (int c : counts)
    if (c != counts[0]) throw NonMonotonePath("make_path: senders appear unequally often");
  return p;
}

// Each symbol repeated k times in place, a monotone chain rule for the
// k-fold larger block.
inline DecodePath scale_path(const DecodePath& p, int k) {
  if (k < 1) throw ConfigError("scale_path: repetition factor must be positive");
  DecodePath out;
  out.num_senders = p.num_senders;
  out.symbols.reserve(p.symbols.size() * std::size_t(k));
  for (auto s : p.symbols) out.symbols.insert(out.symbols.end(), std::size_t(k), s);
  return out;
}

// Two binary paths are neighbors when one is the other with the symbols at
// two positions transposed, those symbols differ, and every symbol strictly
// between the two positions is the same.
inline bool paths_are_neighbors(const DecodePath& a, const DecodePath& b) {
  if (a.num_senders != 2 || b.num_senders != 2)
    throw ConfigError("paths_are_neighbors: defined for two-sender paths");
  if (a.symbols.size() != b.symbols.size()) return false;
  std::vector<std::size_t> diff;
  for (std::size_t t = 0; t < a.symbols.size(); ++t)
    if (a.symbols[t] != b.symbols[t]) diff.push_back(t);
  if (diff.size() != 2) return false;
  std::size_t i = diff[0], j = diff[1];
  if (a.symbols[i] == a.symbols[j]) return false;
  if (b.symbols[i] != a.symbols[j] || b.symbols[j] != a.symbols[i]) return false;
  for (std::size_t t = i + 1; t < j; ++t)
    if (a.symbols[t] != a.symbols[i + 1]) return false;
  return true;
}

// The N+1 paths 0^i 1^N 0^{N-i}. Consecutive members are neighbors, which is
// re-checked here because the density of their rate pairs rests on it.
inline std::vector<DecodePath> nu_class_paths(int block_len) {
  if (block_len < 1) throw ConfigError("nu_class_paths: block length must be positive");
  std::vector<DecodePath> out;
  out.reserve(std::size_t(block_len) + 1);
  for (int i = 0; i <= block_len; ++i) {
    DecodePath p;
    p.num_senders = 2;
    p.symbols.assign(std::size_t(i), 0);
    p.symbols.insert(p.symbols.end(), std::size_t(block_len), 1);
    p.symbols.insert(p.symbols.end(), std::size_t(block_len - i), 0);
    out.push_back(std::move(p));
  }
  for (std::size_t t = 0; t + 1 < out.size(); ++t)
    if (!paths_are_neighbors(out[t], out[t + 1]))
      throw InvariantViolation("nu_class_paths: consecutive members fail the neighbor predicate");
  return out;
}

namespace detail {

inline void check_mac_path(const CqMac& mac, const DecodePath& path, int block_len,
                           const char* where) {
  if (path.num_senders != mac.senders)
    throw ConfigError(std::string(where) + ": path and channel sender counts differ");
  if (block_len < 1 || !is_pow2(std::size_t(block_len)))
    throw BadLength(std::string(where) + ": block length must be a power of two");
  if (path.symbols.size() != std::size_t(mac.senders) * std::size_t(block_len))
    throw NonMonotonePath(std::string(where) + ": path length must be senders times block length");
  for (auto s : path.symbols)
    if (int(s) >= mac.senders) throw ConfigError(std::string(where) + ": path symbol out of range");
  for (int c : path.sender_counts())
    if (c != block_len)
      throw NonMonotonePath(std::string(where) + ": each sender must appear block-length times");
}

// Bit position inside a packed configuration word feeding each path step:
// sender s's input word occupies bits [s*n, (s+1)*n) and step t consumes
// that sender's next unseen bit.
inline std::vector<int> path_bit_shifts(const DecodePath& path, int n) {
  std::vector<int> taken(path.num_senders, 0), shift;
  shift.reserve(path.symbols.size());
  for (auto s : path.symbols) shift.push_back(int(s) * n + taken[s]++);
  return shift;
}

// Configuration bits permuted into path order: bit t-1 of the result holds
// the input bit settled at step t.
inline std::vector<std::uint32_t> mac_path_words(const DecodePath& path, int n) {
  auto shift = path_bit_shifts(path, n);
  std::vector<std::uint32_t> pw(std::size_t(1) << shift.size(), 0);
  for (std::size_t c = 0; c < pw.size(); ++c)
    for (std::size_t t = 0; t < shift.size(); ++t)
      pw[c] |= std::uint32_t((c >> shift[t]) & 1u) << t;
  return pw;
}

// Joint block output for one configuration of already-encoded words.
inline Cmat mac_tensor_output(const CqMac& mac, const std::vector<std::uint32_t>& xw, int n) {
  Cmat acc = Cmat::Identity(1, 1);
  for (int t = 0; t < n; ++t) {
    std::size_t w = 0;
    for (int s = 0; s < mac.senders; ++s) w = (w << 1) | ((xw[s] >> t) & 1u);
    acc = kron(acc, mac.outputs[w]);
  }
  return acc;
}

inline std::vector<double> mac_tensor_diag(const CqMac& mac, const std::vector<std::uint32_t>& xw,
                                           int n) {
  std::vector<double> acc{1.0};
  for (int t = 0; t < n; ++t) {
    std::size_t w = 0;
    for (int s = 0; s < mac.senders; ++s) w = (w << 1) | ((xw[s] >> t) & 1u);
    const Cmat& letter = mac.outputs[w];
    std::vector<double> next(acc.size() * std::size_t(letter.rows()));
    for (std::size_t i = 0; i < acc.size(); ++i)
      for (Eigen::Index d = 0; d < letter.rows(); ++d)
        next[i * std::size_t(letter.rows()) + std::size_t(d)] = acc[i] * letter(d, d).real();
    acc = std::move(next);
  }
  return acc;
}

// Joint block outputs for every packed configuration word.
inline std::vector<Cmat> mac_joint_states(const CqMac& mac, int n) {
  auto xtab = encode_table(std::size_t(n));
  std::size_t mask = (std::size_t(1) << n) - 1;
  std::vector<Cmat> joint(std::size_t(1) << (std::size_t(mac.senders) * n));
  std::vector<std::uint32_t> xw(mac.senders);
  for (std::size_t c = 0; c < joint.size(); ++c) {
    for (int s = 0; s < mac.senders; ++s) xw[s] = xtab[(c >> (std::size_t(s) * n)) & mask];
    joint[c] = mac_tensor_output(mac, xw, n);
  }
  return joint;
}

inline bool mac_is_diagonal(const CqMac& mac) {
  for (const auto& o : mac.outputs)
    if (!is_diagonal(o)) return false;
  return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Exact rate pairs along a path.

struct RatePoint {
  std::vector<double> rate;       // bits per channel use, one entry per sender
  double mutual_info = 0.0;       // single-use mutual information of all senders with the output
  std::vector<double> step_info;  // per-step conditional mutual information of the block

  double sum() const {
    double s = 0.0;
    for (double r : rate) s += r;
    return s;
  }
};

// Exact per-step conditional mutual informations along the path, from full
// enumeration of both senders' blocks: I_t = E_{t-1} - E_t where E_j is the
// average block-output entropy given the first j settled bits. The telescoped
// sum is checked against the independently computed single-use mutual
// information. Enumeration stops at N = 4 dense and N = 6 diagonal.
inline RatePoint chain_rule_rates(const CqMac& mac, const DecodePath& path, int block_len,
                                  std::uint64_t budget = kDefaultBudgetBytes) {
  detail::check_mac_path(mac, path, block_len, "chain_rule_rates");
  const int steps = mac.senders * block_len;
  const bool diag = detail::mac_is_diagonal(mac);
  if (block_len > (diag ? 6 : 4))
    throw BudgetExceeded("chain_rule_rates: exact enumeration caps at block length 4 (6 diagonal)");
  std::uint64_t dimj = detail::checked_dim_pow(std::uint64_t(mac.output_dim()),
                                               unsigned(block_len), "chain_rule_rates");
  std::uint64_t per_state =
      diag ? detail::sat_mul(dimj, 8) : detail::sat_mul(dimj, detail::sat_mul(dimj, 16));
  detail::check_budget(detail::sat_mul(std::uint64_t(2) << steps, per_state), budget,
                       "chain_rule_rates");

  const std::size_t configs = std::size_t(1) << steps;
  auto pw = detail::mac_path_words(path, block_len);
  std::vector<double> level(std::size_t(steps) + 1, 0.0);

  if (diag) {
    auto xtab = detail::encode_table(std::size_t(block_len));
    std::size_t wmask = (std::size_t(1) << block_len) - 1;
    std::vector<std::vector<double>> joint(configs);
    std::vector<std::uint32_t> xw(mac.senders);
    for (std::size_t c = 0; c < configs; ++c) {
      for (int s = 0; s < mac.senders; ++s)
        xw[s] = xtab[(c >> (std::size_t(s) * block_len)) & wmask];
      joint[c] = detail::mac_tensor_diag(mac, xw, block_len);
    }
    for (int j = 0; j <= steps; ++j) {
      std::size_t nb = std::size_t(1) << j, mask = nb - 1;
      std::vector<std::vector<double>> bucket(nb, std::vector<double>(dimj, 0.0));
      for (std::size_t c = 0; c < configs; ++c) {
        auto& dst = bucket[pw[c] & mask];
        for (std::size_t d = 0; d < dst.size(); ++d) dst[d] += joint[c][d];
      }
      double count = double(configs) / double(nb), h = 0.0;
      for (const auto& b : bucket) h += detail::vector_entropy(b, count);
      level[j] = h / double(nb);
    }
  } else {
    auto joint = detail::mac_joint_states(mac, block_len);
    for (int j = 0; j <= steps; ++j) {
      std::size_t nb = std::size_t(1) << j, mask = nb - 1;
      std::vector<Cmat> bucket(nb, Cmat::Zero(Eigen::Index(dimj), Eigen::Index(dimj)));
      for (std::size_t c = 0; c < configs; ++c) bucket[pw[c] & mask] += joint[c];
      double count = double(configs) / double(nb), h = 0.0;
      for (const auto& b : bucket) h += von_neumann_entropy(Cmat(b / count));
      level[j] = h / double(nb);
    }
  }

  RatePoint rp;
  rp.step_info.resize(steps);
  rp.rate.assign(mac.senders, 0.0);
  double total = 0.0;
  for (int t = 0; t < steps; ++t) {
    double info = level[t] - level[t + 1];
    if (info < -tol::chain)
      throw InvariantViolation("chain_rule_rates: negative conditional mutual information");
    rp.step_info[t] = std::max(info, 0.0);
    rp.rate[path.symbols[t]] += rp.step_info[t];
    total += rp.step_info[t];
  }
  for (double& r : rp.rate) r /= double(block_len);
  std::vector<double> prior(mac.outputs.size(), 1.0 / double(mac.outputs.size()));
  rp.mutual_info = holevo_information(prior, mac.outputs);
  if (std::abs(total - double(block_len) * rp.mutual_info) > tol::chain)
    throw InvariantViolation("chain_rule_rates: chain rule does not telescope to the block mutual information");
  return rp;
}

// Distance between two paths: the common absolute difference of their rate
// pairs. Both senders' differences are computed and must agree, which holds
// because both rate pairs share the same sum.
inline double path_distance(const DecodePath& a, const DecodePath& b, const CqMac& mac,
                            int block_len, std::uint64_t budget = kDefaultBudgetBytes) {
  if (mac.senders != 2) throw ConfigError("path_distance: defined for two-sender paths");
  RatePoint ra = chain_rule_rates(mac, a, block_len, budget);
  RatePoint rb = chain_rule_rates(mac, b, block_len, budget);
  double du = std::abs(ra.rate[0] - rb.rate[0]);
  double dv = std::abs(ra.rate[1] - rb.rate[1]);
  if (std::abs(du - dv) > tol::chain)
    throw InvariantViolation("path_distance: the two senders' rate differences disagree");
  return 0.5 * (du + dv);
}

struct ScalingCheck {
  RatePoint base;     // rates of the path on its own block
  RatePoint doubled;  // rates of the twice-repeated path on the doubled block
};

// One extra polarization step leaves the rate pair unchanged: evaluates the
// path on block N and its 2-scaling on block 2N and requires equal rates.
inline ScalingCheck scaling_rate_invariance(const CqMac& mac, const DecodePath& path,
                                            int block_len,
                                            std::uint64_t budget = kDefaultBudgetBytes) {
  ScalingCheck out{chain_rule_rates(mac, path, block_len, budget),
                   chain_rule_rates(mac, scale_path(path, 2), 2 * block_len, budget)};
  for (int s = 0; s < mac.senders; ++s)
    if (std::abs(out.base.rate[s] - out.doubled.rate[s]) > tol::chain)
      throw InvariantViolation("scaling_rate_invariance: doubled path changes a rate");
  return out;
}

// ---------------------------------------------------------------------------
// Split channels and the joint decoder.

// One decoding step along a path: for every branch (assignment of the bits
// settled at earlier steps) the conditioned averages of the joint block
// output for the two values of the target bit. Branch weights are uniform by
// construction; bit t-1 of a branch word holds the step-t value.
struct MacSplitChannel {
  int step = 0;    // 1-based position along the path
  int sender = 0;  // path symbol at this step
  int i = 0;       // sender-0 bits settled through this step
  int j = 0;       // sender-1 bits settled through this step
  std::vector<std::array<Cmat, 2>> branch;  // [branch word][target bit], each a density matrix
};

inline MacSplitChannel mac_split_channel(const CqMac& mac, const DecodePath& path, int block_len,
                                         int step, std::uint64_t budget = kDefaultBudgetBytes) {
  if (mac.senders != 2) throw ConfigError("mac_split_channel: defined for two senders");
  detail::check_mac_path(mac, path, block_len, "mac_split_channel");
  const int steps = 2 * block_len;
  if (step < 1 || step > steps) throw ConfigError("mac_split_channel: step out of range");
  std::uint64_t dimj = detail::checked_dim_pow(std::uint64_t(mac.output_dim()),
                                               unsigned(block_len), "mac_split_channel");
  detail::check_budget(detail::sat_mul(std::uint64_t(2) << steps,
                                       detail::sat_mul(dimj, detail::sat_mul(dimj, 16))),
                       budget, "mac_split_channel");

  auto joint = detail::mac_joint_states(mac, block_len);
  auto pw = detail::mac_path_words(path, block_len);
  MacSplitChannel out;
  out.step = step;
  out.sender = path.symbols[std::size_t(step) - 1];
  for (int t = 0; t < step; ++t) (path.symbols[std::size_t(t)] == 0 ? out.i : out.j) += 1;

  std::size_t nb = std::size_t(1) << (step - 1);
  std::vector<std::array<Cmat, 2>> bucket(
      nb, {Cmat::Zero(Eigen::Index(dimj), Eigen::Index(dimj)),
           Cmat::Zero(Eigen::Index(dimj), Eigen::Index(dimj))});
  for (std::size_t c = 0; c < joint.size(); ++c)
    bucket[pw[c] & (nb - 1)][(pw[c] >> (step - 1)) & 1u] += joint[c];
  double count = double(joint.size()) / double(2 * nb);
  out.branch.reserve(nb);
  for (auto& pair : bucket) {
    DensityMatrix b0(Cmat(pair[0] / count)), b1(Cmat(pair[1] / count));
    out.branch.push_back({std::move(b0.m), std::move(b1.m)});
  }
  return out;
}

// Per-sender polar codes decoded jointly along a path.
struct MacPolarCode {
  PolarCode code_u;  // sender 0
  PolarCode code_v;  // sender 1
  DecodePath path;
};

struct MacDecodeResult {
  double genie_success = 0.0;    // every measurement conditioned on the true prior bits
  double decoder_success = 0.0;  // weight of the all-correct word in the outcome tree
  std::vector<std::array<double, 2>> step_probs;  // outcome weights along the true-prefix run
};

namespace detail {

// Shared state of one joint decode: projectors are built on demand per
// (step, branch) from the path-conditioned averages, exactly as in the
// single-sender decoder; frozen steps measure nothing.
struct MacScContext {
  int steps = 0;
  std::vector<Cmat> joint;
  std::vector<std::uint32_t> pathword;
  std::vector<std::uint8_t> frozen_step;  // 1-based
  Bits frozen_val;                        // 1-based
  std::map<std::pair<int, std::size_t>, Cmat> projectors;

  const Cmat& projector0(int step, std::size_t branch) {
    auto key = std::make_pair(step, branch);
    auto it = projectors.find(key);
    if (it != projectors.end()) return it->second;
    std::size_t mask = (std::size_t(1) << (step - 1)) - 1;
    Cmat s0 = Cmat::Zero(joint[0].rows(), joint[0].cols()), s1 = s0;
    for (std::size_t c = 0; c < joint.size(); ++c) {
      if ((pathword[c] & mask) != branch) continue;
      ((pathword[c] >> (step - 1)) & 1u ? s1 : s0) += joint[c];
    }
    Cmat p = nonneg_eigenspace_projector(Cmat(matrix_sqrt(s0).m - matrix_sqrt(s1).m)).m;
    return projectors.emplace(key, std::move(p)).first->second;
  }

  void outcome_tree(int step, std::size_t prefix, const Cmat& state,
                    std::vector<std::pair<std::size_t, double>>& out) {
    if (step > steps) {
      out.emplace_back(prefix, state.trace().real());
      return;
    }
    if (frozen_step[std::size_t(step)]) {
      std::size_t v = frozen_val[std::size_t(step)];
      outcome_tree(step + 1, prefix | (v << (step - 1)), state, out);
      return;
    }
    const Cmat& p0 = projector0(step, prefix);
    Cmat ps = p0 * state;
    Cmat b0 = ps * p0;
    Cmat b1 = state - ps - ps.adjoint() + b0;  // (1 - P) state (1 - P), state Hermitian
    outcome_tree(step + 1, prefix, b0, out);
    outcome_tree(step + 1, prefix | (std::size_t(1) << (step - 1)), b1, out);
  }
};

}  // namespace detail

// Exact joint sequential-measurement decoding of a fixed input pair. Both
// success figures are computed: the weight along the true outcome path, and
// the all-correct word's weight in the full outcome tree where later
// measurements condition on earlier outcomes. They agree because only the
// all-correct tree path applies the true-path projector sequence. The inputs
// must match both codes' frozen values.
inline MacDecodeResult mac_sc_decode_exact(const MacPolarCode& mc, const CqMac& mac,
                                           const Bits& u, const Bits& v,
                                           std::uint64_t budget = kDefaultBudgetBytes) {
  if (mac.senders != 2) throw ConfigError("mac_sc_decode_exact: defined for two senders");
  detail::check_code(mc.code_u, "mac_sc_decode_exact");
  detail::check_code(mc.code_v, "mac_sc_decode_exact");
  if (mc.code_u.block_len != mc.code_v.block_len)
    throw LengthMismatch("mac_sc_decode_exact: per-sender block lengths differ");
  const int n = int(mc.code_u.block_len);
  detail::check_mac_path(mac, mc.path, n, "mac_sc_decode_exact");
  if (u.size() != std::size_t(n) || v.size() != std::size_t(n))
    throw BadLength("mac_sc_decode_exact: wrong input length");
  auto [mask_u, at_u] = detail::frozen_layout(mc.code_u);
  auto [mask_v, at_v] = detail::frozen_layout(mc.code_v);
  for (int t = 1; t <= n; ++t) {
    if (mask_u[std::size_t(t)] && (u[std::size_t(t) - 1] & 1u) != at_u[std::size_t(t)])
      throw ConfigError("mac_sc_decode_exact: sender-0 input disagrees with a frozen value");
    if (mask_v[std::size_t(t)] && (v[std::size_t(t) - 1] & 1u) != at_v[std::size_t(t)])
      throw ConfigError("mac_sc_decode_exact: sender-1 input disagrees with a frozen value");
  }
  std::uint64_t dimj =
      detail::checked_dim_pow(std::uint64_t(mac.output_dim()), unsigned(n), "mac_sc_decode_exact");
  detail::check_budget(detail::sat_mul(std::uint64_t(1) << (2 * n),
                                       detail::sat_mul(dimj, detail::sat_mul(dimj, 16))),
                       budget, "mac_sc_decode_exact");

  detail::MacScContext ctx;
  ctx.steps = 2 * n;
  ctx.joint = detail::mac_joint_states(mac, n);
  ctx.pathword = detail::mac_path_words(mc.path, n);
  ctx.frozen_step.assign(std::size_t(ctx.steps) + 1, 0);
  ctx.frozen_val.assign(std::size_t(ctx.steps) + 1, 0);
  std::array<int, 2> seen{0, 0};
  for (int t = 1; t <= ctx.steps; ++t) {
    int s = mc.path.symbols[std::size_t(t) - 1];
    int idx = ++seen[std::size_t(s)];
    ctx.frozen_step[std::size_t(t)] = (s == 0 ? mask_u : mask_v)[std::size_t(idx)];
    ctx.frozen_val[std::size_t(t)] = (s == 0 ? at_u : at_v)[std::size_t(idx)];
  }

  std::size_t c_true = bits_to_word(u) | (bits_to_word(v) << n);
  std::uint32_t tw = ctx.pathword[c_true];
  MacDecodeResult res;
  res.step_probs.assign(std::size_t(ctx.steps), {0.0, 0.0});

  Cmat state = ctx.joint[c_true];
  double mass = 1.0;
  for (int t = 1; t <= ctx.steps; ++t) {
    if (ctx.frozen_step[std::size_t(t)]) {
      res.step_probs[std::size_t(t) - 1][ctx.frozen_val[std::size_t(t)]] = 1.0;
      continue;
    }
    std::size_t branch = tw & ((std::size_t(1) << (t - 1)) - 1);
    const Cmat& p0 = ctx.projector0(t, branch);
    Cmat ps = p0 * state;
    double p_zero = mass > 0.0 ? std::clamp(ps.trace().real() / mass, 0.0, 1.0) : 0.0;
    res.step_probs[std::size_t(t) - 1] = {p_zero, 1.0 - p_zero};
    Cmat b0 = ps * p0;
    if (((tw >> (t - 1)) & 1u) == 0)
      state = std::move(b0);
    else
      state = state - ps - ps.adjoint() + b0;
    mass = state.trace().real();
  }
  res.genie_success = state.trace().real();

  std::vector<std::pair<std::size_t, double>> leaves;
  ctx.outcome_tree(1, 0, ctx.joint[c_true], leaves);
  double total = 0.0;
  for (const auto& [word, p] : leaves) {
    total += p;
    if (word == tw) res.decoder_success = p;
  }
  if (std::abs(total - 1.0) > tol::num)
    throw InvariantViolation("mac_sc_decode_exact: outcome tree mass is not one");
  return res;
}

// ---------------------------------------------------------------------------
// k-sender path enumeration.

namespace detail {

inline std::uint64_t binomial(unsigned n, unsigned r) {
  if (r > n) return 0;
  std::uint64_t c = 1;
  for (unsigned t = 1; t <= r; ++t) c = c * (n - r + t) / t;  // stays integral at each step
  return c;
}

inline void check_kuser(int senders, int block_len, const char* where) {
  if (senders < 2) throw ConfigError(std::string(where) + ": needs at least 2 senders");
  if (block_len < 1) throw ConfigError(std::string(where) + ": block length must be positive");
  if (senders * block_len > 20)
    throw BudgetExceeded(std::string(where) + ": path lattice above 20 steps");
}

}  // namespace detail

// Number of monotone interleavings, the multinomial (kN)! / (N!)^k. Exact in
// 64 bits for every admitted lattice since (kN)! <= 20!.
inline std::uint64_t kuser_path_count(int senders, int block_len) {
  detail::check_kuser(senders, block_len, "kuser_path_count");
  std::uint64_t total = 1;
  for (int s = 2; s <= senders; ++s)
    total *= detail::binomial(unsigned(s * block_len), unsigned(block_len));
  return total;
}

// Lazily enumerates every monotone interleaving in lexicographic order,
// starting from 0^N 1^N ... (k-1)^N. Lazy because the count is astronomical
// well inside the admitted lattice sizes.
class KUserPathRange {
 public:
  KUserPathRange(int senders, int block_len) : senders_(senders), block_len_(block_len) {
    detail::check_kuser(senders, block_len, "kuser_paths");
    first_.num_senders = senders;
    for (int s = 0; s < senders; ++s)
      first_.symbols.insert(first_.symbols.end(), std::size_t(block_len), std::uint8_t(s));
  }

  class iterator {
   public:
    using iterator_category = std::input_iterator_tag;
    using value_type = DecodePath;
    using difference_type = std::ptrdiff_t;
    using pointer = const DecodePath*;
    using reference = const DecodePath&;

    iterator() = default;
    explicit iterator(DecodePath start) : cur_(std::move(start)), live_(true) {}
    reference operator*() const { return cur_; }
    pointer operator->() const { return &cur_; }
    iterator& operator++() {
      if (!std::next_permutation(cur_.symbols.begin(), cur_.symbols.end())) live_ = false;
      return *this;
    }
    iterator operator++(int) {
      iterator tmp = *this;
      ++*this;
      return tmp;
    }
    bool operator==(const iterator& o) const {
      return live_ == o.live_ && (!live_ || cur_.symbols == o.cur_.symbols);
    }
    bool operator!=(const iterator& o) const { return !(*this == o); }

   private:
    DecodePath cur_;
    bool live_ = false;
  };

  iterator begin() const { return iterator(first_); }
  iterator end() const { return iterator(); }
  std::uint64_t count() const { return kuser_path_count(senders_, block_len_); }

 private:
  int senders_;
  int block_len_;
  DecodePath first_;
};

inline KUserPathRange kuser_paths(int senders, int block_len) {
  return KUserPathRange(senders, block_len);
}

// ---------------------------------------------------------------------------
// Rate tables.

// CSV rate table for two-sender paths; doubles carry full round-trip
// precision.
inline std::string rate_table_csv(const CqMac& mac, const std::vector<DecodePath>& paths,
                                  int block_len, std::uint64_t budget = kDefaultBudgetBytes) {
  if (mac.senders != 2) throw ConfigError("rate_table_csv: defined for two-sender tables");
  std::string out = "# path,R_x,R_y,sum,I_XY_B\n";
  char buf[160];
  for (const auto& p : paths) {
    RatePoint rp = chain_rule_rates(mac, p, block_len, budget);
    out += path_literal(p);
    std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g,%.17g\n", rp.rate[0], rp.rate[1],
                  rp.rate[0] + rp.rate[1], rp.mutual_info);
    out += buf;
  }
  return out;
}

}  // namespace polarlab
