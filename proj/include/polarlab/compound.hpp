// Universal coding over a finite set of candidate channels: per-member
// good/bad index sets, the four-way partition, recursive chaining alignment
// across block copies, decode-order generation, unequal-size frozen surplus,
// k-member iteration, per-sender alternating alignment for two-sender MACs,
// and exact chained decoding at small block lengths.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "multiuser.hpp"

namespace polarlab {

// ---------------------------------------------------------------------------
// Good/bad partition for a pair of member channels.

// An index is good for a member when its split-channel root fidelity is
// strictly below the threshold. Index sets hold 1-based split indices in
// ascending order; value tables are 0-based. good/bad are complementary per
// member, and the four intersection sets partition [1, N].
struct GoodBadPartition {
  std::size_t block_len = 0;
  double threshold = 0.0;
  std::vector<int> good1, bad1, good2, bad2;
  std::vector<int> both_good, first_only, second_only, both_bad;
  std::vector<double> sqrt_f1, sqrt_f2;
  std::vector<double> mutual_info1, mutual_info2;
};

inline GoodBadPartition partition(const CompoundCqSet& members, std::size_t block_len,
                                  double threshold,
                                  std::uint64_t budget = kDefaultBudgetBytes) {
  if (members.size() != 2) throw ConfigError("partition: exactly two member channels");
  SplitOptions opts;
  opts.budget = budget;
  GoodBadPartition p;
  p.block_len = block_len;
  p.threshold = threshold;
  SplitParams s1 = split_params(members.members[0], block_len, opts);
  SplitParams s2 = split_params(members.members[1], block_len, opts);
  p.sqrt_f1 = s1.sqrt_fidelity;
  p.sqrt_f2 = s2.sqrt_fidelity;
  p.mutual_info1 = s1.mutual_info;
  p.mutual_info2 = s2.mutual_info;
  for (std::size_t i = 1; i <= block_len; ++i) {
    (p.sqrt_f1[i - 1] < threshold ? p.good1 : p.bad1).push_back(int(i));
    (p.sqrt_f2[i - 1] < threshold ? p.good2 : p.bad2).push_back(int(i));
    bool g1 = p.sqrt_f1[i - 1] < threshold, g2 = p.sqrt_f2[i - 1] < threshold;
    (g1 ? (g2 ? p.both_good : p.first_only) : (g2 ? p.second_only : p.both_bad)).push_back(int(i));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Chaining schedules.

// One input slot of a chained code: block id (0-based), sender (1-based, 1
// for single-sender members), and that sender's split index (1-based; for a
// MAC this is the occurrence number of the sender along the decode path).
struct ChainSlot {
  int block = 0;
  int sender = 1;
  int index = 0;
  friend bool operator==(const ChainSlot&, const ChainSlot&) = default;
};

inline bool slot_before(const ChainSlot& a, const ChainSlot& b) {
  return std::tie(a.block, a.sender, a.index) < std::tie(b.block, b.sender, b.index);
}

// Alignment between two blocks: the target slot's input repeats the source
// slot's input, applied at encode time as a GF(2) addition onto the zeroed
// target, so the chained encoder stays linear. level records the doubling
// step that created the pair; copies made by later doublings keep the level.
struct AlignEdge {
  int level = 0;
  ChainSlot source, target;
  friend bool operator==(const AlignEdge&, const AlignEdge&) = default;
};

// A chained layout over 2^total_levels block copies. Slot lists are disjoint
// and block-major ascending: info slots carry free bits (the canonical input
// order), edge targets repeat their sources, residual slots stayed good for
// only some members and are frozen, frozen_surplus collects unpaired
// alignment candidates, base_frozen the indices bad for every member.
// decode_order holds, per member, every slot in that member's measurement
// sequence; good_sets/sqrt_f/mutual_info are indexed [member][sender-1].
struct ChainingSchedule {
  std::size_t block_len = 0;
  int num_members = 2;
  int num_senders = 1;
  int levels_per_stage = 0;
  int total_levels = 0;
  int blocks = 1;
  double threshold = 0.0;
  std::vector<AlignEdge> edges;
  std::vector<ChainSlot> info;
  std::vector<ChainSlot> residual;
  std::vector<ChainSlot> frozen_surplus;
  std::vector<ChainSlot> base_frozen;
  std::vector<std::vector<ChainSlot>> decode_order;
  std::vector<std::vector<std::vector<int>>> good_sets;
  std::vector<std::vector<std::vector<double>>> sqrt_f;
  std::vector<std::vector<std::vector<double>>> mutual_info;
  std::vector<std::string> member_paths;
};

namespace detail {

// Mask bit w-1 set means the slot is currently decodable by member w, either
// directly or through an aligned partner merged into this carrier.
struct ChainCarrier {
  ChainSlot slot;
  unsigned mask = 0;
};

struct ChainBuild {
  int blocks = 1;
  int num_members = 2;
  std::vector<ChainCarrier> carriers;
  std::vector<AlignEdge> edges;
  std::vector<ChainSlot> targets;
  std::vector<ChainSlot> frozen_surplus;
  std::vector<ChainSlot> base_frozen;
  std::vector<std::vector<int>> block_order;
};

// One recursion level: duplicate the whole build into a sibling copy with a
// block offset, then align carriers across the copies. Left-copy carriers
// passing left_pred pair first-with-first in canonical slot order with
// right-copy carriers passing right_pred; each pair records an edge, merges
// the target's mask into the source carrier, and absorbs the target slot.
// Unpaired candidates on either side freeze. right_member reads the new copy
// first in its block order; every other member keeps the original copy first.
template <class PredL, class PredR>
inline void chain_level(ChainBuild& b, int level, PredL left_pred, PredR right_pred,
                        int right_member) {
  const int off = b.blocks;
  auto shifted = [off](ChainSlot s) {
    s.block += off;
    return s;
  };
  const std::size_t nc = b.carriers.size();
  for (std::size_t c = 0; c < nc; ++c)
    b.carriers.push_back({shifted(b.carriers[c].slot), b.carriers[c].mask});
  const std::size_t ne = b.edges.size();
  for (std::size_t e = 0; e < ne; ++e)
    b.edges.push_back(
        {b.edges[e].level, shifted(b.edges[e].source), shifted(b.edges[e].target)});
  for (auto* list : {&b.targets, &b.frozen_surplus, &b.base_frozen}) {
    const std::size_t ns = list->size();
    for (std::size_t s = 0; s < ns; ++s) list->push_back(shifted((*list)[s]));
  }
  b.blocks *= 2;
  for (int w = 0; w < b.num_members; ++w) {
    std::vector<int>& ord = b.block_order[std::size_t(w)];
    const std::size_t nb = ord.size();
    if (w + 1 == right_member) {
      std::vector<int> next;
      next.reserve(2 * nb);
      for (std::size_t i = 0; i < nb; ++i) next.push_back(ord[i] + off);
      next.insert(next.end(), ord.begin(), ord.end());
      ord = std::move(next);
    } else {
      for (std::size_t i = 0; i < nb; ++i) ord.push_back(ord[i] + off);
    }
  }

  std::vector<std::size_t> left, right;
  for (std::size_t c = 0; c < b.carriers.size(); ++c) {
    if (b.carriers[c].slot.block < off) {
      if (left_pred(b.carriers[c])) left.push_back(c);
    } else if (right_pred(b.carriers[c])) {
      right.push_back(c);
    }
  }
  auto canonical = [&b](std::size_t x, std::size_t y) {
    return slot_before(b.carriers[x].slot, b.carriers[y].slot);
  };
  std::sort(left.begin(), left.end(), canonical);
  std::sort(right.begin(), right.end(), canonical);

  const std::size_t pairs = std::min(left.size(), right.size());
  std::vector<std::uint8_t> dead(b.carriers.size(), 0);
  for (std::size_t p = 0; p < pairs; ++p) {
    ChainCarrier& src = b.carriers[left[p]];
    ChainCarrier& tgt = b.carriers[right[p]];
    b.edges.push_back({level, src.slot, tgt.slot});
    src.mask |= tgt.mask;
    b.targets.push_back(tgt.slot);
    dead[right[p]] = 1;
  }
  for (std::size_t p = pairs; p < left.size(); ++p) {
    b.frozen_surplus.push_back(b.carriers[left[p]].slot);
    dead[left[p]] = 1;
  }
  for (std::size_t p = pairs; p < right.size(); ++p) {
    b.frozen_surplus.push_back(b.carriers[right[p]].slot);
    dead[right[p]] = 1;
  }
  std::vector<ChainCarrier> keep;
  keep.reserve(b.carriers.size() - pairs);
  for (std::size_t c = 0; c < b.carriers.size(); ++c)
    if (!dead[c]) keep.push_back(b.carriers[c]);
  b.carriers = std::move(keep);
}

// Doubling levels drive both block count and carrier storage, so an oversized
// request fails fast instead of exhausting memory.
inline void check_chain_levels(int total_levels, const char* where) {
  if (total_levels > 24)
    throw BudgetExceeded(std::string(where) + ": doubling levels exceed the supported range");
}

// Carriers surviving with every member bit are free slots; partial survivors
// are the reported residual. Slot lists come out block-major ascending, edges
// ordered by level then source.
inline void finish_schedule(ChainingSchedule& s, ChainBuild&& b,
                            const std::vector<std::vector<ChainSlot>>& member_steps) {
  s.blocks = b.blocks;
  const unsigned full = (b.num_members >= 32) ? ~0u : ((1u << b.num_members) - 1);
  for (const ChainCarrier& c : b.carriers)
    (c.mask == full ? s.info : s.residual).push_back(c.slot);
  s.frozen_surplus = std::move(b.frozen_surplus);
  s.base_frozen = std::move(b.base_frozen);
  s.edges = std::move(b.edges);
  for (auto* list : {&s.info, &s.residual, &s.frozen_surplus, &s.base_frozen})
    std::sort(list->begin(), list->end(), slot_before);
  std::sort(s.edges.begin(), s.edges.end(), [](const AlignEdge& a, const AlignEdge& e) {
    return std::make_tuple(a.level, a.source.block, a.source.sender, a.source.index) <
           std::make_tuple(e.level, e.source.block, e.source.sender, e.source.index);
  });
  s.decode_order.assign(std::size_t(b.num_members), {});
  for (int w = 0; w < b.num_members; ++w) {
    auto& ord = s.decode_order[std::size_t(w)];
    ord.reserve(b.block_order[std::size_t(w)].size() * member_steps[std::size_t(w)].size());
    for (int blk : b.block_order[std::size_t(w)])
      for (ChainSlot step : member_steps[std::size_t(w)]) {
        step.block = blk;
        ord.push_back(step);
      }
  }
}

}  // namespace detail

inline ChainingSchedule build_chaining(const GoodBadPartition& part, int levels) {
  if (levels < 1) throw ConfigError("build_chaining: at least one level");
  if (part.block_len < 1) throw ConfigError("build_chaining: empty partition");
  detail::check_chain_levels(levels, "build_chaining");

  detail::ChainBuild b;
  b.num_members = 2;
  b.block_order = {{0}, {0}};
  auto good = [](const std::vector<int>& set, int i) {
    return std::binary_search(set.begin(), set.end(), i);
  };
  for (std::size_t i = 1; i <= part.block_len; ++i) {
    unsigned mask = (good(part.good1, int(i)) ? 1u : 0u) | (good(part.good2, int(i)) ? 2u : 0u);
    if (mask == 0)
      b.base_frozen.push_back({0, 1, int(i)});
    else
      b.carriers.push_back({{0, 1, int(i)}, mask});
  }
  for (int l = 1; l <= levels; ++l)
    detail::chain_level(
        b, l, [](const detail::ChainCarrier& c) { return c.mask == 1u; },
        [](const detail::ChainCarrier& c) { return c.mask == 2u; }, 2);

  ChainingSchedule s;
  s.block_len = part.block_len;
  s.num_members = 2;
  s.num_senders = 1;
  s.levels_per_stage = levels;
  s.total_levels = levels;
  s.threshold = part.threshold;
  s.good_sets = {{part.good1}, {part.good2}};
  s.sqrt_f = {{part.sqrt_f1}, {part.sqrt_f2}};
  s.mutual_info = {{part.mutual_info1}, {part.mutual_info2}};
  std::vector<ChainSlot> steps;
  for (std::size_t i = 1; i <= part.block_len; ++i) steps.push_back({0, 1, int(i)});
  detail::finish_schedule(s, std::move(b), {steps, steps});
  return s;
}

// Achievable universal rate of the schedule: free slots per transmitted
// symbol. Cross-checked against the exact pairing count and against each
// member's summed split mutual information.
inline double compound_rate(const GoodBadPartition& part, const ChainingSchedule& sched) {
  if (sched.block_len != part.block_len)
    throw ConfigError("compound_rate: partition and schedule block lengths differ");
  const double denom = double(sched.blocks) * double(sched.block_len);
  const double rate = double(sched.info.size()) / denom;
  if (sched.num_members == 2 && sched.num_senders == 1) {
    const std::size_t amin = std::min(part.first_only.size(), part.second_only.size());
    const std::size_t expect = part.both_good.size() * std::size_t(sched.blocks) +
                               amin * std::size_t(sched.blocks - 1);
    if (sched.info.size() != expect)
      throw InvariantViolation("compound_rate: info count disagrees with pairing arithmetic");
  }
  for (const std::vector<double>* mi : {&part.mutual_info1, &part.mutual_info2}) {
    if (mi->empty()) continue;
    double sum = 0.0;
    for (double v : *mi) sum += v;
    if (rate > sum / double(sched.block_len) + tol::num)
      throw InvariantViolation("compound_rate: rate exceeds a member's mutual information");
  }
  return rate;
}

// Iterated pairwise alignment: members 1..s-1 already share a universal core,
// and stage s aligns the indices good for that whole core but bad for member
// s with those good for s but not yet for the core. Member s reads the new
// copy first at its own stage levels.
inline ChainingSchedule extend_k_members(const CompoundCqSet& members, std::size_t block_len,
                                         double threshold, int levels,
                                         std::uint64_t budget = kDefaultBudgetBytes) {
  if (members.size() < 2) throw ConfigError("extend_k_members: at least two member channels");
  if (members.size() > 16) throw ConfigError("extend_k_members: too many member channels");
  if (levels < 1) throw ConfigError("extend_k_members: at least one level");
  const int k = members.size();
  detail::check_chain_levels(levels * (k - 1), "extend_k_members");

  SplitOptions opts;
  opts.budget = budget;
  auto good = std::vector<std::vector<int>>(std::size_t(k));
  auto sf = std::vector<std::vector<double>>(std::size_t(k));
  auto mi = std::vector<std::vector<double>>(std::size_t(k));
  for (int w = 0; w < k; ++w) {
    SplitParams sp = split_params(members.members[std::size_t(w)], block_len, opts);
    sf[std::size_t(w)] = sp.sqrt_fidelity;
    mi[std::size_t(w)] = sp.mutual_info;
    for (std::size_t i = 1; i <= block_len; ++i)
      if (sp.sqrt_fidelity[i - 1] < threshold) good[std::size_t(w)].push_back(int(i));
  }

  detail::ChainBuild b;
  b.num_members = k;
  b.block_order.assign(std::size_t(k), {0});
  for (std::size_t i = 1; i <= block_len; ++i) {
    unsigned mask = 0;
    for (int w = 0; w < k; ++w)
      if (std::binary_search(good[std::size_t(w)].begin(), good[std::size_t(w)].end(), int(i)))
        mask |= 1u << w;
    if (mask == 0)
      b.base_frozen.push_back({0, 1, int(i)});
    else
      b.carriers.push_back({{0, 1, int(i)}, mask});
  }
  for (int s = 2; s <= k; ++s) {
    const unsigned low = (1u << (s - 1)) - 1;
    const unsigned bit = 1u << (s - 1);
    for (int l = 1; l <= levels; ++l)
      detail::chain_level(
          b, (s - 2) * levels + l,
          [low, bit](const detail::ChainCarrier& c) {
            return (c.mask & low) == low && !(c.mask & bit);
          },
          [low, bit](const detail::ChainCarrier& c) {
            return (c.mask & bit) && (c.mask & low) != low;
          },
          s);
  }

  ChainingSchedule s;
  s.block_len = block_len;
  s.num_members = k;
  s.num_senders = 1;
  s.levels_per_stage = levels;
  s.total_levels = levels * (k - 1);
  s.threshold = threshold;
  for (int w = 0; w < k; ++w) {
    s.good_sets.push_back({good[std::size_t(w)]});
    s.sqrt_f.push_back({sf[std::size_t(w)]});
    s.mutual_info.push_back({mi[std::size_t(w)]});
  }
  std::vector<ChainSlot> steps;
  for (std::size_t i = 1; i <= block_len; ++i) steps.push_back({0, 1, int(i)});
  detail::finish_schedule(s, std::move(b), std::vector<std::vector<ChainSlot>>(std::size_t(k), steps));
  return s;
}

// ---------------------------------------------------------------------------
// Compound MAC alignment.

// Branch-averaged root fidelity of the partial split channel at one path
// step, matching the single-sender split convention: uniform branch weights
// over the settled prior bits.
namespace detail {

inline double mac_step_sqrt_fidelity(const CqMac& mac, const DecodePath& path, int block_len,
                                     int step, std::uint64_t budget) {
  MacSplitChannel ch = mac_split_channel(mac, path, block_len, step, budget);
  double acc = 0.0;
  for (const auto& br : ch.branch) acc += sqrt_fidelity_raw(br[0], br[1]);
  return acc / double(ch.branch.size());
}

}  // namespace detail

// Alternating per-sender alignment for two two-sender member MACs. Levels
// cycle through the senders, so each sender receives `levels` dedicated
// doublings; slots are (sender, occurrence) pairs, member-independent even
// when the two decode paths interleave differently. target_rates, when
// given, holds one rate per sender and must be met by both member paths.
inline ChainingSchedule compound_mac_schedule(
    const CompoundMacSet& members, const std::vector<DecodePath>& paths, int block_len,
    int levels, double threshold,
    std::optional<std::vector<double>> target_rates = std::nullopt,
    std::uint64_t budget = kDefaultBudgetBytes) {
  if (members.size() != 2 || paths.size() != 2)
    throw ConfigError("compound_mac_schedule: exactly two member channels with one path each");
  for (const CqMac& m : members.members)
    if (m.senders != 2) throw ConfigError("compound_mac_schedule: two-sender channels required");
  for (std::size_t w = 0; w < 2; ++w)
    detail::check_mac_path(members.members[w], paths[w], block_len, "compound_mac_schedule");
  if (levels < 1) throw ConfigError("compound_mac_schedule: at least one level");
  const int senders = 2;
  detail::check_chain_levels(levels * senders, "compound_mac_schedule");

  const std::size_t n = std::size_t(block_len);
  std::vector<std::vector<std::vector<double>>> sf(
      2, std::vector<std::vector<double>>(2, std::vector<double>(n, 0.0)));
  std::vector<std::vector<std::vector<double>>> mi = sf;
  std::vector<RatePoint> rates;
  for (std::size_t w = 0; w < 2; ++w) {
    rates.push_back(chain_rule_rates(members.members[w], paths[w], block_len, budget));
    std::array<std::size_t, 2> occ{0, 0};
    for (int t = 1; t <= 2 * block_len; ++t) {
      const std::size_t s = paths[w].symbols[std::size_t(t - 1)];
      sf[w][s][occ[s]] =
          detail::mac_step_sqrt_fidelity(members.members[w], paths[w], block_len, t, budget);
      mi[w][s][occ[s]] = rates[w].step_info[std::size_t(t - 1)];
      occ[s] += 1;
    }
  }
  if (target_rates) {
    if (target_rates->size() != 2)
      throw ConfigError("compound_mac_schedule: one target rate per sender");
    for (std::size_t s = 0; s < 2; ++s) {
      const double cap = std::min(rates[0].rate[s], rates[1].rate[s]);
      if ((*target_rates)[s] > cap + tol::chain)
        throw RateInfeasible("compound_mac_schedule: target rate exceeds a member's path rate");
    }
  }

  detail::ChainBuild b;
  b.num_members = 2;
  b.block_order = {{0}, {0}};
  for (int s = 1; s <= senders; ++s)
    for (std::size_t i = 1; i <= n; ++i) {
      unsigned mask = (sf[0][std::size_t(s - 1)][i - 1] < threshold ? 1u : 0u) |
                      (sf[1][std::size_t(s - 1)][i - 1] < threshold ? 2u : 0u);
      if (mask == 0)
        b.base_frozen.push_back({0, s, int(i)});
      else
        b.carriers.push_back({{0, s, int(i)}, mask});
    }
  for (int l = 1; l <= levels * senders; ++l) {
    const int sl = ((l - 1) % senders) + 1;
    detail::chain_level(
        b, l,
        [sl](const detail::ChainCarrier& c) { return c.slot.sender == sl && c.mask == 1u; },
        [sl](const detail::ChainCarrier& c) { return c.slot.sender == sl && c.mask == 2u; }, 2);
  }

  ChainingSchedule s;
  s.block_len = n;
  s.num_members = 2;
  s.num_senders = senders;
  s.levels_per_stage = levels;
  s.total_levels = levels * senders;
  s.threshold = threshold;
  for (std::size_t w = 0; w < 2; ++w) {
    std::vector<std::vector<int>> gw(2);
    for (std::size_t si = 0; si < 2; ++si)
      for (std::size_t i = 1; i <= n; ++i)
        if (sf[w][si][i - 1] < threshold) gw[si].push_back(int(i));
    s.good_sets.push_back(std::move(gw));
    s.sqrt_f.push_back(sf[w]);
    s.mutual_info.push_back(mi[w]);
    s.member_paths.push_back(path_literal(paths[w]));
  }
  std::vector<std::vector<ChainSlot>> steps(2);
  for (std::size_t w = 0; w < 2; ++w) {
    std::array<int, 2> occ{0, 0};
    for (auto sym : paths[w].symbols) {
      occ[sym] += 1;
      steps[w].push_back({0, int(sym) + 1, occ[sym]});
    }
  }
  detail::finish_schedule(s, std::move(b), steps);
  return s;
}

// ---------------------------------------------------------------------------
// Exact chained decoding.

struct CompoundDecodeResult {
  double success = 0.0;        // decoder reproduces every input bit of both blocks
  double genie_success = 0.0;  // every measurement conditioned on the true prior bits
  std::array<double, 2> block_success{1.0, 1.0};  // per block id
  std::array<double, 2> block_genie{1.0, 1.0};
};

namespace detail {

// Diagonal channels make every decoder projector diagonal in the joint output
// basis, so measurement never disturbs the state and the tree collapses to a
// deterministic decision sequence per output word. Candidate sums stay raw,
// and the root comparison with the eigenvalue tolerance reproduces the
// measurement decoder's outcome rule exactly.
inline std::pair<double, double> classical_sc_figures(const PolarCode& code, const CqChannel& w,
                                                      const Bits& u, std::uint64_t budget) {
  check_code(code, "classical_sc_figures");
  const std::size_t n = code.block_len;
  if (u.size() != n) throw BadLength("classical_sc_figures: wrong input length");
  const int dim = w.output_dim();
  const std::size_t words = std::size_t(1) << n;
  std::uint64_t ywords = 1;
  for (std::size_t t = 0; t < n; ++t) ywords = sat_mul(ywords, std::uint64_t(dim));
  check_budget(sat_mul(ywords, sat_mul(std::uint64_t(words), 8)), budget,
               "classical_sc_figures");

  auto p = std::vector<std::array<double, 2>>(std::size_t(dim));
  for (int y = 0; y < dim; ++y)
    p[std::size_t(y)] = {w.outputs[0](y, y).real(), w.outputs[1](y, y).real()};
  const auto enc = encode_table(n);
  auto [frozen_mask, frozen_at] = frozen_layout(code);
  const std::size_t uw = bits_to_word(u);
  for (std::size_t i = 1; i <= n; ++i)
    if (frozen_mask[i] && u[i - 1] != frozen_at[i])
      throw ConfigError("classical_sc_figures: input disagrees with a frozen value");

  double succ = 0.0, genie = 0.0;
  std::vector<int> y(n, 0);
  std::vector<double> like(words);
  for (;;) {
    for (std::size_t c = 0; c < words; ++c) {
      double l = 1.0;
      const std::size_t x = enc[c];
      for (std::size_t t = 0; t < n; ++t) l *= p[std::size_t(y[t])][(x >> t) & 1u];
      like[c] = l;
    }
    const double py = like[uw];
    if (py > 0.0) {
      auto decide = [&](std::size_t prefix, std::size_t i) {
        const std::size_t lowmask = (std::size_t(1) << (i - 1)) - 1;
        double s0 = 0.0, s1 = 0.0;
        for (std::size_t c = 0; c < words; ++c) {
          if ((c & lowmask) != (prefix & lowmask)) continue;
          (((c >> (i - 1)) & 1u) ? s1 : s0) += like[c];
        }
        return std::sqrt(s1) > std::sqrt(s0) + tol::eig ? 1 : 0;
      };
      bool genie_ok = true;
      std::size_t dw = 0;
      for (std::size_t i = 1; i <= n; ++i) {
        if (frozen_mask[i]) {
          dw |= std::size_t(frozen_at[i]) << (i - 1);
          continue;
        }
        if (decide(uw, i) != int((uw >> (i - 1)) & 1u)) genie_ok = false;
        dw |= std::size_t(decide(dw, i)) << (i - 1);
      }
      if (genie_ok) genie += py;
      if (dw == uw) succ += py;
    }
    std::size_t t = 0;
    while (t < n && ++y[t] == dim) {
      y[t] = 0;
      ++t;
    }
    if (t == n) break;
  }
  return {succ, genie};
}

inline std::pair<double, double> block_figures(const PolarCode& code, const CqChannel& w,
                                               const Bits& u, std::uint64_t budget) {
  if (is_diagonal(w)) return classical_sc_figures(code, w, u, budget);
  QuantumSCDecoder dec = make_quantum_sc_decoder(code, w, budget);
  QuantumScResult r = quantum_sc_decode_exact(dec, u);
  return {r.decoder_success, r.genie_success};
}

}  // namespace detail

// Exact success probability of a two-block chained transmission when the true
// channel is the active member. The block decoded first treats every aligned
// endpoint as information; once it is fully correct the partner block sees
// those values as frozen, so the joint figure is the product of the two
// per-block figures taken in the active member's decode order.
inline CompoundDecodeResult compound_decode_exact(const ChainingSchedule& sched,
                                                  const CompoundCqSet& members, int active_member,
                                                  const Bits& info_bits,
                                                  std::uint64_t budget = kDefaultBudgetBytes) {
  if (members.size() != 2 || sched.num_members != 2 || sched.num_senders != 1)
    throw ConfigError("compound_decode_exact: two single-sender members required");
  if (sched.blocks != 2)
    throw ConfigError("compound_decode_exact: schedule must span exactly two blocks");
  if (active_member < 1 || active_member > 2)
    throw ConfigError("compound_decode_exact: active member out of range");
  if (info_bits.size() != sched.info.size())
    throw BadLength("compound_decode_exact: info bit count must match the schedule");
  const std::size_t n = sched.block_len;
  const CqChannel& w = members.members[std::size_t(active_member - 1)];

  std::array<Bits, 2> u{Bits(n, 0), Bits(n, 0)};
  for (std::size_t t = 0; t < info_bits.size(); ++t) {
    const ChainSlot& s = sched.info[t];
    u[std::size_t(s.block)][std::size_t(s.index - 1)] = info_bits[t] & 1u;
  }
  for (const AlignEdge& e : sched.edges)
    u[std::size_t(e.target.block)][std::size_t(e.target.index - 1)] =
        u[std::size_t(e.source.block)][std::size_t(e.source.index - 1)];

  const int first = sched.decode_order[std::size_t(active_member - 1)].front().block;
  std::array<std::vector<std::uint8_t>, 2> is_info;
  for (auto& table : is_info) table.assign(n + 1, 0);
  for (const ChainSlot& s : sched.info) is_info[std::size_t(s.block)][std::size_t(s.index)] = 1;
  for (const AlignEdge& e : sched.edges) {
    is_info[std::size_t(e.source.block)][std::size_t(e.source.index)] = (e.source.block == first);
    is_info[std::size_t(e.target.block)][std::size_t(e.target.index)] = (e.target.block == first);
  }

  CompoundDecodeResult res;
  for (int b : {first, 1 - first}) {
    PolarCode code;
    code.block_len = n;
    for (std::size_t i = 1; i <= n; ++i) {
      if (is_info[std::size_t(b)][i])
        code.info_set.push_back(int(i));
      else
        code.frozen_values.push_back(u[std::size_t(b)][i - 1]);
    }
    auto [sf, gf] = detail::block_figures(code, w, u[std::size_t(b)], budget);
    res.block_success[std::size_t(b)] = sf;
    res.block_genie[std::size_t(b)] = gf;
  }
  res.success = res.block_success[0] * res.block_success[1];
  res.genie_success = res.block_genie[0] * res.block_genie[1];
  return res;
}

// ---------------------------------------------------------------------------
// Schedule export.

// Stable JSON field names, part of the interface: block_len, num_members,
// num_senders, levels_per_stage, total_levels, blocks, threshold, edges
// (level/source/target), info, residual, frozen_surplus, base_frozen,
// decode_order (one slot list per member), member_paths; every slot is an
// object with block/sender/index.
inline std::string schedule_json(const ChainingSchedule& s) {
  using Doc = nlohmann::ordered_json;
  auto slot = [](const ChainSlot& c) {
    return Doc{{"block", c.block}, {"sender", c.sender}, {"index", c.index}};
  };
  auto slots = [&slot](const std::vector<ChainSlot>& list) {
    Doc arr = Doc::array();
    for (const ChainSlot& c : list) arr.push_back(slot(c));
    return arr;
  };
  Doc j;
  j["block_len"] = s.block_len;
  j["num_members"] = s.num_members;
  j["num_senders"] = s.num_senders;
  j["levels_per_stage"] = s.levels_per_stage;
  j["total_levels"] = s.total_levels;
  j["blocks"] = s.blocks;
  j["threshold"] = s.threshold;
  Doc edges = Doc::array();
  for (const AlignEdge& e : s.edges)
    edges.push_back(
        Doc{{"level", e.level}, {"source", slot(e.source)}, {"target", slot(e.target)}});
  j["edges"] = std::move(edges);
  j["info"] = slots(s.info);
  j["residual"] = slots(s.residual);
  j["frozen_surplus"] = slots(s.frozen_surplus);
  j["base_frozen"] = slots(s.base_frozen);
  Doc order = Doc::array();
  for (const auto& member : s.decode_order) order.push_back(slots(member));
  j["decode_order"] = std::move(order);
  j["member_paths"] = s.member_paths;
  return j.dump(2);
}

}  // namespace polarlab
