// channels.hpp: channel models. Classical DMCs, binary-input cq channels,
// cq-MACs, qubit Kraus channels, broadcast/interference tables, compound sets.
#pragma once

#include <cmath>
#include <vector>

#include "polarlab/common.hpp"
#include "polarlab/qmath.hpp"

namespace polarlab {

// Binary-input (by default) classical-quantum channel x -> rho_x.
struct CqChannel {
  std::vector<Cmat> outputs;  // one density matrix per input symbol

  explicit CqChannel(std::vector<Cmat> outs) : outputs(std::move(outs)) {
    if (outputs.empty()) throw InvalidDistribution("CqChannel: no outputs");
    for (std::size_t x = 0; x < outputs.size(); ++x) {
      if (outputs[x].rows() != outputs[0].rows())
        throw DimMismatch("CqChannel: output dim mismatch at input " + std::to_string(x));
      DensityMatrix check(outputs[x]);  // validates Hermitian/trace/PSD
    }
  }
  int input_size() const { return int(outputs.size()); }
  int output_dim() const { return int(outputs[0].rows()); }
};

struct ClassicalDMC {
  std::vector<std::vector<double>> transition;  // rows = inputs, row-stochastic

  explicit ClassicalDMC(std::vector<std::vector<double>> t) : transition(std::move(t)) {
    if (transition.empty()) throw InvalidDistribution("ClassicalDMC: no rows");
    for (std::size_t x = 0; x < transition.size(); ++x) {
      if (transition[x].size() != transition[0].size())
        throw DimMismatch("ClassicalDMC: ragged transition matrix at row " + std::to_string(x));
      require_distribution(transition[x], "ClassicalDMC row");
    }
  }
  int input_size() const { return int(transition.size()); }
  int output_size() const { return int(transition[0].size()); }
};

// Embeds a classical DMC as a cq channel with diagonal outputs.
inline CqChannel embed_diagonal(const ClassicalDMC& w) {
  std::vector<Cmat> outs;
  for (const auto& row : w.transition) {
    Cmat d = Cmat::Zero(int(row.size()), int(row.size()));
    for (std::size_t y = 0; y < row.size(); ++y) d(int(y), int(y)) = row[y];
    outs.push_back(d);
  }
  return CqChannel(std::move(outs));
}

// k-sender cq multiple access channel with binary per-sender inputs.
// outputs[w] is the joint receiver state for input word w; bit (senders-1-s)
// of w is sender s's symbol, so w reads as (x_1 x_2 ... x_k).
struct CqMac {
  int senders;
  std::vector<Cmat> outputs;  // size 2^senders

  CqMac(int k, std::vector<Cmat> outs) : senders(k), outputs(std::move(outs)) {
    if (senders < 2) throw InvalidDistribution("CqMac: needs at least 2 senders");
    if (outputs.size() != (std::size_t(1) << senders))
      throw DimMismatch("CqMac: output table size must be 2^senders");
    for (std::size_t w = 0; w < outputs.size(); ++w) {
      if (outputs[w].rows() != outputs[0].rows())
        throw DimMismatch("CqMac: output dim mismatch at word " + std::to_string(w));
      DensityMatrix check(outputs[w]);
    }
  }
  int output_dim() const { return int(outputs[0].rows()); }
  const Cmat& at(const std::vector<int>& x) const {
    std::size_t w = 0;
    for (int s = 0; s < senders; ++s) w = (w << 1) | (x[s] & 1);
    return outputs[w];
  }
};

inline CqMac make_mac2(const Cmat& r00, const Cmat& r01, const Cmat& r10, const Cmat& r11) {
  return CqMac(2, {r00, r01, r10, r11});
}

// Quantum channel given by Kraus operators dA -> dB.
struct QubitChannel {
  std::vector<Cmat> kraus;

  explicit QubitChannel(std::vector<Cmat> ks) : kraus(std::move(ks)) {
    if (kraus.empty()) throw InvalidDistribution("QubitChannel: no Kraus operators");
    Cmat acc = Cmat::Zero(kraus[0].cols(), kraus[0].cols());
    for (std::size_t j = 0; j < kraus.size(); ++j) {
      if (kraus[j].cols() != kraus[0].cols() || kraus[j].rows() != kraus[0].rows())
        throw DimMismatch("QubitChannel: Kraus dim mismatch at index " + std::to_string(j));
      acc += kraus[j].adjoint() * kraus[j];
    }
    if ((acc - Cmat::Identity(acc.rows(), acc.cols())).cwiseAbs().maxCoeff() > tol::num)
      throw InvariantViolation("QubitChannel: Kraus completeness sum differs from identity");
  }
  int input_dim() const { return int(kraus[0].cols()); }
  int output_dim() const { return int(kraus[0].rows()); }

  Cmat apply(const Cmat& rho) const {
    if (rho.rows() != input_dim()) throw DimMismatch("QubitChannel::apply: input dim");
    Cmat out = Cmat::Zero(output_dim(), output_dim());
    for (const auto& k : kraus) out += k * rho * k.adjoint();
    return out;
  }

  // Canonical isometric dilation U: |psi> -> sum_j (K_j |psi>) (x) |j>_E.
  // Output ordering is B (x) E.
  Cmat dilation() const {
    int de = int(kraus.size());
    Cmat u = Cmat::Zero(output_dim() * de, input_dim());
    for (int j = 0; j < de; ++j)
      for (int b = 0; b < output_dim(); ++b)
        for (int a = 0; a < input_dim(); ++a) u(b * de + j, a) = kraus[j](b, a);
    return u;
  }
};

// Broadcast channel x -> rho_x on B1 (x) B2.
struct BroadcastChannel {
  int d1, d2;
  std::vector<Cmat> outputs;

  BroadcastChannel(int dim1, int dim2, std::vector<Cmat> outs)
      : d1(dim1), d2(dim2), outputs(std::move(outs)) {
    if (outputs.empty()) throw InvalidDistribution("BroadcastChannel: no outputs");
    for (std::size_t x = 0; x < outputs.size(); ++x) {
      if (outputs[x].rows() != d1 * d2)
        throw DimMismatch("BroadcastChannel: output " + std::to_string(x) + " dim != d1*d2");
      DensityMatrix check(outputs[x]);
    }
  }
  int input_size() const { return int(outputs.size()); }
};

// Two-user interference channel (x1, x2) -> rho on B1 (x) B2, binary inputs.
struct InterferenceChannel {
  int d1, d2;
  std::vector<Cmat> outputs;  // indexed x1*2 + x2

  InterferenceChannel(int dim1, int dim2, std::vector<Cmat> outs)
      : d1(dim1), d2(dim2), outputs(std::move(outs)) {
    if (outputs.size() != 4) throw DimMismatch("InterferenceChannel: needs 4 outputs");
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      if (outputs[i].rows() != d1 * d2)
        throw DimMismatch("InterferenceChannel: output " + std::to_string(i) + " dim != d1*d2");
      DensityMatrix check(outputs[i]);
    }
  }
  const Cmat& at(int x1, int x2) const { return outputs[x1 * 2 + x2]; }
};

template <typename ChannelT>
struct CompoundSet {
  std::vector<ChannelT> members;

  explicit CompoundSet(std::vector<ChannelT> ms) : members(std::move(ms)) {
    if (members.empty()) throw InvalidDistribution("CompoundSet: empty");
  }
  int size() const { return int(members.size()); }
};

using CompoundCqSet = CompoundSet<CqChannel>;
using CompoundMacSet = CompoundSet<CqMac>;

// ---------------------------------------------------------------------------
// Operations.

inline Cmat partial_trace(const Cmat& rho, const std::vector<int>& dims,
                          const std::vector<int>& keep) {
  int total = 1;
  for (int d : dims) total *= d;
  if (rho.rows() != total || rho.cols() != total)
    throw DimMismatch("partial_trace: factor dims do not multiply to state dim");
  std::vector<char> keep_mask(dims.size(), 0);
  for (int k : keep) {
    if (k < 0 || k >= int(dims.size())) throw DimMismatch("partial_trace: bad keep index");
    keep_mask[k] = 1;
  }
  int dkeep = 1, dtrace = 1;
  for (std::size_t i = 0; i < dims.size(); ++i) (keep_mask[i] ? dkeep : dtrace) *= dims[i];

  // Index helpers: full index <-> (kept part, traced part) in factor order.
  auto compose = [&](int ki, int ti) {
    int idx = 0, kk = ki, tt = ti;
    std::vector<int> digits(dims.size());
    for (int i = int(dims.size()) - 1; i >= 0; --i) {
      if (keep_mask[i]) { digits[i] = kk % dims[i]; kk /= dims[i]; }
      else { digits[i] = tt % dims[i]; tt /= dims[i]; }
    }
    for (std::size_t i = 0; i < dims.size(); ++i) idx = idx * dims[i] + digits[i];
    return idx;
  };

  Cmat out = Cmat::Zero(dkeep, dkeep);
  for (int a = 0; a < dkeep; ++a)
    for (int b = 0; b < dkeep; ++b) {
      complexd s = 0.0;
      for (int t = 0; t < dtrace; ++t) s += rho(compose(a, t), compose(b, t));
      out(a, b) = s;
    }
  return out;
}

inline DensityMatrix partial_trace(const DensityMatrix& rho, const std::vector<int>& dims,
                                   const std::vector<int>& keep) {
  return DensityMatrix(partial_trace(rho.m, dims, keep));
}

// MAC seen by one receiver of an interference channel.
inline CqMac induced_mac(const InterferenceChannel& ic, int receiver) {
  if (receiver != 1 && receiver != 2) throw DimMismatch("induced_mac: receiver must be 1 or 2");
  std::vector<Cmat> outs;
  for (int w = 0; w < 4; ++w)
    outs.push_back(partial_trace(ic.outputs[w], {ic.d1, ic.d2}, {receiver - 1}));
  return CqMac(2, std::move(outs));
}

// Post-compose a cq channel with a degrading map.
inline CqChannel degrade(const CqChannel& n2, const QubitChannel& d) {
  if (d.input_dim() != n2.output_dim()) throw DimMismatch("degrade: dims incompatible");
  std::vector<Cmat> outs;
  for (const auto& rho : n2.outputs) outs.push_back(d.apply(rho));
  return CqChannel(std::move(outs));
}

// Kraus-level composition D after N (for degraded quantum channel pairs).
inline QubitChannel compose(const QubitChannel& d, const QubitChannel& n) {
  if (d.input_dim() != n.output_dim()) throw DimMismatch("compose: dims incompatible");
  std::vector<Cmat> ks;
  for (const auto& kd : d.kraus)
    for (const auto& kn : n.kraus) ks.push_back(kd * kn);
  return QubitChannel(std::move(ks));
}

// ---------------------------------------------------------------------------
// Standard constructors.

inline ClassicalDMC bsc(double p) {
  return ClassicalDMC({{1.0 - p, p}, {p, 1.0 - p}});
}

// Outputs ordered (0, 1, erasure).
inline ClassicalDMC bec(double eps) {
  return ClassicalDMC({{1.0 - eps, 0.0, eps}, {0.0, 1.0 - eps, eps}});
}

inline Cmat ket_density(const Cvec& psi) {
  Cvec n = psi / psi.norm();
  return n * n.adjoint();
}

// Pure-state cq channel with kets |0> and cos(theta)|0> + sin(theta)|1>.
inline CqChannel pure_state_cq(double overlap) {
  double theta = std::acos(overlap);
  Cvec k0(2), k1(2);
  k0 << 1.0, 0.0;
  k1 << std::cos(theta), std::sin(theta);
  return CqChannel({ket_density(k0), ket_density(k1)});
}

inline QubitChannel identity_channel(int dim = 2) {
  return QubitChannel({Cmat::Identity(dim, dim)});
}

inline QubitChannel unitary_channel(const Cmat& u) { return QubitChannel({u}); }

// Off-diagonals scale by (1-p): Z is mixed in with probability p/2.
inline QubitChannel dephasing(double p) {
  Cmat z = Cmat::Zero(2, 2);
  z(0, 0) = 1.0;
  z(1, 1) = -1.0;
  return QubitChannel({std::sqrt(1.0 - p / 2.0) * Cmat::Identity(2, 2), std::sqrt(p / 2.0) * z});
}

inline QubitChannel depolarizing(double p) {
  Cmat x = Cmat::Zero(2, 2), y = Cmat::Zero(2, 2), z = Cmat::Zero(2, 2);
  x(0, 1) = 1.0; x(1, 0) = 1.0;
  y(0, 1) = complexd(0.0, -1.0); y(1, 0) = complexd(0.0, 1.0);
  z(0, 0) = 1.0; z(1, 1) = -1.0;
  double a = std::sqrt(1.0 - 3.0 * p / 4.0), b = std::sqrt(p / 4.0);
  return QubitChannel({a * Cmat::Identity(2, 2), b * x, b * y, b * z});
}

inline QubitChannel amplitude_damping(double gamma) {
  Cmat k0 = Cmat::Zero(2, 2), k1 = Cmat::Zero(2, 2);
  k0(0, 0) = 1.0;
  k0(1, 1) = std::sqrt(1.0 - gamma);
  k1(0, 1) = std::sqrt(gamma);
  return QubitChannel({k0, k1});
}

// The cq channel z -> N(|z><z|) for computational-basis inputs.
inline CqChannel basis_cq(const QubitChannel& n) {
  std::vector<Cmat> outs;
  for (int z = 0; z < n.input_dim(); ++z) {
    Cmat e = Cmat::Zero(n.input_dim(), n.input_dim());
    e(z, z) = 1.0;
    outs.push_back(n.apply(e));
  }
  return CqChannel(std::move(outs));
}

// ---------------------------------------------------------------------------
// Structure detection, used to pick exact evaluation paths.

inline bool is_diagonal(const Cmat& m, double tol = 1e-13) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (i != j && std::abs(m(i, j)) > tol) return false;
  return true;
}

inline bool is_diagonal(const CqChannel& w) {
  for (const auto& o : w.outputs)
    if (!is_diagonal(o)) return false;
  return true;
}

inline bool is_pure_output(const Cmat& m, double tol = 1e-13) {
  Rvec lam = eigvalsh(m);
  for (int i = 0; i + 1 < lam.size(); ++i)  // all but the largest
    if (std::abs(lam[i]) > tol) return false;
  return true;
}

inline bool is_pure(const CqChannel& w) {
  for (const auto& o : w.outputs)
    if (!is_pure_output(o)) return false;
  return true;
}

// Diagonal cq channel back to its classical transition rows.
inline ClassicalDMC to_dmc(const CqChannel& w) {
  if (!is_diagonal(w)) throw InvariantViolation("to_dmc: channel is not diagonal");
  std::vector<std::vector<double>> rows;
  for (const auto& o : w.outputs) {
    std::vector<double> r(o.rows());
    for (int y = 0; y < o.rows(); ++y) r[y] = o(y, y).real();
    rows.push_back(std::move(r));
  }
  return ClassicalDMC(std::move(rows));
}

// Principal eigenvector of a (near-)pure state.
inline Cvec pure_ket(const Cmat& m) {
  Eigen::SelfAdjointEigenSolver<Cmat> es(m);
  return es.eigenvectors().col(m.rows() - 1) * std::sqrt(std::max(0.0, es.eigenvalues()[m.rows() - 1]));
}

inline double classical_mutual_information(const ClassicalDMC& w, const std::vector<double>& prior) {
  require_distribution(prior, "classical_mutual_information");
  if (prior.size() != w.transition.size())
    throw DimMismatch("classical_mutual_information: prior size");
  std::vector<double> py(w.output_size(), 0.0);
  for (std::size_t x = 0; x < prior.size(); ++x)
    for (int y = 0; y < w.output_size(); ++y) py[y] += prior[x] * w.transition[x][y];
  double i = shannon_entropy(py);
  for (std::size_t x = 0; x < prior.size(); ++x)
    i -= prior[x] * shannon_entropy(w.transition[x]);
  return i < 0.0 ? 0.0 : i;
}

inline double classical_bhattacharyya(const ClassicalDMC& w) {
  if (w.input_size() != 2) throw InvalidDistribution("classical_bhattacharyya: binary input only");
  double z = 0.0;
  for (int y = 0; y < w.output_size(); ++y)
    z += std::sqrt(w.transition[0][y] * w.transition[1][y]);
  return z;
}

}  // namespace polarlab
