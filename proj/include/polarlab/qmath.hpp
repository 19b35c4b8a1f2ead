// qmath.hpp: dense Hermitian kernel. Eigendecomposition-based matrix functions,
// fidelity, entropies and eigenspace projectors with a fixed tolerance policy.
//
// Conventions fixed here and relied on everywhere else:
//   fidelity          F(rho0, rho1) = ||sqrt(rho0) sqrt(rho1)||_1^2   (squared, F(rho,rho)=1)
//   sqrt_fidelity     sqrt(F); on commuting diagonal states equals sum_i sqrt(p_i q_i)
//   entropies         bits (log2)
//   {A >= 0}          zero eigenvalues (|lambda| <= tol::eig) are part of the projector
//   eigenvalue clamp  [-tol::psd, 0) -> 0; below -tol::psd raises NegativeEigenvalue
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "polarlab/common.hpp"

namespace polarlab {

using Cmat = Eigen::MatrixXcd;
using Cvec = Eigen::VectorXcd;
using Rvec = Eigen::VectorXd;
using complexd = std::complex<double>;

inline double herm_defect(const Cmat& a) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

inline void require_hermitian(const Cmat& a, const char* who) {
  if (a.rows() != a.cols()) throw DimMismatch(std::string(who) + ": matrix not square");
  if (a.size() > 0 && herm_defect(a) > tol::hermitian)
    throw NonHermitianInput(std::string(who) + ": Hermitian defect exceeds tolerance");
}

// A density matrix validated at construction: Hermitian, unit trace, PSD.
struct DensityMatrix {
  Cmat m;

  explicit DensityMatrix(Cmat mat) : m(std::move(mat)) {
    require_hermitian(m, "DensityMatrix");
    if (std::abs(m.trace().real() - 1.0) > tol::trace || std::abs(m.trace().imag()) > tol::trace)
      throw InvalidDistribution("DensityMatrix: trace differs from 1");
    Eigen::SelfAdjointEigenSolver<Cmat> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -tol::psd)
      throw NegativeEigenvalue("DensityMatrix: eigenvalue below -tol_psd");
  }
  int dim() const { return int(m.rows()); }
};

struct HermitianObservable {
  Cmat m;
  explicit HermitianObservable(Cmat mat) : m(std::move(mat)) {
    require_hermitian(m, "HermitianObservable");
  }
  int dim() const { return int(m.rows()); }
};

struct Projector {
  Cmat m;
  explicit Projector(Cmat mat) : m(std::move(mat)) {
    require_hermitian(m, "Projector");
    if ((m * m - m).cwiseAbs().maxCoeff() > tol::num)
      throw InvariantViolation("Projector: not idempotent");
  }
  int dim() const { return int(m.rows()); }
};

// Eigenvalues of a Hermitian matrix, ascending.
inline Rvec eigvalsh(const Cmat& a) {
  require_hermitian(a, "eigvalsh");
  Eigen::SelfAdjointEigenSolver<Cmat> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

namespace detail {

// Clamp an eigenvalue of a nominally-PSD matrix per the tolerance policy.
inline double clamp_psd_eig(double lambda, const char* who) {
  if (lambda < -tol::psd) throw NegativeEigenvalue(std::string(who) + ": eigenvalue below -tol_psd");
  return lambda < 0.0 ? 0.0 : lambda;
}

inline double xlog2x(double x) { return x > 0.0 ? x * std::log2(x) : 0.0; }

}  // namespace detail

inline HermitianObservable matrix_sqrt(const Cmat& rho) {
  require_hermitian(rho, "matrix_sqrt");
  Eigen::SelfAdjointEigenSolver<Cmat> es(rho);
  Rvec lam = es.eigenvalues();
  for (int i = 0; i < lam.size(); ++i)
    lam[i] = std::sqrt(detail::clamp_psd_eig(lam[i], "matrix_sqrt"));
  Cmat r = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
  return HermitianObservable(0.5 * (r + r.adjoint()));
}

inline HermitianObservable matrix_sqrt(const DensityMatrix& rho) { return matrix_sqrt(rho.m); }

// Kronecker product; the left factor occupies the most significant index block.
inline Cmat kron(const Cmat& a, const Cmat& b) {
  Cmat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline double trace_norm(const Cmat& a) {
  if (a.rows() == a.cols() && herm_defect(a) <= tol::hermitian)
    return eigvalsh(0.5 * (a + a.adjoint())).cwiseAbs().sum();
  // General matrices fall back to singular values; tr sqrt(A^dag A).
  return a.jacobiSvd().singularValues().sum();
}

inline double trace_norm(const HermitianObservable& a) { return trace_norm(a.m); }

// ||sqrt(rho0) sqrt(rho1)||_1 on raw Hermitian PSD matrices (unnormalized allowed).
inline double sqrt_fidelity_raw(const Cmat& rho0, const Cmat& rho1) {
  if (rho0.rows() != rho1.rows()) throw DimMismatch("sqrt_fidelity: dims differ");
  return trace_norm(Cmat(matrix_sqrt(rho0).m * matrix_sqrt(rho1).m));
}

inline double sqrt_fidelity(const DensityMatrix& rho0, const DensityMatrix& rho1) {
  return sqrt_fidelity_raw(rho0.m, rho1.m);
}

inline double fidelity(const DensityMatrix& rho0, const DensityMatrix& rho1) {
  double s = sqrt_fidelity(rho0, rho1);
  return std::min(s * s, 1.0);
}

inline double von_neumann_entropy(const Cmat& rho) {
  Rvec lam = eigvalsh(rho);
  double h = 0.0;
  for (int i = 0; i < lam.size(); ++i)
    h -= detail::xlog2x(detail::clamp_psd_eig(lam[i], "von_neumann_entropy"));
  return h < 0.0 ? 0.0 : h;
}

inline double von_neumann_entropy(const DensityMatrix& rho) { return von_neumann_entropy(rho.m); }

inline double shannon_entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p) {
    if (v < -tol::psd) throw InvalidDistribution("shannon_entropy: negative probability");
    h -= detail::xlog2x(v > 0.0 ? v : 0.0);
  }
  return h < 0.0 ? 0.0 : h;
}

inline double binary_entropy(double p) { return shannon_entropy({p, 1.0 - p}); }

inline void require_distribution(const std::vector<double>& p, const char* who) {
  double s = 0.0;
  for (double v : p) {
    if (v < -tol::psd) throw InvalidDistribution(std::string(who) + ": negative probability");
    s += v;
  }
  if (std::abs(s - 1.0) > tol::num) throw InvalidDistribution(std::string(who) + ": sum differs from 1");
}

inline Projector nonneg_eigenspace_projector(const Cmat& a) {
  require_hermitian(a, "nonneg_eigenspace_projector");
  Eigen::SelfAdjointEigenSolver<Cmat> es(a);
  const Rvec& lam = es.eigenvalues();
  Cmat p = Cmat::Zero(a.rows(), a.cols());
  for (int i = 0; i < lam.size(); ++i)
    if (lam[i] >= -tol::eig) p += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
  return Projector(0.5 * (p + p.adjoint()));
}

inline Projector nonneg_eigenspace_projector(const HermitianObservable& a) {
  return nonneg_eigenspace_projector(a.m);
}

inline double holevo_information(const std::vector<double>& prior, const std::vector<Cmat>& outputs) {
  require_distribution(prior, "holevo_information");
  if (prior.size() != outputs.size()) throw DimMismatch("holevo_information: prior/outputs length");
  if (outputs.empty()) return 0.0;
  Cmat avg = Cmat::Zero(outputs[0].rows(), outputs[0].cols());
  double h_cond = 0.0;
  for (std::size_t x = 0; x < outputs.size(); ++x) {
    if (outputs[x].rows() != avg.rows()) throw DimMismatch("holevo_information: output dims differ");
    if (prior[x] <= 0.0) continue;
    avg += prior[x] * outputs[x];
    h_cond += prior[x] * von_neumann_entropy(outputs[x]);
  }
  double chi = von_neumann_entropy(avg) - h_cond;
  return chi < 0.0 ? 0.0 : chi;
}

// One configuration of a classical-quantum ensemble: classical letters (x, y),
// joint probability, conditional state on B.
struct CqConfig {
  int x = 0;
  int y = 0;
  double p = 0.0;
  Cmat state;  // density matrix given (x, y); ignored when p == 0
};

struct ConditionalQuantities {
  double h_x_given_b = 0.0;   // H(X|B) = H(XB) - H(B)
  double i_x_b_given_y = 0.0; // I(X;B|Y) = H(XY) + H(YB) - H(Y) - H(XYB)
  double z_x_given_b = 0.0;   // Z(X|B) = 2 sqrt(p0 p1) sqrt_fidelity(avg state 0, avg state 1)
};

inline ConditionalQuantities conditional_quantities(const std::vector<CqConfig>& joint) {
  double total = 0.0;
  int dim = -1;
  for (const auto& c : joint) {
    if (c.p < -tol::psd) throw InvalidDistribution("conditional_quantities: negative probability");
    total += c.p;
    if (c.p > 0.0) {
      if (c.x != 0 && c.x != 1) throw InvalidDistribution("conditional_quantities: X must be binary");
      if (dim < 0) dim = int(c.state.rows());
      if (c.state.rows() != dim) throw DimMismatch("conditional_quantities: state dims differ");
    }
  }
  if (std::abs(total - 1.0) > tol::num)
    throw InvalidDistribution("conditional_quantities: probabilities do not sum to 1");
  if (dim < 0) throw InvalidDistribution("conditional_quantities: empty ensemble");

  // Accumulate marginals. Keyed maps are avoided; x is binary, y values are
  // gathered in first-appearance order.
  std::vector<int> yvals;
  auto yindex = [&](int y) {
    for (std::size_t i = 0; i < yvals.size(); ++i)
      if (yvals[i] == y) return i;
    yvals.push_back(y);
    return yvals.size() - 1;
  };

  double px[2] = {0.0, 0.0};
  Cmat avg_x[2] = {Cmat::Zero(dim, dim), Cmat::Zero(dim, dim)};
  std::vector<double> py, pxy;
  std::vector<Cmat> avg_y, avg_xy;
  Cmat avg_b = Cmat::Zero(dim, dim);

  for (const auto& c : joint) {
    if (c.p <= 0.0) continue;
    std::size_t yi = yindex(c.y);
    if (py.size() <= yi) {
      py.resize(yi + 1, 0.0);
      avg_y.resize(yi + 1, Cmat::Zero(dim, dim));
      pxy.resize(2 * (yi + 1), 0.0);
      avg_xy.resize(2 * (yi + 1), Cmat::Zero(dim, dim));
    }
    px[c.x] += c.p;
    py[yi] += c.p;
    pxy[2 * yi + c.x] += c.p;
    avg_x[c.x] += c.p * c.state;
    avg_y[yi] += c.p * c.state;
    avg_xy[2 * yi + c.x] += c.p * c.state;
    avg_b += c.p * c.state;
  }

  // Entropy of a block-diagonal state sum_k w_k |k><k| (x) sigma_k with
  // unnormalized blocks w_k sigma_k: H = H(w) + sum_k w_k H(sigma_k / w_k).
  auto block_entropy = [&](const std::vector<double>& w, const std::vector<Cmat>& blocks) {
    double h = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (w[k] <= 0.0) continue;
      h += -detail::xlog2x(w[k]) + w[k] * von_neumann_entropy(Cmat(blocks[k] / w[k]));
    }
    return h;
  };

  ConditionalQuantities out;
  double h_b = von_neumann_entropy(avg_b);
  double h_xb = block_entropy({px[0], px[1]}, {avg_x[0], avg_x[1]});
  out.h_x_given_b = h_xb - h_b;

  double h_y = shannon_entropy(py);
  double h_xy = shannon_entropy(pxy);
  double h_yb = block_entropy(py, avg_y);
  double h_xyb = block_entropy(pxy, avg_xy);
  out.i_x_b_given_y = h_xy + h_yb - h_y - h_xyb;

  if (px[0] > 0.0 && px[1] > 0.0) {
    double sf = sqrt_fidelity_raw(Cmat(avg_x[0] / px[0]), Cmat(avg_x[1] / px[1]));
    out.z_x_given_b = 2.0 * std::sqrt(px[0] * px[1]) * sf;
  } else {
    out.z_x_given_b = 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Low-rank ensemble algebra. A PSD matrix rho = A A^dag is represented by its
// factor A (dim x M, columns sqrt(w_m) |phi_m>). Eigenvalues, entropy and
// sqrt-fidelity are computed from Gram matrices of size M, never from rho.

namespace lowrank {

// Entropy of rho = (Gram eigenvalues)/norm, with norm = tr(rho) implied by the
// Gram trace when zero is passed. Gram must be Hermitian PSD.
inline double entropy_from_gram(const Cmat& gram, double norm = 0.0) {
  if (gram.size() == 0) return 0.0;
  Rvec lam = eigvalsh(gram);
  double tr = lam.sum();
  double scale = norm > 0.0 ? norm : tr;
  if (scale <= 0.0) return 0.0;
  double h = 0.0;
  for (int i = 0; i < lam.size(); ++i) {
    double v = lam[i] / scale;
    if (v < -tol::psd) throw NegativeEigenvalue("lowrank::entropy_from_gram: negative eigenvalue");
    h -= detail::xlog2x(v > 0.0 ? v : 0.0);
  }
  return h < 0.0 ? 0.0 : h;
}

// ||sqrt(rho) sqrt(sigma)||_1 for rho = A A^dag, sigma = B B^dag given
// ga = A^dag A, gb = B^dag B, cross = A^dag B. Unnormalized inputs allowed;
// the result scales as sqrt(tr rho * tr sigma). Rank is cut relative to the
// largest Gram eigenvalue.
inline double sqrt_fidelity_from_grams(const Cmat& ga, const Cmat& gb, const Cmat& cross) {
  if (ga.rows() == 0 || gb.rows() == 0) return 0.0;
  if (cross.rows() != ga.rows() || cross.cols() != gb.rows())
    throw DimMismatch("lowrank::sqrt_fidelity_from_grams: cross-Gram shape");
  constexpr double rel_cut = 1e-13;
  Eigen::SelfAdjointEigenSolver<Cmat> ea(ga);
  Eigen::SelfAdjointEigenSolver<Cmat> eb(gb);
  double cuta = ea.eigenvalues().cwiseAbs().maxCoeff() * rel_cut;
  double cutb = eb.eigenvalues().cwiseAbs().maxCoeff() * rel_cut;
  int ra = 0, rb = 0;
  for (int i = 0; i < ea.eigenvalues().size(); ++i) ra += ea.eigenvalues()[i] > cuta;
  for (int i = 0; i < eb.eigenvalues().size(); ++i) rb += eb.eigenvalues()[i] > cutb;
  if (ra == 0 || rb == 0) return 0.0;
  Cmat va = ea.eigenvectors().rightCols(ra);  // ascending order: large eigenvalues last
  Cmat vb = eb.eigenvectors().rightCols(rb);
  Cmat core = va.adjoint() * cross * vb;
  return core.jacobiSvd().singularValues().sum();
}

// Factor-matrix front ends: rho = A A^dag with columns sqrt(w_m)|phi_m>.
inline Rvec eigenvalues(const Cmat& a) {
  if (a.cols() == 0) return Rvec::Zero(0);
  return eigvalsh(Cmat(a.adjoint() * a));
}

inline double entropy(const Cmat& a, double norm = 0.0) {
  if (a.cols() == 0) return 0.0;
  return entropy_from_gram(Cmat(a.adjoint() * a), norm);
}

inline double trace(const Cmat& a) { return a.squaredNorm(); }

inline double sqrt_fidelity(const Cmat& a, const Cmat& b) {
  if (a.rows() != b.rows()) throw DimMismatch("lowrank::sqrt_fidelity: dims differ");
  if (a.cols() == 0 || b.cols() == 0) return 0.0;
  return sqrt_fidelity_from_grams(Cmat(a.adjoint() * a), Cmat(b.adjoint() * b),
                                  Cmat(a.adjoint() * b));
}

}  // namespace lowrank

}  // namespace polarlab
