// common.hpp: shared numeric tolerances, error types and small bit utilities.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace polarlab {

// Library version, echoed into every output file header.
inline constexpr const char* kVersion = "polarlab 0.1.0";

// Numeric tolerances. These are part of the library contract; tests pin
// against them and they are not adjusted per call site.
namespace tol {
inline constexpr double hermitian = 1e-10;  // max |A - A^dag| entry for state inputs
inline constexpr double trace     = 1e-10;  // |tr(rho) - 1| for state inputs
inline constexpr double psd       = 1e-9;   // eigenvalues in [-psd, 0) clamp to 0, below is an error
inline constexpr double eig       = 1e-10;  // |lambda| <= eig counts as the zero eigenspace
inline constexpr double num       = 1e-8;   // generic closeness for derived scalar checks
inline constexpr double chain     = 1e-6;   // chain-rule / conservation sum checks
}  // namespace tol

// Default memory budget for exact enumerations, in bytes.
inline constexpr std::uint64_t kDefaultBudgetBytes = std::uint64_t(2) << 30;

struct Error : std::runtime_error {
  explicit Error(const std::string& w) : std::runtime_error(w) {}
};

// Input validation failures on quantum state arguments.
struct NonHermitianInput : Error { using Error::Error; };
struct NegativeEigenvalue : Error { using Error::Error; };
struct DimMismatch : Error { using Error::Error; };
struct InvalidDistribution : Error { using Error::Error; };

// Structural failures.
struct BadLength : Error { using Error::Error; };          // block length not a power of two
struct LengthMismatch : Error { using Error::Error; };
struct BudgetExceeded : Error { using Error::Error; };
struct InvariantViolation : Error { using Error::Error; };

// Multi-user / compound failures.
struct NonMonotonePath : Error { using Error::Error; };
struct RateInfeasible : Error { using Error::Error; };
struct InvalidFactorization : Error { using Error::Error; };

// Configuration / CLI failures.
struct ConfigError : Error { using Error::Error; };
struct MissingInput : Error { using Error::Error; };
struct ParseError : ConfigError { using ConfigError::ConfigError; };

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline unsigned log2_exact(std::size_t n) {
  if (!is_pow2(n)) throw BadLength("block length must be a power of two, got " + std::to_string(n));
  unsigned k = 0;
  while ((std::size_t(1) << k) < n) ++k;
  return k;
}

// Bit i (0-based, MSB-first order irrelevant here) of word w.
inline int bit_of(std::size_t w, unsigned i) { return int((w >> i) & 1u); }

// Reverse the low nbits of w.
inline std::size_t bit_reverse(std::size_t w, unsigned nbits) {
  std::size_t r = 0;
  for (unsigned i = 0; i < nbits; ++i) r |= ((w >> i) & 1u) << (nbits - 1 - i);
  return r;
}

using Bits = std::vector<std::uint8_t>;  // one bit per entry, values 0/1

// Word layout used by all enumerations: bit t of the word holds symbol u_{t+1},
// so the first symbol sits in the least significant bit.
inline std::size_t bits_to_word(const Bits& b) {
  std::size_t w = 0;
  for (std::size_t t = 0; t < b.size(); ++t) w |= std::size_t(b[t] & 1u) << t;
  return w;
}

inline Bits word_to_bits(std::size_t w, unsigned n) {
  Bits b(n);
  for (unsigned t = 0; t < n; ++t) b[t] = std::uint8_t((w >> t) & 1u);
  return b;
}

}  // namespace polarlab
