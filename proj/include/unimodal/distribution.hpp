#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace unimodal {

/// Raised when a caller breaks a documented precondition (bad shape, bad
/// index, malformed distribution).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for arguments outside the mathematical domain of an operation
/// (e.g. K < 3 for the unimodal-fraction recursion).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Class index in 1..K.
struct ModeIndex {
  int value = 1;

  constexpr ModeIndex() = default;
  constexpr explicit ModeIndex(int v) : value(v) {}

  constexpr int zero_based() const { return value - 1; }
  friend constexpr bool operator==(ModeIndex, ModeIndex) = default;
  friend constexpr auto operator<=>(ModeIndex, ModeIndex) = default;
};

inline constexpr double kNegativeTolerance = 1e-12;
inline constexpr double kSumTolerance = 1e-9;

/// Probability vector over K >= 2 ordered classes.
///
/// Construction validates nonnegativity (down to -1e-12) and the unit sum
/// (within 1e-9). Entries are stored as given; no renormalization happens.
class Distribution {
 public:
  Distribution(std::initializer_list<double> probs);
  explicit Distribution(std::vector<double> probs);

  /// Renormalizes by the total and clamps tiny negatives to zero. The input
  /// must still be a distribution up to `tolerance` on the sum.
  static Distribution normalized(std::vector<double> probs, double tolerance = 1e-6);

  static Distribution uniform(std::size_t k);
  static Distribution one_hot(std::size_t k, ModeIndex at);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  /// 1-based access.
  double at(ModeIndex k) const;

  std::span<const double> values() const { return probs_; }
  const std::vector<double>& vector() const { return probs_; }

  Distribution reversed() const;

  friend bool operator==(const Distribution&, const Distribution&) = default;

 private:
  std::vector<double> probs_;
};

/// Throws ContractViolation unless 1 <= k <= size.
void check_mode(ModeIndex k, std::size_t size);

/// Parses "0.2,0.5,0.3" into a vector of doubles.
std::vector<double> parse_csv_doubles(const std::string& text);

std::string format_doubles(std::span<const double> values, int precision = 6);

}  // namespace unimodal
