#include "unimodal/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

namespace unimodal {
namespace {

void validate(const std::vector<double>& probs) {
  if (probs.size() < 2) {
    throw ContractViolation("distribution needs at least 2 classes, got " +
                            std::to_string(probs.size()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = probs[i];
    if (!std::isfinite(p) || p < -kNegativeTolerance) {
      throw ContractViolation("distribution entry " + std::to_string(i) +
                              " is negative or non-finite");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kSumTolerance) {
    std::ostringstream os;
    os << "distribution sums to " << std::setprecision(17) << total << ", expected 1";
    throw ContractViolation(os.str());
  }
}

}  // namespace

Distribution::Distribution(std::initializer_list<double> probs)
    : Distribution(std::vector<double>(probs)) {}

Distribution::Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
  validate(probs_);
}

Distribution Distribution::normalized(std::vector<double> probs, double tolerance) {
  for (double& p : probs) {
    if (p < 0.0 && p > -tolerance) p = 0.0;
  }
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (!(std::abs(total - 1.0) <= tolerance)) {
    throw ContractViolation("cannot renormalize: total " + std::to_string(total) +
                            " is too far from 1");
  }
  for (double& p : probs) p /= total;
  return Distribution(std::move(probs));
}

Distribution Distribution::uniform(std::size_t k) {
  return Distribution(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

Distribution Distribution::one_hot(std::size_t k, ModeIndex at) {
  check_mode(at, k);
  std::vector<double> v(k, 0.0);
  v[at.zero_based()] = 1.0;
  return Distribution(std::move(v));
}

double Distribution::at(ModeIndex k) const {
  check_mode(k, probs_.size());
  return probs_[k.zero_based()];
}

Distribution Distribution::reversed() const {
  std::vector<double> v(probs_.rbegin(), probs_.rend());
  return Distribution(std::move(v));
}

void check_mode(ModeIndex k, std::size_t size) {
  if (k.value < 1 || static_cast<std::size_t>(k.value) > size) {
    throw ContractViolation("mode index " + std::to_string(k.value) +
                            " outside 1.." + std::to_string(size));
  }
}

std::vector<double> parse_csv_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) {
      throw ContractViolation("empty entry in list \"" + text + "\"");
    }
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(item.substr(first), &used);
    } catch (const std::exception&) {
      throw ContractViolation("cannot parse \"" + item + "\" as a number");
    }
    if (item.find_first_not_of(" \t", first + used) != std::string::npos) {
      throw ContractViolation("trailing characters in \"" + item + "\"");
    }
    out.push_back(value);
  }
  return out;
}

std::string format_doubles(std::span<const double> values, int precision) {
  std::ostringstream os;
  os << std::setprecision(precision);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << ',';
    os << values[i];
  }
  return os.str();
}

}  // namespace unimodal
