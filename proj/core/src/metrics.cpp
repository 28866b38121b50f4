#include "ladbnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ladbnet/error.hpp"

namespace ladbnet {
namespace {

void require_pair(std::span<const double> a, std::span<const double> p, std::size_t min_len,
                  const char* what) {
  if (a.size() != p.size()) {
    throw ContractError(std::string(what) + ": length mismatch (" + std::to_string(a.size()) +
                        " vs " + std::to_string(p.size()) + ")");
  }
  if (a.size() < min_len) {
    throw ContractError(std::string(what) + " needs at least " + std::to_string(min_len) +
                        " values");
  }
}

}  // namespace

void CompensatedSum::add(double value) {
  const double t = sum_ + value;
  if (std::fabs(sum_) >= std::fabs(value)) {
    carry_ += (sum_ - t) + value;
  } else {
    carry_ += (value - t) + sum_;
  }
  sum_ = t;
}

double mape(std::span<const double> actual, std::span<const double> predicted, double floor) {
  require_pair(actual, predicted, 1, "mape");
  CompensatedSum total;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double a = std::fabs(actual[i]);
    if (!(a >= floor)) {
      throw GuardError("mape: |actual| = " + std::to_string(a) + " at index " +
                       std::to_string(i) + " is below the floor " + std::to_string(floor));
    }
    total.add(std::fabs(actual[i] - predicted[i]) / a);
  }
  return 100.0 * total.value() / static_cast<double>(actual.size());
}

double r_squared(std::span<const double> actual, std::span<const double> predicted) {
  require_pair(actual, predicted, 2, "r_squared");
  CompensatedSum mean_sum;
  for (const double a : actual) mean_sum.add(a);
  const double mean = mean_sum.value() / static_cast<double>(actual.size());
  CompensatedSum ss_res, ss_tot;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double r = actual[i] - predicted[i];
    const double d = actual[i] - mean;
    ss_res.add(r * r);
    ss_tot.add(d * d);
  }
  if (ss_tot.value() == 0.0) throw NumericError("r_squared: actual values have zero variance");
  return 1.0 - ss_res.value() / ss_tot.value();
}

double nearest_rank(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ContractError("percentile of an empty sample");
  if (!(p > 0.0 && p <= 100.0)) throw ContractError("percentile must lie in (0, 100]");
  const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(sorted.size()) / 100.0));
  return sorted[std::max<std::size_t>(rank, 1) - 1];
}

}  // namespace ladbnet
