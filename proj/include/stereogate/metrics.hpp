#pragma once

#include <cstddef>
#include <optional>
#include <span>

namespace stereogate {

struct MetricReport {
  double mse = 0.0;
  double mae = 0.0;
  // 1 - SS_res / SS_tot; unset when y_true is constant.
  std::optional<double> r2;
  // Squared sample correlation; unset when either vector is constant.
  std::optional<double> r2_pearson;
  std::size_t n = 0;
};

// Throws InputError on a length mismatch or empty input.
MetricReport metrics(std::span<const double> y_true, std::span<const double> y_pred);

// Mean and population standard deviation of a set of values.
struct SummaryStat {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
};

SummaryStat summarize(std::span<const double> values);

}  // namespace stereogate
