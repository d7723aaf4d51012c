#include "stereogate/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "stereogate/error.hpp"

namespace stereogate {

MetricReport metrics(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size()) throw InputError("metrics: length mismatch");
  if (y_true.empty()) throw InputError("metrics: empty input");
  const std::size_t n = y_true.size();
  const double count = static_cast<double>(n);

  double sse = 0.0;
  double sae = 0.0;
  double mean_t = 0.0;
  double mean_p = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y_true[i] - y_pred[i];
    sse += e * e;
    sae += std::abs(e);
    mean_t += y_true[i];
    mean_p += y_pred[i];
  }
  mean_t /= count;
  mean_p /= count;

  double sst = 0.0;
  double spp = 0.0;
  double stp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = y_true[i] - mean_t;
    const double dp = y_pred[i] - mean_p;
    sst += dt * dt;
    spp += dp * dp;
    stp += dt * dp;
  }

  MetricReport r;
  r.n = n;
  r.mse = sse / count;
  r.mae = sae / count;
  if (sst > 0.0) r.r2 = 1.0 - sse / sst;
  if (sst > 0.0 && spp > 0.0) r.r2_pearson = std::clamp(stp * stp / (sst * spp), 0.0, 1.0);
  return r;
}

SummaryStat summarize(std::span<const double> values) {
  SummaryStat s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(values.size()));
  return s;
}

}  // namespace stereogate
