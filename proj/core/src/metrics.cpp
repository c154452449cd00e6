#include "ikesim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ikesim/errors.hpp"

namespace ikesim {
namespace {

std::vector<double> sorted_copy(std::span<const double> samples) {
  if (samples.empty()) throw EmptySample("sample is empty");
  std::vector<double> v(samples.begin(), samples.end());
  std::sort(v.begin(), v.end());
  return v;
}

double nearest_rank(const std::vector<double>& sorted, double p) {
  if (!(p >= 0.0 && p <= 100.0)) throw std::invalid_argument("percentile outside [0, 100]");
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

}  // namespace

double setup_time(const ConnectionTrace& trace) {
  if (!trace.established_at) throw NotEstablished("connection was not established");
  const auto first = std::find_if(trace.sends.begin(), trace.sends.end(), [](const TraceEntry& e) {
    return e.from == Role::initiator && e.exchange == ExchangeType::ike_sa_init;
  });
  if (first == trace.sends.end()) throw NotEstablished("trace has no IKE_SA_INIT emission");
  return to_millis(*trace.established_at - first->time);
}

double percentile(std::span<const double> samples, double p) {
  return nearest_rank(sorted_copy(samples), p);
}

SummaryStats summarize(std::span<const double> samples) {
  const auto sorted = sorted_copy(samples);
  SummaryStats s;
  s.count = sorted.size();
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(s.count);
  s.median = nearest_rank(sorted, 50.0);
  s.p95 = nearest_rank(sorted, 95.0);
  s.p99 = nearest_rank(sorted, 99.0);
  s.min = sorted.front();
  s.max = sorted.back();
  return s;
}

std::vector<std::pair<double, double>> ecdf(std::span<const double> samples) {
  const auto sorted = sorted_copy(samples);
  const auto n = static_cast<double>(sorted.size());
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
    out.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
  }
  return out;
}

double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("pearson: samples differ in length");
  if (a.size() < 2) throw std::invalid_argument("pearson: need at least two points");
  const auto n = static_cast<double>(a.size());
  const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double cov = 0.0;
  double var_a = 0.0;
  double var_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a == 0.0 || var_b == 0.0) throw DegenerateSample("zero variance");
  return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

double order_statistic_correlation(std::span<const double> a, std::span<const double> b) {
  const auto sa = sorted_copy(a);
  const auto sb = sorted_copy(b);
  return pearson(sa, sb);
}

}  // namespace ikesim
