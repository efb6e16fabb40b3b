#include "imgspace/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "imgspace/errors.hpp"

namespace imgspace::metrics {

RunMetrics compute_metrics(const Tensor& probs, std::span<const std::uint32_t> truths,
                           std::optional<std::uint32_t> noise_index) {
  if (truths.empty() || probs.empty()) throw MetricsError("cannot score an empty prediction set");
  if (probs.rank() != 2 || probs.dim(0) != truths.size()) {
    throw MetricsError("prediction rows " + to_string(probs.shape()) + " do not match " +
                       std::to_string(truths.size()) + " truths");
  }
  const std::size_t n = truths.size(), width = probs.dim(1);
  std::size_t correct = 0, wrong = 0, as_noise = 0;
  double sum_conf = 0.0, sum_ill = 0.0, sum_truth = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t t = truths[i];
    if (t >= width) throw MetricsError("truth " + std::to_string(t) + " outside prediction width");
    if (noise_index && t == *noise_index) {
      throw MetricsError("a truth label equals the noise category");
    }
    const double* row = probs.data() + i * width;
    std::size_t best = 0;
    for (std::size_t j = 1; j < width; ++j) {
      if (row[j] > row[best]) best = j;
    }
    if (best == t) {
      ++correct;
      sum_conf += row[best];
    } else {
      ++wrong;
      sum_ill += row[best];
      sum_truth += row[t];
    }
    if (noise_index && best == *noise_index) ++as_noise;
  }
  RunMetrics m;
  m.samples = n;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  if (correct) m.confidence = sum_conf / static_cast<double>(correct);
  if (wrong) {
    m.illusiveness = sum_ill / static_cast<double>(wrong);
    m.truth_prob = sum_truth / static_cast<double>(wrong);
  }
  m.noise_rate = 10000.0 * static_cast<double>(as_noise) / static_cast<double>(n);
  return m;
}

namespace {

std::optional<double> mean_defined(std::span<const RunMetrics> runs,
                                   std::optional<double> RunMetrics::*field) {
  double sum = 0.0;
  std::size_t k = 0;
  for (const auto& r : runs) {
    if (r.*field) {
      sum += *(r.*field);
      ++k;
    }
  }
  if (!k) return std::nullopt;
  return sum / static_cast<double>(k);
}

std::vector<double> mean_curve(std::span<const RunMetrics> runs,
                               std::vector<double> RunMetrics::*field) {
  const std::size_t len = (runs.front().*field).size();
  for (const auto& r : runs) {
    if ((r.*field).size() != len) return {};
  }
  std::vector<double> out(len, 0.0);
  for (const auto& r : runs) {
    for (std::size_t e = 0; e < len; ++e) out[e] += (r.*field)[e];
  }
  for (double& v : out) v /= static_cast<double>(runs.size());
  return out;
}

}  // namespace

MetricsReport aggregate(std::span<const RunMetrics> runs) {
  if (runs.empty()) throw MetricsError("aggregate needs at least one run");
  const double r = static_cast<double>(runs.size());
  MetricsReport rep;
  rep.runs = runs.size();
  double sum = 0.0, noise = 0.0;
  for (const auto& m : runs) {
    sum += m.accuracy;
    noise += m.noise_rate;
  }
  rep.accuracy = sum / r;
  double sq = 0.0;
  for (const auto& m : runs) {
    const double d = m.accuracy - rep.accuracy;
    sq += d * d;
  }
  rep.sigma = std::sqrt(sq / r);
  rep.noise_rate = noise / r;
  rep.confidence = mean_defined(runs, &RunMetrics::confidence);
  rep.illusiveness = mean_defined(runs, &RunMetrics::illusiveness);
  rep.truth_prob = mean_defined(runs, &RunMetrics::truth_prob);
  rep.train_curve = mean_curve(runs, &RunMetrics::train_curve);
  rep.test_curve = mean_curve(runs, &RunMetrics::test_curve);
  return rep;
}

std::vector<double> overfit_gap(std::span<const double> train, std::span<const double> test) {
  if (train.size() != test.size()) {
    throw StateError("train curve has " + std::to_string(train.size()) +
                     " epochs, test curve " + std::to_string(test.size()));
  }
  std::vector<double> gap(train.size());
  for (std::size_t e = 0; e < train.size(); ++e) gap[e] = train[e] - test[e];
  return gap;
}

namespace {

std::string pct(std::optional<double> v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * *v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string format_row(const ReportRow& row) {
  const auto& r = row.report;
  char n[32];
  std::snprintf(n, sizeof n, "%.2f", r.noise_rate);
  return csv_field(row.experiment) + ',' + csv_field(row.variant) + ',' +
         std::to_string(r.runs) + ',' + pct(r.accuracy) + ',' + pct(r.sigma) + ',' +
         pct(r.confidence) + ',' + pct(r.illusiveness) + ',' + pct(r.truth_prob) + ',' + n;
}

void write_report_csv(const std::filesystem::path& path, std::span<const ReportRow> rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << kReportHeader << '\n';
  for (const auto& row : rows) out << format_row(row) << '\n';
}

}  // namespace imgspace::metrics
