#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imgspace/tensor.hpp"

namespace imgspace::metrics {

// Single-run evaluation. Accuracy and the P fields are fractions in [0, 1];
// noise_rate is per 10,000 samples. P fields are absent when their sample
// group is empty.
struct RunMetrics {
  std::size_t samples = 0;
  double accuracy = 0.0;
  std::optional<double> confidence;    // P_c
  std::optional<double> illusiveness;  // P_i
  std::optional<double> truth_prob;    // P_g
  double noise_rate = 0.0;             // N
  std::vector<double> train_curve;     // per-epoch accuracy, optional
  std::vector<double> test_curve;
};

// probs: [n, width] probability rows; argmax ties go to the lowest index.
RunMetrics compute_metrics(const Tensor& probs, std::span<const std::uint32_t> truths,
                           std::optional<std::uint32_t> noise_index = std::nullopt);

struct MetricsReport {
  std::size_t runs = 0;
  double accuracy = 0.0;  // A, mean over runs
  double sigma = 0.0;     // sigma_A, population std over runs
  std::optional<double> confidence;
  std::optional<double> illusiveness;
  std::optional<double> truth_prob;
  double noise_rate = 0.0;
  std::vector<double> train_curve;  // per-epoch means, when every run has one
  std::vector<double> test_curve;
};

MetricsReport aggregate(std::span<const RunMetrics> runs);

// gap[e] = train[e] - test[e]
std::vector<double> overfit_gap(std::span<const double> train, std::span<const double> test);

struct ReportRow {
  std::string experiment;
  std::string variant;
  MetricsReport report;
};

inline constexpr const char* kReportHeader = "experiment,variant,runs,A,sigma_A,P_c,P_i,P_g,N";

// One CSV line; fractions become percentages with two decimals, N keeps two
// decimals, absent values are empty fields.
std::string format_row(const ReportRow& row);
void write_report_csv(const std::filesystem::path& path, std::span<const ReportRow> rows);

}  // namespace imgspace::metrics
