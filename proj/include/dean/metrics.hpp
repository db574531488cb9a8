#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dean::metrics {

// Probability that a random anomaly outscores a random normal sample, ties
// counted as 1/2. Computed from average ranks in O(n log n).
// Throws DataError unless both classes are present.
double auc_roc(std::span<const double> scores, std::span<const int> labels);

// Average precision over descending scores. A block of tied scores is
// consumed at once and precision is taken after the whole block.
double auc_pr(std::span<const double> scores, std::span<const int> labels);

// Average ranks (1-based) of `values`; ties share the mean of their ranks.
// With `descending`, the largest value gets rank 1.
std::vector<double> average_ranks(std::span<const double> values, bool descending = false);

struct ResultsTable {
  std::vector<std::string> algorithms;
  std::vector<std::string> datasets;
  std::vector<std::vector<double>> values;  // datasets x algorithms

  std::size_t n_datasets() const { return datasets.size(); }
  std::size_t n_algorithms() const { return algorithms.size(); }
  void validate() const;
};

// CSV: header "<anything>,alg1,alg2,...", then "dataset,v1,v2,...".
ResultsTable parse_results_table(std::string_view text);
ResultsTable load_results_table(const std::filesystem::path& path);

// Per-algorithm mean of per-dataset ranks (rank 1 = highest value).
std::vector<double> mean_ranks(const ResultsTable& table);

struct RepetitionStats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
};

RepetitionStats repetition_stats(std::span<const double> values);

}  // namespace dean::metrics
