#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dean/matrix.hpp"

namespace dean::data {

// Feature matrix with optional column names. All values are finite.
struct Dataset {
  Matrix values;
  std::vector<std::string> feature_names;  // empty or exactly cols() entries

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }

  // Throws DataError when a value is non-finite or the names are malformed.
  void validate() const;
};

// Dataset plus optional anomaly labels (1 = anomaly) and a binary protected
// attribute (0 = protected, 1 = unprotected).
struct LabeledDataset {
  Dataset data;
  std::optional<std::vector<int>> labels;
  std::optional<std::vector<int>> groups;

  std::size_t rows() const { return data.rows(); }
  void validate() const;
  LabeledDataset select_rows(std::span<const std::size_t> indices) const;
};

struct ScalerParams {
  static constexpr double kStdFloor = 1e-12;
  std::vector<double> mean;
  std::vector<double> std;
};

LabeledDataset load_csv(const std::filesystem::path& path,
                        std::optional<std::string> label_col = std::nullopt,
                        std::optional<std::string> group_col = std::nullopt);

// Parses CSV text; `source` only labels error messages.
LabeledDataset parse_csv(std::string_view text,
                         std::optional<std::string> label_col = std::nullopt,
                         std::optional<std::string> group_col = std::nullopt,
                         std::string_view source = "<memory>");

// Writes features followed by "label"/"group" columns when present. Reals use
// 17 significant digits.
void write_csv(const LabeledDataset& data, const std::filesystem::path& path);

ScalerParams fit_standardizer(const Dataset& train);
Dataset apply_standardizer(const ScalerParams& params, const Dataset& data);

enum class SyntheticKind { linear_pattern, gauss_blob, sine_demo, biased_groups };

SyntheticKind parse_synthetic_kind(std::string_view name);
std::string_view to_string(SyntheticKind kind);

// Deterministic generators. Normal rows come first, then anomalies.
//   linear-pattern: normals satisfy x1 = x0 + N(0, 0.01^2); other dims N(0,1);
//                   anomalies draw every dim N(0,1) independently.
//   gauss-blob:     normals N(0, I), anomalies uniform in [-6, 6]^dim.
//   sine-demo:      n_normal grid points x in [-pi, pi], rows (x, sin x).
//   biased-groups:  gauss-blob with alternating group attribute; group-0
//                   anomalies are N(0, I) shifted by 2 along x0, and group-1
//                   normals are shifted by 0.5 along the last feature.
LabeledDataset make_synthetic(SyntheticKind kind, std::size_t n_normal, std::size_t n_anomaly,
                              std::size_t dim, std::uint64_t seed);

// Shuffled split. With `normal_only_train`, the train part holds the first
// floor(fraction * n_normal) normals of the permutation and every anomaly goes
// to the test part; otherwise the first floor(fraction * rows) rows train.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& data, double train_fraction,
                                                std::uint64_t seed, bool normal_only_train);

}  // namespace dean::data
