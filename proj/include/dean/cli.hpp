#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dean/data.hpp"
#include "dean/ensemble.hpp"
#include "dean/fairness.hpp"
#include "dean/matrix.hpp"
#include "dean/metrics.hpp"

namespace dean::cli {

// Entry point behind the `dean` executable. `args` excludes the program name.
// Returns 0 on success, 1 on usage errors, 2 on data/format errors and 3 on
// numeric failures; messages go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Shortest text that parses back to the same double; integral values keep a
// trailing ".0".
std::string format_real(double v);

// Score file: header "row_index,score", one line per row.
void write_scores(const std::filesystem::path& path, const std::vector<double>& scores);
std::vector<double> read_scores(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// bench

struct BenchConfig {
  data::SyntheticKind suite = data::SyntheticKind::linear_pattern;
  std::optional<std::filesystem::path> data_path;  // replaces the synthetic suite
  std::optional<std::string> label_col;
  double train_fraction = 0.5;                     // only with data_path
  std::size_t train_normals = 2000;
  std::size_t test_normals = 500;
  std::size_t anomalies = 100;
  std::size_t dim = 8;
  std::size_t repeats = 10;    // >= 2
  std::vector<std::size_t> ks;  // empty: 1, 2, 4, ... plus the ensemble size
  ensemble::EnsembleConfig ensemble;
  std::uint64_t seed = 0;       // data seed; run r trains with derive_seed(seed, r)
};

struct BenchResult {
  std::vector<std::size_t> ks;
  std::vector<std::uint64_t> run_seeds;
  std::vector<std::vector<double>> growth_roc;  // runs x ks
  std::vector<std::vector<double>> growth_pr;
  std::vector<double> run_roc;                  // full ensemble, per run
  std::vector<double> run_pr;
  metrics::RepetitionStats roc_stats;
  metrics::RepetitionStats pr_stats;
};

// Train/test split used by bench (synthetic suite or CSV input).
std::pair<data::LabeledDataset, data::LabeledDataset> bench_data(const BenchConfig& config);

std::vector<std::size_t> geometric_grid(std::size_t n);

BenchResult run_bench(const BenchConfig& config);

// Growth CSV "k,auc_roc,auc_pr" (means over runs) and repetition CSV
// "run,seed,auc_roc,auc_pr" followed by "mean" and "std" rows.
std::string growth_csv(const BenchResult& r);
std::string repetition_csv(const BenchResult& r);

// ---------------------------------------------------------------------------
// demo-sin

struct DemoSinConfig {
  std::size_t points = 256;
  std::vector<std::size_t> hidden{100, 100, 100};
  std::size_t epochs = 1500;
  double learning_rate = 0.001;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

struct DemoSinResult {
  std::vector<double> x;
  std::vector<double> target;
  Matrix fits;  // points x 3: all_bias, no_bias, bias_but_last
  double mse_all_bias = 0.0;
  double mse_no_bias = 0.0;
  double mse_bias_but_last = 0.0;
};

// Fits sin(x) on an even grid over [-pi, pi] with relu hidden layers and a
// linear output under three bias policies.
DemoSinResult demo_sin(const DemoSinConfig& config);
std::string demo_sin_csv(const DemoSinResult& r);

// ---------------------------------------------------------------------------
// grad-check

struct GradCheckSummary {
  double max_relative_error = 0.0;
  std::size_t nets = 0;
  std::size_t checked = 0;
  std::size_t skipped_at_kinks = 0;
};

// Random networks (widths <= 16, up to 4 layers, relu/selu hidden units, every
// bias policy) on random batches under squared loss.
GradCheckSummary random_grad_check(std::size_t nets, std::uint64_t seed, double eps);

}  // namespace dean::cli
