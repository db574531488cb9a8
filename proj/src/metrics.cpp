#include "dean/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dean/error.hpp"

namespace dean::metrics {

namespace {

void check_scored(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw DataError("scores and labels differ in length");
  }
  for (int l : labels) {
    if (l != 0 && l != 1) throw DataError("labels must be 0 or 1");
  }
  for (double s : scores) {
    if (std::isnan(s)) throw DataError("scores contain NaN");
  }
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values, bool descending) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return descending ? values[a] > values[b] : values[a] < values[b];
  });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Positions i..j-1 share ranks i+1..j.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = rank;
    i = j;
  }
  return ranks;
}

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
  check_scored(scores, labels);
  const auto n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const auto n_neg = static_cast<double>(labels.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DataError("AUC-ROC needs both classes");
  const auto ranks = average_ranks(scores);
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (labels[i] == 1) rank_sum += ranks[i];
  }
  // u counts pairs won by the positives, v pairs won by the negatives; both are
  // exact. Dividing the smaller one keeps auc(s) + auc(-s) == 1 bit for bit.
  const double pairs = n_pos * n_neg;
  const double u = rank_sum - n_pos * (n_pos + 1.0) / 2.0;
  const double v = pairs - u;
  return u <= v ? u / pairs : 1.0 - v / pairs;
}

double auc_pr(std::span<const double> scores, std::span<const int> labels) {
  check_scored(scores, labels);
  const auto n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  if (n_pos == 0) throw DataError("AUC-PR needs at least one positive");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double tp = 0.0;
  double fp = 0.0;
  double ap = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    double block_pos = 0.0;
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      if (labels[order[j]] == 1) {
        block_pos += 1.0;
      } else {
        fp += 1.0;
      }
      ++j;
    }
    tp += block_pos;
    if (block_pos > 0.0) ap += (tp / (tp + fp)) * (block_pos / n_pos);
    i = j;
  }
  return ap;
}

void ResultsTable::validate() const {
  if (values.size() != datasets.size()) throw DataError("results table row count mismatch");
  for (const auto& row : values) {
    if (row.size() != algorithms.size()) throw DataError("results table has a missing cell");
    for (double v : row) {
      if (!std::isfinite(v)) throw DataError("results table has a non-finite cell");
    }
  }
}

ResultsTable parse_results_table(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  ResultsTable t;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(s);
    while (std::getline(ss, cell, ',')) {
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
      while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
      out.push_back(cell);
    }
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  if (!std::getline(in, line)) throw DataError("results table is empty");
  auto header = split(line);
  if (header.size() < 2) throw DataError("results table needs at least one algorithm column");
  t.algorithms.assign(header.begin() + 1, header.end());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto cells = split(line);
    if (cells.size() != header.size()) {
      throw DataError("results table line " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    }
    t.datasets.push_back(cells[0]);
    std::vector<double> row;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      double v = 0.0;
      const auto& s = cells[c];
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw DataError("results table line " + std::to_string(line_no) + ", column \"" +
                        header[c] + "\": cannot parse \"" + s + "\"");
      }
      row.push_back(v);
    }
    t.values.push_back(std::move(row));
  }
  t.validate();
  return t;
}

ResultsTable load_results_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_results_table(buf.str());
}

std::vector<double> mean_ranks(const ResultsTable& table) {
  table.validate();
  if (table.n_datasets() < 1 || table.n_algorithms() < 2) {
    throw DataError("mean ranks need at least one dataset and two algorithms");
  }
  std::vector<double> sum(table.n_algorithms(), 0.0);
  for (const auto& row : table.values) {
    const auto r = average_ranks(row, /*descending=*/true);
    for (std::size_t a = 0; a < r.size(); ++a) sum[a] += r[a];
  }
  for (auto& s : sum) s /= static_cast<double>(table.n_datasets());
  return sum;
}

RepetitionStats repetition_stats(std::span<const double> values) {
  if (values.size() < 2) throw DataError("repetition statistics need at least two values");
  // Summing in sorted order makes the result independent of input order.
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  // Shifted by the minimum so constant inputs give exactly that value.
  const double base = sorted.front();
  double sum = 0.0;
  for (double v : sorted) sum += v - base;
  RepetitionStats s;
  s.mean = base + sum / n;
  double sq = 0.0;
  for (double v : sorted) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / (n - 1.0));
  return s;
}

}  // namespace dean::metrics
