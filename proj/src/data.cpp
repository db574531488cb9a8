#include "dean/data.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

#include "dean/error.hpp"
#include "dean/random.hpp"

namespace dean::data {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::optional<double> parse_real(std::string_view cell) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

void check_binary(const std::vector<int>& v, std::size_t rows, const char* what) {
  if (v.size() != rows) {
    throw DataError(std::string(what) + " length does not match row count");
  }
  for (int x : v) {
    if (x != 0 && x != 1) throw DataError(std::string(what) + " must contain only 0/1");
  }
}

}  // namespace

void Dataset::validate() const {
  if (!values.all_finite()) throw DataError("dataset contains non-finite values");
  if (!feature_names.empty()) {
    if (feature_names.size() != cols()) {
      throw DataError("feature name count does not match column count");
    }
    std::set<std::string> seen(feature_names.begin(), feature_names.end());
    if (seen.size() != feature_names.size()) throw DataError("duplicate feature names");
  }
}

void LabeledDataset::validate() const {
  data.validate();
  if (labels) check_binary(*labels, rows(), "labels");
  if (groups) check_binary(*groups, rows(), "groups");
}

LabeledDataset LabeledDataset::select_rows(std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.data.values = data.values.select_rows(indices);
  out.data.feature_names = data.feature_names;
  auto pick = [&](const std::vector<int>& v) {
    std::vector<int> r;
    r.reserve(indices.size());
    for (auto i : indices) r.push_back(v[i]);
    return r;
  };
  if (labels) out.labels = pick(*labels);
  if (groups) out.groups = pick(*groups);
  return out;
}

LabeledDataset parse_csv(std::string_view text, std::optional<std::string> label_col,
                         std::optional<std::string> group_col, std::string_view source) {
  std::vector<std::string_view> lines;
  {
    std::size_t start = 0;
    while (start <= text.size()) {
      auto nl = text.find('\n', start);
      if (nl == std::string_view::npos) nl = text.size();
      auto line = text.substr(start, nl - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.push_back(line);
      start = nl + 1;
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  }
  const std::string where(source);
  if (lines.empty()) throw DataError(where + ": missing header row");

  std::vector<std::string> header;
  for (auto f : split_fields(lines[0])) header.emplace_back(trim(f));

  auto find_col = [&](const std::optional<std::string>& name) -> std::optional<std::size_t> {
    if (!name) return std::nullopt;
    auto it = std::find(header.begin(), header.end(), *name);
    if (it == header.end()) throw DataError(where + ": column \"" + *name + "\" not found");
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto label_idx = find_col(label_col);
  const auto group_idx = find_col(group_col);
  if (label_idx && group_idx && *label_idx == *group_idx) {
    throw DataError(where + ": label and group column must differ");
  }

  std::vector<std::size_t> feature_idx;
  LabeledDataset out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == label_idx || c == group_idx) continue;
    feature_idx.push_back(c);
    out.data.feature_names.push_back(header[c]);
  }

  const std::size_t n_rows = lines.size() - 1;
  std::vector<double> values;
  values.reserve(n_rows * feature_idx.size());
  std::vector<int> labels;
  std::vector<int> groups;
  std::vector<double> row(header.size());
  for (std::size_t r = 0; r < n_rows; ++r) {
    const auto fields = split_fields(lines[r + 1]);
    if (fields.size() != header.size()) {
      throw DataError(where + ": row " + std::to_string(r + 1) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      auto v = parse_real(fields[c]);
      if (!v) {
        throw DataError(where + ": cannot parse \"" + std::string(trim(fields[c])) + "\" at row " +
                        std::to_string(r + 1) + ", column \"" + header[c] + "\"");
      }
      row[c] = *v;
    }
    auto binary = [&](std::size_t c, const char* what) {
      if (row[c] != 0.0 && row[c] != 1.0) {
        throw DataError(where + ": " + what + " value at row " + std::to_string(r + 1) +
                        ", column \"" + header[c] + "\" is not 0 or 1");
      }
      return static_cast<int>(row[c]);
    };
    if (label_idx) labels.push_back(binary(*label_idx, "label"));
    if (group_idx) groups.push_back(binary(*group_idx, "group"));
    for (auto c : feature_idx) values.push_back(row[c]);
  }
  out.data.values = Matrix(n_rows, feature_idx.size(), std::move(values));
  if (label_idx) out.labels = std::move(labels);
  if (group_idx) out.groups = std::move(groups);
  out.data.validate();
  return out;
}

LabeledDataset load_csv(const std::filesystem::path& path, std::optional<std::string> label_col,
                        std::optional<std::string> group_col) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), std::move(label_col), std::move(group_col), path.string());
}

void write_csv(const LabeledDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const auto cols = data.data.cols();
  std::vector<std::string> names = data.data.feature_names;
  if (names.empty()) {
    for (std::size_t c = 0; c < cols; ++c) names.push_back("x" + std::to_string(c));
  }
  for (std::size_t c = 0; c < cols; ++c) out << (c ? "," : "") << names[c];
  if (data.labels) out << ",label";
  if (data.groups) out << ",group";
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", data.data.values(r, c));
      out << (c ? "," : "") << buf;
    }
    if (data.labels) out << ',' << (*data.labels)[r];
    if (data.groups) out << ',' << (*data.groups)[r];
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

ScalerParams fit_standardizer(const Dataset& train) {
  if (train.rows() == 0) throw DataError("cannot fit a standardizer on an empty dataset");
  const auto n = static_cast<double>(train.rows());
  ScalerParams p;
  p.mean.assign(train.cols(), 0.0);
  p.std.assign(train.cols(), 0.0);
  for (std::size_t r = 0; r < train.rows(); ++r) {
    for (std::size_t c = 0; c < train.cols(); ++c) p.mean[c] += train.values(r, c);
  }
  for (auto& m : p.mean) m /= n;
  for (std::size_t r = 0; r < train.rows(); ++r) {
    for (std::size_t c = 0; c < train.cols(); ++c) {
      const double d = train.values(r, c) - p.mean[c];
      p.std[c] += d * d;
    }
  }
  for (auto& s : p.std) s = std::max(std::sqrt(s / n), ScalerParams::kStdFloor);
  return p;
}

Dataset apply_standardizer(const ScalerParams& params, const Dataset& data) {
  if (params.mean.size() != data.cols() || params.std.size() != data.cols()) {
    throw DataError("standardizer expects " + std::to_string(params.mean.size()) +
                    " columns, data has " + std::to_string(data.cols()));
  }
  Dataset out = data;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    auto row = out.values.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      row[c] = (row[c] - params.mean[c]) / params.std[c];
    }
  }
  return out;
}

SyntheticKind parse_synthetic_kind(std::string_view name) {
  if (name == "linear-pattern") return SyntheticKind::linear_pattern;
  if (name == "gauss-blob") return SyntheticKind::gauss_blob;
  if (name == "sine-demo") return SyntheticKind::sine_demo;
  if (name == "biased-groups") return SyntheticKind::biased_groups;
  throw UsageError("unknown synthetic kind \"" + std::string(name) + "\"");
}

std::string_view to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::linear_pattern: return "linear-pattern";
    case SyntheticKind::gauss_blob: return "gauss-blob";
    case SyntheticKind::sine_demo: return "sine-demo";
    case SyntheticKind::biased_groups: return "biased-groups";
  }
  return "unknown";
}

LabeledDataset make_synthetic(SyntheticKind kind, std::size_t n_normal, std::size_t n_anomaly,
                              std::size_t dim, std::uint64_t seed) {
  if (kind == SyntheticKind::sine_demo) {
    if (dim != 2) throw UsageError("sine-demo requires dim = 2 (columns x, sin x)");
    if (n_normal == 0) throw UsageError("sine-demo requires at least one point");
    LabeledDataset out;
    out.data.values = Matrix(n_normal, 2);
    out.data.feature_names = {"x", "sin_x"};
    for (std::size_t i = 0; i < n_normal; ++i) {
      const double x = n_normal == 1 ? 0.0
                                     : -std::numbers::pi + 2.0 * std::numbers::pi *
                                                               static_cast<double>(i) /
                                                               static_cast<double>(n_normal - 1);
      out.data.values(i, 0) = x;
      out.data.values(i, 1) = std::sin(x);
    }
    return out;
  }
  if (kind == SyntheticKind::linear_pattern && dim < 2) {
    throw UsageError("linear-pattern requires dim >= 2");
  }
  if (dim < 1) throw UsageError("dim must be at least 1");
  if (n_normal + n_anomaly == 0) throw UsageError("requested an empty dataset");

  const std::size_t n = n_normal + n_anomaly;
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> wide(-6.0, 6.0);

  LabeledDataset out;
  out.data.values = Matrix(n, dim);
  for (std::size_t c = 0; c < dim; ++c) out.data.feature_names.push_back("x" + std::to_string(c));
  out.labels = std::vector<int>(n, 0);
  if (kind == SyntheticKind::biased_groups) out.groups = std::vector<int>(n, 0);

  for (std::size_t i = 0; i < n; ++i) {
    const bool anomaly = i >= n_normal;
    const std::size_t within = anomaly ? i - n_normal : i;
    auto row = out.data.values.row(i);
    (*out.labels)[i] = anomaly ? 1 : 0;
    switch (kind) {
      case SyntheticKind::linear_pattern:
        for (auto& v : row) v = gauss(rng);
        if (!anomaly) row[1] = row[0] + 0.01 * gauss(rng);
        break;
      case SyntheticKind::gauss_blob:
        for (auto& v : row) v = anomaly ? wide(rng) : gauss(rng);
        break;
      case SyntheticKind::biased_groups: {
        const int group = static_cast<int>(within % 2);
        (*out.groups)[i] = group;
        if (anomaly && group == 1) {
          for (auto& v : row) v = wide(rng);
        } else {
          for (auto& v : row) v = gauss(rng);
          if (anomaly) row[0] += 2.0;
          if (!anomaly && group == 1) row[dim - 1] += 0.5;
        }
        break;
      }
      case SyntheticKind::sine_demo:
        break;
    }
  }
  return out;
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& data, double train_fraction,
                                                std::uint64_t seed, bool normal_only_train) {
  if (data.rows() < 2) throw DataError("split needs at least 2 rows");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw UsageError("train fraction must lie in (0, 1]");
  }
  std::vector<std::size_t> perm(data.rows());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  auto count_for = [&](std::size_t total) {
    return static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(total) + 1e-9));
  };

  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> test_idx;
  if (normal_only_train && data.labels) {
    const auto& labels = *data.labels;
    const auto n_normal =
        static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 0));
    const std::size_t want = count_for(n_normal);
    for (auto i : perm) {
      if (labels[i] == 0 && train_idx.size() < want) {
        train_idx.push_back(i);
      } else {
        test_idx.push_back(i);
      }
    }
  } else {
    const std::size_t want = count_for(data.rows());
    train_idx.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(want));
    test_idx.assign(perm.begin() + static_cast<std::ptrdiff_t>(want), perm.end());
  }
  if (train_idx.empty()) throw DataError("train split is empty");
  return {data.select_rows(train_idx), data.select_rows(test_idx)};
}

}  // namespace dean::data
