#include "dean/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "dean/error.hpp"
#include "dean/nn.hpp"
#include "dean/random.hpp"
#include "dean/stat_tests.hpp"

namespace dean::cli {

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, res.ptr);
  if (std::isfinite(v) && s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("error writing " + path.string());
}

std::vector<std::size_t> parse_size_list(const std::string& text, const char* what) {
  std::vector<std::size_t> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t v = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw UsageError(std::string("bad ") + what + " list \"" + text + "\"");
    }
    values.push_back(v);
  }
  return values;
}

}  // namespace

void write_scores(const std::filesystem::path& path, const std::vector<double>& scores) {
  std::string text = "row_index,score\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    text += std::to_string(i) + "," + format_real(scores[i]) + "\n";
  }
  write_file(path, text);
}

std::vector<double> read_scores(const std::filesystem::path& path) {
  const auto table = data::parse_csv(read_file(path), std::nullopt, std::nullopt, path.string());
  const auto& names = table.data.feature_names;
  const auto col = std::find(names.begin(), names.end(), "score");
  if (col == names.end()) throw DataError(path.string() + ": no \"score\" column");
  const auto j = static_cast<std::size_t>(col - names.begin());
  std::vector<double> scores(table.rows());
  for (std::size_t i = 0; i < table.rows(); ++i) scores[i] = table.data.values(i, j);
  return scores;
}

// ---------------------------------------------------------------------------
// bench

std::pair<data::LabeledDataset, data::LabeledDataset> bench_data(const BenchConfig& config) {
  if (config.data_path) {
    if (!config.label_col) throw UsageError("bench on a CSV file needs --label-col");
    const auto all = data::load_csv(*config.data_path, config.label_col);
    return data::split(all, config.train_fraction, config.seed, true);
  }
  const std::size_t normals = config.train_normals + config.test_normals;
  if (config.train_normals == 0 || config.test_normals == 0 || config.anomalies == 0) {
    throw UsageError("bench needs train normals, test normals and anomalies");
  }
  const auto all = data::make_synthetic(config.suite, normals, config.anomalies, config.dim,
                                        config.seed);
  const double fraction =
      static_cast<double>(config.train_normals) / static_cast<double>(normals);
  return data::split(all, fraction, config.seed, true);
}

std::vector<std::size_t> geometric_grid(std::size_t n) {
  std::vector<std::size_t> ks;
  for (std::size_t k = 1; k < n; k *= 2) ks.push_back(k);
  ks.push_back(n);
  return ks;
}

BenchResult run_bench(const BenchConfig& config) {
  if (config.repeats < 2) throw UsageError("repeats must be >= 2");
  config.ensemble.validate();
  const auto [train, test] = bench_data(config);
  if (!test.labels) throw DataError("bench needs labelled test rows");

  BenchResult r;
  r.ks = config.ks.empty() ? geometric_grid(config.ensemble.n_submodels) : config.ks;
  for (const auto k : r.ks) {
    if (k < 1 || k > config.ensemble.n_submodels) {
      throw UsageError("growth grid entry " + std::to_string(k) + " outside [1, submodels]");
    }
  }
  for (std::size_t run = 0; run < config.repeats; ++run) {
    auto cfg = config.ensemble;
    cfg.master_seed = derive_seed(config.seed, run);
    r.run_seeds.push_back(cfg.master_seed);
    const auto e = ensemble::train_ensemble(train, cfg);
    const Matrix base = ensemble::ensemble_base_scores(e, test.data, cfg.threads);

    std::vector<double> roc, pr;
    for (const auto k : r.ks) {
      std::vector<bool> keep(e.size(), false);
      std::fill(keep.begin(), keep.begin() + static_cast<std::ptrdiff_t>(k), true);
      const auto s = ensemble::aggregate(base, e.power, e.weights, keep);
      roc.push_back(metrics::auc_roc(s, *test.labels));
      pr.push_back(metrics::auc_pr(s, *test.labels));
    }
    r.growth_roc.push_back(roc);
    r.growth_pr.push_back(pr);
    const auto full = ensemble::aggregate(base, e.power, e.weights);
    r.run_roc.push_back(metrics::auc_roc(full, *test.labels));
    r.run_pr.push_back(metrics::auc_pr(full, *test.labels));
  }
  r.roc_stats = metrics::repetition_stats(r.run_roc);
  r.pr_stats = metrics::repetition_stats(r.run_pr);
  return r;
}

std::string growth_csv(const BenchResult& r) {
  std::string text = "k,auc_roc,auc_pr\n";
  for (std::size_t j = 0; j < r.ks.size(); ++j) {
    double roc = 0.0, pr = 0.0;
    for (std::size_t run = 0; run < r.growth_roc.size(); ++run) {
      roc += r.growth_roc[run][j];
      pr += r.growth_pr[run][j];
    }
    const auto runs = static_cast<double>(r.growth_roc.size());
    text += std::to_string(r.ks[j]) + "," + format_real(roc / runs) + "," +
            format_real(pr / runs) + "\n";
  }
  return text;
}

std::string repetition_csv(const BenchResult& r) {
  std::string text = "run,seed,auc_roc,auc_pr\n";
  for (std::size_t run = 0; run < r.run_roc.size(); ++run) {
    text += std::to_string(run) + "," + std::to_string(r.run_seeds[run]) + "," +
            format_real(r.run_roc[run]) + "," + format_real(r.run_pr[run]) + "\n";
  }
  text += "mean,," + format_real(r.roc_stats.mean) + "," + format_real(r.pr_stats.mean) + "\n";
  text += "std,," + format_real(r.roc_stats.std) + "," + format_real(r.pr_stats.std) + "\n";
  return text;
}

// ---------------------------------------------------------------------------
// demo-sin

DemoSinResult demo_sin(const DemoSinConfig& config) {
  if (config.points < 2) throw UsageError("demo-sin needs at least 2 points");
  DemoSinResult r;
  Matrix inputs(config.points, 1);
  Matrix targets(config.points, 1);
  for (std::size_t i = 0; i < config.points; ++i) {
    const double x = -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(i) /
                                             static_cast<double>(config.points - 1);
    r.x.push_back(x);
    r.target.push_back(std::sin(x));
    inputs(i, 0) = x;
    targets(i, 0) = r.target.back();
  }

  std::vector<std::size_t> sizes{1};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(1);
  std::vector<nn::Activation> acts(config.hidden.size(), nn::Activation::relu);
  acts.push_back(nn::Activation::identity);

  nn::TrainConfig tc;
  tc.epochs = config.epochs;
  tc.patience = config.epochs;
  tc.learning_rate = config.learning_rate;
  tc.batch_size = config.batch_size;
  tc.seed = derive_seed(config.seed, 2);

  const nn::BiasPolicy policies[3] = {nn::BiasPolicy::all, nn::BiasPolicy::none,
                                      nn::BiasPolicy::all_but_last};
  double* mse[3] = {&r.mse_all_bias, &r.mse_no_bias, &r.mse_bias_but_last};
  r.fits = Matrix(config.points, 3);
  for (std::size_t p = 0; p < 3; ++p) {
    // Same initial weights for every policy; only the bias terms differ.
    auto net = nn::init_mlp(sizes, policies[p], acts, derive_seed(config.seed, 1));
    const auto trained = nn::train_regression(std::move(net), inputs, targets, tc);
    const Matrix fit = nn::forward(trained.net, inputs);
    double sum = 0.0;
    for (std::size_t i = 0; i < config.points; ++i) {
      r.fits(i, p) = fit(i, 0);
      const double d = fit(i, 0) - r.target[i];
      sum += d * d;
    }
    *mse[p] = sum / static_cast<double>(config.points);
  }
  return r;
}

std::string demo_sin_csv(const DemoSinResult& r) {
  std::string text = "x,target,all_bias,no_bias,bias_but_last\n";
  for (std::size_t i = 0; i < r.x.size(); ++i) {
    text += format_real(r.x[i]) + "," + format_real(r.target[i]);
    for (std::size_t p = 0; p < 3; ++p) text += "," + format_real(r.fits(i, p));
    text += "\n";
  }
  return text;
}

// ---------------------------------------------------------------------------
// grad-check

GradCheckSummary random_grad_check(std::size_t nets, std::uint64_t seed, double eps) {
  GradCheckSummary summary;
  summary.nets = nets;
  for (std::size_t t = 0; t < nets; ++t) {
    Rng rng(derive_seed(seed, t));
    std::uniform_int_distribution<std::size_t> width(1, 16);
    std::uniform_int_distribution<std::size_t> depth(1, 4);
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<int> policy(0, 2);
    std::normal_distribution<double> normal(0.0, 1.0);

    const std::size_t n_layers = depth(rng);
    std::vector<std::size_t> sizes{width(rng)};
    std::vector<nn::Activation> acts;
    for (std::size_t k = 0; k < n_layers; ++k) {
      sizes.push_back(width(rng));
      acts.push_back(coin(rng) ? nn::Activation::relu : nn::Activation::selu);
    }
    const auto bias = static_cast<nn::BiasPolicy>(policy(rng));
    auto net = nn::init_mlp(sizes, bias, acts, rng());
    for (auto& layer : net.layers) {
      if (layer.bias) {
        for (auto& b : *layer.bias) b = 0.5 * normal(rng);
      }
    }
    Matrix batch(std::uniform_int_distribution<std::size_t>(1, 8)(rng), sizes.front());
    for (auto& v : batch.values()) v = normal(rng);
    std::vector<double> target(sizes.back());
    for (auto& v : target) v = normal(rng);

    const auto r = nn::grad_check(net, batch, target, eps);
    summary.max_relative_error = std::max(summary.max_relative_error, r.max_relative_error);
    summary.checked += r.checked;
    summary.skipped_at_kinks += r.skipped_at_kinks;
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Command line

namespace {

struct EnsembleFlags {
  std::size_t submodels = 100;
  std::size_t epochs = 50;
  std::size_t patience = 10;
  double lr = 0.0001;
  std::size_t batch = 512;
  std::size_t bag = 200;
  unsigned power = 9;
  std::string hidden = "255,255,255";
  std::string loss = "squared";
  std::uint64_t seed = 0;
  std::size_t threads = 0;

  ensemble::EnsembleConfig config() const {
    ensemble::EnsembleConfig c;
    c.n_submodels = submodels;
    c.bag_size = bag;
    c.hidden = parse_size_list(hidden, "hidden width");
    c.power = power;
    c.train.epochs = epochs;
    c.train.patience = patience;
    c.train.learning_rate = lr;
    c.train.batch_size = batch;
    c.train.loss = nn::parse_loss(loss);
    c.master_seed = seed;
    c.threads = threads;
    c.validate();
    return c;
  }
};

void add_threads(CLI::App* app, std::size_t& threads) {
  app->add_option("--threads", threads, "worker threads (0 = all cores)")
      ->envname("DEAN_THREADS");
}

void add_ensemble_flags(CLI::App* app, EnsembleFlags& f) {
  app->add_option("--submodels", f.submodels, "ensemble size")->capture_default_str();
  app->add_option("--epochs", f.epochs, "training epochs per submodel")->capture_default_str();
  app->add_option("--patience", f.patience, "early-stopping patience")->capture_default_str();
  app->add_option("--lr", f.lr, "Adam learning rate")->capture_default_str();
  app->add_option("--batch", f.batch, "mini-batch size")->capture_default_str();
  app->add_option("--bag", f.bag, "features per submodel")->capture_default_str();
  app->add_option("--power", f.power, "score aggregation power")->capture_default_str();
  app->add_option("--hidden", f.hidden, "comma-separated hidden widths")->capture_default_str();
  app->add_option("--loss", f.loss, "squared or absolute")->capture_default_str();
  app->add_option("--seed", f.seed, "master seed")->capture_default_str();
  add_threads(app, f.threads);
}

std::string report_line(const fairness::FairnessReport& r) {
  return "auc_roc=" + format_real(r.overall_auc) + " auc_group0=" + format_real(r.auc_group0) +
         " auc_group1=" + format_real(r.auc_group1) +
         " fairness=" + format_real(r.fairness_score) + " deviation=" + format_real(r.deviation());
}

metrics::Alternative parse_alternative(const std::string& s) {
  if (s == "two-sided") return metrics::Alternative::two_sided;
  if (s == "greater") return metrics::Alternative::greater;
  if (s == "less") return metrics::Alternative::less;
  throw UsageError("unknown alternative \"" + s + "\"");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deep ensemble anomaly detection"};
  app.name("dean");
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "train an ensemble on normal rows");
  std::filesystem::path train_data, train_model;
  std::optional<std::string> train_label, train_group;
  EnsembleFlags train_flags;
  train_cmd->add_option("--data", train_data, "training CSV")->required();
  train_cmd->add_option("--model", train_model, "output model JSON")->required();
  train_cmd->add_option("--label-col", train_label, "label column; anomalies are dropped");
  train_cmd->add_option("--group-col", train_group, "column excluded from the features");
  add_ensemble_flags(train_cmd, train_flags);

  // score
  auto* score_cmd = app.add_subcommand("score", "score rows with a trained ensemble");
  std::filesystem::path score_model, score_data, score_out;
  std::optional<std::string> score_label, score_group;
  std::size_t score_threads = 0;
  score_cmd->add_option("--model", score_model, "model JSON")->required();
  score_cmd->add_option("--data", score_data, "CSV to score")->required();
  score_cmd->add_option("--out", score_out, "output score CSV")->required();
  score_cmd->add_option("--label-col", score_label, "column excluded from the features");
  score_cmd->add_option("--group-col", score_group, "column excluded from the features");
  add_threads(score_cmd, score_threads);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "AUC-ROC and AUC-PR of a score file");
  std::filesystem::path eval_scores, eval_data;
  std::string eval_label;
  std::optional<std::string> eval_group;
  eval_cmd->add_option("--scores", eval_scores, "score CSV")->required();
  eval_cmd->add_option("--data", eval_data, "labelled CSV")->required();
  eval_cmd->add_option("--label-col", eval_label, "label column")->required();
  eval_cmd->add_option("--group-col", eval_group, "group column; adds a fairness report");

  // cmp
  auto* cmp_cmd = app.add_subcommand("cmp", "Friedman/Wilcoxon/Holm comparison of results");
  std::filesystem::path cmp_results;
  std::optional<std::filesystem::path> cmp_out;
  double cmp_alpha = 0.05;
  std::string cmp_alternative = "two-sided";
  std::optional<std::string> cmp_control;
  cmp_cmd->add_option("--results", cmp_results, "datasets x algorithms CSV")->required();
  cmp_cmd->add_option("--alpha", cmp_alpha, "significance level")->capture_default_str();
  cmp_cmd->add_option("--alternative", cmp_alternative, "two-sided, greater or less")
      ->capture_default_str();
  cmp_cmd->add_option("--control", cmp_control, "compare every algorithm against this one");
  cmp_cmd->add_option("--out", cmp_out, "CSV report");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "growth curves and repetition statistics");
  BenchConfig bench;
  EnsembleFlags bench_flags;
  std::string bench_suite = "linear-pattern";
  std::string bench_ks;
  std::optional<std::filesystem::path> bench_data_path;
  std::filesystem::path growth_out = "growth.csv", rep_out = "repetitions.csv";
  bench_cmd->add_option("--suite", bench_suite, "linear-pattern, gauss-blob or biased-groups")
      ->capture_default_str();
  bench_cmd->add_option("--data", bench_data_path, "labelled CSV instead of a synthetic suite");
  bench_cmd->add_option("--label-col", bench.label_col, "label column of --data");
  bench_cmd->add_option("--train-fraction", bench.train_fraction,
                        "share of normals used for training with --data")
      ->capture_default_str();
  bench_cmd->add_option("--train-normals", bench.train_normals)->capture_default_str();
  bench_cmd->add_option("--test-normals", bench.test_normals)->capture_default_str();
  bench_cmd->add_option("--anomalies", bench.anomalies)->capture_default_str();
  bench_cmd->add_option("--dim", bench.dim)->capture_default_str();
  bench_cmd->add_option("--repeats", bench.repeats, "reseeded runs")->capture_default_str();
  bench_cmd->add_option("--ks", bench_ks, "comma-separated growth grid");
  bench_cmd->add_option("--growth-out", growth_out)->capture_default_str();
  bench_cmd->add_option("--rep-out", rep_out)->capture_default_str();
  add_ensemble_flags(bench_cmd, bench_flags);

  // fairness
  auto* fair_cmd = app.add_subcommand("fairness", "fairness-aware training, pruning or weighting");
  std::string fair_mode = "prune";
  std::optional<std::filesystem::path> fair_data, fair_out, fair_model;
  std::optional<std::string> fair_label, fair_group;
  std::size_t fair_normals = 2000, fair_anomalies = 200, fair_dim = 8;
  fairness::FairnessConfig fcfg;
  EnsembleFlags fair_flags;
  fair_flags.submodels = 50;
  fair_cmd->add_option("--mode", fair_mode, "loss, prune or weight")
      ->check(CLI::IsMember({"loss", "prune", "weight"}))
      ->capture_default_str();
  fair_cmd->add_option("--data", fair_data, "CSV instead of the biased-groups suite");
  fair_cmd->add_option("--label-col", fair_label);
  fair_cmd->add_option("--group-col", fair_group);
  fair_cmd->add_option("--normals", fair_normals)->capture_default_str();
  fair_cmd->add_option("--anomalies", fair_anomalies)->capture_default_str();
  fair_cmd->add_option("--dim", fair_dim)->capture_default_str();
  fair_cmd->add_option("--theta", fcfg.theta, "fairness loss weight")->capture_default_str();
  fair_cmd->add_option("--prune-fraction", fcfg.prune_fraction)->capture_default_str();
  fair_cmd->add_option("--ga-population", fcfg.ga.population)->capture_default_str();
  fair_cmd->add_option("--ga-generations", fcfg.ga.generations)->capture_default_str();
  fair_cmd->add_option("--ga-sigma", fcfg.ga.mutation_sigma)->capture_default_str();
  fair_cmd->add_option("--ga-elite", fcfg.ga.elite)->capture_default_str();
  fair_cmd->add_option("--out", fair_out, "CSV with the before/after reports");
  fair_cmd->add_option("--model-out", fair_model, "write the resulting model");
  add_ensemble_flags(fair_cmd, fair_flags);

  // demo-sin
  auto* sin_cmd = app.add_subcommand("demo-sin", "bias-policy comparison on sin(x)");
  DemoSinConfig sin_cfg;
  std::filesystem::path sin_out = "demo_sin.csv";
  sin_cmd->add_option("--points", sin_cfg.points)->capture_default_str();
  sin_cmd->add_option("--epochs", sin_cfg.epochs)->capture_default_str();
  sin_cmd->add_option("--lr", sin_cfg.learning_rate)->capture_default_str();
  sin_cmd->add_option("--batch", sin_cfg.batch_size)->capture_default_str();
  sin_cmd->add_option("--seed", sin_cfg.seed)->capture_default_str();
  sin_cmd->add_option("--out", sin_out)->capture_default_str();

  // grad-check
  auto* grad_cmd = app.add_subcommand("grad-check", "finite-difference gradient check");
  std::size_t grad_nets = 100;
  std::uint64_t grad_seed = 0;
  double grad_eps = 1e-5, grad_tol = 1e-4;
  grad_cmd->add_option("--nets", grad_nets)->capture_default_str();
  grad_cmd->add_option("--seed", grad_seed)->capture_default_str();
  grad_cmd->add_option("--eps", grad_eps)->capture_default_str();
  grad_cmd->add_option("--tolerance", grad_tol)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train_cmd->parsed()) {
      const auto cfg = train_flags.config();
      auto ds = data::load_csv(train_data, train_label, train_group);
      const auto e = ensemble::train_ensemble(ds, cfg);
      ensemble::save(e, train_model);
    } else if (score_cmd->parsed()) {
      const auto e = ensemble::load(score_model);
      const auto ds = data::load_csv(score_data, score_label, score_group);
      write_scores(score_out, ensemble::ensemble_score(e, ds.data, score_threads));
    } else if (eval_cmd->parsed()) {
      const auto scores = read_scores(eval_scores);
      const auto ds = data::load_csv(eval_data, eval_label, eval_group);
      if (scores.size() != ds.rows()) {
        throw DataError("score file has " + std::to_string(scores.size()) + " rows, data has " +
                        std::to_string(ds.rows()));
      }
      out << "auc_roc=" << format_real(metrics::auc_roc(scores, *ds.labels))
          << " auc_pr=" << format_real(metrics::auc_pr(scores, *ds.labels)) << "\n";
      if (ds.groups) {
        out << report_line(fairness::fairness_metric(scores, *ds.labels, *ds.groups)) << "\n";
      }
    } else if (cmp_cmd->parsed()) {
      const auto table = metrics::load_results_table(cmp_results);
      metrics::ComparisonOptions opt;
      opt.alpha = cmp_alpha;
      opt.alternative = parse_alternative(cmp_alternative);
      opt.control = cmp_control;
      const auto report = metrics::compare_algorithms(table, opt);
      out << metrics::report_to_text(report);
      if (cmp_out) write_file(*cmp_out, metrics::report_to_csv(report));
    } else if (bench_cmd->parsed()) {
      bench.suite = data::parse_synthetic_kind(bench_suite);
      bench.data_path = bench_data_path;
      bench.ensemble = bench_flags.config();
      bench.seed = bench_flags.seed;
      if (!bench_ks.empty()) bench.ks = parse_size_list(bench_ks, "growth grid");
      const auto r = run_bench(bench);
      write_file(growth_out, growth_csv(r));
      write_file(rep_out, repetition_csv(r));
      out << "auc_roc_mean=" << format_real(r.roc_stats.mean)
          << " auc_roc_std=" << format_real(r.roc_stats.std) << "\n";
    } else if (fair_cmd->parsed()) {
      const auto cfg = fair_flags.config();
      data::LabeledDataset all;
      if (fair_data) {
        if (!fair_label || !fair_group) {
          throw UsageError("fairness on a CSV file needs --label-col and --group-col");
        }
        all = data::load_csv(*fair_data, fair_label, fair_group);
      } else {
        all = data::make_synthetic(data::SyntheticKind::biased_groups, fair_normals,
                                   fair_anomalies, fair_dim, fair_flags.seed);
      }
      const auto [train, test] = data::split(all, 0.5, fair_flags.seed, true);
      const auto baseline = ensemble::train_ensemble(train, cfg);
      const auto before = fairness::fairness_metric(
          ensemble::ensemble_score(baseline, test.data, cfg.threads), *test.labels, *test.groups);

      ensemble::Ensemble result;
      if (fair_mode == "loss") {
        result = fairness::train_fair_ensemble(train, cfg, fcfg.theta);
      } else if (fair_mode == "prune") {
        result = fairness::prune_for_fairness(baseline, test, fcfg.prune_fraction, cfg.threads)
                     .ensemble;
      } else {
        fcfg.ga.seed = derive_seed(fair_flags.seed, 7);
        fcfg.ga.threads = cfg.threads;
        result = baseline;
        result.weights = fairness::evolve_weights(baseline, test, fcfg.ga).weights;
      }
      const auto after = fairness::fairness_metric(
          ensemble::ensemble_score(result, test.data, cfg.threads), *test.labels, *test.groups);
      out << "before: " << report_line(before) << "\n";
      out << "after: " << report_line(after) << "\n";
      if (fair_out) {
        std::string text = "stage,auc_roc,auc_group0,auc_group1,fairness_score\n";
        for (const auto& [name, r] : {std::pair{"before", before}, std::pair{"after", after}}) {
          text += std::string(name) + "," + format_real(r.overall_auc) + "," +
                  format_real(r.auc_group0) + "," + format_real(r.auc_group1) + "," +
                  format_real(r.fairness_score) + "\n";
        }
        write_file(*fair_out, text);
      }
      if (fair_model) ensemble::save(result, *fair_model);
    } else if (sin_cmd->parsed()) {
      const auto r = demo_sin(sin_cfg);
      write_file(sin_out, demo_sin_csv(r));
      out << "mse_all_bias=" << format_real(r.mse_all_bias)
          << " mse_no_bias=" << format_real(r.mse_no_bias)
          << " mse_bias_but_last=" << format_real(r.mse_bias_but_last) << "\n";
    } else if (grad_cmd->parsed()) {
      const auto r = random_grad_check(grad_nets, grad_seed, grad_eps);
      out << "max_relative_error=" << format_real(r.max_relative_error)
          << " checked=" << r.checked << " skipped_at_kinks=" << r.skipped_at_kinks << "\n";
      if (!(r.max_relative_error <= grad_tol)) {
        err << "dean: gradient check failed: " << format_real(r.max_relative_error) << " > "
            << format_real(grad_tol) << "\n";
        return 3;
      }
    }
  } catch (const UsageError& e) {
    err << "dean: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    err << "dean: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "dean: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace dean::cli
