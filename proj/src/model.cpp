#include "hlpow/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "hlpow/errors.hpp"
#include "hlpow/util.hpp"

namespace hlpow {

using json = nlohmann::json;

const char* model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::Linear: return "linear";
    case ModelKind::Lasso: return "lasso";
    case ModelKind::Cart: return "cart";
    case ModelKind::Bagging: return "bagging";
    case ModelKind::Gbdt: return "gbdt";
  }
  return "unknown";
}

std::optional<ModelKind> model_kind_from_name(const std::string& name) {
  for (ModelKind kind : {ModelKind::Linear, ModelKind::Lasso, ModelKind::Cart,
                         ModelKind::Bagging, ModelKind::Gbdt}) {
    if (name == model_kind_name(kind)) return kind;
  }
  return std::nullopt;
}

NormStats normalize_fit(const Dataset& train) {
  if (train.rows.empty()) raise(ErrorKind::EmptyDataset, "normalize_fit on empty dataset");
  const std::size_t d = train.layout_size();
  const double n = static_cast<double>(train.rows.size());
  NormStats stats;
  stats.mean.assign(d, 0.0);
  stats.stddev.assign(d, 0.0);
  for (const auto& row : train.rows) {
    if (row.features.values.size() != d) {
      raise(ErrorKind::LayoutMismatch, "dataset rows have inconsistent layouts");
    }
    for (std::size_t j = 0; j < d; ++j) stats.mean[j] += row.features.values[j];
  }
  for (std::size_t j = 0; j < d; ++j) stats.mean[j] /= n;
  for (const auto& row : train.rows) {
    for (std::size_t j = 0; j < d; ++j) {
      const double delta = row.features.values[j] - stats.mean[j];
      stats.stddev[j] += delta * delta;
    }
  }
  for (std::size_t j = 0; j < d; ++j) stats.stddev[j] = std::sqrt(stats.stddev[j] / n);
  return stats;
}

FeatureVector normalize_apply(const NormStats& stats, const FeatureVector& vector) {
  if (vector.values.size() != stats.mean.size()) {
    raise(ErrorKind::LayoutMismatch, "vector of length " + std::to_string(vector.values.size()) +
                                         ", normalization expects " +
                                         std::to_string(stats.mean.size()));
  }
  FeatureVector out;
  out.values.resize(vector.values.size());
  for (std::size_t j = 0; j < vector.values.size(); ++j) {
    out.values[j] = stats.stddev[j] == 0.0
                        ? 0.0
                        : (vector.values[j] - stats.mean[j]) / stats.stddev[j];
  }
  return out;
}

std::vector<std::size_t> select_features(const Dataset& train, std::size_t k) {
  if (train.rows.empty()) raise(ErrorKind::EmptyDataset, "select_features on empty dataset");
  const std::size_t d = train.layout_size();
  if (k > d) raise(ErrorKind::InvalidArgument, "k exceeds layout length");
  const double n = static_cast<double>(train.rows.size());

  double power_mean = 0.0;
  for (const auto& row : train.rows) power_mean += row.power_w;
  power_mean /= n;
  double power_var = 0.0;
  for (const auto& row : train.rows) {
    power_var += (row.power_w - power_mean) * (row.power_w - power_mean);
  }

  std::vector<double> score(d, 0.0);
  std::vector<bool> constant(d, false);
  for (std::size_t j = 0; j < d; ++j) {
    double lo = train.rows.front().features.values[j];
    double hi = lo;
    double mean = 0.0;
    for (const auto& row : train.rows) {
      const double v = row.features.values[j];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      mean += v;
    }
    if (lo == hi) {
      constant[j] = true;
      continue;
    }
    mean /= n;
    double var = 0.0, cov = 0.0;
    for (const auto& row : train.rows) {
      const double dv = row.features.values[j] - mean;
      var += dv * dv;
      cov += dv * (row.power_w - power_mean);
    }
    score[j] = (var > 0.0 && power_var > 0.0) ? std::abs(cov / std::sqrt(var * power_var)) : 0.0;
  }

  std::vector<std::size_t> candidates;
  for (std::size_t j = 0; j < d; ++j) {
    if (!constant[j]) candidates.push_back(j);
  }
  std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return a < b;
  });
  if (candidates.size() > k) candidates.resize(k);
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

Matrix project(const Dataset& data, const NormStats& stats,
               const std::vector<std::size_t>& selected) {
  Matrix x;
  x.cols = selected.size();
  x.data.reserve(data.rows.size() * selected.size());
  for (const auto& row : data.rows) {
    const FeatureVector norm = normalize_apply(stats, row.features);
    for (std::size_t j : selected) x.data.push_back(norm.values[j]);
  }
  return x;
}

std::vector<double> project_row(const PowerModel& model, const FeatureVector& vector) {
  const FeatureVector norm = normalize_apply(model.normalization, vector);
  std::vector<double> out;
  out.reserve(model.selected.size());
  for (std::size_t j : model.selected) out.push_back(norm.values[j]);
  return out;
}

void fit_linear(PowerModel& model, const Matrix& x, std::span<const double> y) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols;
  Eigen::MatrixXd design(n, d + 1);
  Eigen::VectorXd target(n);
  for (std::size_t i = 0; i < n; ++i) {
    design(static_cast<Eigen::Index>(i), 0) = 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = x.at(i, j);
    }
    target(static_cast<Eigen::Index>(i)) = y[i];
  }
  // SVD solve: minimum-norm least squares, defined for rank-deficient systems
  Eigen::BDCSVD<Eigen::MatrixXd> svd(design, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd beta = svd.solve(target);
  model.intercept = beta(0);
  model.coefficients.assign(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    model.coefficients[j] = beta(static_cast<Eigen::Index>(j + 1));
  }
}

void fit_lasso(PowerModel& model, const Matrix& x, std::span<const double> y,
               const Hyperparams& hp) {
  const double lambda = hp.get("lambda", 1.0);
  const double tol = hp.get("tol", 1e-9);
  const int max_iters = static_cast<int>(hp.get("max_iters", 50000));
  if (lambda < 0.0) raise(ErrorKind::InvalidArgument, "lasso lambda must be >= 0");

  const std::size_t n = x.rows();
  const std::size_t d = x.cols;
  double y_mean = 0.0;
  for (double v : y) y_mean += v;
  y_mean /= static_cast<double>(n);
  model.intercept = y_mean;

  std::vector<double> beta(d, 0.0);
  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - y_mean;

  std::vector<double> col_sq(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) col_sq[j] += x.at(i, j) * x.at(i, j);
  }

  // cyclic coordinate descent on 1/2 ||y - Xb||^2 + lambda ||b||_1
  bool converged = false;
  for (int sweep = 0; sweep < max_iters; ++sweep) {
    double max_delta = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      if (col_sq[j] == 0.0) continue;
      double rho = 0.0;
      for (std::size_t i = 0; i < n; ++i) rho += x.at(i, j) * residual[i];
      rho += beta[j] * col_sq[j];
      double next = 0.0;
      if (rho > lambda) {
        next = (rho - lambda) / col_sq[j];
      } else if (rho < -lambda) {
        next = (rho + lambda) / col_sq[j];
      }
      const double delta = next - beta[j];
      if (delta != 0.0) {
        for (std::size_t i = 0; i < n; ++i) residual[i] -= delta * x.at(i, j);
        beta[j] = next;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    if (max_delta < tol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    raise(ErrorKind::NonConvergence,
          "lasso did not converge in " + std::to_string(max_iters) + " sweeps");
  }
  model.coefficients = std::move(beta);
}

RegressionTree::Params tree_params(const Hyperparams& hp, int default_depth) {
  RegressionTree::Params params;
  params.max_depth = static_cast<int>(hp.get("max_depth", default_depth));
  params.min_leaf = static_cast<int>(hp.get("min_leaf", 1));
  if (params.max_depth < 0) raise(ErrorKind::InvalidArgument, "max_depth must be >= 0");
  if (params.min_leaf < 1) raise(ErrorKind::InvalidArgument, "min_leaf must be >= 1");
  return params;
}

void fit_cart(PowerModel& model, const Matrix& x, std::span<const double> y,
              const Hyperparams& hp) {
  RegressionTree tree;
  tree.fit(x, y, tree_params(hp, 6));
  model.trees.push_back(std::move(tree));
}

void fit_bagging(PowerModel& model, const Matrix& x, std::span<const double> y,
                 const Hyperparams& hp) {
  const int n_trees = static_cast<int>(hp.get("n_trees", 20));
  if (n_trees < 1) raise(ErrorKind::InvalidArgument, "bagging n_trees must be >= 1");
  const auto params = tree_params(hp, 8);
  const auto seed = static_cast<std::uint64_t>(hp.get("seed", 0));
  const std::size_t n = x.rows();
  for (int t = 0; t < n_trees; ++t) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<std::size_t> sample(n);
    for (auto& idx : sample) idx = static_cast<std::size_t>(rng.below(n));
    std::sort(sample.begin(), sample.end());
    RegressionTree tree;
    tree.fit(x, y, sample, params);
    model.trees.push_back(std::move(tree));
  }
}

void fit_gbdt(PowerModel& model, const Matrix& x, std::span<const double> y,
              const Hyperparams& hp) {
  const int rounds = static_cast<int>(hp.get("rounds", 200));
  const double shrinkage = hp.get("shrinkage", 0.1);
  if (rounds < 1) raise(ErrorKind::InvalidArgument, "gbdt rounds must be >= 1");
  if (!(shrinkage > 0.0 && shrinkage <= 1.0)) {
    raise(ErrorKind::InvalidArgument, "gbdt shrinkage must be in (0, 1]");
  }
  const auto params = tree_params(hp, 3);

  const std::size_t n = x.rows();
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  model.base_prediction = mean;
  model.shrinkage = shrinkage;

  std::vector<double> residual(n);
  for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - mean;

  for (int round = 0; round < rounds; ++round) {
    RegressionTree tree;
    tree.fit(x, residual, params);
    double mse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      residual[i] -= shrinkage * tree.predict(x.row(i));
      mse += residual[i] * residual[i];
    }
    model.train_mse_per_round.push_back(mse / static_cast<double>(n));
    model.trees.push_back(std::move(tree));
  }
}

}  // namespace

PowerModel train(ModelKind kind, const Dataset& data, const Hyperparams& hyperparams) {
  if (data.rows.empty()) raise(ErrorKind::EmptyDataset, "train on empty dataset");
  for (const auto& row : data.rows) {
    if (!(std::isfinite(row.power_w) && row.power_w > 0.0)) {
      raise(ErrorKind::InvariantViolation, "training powers must be finite and > 0");
    }
  }

  PowerModel model;
  model.kind = kind;
  model.hyperparams = hyperparams;
  model.layout_size = data.layout_size();
  model.normalization = normalize_fit(data);

  std::size_t k = static_cast<std::size_t>(hyperparams.get("n_features", 0));
  if (k == 0 || k > model.layout_size) k = model.layout_size;
  model.selected = select_features(data, k);

  const Matrix x = project(data, model.normalization, model.selected);
  std::vector<double> y;
  y.reserve(data.rows.size());
  for (const auto& row : data.rows) y.push_back(row.power_w);

  switch (kind) {
    case ModelKind::Linear: fit_linear(model, x, y); break;
    case ModelKind::Lasso: fit_lasso(model, x, y, hyperparams); break;
    case ModelKind::Cart: fit_cart(model, x, y, hyperparams); break;
    case ModelKind::Bagging: fit_bagging(model, x, y, hyperparams); break;
    case ModelKind::Gbdt: fit_gbdt(model, x, y, hyperparams); break;
  }
  return model;
}

double predict(const PowerModel& model, const FeatureVector& vector) {
  if (vector.values.size() != model.layout_size) {
    raise(ErrorKind::LayoutMismatch, "vector of length " + std::to_string(vector.values.size()) +
                                         ", model expects " + std::to_string(model.layout_size));
  }
  const std::vector<double> row = project_row(model, vector);
  switch (model.kind) {
    case ModelKind::Linear:
    case ModelKind::Lasso: {
      double out = model.intercept;
      for (std::size_t j = 0; j < row.size(); ++j) out += model.coefficients[j] * row[j];
      return out;
    }
    case ModelKind::Cart:
      return model.trees.front().predict(row);
    case ModelKind::Bagging: {
      double sum = 0.0;
      for (const auto& tree : model.trees) sum += tree.predict(row);
      return sum / static_cast<double>(model.trees.size());
    }
    case ModelKind::Gbdt: {
      double out = model.base_prediction;
      for (const auto& tree : model.trees) out += model.shrinkage * tree.predict(row);
      return out;
    }
  }
  raise(ErrorKind::InvalidArgument, "unknown model kind");
}

CvResult kfold_cv(ModelKind kind, const Dataset& data, int k_folds,
                  const std::vector<Hyperparams>& grid, std::uint64_t seed) {
  if (data.rows.empty()) raise(ErrorKind::EmptyDataset, "kfold_cv on empty dataset");
  if (k_folds < 2) raise(ErrorKind::InvalidArgument, "k_folds must be >= 2");
  if (data.rows.size() < static_cast<std::size_t>(k_folds)) {
    raise(ErrorKind::InvalidArgument, "fewer rows than folds");
  }
  if (grid.empty()) raise(ErrorKind::InvalidArgument, "hyperparameter grid is empty");

  const std::size_t n = data.rows.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<int> fold_of(n);
  for (std::size_t i = 0; i < n; ++i) fold_of[order[i]] = static_cast<int>(i % k_folds);

  CvResult result;
  std::size_t best_index = 0;
  double best_mean = 0.0;
  std::vector<double> best_folds;

  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> fold_mae;
    for (int f = 0; f < k_folds; ++f) {
      Dataset train_set;
      std::vector<const Dataset::Row*> val_rows;
      for (std::size_t i = 0; i < n; ++i) {
        if (fold_of[i] == f) {
          val_rows.push_back(&data.rows[i]);
        } else {
          train_set.rows.push_back(data.rows[i]);
        }
      }
      const PowerModel model = train(kind, train_set, grid[g]);
      std::vector<double> preds, truths;
      preds.reserve(val_rows.size());
      truths.reserve(val_rows.size());
      for (const auto* row : val_rows) {
        preds.push_back(predict(model, row->features));
        truths.push_back(row->power_w);
      }
      fold_mae.push_back(mae_percent(preds, truths));
    }
    const double mean =
        std::accumulate(fold_mae.begin(), fold_mae.end(), 0.0) / static_cast<double>(k_folds);
    result.grid_mean_mae.push_back(mean);
    if (g == 0 || mean < best_mean) {
      best_mean = mean;
      best_index = g;
      best_folds = fold_mae;
    }
  }

  result.best = grid[best_index];
  result.best_fold_mae = std::move(best_folds);
  return result;
}

std::vector<Hyperparams> default_grid(ModelKind kind) {
  std::vector<Hyperparams> grid;
  switch (kind) {
    case ModelKind::Linear:
      grid.push_back({});
      break;
    case ModelKind::Lasso:
      for (double lambda : {0.1, 1.0, 10.0, 100.0}) {
        grid.push_back(Hyperparams{}.set("lambda", lambda));
      }
      break;
    case ModelKind::Cart:
      for (double depth : {4.0, 6.0, 8.0}) {
        for (double leaf : {2.0, 5.0}) {
          grid.push_back(Hyperparams{}.set("max_depth", depth).set("min_leaf", leaf));
        }
      }
      break;
    case ModelKind::Bagging:
      for (double depth : {6.0, 8.0}) {
        grid.push_back(
            Hyperparams{}.set("n_trees", 20).set("max_depth", depth).set("min_leaf", 2));
      }
      break;
    case ModelKind::Gbdt:
      for (double depth : {2.0, 3.0}) {
        for (double leaf : {2.0, 5.0}) {
          grid.push_back(Hyperparams{}
                             .set("rounds", 200)
                             .set("shrinkage", 0.1)
                             .set("max_depth", depth)
                             .set("min_leaf", leaf));
        }
      }
      break;
  }
  return grid;
}

double mae_percent(std::span<const double> predictions, std::span<const double> truths) {
  if (predictions.size() != truths.size() || truths.empty()) {
    raise(ErrorKind::LengthMismatch, "predictions and truths must have equal non-zero lengths");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    total += std::abs(predictions[i] - truths[i]) / truths[i];
  }
  return total / static_cast<double>(truths.size()) * 100.0;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

json PowerModel::to_json() const {
  json j;
  j["format"] = "hlpow-model-v1";
  j["kind"] = model_kind_name(kind);
  j["hyperparameters"] = hyperparams.values;
  j["normalization"] = {{"mean", normalization.mean}, {"stddev", normalization.stddev}};
  j["selected"] = selected;
  j["layout_size"] = layout_size;
  json params;
  switch (kind) {
    case ModelKind::Linear:
    case ModelKind::Lasso:
      params["coefficients"] = coefficients;
      params["intercept"] = intercept;
      break;
    case ModelKind::Cart:
    case ModelKind::Bagging:
    case ModelKind::Gbdt: {
      json trees_json = json::array();
      for (const auto& tree : trees) trees_json.push_back(tree.to_json());
      params["trees"] = std::move(trees_json);
      params["base_prediction"] = base_prediction;
      params["shrinkage"] = shrinkage;
      if (!train_mse_per_round.empty()) params["train_mse_per_round"] = train_mse_per_round;
      break;
    }
  }
  j["params"] = std::move(params);
  return j;
}

PowerModel PowerModel::from_json(const json& j) {
  if (!j.is_object() || j.value("format", "") != "hlpow-model-v1") {
    raise(ErrorKind::MalformedDocument, "not a hlpow-model-v1 document");
  }
  PowerModel model;
  const auto kind = model_kind_from_name(j.at("kind").get<std::string>());
  if (!kind) raise(ErrorKind::MalformedDocument, "unknown model kind");
  model.kind = *kind;
  model.hyperparams.values = j.at("hyperparameters").get<std::map<std::string, double>>();
  model.normalization.mean = j.at("normalization").at("mean").get<std::vector<double>>();
  model.normalization.stddev = j.at("normalization").at("stddev").get<std::vector<double>>();
  model.selected = j.at("selected").get<std::vector<std::size_t>>();
  model.layout_size = j.at("layout_size").get<std::size_t>();
  const json& params = j.at("params");
  switch (model.kind) {
    case ModelKind::Linear:
    case ModelKind::Lasso:
      model.coefficients = params.at("coefficients").get<std::vector<double>>();
      model.intercept = params.at("intercept").get<double>();
      break;
    case ModelKind::Cart:
    case ModelKind::Bagging:
    case ModelKind::Gbdt:
      for (const auto& tj : params.at("trees")) {
        model.trees.push_back(RegressionTree::from_json(tj));
      }
      model.base_prediction = params.at("base_prediction").get<double>();
      model.shrinkage = params.at("shrinkage").get<double>();
      if (params.contains("train_mse_per_round")) {
        model.train_mse_per_round = params.at("train_mse_per_round").get<std::vector<double>>();
      }
      break;
  }
  return model;
}

void save_model(const PowerModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::IoFailure, "cannot write model file '" + path + "'");
  out << model.to_json().dump(2) << "\n";
  if (!out) raise(ErrorKind::IoFailure, "failed writing model file '" + path + "'");
}

PowerModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::IoFailure, "cannot open model file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    raise(ErrorKind::MalformedDocument, e.what());
  }
  return PowerModel::from_json(j);
}

}  // namespace hlpow
