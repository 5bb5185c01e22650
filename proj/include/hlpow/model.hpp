#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hlpow/features.hpp"
#include "hlpow/tree.hpp"

namespace hlpow {

struct Dataset {
  struct Row {
    FeatureVector features;
    double power_w = 0.0;
    std::string app_name;
  };
  std::vector<Row> rows;

  std::size_t layout_size() const { return rows.empty() ? 0 : rows.front().features.values.size(); }
};

enum class ModelKind { Linear, Lasso, Cart, Bagging, Gbdt };

const char* model_kind_name(ModelKind kind);
std::optional<ModelKind> model_kind_from_name(const std::string& name);

// Flat named hyperparameter record; unknown names are ignored by trainers.
struct Hyperparams {
  std::map<std::string, double> values;

  double get(const std::string& name, double fallback) const {
    auto it = values.find(name);
    return it == values.end() ? fallback : it->second;
  }
  Hyperparams& set(const std::string& name, double value) {
    values[name] = value;
    return *this;
  }
  bool operator==(const Hyperparams&) const = default;
};

struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

// Per-feature z-score statistics (population stddev). Throws EmptyDataset.
NormStats normalize_fit(const Dataset& train);
FeatureVector normalize_apply(const NormStats& stats, const FeatureVector& vector);

// Drops zero-variance features, then keeps the k features with largest
// absolute Pearson correlation to power (ties to the lower index). Returns
// ascending indices. Throws EmptyDataset.
std::vector<std::size_t> select_features(const Dataset& train, std::size_t k);

struct PowerModel {
  ModelKind kind = ModelKind::Linear;
  Hyperparams hyperparams;
  NormStats normalization;
  std::vector<std::size_t> selected;
  std::size_t layout_size = 0;

  // linear / lasso
  std::vector<double> coefficients;
  double intercept = 0.0;

  // tree family
  std::vector<RegressionTree> trees;
  double base_prediction = 0.0;
  double shrinkage = 1.0;
  std::vector<double> train_mse_per_round;  // gbdt

  nlohmann::json to_json() const;
  static PowerModel from_json(const nlohmann::json& j);
};

void save_model(const PowerModel& model, const std::string& path);
PowerModel load_model(const std::string& path);

// Hyperparameters by kind (defaults in parentheses):
//   all:     n_features (0 = keep all non-constant)
//   lasso:   lambda (1.0), tol (1e-9), max_iters (50000)
//   cart:    max_depth (6), min_leaf (1); max_depth 0 fits a root-only leaf
//   bagging: n_trees (20), max_depth (8), min_leaf (1), seed (0)
//   gbdt:    rounds (200), shrinkage (0.1), max_depth (3), min_leaf (1)
PowerModel train(ModelKind kind, const Dataset& train, const Hyperparams& hyperparams);

double predict(const PowerModel& model, const FeatureVector& vector);

struct CvResult {
  Hyperparams best;
  std::vector<double> best_fold_mae;          // validation MAE% per fold at `best`
  std::vector<double> grid_mean_mae;          // one mean per grid point, grid order
};

// Deterministic seeded K-fold grid search minimizing mean validation MAE%.
CvResult kfold_cv(ModelKind kind, const Dataset& data, int k_folds,
                  const std::vector<Hyperparams>& grid, std::uint64_t seed);

std::vector<Hyperparams> default_grid(ModelKind kind);

// Mean of |prediction - truth| / truth, in percent. Throws LengthMismatch.
double mae_percent(std::span<const double> predictions, std::span<const double> truths);

}  // namespace hlpow
