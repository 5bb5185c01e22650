#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

namespace hlpow {

// Row-major numeric matrix used by the regressors.
struct Matrix {
  std::size_t cols = 0;
  std::vector<double> data;

  std::size_t rows() const { return cols == 0 ? 0 : data.size() / cols; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data).subspan(r * cols, cols);
  }
  void push_row(std::span<const double> row);
};

// Binary regression tree grown by greedy variance reduction; leaves predict
// the mean target of their rows. max_depth 0 yields a single root leaf.
class RegressionTree {
 public:
  struct Params {
    int max_depth = 6;
    int min_leaf = 1;
  };

  void fit(const Matrix& x, std::span<const double> y, const Params& params);
  void fit(const Matrix& x, std::span<const double> y, std::span<const std::size_t> rows,
           const Params& params);

  double predict(std::span<const double> row) const;
  bool empty() const { return nodes_.empty(); }
  std::size_t node_count() const { return nodes_.size(); }

  nlohmann::json to_json() const;
  static RegressionTree from_json(const nlohmann::json& j);

 private:
  struct Node {
    int feature = -1;  // -1 = leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;
  };

  std::int32_t build(const Matrix& x, std::span<const double> y, std::vector<std::size_t>& rows,
                     std::size_t begin, std::size_t end, int depth, const Params& params);

  std::vector<Node> nodes_;
};

}  // namespace hlpow
