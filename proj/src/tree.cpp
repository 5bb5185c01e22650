#include "hlpow/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hlpow/errors.hpp"

namespace hlpow {

void Matrix::push_row(std::span<const double> row) {
  if (cols == 0) cols = row.size();
  if (row.size() != cols) {
    raise(ErrorKind::LayoutMismatch, "matrix row of length " + std::to_string(row.size()) +
                                         ", expected " + std::to_string(cols));
  }
  data.insert(data.end(), row.begin(), row.end());
}

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  std::size_t left_count = 0;
  double children_sse = 0.0;
};

double node_sse(std::span<const double> y, const std::vector<std::size_t>& rows,
                std::size_t begin, std::size_t end) {
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const double v = y[rows[i]];
    sum += v;
    sum2 += v * v;
  }
  const double n = static_cast<double>(end - begin);
  return sum2 - sum * sum / n;
}

}  // namespace

void RegressionTree::fit(const Matrix& x, std::span<const double> y, const Params& params) {
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), 0);
  fit(x, y, rows, params);
}

void RegressionTree::fit(const Matrix& x, std::span<const double> y,
                         std::span<const std::size_t> row_set, const Params& params) {
  if (row_set.empty()) raise(ErrorKind::EmptyDataset, "cannot fit a tree on zero rows");
  nodes_.clear();
  std::vector<std::size_t> rows(row_set.begin(), row_set.end());
  build(x, y, rows, 0, rows.size(), 0, params);
}

std::int32_t RegressionTree::build(const Matrix& x, std::span<const double> y,
                                   std::vector<std::size_t>& rows, std::size_t begin,
                                   std::size_t end, int depth, const Params& params) {
  const std::int32_t index = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{});

  const std::size_t n = end - begin;
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i) sum += y[rows[i]];
  const double mean = sum / static_cast<double>(n);
  nodes_[static_cast<std::size_t>(index)].value = mean;

  const double sse = node_sse(y, rows, begin, end);
  const std::size_t min_leaf = static_cast<std::size_t>(std::max(1, params.min_leaf));
  if (depth >= params.max_depth || n < 2 * min_leaf || sse <= 1e-12) {
    return index;
  }

  SplitChoice best;
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(n);
  for (std::size_t f = 0; f < x.cols; ++f) {
    order.clear();
    for (std::size_t i = begin; i < end; ++i) {
      order.emplace_back(x.at(rows[i], f), rows[i]);
    }
    std::sort(order.begin(), order.end());
    if (order.front().first == order.back().first) continue;

    // prefix scan over candidate boundaries between distinct values
    double left_sum = 0.0, left_sum2 = 0.0;
    double total_sum = 0.0, total_sum2 = 0.0;
    for (const auto& [v, r] : order) {
      total_sum += y[r];
      total_sum2 += y[r] * y[r];
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double target = y[order[i].second];
      left_sum += target;
      left_sum2 += target * target;
      if (order[i].first == order[i + 1].first) continue;
      const std::size_t left_n = i + 1;
      const std::size_t right_n = n - left_n;
      if (left_n < min_leaf || right_n < min_leaf) continue;
      const double right_sum = total_sum - left_sum;
      const double right_sum2 = total_sum2 - left_sum2;
      const double children = (left_sum2 - left_sum * left_sum / static_cast<double>(left_n)) +
                              (right_sum2 - right_sum * right_sum / static_cast<double>(right_n));
      if (best.feature < 0 || children < best.children_sse) {
        best.feature = static_cast<int>(f);
        best.threshold = order[i].first + 0.5 * (order[i + 1].first - order[i].first);
        best.left_count = left_n;
        best.children_sse = children;
      }
    }
  }

  if (best.feature < 0) return index;

  const auto mid = std::stable_partition(
      rows.begin() + static_cast<std::ptrdiff_t>(begin), rows.begin() + static_cast<std::ptrdiff_t>(end),
      [&](std::size_t r) { return x.at(r, static_cast<std::size_t>(best.feature)) <= best.threshold; });
  const std::size_t split = static_cast<std::size_t>(mid - rows.begin());

  nodes_[static_cast<std::size_t>(index)].feature = best.feature;
  nodes_[static_cast<std::size_t>(index)].threshold = best.threshold;
  const std::int32_t left = build(x, y, rows, begin, split, depth + 1, params);
  nodes_[static_cast<std::size_t>(index)].left = left;
  const std::int32_t right = build(x, y, rows, split, end, depth + 1, params);
  nodes_[static_cast<std::size_t>(index)].right = right;
  return index;
}

double RegressionTree::predict(std::span<const double> row) const {
  if (nodes_.empty()) raise(ErrorKind::InvalidArgument, "predicting with an unfitted tree");
  std::size_t i = 0;
  for (;;) {
    const Node& node = nodes_[i];
    if (node.feature < 0) return node.value;
    const double v = row[static_cast<std::size_t>(node.feature)];
    i = static_cast<std::size_t>(v <= node.threshold ? node.left : node.right);
  }
}

nlohmann::json RegressionTree::to_json() const {
  // serialize recursively so the on-disk form is a nested split record
  std::function<nlohmann::json(std::int32_t)> dump = [&](std::int32_t i) -> nlohmann::json {
    const Node& node = nodes_[static_cast<std::size_t>(i)];
    if (node.feature < 0) return nlohmann::json{{"value", node.value}};
    return nlohmann::json{{"feature", node.feature},
                          {"threshold", node.threshold},
                          {"left", dump(node.left)},
                          {"right", dump(node.right)}};
  };
  if (nodes_.empty()) return nlohmann::json{};
  return dump(0);
}

RegressionTree RegressionTree::from_json(const nlohmann::json& j) {
  RegressionTree tree;
  std::function<std::int32_t(const nlohmann::json&)> load =
      [&](const nlohmann::json& node) -> std::int32_t {
    const std::int32_t index = static_cast<std::int32_t>(tree.nodes_.size());
    tree.nodes_.push_back(Node{});
    if (node.contains("value")) {
      tree.nodes_[static_cast<std::size_t>(index)].value = node.at("value").get<double>();
      return index;
    }
    tree.nodes_[static_cast<std::size_t>(index)].feature = node.at("feature").get<int>();
    tree.nodes_[static_cast<std::size_t>(index)].threshold = node.at("threshold").get<double>();
    const std::int32_t left = load(node.at("left"));
    tree.nodes_[static_cast<std::size_t>(index)].left = left;
    const std::int32_t right = load(node.at("right"));
    tree.nodes_[static_cast<std::size_t>(index)].right = right;
    return index;
  };
  if (!j.is_null() && !j.empty()) load(j);
  return tree;
}

}  // namespace hlpow
