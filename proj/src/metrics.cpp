#include "afmvc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace afmvc {

namespace {

int label_range(const std::vector<int>& labels) {
  int mx = -1;
  for (int l : labels) {
    require(l >= 0, "labels must be non-negative");
    mx = std::max(mx, l);
  }
  return mx + 1;
}

}  // namespace

Eigen::MatrixXi contingency_table(const std::vector<int>& a, const std::vector<int>& b) {
  require(a.size() == b.size(), "contingency_table: length mismatch");
  require(!a.empty(), "contingency_table: empty input");
  Eigen::MatrixXi t = Eigen::MatrixXi::Zero(label_range(a), label_range(b));
  for (std::size_t i = 0; i < a.size(); ++i) t(a[i], b[i])++;
  return t;
}

// classic O(n^3) potentials formulation (square matrix)
std::vector<int> hungarian_min_cost(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  require(cost.cols() == n, "hungarian_min_cost: matrix must be square");
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = 0;
      double delta = std::numeric_limits<double>::infinity();
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> rowsol(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) {
    if (p[static_cast<std::size_t>(j)] > 0) rowsol[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
  }
  return rowsol;
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth) {
  require(pred.size() == truth.size(), "accuracy: length mismatch");
  require(!pred.empty(), "accuracy: empty input");
  const Eigen::MatrixXi counts = contingency_table(pred, truth);
  const int n = static_cast<int>(std::max(counts.rows(), counts.cols()));
  Matrix cost = Matrix::Zero(n, n);  // zero padding for rectangular tables
  cost.topLeftCorner(counts.rows(), counts.cols()) = -counts.cast<double>();
  const auto match = hungarian_min_cost(cost);
  long agreements = 0;
  for (int i = 0; i < static_cast<int>(counts.rows()); ++i) {
    const int j = match[static_cast<std::size_t>(i)];
    if (j < counts.cols()) agreements += counts(i, j);
  }
  return static_cast<double>(agreements) / static_cast<double>(pred.size());
}

double nmi(const std::vector<int>& pred, const std::vector<int>& truth, NmiNorm norm) {
  require(pred.size() == truth.size(), "nmi: length mismatch");
  require(!pred.empty(), "nmi: empty input");
  const Eigen::MatrixXi counts = contingency_table(pred, truth);
  const double n = static_cast<double>(pred.size());
  const Eigen::VectorXi row = counts.rowwise().sum();
  const Eigen::VectorXi col = counts.colwise().sum();

  double h_pred = 0.0, h_truth = 0.0, mi = 0.0;
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    if (row(i) > 0) h_pred -= (row(i) / n) * std::log(row(i) / n);
  }
  for (Eigen::Index j = 0; j < col.size(); ++j) {
    if (col(j) > 0) h_truth -= (col(j) / n) * std::log(col(j) / n);
  }
  for (Eigen::Index i = 0; i < counts.rows(); ++i) {
    for (Eigen::Index j = 0; j < counts.cols(); ++j) {
      if (counts(i, j) > 0) {
        mi += (counts(i, j) / n) * std::log(n * counts(i, j) / (static_cast<double>(row(i)) * col(j)));
      }
    }
  }
  if (h_pred == 0.0 && h_truth == 0.0) return 1.0;  // both single-cluster partitions
  if (h_pred == 0.0 || h_truth == 0.0) return 0.0;
  double denom = 0.0;
  switch (norm) {
    case NmiNorm::Arithmetic: denom = 0.5 * (h_pred + h_truth); break;
    case NmiNorm::Geometric: denom = std::sqrt(h_pred * h_truth); break;
    case NmiNorm::Max: denom = std::max(h_pred, h_truth); break;
  }
  return mi / denom;
}

double balance(const std::vector<int>& pred, const std::vector<int>& sensitive) {
  require(pred.size() == sensitive.size(), "balance: length mismatch");
  require(!pred.empty(), "balance: empty input");
  const Eigen::MatrixXi counts = contingency_table(pred, sensitive);
  const Eigen::VectorXi group_totals = counts.colwise().sum();
  double bal = 1.0;
  for (Eigen::Index i = 0; i < counts.rows(); ++i) {
    const int cluster_size = counts.row(i).sum();
    if (cluster_size == 0) {
      throw std::invalid_argument("balance: cluster " + std::to_string(i) + " is empty");
    }
    // min over groups that occur in the data at all
    int min_count = cluster_size;
    for (Eigen::Index j = 0; j < counts.cols(); ++j) {
      if (group_totals(j) > 0) min_count = std::min(min_count, counts(i, j));
    }
    bal = std::min(bal, static_cast<double>(min_count) / cluster_size);
  }
  return bal;
}

MetricsReport evaluate_clustering(const std::vector<int>& pred, const std::vector<int>& truth,
                                  const std::vector<int>& sensitive) {
  MetricsReport r;
  r.acc = std::numeric_limits<double>::quiet_NaN();
  r.nmi = std::numeric_limits<double>::quiet_NaN();
  r.bal = std::numeric_limits<double>::quiet_NaN();
  if (!truth.empty()) {
    r.acc = accuracy(pred, truth);
    r.nmi = nmi(pred, truth);
    r.contingency = contingency_table(pred, truth);
  }
  if (!sensitive.empty()) {
    r.bal = balance(pred, sensitive);
    r.per_cluster_group_counts = contingency_table(pred, sensitive);
  }
  return r;
}

}  // namespace afmvc
