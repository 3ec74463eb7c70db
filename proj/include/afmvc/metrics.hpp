#pragma once

#include <vector>

#include "afmvc/common.hpp"

namespace afmvc {

enum class NmiNorm { Arithmetic, Geometric, Max };

struct MetricsReport {
  double acc = 0.0;
  double nmi = 0.0;
  double bal = 0.0;
  Eigen::MatrixXi contingency;              // pred cluster x true class counts
  Eigen::MatrixXi per_cluster_group_counts; // pred cluster x sensitive group counts
};

// Count matrix with rows indexed by `a` values and columns by `b` values.
Eigen::MatrixXi contingency_table(const std::vector<int>& a, const std::vector<int>& b);

// Fraction of agreements under the best one-to-one matching of predicted
// clusters to truth classes (Hungarian method on the negated contingency
// matrix, zero-padded to square).
double accuracy(const std::vector<int>& pred, const std::vector<int>& truth);

// I(pred; truth) normalized by the chosen mean of the two entropies,
// natural logs. 1.0 when both partitions are single-cluster (identical),
// 0.0 when exactly one entropy is zero.
double nmi(const std::vector<int>& pred, const std::vector<int>& truth,
           NmiNorm norm = NmiNorm::Arithmetic);

// min over clusters of (smallest group's share within the cluster).
// Every predicted cluster must be non-empty over the label range used.
double balance(const std::vector<int>& pred, const std::vector<int>& sensitive);

// Convenience bundle; labels/sensitive may be empty, in which case the
// corresponding metrics are NaN.
MetricsReport evaluate_clustering(const std::vector<int>& pred, const std::vector<int>& truth,
                                  const std::vector<int>& sensitive);

// Minimum-cost assignment for a square cost matrix; returns row -> column.
std::vector<int> hungarian_min_cost(const Matrix& cost);

}  // namespace afmvc
