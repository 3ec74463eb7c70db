#pragma once

#include <string>
#include <vector>

#include "afmvc/common.hpp"

namespace afmvc {

struct KMeansResult {
  Matrix centroids;        // K x d
  std::vector<int> labels; // cluster id per row, in [0, K)
  double inertia = 0.0;    // sum of squared distances to assigned centroids
};

// Trainable per-view centroids plus the one-hot consensus target shared
// by all views.
struct ClusterState {
  std::vector<Matrix> centroids;  // per view, K x d_v
  Matrix consensus;               // N x K, one-hot rows
  double alpha = 1.0;             // Student-t degrees of freedom
};

// Column-wise concatenation of per-view latents, view order preserved.
Matrix concat_views(const std::vector<Matrix>& latents);

// Lloyd's algorithm with k-means++ seeding. Runs `restarts` independent
// starts and keeps the lowest-inertia result. Each start iterates to an
// exact assignment fixpoint (or max_iters). Empty clusters are repaired
// by reseeding to the point farthest from its assigned centroid; nearest-
// centroid ties break toward the lowest cluster index. The returned
// result has no empty cluster.
KMeansResult kmeans(const Matrix& z, int k, std::uint64_t seed, int restarts = 10,
                    int max_iters = 300);

// P_ij = 1 iff labels[i] == j.
Matrix one_hot_consensus(const std::vector<int>& labels, int k);

// Student-t kernel similarities, normalized per row:
//   Q_ij = (1 + |z_i - mu_j|^2 / alpha)^(-(alpha+1)/2) / row sum.
Matrix soft_assign(const Matrix& z, const Matrix& centroids, double alpha);

struct ConsensusLossResult {
  double loss = 0.0;
  std::vector<Matrix> q;           // per-view soft assignments
  std::vector<Matrix> dz;          // gradient w.r.t. each view's latents
  std::vector<Matrix> dcentroids;  // gradient w.r.t. each view's centroids
};

// KL(P || Q^v) summed over views, batch-mean over instances. With one-hot
// P this is -mean_i sum_v log Q^v at the target index; Q is floored at
// 1e-12 inside the log so a drifting centroid can never produce -inf.
// Gradients flow to both latents and centroids through the Student-t
// kernel.
ConsensusLossResult kl_consensus_loss(const Matrix& p_onehot, const std::vector<Matrix>& latents,
                                      const std::vector<Matrix>& centroids, double alpha);

// Assignment export: CSV with columns (instance_index, cluster_id).
void export_assignments_csv(const std::string& path, const std::vector<int>& labels);
std::vector<int> read_assignments_csv(const std::string& path);

}  // namespace afmvc
