#include "afmvc/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace afmvc {

Matrix concat_views(const std::vector<Matrix>& latents) {
  require(!latents.empty(), "concat_views: need at least one view");
  const Eigen::Index n = latents[0].rows();
  Eigen::Index d = 0;
  for (std::size_t v = 0; v < latents.size(); ++v) {
    if (latents[v].rows() != n) {
      throw std::invalid_argument("concat_views: view " + std::to_string(v) + " has " +
                                  std::to_string(latents[v].rows()) + " rows, expected " +
                                  std::to_string(n));
    }
    d += latents[v].cols();
  }
  Matrix z(n, d);
  Eigen::Index off = 0;
  for (const auto& latent : latents) {
    z.middleCols(off, latent.cols()) = latent;
    off += latent.cols();
  }
  return z;
}

namespace {

// squared distances of every point to every centroid, N x K
Matrix pairwise_sqdist(const Matrix& z, const Matrix& centroids) {
  const Vector zn = z.rowwise().squaredNorm();
  const Vector cn = centroids.rowwise().squaredNorm();
  Matrix d = (-2.0 * z * centroids.transpose()).rowwise() + cn.transpose();
  d.colwise() += zn;
  return d.cwiseMax(0.0);
}

// lowest index among ties
int argmin_row(const Matrix& dists, Eigen::Index i) {
  int best = 0;
  double best_d = dists(i, 0);
  for (Eigen::Index j = 1; j < dists.cols(); ++j) {
    if (dists(i, j) < best_d) {
      best_d = dists(i, j);
      best = static_cast<int>(j);
    }
  }
  return best;
}

Matrix kmeanspp_seed(const Matrix& z, int k, Rng& rng) {
  const Eigen::Index n = z.rows();
  Matrix centroids(k, z.cols());
  centroids.row(0) = z.row(rng.uniform_int(static_cast<int>(n)));
  Vector dist2 = (z.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = dist2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        r -= dist2(i);
        if (r <= 0.0) {
          pick = i;
          break;
        }
        pick = i;
      }
    } else {
      pick = rng.uniform_int(static_cast<int>(n));
    }
    centroids.row(c) = z.row(pick);
    dist2 = dist2.cwiseMin((z.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }
  return centroids;
}

struct LloydOutcome {
  Matrix centroids;
  std::vector<int> labels;
  double inertia;
};

LloydOutcome lloyd(const Matrix& z, int k, Rng& rng, int max_iters) {
  const Eigen::Index n = z.rows();
  Matrix centroids = kmeanspp_seed(z, k, rng);
  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iters; ++it) {
    const Matrix dists = pairwise_sqdist(z, centroids);
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int j = argmin_row(dists, i);
      if (labels[static_cast<std::size_t>(i)] != j) {
        labels[static_cast<std::size_t>(i)] = j;
        changed = true;
      }
    }
    // recompute centroids; repair empties with the farthest point
    Matrix sums = Matrix::Zero(k, z.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += z.row(i);
      counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])]++;
    }
    std::vector<char> reseeded(static_cast<std::size_t>(n), 0);
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
      } else {
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (reseeded[static_cast<std::size_t>(i)]) continue;
          const double d = dists(i, labels[static_cast<std::size_t>(i)]);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centroids.row(c) = z.row(far);
        labels[static_cast<std::size_t>(far)] = c;
        reseeded[static_cast<std::size_t>(far)] = 1;
        changed = true;
      }
    }
    if (!changed && it > 0) break;
  }
  // final assignment pass so labels and inertia match the centroids
  const Matrix dists = pairwise_sqdist(z, centroids);
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int j = argmin_row(dists, i);
    labels[static_cast<std::size_t>(i)] = j;
    inertia += dists(i, j);
  }
  return {std::move(centroids), std::move(labels), inertia};
}

}  // namespace

KMeansResult kmeans(const Matrix& z, int k, std::uint64_t seed, int restarts, int max_iters) {
  require(k >= 1, "kmeans: k must be >= 1");
  if (k > z.rows()) {
    throw std::invalid_argument("kmeans: k=" + std::to_string(k) + " exceeds point count " +
                                std::to_string(z.rows()));
  }
  require(z.allFinite(), "kmeans: non-finite input");
  require(restarts >= 1, "kmeans: restarts must be >= 1");

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
    LloydOutcome out = lloyd(z, k, rng, max_iters);
    if (out.inertia < best.inertia) {
      best.centroids = std::move(out.centroids);
      best.labels = std::move(out.labels);
      best.inertia = out.inertia;
    }
  }
  return best;
}

Matrix one_hot_consensus(const std::vector<int>& labels, int k) {
  Matrix p = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int label = labels[i];
    if (label < 0 || label >= k) {
      throw std::invalid_argument("one_hot_consensus: label " + std::to_string(label) +
                                  " out of range [0," + std::to_string(k) + ")");
    }
    p(static_cast<Eigen::Index>(i), label) = 1.0;
  }
  return p;
}

Matrix soft_assign(const Matrix& z, const Matrix& centroids, double alpha) {
  require(alpha > 0.0, "soft_assign: alpha must be positive");
  require(z.cols() == centroids.cols(), "soft_assign: dimension mismatch");
  const Matrix sq = pairwise_sqdist(z, centroids);
  const double expo = -(alpha + 1.0) / 2.0;
  Matrix kernel = (1.0 + sq.array() / alpha).pow(expo).matrix();
  const Vector row_sums = kernel.rowwise().sum();
  return kernel.array().colwise() / row_sums.array();
}

ConsensusLossResult kl_consensus_loss(const Matrix& p_onehot, const std::vector<Matrix>& latents,
                                      const std::vector<Matrix>& centroids, double alpha) {
  require(latents.size() == centroids.size(), "kl_consensus_loss: one centroid set per view");
  require(!latents.empty(), "kl_consensus_loss: need at least one view");
  const Eigen::Index n = p_onehot.rows();
  const Eigen::Index k = p_onehot.cols();
  require(alpha > 0.0, "kl_consensus_loss: alpha must be positive");

  // target index per row; validates one-hot rows as a side effect
  std::vector<int> target(static_cast<std::size_t>(n), -1);
  for (Eigen::Index i = 0; i < n; ++i) {
    int ones = 0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (p_onehot(i, j) == 1.0) {
        target[static_cast<std::size_t>(i)] = static_cast<int>(j);
        ++ones;
      } else if (p_onehot(i, j) != 0.0) {
        throw std::invalid_argument("kl_consensus_loss: P is not one-hot at row " +
                                    std::to_string(i));
      }
    }
    require(ones == 1, "kl_consensus_loss: P row " + std::to_string(i) + " is not one-hot");
  }

  ConsensusLossResult res;
  const double inv_b = 1.0 / static_cast<double>(n);
  for (std::size_t v = 0; v < latents.size(); ++v) {
    const Matrix& z = latents[v];
    const Matrix& mu = centroids[v];
    require(z.rows() == n, "kl_consensus_loss: latent row mismatch in view " + std::to_string(v));
    require(mu.rows() == k, "kl_consensus_loss: centroid count mismatch in view " + std::to_string(v));
    const Matrix sq_c = pairwise_sqdist(z, mu);
    const double expo = -(alpha + 1.0) / 2.0;
    Matrix kernel = (1.0 + sq_c.array() / alpha).pow(expo).matrix();
    const Vector row_sums = kernel.rowwise().sum();
    Matrix q = kernel.array().colwise() / row_sums.array();

    // loss: -mean_i log Q at target, floored against -inf
    for (Eigen::Index i = 0; i < n; ++i) {
      res.loss -= inv_b * std::log(std::max(q(i, target[static_cast<std::size_t>(i)]), 1e-12));
    }

    // dL/d sq_ij = c_ij (delta_{j,target_i} - Q_ij) / B  with
    // c_ij = (alpha+1) / (2 (alpha + sq_ij))
    Matrix dsq(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) {
        const double c = (alpha + 1.0) / (2.0 * (alpha + sq_c(i, j)));
        const double indicator = (static_cast<int>(j) == target[static_cast<std::size_t>(i)]) ? 1.0 : 0.0;
        dsq(i, j) = inv_b * c * (indicator - q(i, j));
      }
    }
    // sq_ij = |z_i - mu_j|^2  =>  d sq/d z_i = 2(z_i - mu_j), d sq/d mu_j = -2(z_i - mu_j)
    Matrix dz = 2.0 * (dsq.rowwise().sum().asDiagonal() * z - dsq * mu);
    Matrix dmu = 2.0 * (dsq.colwise().sum().asDiagonal() * mu - dsq.transpose() * z);
    res.q.push_back(std::move(q));
    res.dz.push_back(std::move(dz));
    res.dcentroids.push_back(std::move(dmu));
  }
  return res;
}

void export_assignments_csv(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("assignments: cannot write '" + path + "'");
  out << "instance_index,cluster_id\n";
  for (std::size_t i = 0; i < labels.size(); ++i) out << i << ',' << labels[i] << '\n';
}

std::vector<int> read_assignments_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("assignments: cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);  // header
  std::vector<int> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string idx, label;
    std::getline(ss, idx, ',');
    std::getline(ss, label, ',');
    labels.push_back(std::stoi(label));
  }
  return labels;
}

}  // namespace afmvc
