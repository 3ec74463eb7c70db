#include "afmvc/bound_lab.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace afmvc {

void JointDistribution::validate(double tol) const {
  require(table.size() > 0, "JointDistribution: empty table");
  require((table.array() >= 0.0).all(), "JointDistribution: negative entry");
  if (std::abs(table.sum() - 1.0) > tol) {
    throw std::invalid_argument("JointDistribution: entries sum to " + std::to_string(table.sum()) +
                                ", expected 1");
  }
}

JointDistribution product_joint(const Vector& cluster_marginal, const Vector& group_marginal) {
  const auto check_marginal = [](const Vector& m, const char* name) {
    require((m.array() >= 0.0).all(), std::string(name) + " has a negative entry");
    if (std::abs(m.sum() - 1.0) > 1e-9) {
      throw std::invalid_argument(std::string(name) + " sums to " + std::to_string(m.sum()) +
                                  ", expected 1");
    }
  };
  check_marginal(cluster_marginal, "cluster_marginal");
  check_marginal(group_marginal, "group_marginal");
  JointDistribution j;
  j.table = cluster_marginal * group_marginal.transpose();
  return j;
}

double kl_joint(const JointDistribution& q, const JointDistribution& p) {
  require(q.table.rows() == p.table.rows() && q.table.cols() == p.table.cols(),
          "kl_joint: shape mismatch");
  double kl = 0.0;
  for (Eigen::Index i = 0; i < q.table.rows(); ++i) {
    for (Eigen::Index j = 0; j < q.table.cols(); ++j) {
      const double qi = q.table(i, j);
      if (qi == 0.0) continue;
      const double pi = p.table(i, j);
      if (pi == 0.0) return std::numeric_limits<double>::infinity();
      kl += qi * std::log(qi / pi);
    }
  }
  return kl;
}

double total_variation(const JointDistribution& q, const JointDistribution& p) {
  require(q.table.rows() == p.table.rows() && q.table.cols() == p.table.cols(),
          "total_variation: shape mismatch");
  return 0.5 * (q.table - p.table).array().abs().sum();
}

double mutual_information(const JointDistribution& j) {
  const Vector rm = j.row_marginal();
  const Vector cm = j.col_marginal();
  double mi = 0.0;
  for (Eigen::Index p = 0; p < j.table.rows(); ++p) {
    for (Eigen::Index g = 0; g < j.table.cols(); ++g) {
      const double v = j.table(p, g);
      if (v == 0.0) continue;
      mi += v * std::log(v / (rm(p) * cm(g)));
    }
  }
  return mi;
}

TheoremBound theorem_bound(double epsilon) {
  if (!(epsilon > 0.0)) {
    throw std::domain_error("theorem_bound: epsilon must be positive");
  }
  if (!(epsilon < 2.0)) {
    throw std::domain_error("theorem_bound: epsilon must be below 2 for ln(2/eps) to be positive");
  }
  TheoremBound b;
  b.leading_term = 0.5 * std::sqrt(epsilon / 8.0) * std::log(2.0 / epsilon);
  b.sqrt_eps_scale = std::sqrt(epsilon / 2.0);
  return b;
}

std::vector<JointDistribution> sample_near_independent(const JointDistribution& base,
                                                       double epsilon, int trials,
                                                       std::uint64_t seed) {
  base.validate(1e-9);
  if (!(epsilon > 0.0)) {
    throw std::domain_error("sample_near_independent: epsilon must be positive");
  }
  require(trials >= 1, "sample_near_independent: trials must be >= 1");
  require((base.table.array() > 0.0).all(),
          "sample_near_independent: base must have full support");

  constexpr int kMaxRetries = 1000000;
  std::vector<JointDistribution> samples;
  samples.reserve(static_cast<std::size_t>(trials));
  for (int t = 0; t < trials; ++t) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(t)));
    int retries = 0;
    while (true) {
      if (++retries > kMaxRetries) {
        throw std::runtime_error("sample_near_independent: retry cap exceeded");
      }
      // Dirichlet(1,...,1) direction via normalized exponentials
      Matrix dir(base.table.rows(), base.table.cols());
      for (Eigen::Index i = 0; i < dir.rows(); ++i)
        for (Eigen::Index j = 0; j < dir.cols(); ++j) {
          double u;
          do {
            u = rng.uniform();
          } while (u <= 0.0);
          dir(i, j) = -std::log(u);
        }
      dir /= dir.sum();

      const double target = epsilon * rng.uniform();
      const auto kl_at = [&](double w) {
        JointDistribution q;
        q.table = (1.0 - w) * base.table + w * dir;
        return kl_joint(q, base);
      };
      double w = 1.0;
      if (kl_at(1.0) > target) {
        // KL((1-w) base + w dir || base) grows monotonically from 0 at w=0
        double lo = 0.0, hi = 1.0;
        for (int it = 0; it < 80; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (kl_at(mid) > target) {
            hi = mid;
          } else {
            lo = mid;
          }
        }
        w = lo;
      }
      JointDistribution q;
      q.table = (1.0 - w) * base.table + w * dir;
      if (kl_joint(q, base) <= epsilon) {
        samples.push_back(std::move(q));
        break;
      }
    }
  }
  return samples;
}

std::vector<BoundSweepRow> bound_sweep(int k, int g, const std::vector<double>& epsilons,
                                       int trials, std::uint64_t seed) {
  require(k >= 2 && g >= 2, "bound_sweep: need k >= 2 and g >= 2");
  const JointDistribution base =
      product_joint(Vector::Constant(k, 1.0 / k), Vector::Constant(g, 1.0 / g));
  std::vector<BoundSweepRow> rows;
  for (std::size_t e = 0; e < epsilons.size(); ++e) {
    const double eps = epsilons[e];
    const auto samples =
        sample_near_independent(base, eps, trials, mix_seed(seed, static_cast<std::uint64_t>(e)));
    BoundSweepRow row;
    row.epsilon = eps;
    row.trials = trials;
    int pinsker_pass = 0;
    double sum_i = 0.0;
    for (const auto& q : samples) {
      const double mi = mutual_information(q);
      row.max_i = std::max(row.max_i, mi);
      sum_i += mi;
      const double kl = kl_joint(q, base);
      if (total_variation(q, base) <= std::sqrt(kl / 2.0) + 1e-12) ++pinsker_pass;
    }
    row.mean_i = sum_i / static_cast<double>(samples.size());
    row.pinsker_pass_rate = static_cast<double>(pinsker_pass) / static_cast<double>(samples.size());
    const TheoremBound b = theorem_bound(eps);
    row.leading_term = b.leading_term;
    row.sqrt_eps_scale = b.sqrt_eps_scale;
    rows.push_back(row);
  }
  return rows;
}

void write_bound_report_csv(const std::string& path, const std::vector<BoundSweepRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("bound report: cannot write '" + path + "'");
  out << "epsilon,trials,max_I,mean_I,pinsker_pass_rate,leading_term,sqrt_eps_scale\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g", r.epsilon, r.trials,
                  r.max_i, r.mean_i, r.pinsker_pass_rate, r.leading_term, r.sqrt_eps_scale);
    out << buf << '\n';
  }
}

}  // namespace afmvc
