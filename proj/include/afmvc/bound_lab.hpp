#pragma once

#include <string>
#include <vector>

#include "afmvc/common.hpp"

namespace afmvc {

// K x |G| probability table over (cluster label, sensitive group).
struct JointDistribution {
  Matrix table;

  void validate(double tol = 1e-12) const;
  Vector row_marginal() const { return table.rowwise().sum(); }
  Vector col_marginal() const { return table.colwise().sum().transpose(); }
};

// Independent joint: table[p,g] = cluster_marginal[p] * group_marginal[g].
JointDistribution product_joint(const Vector& cluster_marginal, const Vector& group_marginal);

// KL(q || p) in nats with the 0 log 0 = 0 convention. Returns +infinity
// (a distinct value, not an exception) when q has mass where p has none.
double kl_joint(const JointDistribution& q, const JointDistribution& p);

// Half the L1 distance between the tables; lies in [0, 1].
double total_variation(const JointDistribution& q, const JointDistribution& p);

// I(P; G) of the joint in nats.
double mutual_information(const JointDistribution& j);

// Closed-form pieces of the mutual-information bound at KL level eps:
// leading term (1/2) sqrt(eps/8) ln(2/eps), with the sqrt(eps/2) scale of
// the unqualified remainder reported alongside, never silently added.
struct TheoremBound {
  double leading_term = 0.0;
  double sqrt_eps_scale = 0.0;
};

TheoremBound theorem_bound(double epsilon);

// Joints within KL <= epsilon of a product base, built by mixing the base
// with Dirichlet-style perturbation tables and bisecting the mixing
// weight to a target divergence. Deterministic given the seed.
std::vector<JointDistribution> sample_near_independent(const JointDistribution& base,
                                                       double epsilon, int trials,
                                                       std::uint64_t seed);

struct BoundSweepRow {
  double epsilon = 0.0;
  int trials = 0;
  double max_i = 0.0;
  double mean_i = 0.0;
  double pinsker_pass_rate = 0.0;
  double leading_term = 0.0;
  double sqrt_eps_scale = 0.0;
};

// For each epsilon: samples `trials` near-independent joints around the
// uniform product on a k x g table and records the empirical mutual
// information spread, the Pinsker check pass rate, and the closed-form
// bound values.
std::vector<BoundSweepRow> bound_sweep(int k, int g, const std::vector<double>& epsilons,
                                       int trials, std::uint64_t seed);

void write_bound_report_csv(const std::string& path, const std::vector<BoundSweepRow>& rows);

}  // namespace afmvc
