#pragma once

#include <string>

#include "afmvc/dataset.hpp"

namespace afmvc {

// Gaussian-mixture base table turned into a two-view dataset via the
// sigmoid/relu transforms. Labels are the mixture component; the
// sensitive bit is an independent Bernoulli(0.5) draw.
struct BlobSpec {
  int n = 1000;
  int k = 4;
  int dim = 8;
  double separation = 6.0;  // centre distance scale, in units of the unit noise
  std::uint64_t seed = 0;
};

MultiViewDataset make_blob_dataset(const BlobSpec& spec);

// Fairness testbed: two ground-truth clusters whose membership correlates
// with the sensitive bit at rate rho, and with the bit itself replicated
// into explicit feature columns so representations can leak it.
struct BiasedSpec {
  int n = 2000;
  double rho = 0.9;             // P(G == cluster id)
  int cluster_dims = 4;         // columns carrying the cluster structure
  int sensitive_dims = 4;       // columns carrying the sensitive bit
  double cluster_separation = 2.4;
  double sensitive_separation = 2.0;
  double sensitive_noise = 1.0;  // overlap keeps a discriminator from saturating
  std::uint64_t seed = 0;
};

MultiViewDataset make_biased_dataset(const BiasedSpec& spec);

// Writes views/labels/sensitive as CSVs plus a manifest that loads them.
// Returns the manifest path.
std::string write_dataset_files(const MultiViewDataset& ds, const std::string& out_dir, int k);

}  // namespace afmvc
