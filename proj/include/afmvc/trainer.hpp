#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "afmvc/adversary.hpp"
#include "afmvc/clustering.hpp"
#include "afmvc/dataset.hpp"
#include "afmvc/network.hpp"

namespace afmvc {

enum class CentroidInit { Kmeans, Gaussian };
enum class ScheduleUnit { Epoch, Minibatch };

// Layer widths per role; d_v and |G| are taken from the dataset.
struct Architecture {
  std::vector<int> encoder_hidden{256, 64};
  int latent_dim = 10;
  std::vector<int> disc_hidden{64};
};

struct TrainConfig {
  double lambda_c = 0.1;      // consensus clustering weight
  double lambda_f = 0.01;     // fairness weight
  int update_interval = 50;   // consensus refresh period T (epochs)
  int epochs = 1000;          // joint training epochs n
  double beta = 10.0;         // reversal schedule growth rate
  double alpha = 1.0;         // Student-t degrees of freedom
  int batch_size = 256;
  int pretrain_epochs = 200;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  int k = 0;                  // cluster count; the CLI wires this from the manifest
  Architecture arch;
  CentroidInit centroid_init = CentroidInit::Kmeans;
  ScheduleUnit schedule_unit = ScheduleUnit::Epoch;
  bool assign_by_mean_q = false;  // diagnostic alternative to final k-means

  void validate() const;
  std::string to_json_string() const;
  static TrainConfig from_json_string(const std::string& text);
  static TrainConfig from_json_file(const std::string& path);
  std::uint64_t hash() const;
};

struct EpochTrace {
  int epoch = 0;
  double l_r = 0.0;
  double l_c = 0.0;
  double l_f = 0.0;
  double coeff = 0.0;
};

// Named max-abs-gradient diagnostic per parameter tensor; lets tests
// confirm every tensor of theta/phi/mu/omega actually receives gradient.
struct GradCoverage {
  std::vector<std::string> names;
  std::vector<double> max_abs;
};

struct TrainedModel {
  std::vector<DenseNetwork> encoders;
  std::vector<DenseNetwork> decoders;
  DenseNetwork discriminator;
  ClusterState state;
  std::vector<int> assignments;
  std::vector<EpochTrace> trace;  // exactly `epochs` rows
  GradCoverage grad_coverage;
};

struct PretrainResult {
  std::vector<DenseNetwork> encoders;
  std::vector<DenseNetwork> decoders;
  std::vector<double> recon_trace;  // full-dataset L_R at each epoch end
};

// Per-view autoencoder pretraining on the reconstruction loss only; the
// discriminator is untouched. Deterministic given config.seed.
PretrainResult pretrain(const MultiViewDataset& dataset, const TrainConfig& config);

// Consensus target from k-means on the fused pretrained latents, plus
// per-view centroids (k-means on each view's latents, or seeded Gaussian
// noise under CentroidInit::Gaussian).
ClusterState init_consensus(const std::vector<DenseNetwork>& encoders,
                            const MultiViewDataset& dataset, int k, std::uint64_t seed,
                            CentroidInit centroid_init, double alpha);

enum class AblationVariant { A, B, C, D };  // A: no L_F, B: no L_R, C: no L_C, D: full

// Called at the end of every joint epoch (after any consensus refresh).
using EpochObserver = std::function<void(int epoch, const ClusterState& state)>;

// Full training loop: pretraining, joint minimax epochs with periodic
// consensus refresh, final assignment by k-means on the fused latents.
TrainedModel train(const MultiViewDataset& dataset, const TrainConfig& config,
                   const EpochObserver& observer = {});

// train() with the named loss term disabled. Variant B freezes the
// decoders after pretraining instead of deleting them.
TrainedModel ablate(const MultiViewDataset& dataset, const TrainConfig& config,
                    AblationVariant variant);

// Encodes every view with the final encoders and returns the fused Z.
Matrix encode_fused(const std::vector<DenseNetwork>& encoders, const std::vector<Matrix>& views);

// Post-hoc leakage probe: freeze the model's encoders, train a fresh
// discriminator on (Z, G) for `probe_epochs`, report held-in accuracy.
double sensitive_probe_accuracy(const TrainedModel& model, const MultiViewDataset& dataset,
                                const TrainConfig& config, int probe_epochs = 200);

void write_trace_csv(const std::string& path, const std::vector<EpochTrace>& trace);

// Checkpoint the model's networks (encoders, decoders, discriminator).
void save_model_checkpoint(const std::string& path, const TrainedModel& model,
                           std::uint64_t config_hash);

std::string ablation_variant_name(AblationVariant v);

}  // namespace afmvc
