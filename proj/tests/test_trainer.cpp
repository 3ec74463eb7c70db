#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "afmvc/metrics.hpp"
#include "afmvc/synth.hpp"
#include "afmvc/trainer.hpp"

using namespace afmvc;

namespace {

// small desk-test config: tiny nets, short schedules
TrainConfig tiny_config(int k) {
  TrainConfig c;
  c.k = k;
  c.arch.encoder_hidden = {16, 8};
  c.arch.latent_dim = 4;
  c.arch.disc_hidden = {8};
  c.batch_size = 64;
  c.pretrain_epochs = 10;
  c.epochs = 6;
  c.update_interval = 2;
  c.seed = 5;
  return c;
}

MultiViewDataset small_blobs(std::uint64_t seed = 1) {
  BlobSpec spec;
  spec.n = 160;
  spec.k = 2;
  spec.dim = 6;
  spec.separation = 7.0;
  spec.seed = seed;
  return make_blob_dataset(spec);
}

bool same_network(const DenseNetwork& a, const DenseNetwork& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t l = 0; l < a.layers.size(); ++l) {
    if (a.layers[l].w != b.layers[l].w || a.layers[l].b != b.layers[l].b) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("pretrain reduces the reconstruction loss") {
  const MultiViewDataset ds = small_blobs();
  TrainConfig c = tiny_config(2);

  TrainConfig c0 = c;
  c0.pretrain_epochs = 0;
  const PretrainResult init = pretrain(ds, c0);
  CHECK(init.recon_trace.empty());
  double initial_loss = 0.0;
  for (std::size_t v = 0; v < ds.views.size(); ++v) {
    const Matrix xhat = forward(init.decoders[v], forward(init.encoders[v], ds.views[v]));
    initial_loss += mse_loss(xhat, ds.views[v]).first;
  }

  c.pretrain_epochs = 30;
  const PretrainResult trained = pretrain(ds, c);
  REQUIRE(trained.recon_trace.size() == 30);
  CHECK(trained.recon_trace.back() <= 0.9 * initial_loss);
}

TEST_CASE("pretraining loss trace is non-increasing") {
  const MultiViewDataset ds = small_blobs(3);
  TrainConfig c = tiny_config(2);
  c.pretrain_epochs = 40;
  const PretrainResult res = pretrain(ds, c);
  const std::size_t strict_until = res.recon_trace.size() * 9 / 10;
  for (std::size_t e = 1; e < res.recon_trace.size(); ++e) {
    const double tol = e < strict_until ? 0.0 : 1e-6;
    CHECK(res.recon_trace[e] <= res.recon_trace[e - 1] + tol);
  }
}

TEST_CASE("pretrain is deterministic and zero epochs keep the init") {
  const MultiViewDataset ds = small_blobs();
  TrainConfig c = tiny_config(2);
  c.pretrain_epochs = 5;
  const PretrainResult a = pretrain(ds, c);
  const PretrainResult b = pretrain(ds, c);
  for (std::size_t v = 0; v < a.encoders.size(); ++v) {
    CHECK(same_network(a.encoders[v], b.encoders[v]));
    CHECK(same_network(a.decoders[v], b.decoders[v]));
  }

  TrainConfig c0 = c;
  c0.pretrain_epochs = 0;
  const PretrainResult i1 = pretrain(ds, c0);
  const PretrainResult i2 = pretrain(ds, c0);
  CHECK(same_network(i1.encoders[0], i2.encoders[0]));
  CHECK_FALSE(same_network(i1.encoders[0], a.encoders[0]));  // training moved the params
}

TEST_CASE("init_consensus recovers separable structure") {
  const MultiViewDataset ds = small_blobs(7);
  TrainConfig c = tiny_config(2);
  c.pretrain_epochs = 25;
  const PretrainResult pre = pretrain(ds, c);
  const ClusterState state = init_consensus(pre.encoders, ds, 2, c.seed, CentroidInit::Kmeans, 1.0);

  REQUIRE(state.consensus.rows() == ds.num_instances());
  std::vector<int> p_labels;
  for (Eigen::Index i = 0; i < state.consensus.rows(); ++i) {
    CHECK(state.consensus.row(i).sum() == doctest::Approx(1.0));
    CHECK(state.consensus.row(i).maxCoeff() == doctest::Approx(1.0));
    Eigen::Index best;
    state.consensus.row(i).maxCoeff(&best);
    p_labels.push_back(static_cast<int>(best));
  }
  CHECK(accuracy(p_labels, *ds.labels) >= 0.95);

  const ClusterState again = init_consensus(pre.encoders, ds, 2, c.seed, CentroidInit::Kmeans, 1.0);
  CHECK(state.consensus == again.consensus);
  CHECK(state.centroids[0] == again.centroids[0]);

  // gaussian option exists and is deterministic too
  const ClusterState g1 = init_consensus(pre.encoders, ds, 2, c.seed, CentroidInit::Gaussian, 1.0);
  const ClusterState g2 = init_consensus(pre.encoders, ds, 2, c.seed, CentroidInit::Gaussian, 1.0);
  CHECK(g1.centroids[0] == g2.centroids[0]);
  CHECK_FALSE(g1.centroids[0] == state.centroids[0]);
}

TEST_CASE("train produces a full trace and valid assignments, deterministically") {
  const MultiViewDataset ds = small_blobs(11);
  const TrainConfig c = tiny_config(2);
  const TrainedModel m1 = train(ds, c);
  const TrainedModel m2 = train(ds, c);

  REQUIRE(static_cast<int>(m1.trace.size()) == c.epochs);
  CHECK(static_cast<int>(m1.assignments.size()) == ds.num_instances());
  for (int a : m1.assignments) {
    CHECK(a >= 0);
    CHECK(a < c.k);
  }
  CHECK(m1.assignments == m2.assignments);
  for (std::size_t e = 0; e < m1.trace.size(); ++e) {
    CHECK(m1.trace[e].l_r == m2.trace[e].l_r);
    CHECK(m1.trace[e].l_c == m2.trace[e].l_c);
    CHECK(m1.trace[e].l_f == m2.trace[e].l_f);
    CHECK(m1.trace[e].coeff == m2.trace[e].coeff);
  }
  // epoch-unit schedule: coeff at the first epoch is exactly zero
  CHECK(m1.trace[0].coeff == 0.0);
  CHECK(m1.trace.back().coeff > 0.0);
}

TEST_CASE("consensus changes only at refresh epochs") {
  const MultiViewDataset ds = small_blobs(13);
  TrainConfig c = tiny_config(2);
  c.epochs = 9;
  c.update_interval = 3;
  std::vector<Matrix> snapshots;
  train(ds, c, [&](int, const ClusterState& state) { snapshots.push_back(state.consensus); });
  REQUIRE(snapshots.size() == 9);
  const Matrix init_p = init_consensus(pretrain(ds, c).encoders, ds, c.k, c.seed,
                                       c.centroid_init, c.alpha)
                            .consensus;
  Matrix prev = init_p;
  for (int epoch = 1; epoch <= 9; ++epoch) {
    const Matrix& cur = snapshots[static_cast<std::size_t>(epoch - 1)];
    if (epoch % c.update_interval != 0) {
      CHECK(cur == prev);  // untouched between refreshes
    }
    prev = cur;
  }
}

TEST_CASE("every parameter tensor receives gradient") {
  const MultiViewDataset ds = small_blobs(17);
  TrainConfig c = tiny_config(2);
  c.lambda_f = 0.05;
  c.epochs = 2;  // coeff > 0 from the second epoch on
  const TrainedModel m = train(ds, c);
  REQUIRE_FALSE(m.grad_coverage.names.empty());
  for (std::size_t i = 0; i < m.grad_coverage.names.size(); ++i) {
    INFO("tensor ", m.grad_coverage.names[i]);
    CHECK(m.grad_coverage.max_abs[i] > 0.0);
  }
}

TEST_CASE("with both extra losses off, training is pure autoencoding") {
  const MultiViewDataset ds = small_blobs(19);
  TrainConfig c = tiny_config(2);
  c.lambda_c = 0.0;
  c.lambda_f = 0.0;
  const TrainedModel m = train(ds, c);
  // centroids got no gradient at all
  for (std::size_t i = 0; i < m.grad_coverage.names.size(); ++i) {
    if (m.grad_coverage.names[i].rfind("centroids", 0) == 0) {
      CHECK(m.grad_coverage.max_abs[i] == 0.0);
    }
    if (m.grad_coverage.names[i].rfind("discriminator", 0) == 0) {
      CHECK(m.grad_coverage.max_abs[i] == 0.0);
    }
  }
  // final labels match an independent k-means on the final fused latents
  const Matrix fused = encode_fused(m.encoders, ds.views);
  const KMeansResult km = kmeans(fused, 2, 12345);
  CHECK(accuracy(m.assignments, km.labels) == doctest::Approx(1.0));
}

TEST_CASE("ablation variant D equals plain training") {
  const MultiViewDataset ds = small_blobs(23);
  const TrainConfig c = tiny_config(2);
  const TrainedModel plain = train(ds, c);
  const TrainedModel d = ablate(ds, c, AblationVariant::D);
  CHECK(plain.assignments == d.assignments);
  for (std::size_t e = 0; e < plain.trace.size(); ++e) {
    CHECK(plain.trace[e].l_r == d.trace[e].l_r);
    CHECK(plain.trace[e].l_c == d.trace[e].l_c);
    CHECK(plain.trace[e].l_f == d.trace[e].l_f);
  }
}

TEST_CASE("ablation variant B freezes the decoders after pretraining") {
  const MultiViewDataset ds = small_blobs(29);
  const TrainConfig c = tiny_config(2);
  const TrainedModel b = ablate(ds, c, AblationVariant::B);
  const PretrainResult pre = pretrain(ds, c);
  for (std::size_t v = 0; v < b.decoders.size(); ++v) {
    CHECK(same_network(b.decoders[v], pre.decoders[v]));
  }
  // encoders still moved (consensus + fairness gradients flow)
  CHECK_FALSE(same_network(b.encoders[0], pre.encoders[0]));
}

TEST_CASE("ablation variant A logs fairness but never applies it") {
  const MultiViewDataset ds = small_blobs(31);
  TrainConfig c = tiny_config(2);
  c.lambda_f = 0.5;
  const TrainedModel a = ablate(ds, c, AblationVariant::A);
  for (const auto& row : a.trace) {
    CHECK(std::isfinite(row.l_f));
    CHECK(row.l_f > 0.0);  // untrained discriminator stays near ln 2
  }
  for (std::size_t i = 0; i < a.grad_coverage.names.size(); ++i) {
    if (a.grad_coverage.names[i].rfind("discriminator", 0) == 0) {
      CHECK(a.grad_coverage.max_abs[i] == 0.0);
    }
  }
}

TEST_CASE("training aborts on a diverging configuration") {
  const MultiViewDataset ds = small_blobs(37);
  TrainConfig c = tiny_config(2);
  // Adam steps have magnitude ~lr, so the params reach 1e100 after one
  // update and the next forward pass overflows to inf
  c.lr = 1e100;
  c.pretrain_epochs = 50;
  CHECK_THROWS_AS(train(ds, c), std::runtime_error);
}

TEST_CASE("probe recovers the sensitive bit when fairness is off") {
  BiasedSpec spec;
  spec.n = 300;
  spec.rho = 0.9;
  spec.seed = 3;
  const MultiViewDataset ds = make_biased_dataset(spec);
  TrainConfig c = tiny_config(2);
  c.lambda_f = 0.0;
  c.pretrain_epochs = 30;
  c.epochs = 10;
  const TrainedModel m = train(ds, c);
  const double probe = sensitive_probe_accuracy(m, ds, c, 120);
  CHECK(probe >= 0.8);  // representation leaks the explicit sensitive columns
}

TEST_CASE("config json round-trip and hash") {
  TrainConfig c = tiny_config(3);
  c.lambda_c = 0.25;
  c.centroid_init = CentroidInit::Gaussian;
  c.schedule_unit = ScheduleUnit::Minibatch;
  const TrainConfig back = TrainConfig::from_json_string(c.to_json_string());
  CHECK(back.lambda_c == c.lambda_c);
  CHECK(back.k == 3);
  CHECK(back.centroid_init == CentroidInit::Gaussian);
  CHECK(back.schedule_unit == ScheduleUnit::Minibatch);
  CHECK(back.arch.encoder_hidden == c.arch.encoder_hidden);
  CHECK(back.hash() == c.hash());
  TrainConfig other = c;
  other.lambda_c = 0.3;
  CHECK(other.hash() != c.hash());

  TrainConfig bad = c;
  bad.update_interval = bad.epochs + 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(TrainConfig::from_json_string("{nope"), std::runtime_error);
}

TEST_CASE("trace csv is written with one row per epoch") {
  const MultiViewDataset ds = small_blobs(41);
  const TrainConfig c = tiny_config(2);
  const TrainedModel m = train(ds, c);
  const auto path = (std::filesystem::temp_directory_path() / "afmvc_trace_test.csv").string();
  write_trace_csv(path, m.trace);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,L_R,L_C,L_F,coeff");
  int rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty()) ++rows;
  }
  CHECK(rows == c.epochs);
}

TEST_CASE("minibatch schedule unit ramps within the first epoch") {
  const MultiViewDataset ds = small_blobs(43);
  TrainConfig c = tiny_config(2);
  c.schedule_unit = ScheduleUnit::Minibatch;
  c.epochs = 2;
  const TrainedModel m = train(ds, c);
  // the logged coeff is the last batch's; with per-batch ramping it is
  // already positive in epoch 1
  CHECK(m.trace[0].coeff > 0.0);
  CHECK(m.trace[1].coeff > m.trace[0].coeff);
}
