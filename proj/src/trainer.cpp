#include "afmvc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "afmvc/checkpoint.hpp"

namespace afmvc {

using nlohmann::json;

namespace {

// seed tags for the independent deterministic streams
constexpr std::uint64_t kTagInit = 10;
constexpr std::uint64_t kTagPretrainEpoch = 100000;
constexpr std::uint64_t kTagJointEpoch = 200000;
constexpr std::uint64_t kTagRefreshEpoch = 300000;
constexpr std::uint64_t kTagFinalKmeans = 400000;
constexpr std::uint64_t kTagConsensus = 500000;
constexpr std::uint64_t kTagProbe = 600000;

std::vector<int> encoder_widths(int d_v, const Architecture& arch) {
  std::vector<int> w{d_v};
  w.insert(w.end(), arch.encoder_hidden.begin(), arch.encoder_hidden.end());
  w.push_back(arch.latent_dim);
  return w;
}

std::vector<Activation> hidden_relu_then(std::size_t n_layers, Activation last) {
  std::vector<Activation> a(n_layers, Activation::Relu);
  a.back() = last;
  return a;
}

DenseNetwork make_encoder(int d_v, const Architecture& arch, Rng& rng) {
  const auto w = encoder_widths(d_v, arch);
  return DenseNetwork::make(Role::Encoder, w, hidden_relu_then(w.size() - 1, Activation::Identity),
                            rng);
}

DenseNetwork make_decoder(int d_v, const Architecture& arch, Rng& rng) {
  std::vector<int> w = encoder_widths(d_v, arch);
  std::reverse(w.begin(), w.end());
  return DenseNetwork::make(Role::Decoder, w, hidden_relu_then(w.size() - 1, Activation::Identity),
                            rng);
}

DenseNetwork make_discriminator(int d, int groups, const Architecture& arch, Rng& rng) {
  std::vector<int> w{d};
  w.insert(w.end(), arch.disc_hidden.begin(), arch.disc_hidden.end());
  w.push_back(groups);
  return DenseNetwork::make(Role::Discriminator, w,
                            hidden_relu_then(w.size() - 1, Activation::Softmax), rng);
}

// Adam for a bare parameter matrix (the trainable centroids).
struct MatrixAdam {
  Matrix m, v;
  long t = 0;
  double lr, beta1, beta2, eps;

  MatrixAdam(Eigen::Index rows, Eigen::Index cols, double lr_, double b1 = 0.9, double b2 = 0.999,
             double e = 1e-8)
      : m(Matrix::Zero(rows, cols)), v(Matrix::Zero(rows, cols)), lr(lr_), beta1(b1), beta2(b2),
        eps(e) {}

  void step(Matrix& param, const Matrix& grad, const std::string& context) {
    if (!grad.allFinite()) throw std::runtime_error("adam_step: non-finite gradient in " + context);
    t += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.array().square().matrix();
    param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
    if (!param.allFinite()) throw std::runtime_error(context + ": non-finite centroid values");
  }
};

Matrix take_rows(const Matrix& m, const std::vector<int>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

std::vector<int> take_entries(const std::vector<int>& v, const std::vector<int>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (int r : rows) out.push_back(v[static_cast<std::size_t>(r)]);
  return out;
}

double full_dataset_recon_loss(const std::vector<DenseNetwork>& encoders,
                               const std::vector<DenseNetwork>& decoders,
                               const std::vector<Matrix>& views) {
  double total = 0.0;
  for (std::size_t v = 0; v < views.size(); ++v) {
    const Matrix z = forward(encoders[v], views[v]);
    const Matrix xhat = forward(decoders[v], z);
    total += mse_loss(xhat, views[v]).first;
  }
  return total;
}

void track_grads(GradCoverage& cov, const std::string& prefix, const NetGrads& grads) {
  for (std::size_t l = 0; l < grads.dw.size(); ++l) {
    const std::string base = prefix + ".layer" + std::to_string(l);
    const double w_max = grads.dw[l].size() > 0 ? grads.dw[l].cwiseAbs().maxCoeff() : 0.0;
    const double b_max = grads.db[l].size() > 0 ? grads.db[l].cwiseAbs().maxCoeff() : 0.0;
    for (const auto& [name, value] : {std::pair{base + ".w", w_max}, std::pair{base + ".b", b_max}}) {
      auto it = std::find(cov.names.begin(), cov.names.end(), name);
      if (it == cov.names.end()) {
        cov.names.push_back(name);
        cov.max_abs.push_back(value);
      } else {
        cov.max_abs[static_cast<std::size_t>(it - cov.names.begin())] =
            std::max(cov.max_abs[static_cast<std::size_t>(it - cov.names.begin())], value);
      }
    }
  }
}

void track_matrix_grad(GradCoverage& cov, const std::string& name, const Matrix& grad) {
  const double mx = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
  auto it = std::find(cov.names.begin(), cov.names.end(), name);
  if (it == cov.names.end()) {
    cov.names.push_back(name);
    cov.max_abs.push_back(mx);
  } else {
    cov.max_abs[static_cast<std::size_t>(it - cov.names.begin())] =
        std::max(cov.max_abs[static_cast<std::size_t>(it - cov.names.begin())], mx);
  }
}

TrainedModel train_impl(const MultiViewDataset& dataset, const TrainConfig& config,
                        double recon_weight, const EpochObserver& observer);

}  // namespace

void TrainConfig::validate() const {
  require(lambda_c >= 0.0 && lambda_f >= 0.0, "config: lambda weights must be >= 0");
  require(epochs >= 1, "config: epochs must be >= 1");
  require(update_interval >= 1, "config: update_interval must be >= 1");
  require(update_interval <= epochs, "config: update_interval must not exceed epochs");
  require(beta > 0.0, "config: beta must be positive");
  require(alpha > 0.0, "config: alpha must be positive");
  require(batch_size >= 1, "config: batch_size must be >= 1");
  require(pretrain_epochs >= 0, "config: pretrain_epochs must be >= 0");
  require(lr > 0.0, "config: lr must be positive");
  require(k >= 2, "config: k must be >= 2");
  require(arch.latent_dim >= 1, "config: latent_dim must be >= 1");
}

std::string TrainConfig::to_json_string() const {
  json j;
  j["lambda_c"] = lambda_c;
  j["lambda_f"] = lambda_f;
  j["update_interval"] = update_interval;
  j["epochs"] = epochs;
  j["beta"] = beta;
  j["alpha"] = alpha;
  j["batch_size"] = batch_size;
  j["pretrain_epochs"] = pretrain_epochs;
  j["lr"] = lr;
  j["seed"] = seed;
  j["k"] = k;
  j["encoder_hidden"] = arch.encoder_hidden;
  j["latent_dim"] = arch.latent_dim;
  j["disc_hidden"] = arch.disc_hidden;
  j["centroid_init"] = centroid_init == CentroidInit::Kmeans ? "kmeans" : "gaussian";
  j["schedule_unit"] = schedule_unit == ScheduleUnit::Epoch ? "epoch" : "minibatch";
  j["assign_by_mean_q"] = assign_by_mean_q;
  return j.dump();
}

TrainConfig TrainConfig::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("config: ") + e.what());
  }
  TrainConfig c;
  c.lambda_c = j.value("lambda_c", c.lambda_c);
  c.lambda_f = j.value("lambda_f", c.lambda_f);
  c.update_interval = j.value("update_interval", c.update_interval);
  c.epochs = j.value("epochs", c.epochs);
  c.beta = j.value("beta", c.beta);
  c.alpha = j.value("alpha", c.alpha);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.pretrain_epochs = j.value("pretrain_epochs", c.pretrain_epochs);
  c.lr = j.value("lr", c.lr);
  c.seed = j.value("seed", c.seed);
  c.k = j.value("k", c.k);
  if (j.contains("encoder_hidden")) c.arch.encoder_hidden = j["encoder_hidden"].get<std::vector<int>>();
  c.arch.latent_dim = j.value("latent_dim", c.arch.latent_dim);
  if (j.contains("disc_hidden")) c.arch.disc_hidden = j["disc_hidden"].get<std::vector<int>>();
  if (j.contains("centroid_init")) {
    const std::string s = j["centroid_init"].get<std::string>();
    if (s == "kmeans") c.centroid_init = CentroidInit::Kmeans;
    else if (s == "gaussian") c.centroid_init = CentroidInit::Gaussian;
    else throw std::runtime_error("config: unknown centroid_init '" + s + "'");
  }
  if (j.contains("schedule_unit")) {
    const std::string s = j["schedule_unit"].get<std::string>();
    if (s == "epoch") c.schedule_unit = ScheduleUnit::Epoch;
    else if (s == "minibatch") c.schedule_unit = ScheduleUnit::Minibatch;
    else throw std::runtime_error("config: unknown schedule_unit '" + s + "'");
  }
  c.assign_by_mean_q = j.value("assign_by_mean_q", c.assign_by_mean_q);
  return c;
}

TrainConfig TrainConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_string(text);
}

std::uint64_t TrainConfig::hash() const { return fnv1a_hash(to_json_string()); }

PretrainResult pretrain(const MultiViewDataset& dataset, const TrainConfig& config) {
  dataset.validate(false);
  config.validate();
  const int n = dataset.num_instances();
  const int batch_size = std::min(config.batch_size, n);

  Rng init_rng(mix_seed(config.seed, kTagInit));
  PretrainResult res;
  std::vector<AdamState> enc_adam, dec_adam;
  for (int v = 0; v < dataset.num_views(); ++v) {
    const int d_v = static_cast<int>(dataset.views[static_cast<std::size_t>(v)].cols());
    res.encoders.push_back(make_encoder(d_v, config.arch, init_rng));
    res.decoders.push_back(make_decoder(d_v, config.arch, init_rng));
    enc_adam.push_back(AdamState::for_network(res.encoders.back(), config.lr));
    dec_adam.push_back(AdamState::for_network(res.decoders.back(), config.lr));
  }

  for (int epoch = 1; epoch <= config.pretrain_epochs; ++epoch) {
    const BatchPlan plan =
        make_batches(n, batch_size, mix_seed(config.seed, kTagPretrainEpoch + static_cast<std::uint64_t>(epoch)));
    for (int b = 0; b < plan.num_batches(); ++b) {
      const auto rows = plan.batch(b);
      for (std::size_t v = 0; v < res.encoders.size(); ++v) {
        const Matrix xb = take_rows(dataset.views[v], rows);
        GradTape enc_tape, dec_tape;
        const Matrix z = forward(res.encoders[v], xb, &enc_tape);
        const Matrix xhat = forward(res.decoders[v], z, &dec_tape);
        const auto [loss, dxhat] = mse_loss(xhat, xb);
        if (!std::isfinite(loss)) {
          throw std::runtime_error("pretrain: non-finite reconstruction loss in view " +
                                   std::to_string(v) + " at epoch " + std::to_string(epoch));
        }
        NetGrads dec_grads = NetGrads::zeros_like(res.decoders[v]);
        const Matrix dz = backward(res.decoders[v], dec_tape, dxhat, dec_grads);
        NetGrads enc_grads = NetGrads::zeros_like(res.encoders[v]);
        backward(res.encoders[v], enc_tape, dz, enc_grads);
        adam_step(res.decoders[v], dec_grads, dec_adam[v], "pretrain decoder " + std::to_string(v));
        adam_step(res.encoders[v], enc_grads, enc_adam[v], "pretrain encoder " + std::to_string(v));
      }
    }
    res.recon_trace.push_back(full_dataset_recon_loss(res.encoders, res.decoders, dataset.views));
  }
  return res;
}

Matrix encode_fused(const std::vector<DenseNetwork>& encoders, const std::vector<Matrix>& views) {
  require(encoders.size() == views.size(), "encode_fused: one encoder per view");
  std::vector<Matrix> latents;
  latents.reserve(views.size());
  for (std::size_t v = 0; v < views.size(); ++v) latents.push_back(forward(encoders[v], views[v]));
  return concat_views(latents);
}

ClusterState init_consensus(const std::vector<DenseNetwork>& encoders,
                            const MultiViewDataset& dataset, int k, std::uint64_t seed,
                            CentroidInit centroid_init, double alpha) {
  require(k >= 2, "init_consensus: k must be >= 2");
  if (k > dataset.num_instances()) {
    throw std::invalid_argument("init_consensus: k exceeds instance count");
  }
  ClusterState state;
  state.alpha = alpha;
  const Matrix fused = encode_fused(encoders, dataset.views);
  const KMeansResult km = kmeans(fused, k, mix_seed(seed, kTagConsensus));
  state.consensus = one_hot_consensus(km.labels, k);
  for (std::size_t v = 0; v < encoders.size(); ++v) {
    const Matrix z_v = forward(encoders[v], dataset.views[v]);
    if (centroid_init == CentroidInit::Kmeans) {
      state.centroids.push_back(
          kmeans(z_v, k, mix_seed(seed, kTagConsensus + 1 + static_cast<std::uint64_t>(v))).centroids);
    } else {
      Rng rng(mix_seed(seed, kTagConsensus + 1 + static_cast<std::uint64_t>(v)));
      Matrix c(k, z_v.cols());
      for (Eigen::Index i = 0; i < c.rows(); ++i)
        for (Eigen::Index j = 0; j < c.cols(); ++j) c(i, j) = rng.normal();
      state.centroids.push_back(std::move(c));
    }
  }
  return state;
}

namespace {

TrainedModel train_impl(const MultiViewDataset& dataset, const TrainConfig& config,
                        double recon_weight, const EpochObserver& observer) {
  config.validate();
  dataset.validate(config.lambda_f > 0.0);
  const int n = dataset.num_instances();
  const int n_views = dataset.num_views();
  const int batch_size = std::min(config.batch_size, n);
  const bool has_sensitive = !dataset.sensitive.empty();
  const int groups = has_sensitive ? std::max(2, dataset.num_groups()) : 2;

  TrainedModel model;
  {
    PretrainResult pre = pretrain(dataset, config);
    model.encoders = std::move(pre.encoders);
    model.decoders = std::move(pre.decoders);
  }
  model.state = init_consensus(model.encoders, dataset, config.k, config.seed,
                               config.centroid_init, config.alpha);

  const int fused_dim = config.arch.latent_dim * n_views;
  Rng disc_rng(mix_seed(config.seed, kTagInit + 1));
  model.discriminator = make_discriminator(fused_dim, groups, config.arch, disc_rng);

  std::vector<AdamState> enc_adam, dec_adam;
  for (int v = 0; v < n_views; ++v) {
    enc_adam.push_back(AdamState::for_network(model.encoders[static_cast<std::size_t>(v)], config.lr));
    dec_adam.push_back(AdamState::for_network(model.decoders[static_cast<std::size_t>(v)], config.lr));
  }
  AdamState disc_adam = AdamState::for_network(model.discriminator, config.lr);
  std::vector<MatrixAdam> centroid_adam;
  for (int v = 0; v < n_views; ++v) {
    centroid_adam.emplace_back(config.k, config.arch.latent_dim, config.lr);
  }

  const int batches_per_epoch = (n + batch_size - 1) / batch_size;
  long global_batch = 0;
  AdversarySchedule sched;
  sched.beta = config.beta;
  sched.total_iters = config.schedule_unit == ScheduleUnit::Epoch
                          ? config.epochs
                          : static_cast<long>(config.epochs) * batches_per_epoch;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const BatchPlan plan = make_batches(
        n, batch_size, mix_seed(config.seed, kTagJointEpoch + static_cast<std::uint64_t>(epoch)));
    double epoch_lr_sum = 0.0, epoch_lc_sum = 0.0, epoch_lf_sum = 0.0;
    double coeff = 0.0;
    for (int b = 0; b < plan.num_batches(); ++b, ++global_batch) {
      const auto rows = plan.batch(b);
      const double bsz = static_cast<double>(rows.size());

      sched.current_iter = config.schedule_unit == ScheduleUnit::Epoch
                               ? static_cast<long>(epoch - 1)
                               : global_batch;
      coeff = grl_coeff(sched);
      const AdversarialSplit split = adversarial_split(coeff, config.lambda_f);

      // forward all views
      std::vector<GradTape> enc_tapes(static_cast<std::size_t>(n_views));
      std::vector<GradTape> dec_tapes(static_cast<std::size_t>(n_views));
      std::vector<Matrix> xb(static_cast<std::size_t>(n_views));
      std::vector<Matrix> zb(static_cast<std::size_t>(n_views));
      double l_r = 0.0;
      std::vector<Matrix> recon_dz(static_cast<std::size_t>(n_views));
      std::vector<NetGrads> dec_grads(static_cast<std::size_t>(n_views));
      for (int v = 0; v < n_views; ++v) {
        const auto vi = static_cast<std::size_t>(v);
        xb[vi] = take_rows(dataset.views[vi], rows);
        zb[vi] = forward(model.encoders[vi], xb[vi], &enc_tapes[vi]);
        const Matrix xhat = forward(model.decoders[vi], zb[vi], &dec_tapes[vi]);
        const auto [loss_v, dxhat] = mse_loss(xhat, xb[vi]);
        l_r += loss_v;
        dec_grads[vi] = NetGrads::zeros_like(model.decoders[vi]);
        recon_dz[vi] = backward(model.decoders[vi], dec_tapes[vi], dxhat, dec_grads[vi]);
      }

      // consensus alignment
      const Matrix p_batch = take_rows(model.state.consensus, rows);
      ConsensusLossResult consensus =
          kl_consensus_loss(p_batch, zb, model.state.centroids, config.alpha);
      const double l_c = consensus.loss;

      // fairness
      const Matrix fused = concat_views(zb);
      double l_f = 0.0;
      Matrix fairness_dz_fused = Matrix::Zero(fused.rows(), fused.cols());
      NetGrads disc_grads = NetGrads::zeros_like(model.discriminator);
      if (has_sensitive) {
        GradTape disc_tape;
        const Matrix probs = discriminate(model.discriminator, fused, &disc_tape);
        const auto gb = take_entries(dataset.sensitive, rows);
        const auto [lf, dlogits] = fairness_loss(probs, gb);
        l_f = lf;
        if (config.lambda_f > 0.0) {
          const Matrix disc_input_grad =
              backward(model.discriminator, disc_tape, split.disc_scale * dlogits, disc_grads);
          // reversal: encoders ascend the fairness loss, ramped by coeff
          fairness_dz_fused = grl_backward(disc_input_grad, coeff);
        }
      }

      if (!std::isfinite(l_r) || !std::isfinite(l_c) || !std::isfinite(l_f)) {
        const std::string term = !std::isfinite(l_r) ? "L_R" : (!std::isfinite(l_c) ? "L_C" : "L_F");
        throw std::runtime_error("train: non-finite " + term + " at epoch " +
                                 std::to_string(epoch) + " batch " + std::to_string(b));
      }

      // encoder updates: recon + consensus + reversed fairness
      Eigen::Index off = 0;
      for (int v = 0; v < n_views; ++v) {
        const auto vi = static_cast<std::size_t>(v);
        const Eigen::Index d_lat = zb[vi].cols();
        Matrix dz_total = recon_weight * recon_dz[vi] + config.lambda_c * consensus.dz[vi] +
                          fairness_dz_fused.middleCols(off, d_lat);
        off += d_lat;
        NetGrads enc_grads = NetGrads::zeros_like(model.encoders[vi]);
        backward(model.encoders[vi], enc_tapes[vi], dz_total, enc_grads);
        track_grads(model.grad_coverage, "encoder" + std::to_string(v), enc_grads);
        adam_step(model.encoders[vi], enc_grads, enc_adam[vi],
                  "train encoder " + std::to_string(v) + " epoch " + std::to_string(epoch));

        dec_grads[vi].scale(recon_weight);
        track_grads(model.grad_coverage, "decoder" + std::to_string(v), dec_grads[vi]);
        adam_step(model.decoders[vi], dec_grads[vi], dec_adam[vi],
                  "train decoder " + std::to_string(v) + " epoch " + std::to_string(epoch));

        const Matrix dmu = config.lambda_c * consensus.dcentroids[vi];
        track_matrix_grad(model.grad_coverage, "centroids" + std::to_string(v), dmu);
        centroid_adam[vi].step(model.state.centroids[vi], dmu,
                               "train centroids " + std::to_string(v) + " epoch " +
                                   std::to_string(epoch));
      }
      track_grads(model.grad_coverage, "discriminator", disc_grads);
      adam_step(model.discriminator, disc_grads, disc_adam,
                "train discriminator epoch " + std::to_string(epoch));

      epoch_lr_sum += l_r * bsz;
      epoch_lc_sum += l_c * bsz;
      epoch_lf_sum += l_f * bsz;
    }

    EpochTrace row;
    row.epoch = epoch;
    row.l_r = epoch_lr_sum / n;
    row.l_c = epoch_lc_sum / n;
    row.l_f = epoch_lf_sum / n;
    row.coeff = coeff;
    model.trace.push_back(row);

    // periodic consensus refresh on the full fused representation
    if (epoch % config.update_interval == 0) {
      const Matrix fused_full = encode_fused(model.encoders, dataset.views);
      const KMeansResult km = kmeans(
          fused_full, config.k,
          mix_seed(config.seed, kTagRefreshEpoch + static_cast<std::uint64_t>(epoch)));
      model.state.consensus = one_hot_consensus(km.labels, config.k);
    }
    if (observer) observer(epoch, model.state);
  }

  // final assignments from the fused latent space
  const Matrix fused_full = encode_fused(model.encoders, dataset.views);
  if (config.assign_by_mean_q) {
    Matrix mean_q = Matrix::Zero(n, config.k);
    Eigen::Index off = 0;
    for (int v = 0; v < n_views; ++v) {
      const auto vi = static_cast<std::size_t>(v);
      const Matrix z_v = fused_full.middleCols(off, config.arch.latent_dim);
      off += config.arch.latent_dim;
      mean_q += soft_assign(z_v, model.state.centroids[vi], config.alpha);
    }
    model.assignments.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best;
      mean_q.row(i).maxCoeff(&best);
      model.assignments[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
  } else {
    const KMeansResult km = kmeans(fused_full, config.k, mix_seed(config.seed, kTagFinalKmeans));
    model.assignments = km.labels;
  }
  return model;
}

}  // namespace

TrainedModel train(const MultiViewDataset& dataset, const TrainConfig& config,
                   const EpochObserver& observer) {
  return train_impl(dataset, config, 1.0, observer);
}

TrainedModel ablate(const MultiViewDataset& dataset, const TrainConfig& config,
                    AblationVariant variant) {
  TrainConfig c = config;
  double recon_weight = 1.0;
  switch (variant) {
    case AblationVariant::A: c.lambda_f = 0.0; break;
    case AblationVariant::B: recon_weight = 0.0; break;
    case AblationVariant::C: c.lambda_c = 0.0; break;
    case AblationVariant::D: break;
  }
  return train_impl(dataset, c, recon_weight, {});
}

double sensitive_probe_accuracy(const TrainedModel& model, const MultiViewDataset& dataset,
                                const TrainConfig& config, int probe_epochs) {
  dataset.validate(true);
  const Matrix fused = encode_fused(model.encoders, dataset.views);
  const int n = static_cast<int>(fused.rows());
  const int groups = dataset.num_groups();
  Rng rng(mix_seed(config.seed, kTagProbe));
  DenseNetwork probe = make_discriminator(static_cast<int>(fused.cols()), groups, config.arch, rng);
  AdamState adam = AdamState::for_network(probe, config.lr);
  const int batch_size = std::min(config.batch_size, n);
  for (int epoch = 1; epoch <= probe_epochs; ++epoch) {
    const BatchPlan plan = make_batches(
        n, batch_size, mix_seed(config.seed, kTagProbe + 1 + static_cast<std::uint64_t>(epoch)));
    for (int b = 0; b < plan.num_batches(); ++b) {
      const auto rows = plan.batch(b);
      GradTape tape;
      const Matrix probs = discriminate(probe, take_rows(fused, rows), &tape);
      const auto [loss, dlogits] = fairness_loss(probs, take_entries(dataset.sensitive, rows));
      if (!std::isfinite(loss)) throw std::runtime_error("probe: non-finite loss");
      NetGrads grads = NetGrads::zeros_like(probe);
      backward(probe, tape, dlogits, grads);
      adam_step(probe, grads, adam, "sensitive probe");
    }
  }
  const Matrix probs = discriminate(probe, fused);
  int hits = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index best;
    probs.row(i).maxCoeff(&best);
    if (static_cast<int>(best) == dataset.sensitive[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

void write_trace_csv(const std::string& path, const std::vector<EpochTrace>& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("trace: cannot write '" + path + "'");
  out << "epoch,L_R,L_C,L_F,coeff\n";
  char buf[256];
  for (const auto& row : trace) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g", row.epoch, row.l_r, row.l_c,
                  row.l_f, row.coeff);
    out << buf << '\n';
  }
}

void save_model_checkpoint(const std::string& path, const TrainedModel& model,
                           std::uint64_t config_hash) {
  Checkpoint ckpt;
  ckpt.config_hash = config_hash;
  for (const auto& enc : model.encoders) {
    ckpt.networks.push_back(enc);
    ckpt.adam_states.push_back(AdamState::for_network(enc));
  }
  for (const auto& dec : model.decoders) {
    ckpt.networks.push_back(dec);
    ckpt.adam_states.push_back(AdamState::for_network(dec));
  }
  ckpt.networks.push_back(model.discriminator);
  ckpt.adam_states.push_back(AdamState::for_network(model.discriminator));
  ckpt.save(path);
}

std::string ablation_variant_name(AblationVariant v) {
  switch (v) {
    case AblationVariant::A: return "A";
    case AblationVariant::B: return "B";
    case AblationVariant::C: return "C";
    case AblationVariant::D: return "D";
  }
  return "?";
}

}  // namespace afmvc
