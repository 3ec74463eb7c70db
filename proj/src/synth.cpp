#include "afmvc/synth.hpp"

#include <cmath>
#include <filesystem>

namespace afmvc {

MultiViewDataset make_blob_dataset(const BlobSpec& spec) {
  require(spec.n >= spec.k && spec.k >= 2 && spec.dim >= 1, "make_blob_dataset: bad shape");
  Rng rng(mix_seed(spec.seed, 0xb10b));
  // component centres: random unit directions scaled by the separation
  Matrix centres(spec.k, spec.dim);
  for (int c = 0; c < spec.k; ++c) {
    Vector dir(spec.dim);
    for (int j = 0; j < spec.dim; ++j) dir(j) = rng.normal();
    dir.normalize();
    centres.row(c) = spec.separation * dir.transpose();
  }
  Matrix base(spec.n, spec.dim);
  std::vector<int> labels(static_cast<std::size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i) {
    const int c = i % spec.k;  // balanced components
    labels[static_cast<std::size_t>(i)] = c;
    for (int j = 0; j < spec.dim; ++j) base(i, j) = centres(c, j) + rng.normal();
  }
  MultiViewDataset ds;
  ds.name = "blobs";
  ds.views = synthesize_views(base, {ViewTransform::Sigmoid, ViewTransform::Relu});
  ds.labels = std::move(labels);
  ds.sensitive = synthesize_sensitive(spec.n, 0.5, mix_seed(spec.seed, 0x5e75));
  ds.validate();
  return ds;
}

MultiViewDataset make_biased_dataset(const BiasedSpec& spec) {
  require(spec.rho >= 0.5 && spec.rho <= 1.0, "make_biased_dataset: rho must lie in [0.5, 1.0]");
  require(spec.n >= 4, "make_biased_dataset: n too small");
  Rng rng(mix_seed(spec.seed, 0xb1a5));
  const int d = spec.cluster_dims + spec.sensitive_dims;
  Matrix base(spec.n, d);
  std::vector<int> labels(static_cast<std::size_t>(spec.n));
  std::vector<int> sensitive(static_cast<std::size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i) {
    const int cluster = i % 2;  // balanced clusters
    labels[static_cast<std::size_t>(i)] = cluster;
    const int g = rng.bernoulli(spec.rho) ? cluster : 1 - cluster;
    sensitive[static_cast<std::size_t>(i)] = g;
    const double c_sign = cluster == 0 ? -1.0 : 1.0;
    const double g_sign = g == 0 ? -1.0 : 1.0;
    for (int j = 0; j < spec.cluster_dims; ++j) {
      base(i, j) = 0.5 * spec.cluster_separation * c_sign + rng.normal();
    }
    for (int j = 0; j < spec.sensitive_dims; ++j) {
      base(i, spec.cluster_dims + j) =
          0.5 * spec.sensitive_separation * g_sign + spec.sensitive_noise * rng.normal();
    }
  }
  MultiViewDataset ds;
  ds.name = "biased";
  ds.views = synthesize_views(base, {ViewTransform::Sigmoid, ViewTransform::Relu});
  ds.labels = std::move(labels);
  ds.sensitive = std::move(sensitive);
  ds.validate(true);
  return ds;
}

std::string write_dataset_files(const MultiViewDataset& ds, const std::string& out_dir, int k) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  DatasetManifest manifest;
  manifest.name = ds.name;
  manifest.k = k;
  manifest.sensitive_source = SensitiveSource::File;
  for (std::size_t v = 0; v < ds.views.size(); ++v) {
    const std::string path = (fs::path(out_dir) / (ds.name + "_view" + std::to_string(v) + ".csv")).string();
    write_csv_matrix(path, ds.views[v]);
    manifest.view_paths.push_back(path);
  }
  if (ds.labels) {
    const std::string path = (fs::path(out_dir) / (ds.name + "_labels.csv")).string();
    write_csv_int_column(path, *ds.labels);
    manifest.labels_path = path;
  }
  if (!ds.sensitive.empty()) {
    const std::string path = (fs::path(out_dir) / (ds.name + "_sensitive.csv")).string();
    write_csv_int_column(path, ds.sensitive);
    manifest.sensitive_path = path;
  }
  const std::string manifest_path = (fs::path(out_dir) / (ds.name + "_manifest.json")).string();
  manifest.to_json_file(manifest_path);
  return manifest_path;
}

}  // namespace afmvc
