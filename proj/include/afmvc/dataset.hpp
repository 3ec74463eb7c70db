#pragma once

#include <optional>
#include <string>
#include <vector>

#include "afmvc/common.hpp"

namespace afmvc {

// A collection of V feature matrices over the same N instances, with an
// optional ground-truth labelling and a per-instance sensitive group id.
// Row i of every view, labels[i] and sensitive[i] all refer to the same
// instance.
struct MultiViewDataset {
  std::string name;
  std::vector<Matrix> views;                 // view v is N x d_v
  std::optional<std::vector<int>> labels;    // class ids, if known
  std::vector<int> sensitive;                // group ids in {0..|G|-1}; empty when absent

  int num_instances() const { return views.empty() ? 0 : static_cast<int>(views[0].rows()); }
  int num_views() const { return static_cast<int>(views.size()); }
  int num_groups() const;

  // Checks the structural invariants: V >= 1, N >= 1, equal row counts,
  // finite values, aligned label/sensitive lengths. When
  // `require_sensitive` is set, additionally requires at least two
  // distinct group ids (needed for fairness training).
  void validate(bool require_sensitive = false) const;
};

enum class SensitiveSource { File, Synthetic };

// Describes where a dataset comes from and how to assemble it.
struct DatasetManifest {
  std::string name = "dataset";
  std::vector<std::string> view_paths;
  std::optional<std::string> labels_path;
  std::optional<std::string> sensitive_path;
  SensitiveSource sensitive_source = SensitiveSource::File;
  double bernoulli_p = 0.5;   // group-1 probability for synthetic sensitive bits
  int k = 2;                  // target cluster count
  std::optional<int> subsample;
  std::uint64_t seed = 0;
  bool has_header = false;

  void validate() const;
  static DatasetManifest from_json_file(const std::string& path);
  void to_json_file(const std::string& path) const;
};

// Seeded shuffled index order chunked into ceil(n / batch_size) batches;
// the last batch may be short, never empty.
struct BatchPlan {
  int batch_size = 0;
  std::vector<int> order;  // permutation of 0..n-1

  int num_batches() const;
  std::vector<int> batch(int b) const;
};

// --- CSV plumbing ------------------------------------------------------

// Numeric CSV, one row per instance, comma delimiter. Throws
// std::runtime_error with row/column location on a non-numeric cell.
Matrix read_csv_matrix(const std::string& path, bool has_header);

// Single column of non-negative integers (labels / sensitive groups).
std::vector<int> read_csv_int_column(const std::string& path, bool has_header);

// Values are printed at 17 significant digits so a reload is bit-exact.
void write_csv_matrix(const std::string& path, const Matrix& m);
void write_csv_int_column(const std::string& path, const std::vector<int>& v, const std::string& header = "");

// --- Operations --------------------------------------------------------

// Loads views (plus optional labels / sensitive column) per the manifest,
// synthesizing sensitive bits or subsampling rows as requested.
MultiViewDataset load_dataset(const DatasetManifest& manifest);

// Z-scores each column to mean 0 / std 1 (population std; a zero-variance
// column standardizes with denominator 1, i.e. to all zeros).
Matrix standardize(const Matrix& x);

enum class ViewTransform { Sigmoid, Relu };

// Builds one synthetic view per transform by applying the elementwise
// nonlinearity to the z-scored input table.
std::vector<Matrix> synthesize_views(const Matrix& x, const std::vector<ViewTransform>& transforms);

// Independent Bernoulli(p) group bits, deterministic given the seed.
std::vector<int> synthesize_sensitive(int n, double p, std::uint64_t seed);

// Seeded permutation of 0..n-1 chunked into batches of `batch_size`.
BatchPlan make_batches(int n, int batch_size, std::uint64_t seed);

// Uniform subsample of `count` row indices without replacement, returned
// in ascending order so row alignment and relative order survive.
std::vector<int> subsample_indices(int n, int count, std::uint64_t seed);

}  // namespace afmvc
