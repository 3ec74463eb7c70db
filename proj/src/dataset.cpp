#include "afmvc/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace afmvc {

using nlohmann::json;

int MultiViewDataset::num_groups() const {
  if (sensitive.empty()) return 0;
  return *std::max_element(sensitive.begin(), sensitive.end()) + 1;
}

void MultiViewDataset::validate(bool require_sensitive) const {
  require(!views.empty(), "dataset '" + name + "': needs at least one view");
  const Eigen::Index n = views[0].rows();
  require(n >= 1, "dataset '" + name + "': needs at least one instance");
  for (std::size_t v = 0; v < views.size(); ++v) {
    if (views[v].rows() != n) {
      throw std::invalid_argument("dataset '" + name + "': view " + std::to_string(v) +
                                  " has " + std::to_string(views[v].rows()) +
                                  " rows, expected " + std::to_string(n));
    }
    if (!views[v].allFinite()) {
      throw std::invalid_argument("dataset '" + name + "': view " + std::to_string(v) +
                                  " contains non-finite values");
    }
  }
  if (labels) {
    require(static_cast<Eigen::Index>(labels->size()) == n,
            "dataset '" + name + "': label count does not match row count");
  }
  if (!sensitive.empty()) {
    require(static_cast<Eigen::Index>(sensitive.size()) == n,
            "dataset '" + name + "': sensitive count does not match row count");
    require(*std::min_element(sensitive.begin(), sensitive.end()) >= 0,
            "dataset '" + name + "': sensitive ids must be non-negative");
  }
  if (require_sensitive) {
    require(!sensitive.empty(), "dataset '" + name + "': fairness training needs a sensitive attribute");
    const std::set<int> groups(sensitive.begin(), sensitive.end());
    require(groups.size() >= 2, "dataset '" + name + "': fairness training needs >= 2 sensitive groups");
  }
}

void DatasetManifest::validate() const {
  require(!view_paths.empty(), "manifest: view_paths must be non-empty");
  require(k >= 2, "manifest: K must be >= 2");
  require(bernoulli_p > 0.0 && bernoulli_p < 1.0, "manifest: bernoulli_p must lie in (0,1)");
  if (subsample) require(*subsample >= 1, "manifest: subsample must be >= 1");
}

DatasetManifest DatasetManifest::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("manifest: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("manifest '" + path + "': " + e.what());
  }
  DatasetManifest m;
  m.name = j.value("name", std::string("dataset"));
  m.view_paths = j.at("view_paths").get<std::vector<std::string>>();
  if (j.contains("labels_path") && !j["labels_path"].is_null())
    m.labels_path = j["labels_path"].get<std::string>();
  if (j.contains("sensitive_path") && !j["sensitive_path"].is_null())
    m.sensitive_path = j["sensitive_path"].get<std::string>();
  const std::string src = j.value("sensitive_source", std::string("file"));
  if (src == "file") {
    m.sensitive_source = SensitiveSource::File;
  } else if (src == "synthetic") {
    m.sensitive_source = SensitiveSource::Synthetic;
  } else {
    throw std::runtime_error("manifest: unknown sensitive_source '" + src + "'");
  }
  m.bernoulli_p = j.value("bernoulli_p", 0.5);
  m.k = j.value("k", 2);
  if (j.contains("subsample") && !j["subsample"].is_null()) m.subsample = j["subsample"].get<int>();
  m.seed = j.value("seed", std::uint64_t{0});
  m.has_header = j.value("has_header", false);
  m.validate();
  return m;
}

void DatasetManifest::to_json_file(const std::string& path) const {
  json j;
  j["name"] = name;
  j["view_paths"] = view_paths;
  if (labels_path) j["labels_path"] = *labels_path;
  if (sensitive_path) j["sensitive_path"] = *sensitive_path;
  j["sensitive_source"] = sensitive_source == SensitiveSource::File ? "file" : "synthetic";
  j["bernoulli_p"] = bernoulli_p;
  j["k"] = k;
  if (subsample) j["subsample"] = *subsample;
  j["seed"] = seed;
  j["has_header"] = has_header;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("manifest: cannot write '" + path + "'");
  out << j.dump(2) << "\n";
}

int BatchPlan::num_batches() const {
  if (order.empty()) return 0;
  return static_cast<int>((order.size() + static_cast<std::size_t>(batch_size) - 1) /
                          static_cast<std::size_t>(batch_size));
}

std::vector<int> BatchPlan::batch(int b) const {
  require(b >= 0 && b < num_batches(), "BatchPlan::batch: index out of range");
  const std::size_t lo = static_cast<std::size_t>(b) * static_cast<std::size_t>(batch_size);
  const std::size_t hi = std::min(order.size(), lo + static_cast<std::size_t>(batch_size));
  return std::vector<int>(order.begin() + static_cast<std::ptrdiff_t>(lo),
                          order.begin() + static_cast<std::ptrdiff_t>(hi));
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col, const std::string& path) {
  std::size_t begin = cell.find_first_not_of(" \t\r");
  if (begin == std::string::npos) begin = cell.size();
  std::size_t end = cell.find_last_not_of(" \t\r");
  const std::string trimmed = begin <= end ? cell.substr(begin, end - begin + 1) : std::string();
  try {
    std::size_t consumed = 0;
    const double value = std::stod(trimmed, &consumed);
    if (consumed != trimmed.size() || trimmed.empty()) throw std::invalid_argument("trailing junk");
    return value;
  } catch (const std::exception&) {
    throw std::runtime_error("csv '" + path + "': non-numeric cell at row " + std::to_string(row + 1) +
                             ", column " + std::to_string(col + 1) + " ('" + cell + "')");
  }
}

std::vector<std::vector<double>> read_csv_rows(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 0 && has_header) {
      ++lineno;
      continue;
    }
    if (line.empty()) {
      ++lineno;
      continue;
    }
    const auto cells = split_line(line);
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      row.push_back(parse_cell(cells[c], lineno, c, path));
    }
    if (!rows.empty() && row.size() != rows[0].size()) {
      throw std::runtime_error("csv '" + path + "': row " + std::to_string(lineno + 1) + " has " +
                               std::to_string(row.size()) + " cells, expected " +
                               std::to_string(rows[0].size()));
    }
    rows.push_back(std::move(row));
    ++lineno;
  }
  if (rows.empty()) throw std::runtime_error("csv '" + path + "': no data rows");
  return rows;
}

}  // namespace

Matrix read_csv_matrix(const std::string& path, bool has_header) {
  const auto rows = read_csv_rows(path, has_header);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

std::vector<int> read_csv_int_column(const std::string& path, bool has_header) {
  const auto rows = read_csv_rows(path, has_header);
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != 1) {
      throw std::runtime_error("csv '" + path + "': expected a single column, row " +
                               std::to_string(i + 1) + " has " + std::to_string(rows[i].size()));
    }
    const double v = rows[i][0];
    const int iv = static_cast<int>(std::llround(v));
    if (iv < 0 || std::abs(v - iv) > 1e-9) {
      throw std::runtime_error("csv '" + path + "': row " + std::to_string(i + 1) +
                               " is not a non-negative integer");
    }
    out.push_back(iv);
  }
  return out;
}

void write_csv_matrix(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot write '" + path + "'");
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << buf;
      if (j + 1 < m.cols()) out << ',';
    }
    out << '\n';
  }
}

void write_csv_int_column(const std::string& path, const std::vector<int>& v, const std::string& header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot write '" + path + "'");
  if (!header.empty()) out << header << '\n';
  for (int x : v) out << x << '\n';
}

MultiViewDataset load_dataset(const DatasetManifest& manifest) {
  manifest.validate();
  MultiViewDataset ds;
  ds.name = manifest.name;
  for (const auto& p : manifest.view_paths) {
    ds.views.push_back(read_csv_matrix(p, manifest.has_header));
  }
  const Eigen::Index n = ds.views[0].rows();
  for (std::size_t v = 1; v < ds.views.size(); ++v) {
    if (ds.views[v].rows() != n) {
      throw std::invalid_argument("load_dataset: view '" + manifest.view_paths[v] + "' has " +
                                  std::to_string(ds.views[v].rows()) + " rows, expected " +
                                  std::to_string(n));
    }
  }
  if (manifest.labels_path) {
    ds.labels = read_csv_int_column(*manifest.labels_path, manifest.has_header);
  }
  if (manifest.sensitive_source == SensitiveSource::Synthetic) {
    ds.sensitive = synthesize_sensitive(static_cast<int>(n), manifest.bernoulli_p, manifest.seed);
  } else if (manifest.sensitive_path) {
    ds.sensitive = read_csv_int_column(*manifest.sensitive_path, manifest.has_header);
  }
  if (manifest.subsample) {
    const int count = *manifest.subsample;
    if (count > n) {
      throw std::invalid_argument("load_dataset: subsample " + std::to_string(count) +
                                  " exceeds row count " + std::to_string(n));
    }
    const auto idx = subsample_indices(static_cast<int>(n), count, manifest.seed);
    Eigen::VectorXi eidx(count);
    for (int i = 0; i < count; ++i) eidx(i) = idx[static_cast<std::size_t>(i)];
    for (auto& view : ds.views) view = view(eidx, Eigen::all).eval();
    if (ds.labels) {
      std::vector<int> sub;
      sub.reserve(static_cast<std::size_t>(count));
      for (int i : idx) sub.push_back((*ds.labels)[static_cast<std::size_t>(i)]);
      ds.labels = std::move(sub);
    }
    if (!ds.sensitive.empty()) {
      std::vector<int> sub;
      sub.reserve(static_cast<std::size_t>(count));
      for (int i : idx) sub.push_back(ds.sensitive[static_cast<std::size_t>(i)]);
      ds.sensitive = std::move(sub);
    }
  }
  ds.validate();
  return ds;
}

Matrix standardize(const Matrix& x) {
  require(x.allFinite(), "standardize: input must be finite");
  Matrix out(x.rows(), x.cols());
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double mean = x.col(j).mean();
    const double var = (x.col(j).array() - mean).square().sum() / n;
    double sd = std::sqrt(var);
    if (sd == 0.0) sd = 1.0;  // constant column -> zeros
    out.col(j) = (x.col(j).array() - mean) / sd;
  }
  return out;
}

std::vector<Matrix> synthesize_views(const Matrix& x, const std::vector<ViewTransform>& transforms) {
  require(!transforms.empty(), "synthesize_views: transforms must be non-empty");
  const Matrix z = standardize(x);
  std::vector<Matrix> views;
  views.reserve(transforms.size());
  for (ViewTransform t : transforms) {
    switch (t) {
      case ViewTransform::Sigmoid:
        views.push_back((1.0 / (1.0 + (-z.array()).exp())).matrix());
        break;
      case ViewTransform::Relu:
        views.push_back(z.array().max(0.0).matrix());
        break;
    }
  }
  return views;
}

std::vector<int> synthesize_sensitive(int n, double p, std::uint64_t seed) {
  require(n >= 1, "synthesize_sensitive: n must be >= 1");
  require(p > 0.0 && p < 1.0, "synthesize_sensitive: p must lie in (0,1)");
  Rng rng(mix_seed(seed, 0x5e5));
  std::vector<int> out(static_cast<std::size_t>(n));
  for (auto& g : out) g = rng.bernoulli(p) ? 1 : 0;
  return out;
}

BatchPlan make_batches(int n, int batch_size, std::uint64_t seed) {
  require(n >= 1, "make_batches: n must be >= 1");
  require(batch_size >= 1 && batch_size <= n, "make_batches: batch_size must lie in [1, n]");
  BatchPlan plan;
  plan.batch_size = batch_size;
  plan.order.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) plan.order[static_cast<std::size_t>(i)] = i;
  Rng rng(mix_seed(seed, 0xba7c4));
  rng.shuffle(plan.order);
  return plan;
}

std::vector<int> subsample_indices(int n, int count, std::uint64_t seed) {
  require(count >= 1 && count <= n, "subsample_indices: count must lie in [1, n]");
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  Rng rng(mix_seed(seed, 0x50b5));
  rng.shuffle(idx);
  idx.resize(static_cast<std::size_t>(count));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace afmvc
