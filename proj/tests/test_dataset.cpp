#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "afmvc/dataset.hpp"

using namespace afmvc;
namespace fs = std::filesystem;

namespace {

fs::path test_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("afmvc_dataset_" + name);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("load_dataset assembles two csv views") {
  const auto dir = test_dir("load");
  write_file(dir / "v0.csv", "1,2\n3,4\n5,6\n7,8\n");
  write_file(dir / "v1.csv", "1\n2\n3\n4\n");
  DatasetManifest m;
  m.view_paths = {(dir / "v0.csv").string(), (dir / "v1.csv").string()};
  const MultiViewDataset ds = load_dataset(m);
  CHECK(ds.num_instances() == 4);
  CHECK(ds.num_views() == 2);
  CHECK(ds.views[0](2, 1) == doctest::Approx(6.0));
}

TEST_CASE("load_dataset rejects row-count mismatch") {
  const auto dir = test_dir("mismatch");
  write_file(dir / "a.csv", "1\n2\n3\n4\n");
  write_file(dir / "b.csv", "1\n2\n3\n4\n5\n");
  DatasetManifest m;
  m.view_paths = {(dir / "a.csv").string(), (dir / "b.csv").string()};
  CHECK_THROWS_AS(load_dataset(m), std::invalid_argument);
}

TEST_CASE("csv parse error reports row and column") {
  const auto dir = test_dir("parse");
  write_file(dir / "bad.csv", "1,2\n3,oops\n");
  try {
    read_csv_matrix((dir / "bad.csv").string(), false);
    FAIL("expected parse error");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("column 2") != std::string::npos);
  }
}

TEST_CASE("subsample is deterministic and aligned") {
  const auto dir = test_dir("subsample");
  std::string v0, v1, lab;
  for (int i = 0; i < 10; ++i) {
    v0 += std::to_string(i) + "," + std::to_string(10 * i) + "\n";
    v1 += std::to_string(2 * i) + "\n";
    lab += std::to_string(i % 3) + "\n";
  }
  write_file(dir / "v0.csv", v0);
  write_file(dir / "v1.csv", v1);
  write_file(dir / "labels.csv", lab);
  DatasetManifest m;
  m.view_paths = {(dir / "v0.csv").string(), (dir / "v1.csv").string()};
  m.labels_path = (dir / "labels.csv").string();
  m.subsample = 3;
  m.seed = 7;
  const MultiViewDataset a = load_dataset(m);
  const MultiViewDataset b = load_dataset(m);
  CHECK(a.num_instances() == 3);
  CHECK(a.views[0] == b.views[0]);
  CHECK(*a.labels == *b.labels);
  for (int i = 0; i < 3; ++i) {
    const int orig = static_cast<int>(a.views[0](i, 0));
    CHECK(a.views[1](i, 0) == doctest::Approx(2.0 * orig));  // row alignment kept
    CHECK((*a.labels)[static_cast<std::size_t>(i)] == orig % 3);
  }
  m.subsample = 99;
  CHECK_THROWS_AS(load_dataset(m), std::invalid_argument);
}

TEST_CASE("standardize hand values") {
  Matrix x(2, 1);
  x << 0.0, 2.0;
  const Matrix z = standardize(x);
  CHECK(z(0, 0) == doctest::Approx(-1.0));
  CHECK(z(1, 0) == doctest::Approx(1.0));

  Matrix c = Matrix::Constant(5, 2, 3.25);
  CHECK(standardize(c).isZero(0.0));

  // idempotence
  Matrix r(6, 3);
  Rng rng(3);
  for (Eigen::Index i = 0; i < r.rows(); ++i)
    for (Eigen::Index j = 0; j < r.cols(); ++j) r(i, j) = rng.normal() * 3.0 + 1.0;
  const Matrix once = standardize(r);
  const Matrix twice = standardize(once);
  CHECK((once - twice).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("synthesize_views transforms") {
  const Matrix zero = Matrix::Zero(4, 3);
  const auto views = synthesize_views(zero, {ViewTransform::Sigmoid, ViewTransform::Relu});
  REQUIRE(views.size() == 2);
  CHECK((views[0].array() == 0.5).all());  // sigmoid(0)
  CHECK(views[1].isZero(0.0));             // relu(0)

  Matrix two(2, 1);
  two << 0.0, 2.0;  // standardizes to (-1, 1)
  const auto sig = synthesize_views(two, {ViewTransform::Sigmoid});
  CHECK(sig[0](0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(1.0))).epsilon(1e-10));
  CHECK(sig[0](1, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-10));

  // shape and range properties
  Rng rng(11);
  Matrix r(7, 4);
  for (Eigen::Index i = 0; i < r.rows(); ++i)
    for (Eigen::Index j = 0; j < r.cols(); ++j) r(i, j) = rng.normal();
  const auto vs = synthesize_views(r, {ViewTransform::Sigmoid, ViewTransform::Relu});
  for (const auto& v : vs) {
    CHECK(v.rows() == r.rows());
    CHECK(v.cols() == r.cols());
  }
  CHECK((vs[0].array() > 0.0).all());
  CHECK((vs[0].array() < 1.0).all());
  CHECK((vs[1].array() >= 0.0).all());
}

TEST_CASE("synthesize_sensitive distribution and determinism") {
  int seeds_in_band = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto g = synthesize_sensitive(1000, 0.5, seed);
    const double frac =
        static_cast<double>(std::count(g.begin(), g.end(), 1)) / static_cast<double>(g.size());
    if (frac >= 0.45 && frac <= 0.55) ++seeds_in_band;
  }
  CHECK(seeds_in_band == 100);  // P(|frac-0.5| > 0.05) ~ 2e-3 per seed at n=1000

  const auto nearly_ones = synthesize_sensitive(10, 0.999999, 3);
  CHECK(std::count(nearly_ones.begin(), nearly_ones.end(), 1) >= 9);

  CHECK(synthesize_sensitive(50, 0.5, 42) == synthesize_sensitive(50, 0.5, 42));
  CHECK_THROWS_AS(synthesize_sensitive(0, 0.5, 1), std::invalid_argument);
  CHECK_THROWS_AS(synthesize_sensitive(5, 0.0, 1), std::invalid_argument);
}

TEST_CASE("make_batches covers all indices") {
  const BatchPlan plan = make_batches(5, 2, 9);
  CHECK(plan.num_batches() == 3);
  CHECK(plan.batch(0).size() == 2);
  CHECK(plan.batch(1).size() == 2);
  CHECK(plan.batch(2).size() == 1);
  std::set<int> seen(plan.order.begin(), plan.order.end());
  CHECK(seen.size() == 5);
  CHECK(*seen.begin() == 0);
  CHECK(*seen.rbegin() == 4);

  const BatchPlan whole = make_batches(4, 4, 1);
  CHECK(whole.num_batches() == 1);
  CHECK(whole.batch(0).size() == 4);

  CHECK(make_batches(17, 5, 3).order == make_batches(17, 5, 3).order);
  CHECK_THROWS_AS(make_batches(4, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(make_batches(4, 5, 1), std::invalid_argument);
}

TEST_CASE("csv round-trip is bit-exact") {
  const auto dir = test_dir("roundtrip");
  Rng rng(21);
  Matrix m(8, 5);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      m(i, j) = rng.normal() * std::pow(10.0, rng.uniform(-8, 8));
  const std::string path = (dir / "m.csv").string();
  write_csv_matrix(path, m);
  const Matrix back = read_csv_matrix(path, false);
  REQUIRE(back.rows() == m.rows());
  REQUIRE(back.cols() == m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) CHECK(back(i, j) == m(i, j));
}

TEST_CASE("manifest json round-trip") {
  const auto dir = test_dir("manifest");
  DatasetManifest m;
  m.name = "demo";
  m.view_paths = {"a.csv", "b.csv"};
  m.sensitive_source = SensitiveSource::Synthetic;
  m.bernoulli_p = 0.25;
  m.k = 3;
  m.subsample = 42;
  m.seed = 99;
  m.has_header = true;
  const std::string path = (dir / "manifest.json").string();
  m.to_json_file(path);
  const DatasetManifest back = DatasetManifest::from_json_file(path);
  CHECK(back.name == m.name);
  CHECK(back.view_paths == m.view_paths);
  CHECK(back.sensitive_source == SensitiveSource::Synthetic);
  CHECK(back.bernoulli_p == doctest::Approx(0.25));
  CHECK(back.k == 3);
  CHECK(back.subsample.value() == 42);
  CHECK(back.seed == 99);
  CHECK(back.has_header);
}

TEST_CASE("dataset validate flags bad shapes") {
  MultiViewDataset ds;
  ds.name = "bad";
  CHECK_THROWS_AS(ds.validate(), std::invalid_argument);
  ds.views.push_back(Matrix::Zero(3, 2));
  ds.sensitive = {0, 0, 0};
  CHECK_NOTHROW(ds.validate(false));
  CHECK_THROWS_AS(ds.validate(true), std::invalid_argument);  // needs >= 2 groups
  ds.sensitive = {0, 1, 0};
  CHECK_NOTHROW(ds.validate(true));
}
