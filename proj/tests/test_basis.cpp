#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "xite/basis.hpp"
#include "xite/error.hpp"
#include "xite/rng.hpp"

using namespace xite;

namespace {

// Two Gaussian clusters in d dims, means +/- mu, isotropic noise sigma.
void two_clusters(const Eigen::VectorXd& mu, double sigma, std::size_t n_per, std::uint64_t seed,
                  Eigen::MatrixXd& X, std::vector<int>& y) {
  const Eigen::Index d = mu.size();
  X.resize(d, static_cast<Eigen::Index>(2 * n_per));
  y.clear();
  Rng rng(seed);
  for (std::size_t i = 0; i < 2 * n_per; ++i) {
    const int cls = i < n_per ? 0 : 1;
    for (Eigen::Index j = 0; j < d; ++j) {
      X(j, static_cast<Eigen::Index>(i)) = (cls ? mu[j] : -mu[j]) + sigma * rng.gaussian();
    }
    y.push_back(cls);
  }
}

double max_abs(const Eigen::MatrixXd& M) { return M.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("lda_axis: isotropic clusters recover the mean-difference direction") {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(8);
  mu[0] = 1.0;  // means at -e1 and +e1
  Eigen::MatrixXd X;
  std::vector<int> y;
  two_clusters(mu, 0.1, 200, 1, X, y);
  const Eigen::VectorXd v = lda_axis(X, y, 1e-4);
  CHECK(std::abs(v[0]) >= 0.99);
  CHECK(std::abs(v.norm() - 1.0) <= 1e-6);
  CHECK(v[0] > 0);  // sign convention: v . (mu1 - mu0) >= 0
}

TEST_CASE("lda_axis: identical means rejected") {
  Eigen::MatrixXd X;
  std::vector<int> y;
  two_clusters(Eigen::VectorXd::Zero(4), 0.5, 100, 2, X, y);
  // force means exactly equal
  Eigen::MatrixXd Xe(2, 6);
  Xe << 1, -1, 0, 1, -1, 0, 0, 0, 1, 0, 0, 1;
  std::vector<int> ye{0, 0, 0, 1, 1, 1};
  CHECK_THROWS_AS(lda_axis(Xe, ye, 1e-4), ComputeError);
}

TEST_CASE("lda_axis: matches a hand 2x2 oracle on 6 points") {
  // class 0: (0,0), (1,0), (0,1); class 1: (3,1), (4,1), (3,2)
  Eigen::MatrixXd X(2, 6);
  X << 0, 1, 0, 3, 4, 3, 0, 0, 1, 1, 1, 2;
  std::vector<int> y{0, 0, 0, 1, 1, 1};
  const double shrink = 1e-3;

  // hand computation
  Eigen::Vector2d mu0(1.0 / 3, 1.0 / 3), mu1(10.0 / 3, 4.0 / 3);
  Eigen::Matrix2d Sw = Eigen::Matrix2d::Zero();
  for (int i = 0; i < 6; ++i) {
    const Eigen::Vector2d c = X.col(i) - (y[i] ? mu1 : mu0);
    Sw += c * c.transpose();
  }
  Sw /= 4.0;  // n - 2
  const double eps = shrink * Sw.trace() / 2.0;
  Eigen::Matrix2d A = Sw + eps * Eigen::Matrix2d::Identity();
  // explicit 2x2 inverse
  const double det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
  Eigen::Matrix2d Ainv;
  Ainv << A(1, 1), -A(0, 1), -A(1, 0), A(0, 0);
  Ainv /= det;
  Eigen::Vector2d want = Ainv * (mu1 - mu0);
  want.normalize();

  const Eigen::VectorXd got = lda_axis(X, y, shrink);
  CHECK(std::abs(got.dot(want)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("lda_axis: single class rejected") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(3, 10);
  std::vector<int> y(10, 0);
  CHECK_THROWS_AS(lda_axis(X, y, 1e-4), ValidationError);
}

TEST_CASE("derive_basis: rank-1 offset along e1 found with k=1") {
  Rng rng(3);
  const Eigen::Index d = 6;
  Eigen::MatrixXd X(d, 400);
  std::vector<int> y;
  for (int i = 0; i < 400; ++i) {
    const int cls = i < 200 ? 0 : 1;
    for (Eigen::Index j = 0; j < d; ++j) X(j, i) = 0.05 * rng.gaussian();
    if (cls) X(0, i) += 2.0;
    y.push_back(cls);
  }
  const LanguageBasis b = derive_basis(X, y, 1, 1e-4);
  REQUIRE(b.k == 1);
  // alignment limited by sample-covariance noise in Sw^-1, O(1/sqrt(n))
  CHECK(std::abs(b.V(0, 0)) >= 0.99);
}

TEST_CASE("derive_basis: k=d gives a complete basis; orthonormality holds") {
  Rng rng(4);
  const Eigen::Index d = 10;
  Eigen::MatrixXd X(d, 600);
  std::vector<int> y;
  for (int i = 0; i < 600; ++i) {
    const int cls = i < 300 ? 0 : 1;
    for (Eigen::Index j = 0; j < d; ++j) {
      X(j, i) = rng.gaussian() * (1.0 + 0.1 * static_cast<double>(j)) + (cls ? 0.3 * (j % 3) : 0.0);
    }
    y.push_back(cls);
  }
  const LanguageBasis b = derive_basis(X, y, static_cast<std::uint32_t>(d), 1e-4);
  REQUIRE(b.k == d);
  CHECK(max_abs(b.V.transpose() * b.V - Eigen::MatrixXd::Identity(d, d)) <= 1e-5);
  CHECK(max_abs(b.V * b.V.transpose() - Eigen::MatrixXd::Identity(d, d)) <= 1e-4);
}

TEST_CASE("deflation kills the extracted axis") {
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(5);
  mu[2] = 1.5;
  Eigen::MatrixXd X;
  std::vector<int> y;
  two_clusters(mu, 0.3, 300, 5, X, y);
  const LanguageBasis b = derive_basis(X, y, 1, 1e-4);
  const Eigen::VectorXd v0 = b.V.col(0);
  const Eigen::MatrixXd Xdefl = X - v0 * (v0.transpose() * X);
  CHECK(fisher_ratio(Xdefl, y, v0) <= 1e-6);
}

TEST_CASE("projector: fixed point, null space, idempotence, symmetry") {
  Rng rng(6);
  Eigen::MatrixXd X(8, 300);
  std::vector<int> y;
  for (int i = 0; i < 300; ++i) {
    for (int j = 0; j < 8; ++j) X(j, i) = rng.gaussian();
    if (i >= 150) X(1, i) += 2.0;
    y.push_back(i < 150 ? 0 : 1);
  }
  const LanguageBasis b = derive_basis(X, y, 3, 1e-4);
  REQUIRE(b.k == 3);

  const Eigen::VectorXd in_span = b.V * Eigen::Vector3d(0.3, -1.2, 0.5);
  CHECK((project_onto_basis(b, in_span) - in_span).norm() <= 1e-6);

  // a vector orthogonal to span(V): Gram-Schmidt a random vector
  Eigen::VectorXd w = Eigen::VectorXd::Random(8);
  w -= b.V * (b.V.transpose() * w);
  w -= b.V * (b.V.transpose() * w);
  CHECK(project_onto_basis(b, w).norm() <= 1e-6 * std::max(1.0, w.norm()));

  Eigen::VectorXd x = Eigen::VectorXd::Random(8);
  const Eigen::VectorXd once = project_onto_basis(b, x);
  CHECK((project_onto_basis(b, once) - once).norm() <= 1e-6);

  const Eigen::MatrixXd P = b.V * b.V.transpose();
  CHECK(max_abs(P * P - P) <= 1e-6);
  CHECK(max_abs(P - P.transpose()) <= 1e-6);

  CHECK_THROWS_AS(project_onto_basis(b, Eigen::VectorXd::Zero(5)), ValidationError);
}

TEST_CASE("fisher_ratio: zero-within guard, no-separation, scalar oracle") {
  Eigen::MatrixXd X(1, 4);
  X << -1, -1, 1, 1;
  std::vector<int> y{0, 0, 1, 1};
  Eigen::VectorXd dir(1);
  dir << 1.0;
  CHECK(fisher_ratio(X, y, dir) >= 1e10);

  Eigen::MatrixXd Xsame(1, 8);
  Xsame << -1, 1, -1, 1, -1, 1, -1, 1;
  std::vector<int> ysame{0, 0, 0, 0, 1, 1, 1, 1};
  CHECK(fisher_ratio(Xsame, ysame, dir) == doctest::Approx(0.0).epsilon(1e-12));

  // hand-built 1D data: class0 {-1.1, -0.9}, class1 {0.9, 1.1}
  Eigen::MatrixXd Xh(1, 4);
  Xh << -1.1, -0.9, 0.9, 1.1;
  // means -1 and 1; grand mean 0; between = (2*1 + 2*1)/4 = 1
  // within = (0.01*4)/4 = 0.01
  const double want = 1.0 / (0.01 + 1e-12);
  CHECK(fisher_ratio(Xh, y, dir) == doctest::Approx(want).epsilon(1e-9));

  CHECK_THROWS_AS(fisher_ratio(Xh, y, 2.0 * dir), ValidationError);
  std::vector<int> one_class{0, 0, 0, 0};
  CHECK_THROWS_AS(fisher_ratio(Xh, one_class, dir), ValidationError);
}

TEST_CASE("axis_fisher recorded and non-increasing on a rank-2 offset") {
  Rng rng(8);
  const Eigen::Index d = 12;
  Eigen::MatrixXd X(d, 2000);
  std::vector<int> y;
  for (int i = 0; i < 2000; ++i) {
    const int cls = i < 1000 ? 0 : 1;
    for (Eigen::Index j = 0; j < d; ++j) X(j, i) = 0.2 * rng.gaussian();
    if (cls) {
      X(0, i) += 3.0 + 1.5 * rng.gaussian();
      X(1, i) += 3.0 + 0.5 * rng.gaussian();
    }
    y.push_back(cls);
  }
  const LanguageBasis b = derive_basis(X, y, 2, 1e-4);
  REQUIRE(b.k == 2);
  REQUIRE(b.axis_fisher.size() == 2);
  CHECK(b.axis_fisher[0] >= b.axis_fisher[1]);
}

TEST_CASE("basis persistence round trip") {
  Rng rng(9);
  Eigen::MatrixXd X(7, 400);
  std::vector<int> y;
  for (int i = 0; i < 400; ++i) {
    for (int j = 0; j < 7; ++j) X(j, i) = rng.gaussian();
    if (i >= 200) X(3, i) += 1.7;
    y.push_back(i < 200 ? 0 : 1);
  }
  LanguageBasis b = derive_basis(X, y, 3, 5e-4);
  b.source_lang = "en";
  b.target_lang = "ar";
  b.n_used = 200;
  const auto p = std::filesystem::temp_directory_path() / "xite-basis-test.xb";
  save_basis(b, p.string());
  const LanguageBasis back = load_basis(p.string());
  CHECK(back.k == b.k);
  CHECK(back.source_lang == "en");
  CHECK(back.target_lang == "ar");
  CHECK(back.n_used == 200);
  CHECK(back.shrinkage == b.shrinkage);
  CHECK(back.centered == b.centered);
  CHECK(max_abs(back.V - b.V) == 0.0);  // doubles serialized bit-exactly
  REQUIRE(back.axis_fisher.size() == b.axis_fisher.size());
  for (std::size_t i = 0; i < b.axis_fisher.size(); ++i) {
    CHECK(back.axis_fisher[i] == b.axis_fisher[i]);
  }
}

TEST_CASE("neutral complement is orthonormal and orthogonal to V") {
  Rng rng(10);
  Eigen::MatrixXd X(9, 500);
  std::vector<int> y;
  for (int i = 0; i < 500; ++i) {
    for (int j = 0; j < 9; ++j) X(j, i) = rng.gaussian();
    if (i >= 250) X(0, i) += 2.0;
    y.push_back(i < 250 ? 0 : 1);
  }
  const LanguageBasis b = derive_basis(X, y, 2, 1e-4);
  const Eigen::MatrixXd Q = neutral_complement(b);
  REQUIRE(Q.cols() == 7);
  CHECK(max_abs(Q.transpose() * Q - Eigen::MatrixXd::Identity(7, 7)) <= 1e-8);
  CHECK(max_abs(b.V.transpose() * Q) <= 1e-8);
}

TEST_CASE("k greater than d rejected") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(4, 50);
  std::vector<int> y;
  for (int i = 0; i < 50; ++i) y.push_back(i % 2);
  CHECK_THROWS_AS(derive_basis(X, y, 5, 1e-4), ValidationError);
}
