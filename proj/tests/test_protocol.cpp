#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "qchain/protocol.hpp"
#include "test_common.hpp"

using namespace qchain;

TEST_CASE("normal mode frequencies match the dispersion relation") {
  const auto lambda = normal_mode_frequencies(3.0, 2.0, 4);
  REQUIRE(lambda.size() == 4);
  CHECK(lambda[0] == Catch::Approx(13.0).margin(1e-14));
  CHECK(lambda[1] == Catch::Approx(17.0).margin(1e-14));
  CHECK(lambda[2] == Catch::Approx(13.0).margin(1e-14));
  CHECK(lambda[3] == Catch::Approx(9.0).margin(1e-14));
}

TEST_CASE("decoupled chain has a flat spectrum") {
  for (int n : {2, 3, 7, 500}) {
    const auto lambda = normal_mode_frequencies(3.0, 0.0, n);
    for (double l : lambda) CHECK(l == 9.0);
  }
}

TEST_CASE("mode degeneracy lambda_m == lambda_{N-m} holds exactly") {
  const auto lambda = normal_mode_frequencies(3.0, 2.0, 500);
  for (int m = 1; m < 500; ++m) CHECK(lambda[m - 1] == lambda[500 - m - 1]);
}

TEST_CASE("spectrum bounds: min is omega^2 at mode N, max at most omega^2 + 4k") {
  qtest::ProtocolGenerator gen(123);
  for (int rep = 0; rep < 30; ++rep) {
    const auto protocol = gen.next();
    const auto& chain = protocol.chain();
    const auto lambda =
        normal_mode_frequencies(chain.omega_initial, chain.coupling, chain.n_sites);
    const double w2 = chain.omega_initial * chain.omega_initial;
    double lo = lambda[0], hi = lambda[0];
    for (double l : lambda) {
      lo = std::min(lo, l);
      hi = std::max(hi, l);
    }
    CHECK(lo == w2);
    CHECK(lambda.back() == w2);
    CHECK(hi <= w2 + 4.0 * chain.coupling + 1e-12);
  }
}

TEST_CASE("zero or negative omega is rejected") {
  CHECK_THROWS_AS(normal_mode_frequencies(0.0, 2.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(normal_mode_frequencies(-1.0, 2.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(normal_mode_frequencies(3.0, 2.0, 1), std::invalid_argument);
  CHECK_THROWS_AS((ChainSpec{4, 3.0, -0.5}).validate(), std::invalid_argument);
}

TEST_CASE("N=2 transform is the 2x2 circulant eigenbasis") {
  const ModeTransform u = ModeTransform::build(2);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(u.entry(1, 1) == Catch::Approx(-r));
  CHECK(u.entry(1, 2) == Catch::Approx(r));
  CHECK(u.entry(2, 1) == Catch::Approx(r));
  CHECK(u.entry(2, 2) == Catch::Approx(r));
  const Eigen::MatrixXd d =
      u.matrix() * coupling_matrix(3.0, 2.0, 2) * u.matrix().transpose();
  CHECK(d(0, 0) == Catch::Approx(9.0 + 8.0));
  CHECK(d(1, 1) == Catch::Approx(9.0));
  CHECK(std::abs(d(0, 1)) < 1e-12);
}

TEST_CASE("transform is orthogonal") {
  for (int n : {2, 3, 4, 5, 8, 17, 500}) {
    const ModeTransform u = ModeTransform::build(n);
    const Eigen::MatrixXd residual =
        u.matrix() * u.matrix().transpose() - Eigen::MatrixXd::Identity(n, n);
    CHECK(residual.cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("transform diagonalizes the coupling matrix in dispersion order") {
  const int n = 4;
  const ModeTransform u = ModeTransform::build(n);
  const Eigen::MatrixXd d =
      u.matrix() * coupling_matrix(3.0, 2.0, n) * u.matrix().transpose();
  const auto lambda = normal_mode_frequencies(3.0, 2.0, n);
  for (int m = 0; m < n; ++m) CHECK(d(m, m) == Catch::Approx(lambda[m]).margin(1e-12));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (a != b) CHECK(std::abs(d(a, b)) < 1e-10);

  // oracle: the diagonal must agree with a dense eigendecomposition
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(coupling_matrix(3.0, 2.0, n));
  std::vector<double> sorted(lambda);
  std::sort(sorted.begin(), sorted.end());
  for (int m = 0; m < n; ++m) CHECK(es.eigenvalues()[m] == Catch::Approx(sorted[m]));
}

TEST_CASE("the same transform diagonalizes every (omega, k) pair") {
  for (int n : {5, 8, 500}) {
    const ModeTransform u = ModeTransform::build(n);
    for (auto [omega, k] : {std::pair<double, double>{3.0, 2.0}, {20.0, 2.0}, {1.3, 0.7}}) {
      const Eigen::MatrixXd d =
          u.matrix() * coupling_matrix(omega, k, n) * u.matrix().transpose();
      double off = 0.0;
      const auto lambda = normal_mode_frequencies(omega, k, n);
      for (int a = 0; a < n; ++a) {
        CHECK(d(a, a) == Catch::Approx(lambda[a]).margin(1e-10));
        for (int b = 0; b < n; ++b)
          if (a != b) off = std::max(off, std::abs(d(a, b)));
      }
      CHECK(off < 1e-10);
    }
  }
}

TEST_CASE("periodic protocol lays out the alternating schedule") {
  const auto protocol = qtest::reference_protocol(10, 5);
  CHECK(protocol.segment_count() == 6);
  CHECK(protocol.quench_count() == 5);
  const auto& bounds = protocol.boundary_times();
  REQUIRE(bounds.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(bounds[i] == Catch::Approx(4.0 * i));
  const auto& segs = protocol.evolving_segments();
  CHECK(segs[0].omega == 20.0);
  CHECK(segs[1].omega == 3.0);
  CHECK(segs[4].omega == 20.0);
  CHECK(std::isinf(segs[4].duration));
  CHECK(protocol.parameters_at(0.0).omega == 20.0);
  CHECK(protocol.parameters_at(5.0).omega == 3.0);
  CHECK(protocol.parameters_at(100.0).omega == 20.0);
}

TEST_CASE("single segment protocols and invalid ones") {
  const auto none = QuenchProtocol(ChainSpec{4, 3.0, 2.0}, {});
  CHECK(none.segment_count() == 1);
  CHECK(none.quench_count() == 0);
  CHECK(none.parameters_at(7.0).omega == 3.0);

  CHECK_THROWS_AS(QuenchProtocol(ChainSpec{4, 3.0, 2.0}, {{20.0, 2.0, 4.0}}),
                  std::invalid_argument);  // last segment must be unbounded
  CHECK_THROWS_AS(QuenchProtocol(ChainSpec{4, 3.0, 2.0},
                                 {{-1.0, 2.0, std::numeric_limits<double>::infinity()}}),
                  std::invalid_argument);
}
