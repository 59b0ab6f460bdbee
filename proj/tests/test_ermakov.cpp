#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "qchain/ermakov.hpp"
#include "qchain/oracles.hpp"
#include "test_common.hpp"

using namespace qchain;

TEST_CASE("ground-state boundary coefficients") {
  const auto c = initial_coefficients(9.0, 404.0);
  CHECK(c.alpha == Catch::Approx(395.0 / 808.0).epsilon(1e-15));
  CHECK(c.beta == 0.0);
  CHECK(c.gamma == Catch::Approx(413.0 / 808.0).epsilon(1e-15));
  // Ermakov invariant: gamma^2 - alpha^2 = lambda_in / lambda_f
  CHECK(c.gamma * c.gamma - c.alpha * c.alpha == Catch::Approx(9.0 / 404.0).epsilon(1e-14));

  const auto none = initial_coefficients(13.0, 13.0);
  CHECK(none.alpha == 0.0);
  CHECK(none.beta == 0.0);
  CHECK(none.gamma == 1.0);

  CHECK_THROWS_AS(initial_coefficients(9.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(initial_coefficients(-9.0, 1.0), std::invalid_argument);
}

TEST_CASE("segment matrix structure") {
  const double lambda = 6.5;
  const Eigen::Matrix3d a0 = segment_matrix(lambda, 0.0);
  const double w = 2.0 * std::sqrt(lambda);
  CHECK(a0(0, 0) == 1.0);
  CHECK(a0(0, 1) == 0.0);
  CHECK(a0(0, 2) == 1.0);
  CHECK(a0(1, 1) == Catch::Approx(w));
  CHECK(a0(2, 0) == Catch::Approx(-4.0 * lambda));
  CHECK(a0(1, 0) == 0.0);
  CHECK(a0(2, 2) == 0.0);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lam(0.1, 450.0);
  std::uniform_real_distribution<double> time(0.0, 50.0);
  for (int rep = 0; rep < 5; ++rep) {
    const double l = lam(rng);
    const double t = time(rng);
    const Eigen::Matrix3d a = segment_matrix(l, t);
    // the constant solution eta = 1
    const Eigen::Vector3d constant = a * Eigen::Vector3d(0.0, 0.0, 1.0);
    CHECK(constant[0] == 1.0);
    CHECK(constant[1] == 0.0);
    CHECK(constant[2] == 0.0);
    // det A = 8 lambda^(3/2) for all t
    CHECK(a.determinant() == Catch::Approx(8.0 * std::pow(l, 1.5)).epsilon(1e-12));
  }
}

TEST_CASE("closed-form inverse of the segment matrix") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> lam(0.2, 420.0);
  std::uniform_real_distribution<double> time(0.0, 40.0);
  std::uniform_real_distribution<double> coeff(-0.8, 0.8);
  for (int rep = 0; rep < 50; ++rep) {
    const double l = lam(rng);
    const double t = time(rng);
    ErmakovCoefficients c{coeff(rng), coeff(rng), 0.0};
    c.gamma = std::hypot(c.alpha, c.beta) + 0.3;  // keep eta positive
    const Eigen::Vector3d state = segment_matrix(l, t) * Eigen::Vector3d(c.alpha, c.beta, c.gamma);
    const auto back = coefficients_from_state(l, t, {state[0], state[1], state[2]});
    CHECK(back.alpha == Catch::Approx(c.alpha).margin(1e-12));
    CHECK(back.beta == Catch::Approx(c.beta).margin(1e-12));
    CHECK(back.gamma == Catch::Approx(c.gamma).margin(1e-12));
  }
}

TEST_CASE("quench jump matrix") {
  CHECK(quench_jump(13.0, 13.0).isIdentity(0.0));
  const Eigen::Matrix3d b = quench_jump(404.0, 9.0);
  CHECK(b(2, 0) == 790.0);
  CHECK(b(0, 0) == 1.0);
  CHECK(b(1, 1) == 1.0);
  CHECK(b(2, 2) == 1.0);
  CHECK(b(0, 1) == 0.0);

  // jumping preserves the eta-form equation with the new lambda
  const double lambda0 = 9.0;
  const double before = 404.0;
  const double after = 17.0;
  const auto c = initial_coefficients(lambda0, before);
  const Eigen::Vector3d state =
      segment_matrix(before, 1.7) * Eigen::Vector3d(c.alpha, c.beta, c.gamma);
  EtaState s{state[0], state[1], state[2]};
  CHECK(eta_invariant_residual(s, before, lambda0) < 1e-12);
  const Eigen::Vector3d jumped = quench_jump(before, after) * state;
  CHECK(eta_invariant_residual({jumped[0], jumped[1], jumped[2]}, after, lambda0) < 1e-12);
}

TEST_CASE("propagation through a single quench is the boundary condition") {
  const auto protocol = qtest::reference_protocol(8, 1);
  const auto sol = ModeSolution::propagate(protocol, 3);
  REQUIRE(sol.piece_count() == 1);
  const auto expected = initial_coefficients(protocol.lambda_initial(3),
                                             mode_lambda(20.0, 2.0, 8, 3));
  CHECK(sol.coefficients(0).alpha == Catch::Approx(expected.alpha).epsilon(1e-15));
  CHECK(sol.coefficients(0).beta == expected.beta);
  CHECK(sol.coefficients(0).gamma == Catch::Approx(expected.gamma).epsilon(1e-15));
}

TEST_CASE("a boundary between identical segments is invisible") {
  const ChainSpec chain{6, 3.0, 2.0};
  const QuenchProtocol protocol(
      chain, {{20.0, 2.0, 4.0}, {20.0, 2.0, std::numeric_limits<double>::infinity()}});
  for (int m = 1; m <= 6; ++m) {
    const auto sol = ModeSolution::propagate(protocol, m);
    REQUIRE(sol.piece_count() == 2);
    CHECK(sol.coefficients(1).alpha == Catch::Approx(sol.coefficients(0).alpha).margin(1e-12));
    CHECK(sol.coefficients(1).beta == Catch::Approx(sol.coefficients(0).beta).margin(1e-12));
    CHECK(sol.coefficients(1).gamma == Catch::Approx(sol.coefficients(0).gamma).margin(1e-12));
  }
}

TEST_CASE("eta at t = 0 is the ground state") {
  const auto protocol = qtest::reference_protocol(12, 5);
  for (int m : {1, 5, 12}) {
    const auto s = ModeSolution::propagate(protocol, m).eta(0.0);
    CHECK(s.eta == Catch::Approx(1.0).margin(1e-14));
    CHECK(s.eta_dot == Catch::Approx(0.0).margin(1e-14));
  }
}

TEST_CASE("no quench means eta stays 1 and tau(t) = t") {
  const QuenchProtocol protocol(ChainSpec{5, 3.0, 2.0}, {});
  const auto sol = ModeSolution::propagate(protocol, 2);
  for (double t : {0.0, 0.3, 2.0, 17.5, 300.0}) {
    CHECK(sol.eta(t).eta == Catch::Approx(1.0).margin(1e-14));
    CHECK(sol.tau(t) == Catch::Approx(t).margin(1e-12));
  }
}

TEST_CASE("single-mode eta agrees with an RK4 integration") {
  // lambda 9 -> 404 as a one-mode quench: N=2 with k=0 gives two decoupled
  // modes, so drive one of them.
  const QuenchProtocol protocol(ChainSpec{2, 3.0, 0.0},
                                {{std::sqrt(404.0), 0.0, std::numeric_limits<double>::infinity()}});
  const auto sol = ModeSolution::propagate(protocol, 2);
  const std::vector<double> grid{0.1};
  const auto ode = oracles::solve_ermakov_ode(protocol, 2, grid, 1e-5);
  CHECK(sol.eta(0.1).eta == Catch::Approx(ode.states[0].eta).margin(1e-9));
}

TEST_CASE("five-quench propagation against the ODE oracle") {
  const auto protocol = qtest::reference_protocol(500, 5);
  std::vector<double> grid;
  for (int i = 0; i <= 1000; ++i) grid.push_back(40.0 * i / 1000.0);

  for (int m : {1, 97, 250, 333, 500}) {
    const auto sol = ModeSolution::propagate(protocol, m);

    for (int s = 0; s < sol.piece_count(); ++s) CHECK(sol.invariant_residual(s) < 1e-10);

    for (int s = 1; s < sol.piece_count(); ++s) {
      const double tb = sol.piece(s).t_start;
      const auto left = sol.eta_from_piece(s - 1, tb);
      const auto right = sol.eta_from_piece(s, tb);
      CHECK(std::abs(left.eta - right.eta) < 1e-10);
      CHECK(std::abs(left.eta_dot - right.eta_dot) < 1e-10);
      // eta_ddot jumps by exactly 2 (lambda^- - lambda^+) eta
      const double expected_jump = 2.0 * (sol.lambda(s - 1) - sol.lambda(s)) * right.eta;
      CHECK(right.eta_ddot - left.eta_ddot == Catch::Approx(expected_jump).margin(1e-8));
    }

    const auto ode = oracles::solve_ermakov_ode(protocol, m, grid);
    double worst = 0.0;
    for (size_t i = 0; i < grid.size(); ++i)
      worst = std::max(worst, std::abs(sol.eta(grid[i]).eta - ode.states[i].eta));
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("oracle self-checks") {
  const QuenchProtocol none(ChainSpec{4, 3.0, 2.0}, {});
  std::vector<double> grid;
  for (int i = 0; i <= 40; ++i) grid.push_back(0.25 * i);
  const auto flat = oracles::solve_ermakov_ode(none, 2, grid, 1e-4);
  for (const auto& s : flat.states) CHECK(std::abs(s.eta - 1.0) < 1e-12);

  const auto protocol = qtest::reference_protocol(8, 1);
  std::vector<double> grid20;
  for (int i = 0; i <= 200; ++i) grid20.push_back(0.1 * i);
  const auto single = oracles::solve_ermakov_ode(protocol, 5, grid20);
  CHECK(single.max_invariant_residual < 1e-9);
  const auto sol = ModeSolution::propagate(protocol, 5);
  double worst = 0.0;
  for (size_t i = 0; i < grid20.size(); ++i)
    worst = std::max(worst, std::abs(sol.eta(grid20[i]).eta - single.states[i].eta));
  CHECK(worst < 1e-8);
}

TEST_CASE("tau closed form matches adaptive quadrature") {
  const auto protocol = qtest::reference_protocol(500, 5);
  const auto sol = ModeSolution::propagate(protocol, 500);
  CHECK(sol.tau(0.0) == 0.0);
  CHECK(std::abs(sol.tau(10.0) - oracles::tau_by_quadrature(sol, 10.0)) < 1e-9);
  for (int m : {1, 125, 250, 437}) {
    const auto s = ModeSolution::propagate(protocol, m);
    for (double t : {0.5, 4.0, 11.3})
      CHECK(std::abs(s.tau(t) - oracles::tau_by_quadrature(s, t)) < 1e-9);
    // deeper into the protocol the amplified modes drive 1/eta through
    // spike trains whose evaluation noise limits the quadrature near 1e-9
    CHECK(std::abs(s.tau(16.9) - oracles::tau_by_quadrature(s, 16.9)) < 1e-8);
  }
  CHECK(std::abs(sol.tau(40.0) - oracles::tau_by_quadrature(sol, 40.0)) < 1e-8);
}

TEST_CASE("properties over random protocols") {
  qtest::ProtocolGenerator gen(424242);
  for (int rep = 0; rep < 40; ++rep) {
    const auto protocol = gen.next();
    std::uniform_int_distribution<int> pick(1, protocol.n_sites());
    const int m = pick(gen.rng);
    const auto sol = ModeSolution::propagate(protocol, m);

    for (int s = 0; s < sol.piece_count(); ++s) {
      CHECK(sol.invariant_residual(s) < 1e-10);
      // positivity floor: eta >= gamma - r > 0
      const auto c = sol.coefficients(s);
      CHECK(c.gamma - std::hypot(c.alpha, c.beta) > 0.0);
    }
    for (int s = 1; s < sol.piece_count(); ++s) {
      const double tb = sol.piece(s).t_start;
      const auto left = sol.eta_from_piece(s - 1, tb);
      const auto right = sol.eta_from_piece(s, tb);
      CHECK(std::abs(left.eta - right.eta) < 1e-10);
      CHECK(std::abs(left.eta_dot - right.eta_dot) < 1e-10);
    }

    // tau is strictly increasing and matches quadrature
    double prev = 0.0;
    for (double t : {0.7, 1.9, 3.1, 6.4, 13.0}) {
      const double tau = sol.tau(t);
      CHECK(tau > prev);
      prev = tau;
    }
    CHECK(std::abs(sol.tau(6.4) - oracles::tau_by_quadrature(sol, 6.4)) < 1e-9);
  }
}

TEST_CASE("eta eval at large times keeps the invariant") {
  const auto protocol = qtest::reference_protocol(100, 5);
  const auto sol = ModeSolution::propagate(protocol, 77);
  for (double t : {100.0, 500.0, 1000.0, 2600.0}) {
    const auto s = sol.eta(t);
    CHECK(s.eta > 0.0);
    // the residual target scales with the rounding floor of the state
    // itself: the three terms reach ~1e7 for amplified modes while the
    // right-hand side is 2 lambda0 ~ 20
    const double lambda = sol.lambda(sol.piece_index(t));
    const double scale = std::abs(s.eta * s.eta_ddot) + 0.5 * s.eta_dot * s.eta_dot +
                         2.0 * lambda * s.eta * s.eta;
    const double floor = 50.0 * 2.2e-16 * scale / (2.0 * sol.lambda_initial());
    CHECK(eta_invariant_residual(s, lambda, sol.lambda_initial()) < 1e-9 + floor);
  }
}
