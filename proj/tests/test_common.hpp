#pragma once

// shared helpers for the unit suites

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "qchain/protocol.hpp"

namespace qtest {

/// The reference schedule used throughout: omega 3 <-> 20, k = 2, T = 4 s.
inline qchain::QuenchProtocol reference_protocol(int n_sites, int num_quenches) {
  return qchain::QuenchProtocol::periodic(qchain::ChainSpec{n_sites, 3.0, 2.0}, 20.0,
                                          4.0, num_quenches);
}

/// Random but valid protocols for property tests. Everything is drawn from
/// ranges that keep the dynamics well inside double precision.
struct ProtocolGenerator {
  std::mt19937_64 rng;

  explicit ProtocolGenerator(unsigned seed) : rng(seed) {}

  qchain::QuenchProtocol next(int max_sites = 40) {
    std::uniform_int_distribution<int> sites(2, max_sites);
    std::uniform_int_distribution<int> quenches(0, 5);
    // omega ratios stay below ~13: repeated resonant quenches amplify eta
    // roughly by the lambda ratio per cycle, and extreme amplification
    // pushes eta minima toward the double-precision floor
    std::uniform_real_distribution<double> omega(0.6, 8.0);
    std::uniform_real_distribution<double> coupling(0.0, 4.0);
    std::uniform_real_distribution<double> duration(0.3, 4.0);

    const int n = sites(rng);
    const double k = coupling(rng);
    const qchain::ChainSpec chain{n, omega(rng), k};
    const int q = quenches(rng);
    std::vector<qchain::Segment> evolving;
    for (int i = 0; i < q; ++i) {
      const bool last = (i + 1 == q);
      evolving.push_back({omega(rng), k,
                          last ? std::numeric_limits<double>::infinity() : duration(rng)});
    }
    return {chain, std::move(evolving)};
  }
};

inline std::filesystem::path temp_file(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "qchain_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace qtest
