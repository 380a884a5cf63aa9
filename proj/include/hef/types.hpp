#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

namespace hef {

using cplx = std::complex<double>;

// Pointwise fiber matrices. Capacity is fixed at 4x4 so grid fields keep their
// matrices inline (no per-point heap traffic in the flow loops); scenario
// validation rejects ranks above kMaxRank.
inline constexpr int kMaxRank = 4;
using MatC = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxRank, kMaxRank>;
using VecC = Eigen::Matrix<cplx, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxRank, 1>;
using MatR = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxRank, kMaxRank>;
using VecR = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxRank, 1>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

// Splittable deterministic generator (splitmix64): identical streams on every
// platform, unlike distribution-dependent std:: engines.
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  // Uniform in [-1, 1).
  double sym() { return static_cast<double>(next() >> 11) * (2.0 / 9007199254740992.0) - 1.0; }
  cplx csym() {
    double re = sym(), im = sym();
    return {re, im};
  }
};

}  // namespace hef
