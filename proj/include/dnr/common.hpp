#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace dnr {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct InfeasibleRadiality : Error { using Error::Error; };
struct DegenerateVoltage : Error { using Error::Error; };
struct TooManyTopologies : Error { using Error::Error; };
struct Infeasible : Error { using Error::Error; };
struct AllInfeasible : Error { using Error::Error; };
struct UnknownLayout : Error { using Error::Error; };
struct BadCutoff : Error { using Error::Error; };
struct BadBounds : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct BatchTooSmall : Error { using Error::Error; };
struct NonFiniteGradient : Error { using Error::Error; };
struct MissingLabels : Error { using Error::Error; };

// Derives independent sub-seeds from a base seed (splitmix64 step), so that
// e.g. committee members and dataset instances get decorrelated streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace dnr
