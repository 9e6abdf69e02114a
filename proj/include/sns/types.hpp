#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace sns {

using NodeTypeId = std::int32_t;
using RelationId = std::int32_t;
using NodeId = std::int64_t;

// Malformed or inconsistent input data (files, configs, graph structure).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure during computation (non-finite values, failed solves).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Candidate-scale sentinel: selects every neighbor-type node.
inline constexpr double kCandidateScaleAll = std::numeric_limits<double>::infinity();

using Rng = std::mt19937_64;

// splitmix64; used to derive independent sub-seeds from one experiment seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace log {
void warn(const std::string& msg);
}

}  // namespace sns
