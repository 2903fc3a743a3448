#pragma once

#include <cstdint>
#include <random>

#include "sgswarm/numcore/mlp.hpp"

namespace sgswarm::num {

enum class InitScheme {
  kOrthogonal,     // every weight matrix orthonormal on its thin dimension
  kUniformScaled,  // He-style fan-in uniform for hidden layers, LeCun-uniform output
};

NetWeights init_weights(const NetSpec& spec, InitScheme scheme, std::uint64_t seed);

/// rows x cols matrix whose rows or columns (whichever count is smaller) are
/// orthonormal. Built from the QR factorization of a Gaussian matrix with the
/// usual sign correction so the distribution is uniform (Haar).
Matrix orthogonal_matrix(int rows, int cols, std::mt19937_64& rng);

}  // namespace sgswarm::num
