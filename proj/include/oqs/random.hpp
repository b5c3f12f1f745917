// Seeded random states, unitaries and channels. Used as fixtures by the
// property tests and as candidate generators by the measure optimizers.
#pragma once

#include "oqs/qcore.hpp"

#include <cstdint>
#include <random>

namespace oqs {

using Rng = std::mt19937_64;

/// Independent stream for work item `index` under a run seed.
Rng make_stream(std::uint64_t seed, std::uint64_t index);

/// Complex matrix with iid standard complex-Gaussian entries.
Matrix ginibre(Index rows, Index cols, Rng& rng);

Vector random_pure_vector(Index dim, Rng& rng);
DensityMatrix random_pure_state(Index dim, Rng& rng);
/// Mixed state from the Hilbert-Schmidt ensemble (G G^dagger / Tr).
DensityMatrix random_mixed_state(Index dim, Rng& rng);
/// Haar unitary via QR with phase fix.
Matrix random_unitary(Index dim, Rng& rng);
Matrix random_hermitian(Index dim, Rng& rng);

/// Random CPTP map: Gaussian Kraus list normalized by (sum K^dagger K)^{-1/2}.
QuantumMap random_cptp(Index dim, Index n_kraus, Rng& rng);

}  // namespace oqs
