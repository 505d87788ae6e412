#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "tomosar/prox.hpp"
#include "tomosar/random.hpp"
#include "tomosar/types.hpp"

namespace tomosar {

struct SolverConfig {
    // Unset: lambda = lambda_beta * ||A^H g||_inf (see resolve_lambda).
    std::optional<double> lambda_reg;
    double lambda_beta = 0.05;
    // J
    std::size_t num_blocks = 8;
    // K_r. For rbpg one iteration updates a single block.
    std::size_t max_iters = 100000;
    // Relative F change over the stopping window.
    double tol = 1e-10;
    // Optional absolute stop on the prox-gradient map norm; 0 disables.
    double optimality_tol = 0.0;
    // C_alpha
    double step_shrink = 0.5;
    // Initial step is step_scale / Lipschitz.
    double step_scale = 1.0;
    std::uint64_t seed = 0;
    // Run exactly max_iters iterations and ignore tol/optimality_tol.
    bool fixed_iterations = false;
    std::size_t max_backtracks = kDefaultMaxBacktracks;

    // Throws ConfigError on non-finite or out-of-range fields.
    void validate() const;
};

enum class SolveStatus { converged, max_iters, line_search_failure, numerical_failure };

std::string_view to_string(SolveStatus s) noexcept;

struct Solution {
    ComplexVector x_hat;
    // F(x^0) followed by F after every iteration.
    std::vector<double> objective_history;
    std::size_t iterations_used = 0;
    SolveStatus status = SolveStatus::max_iters;
    double wall_time = 0.0;
};

struct BlockRange {
    Index begin;
    Index end;
    Index size() const noexcept { return end - begin; }
};

struct BlockPartition {
    std::vector<BlockRange> blocks;
    std::vector<double> lipschitz;
    std::vector<double> probabilities;
    std::vector<double> cumulative;

    std::size_t size() const noexcept { return blocks.size(); }

    // Partition with the given per-block Lipschitz constants; probabilities
    // are lipschitz[i] / sum(lipschitz), uniform when every constant is 0.
    static BlockPartition from_lipschitz(std::vector<BlockRange> blocks, std::vector<double> lipschitz);
};

// Largest squared singular value of A by power iteration on A^H A.
double spectral_norm_sq(const Eigen::Ref<const ComplexMatrix>& a, std::size_t max_iters = 500, double rel_tol = 1e-12);

// Lipschitz constant of grad f for f = ||A x - b||^2, i.e. 2 * sigma_max(A)^2.
double lipschitz_constant(const Eigen::Ref<const ComplexMatrix>& a);

// num_blocks contiguous blocks over [0, L) whose sizes differ by at most one.
BlockPartition block_partition(std::size_t L, std::size_t num_blocks, const ComplexMatrix& a);

// Draws a block index with probability partition.probabilities[i].
std::size_t sample_block(const BlockPartition& partition, RandomStream& rng) noexcept;

double resolve_lambda(const ComplexMatrix& a, const ComplexVector& g, const SolverConfig& config);

// Randomized blockwise proximal gradient with Nesterov extrapolation,
// backtracking and a monotone acceptance test.
Solution rbpg_solve(const Objective& obj, const SolverConfig& config);
Solution rbpg_solve(const Objective& obj, const SolverConfig& config, const BlockPartition& partition);

// Full-vector proximal gradient with backtracking.
Solution ista_solve(const Objective& obj, const SolverConfig& config);
Solution ista_solve(const Objective& obj, const SolverConfig& config, double lipschitz);

// Full-vector accelerated proximal gradient (theta_k = 2/(k+1)).
Solution fista_solve(const Objective& obj, const SolverConfig& config);
Solution fista_solve(const Objective& obj, const SolverConfig& config, double lipschitz);

// Thin SVD of the dictionary, reusable across measurements.
class WienerFilter {
public:
    explicit WienerFilter(const ComplexMatrix& a);

    // V diag(s / (s^2 + mu)) U^H g
    ComplexVector apply(const ComplexVector& g, double noise_power) const;

    const RealVector& singular_values() const noexcept { return singular_values_; }

private:
    ComplexMatrix u_;
    RealVector singular_values_;
    ComplexMatrix v_;
};

ComplexVector svd_wiener_solve(const Objective& obj, double noise_power);

} // namespace tomosar
