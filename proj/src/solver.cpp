#include "tomosar/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "tomosar/error.hpp"

namespace tomosar {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// theta_k (1/theta_{k-1} - 1) with theta_k = 2/(k+1); negative for k = 1,
// where the iterate difference is zero anyway.
double momentum_weight(std::size_t k) noexcept {
    const double kk = static_cast<double>(k);
    return std::max(0.0, (kk - 2.0) / (kk + 1.0));
}

class StopRule {
public:
    StopRule(const SolverConfig& config, std::size_t window) : config_(config), window_(window) {}

    bool converged(const std::vector<double>& history) const noexcept {
        if (config_.fixed_iterations) return false;
        const std::size_t k = history.size() - 1;
        if (k < window_) return false;
        const double now = history[k];
        const double change = std::abs(history[k - window_] - now);
        return change <= config_.tol * std::max(std::abs(now), std::numeric_limits<double>::min());
    }

    bool optimality_enabled() const noexcept { return !config_.fixed_iterations && config_.optimality_tol > 0.0; }

private:
    const SolverConfig& config_;
    std::size_t window_;
};

// ||(x - prox(x - alpha g)) / alpha||_2 for one segment.
double gradient_map_sq(const Eigen::Ref<const ComplexVector>& x, const Eigen::Ref<const ComplexVector>& g,
                       double alpha, double lambda) {
    double sum = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
        const Complex z = soft_threshold(x[i] - alpha * g[i], alpha * lambda);
        sum += std::norm((x[i] - z) / alpha);
    }
    return sum;
}

double segment_l1(const Eigen::Ref<const ComplexVector>& x) noexcept {
    double sum = 0.0;
    for (Index i = 0; i < x.size(); ++i) sum += std::abs(x[i]);
    return sum;
}

} // namespace

void SolverConfig::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (lambda_reg && (!std::isfinite(*lambda_reg) || *lambda_reg < 0.0)) {
        throw ConfigError("lambda_reg must be finite and nonnegative");
    }
    if (!std::isfinite(lambda_beta) || lambda_beta < 0.0) throw ConfigError("lambda_beta must be finite and >= 0");
    if (num_blocks == 0) throw ConfigError("num_blocks must be positive");
    if (max_iters == 0) throw ConfigError("max_iters must be positive");
    if (!positive(tol)) throw ConfigError("tol must be positive");
    if (!std::isfinite(optimality_tol) || optimality_tol < 0.0) throw ConfigError("optimality_tol must be >= 0");
    if (!(step_shrink > 0.0 && step_shrink < 1.0)) throw ConfigError("step_shrink must lie in (0, 1)");
    if (!positive(step_scale)) throw ConfigError("step_scale must be positive");
}

std::string_view to_string(SolveStatus s) noexcept {
    switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iters: return "max-iters";
    case SolveStatus::line_search_failure: return "line-search-failure";
    case SolveStatus::numerical_failure: return "numerical-failure";
    }
    return "unknown";
}

BlockPartition BlockPartition::from_lipschitz(std::vector<BlockRange> blocks, std::vector<double> lipschitz) {
    if (blocks.empty() || blocks.size() != lipschitz.size()) {
        throw ConfigError("partition needs one Lipschitz constant per block");
    }
    for (double l : lipschitz) {
        if (!std::isfinite(l) || l < 0.0) throw NumericalError("block Lipschitz constant is not finite");
    }
    BlockPartition p;
    p.blocks = std::move(blocks);
    p.lipschitz = std::move(lipschitz);
    const double total = std::accumulate(p.lipschitz.begin(), p.lipschitz.end(), 0.0);
    p.probabilities.resize(p.lipschitz.size());
    for (std::size_t i = 0; i < p.lipschitz.size(); ++i) {
        p.probabilities[i] = total > 0.0 ? p.lipschitz[i] / total : 1.0 / static_cast<double>(p.lipschitz.size());
    }
    p.cumulative.resize(p.probabilities.size());
    std::partial_sum(p.probabilities.begin(), p.probabilities.end(), p.cumulative.begin());
    return p;
}

double spectral_norm_sq(const Eigen::Ref<const ComplexMatrix>& a, std::size_t max_iters, double rel_tol) {
    if (a.size() == 0) return 0.0;
    RandomStream rng(0x7061727469746eULL, static_cast<std::uint64_t>(a.cols()), StreamDomain::power_iteration);
    ComplexVector v(a.cols());
    for (Index i = 0; i < v.size(); ++i) v[i] = rng.complex_normal(1.0);
    v.normalize();

    double estimate = 0.0;
    for (std::size_t it = 0; it < max_iters; ++it) {
        const ComplexVector av = a * v;
        ComplexVector w = a.adjoint() * av;
        const double next = av.squaredNorm(); // Rayleigh quotient v^H A^H A v for unit v
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        v = w / norm;
        if (std::abs(next - estimate) <= rel_tol * next) return next;
        estimate = next;
    }
    return estimate;
}

double lipschitz_constant(const Eigen::Ref<const ComplexMatrix>& a) {
    return 2.0 * spectral_norm_sq(a);
}

BlockPartition block_partition(std::size_t L, std::size_t num_blocks, const ComplexMatrix& a) {
    if (num_blocks == 0 || num_blocks > L) {
        throw ConfigError("need 1 <= num_blocks <= L (got J=" + std::to_string(num_blocks) +
                          ", L=" + std::to_string(L) + ")");
    }
    if (static_cast<std::size_t>(a.cols()) != L) throw DimensionMismatch("dictionary column count differs from L");

    std::vector<BlockRange> blocks;
    std::vector<double> lipschitz;
    blocks.reserve(num_blocks);
    lipschitz.reserve(num_blocks);
    const std::size_t base = L / num_blocks;
    const std::size_t extra = L % num_blocks;
    std::size_t begin = 0;
    for (std::size_t i = 0; i < num_blocks; ++i) {
        const std::size_t size = base + (i < extra ? 1 : 0);
        blocks.push_back({static_cast<Index>(begin), static_cast<Index>(begin + size)});
        lipschitz.push_back(lipschitz_constant(a.middleCols(static_cast<Index>(begin), static_cast<Index>(size))));
        begin += size;
    }
    return BlockPartition::from_lipschitz(std::move(blocks), std::move(lipschitz));
}

std::size_t sample_block(const BlockPartition& partition, RandomStream& rng) noexcept {
    if (partition.size() == 1) return 0;
    const double u = rng.uniform();
    const auto it = std::upper_bound(partition.cumulative.begin(), partition.cumulative.end(), u);
    const auto idx = static_cast<std::size_t>(it - partition.cumulative.begin());
    if (idx < partition.size()) return idx;
    // Rounding left the last cumulative entry below u; take the last block
    // that can actually be drawn.
    for (std::size_t i = partition.size(); i-- > 0;) {
        if (partition.probabilities[i] > 0.0) return i;
    }
    return partition.size() - 1;
}

double resolve_lambda(const ComplexMatrix& a, const ComplexVector& g, const SolverConfig& config) {
    if (config.lambda_reg) return *config.lambda_reg;
    if (a.rows() != g.size()) throw DimensionMismatch("measurement length differs from dictionary rows");
    if (g.size() == 0) return 0.0;
    const ComplexVector correlation = a.adjoint() * g;
    return config.lambda_beta * correlation.cwiseAbs().maxCoeff();
}

Solution rbpg_solve(const Objective& obj, const SolverConfig& config) {
    const auto partition = block_partition(static_cast<std::size_t>(obj.cols()), config.num_blocks, obj.dictionary());
    return rbpg_solve(obj, config, partition);
}

Solution rbpg_solve(const Objective& obj, const SolverConfig& config, const BlockPartition& partition) {
    config.validate();
    if (partition.blocks.empty() || partition.blocks.back().end != obj.cols()) {
        throw DimensionMismatch("block partition does not cover the dictionary columns");
    }
    const auto start = Clock::now();
    const ComplexMatrix& a = obj.dictionary();
    const double lambda = obj.lambda_reg();
    const std::size_t num_blocks = partition.size();

    Solution sol;
    ComplexVector x = ComplexVector::Zero(obj.cols());
    // Value of each block before its most recent update (extrapolation memory).
    ComplexVector previous = x;
    ComplexVector residual = -obj.measurement();
    double l1 = 0.0;
    double objective = residual.squaredNorm();
    sol.objective_history.push_back(objective);

    RandomStream rng(config.seed, 0, StreamDomain::solver);
    // One full sweep costs num_blocks block updates, so the window covers 10 sweeps.
    const StopRule stop(config, 10 * num_blocks);
    const std::size_t optimality_every = 10 * num_blocks;

    ComplexVector y_block, z_block, grad_block, step, residual_y, residual_z;
    sol.status = SolveStatus::max_iters;

    for (std::size_t k = 1; k <= config.max_iters; ++k) {
        const std::size_t i = sample_block(partition, rng);
        const BlockRange blk = partition.blocks[i];
        const auto a_blk = a.middleCols(blk.begin, blk.size());
        auto x_blk = x.segment(blk.begin, blk.size());
        auto prev_blk = previous.segment(blk.begin, blk.size());

        y_block = x_blk;
        residual_y = residual;
        const double weight = momentum_weight(k);
        if (weight > 0.0) {
            step = weight * (x_blk - prev_blk);
            if (step.squaredNorm() > 0.0) {
                y_block += step;
                residual_y.noalias() += a_blk * step;
            }
        }
        const double f_y = residual_y.squaredNorm();
        grad_block.noalias() = 2.0 * (a_blk.adjoint() * residual_y);

        const double lip = partition.lipschitz[i];
        double alpha = lip > 0.0 ? config.step_scale / lip : config.step_scale;
        double f_z = 0.0;
        bool accepted = false;
        for (std::size_t shrinks = 0; shrinks <= config.max_backtracks; ++shrinks) {
            z_block = y_block - alpha * grad_block;
            soft_threshold_inplace(z_block, alpha * lambda);
            step = z_block - y_block;
            residual_z = residual_y;
            residual_z.noalias() += a_blk * step;
            f_z = residual_z.squaredNorm();
            if (upper_bound_holds(f_z, f_y, grad_block.dot(step).real(), step.squaredNorm(), alpha)) {
                accepted = true;
                break;
            }
            alpha *= config.step_shrink;
        }
        if (!accepted) {
            sol.status = SolveStatus::line_search_failure;
            break;
        }

        const double l1_new = l1 - segment_l1(x_blk) + segment_l1(z_block);
        const double candidate = f_z + lambda * l1_new;
        if (!std::isfinite(candidate)) {
            sol.status = SolveStatus::numerical_failure;
            break;
        }
        prev_blk = x_blk;
        if (candidate <= objective) {
            x_blk = z_block;
            residual = residual_z;
            l1 = l1_new;
            objective = candidate;
        }
        sol.objective_history.push_back(objective);
        sol.iterations_used = k;

        if (stop.converged(sol.objective_history)) {
            sol.status = SolveStatus::converged;
            break;
        }
        if (stop.optimality_enabled() && k % optimality_every == 0) {
            const ComplexVector grad = 2.0 * (a.adjoint() * residual);
            double norm_sq = 0.0;
            for (std::size_t b = 0; b < num_blocks; ++b) {
                const BlockRange r = partition.blocks[b];
                const double step_b = partition.lipschitz[b] > 0.0 ? 1.0 / partition.lipschitz[b] : 1.0;
                norm_sq += gradient_map_sq(x.segment(r.begin, r.size()), grad.segment(r.begin, r.size()), step_b,
                                           lambda);
            }
            if (std::sqrt(norm_sq) <= config.optimality_tol) {
                sol.status = SolveStatus::converged;
                break;
            }
        }
    }

    sol.x_hat = std::move(x);
    sol.wall_time = seconds_since(start);
    return sol;
}

Solution ista_solve(const Objective& obj, const SolverConfig& config) {
    return ista_solve(obj, config, lipschitz_constant(obj.dictionary()));
}

Solution ista_solve(const Objective& obj, const SolverConfig& config, double lipschitz) {
    config.validate();
    const auto start = Clock::now();
    const ComplexMatrix& a = obj.dictionary();
    const ComplexVector& b = obj.measurement();
    const double lambda = obj.lambda_reg();
    const double reference_step = lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;

    Solution sol;
    ComplexVector x = ComplexVector::Zero(obj.cols());
    ComplexVector residual = -b;
    double objective = residual.squaredNorm();
    sol.objective_history.push_back(objective);
    double alpha = config.step_scale * reference_step;
    const StopRule stop(config, 10);
    sol.status = SolveStatus::max_iters;

    ComplexVector grad, z, step, residual_z;
    for (std::size_t k = 1; k <= config.max_iters; ++k) {
        grad.noalias() = 2.0 * (a.adjoint() * residual);
        if (stop.optimality_enabled() &&
            std::sqrt(gradient_map_sq(x, grad, reference_step, lambda)) <= config.optimality_tol) {
            sol.status = SolveStatus::converged;
            break;
        }
        const double f_x = residual.squaredNorm();
        bool accepted = false;
        for (std::size_t shrinks = 0; shrinks <= config.max_backtracks; ++shrinks) {
            z = x - alpha * grad;
            soft_threshold_inplace(z, alpha * lambda);
            step = z - x;
            residual_z.noalias() = a * z;
            residual_z -= b;
            if (upper_bound_holds(residual_z.squaredNorm(), f_x, grad.dot(step).real(), step.squaredNorm(), alpha)) {
                accepted = true;
                break;
            }
            alpha *= config.step_shrink;
        }
        if (!accepted) {
            sol.status = SolveStatus::line_search_failure;
            break;
        }
        const double candidate = residual_z.squaredNorm() + lambda * l1_norm(z);
        if (!std::isfinite(candidate)) {
            sol.status = SolveStatus::numerical_failure;
            break;
        }
        if (candidate > objective) {
            // A valid prox step cannot increase F; this is rounding at the optimum.
            sol.status = SolveStatus::converged;
            break;
        }
        x.swap(z);
        residual.swap(residual_z);
        objective = candidate;
        sol.objective_history.push_back(objective);
        sol.iterations_used = k;
        if (stop.converged(sol.objective_history)) {
            sol.status = SolveStatus::converged;
            break;
        }
    }

    sol.x_hat = std::move(x);
    sol.wall_time = seconds_since(start);
    return sol;
}

Solution fista_solve(const Objective& obj, const SolverConfig& config) {
    return fista_solve(obj, config, lipschitz_constant(obj.dictionary()));
}

Solution fista_solve(const Objective& obj, const SolverConfig& config, double lipschitz) {
    config.validate();
    const auto start = Clock::now();
    const ComplexMatrix& a = obj.dictionary();
    const ComplexVector& b = obj.measurement();
    const double lambda = obj.lambda_reg();
    const double reference_step = lipschitz > 0.0 ? 1.0 / lipschitz : 1.0;

    Solution sol;
    ComplexVector x = ComplexVector::Zero(obj.cols());
    ComplexVector x_prev = x;
    ComplexVector residual_x = -b;
    sol.objective_history.push_back(residual_x.squaredNorm());
    double alpha = config.step_scale * reference_step;
    const StopRule stop(config, 10);
    sol.status = SolveStatus::max_iters;

    ComplexVector y, residual_y, grad, z, step, residual_z;
    for (std::size_t k = 1; k <= config.max_iters; ++k) {
        if (stop.optimality_enabled() && k % 10 == 0) {
            grad.noalias() = 2.0 * (a.adjoint() * residual_x);
            if (std::sqrt(gradient_map_sq(x, grad, reference_step, lambda)) <= config.optimality_tol) {
                sol.status = SolveStatus::converged;
                break;
            }
        }

        const double weight = momentum_weight(k);
        y = x + weight * (x - x_prev);
        residual_y.noalias() = a * y;
        residual_y -= b;
        const double f_y = residual_y.squaredNorm();
        grad.noalias() = 2.0 * (a.adjoint() * residual_y);

        bool accepted = false;
        for (std::size_t shrinks = 0; shrinks <= config.max_backtracks; ++shrinks) {
            z = y - alpha * grad;
            soft_threshold_inplace(z, alpha * lambda);
            step = z - y;
            residual_z.noalias() = a * z;
            residual_z -= b;
            if (upper_bound_holds(residual_z.squaredNorm(), f_y, grad.dot(step).real(), step.squaredNorm(), alpha)) {
                accepted = true;
                break;
            }
            alpha *= config.step_shrink;
        }
        if (!accepted) {
            sol.status = SolveStatus::line_search_failure;
            break;
        }
        const double objective = residual_z.squaredNorm() + lambda * l1_norm(z);
        if (!std::isfinite(objective)) {
            sol.status = SolveStatus::numerical_failure;
            break;
        }
        x_prev.swap(x);
        x.swap(z);
        residual_x.swap(residual_z);
        sol.objective_history.push_back(objective);
        sol.iterations_used = k;
        if (stop.converged(sol.objective_history)) {
            sol.status = SolveStatus::converged;
            break;
        }
    }

    sol.x_hat = std::move(x);
    sol.wall_time = seconds_since(start);
    return sol;
}

WienerFilter::WienerFilter(const ComplexMatrix& a) {
    if (a.size() == 0) throw DimensionMismatch("empty dictionary");
    Eigen::BDCSVD<ComplexMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericalError("SVD of the dictionary failed");
    u_ = svd.matrixU();
    singular_values_ = svd.singularValues();
    v_ = svd.matrixV();
}

ComplexVector WienerFilter::apply(const ComplexVector& g, double noise_power) const {
    if (!std::isfinite(noise_power) || noise_power < 0.0) throw DomainError("noise power must be finite and >= 0");
    if (g.size() != u_.rows()) throw DimensionMismatch("measurement length differs from dictionary rows");
    const double s_max = singular_values_.size() > 0 ? singular_values_[0] : 0.0;
    const double cutoff = s_max * static_cast<double>(std::max(u_.rows(), v_.rows())) *
                          std::numeric_limits<double>::epsilon();
    ComplexVector coeffs = u_.adjoint() * g;
    for (Index i = 0; i < coeffs.size(); ++i) {
        const double s = singular_values_[i];
        coeffs[i] *= s > cutoff ? s / (s * s + noise_power) : 0.0;
    }
    return v_ * coeffs;
}

ComplexVector svd_wiener_solve(const Objective& obj, double noise_power) {
    return WienerFilter(obj.dictionary()).apply(obj.measurement(), noise_power);
}

} // namespace tomosar
