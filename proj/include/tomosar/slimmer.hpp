#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tomosar/model.hpp"
#include "tomosar/prox.hpp"
#include "tomosar/solver.hpp"

namespace tomosar {

enum class Backend { rbpg, fista, ista, svd_wiener };

Backend parse_backend(std::string_view name);
std::string_view to_string(Backend b) noexcept;

struct SlimmerConfig {
    Backend backend = Backend::rbpg;
    SolverConfig solver;
    std::size_t k_max = 2;
    // Wiener regularization mu for the svd_wiener backend.
    double svd_noise_power = 1.0;
    // Peaks below support_floor * max|x| are treated as numerical zeros.
    double support_floor = 1e-8;

    void validate() const;
};

struct ScattererEstimates {
    std::size_t model_order = 0;
    std::vector<double> elevations;
    std::vector<std::vector<double>> motion_params;
    std::vector<Complex> amplitudes;
    // BIC for K = 0, 1, ..., evaluated candidates.
    std::vector<double> selection_scores;
    // Flat grid indices of the selected scatterers.
    std::vector<std::size_t> support;
};

struct ModelSelection {
    std::size_t model_order = 0;
    std::vector<std::size_t> support;
    std::vector<double> scores;
};

// Local maxima of |x| along the elevation axis after collapsing the motion
// axes by maximum. Returns at most k_max flat indices, strongest first.
std::vector<std::size_t> detect_support(const ComplexVector& x_hat, const ParameterGrid& grid, std::size_t k_max,
                                        double floor = 1e-8);

// Real parameters per scatterer: two for the complex amplitude plus one per grid axis.
std::size_t parameters_per_scatterer(const ParameterGrid& grid) noexcept;

// 2N ln(RSS / 2N) + p K ln(2N) for N complex samples.
double bic_score(double rss, std::size_t complex_samples, std::size_t model_order,
                 std::size_t params_per_scatterer) noexcept;

// Least-squares fits on the top-K candidates for K = 0..min(k_max, |candidates|)
// and picks the order minimizing BIC. Candidates whose column is linearly
// dependent on stronger ones are dropped.
ModelSelection model_select(const Objective& obj, std::span<const std::size_t> candidates, std::size_t k_max,
                            std::size_t params_per_scatterer = 3);

// Debiased amplitudes by least squares on the support columns; parameters are
// decoded from the grid. Throws EstimationError for dependent columns.
ScattererEstimates estimate_params(const Objective& obj, const ParameterGrid& grid,
                                   std::span<const std::size_t> support);

// L1 profile, model selection and estimation for one pixel. Caches the
// per-dictionary work (block Lipschitz constants, SVD) so one instance can
// serve any number of pixels, from any number of threads.
class SlimmerPipeline {
public:
    SlimmerPipeline(std::shared_ptr<const ComplexMatrix> dictionary, ParameterGrid grid, SlimmerConfig config);
    SlimmerPipeline(const SteeringMatrix& steering, SlimmerConfig config)
        : SlimmerPipeline(steering.shared(), steering.grid(), std::move(config)) {}

    const ComplexMatrix& dictionary() const noexcept { return *dictionary_; }
    const ParameterGrid& grid() const noexcept { return grid_; }
    const SlimmerConfig& config() const noexcept { return config_; }

    // Objective for g with lambda resolved from the solver config.
    Objective objective(const ComplexVector& g) const;

    // Reflectivity profile from the configured backend. stream_id selects the
    // solver's random substream (rbpg only).
    ComplexVector profile(const Objective& obj, std::uint64_t stream_id, Solution* telemetry = nullptr) const;
    ComplexVector profile(const ComplexVector& g, std::uint64_t stream_id, Solution* telemetry = nullptr) const;

    ScattererEstimates run(const Objective& obj, std::uint64_t stream_id) const;
    ScattererEstimates run(const ComplexVector& g, std::uint64_t stream_id) const;

    // Same pipeline with a different Wiener noise power; shares the caches.
    SlimmerPipeline with_svd_noise_power(double noise_power) const;

private:
    std::shared_ptr<const ComplexMatrix> dictionary_;
    ParameterGrid grid_;
    SlimmerConfig config_;
    std::shared_ptr<const BlockPartition> partition_;
    std::shared_ptr<const WienerFilter> wiener_;
    double lipschitz_ = 0.0;
};

ScattererEstimates slimmer_pipeline(const Objective& obj, const ParameterGrid& grid, const SlimmerConfig& config);

} // namespace tomosar
