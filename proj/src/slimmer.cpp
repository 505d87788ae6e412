#include "tomosar/slimmer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "tomosar/error.hpp"

namespace tomosar {

namespace {

constexpr double kRankThreshold = 1e-10;

ComplexMatrix gather_columns(const ComplexMatrix& a, std::span<const std::size_t> columns) {
    ComplexMatrix out(a.rows(), static_cast<Index>(columns.size()));
    for (std::size_t k = 0; k < columns.size(); ++k) {
        out.col(static_cast<Index>(k)) = a.col(static_cast<Index>(columns[k]));
    }
    return out;
}

Eigen::ColPivHouseholderQR<ComplexMatrix> factor(const ComplexMatrix& columns) {
    Eigen::ColPivHouseholderQR<ComplexMatrix> qr;
    qr.setThreshold(kRankThreshold);
    qr.compute(columns);
    return qr;
}

} // namespace

Backend parse_backend(std::string_view name) {
    if (name == "rbpg") return Backend::rbpg;
    if (name == "fista") return Backend::fista;
    if (name == "ista") return Backend::ista;
    if (name == "svd_wiener" || name == "svd") return Backend::svd_wiener;
    throw ConfigError("unknown solver backend '" + std::string(name) + "'");
}

std::string_view to_string(Backend b) noexcept {
    switch (b) {
    case Backend::rbpg: return "rbpg";
    case Backend::fista: return "fista";
    case Backend::ista: return "ista";
    case Backend::svd_wiener: return "svd_wiener";
    }
    return "unknown";
}

void SlimmerConfig::validate() const {
    solver.validate();
    if (k_max == 0) throw ConfigError("k_max must be at least 1");
    if (!std::isfinite(svd_noise_power) || svd_noise_power < 0.0) throw ConfigError("svd_noise_power must be >= 0");
    if (!std::isfinite(support_floor) || support_floor < 0.0 || support_floor >= 1.0) {
        throw ConfigError("support_floor must lie in [0, 1)");
    }
}

std::vector<std::size_t> detect_support(const ComplexVector& x_hat, const ParameterGrid& grid, std::size_t k_max,
                                        double floor) {
    if (k_max == 0) throw ConfigError("k_max must be at least 1");
    if (static_cast<std::size_t>(x_hat.size()) != grid.flat_size()) {
        throw DimensionMismatch("profile length differs from the grid size");
    }
    const std::size_t elevations = grid.elevation().count;
    const std::size_t motion = grid.motion_size();

    std::vector<double> collapsed(elevations, 0.0);
    std::vector<std::size_t> argmax(elevations, 0);
    for (std::size_t e = 0; e < elevations; ++e) {
        argmax[e] = e * motion;
        for (std::size_t j = 0; j < motion; ++j) {
            const double v = std::abs(x_hat[static_cast<Index>(e * motion + j)]);
            if (v > collapsed[e]) {
                collapsed[e] = v;
                argmax[e] = e * motion + j;
            }
        }
    }
    const double peak = *std::max_element(collapsed.begin(), collapsed.end());
    if (!(peak > 0.0)) return {};
    const double threshold = floor * peak;

    std::vector<std::size_t> peaks;
    const double none = -std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < elevations; ++e) {
        const double v = collapsed[e];
        if (v <= 0.0 || v < threshold) continue;
        const double left = e > 0 ? collapsed[e - 1] : none;
        const double right = e + 1 < elevations ? collapsed[e + 1] : none;
        // Strict on the left, loose on the right: a flat top yields one peak.
        if (v > left && v >= right) peaks.push_back(e);
    }
    std::stable_sort(peaks.begin(), peaks.end(),
                     [&](std::size_t a, std::size_t b) { return collapsed[a] > collapsed[b]; });
    if (peaks.size() > k_max) peaks.resize(k_max);

    std::vector<std::size_t> out;
    out.reserve(peaks.size());
    for (std::size_t e : peaks) out.push_back(argmax[e]);
    return out;
}

std::size_t parameters_per_scatterer(const ParameterGrid& grid) noexcept {
    return 2 + 1 + grid.motion_dims();
}

double bic_score(double rss, std::size_t complex_samples, std::size_t model_order,
                 std::size_t params_per_scatterer) noexcept {
    const double observations = 2.0 * static_cast<double>(complex_samples);
    return observations * std::log(rss / observations) +
           static_cast<double>(params_per_scatterer * model_order) * std::log(observations);
}

ModelSelection model_select(const Objective& obj, std::span<const std::size_t> candidates, std::size_t k_max,
                            std::size_t params_per_scatterer) {
    if (k_max == 0) throw ConfigError("k_max must be at least 1");
    const ComplexMatrix& a = obj.dictionary();
    const ComplexVector& g = obj.measurement();
    for (std::size_t c : candidates) {
        if (c >= static_cast<std::size_t>(a.cols())) throw DomainError("candidate index out of range");
    }

    std::vector<std::size_t> independent;
    for (std::size_t c : candidates) {
        if (independent.size() == k_max) break;
        std::vector<std::size_t> trial = independent;
        trial.push_back(c);
        if (static_cast<std::size_t>(factor(gather_columns(a, trial)).rank()) == trial.size()) {
            independent = std::move(trial);
        }
    }

    ModelSelection sel;
    const auto n = static_cast<std::size_t>(g.size());
    sel.scores.push_back(bic_score(g.squaredNorm(), n, 0, params_per_scatterer));
    for (std::size_t k = 1; k <= independent.size(); ++k) {
        const std::span<const std::size_t> support(independent.data(), k);
        const ComplexMatrix columns = gather_columns(a, support);
        const ComplexVector amplitudes = factor(columns).solve(g);
        const double rss = (g - columns * amplitudes).squaredNorm();
        sel.scores.push_back(bic_score(rss, n, k, params_per_scatterer));
    }
    const auto best = std::min_element(sel.scores.begin(), sel.scores.end());
    sel.model_order = static_cast<std::size_t>(best - sel.scores.begin());
    sel.support.assign(independent.begin(), independent.begin() + static_cast<std::ptrdiff_t>(sel.model_order));
    return sel;
}

ScattererEstimates estimate_params(const Objective& obj, const ParameterGrid& grid,
                                   std::span<const std::size_t> support) {
    const ComplexMatrix& a = obj.dictionary();
    if (static_cast<std::size_t>(a.cols()) != grid.flat_size()) {
        throw DimensionMismatch("dictionary columns differ from the grid size");
    }
    ScattererEstimates est;
    if (support.empty()) return est;
    for (std::size_t c : support) {
        if (c >= grid.flat_size()) throw DomainError("support index out of range");
    }

    const ComplexMatrix columns = gather_columns(a, support);
    const auto qr = factor(columns);
    if (static_cast<std::size_t>(qr.rank()) < support.size()) {
        throw EstimationError("support columns are linearly dependent");
    }
    const ComplexVector amplitudes = qr.solve(obj.measurement());
    if (!amplitudes.allFinite()) throw EstimationError("least-squares amplitudes are not finite");

    est.model_order = support.size();
    est.support.assign(support.begin(), support.end());
    for (std::size_t k = 0; k < support.size(); ++k) {
        est.elevations.push_back(grid.elevation_at(support[k]));
        est.motion_params.push_back(grid.motion_at(support[k]));
        est.amplitudes.push_back(amplitudes[static_cast<Index>(k)]);
    }
    return est;
}

SlimmerPipeline::SlimmerPipeline(std::shared_ptr<const ComplexMatrix> dictionary, ParameterGrid grid,
                                 SlimmerConfig config)
    : dictionary_(std::move(dictionary)), grid_(std::move(grid)), config_(std::move(config)) {
    config_.validate();
    if (!dictionary_) throw ConfigError("pipeline needs a dictionary");
    if (static_cast<std::size_t>(dictionary_->cols()) != grid_.flat_size()) {
        throw DimensionMismatch("dictionary columns differ from the grid size");
    }
    switch (config_.backend) {
    case Backend::rbpg:
        partition_ = std::make_shared<const BlockPartition>(
            block_partition(grid_.flat_size(), config_.solver.num_blocks, *dictionary_));
        break;
    case Backend::ista:
    case Backend::fista:
        lipschitz_ = lipschitz_constant(*dictionary_);
        break;
    case Backend::svd_wiener:
        wiener_ = std::make_shared<const WienerFilter>(*dictionary_);
        break;
    }
}

Objective SlimmerPipeline::objective(const ComplexVector& g) const {
    return Objective(dictionary_, g, resolve_lambda(*dictionary_, g, config_.solver));
}

ComplexVector SlimmerPipeline::profile(const Objective& obj, std::uint64_t stream_id, Solution* telemetry) const {
    if (obj.cols() != dictionary_->cols()) throw DimensionMismatch("objective does not match the pipeline dictionary");
    if (config_.backend == Backend::svd_wiener) {
        return wiener_->apply(obj.measurement(), config_.svd_noise_power);
    }

    SolverConfig solver = config_.solver;
    Solution sol;
    switch (config_.backend) {
    case Backend::rbpg:
        solver.seed = derive_seed(config_.solver.seed, stream_id);
        sol = rbpg_solve(obj, solver, *partition_);
        break;
    case Backend::ista: sol = ista_solve(obj, solver, lipschitz_); break;
    case Backend::fista: sol = fista_solve(obj, solver, lipschitz_); break;
    case Backend::svd_wiener: break;
    }
    if (sol.status == SolveStatus::line_search_failure) throw LineSearchFailure("L1 solve: backtracking failed");
    if (sol.status == SolveStatus::numerical_failure) throw NumericalError("L1 solve: objective became non-finite");
    ComplexVector x = sol.x_hat;
    if (telemetry) *telemetry = std::move(sol);
    return x;
}

ComplexVector SlimmerPipeline::profile(const ComplexVector& g, std::uint64_t stream_id, Solution* telemetry) const {
    return profile(objective(g), stream_id, telemetry);
}

ScattererEstimates SlimmerPipeline::run(const Objective& obj, std::uint64_t stream_id) const {
    const ComplexVector x = profile(obj, stream_id);
    const auto candidates = detect_support(x, grid_, config_.k_max, config_.support_floor);
    const auto selection = model_select(obj, candidates, config_.k_max, parameters_per_scatterer(grid_));
    auto est = estimate_params(obj, grid_, selection.support);
    est.selection_scores = selection.scores;
    return est;
}

ScattererEstimates SlimmerPipeline::run(const ComplexVector& g, std::uint64_t stream_id) const {
    return run(objective(g), stream_id);
}

SlimmerPipeline SlimmerPipeline::with_svd_noise_power(double noise_power) const {
    SlimmerPipeline copy = *this;
    copy.config_.svd_noise_power = noise_power;
    copy.config_.validate();
    return copy;
}

ScattererEstimates slimmer_pipeline(const Objective& obj, const ParameterGrid& grid, const SlimmerConfig& config) {
    const SlimmerPipeline pipeline(obj.shared_dictionary(), grid, config);
    return pipeline.run(obj, 0);
}

} // namespace tomosar
