#include "tomosar/prox.hpp"

#include <cmath>

#include "tomosar/error.hpp"

namespace tomosar {

namespace {

void check_dim(const Objective& obj, const ComplexVector& x) {
    if (x.size() != obj.cols()) {
        throw DimensionMismatch("vector of length " + std::to_string(x.size()) + " for a dictionary with " +
                                std::to_string(obj.cols()) + " columns");
    }
}

} // namespace

Objective::Objective(std::shared_ptr<const ComplexMatrix> dictionary, ComplexVector measurement, double lambda_reg)
    : dictionary_(std::move(dictionary)), measurement_(std::move(measurement)), lambda_reg_(lambda_reg) {
    if (!dictionary_) throw ConfigError("objective needs a dictionary");
    if (dictionary_->rows() != measurement_.size()) {
        throw DimensionMismatch("dictionary has " + std::to_string(dictionary_->rows()) +
                                " rows but the measurement has " + std::to_string(measurement_.size()) + " samples");
    }
    if (!std::isfinite(lambda_reg_) || lambda_reg_ < 0.0) {
        throw ConfigError("lambda_reg must be finite and nonnegative");
    }
}

double l1_norm(const ComplexVector& x) noexcept {
    double sum = 0.0;
    for (Index i = 0; i < x.size(); ++i) sum += std::abs(x[i]);
    return sum;
}

double eval_f(const Objective& obj, const ComplexVector& x) {
    check_dim(obj, x);
    return (obj.dictionary() * x - obj.measurement()).squaredNorm();
}

double eval_F(const Objective& obj, const ComplexVector& x) {
    return eval_f(obj, x) + obj.lambda_reg() * l1_norm(x);
}

ComplexVector grad_f(const Objective& obj, const ComplexVector& x) {
    check_dim(obj, x);
    const ComplexVector residual = obj.dictionary() * x - obj.measurement();
    return 2.0 * (obj.dictionary().adjoint() * residual);
}

Complex soft_threshold(Complex x, double alpha) noexcept {
    const double modulus = std::abs(x);
    if (modulus <= alpha) return {0.0, 0.0};
    return x * ((modulus - alpha) / modulus);
}

void soft_threshold_inplace(Eigen::Ref<ComplexVector> x, double alpha) noexcept {
    for (Index i = 0; i < x.size(); ++i) x[i] = soft_threshold(x[i], alpha);
}

ComplexVector prox_step(const Objective& obj, const ComplexVector& x, double alpha) {
    if (!(alpha > 0.0)) throw DomainError("step size must be positive");
    ComplexVector z = x - alpha * grad_f(obj, x);
    soft_threshold_inplace(z, alpha * obj.lambda_reg());
    return z;
}

bool upper_bound_holds(double f_new, double f_old, double linear_term, double dist_sq, double alpha) noexcept {
    const double bound = f_old + linear_term + dist_sq / (2.0 * alpha);
    const double slack = 1e-12 * std::max(std::abs(f_old), std::abs(f_new));
    return f_new <= bound + slack;
}

bool line_search_ok(const Objective& obj, const ComplexVector& x, const ComplexVector& x_new, double alpha) {
    if (!(alpha > 0.0)) throw DomainError("step size must be positive");
    check_dim(obj, x_new);
    const ComplexVector step = x_new - x;
    const double linear = grad_f(obj, x).dot(step).real(); // dot() conjugates its left operand
    return upper_bound_holds(eval_f(obj, x_new), eval_f(obj, x), linear, step.squaredNorm(), alpha);
}

BacktrackResult backtrack(const Objective& obj, const ComplexVector& x, double alpha_init, double step_shrink,
                          std::size_t max_shrinks) {
    if (!(step_shrink > 0.0 && step_shrink < 1.0)) throw ConfigError("step shrink factor must lie in (0, 1)");
    if (!(alpha_init > 0.0) || !std::isfinite(alpha_init)) throw ConfigError("initial step must be positive");
    check_dim(obj, x);

    const ComplexVector residual = obj.dictionary() * x - obj.measurement();
    const ComplexVector grad = 2.0 * (obj.dictionary().adjoint() * residual);
    const double f_old = residual.squaredNorm();

    double alpha = alpha_init;
    for (std::size_t shrinks = 0; shrinks <= max_shrinks; ++shrinks) {
        ComplexVector z = x - alpha * grad;
        soft_threshold_inplace(z, alpha * obj.lambda_reg());
        const ComplexVector step = z - x;
        const double f_new = (obj.dictionary() * z - obj.measurement()).squaredNorm();
        if (upper_bound_holds(f_new, f_old, grad.dot(step).real(), step.squaredNorm(), alpha)) {
            return {alpha, std::move(z), shrinks};
        }
        alpha *= step_shrink;
    }
    throw LineSearchFailure("backtracking did not satisfy the upper bound after " + std::to_string(max_shrinks) +
                            " shrinkages");
}

} // namespace tomosar
