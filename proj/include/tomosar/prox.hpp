#pragma once

#include <cstddef>
#include <memory>

#include "tomosar/types.hpp"

namespace tomosar {

// F(x) = ||A x - b||_2^2 + lambda_reg * sum_l |x_l| over complex x.
//
// The dictionary is shared and read-only so one steering matrix can back many
// concurrent pixel objectives.
class Objective {
public:
    Objective(std::shared_ptr<const ComplexMatrix> dictionary, ComplexVector measurement, double lambda_reg);

    const ComplexMatrix& dictionary() const noexcept { return *dictionary_; }
    const std::shared_ptr<const ComplexMatrix>& shared_dictionary() const noexcept { return dictionary_; }
    const ComplexVector& measurement() const noexcept { return measurement_; }
    double lambda_reg() const noexcept { return lambda_reg_; }

    Index rows() const noexcept { return dictionary_->rows(); }
    Index cols() const noexcept { return dictionary_->cols(); }

    Objective with_lambda(double lambda_reg) const { return {dictionary_, measurement_, lambda_reg}; }

private:
    std::shared_ptr<const ComplexMatrix> dictionary_;
    ComplexVector measurement_;
    double lambda_reg_;
};

double l1_norm(const ComplexVector& x) noexcept;

// ||A x - b||^2
double eval_f(const Objective& obj, const ComplexVector& x);
// f(x) + lambda * ||x||_1
double eval_F(const Objective& obj, const ComplexVector& x);
// 2 A^H (A x - b); f(x + d) ~ f(x) + Re<grad, d>.
ComplexVector grad_f(const Objective& obj, const ComplexVector& x);

// Proximal operator of alpha*|.| on the complex plane: shrinks the modulus by
// alpha and keeps the phase.
Complex soft_threshold(Complex x, double alpha) noexcept;
void soft_threshold_inplace(Eigen::Ref<ComplexVector> x, double alpha) noexcept;

// prox_{alpha*lambda*||.||_1}(x - alpha * grad_f(x))
ComplexVector prox_step(const Objective& obj, const ComplexVector& x, double alpha);

// Quadratic upper-bound test at x for the candidate x_new:
//   f(x_new) <= f(x) + Re<grad_f(x), x_new - x> + ||x_new - x||^2 / (2 alpha)
bool line_search_ok(const Objective& obj, const ComplexVector& x, const ComplexVector& x_new, double alpha);

// Same test on precomputed pieces. A relative slack of 1e-12 absorbs rounding
// when x_new is within a few ulps of x.
bool upper_bound_holds(double f_new, double f_old, double linear_term, double dist_sq, double alpha) noexcept;

inline constexpr std::size_t kDefaultMaxBacktracks = 50;

struct BacktrackResult {
    double alpha;
    ComplexVector x_new;
    std::size_t shrinks;
};

// Shrinks alpha by step_shrink until the prox step from x passes line_search_ok.
// Throws ConfigError for step_shrink outside (0, 1) and LineSearchFailure after
// max_shrinks reductions.
BacktrackResult backtrack(const Objective& obj, const ComplexVector& x, double alpha_init, double step_shrink,
                          std::size_t max_shrinks = kDefaultMaxBacktracks);

} // namespace tomosar
