#include "replaysim/estimator.hpp"

#include <limits>
#include <string>
#include <utility>

#include "replaysim/errors.hpp"

namespace replaysim {

FilterState initial_filter_state(const SystemModel& model) {
    FilterState s;
    s.x_pred = Vector::Zero(model.n());
    s.x_est = Vector::Zero(model.n());
    s.k = 0;
    return s;
}

SteadyStateGains compute_steady_gains(const SystemModel& model, double beta,
                                      const SolverOptions& opts) {
    if (!(beta > 0.0 && beta <= 1.0)) {
        throw ValidationError("beta must lie in (0, 1], got " +
                              std::to_string(beta));
    }
    const Matrix& A = model.A;
    const Matrix& C = model.C;

    Matrix P = symmetrize(model.W);
    Matrix K, Sigma;
    for (long it = 0; it < opts.max_iterations; ++it) {
        Sigma = symmetrize(C * P * C.transpose() + model.V);
        Eigen::LLT<Matrix> llt(Sigma);
        if (llt.info() != Eigen::Success) {
            throw Singular("innovation covariance is not positive definite");
        }
        // K = P C' Sigma^-1, via Sigma K' = C P'.
        K = llt.solve(C * P.transpose()).transpose();
        Matrix posterior = P - beta * K * C * P;
        Matrix next = symmetrize(A * posterior * A.transpose() + model.W);
        if (!next.allFinite()) {
            throw NonConvergence("covariance recursion diverged", it + 1,
                                 std::numeric_limits<double>::infinity());
        }
        const double delta = (next - P).cwiseAbs().maxCoeff();
        P = std::move(next);
        if (delta < opts.tolerance) {
            SteadyStateGains gains;
            gains.Sigma = symmetrize(C * P * C.transpose() + model.V);
            Eigen::LLT<Matrix> final_llt(gains.Sigma);
            gains.K = final_llt.solve(C * P.transpose()).transpose();
            gains.P = P;
            gains.beta = beta;
            return gains;
        }
    }
    throw NonConvergence("covariance recursion hit the iteration cap",
                         opts.max_iterations, 0.0);
}

FilterState predict(const FilterState& state, const SystemModel& model,
                    const Vector& u) {
    if (u.size() != model.p()) {
        throw DimensionMismatch("control input dimension mismatch");
    }
    FilterState next;
    next.x_pred = model.A * state.x_est + model.B * u;
    next.x_est = next.x_pred;
    next.k = state.k + 1;
    return next;
}

std::pair<FilterState, Vector> update(const FilterState& state,
                                      const SystemModel& model,
                                      const SteadyStateGains& gains,
                                      BetaMode mode, bool arrived,
                                      const Vector& y) {
    if (y.size() != model.m()) {
        throw DimensionMismatch("measurement dimension mismatch");
    }
    Vector z = y - model.C * state.x_pred;
    const double beta_eff =
        mode == BetaMode::Fixed ? gains.beta : (arrived ? 1.0 : 0.0);
    FilterState next = state;
    next.x_est = state.x_pred + beta_eff * (gains.K * z);
    return {std::move(next), std::move(z)};
}

}  // namespace replaysim
