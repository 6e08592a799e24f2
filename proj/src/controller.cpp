#include "replaysim/controller.hpp"

#include "replaysim/errors.hpp"

namespace replaysim {

LqgDesign design_lqg(const SystemModel& model, const Matrix& F,
                     const Matrix& G, const SolverOptions& opts) {
    LqgDesign design;
    design.F = F;
    design.G = G;

    if (model.B.isZero(0.0)) {
        // No control authority: M = 0, and the loop inherits the open-loop
        // spectrum. An unstable A is reported through the status flag, not
        // an error (the Riccati sum would diverge, so it is skipped).
        design.M = Matrix::Zero(model.p(), model.n());
        design.closed_loop_radius = spectral_radius(model.A);
        design.closed_loop_stable = design.closed_loop_radius < 1.0;
        design.R = design.closed_loop_stable ? solve_dare(model.A, model.B, F,
                                                          G, opts)
                                             : F;
        return design;
    }

    design.R = solve_dare(model.A, model.B, F, G, opts);
    Matrix BtRB_G = model.B.transpose() * design.R * model.B + G;
    Eigen::LLT<Matrix> llt(symmetrize(BtRB_G));
    if (llt.info() != Eigen::Success) {
        throw Singular("B'RB + G is not positive definite");
    }
    design.M = -llt.solve(model.B.transpose() * design.R * model.A);
    design.closed_loop_radius = spectral_radius(model.A + model.B * design.M);
    design.closed_loop_stable = design.closed_loop_radius < 1.0;
    return design;
}

double lqg_cost(const LqgDesign& design, const SteadyStateGains& gains,
                const SystemModel& model) {
    const Matrix& A = model.A;
    Matrix posterior = gains.P - gains.beta * gains.K * model.C * gains.P;
    Matrix gap = A.transpose() * design.R * A + design.F - design.R;
    return (design.R * model.W).trace() + (gap * posterior).trace();
}

Vector control(const LqgDesign& design, const Vector& x_est,
               const Vector& delta_u) {
    if (x_est.size() != design.M.cols() || delta_u.size() != design.M.rows()) {
        throw DimensionMismatch("estimate or perturbation dimension mismatch");
    }
    return design.M * x_est + delta_u;
}

Vector watermark_sample(const Watermark& wm, long k,
                        const GaussianSampler& sampler, Rng& rng) {
    if (k < wm.active_from) return Vector::Zero(wm.tau.rows());
    return sampler.draw(rng);
}

Vector watermark_sample(const Watermark& wm, long k, Rng& rng) {
    if (k < wm.active_from) return Vector::Zero(wm.tau.rows());
    GaussianSampler sampler(Vector::Zero(wm.tau.rows()), wm.tau);
    return sampler.draw(rng);
}

double watermarked_cost(const LqgDesign& design, const SteadyStateGains& gains,
                        const SystemModel& model, const Watermark& wm) {
    if (wm.tau.rows() != model.p() || wm.tau.cols() != model.p()) {
        throw DimensionMismatch("tau must be p x p");
    }
    Matrix weight = design.G + model.B.transpose() * design.R * model.B;
    return lqg_cost(design, gains, model) + (weight * wm.tau).trace();
}

}  // namespace replaysim
