#include "replaysim/plant.hpp"

#include <Eigen/Eigenvalues>
#include <string>

#include "replaysim/errors.hpp"

namespace replaysim {

namespace {

void require_finite(const char* name, const Matrix& m) {
    if (!m.allFinite()) {
        throw ValidationError(std::string(name) + " has non-finite entries");
    }
}

void require_symmetric_psd(const char* name, const Matrix& m,
                           bool strictly_positive) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if (!is_symmetric(m, 1e-9 * scale)) {
        throw ValidationError(std::string(name) + " must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m),
                                             Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    if (strictly_positive) {
        if (min_eig <= 0.0) {
            throw ValidationError(std::string(name) +
                                  " must be positive definite");
        }
    } else if (min_eig < -1e-10 * scale) {
        throw ValidationError(std::string(name) +
                              " must be positive semi-definite");
    }
}

}  // namespace

void validate_model(const SystemModel& model) {
    const auto n = model.A.rows();
    if (n == 0 || model.A.cols() != n) {
        throw ValidationError("A must be square and non-empty");
    }
    if (model.B.rows() != n || model.B.cols() < 1) {
        throw ValidationError("B must have n rows and at least one column");
    }
    if (model.C.cols() != n || model.C.rows() < 1) {
        throw ValidationError("C must have n columns and at least one row");
    }
    if (model.W.rows() != n || model.W.cols() != n) {
        throw ValidationError("W must be n x n");
    }
    if (model.V.rows() != model.C.rows() || model.V.cols() != model.C.rows()) {
        throw ValidationError("V must be m x m");
    }
    require_finite("A", model.A);
    require_finite("B", model.B);
    require_finite("C", model.C);
    require_finite("W", model.W);
    require_finite("V", model.V);
    require_symmetric_psd("W", model.W, /*strictly_positive=*/false);
    require_symmetric_psd("V", model.V, /*strictly_positive=*/true);
}

PlantState plant_step(const SystemModel& model, const PlantState& state,
                      const Vector& u, const GaussianSampler& process_noise,
                      Rng& rng) {
    if (u.size() != model.p()) {
        throw DimensionMismatch("control input dimension mismatch");
    }
    PlantState next;
    next.x = model.A * state.x + model.B * u + process_noise.draw(rng);
    next.k = state.k + 1;
    return next;
}

PlantState plant_step(const SystemModel& model, const PlantState& state,
                      const Vector& u, Rng& rng) {
    GaussianSampler w(Vector::Zero(model.n()), model.W);
    return plant_step(model, state, u, w, rng);
}

Vector measure(const SystemModel& model, const PlantState& state,
               const GaussianSampler& measurement_noise, Rng& rng) {
    return model.C * state.x + measurement_noise.draw(rng);
}

Vector measure(const SystemModel& model, const PlantState& state, Rng& rng) {
    GaussianSampler v(Vector::Zero(model.m()), model.V);
    return measure(model, state, v, rng);
}

SystemModel scalar_default_model() {
    SystemModel model;
    model.A = Matrix::Identity(1, 1);
    model.B = Matrix::Identity(1, 1);
    model.C = Matrix::Identity(1, 1);
    model.W = Matrix::Identity(1, 1);
    model.V = Matrix::Identity(1, 1);
    return model;
}

SystemModel two_state_example_model() {
    SystemModel model;
    model.A = Matrix::Identity(2, 2);
    model.B = Matrix::Identity(2, 2);
    model.C = Matrix::Identity(2, 2);
    model.W = Matrix::Identity(2, 2);
    model.V = Matrix::Identity(2, 2);
    return model;
}

}  // namespace replaysim
