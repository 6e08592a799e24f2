#include "replaysim/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "replaysim/errors.hpp"

namespace replaysim {

namespace {

void require_square(const char* name, const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw DimensionMismatch(std::string(name) + " must be square, got " +
                                std::to_string(m.rows()) + "x" +
                                std::to_string(m.cols()));
    }
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

Matrix symmetrize(const Matrix& m) {
    return (m + m.transpose()) / 2.0;
}

bool is_symmetric(const Matrix& m, double atol) {
    if (m.rows() != m.cols()) return false;
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= atol;
}

double spectral_radius(const Matrix& m) {
    require_square("spectral_radius operand", m);
    if (m.size() == 0) return 0.0;
    Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) {
        throw NonConvergence("eigenvalue iteration failed to converge", 0, 0.0);
    }
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix solve_dare(const Matrix& A, const Matrix& B, const Matrix& F,
                  const Matrix& G, const SolverOptions& opts) {
    require_square("A", A);
    require_square("F", F);
    require_square("G", G);
    const auto n = A.rows();
    const auto p = G.rows();
    if (F.rows() != n) throw DimensionMismatch("F must match A's dimension");
    if (B.rows() != n || B.cols() != p) {
        throw DimensionMismatch("B must be n x p with p matching G");
    }

    Matrix R = symmetrize(F);
    for (long it = 0; it < opts.max_iterations; ++it) {
        Matrix BtRB_G = B.transpose() * R * B + G;
        Eigen::LLT<Matrix> llt(symmetrize(BtRB_G));
        if (llt.info() != Eigen::Success) {
            throw Singular("B'RB + G is not positive definite");
        }
        Matrix BtRA = B.transpose() * R * A;
        Matrix next = symmetrize(A.transpose() * R * A + F -
                                 BtRA.transpose() * llt.solve(BtRA));
        if (!next.allFinite()) {
            throw NonConvergence("Riccati iteration diverged", it + 1,
                                 std::numeric_limits<double>::infinity());
        }
        const double delta = max_abs_diff(next, R);
        R = std::move(next);
        if (delta < opts.tolerance) return R;
    }
    throw NonConvergence("Riccati iteration hit the iteration cap",
                         opts.max_iterations, max_abs_diff(R, R));
}

Matrix solve_discrete_lyapunov(const Matrix& L, const Matrix& Q,
                               const SolverOptions& opts) {
    require_square("L", L);
    require_square("Q", Q);
    if (L.rows() != Q.rows()) {
        throw DimensionMismatch("L and Q must share dimensions");
    }
    if (!is_symmetric(Q, 1e-9 * std::max(1.0, Q.cwiseAbs().maxCoeff()))) {
        throw NotPSD("Q must be symmetric");
    }
    const double rho = spectral_radius(L);
    if (rho >= 1.0) {
        throw UnstableOperator("operator spectral radius " +
                               std::to_string(rho) + " >= 1");
    }

    Matrix X = symmetrize(Q);
    double delta = 0.0;
    for (long it = 0; it < opts.max_iterations; ++it) {
        Matrix next = symmetrize(L * X * L.transpose() + Q);
        delta = max_abs_diff(next, X);
        X = std::move(next);
        if (delta < opts.tolerance) return X;
    }
    throw NonConvergence("Lyapunov iteration hit the iteration cap",
                         opts.max_iterations, delta);
}

GaussianSampler::GaussianSampler(Vector mean, const Matrix& cov)
    : mean_(std::move(mean)) {
    require_square("cov", cov);
    if (cov.rows() != mean_.size()) {
        throw DimensionMismatch("mean and cov dimensions differ");
    }
    if (!is_symmetric(cov, 1e-9 * std::max(1.0, cov.cwiseAbs().maxCoeff()))) {
        throw NotPSD("covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(cov));
    if (es.info() != Eigen::Success) {
        throw NonConvergence("eigenvalue iteration failed to converge", 0, 0.0);
    }
    Vector evals = es.eigenvalues();
    const double scale = evals.size() ? evals.cwiseAbs().maxCoeff() : 0.0;
    const double clip = -1e-10 * scale;
    for (Eigen::Index i = 0; i < evals.size(); ++i) {
        if (evals[i] < clip) {
            throw NotPSD("covariance eigenvalue " + std::to_string(evals[i]) +
                         " below PSD tolerance");
        }
        evals[i] = std::max(evals[i], 0.0);
    }
    transform_ = es.eigenvectors() * evals.cwiseSqrt().asDiagonal();
}

Vector GaussianSampler::draw(Rng& rng) const {
    Vector g(mean_.size());
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = rng.normal();
    return mean_ + transform_ * g;
}

Vector sample_gaussian(const Vector& mean, const Matrix& cov, Rng& rng) {
    return GaussianSampler(mean, cov).draw(rng);
}

}  // namespace replaysim
