#include <cmath>

#include "doctest.h"
#include "replaysim/errors.hpp"
#include "replaysim/numerics.hpp"
#include "replaysim/rng.hpp"

using namespace replaysim;

namespace {

// (1 + sqrt(5)) / 2, the positive root of r^2 = r + 1. The scalar Riccati
// equation with A = B = F = G = 1 reduces to exactly that quadratic:
// r = r + 1 - r^2 / (r + 1)  <=>  r^2 = r + 1.
const double kGoldenRatio = (1.0 + std::sqrt(5.0)) / 2.0;

Matrix scalar(double v) {
    Matrix m(1, 1);
    m << v;
    return m;
}

Matrix random_matrix(Eigen::Index n, Eigen::Index m, Rng& rng) {
    Matrix out(n, m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) out(i, j) = rng.normal();
    return out;
}

Matrix random_stable(Eigen::Index n, double target_radius, Rng& rng) {
    Matrix m = random_matrix(n, n, rng);
    const double rho = spectral_radius(m);
    if (rho > 0.0) m *= target_radius / rho;
    return m;
}

// Independent oracle for X = L X L' + Q: vectorize to the linear system
// (I - kron(L, L)) vec(X) = vec(Q) and solve directly.
Matrix lyapunov_by_kronecker(const Matrix& L, const Matrix& Q) {
    const Eigen::Index n = L.rows();
    Matrix kron(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            kron.block(i * n, j * n, n, n) = L(i, j) * L;
    Matrix lhs = Matrix::Identity(n * n, n * n) - kron;
    Vector vecQ(n * n);
    for (Eigen::Index c = 0; c < n; ++c) vecQ.segment(c * n, n) = Q.col(c);
    Vector vecX = lhs.fullPivLu().solve(vecQ);
    Matrix X(n, n);
    for (Eigen::Index c = 0; c < n; ++c) X.col(c) = vecX.segment(c * n, n);
    return X;
}

double dare_residual(const Matrix& A, const Matrix& B, const Matrix& F,
                     const Matrix& G, const Matrix& R) {
    Matrix BtRA = B.transpose() * R * A;
    Matrix rhs = A.transpose() * R * A + F -
                 BtRA.transpose() *
                     (B.transpose() * R * B + G).ldlt().solve(BtRA);
    return (R - rhs).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("spectral radius of known spectra") {
    CHECK(spectral_radius(scalar(0.5)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(spectral_radius(scalar(-3.0)) == doctest::Approx(3.0).epsilon(1e-12));

    Matrix d(2, 2);
    d << 0.3, 0.0, 0.0, -0.9;
    CHECK(spectral_radius(d) == doctest::Approx(0.9).epsilon(1e-12));

    // Complex pair: scaled rotation has radius equal to the scale factor.
    const double theta = 0.7;
    Matrix rot(2, 2);
    rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    CHECK(spectral_radius(0.8 * rot) == doctest::Approx(0.8).epsilon(1e-10));
}

TEST_CASE("spectral radius of defective matrices") {
    Matrix nilpotent(2, 2);
    nilpotent << 0.0, 1.0, 0.0, 0.0;
    CHECK(spectral_radius(nilpotent) == doctest::Approx(0.0));

    Matrix jordan(2, 2);
    jordan << 0.5, 1.0, 0.0, 0.5;
    CHECK(spectral_radius(jordan) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("spectral radius is absolutely homogeneous") {
    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix m = random_matrix(3, 3, rng);
        const double c = 3.0 * rng.normal();
        CHECK(spectral_radius(c * m) ==
              doctest::Approx(std::abs(c) * spectral_radius(m))
                  .epsilon(1e-8));
    }
}

TEST_CASE("spectral radius rejects non-square input") {
    CHECK_THROWS_AS(spectral_radius(Matrix::Zero(2, 3)), DimensionMismatch);
}

TEST_CASE("scalar Riccati fixed point hits the golden ratio") {
    Matrix R = solve_dare(scalar(1), scalar(1), scalar(1), scalar(1));
    CHECK(R(0, 0) == doctest::Approx(kGoldenRatio).epsilon(1e-9));
}

TEST_CASE("Riccati with A = 0 returns the state cost itself") {
    Matrix R = solve_dare(scalar(0), scalar(1), scalar(1), scalar(1));
    CHECK(R(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Riccati with no control authority reduces to a Lyapunov sum") {
    // R = 0.25 R + 1  =>  R = 4/3.
    Matrix R = solve_dare(scalar(0.5), scalar(0), scalar(1), scalar(1));
    CHECK(R(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("identity-pair Riccati scales to two states") {
    Matrix I = Matrix::Identity(2, 2);
    Matrix R = solve_dare(I, I, I, I);
    CHECK((R - kGoldenRatio * I).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("Riccati solutions satisfy the defining equation on random instances") {
    Rng rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index n = 2 + trial % 3;
        const Eigen::Index p = 1 + trial % 2;
        Matrix A = random_stable(n, 0.85, rng);
        Matrix B = random_matrix(n, p, rng);
        Matrix Fh = random_matrix(n, n, rng);
        Matrix F = Fh.transpose() * Fh;
        Matrix G = Matrix::Identity(p, p);
        Matrix R = solve_dare(A, B, F, G);
        CHECK(is_symmetric(R, 1e-9));
        CHECK(dare_residual(A, B, F, G, R) < 1e-10);
    }
}

TEST_CASE("Riccati reports divergence for an unstabilizable pair") {
    CHECK_THROWS_AS(solve_dare(scalar(2), scalar(0), scalar(1), scalar(1)),
                    NonConvergence);
}

TEST_CASE("Riccati rejects a degenerate input weight") {
    CHECK_THROWS_AS(solve_dare(scalar(1), scalar(0), scalar(1), scalar(0)),
                    Singular);
}

TEST_CASE("Riccati rejects mismatched shapes") {
    CHECK_THROWS_AS(solve_dare(Matrix::Identity(2, 2), Matrix::Zero(3, 1),
                               Matrix::Identity(2, 2), scalar(1)),
                    DimensionMismatch);
}

TEST_CASE("scalar Lyapunov fixed point") {
    // X = 0.25 X + 1  =>  X = 4/3.
    Matrix X = solve_discrete_lyapunov(scalar(0.5), scalar(1));
    CHECK(X(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("nilpotent Lyapunov series terminates exactly") {
    Matrix L(2, 2);
    L << 0.0, 1.0, 0.0, 0.0;
    Matrix X = solve_discrete_lyapunov(L, Matrix::Identity(2, 2));
    Matrix expected(2, 2);
    expected << 2.0, 0.0, 0.0, 1.0;
    CHECK((X - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Lyapunov agrees with a direct Kronecker solve") {
    Rng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index n = 2 + trial % 3;
        Matrix L = random_stable(n, 0.6 + 0.05 * (trial % 5), rng);
        Matrix Qh = random_matrix(n, n, rng);
        Matrix Q = Qh.transpose() * Qh;
        Matrix X = solve_discrete_lyapunov(L, Q);
        Matrix oracle = lyapunov_by_kronecker(L, Q);
        CHECK((X - oracle).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((X - L * X * L.transpose() - Q).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("Lyapunov with zero forcing returns zero") {
    Matrix X = solve_discrete_lyapunov(scalar(0.9), scalar(0));
    CHECK(X(0, 0) == 0.0);
}

TEST_CASE("Lyapunov rejects unstable and marginal operators") {
    CHECK_THROWS_AS(
        solve_discrete_lyapunov(Matrix::Identity(2, 2), Matrix::Identity(2, 2)),
        UnstableOperator);
    CHECK_THROWS_AS(solve_discrete_lyapunov(scalar(1.5), scalar(1)),
                    UnstableOperator);
}

TEST_CASE("Lyapunov rejects an asymmetric forcing term") {
    Matrix Q(2, 2);
    Q << 1.0, 0.5, -0.5, 1.0;
    CHECK_THROWS_AS(solve_discrete_lyapunov(0.5 * Matrix::Identity(2, 2), Q),
                    NotPSD);
}

TEST_CASE("Gaussian draws with zero covariance return the mean") {
    Rng rng(5);
    Vector mean(2);
    mean << 3.0, -1.0;
    Vector x = sample_gaussian(mean, Matrix::Zero(2, 2), rng);
    CHECK(x == mean);
}

TEST_CASE("Gaussian draws are deterministic for a fixed seed") {
    Vector mean = Vector::Zero(2);
    Matrix cov(2, 2);
    cov << 2.0, 0.5, 0.5, 1.0;
    Rng a(42), b(42);
    GaussianSampler sampler(mean, cov);
    for (int i = 0; i < 100; ++i) {
        CHECK(sampler.draw(a) == sampler.draw(b));
    }
}

TEST_CASE("Gaussian sample moments match the requested covariance") {
    Vector mean(2);
    mean << 1.0, -2.0;
    Matrix cov(2, 2);
    cov << 2.0, 0.5, 0.5, 1.0;
    GaussianSampler sampler(mean, cov);
    Rng rng(8);
    const int n = 100000;
    Vector sum = Vector::Zero(2);
    Matrix sum_outer = Matrix::Zero(2, 2);
    for (int i = 0; i < n; ++i) {
        Vector x = sampler.draw(rng) - mean;
        sum += x;
        sum_outer += x * x.transpose();
    }
    CHECK((sum / n).cwiseAbs().maxCoeff() < 5.0 * std::sqrt(2.0 / n));
    Matrix emp = sum_outer / n;
    CHECK((emp - cov).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("slightly indefinite covariance is clipped, genuinely indefinite rejected") {
    // Eigenvalues {1, -1e-12}: inside the clip band, accepted, and the
    // negative direction contributes no variance.
    Matrix u(2, 2);
    const double s = std::sqrt(0.5);
    u << s, -s, s, s;
    Matrix nearly_psd = u * Vector({{1.0, -1e-12}}).asDiagonal() * u.transpose();
    Rng rng(1);
    CHECK_NOTHROW(sample_gaussian(Vector::Zero(2), nearly_psd, rng));

    Matrix indefinite = u * Vector({{1.0, -1e-3}}).asDiagonal() * u.transpose();
    CHECK_THROWS_AS(sample_gaussian(Vector::Zero(2), indefinite, rng), NotPSD);
}

TEST_CASE("Gaussian sampling rejects mismatched mean and covariance") {
    Rng rng(1);
    CHECK_THROWS_AS(sample_gaussian(Vector::Zero(1), Matrix::Identity(2, 2), rng),
                    DimensionMismatch);
}
