#include "sdreg/francis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sdreg/model.hpp"

namespace sdreg {

NonResonanceReport check_nonresonance(const Matrix& A, const Matrix& B, const Matrix& C,
                                      const Matrix& S) {
    const Eigen::Index n = A.rows();
    const Eigen::Index m = B.cols();
    const Eigen::Index p = C.rows();
    if (A.cols() != n || B.rows() != n || C.cols() != n || S.rows() != S.cols())
        throw std::invalid_argument("check_nonresonance: dimension mismatch");

    NonResonanceReport report;
    report.full_rank = true;
    const ComplexVector lambdas = eigenvalues(S);
    for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
        const std::complex<double> lam = lambdas(i);
        ComplexMatrix pencil = ComplexMatrix::Zero(n + p, n + m);
        pencil.topLeftCorner(n, n) =
            A.cast<std::complex<double>>() - lam * ComplexMatrix::Identity(n, n);
        pencil.topRightCorner(n, m) = B.cast<std::complex<double>>();
        pencil.bottomLeftCorner(p, n) = C.cast<std::complex<double>>();

        double sv = 0.0;
        if (n + p <= n + m) {
            // Full row rank via the smallest singular value of the wide pencil.
            Eigen::JacobiSVD<ComplexMatrix> svd(pencil);
            sv = svd.singularValues()(n + p - 1);
            const double thresh = 1e-9 * std::max(1.0, svd.singularValues()(0));
            if (sv <= thresh) report.full_rank = false;
        } else {
            report.full_rank = false;  // more rows than columns: row rank impossible
        }
        report.margins.push_back(sv);
        report.lambdas.push_back(lam);
    }
    return report;
}

FrancisSolution solve_francis(const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& E,
                              const Matrix& F, const Matrix& S) {
    const Eigen::Index n = A.rows();
    const Eigen::Index m = B.cols();
    const Eigen::Index p = C.rows();
    const Eigen::Index q = S.rows();
    if (A.cols() != n || B.rows() != n || C.cols() != n || E.rows() != n || E.cols() != q ||
        F.rows() != p || F.cols() != q || S.cols() != q)
        throw std::invalid_argument("solve_francis: dimension mismatch");

    const Matrix In = Matrix::Identity(n, n);
    const Matrix Iq = Matrix::Identity(q, q);

    Matrix sys = Matrix::Zero(n * q + p * q, n * q + m * q);
    sys.topLeftCorner(n * q, n * q) = kron(S.transpose(), In) - kron(Iq, A);
    sys.topRightCorner(n * q, m * q) = -kron(Iq, B);
    sys.bottomLeftCorner(p * q, n * q) = kron(Iq, C);

    Vector rhs(n * q + p * q);
    rhs << vec(E), vec(F);

    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(sys);
    const Vector sol = cod.solve(rhs);

    FrancisSolution out;
    out.X = unvec(sol.head(n * q), n, q);
    out.R = unvec(sol.tail(m * q), m, q);
    out.unique = cod.rank() == sys.cols();

    const double scale =
        1.0 + A.norm() + B.norm() + C.norm() + E.norm() + F.norm() + S.norm();
    const double r1 = out.residual_dynamics(A, B, C, E, F, S);
    const double r2 = out.residual_output(C, F);
    if (r1 + r2 > 1e-9 * scale)
        throw std::runtime_error("solve_francis: inconsistent regulator equations, residual " +
                                 std::to_string(r1 + r2));
    return out;
}

namespace {

// Distinct eigenvalues of a semisimple matrix, conjugate-symmetrized.
std::vector<std::complex<double>> distinct_eigenvalues(const Matrix& S) {
    const ComplexVector lambdas = eigenvalues(S);
    const double scale = std::max(1.0, max_singular_value(S));
    const double tol = 1e-5 * scale;

    std::vector<std::complex<double>> centers;
    std::vector<bool> used(lambdas.size(), false);
    for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
        if (used[i]) continue;
        std::complex<double> sum = lambdas(i);
        int count = 1;
        for (Eigen::Index k = i + 1; k < lambdas.size(); ++k) {
            if (!used[k] && std::abs(lambdas(k) - lambdas(i)) <= tol) {
                used[k] = true;
                sum += lambdas(k);
                ++count;
            }
        }
        centers.push_back(sum / static_cast<double>(count));
    }
    for (auto& c : centers)
        if (std::abs(c.imag()) <= tol) c = {c.real(), 0.0};
    return centers;
}

}  // namespace

InternalModel build_internal_model(const Matrix& S, Eigen::Index copies) {
    if (copies <= 0) throw std::invalid_argument("build_internal_model: copies must be positive");
    const auto neutral = check_neutral_stability(S);
    if (!neutral.neutrally_stable)
        throw std::invalid_argument("build_internal_model: S is not neutrally stable");

    // Minimal polynomial of a semisimple matrix: product over distinct roots.
    const auto roots = distinct_eigenvalues(S);
    std::vector<std::complex<double>> coeffs{1.0};
    for (const auto& r : roots) {
        std::vector<std::complex<double>> next(coeffs.size() + 1, 0.0);
        for (std::size_t i = 0; i < coeffs.size(); ++i) {
            next[i + 1] += coeffs[i];
            next[i] -= r * coeffs[i];
        }
        coeffs = std::move(next);
    }
    const Eigen::Index d = static_cast<Eigen::Index>(coeffs.size()) - 1;

    Matrix beta = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i + 1 < d; ++i) beta(i, i + 1) = 1.0;
    for (Eigen::Index i = 0; i < d; ++i) beta(d - 1, i) = -coeffs[static_cast<std::size_t>(i)].real();
    Vector gamma = Vector::Zero(d);
    gamma(d - 1) = 1.0;

    // Companion pairs are controllable; assert it anyway via PBH.
    const ComplexVector block_eigs = eigenvalues(beta);
    for (Eigen::Index i = 0; i < block_eigs.size(); ++i) {
        ComplexMatrix pencil(d, d + 1);
        pencil << beta.cast<std::complex<double>>() -
                      block_eigs(i) * ComplexMatrix::Identity(d, d),
            gamma.cast<std::complex<double>>();
        if (min_singular_value(pencil) <= 1e-9 * std::max(1.0, max_singular_value(beta)))
            throw std::logic_error("build_internal_model: companion block failed PBH check");
    }

    InternalModel model;
    model.copies = copies;
    model.G1 = Matrix::Zero(copies * d, copies * d);
    model.G2 = Matrix::Zero(copies * d, copies);
    for (Eigen::Index c = 0; c < copies; ++c) {
        model.G1.block(c * d, c * d, d, d) = beta;
        model.G2.block(c * d, c, d, 1) = gamma;
        model.block_dims.push_back(d);
    }
    return model;
}

ZSolution solve_Z(const Matrix& S, const Matrix& G1, const Matrix& K, const Matrix& R) {
    const Eigen::Index q = S.rows();
    const Eigen::Index nz = G1.rows();
    const Eigen::Index m = K.rows();
    if (S.cols() != q || G1.cols() != nz || K.cols() != nz || R.rows() != m || R.cols() != q)
        throw std::invalid_argument("solve_Z: dimension mismatch");

    const Matrix Iz = Matrix::Identity(nz, nz);
    const Matrix Iq = Matrix::Identity(q, q);

    Matrix sys(nz * q + m * q, nz * q);
    sys.topRows(nz * q) = kron(S.transpose(), Iz) - kron(Iq, G1);
    sys.bottomRows(m * q) = kron(Iq, K);
    Vector rhs = Vector::Zero(nz * q + m * q);
    rhs.tail(m * q) = vec(R);

    const Vector sol = sys.completeOrthogonalDecomposition().solve(rhs);

    ZSolution out;
    out.Z = unvec(sol, nz, q);
    out.residual_commute = (out.Z * S - G1 * out.Z).norm();
    out.residual_gain = (K * out.Z - R).norm();
    out.feasible = out.residual_commute < 1e-8 && out.residual_gain < 1e-8;
    return out;
}

CascadeTransforms solve_cascade_transforms(const Matrix& A, const Matrix& B, const Matrix& C,
                                           const Matrix& E, const Matrix& F, const Matrix& S,
                                           const Matrix& G1) {
    const Eigen::Index n = A.rows();
    const Eigen::Index nz = G1.rows();
    const Eigen::Index p = C.rows();
    const Eigen::Index q = S.rows();
    if (B.rows() != n || B.cols() != nz || E.cols() != q || F.rows() != p)
        throw std::invalid_argument("solve_cascade_transforms: dimension mismatch");

    const Matrix In = Matrix::Identity(n, n);
    const Matrix Iz = Matrix::Identity(nz, nz);
    const Matrix Iq = Matrix::Identity(q, q);

    const Eigen::Index rows = n * q + p * q + nz * q;
    Matrix sys = Matrix::Zero(rows, (n + nz) * q);
    sys.block(0, 0, n * q, n * q) = kron(S.transpose(), In) - kron(Iq, A);
    sys.block(0, n * q, n * q, nz * q) = -kron(Iq, B);
    sys.block(n * q, 0, p * q, n * q) = kron(Iq, C);
    sys.block(n * q + p * q, n * q, nz * q, nz * q) = kron(S.transpose(), Iz) - kron(Iq, G1);

    Vector rhs = Vector::Zero(rows);
    rhs.head(n * q) = vec(E);
    rhs.segment(n * q, p * q) = vec(F);

    const Vector sol = sys.completeOrthogonalDecomposition().solve(rhs);

    CascadeTransforms out;
    out.X = unvec(sol.head(n * q), n, q);
    out.Z = unvec(sol.tail(nz * q), nz, q);
    out.residual = (sys * sol - rhs).norm();
    const double scale = 1.0 + A.norm() + B.norm() + C.norm() + E.norm() + F.norm() + S.norm();
    if (out.residual > 1e-8 * scale)
        throw std::runtime_error("solve_cascade_transforms: inconsistent system, residual " +
                                 std::to_string(out.residual));
    return out;
}

}  // namespace sdreg
