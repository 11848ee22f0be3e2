#include "sdreg/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace sdreg {

bool all_finite(const Matrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (!std::isfinite(m(i, j))) return false;
    return true;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Vector vec(const Matrix& m) {
    return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    if (v.size() != rows * cols) throw std::invalid_argument("unvec: size mismatch");
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Matrix expm(const Matrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("expm: matrix not square");
    const Eigen::Index n = a.rows();
    const Matrix id = Matrix::Identity(n, n);

    // Degree-13 Pade coefficients.
    static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                               1187353796428800.0,  129060195264000.0,   10559470521600.0,
                               670442572800.0,      33522128640.0,       1323241920.0,
                               40840800.0,          960960.0,            16380.0,
                               182.0,               1.0};
    const double theta13 = 5.371920351148152;

    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    Matrix as = a;
    if (norm1 > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
        as = a / std::pow(2.0, squarings);
    }

    const Matrix a2 = as * as;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a2 * a4;
    const Matrix u =
        as * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
    const Matrix v =
        a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;

    Matrix r = (v - u).partialPivLu().solve(v + u);
    for (int i = 0; i < squarings; ++i) r = r * r;
    return r;
}

ComplexVector eigenvalues(const Matrix& a) {
    Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigenvalues: solver failed");
    return es.eigenvalues();
}

double spectral_abscissa(const Matrix& a) {
    return eigenvalues(a).real().maxCoeff();
}

double min_singular_value(const Matrix& a) {
    Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues().size() ? svd.singularValues().minCoeff() : 0.0;
}

double min_singular_value(const ComplexMatrix& a) {
    Eigen::JacobiSVD<ComplexMatrix> svd(a);
    return svd.singularValues().size() ? svd.singularValues().minCoeff() : 0.0;
}

double max_singular_value(const Matrix& a) {
    Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues().size() ? svd.singularValues().maxCoeff() : 0.0;
}

double min_eigenvalue_sym(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double max_eigenvalue_sym(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

Matrix solve_lyapunov(const Matrix& a, const Matrix& q) {
    const Eigen::Index n = a.rows();
    if (a.cols() != n || q.rows() != n || q.cols() != n)
        throw std::invalid_argument("solve_lyapunov: dimension mismatch");
    const Matrix id = Matrix::Identity(n, n);
    const Matrix lhs = kron(id, a.transpose()) + kron(a.transpose(), id);
    const Vector rhs = -vec(symmetrize(q));
    const Vector p = lhs.partialPivLu().solve(rhs);
    return symmetrize(unvec(p, n, n));
}

Matrix solve_care(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r) {
    const Eigen::Index n = a.rows();
    const Eigen::Index m = b.cols();
    if (a.cols() != n || b.rows() != n || q.rows() != n || q.cols() != n || r.rows() != m || r.cols() != m)
        throw std::invalid_argument("solve_care: dimension mismatch");

    const Matrix rinv = r.llt().solve(Matrix::Identity(m, m));
    Matrix ham(2 * n, 2 * n);
    ham << a, -b * rinv * b.transpose(), -q, -a.transpose();

    Eigen::EigenSolver<Matrix> es(ham);
    if (es.info() != Eigen::Success) throw std::runtime_error("solve_care: eigensolver failed");

    ComplexMatrix basis(2 * n, n);
    Eigen::Index count = 0;
    for (Eigen::Index i = 0; i < 2 * n; ++i) {
        if (es.eigenvalues()(i).real() < 0) {
            if (count == n) throw std::runtime_error("solve_care: too many stable eigenvalues");
            basis.col(count++) = es.eigenvectors().col(i);
        }
    }
    if (count != n)
        throw std::runtime_error("solve_care: Hamiltonian has eigenvalues on the imaginary axis");

    const ComplexMatrix u1 = basis.topRows(n);
    const ComplexMatrix u2 = basis.bottomRows(n);
    Eigen::FullPivLU<ComplexMatrix> lu(u1);
    if (!lu.isInvertible()) throw std::runtime_error("solve_care: singular invariant-subspace basis");
    const ComplexMatrix x = lu.solve(ComplexMatrix::Identity(n, n));
    return symmetrize((u2 * x).real());
}

Matrix lqr_gain(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r) {
    const Matrix p = solve_care(a, b, q, r);
    return r.llt().solve(b.transpose() * p);
}

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i)
            m(i, j) = scale * (2.0 * uniform_unit(rng) - 1.0);
    return m;
}

}  // namespace sdreg
