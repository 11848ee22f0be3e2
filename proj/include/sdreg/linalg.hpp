#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <random>

// Small dense linear-algebra helpers shared across the toolkit.

namespace sdreg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

bool all_finite(const Matrix& m);

// Kronecker product A (x) B.
Matrix kron(const Matrix& a, const Matrix& b);

// Column-major stacking, so vec(A X B) = (B^T (x) A) vec(X).
Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols);

// Matrix exponential, scaling-and-squaring with a degree-13 Pade approximant.
Matrix expm(const Matrix& a);

ComplexVector eigenvalues(const Matrix& a);

// max Re(lambda) over the spectrum
double spectral_abscissa(const Matrix& a);

double min_singular_value(const Matrix& a);
double min_singular_value(const ComplexMatrix& a);
double max_singular_value(const Matrix& a);

double min_eigenvalue_sym(const Matrix& a);
double max_eigenvalue_sym(const Matrix& a);

// Solves A^T P + P A = -Q for symmetric P (Kronecker vectorization).
Matrix solve_lyapunov(const Matrix& a, const Matrix& q);

// Stabilizing solution of A^T P + P A - P B R^-1 B^T P + Q = 0 via the
// stable invariant subspace of the Hamiltonian (eigenvector method).
Matrix solve_care(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r);

// u = -K x with K = R^-1 B^T P from solve_care.
Matrix lqr_gain(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r);

// Deterministic uniform double in [0, 1); mt19937_64 output mapped directly
// so sequences are identical across platforms.
inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& rng, double lo, double hi) {
    return lo + uniform_unit(rng) * (hi - lo);
}

Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0);

}  // namespace sdreg
