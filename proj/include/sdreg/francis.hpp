#pragma once

#include <vector>

#include "sdreg/linalg.hpp"

// Regulator (Francis) equations, non-resonance rank checks, and p-copy
// internal model construction.

namespace sdreg {

// Solution of  X S = A X + B R + E,  0 = C X - F.
struct FrancisSolution {
    Matrix X, R;
    bool unique = true;  // false when the system matrix was rank deficient

    // Residuals recomputed from the stored inputs.
    double residual_dynamics(const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& E,
                             const Matrix& F, const Matrix& S) const {
        (void)C;
        (void)F;
        return (X * S - A * X - B * R - E).norm();
    }
    double residual_output(const Matrix& C, const Matrix& F) const { return (C * X - F).norm(); }
};

struct NonResonanceReport {
    bool full_rank = false;
    // min singular value of [[A - lambda I, B], [C, 0]] per eigenvalue of S
    std::vector<double> margins;
    std::vector<std::complex<double>> lambdas;
};

// Row-rank test of the non-resonance pencil at every eigenvalue of S.
NonResonanceReport check_nonresonance(const Matrix& A, const Matrix& B, const Matrix& C,
                                      const Matrix& S);

// Dense Kronecker-vectorized solve of the regulator equations.
// Throws when the least-squares residual is beyond the solvability threshold.
FrancisSolution solve_francis(const Matrix& A, const Matrix& B, const Matrix& C, const Matrix& E,
                              const Matrix& F, const Matrix& S);

// p-copy internal model: block diagonal of companion-form realizations of
// the minimal polynomial of S, one copy per error channel.
struct InternalModel {
    Matrix G1, G2;
    Eigen::Index copies = 0;
    std::vector<Eigen::Index> block_dims;
};

InternalModel build_internal_model(const Matrix& S, Eigen::Index copies);

// Solves Z S = G1 Z, K Z = R as one stacked least-squares system.
struct ZSolution {
    bool feasible = false;
    Matrix Z;
    double residual_commute = 0.0;  // ||Z S - G1 Z||
    double residual_gain = 0.0;     // ||K Z - R||
};

ZSolution solve_Z(const Matrix& S, const Matrix& G1, const Matrix& K, const Matrix& R);

// Steady-state transforms for the stabilizer-plant + internal-model cascade:
// solves  X S = A X + B Z + E,  0 = C X - F,  Z S = G1 Z  jointly.
struct CascadeTransforms {
    Matrix X, Z;
    double residual = 0.0;
};

CascadeTransforms solve_cascade_transforms(const Matrix& A, const Matrix& B, const Matrix& C,
                                           const Matrix& E, const Matrix& F, const Matrix& S,
                                           const Matrix& G1);

}  // namespace sdreg
