#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sdreg/certificate.hpp"
#include "sdreg/linalg.hpp"
#include "sdreg/model.hpp"

// Affine symmetric-matrix inequality systems: representation, assembly of the
// two synthesis families, a small dense feasibility solver, and post-hoc
// verification. The verifier, not the solver, is the source of truth.

namespace sdreg::lmi {

enum class Sense {
    NegSemidef,  // M(x) <= 0
    NegDef,      // M(x) <= -eps I
    PosDefEps,   // M(x) >= eps I
    Zero,        // M(x) == 0
};

std::string to_string(Sense s);

using Assignment = std::map<std::string, Matrix>;
using AffineMap = std::function<Matrix(const Assignment&)>;

struct VariableSpec {
    std::string name;
    Eigen::Index rows = 0, cols = 0;
    bool symmetric = false;
    // Flagged variables are required positive definite (floor kPosDefFloor)
    // by both the solver and the verifier.
    bool positive_definite = false;
};

struct Constraint {
    std::string name;
    std::string group;
    Eigen::Index size = 0;
    Sense sense = Sense::NegSemidef;
    double eps = 0.0;  // strictness gap for NegDef / PosDefEps
    AffineMap map;
};

inline constexpr double kPosDefFloor = 1e-6;
inline constexpr double kStrictGapCoeff = 1e-7;

struct LmiProblem {
    std::vector<VariableSpec> variables;
    std::vector<Constraint> constraints;
    // Assembly context (fixed matrices and scalars) kept for re-evaluation,
    // e.g. the tau-parameterized constraint family.
    std::map<std::string, Matrix> context;

    void add_variable(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                      bool symmetric = false, bool positive_definite = false);
    void add_constraint(const std::string& name, const std::string& group, Eigen::Index size,
                        Sense sense, double eps, AffineMap map);

    const VariableSpec& variable(const std::string& name) const;
    bool has_variable(const std::string& name) const;

    // Total number of scalar decision coordinates (symmetric variables count
    // the upper triangle once).
    Eigen::Index scalar_dimension() const;

    std::vector<std::string> groups() const;

    Assignment zero_assignment() const;

    // Evaluates one constraint, checks near-symmetry, returns the
    // symmetrized matrix.
    Matrix evaluate(const Constraint& c, const Assignment& values) const;
};

// Candidate solution; margins are recomputed from the values on demand.
struct LmiAssignment {
    Assignment values;

    CertificateReport margins(const LmiProblem& problem, double tol = 1e-12) const;
};

struct SolveOptions {
    double tol = 1e-9;
    int max_iter = 6000;  // total Newton iterations across the path
};

struct SolveResult {
    bool feasible = false;
    LmiAssignment assignment;  // best iterate, feasible or not
    double worst_slack = 0.0;
    std::string reason;  // set when infeasible: "stalled", "iteration-limit", ...
    int newton_iterations = 0;
};

// Feasibility search by analytic-center path following on the maximum
// eigenvalue. Any returned "feasible" must still pass verify_assignment.
SolveResult solve_feasibility(const LmiProblem& problem, const SolveOptions& opts = {});

// Per-constraint eigenvalue margins plus positive-definiteness checks of the
// flagged variables.
CertificateReport verify_assignment(const LmiProblem& problem, const LmiAssignment& assignment,
                                    double tol = 1e-12);

// ---------------------------------------------------------------------------
// Pre-processing synthesis family (hybrid stabilizer + holding device).
//
// Decision variables: X, Y, V, K1..K4, P2, P3, P5, P6, P8, Z1, Z2 with
// hyperparameters (T2, alpha, delta) fixed. Constraint groups:
//   eq43      [[Y, I], [I, X]] > 0
//   eq44      [[He(Pi1), Pi2, Psi^T], [., -P5, 0], [., 0, -P8]] <= 0
//   eq45      P3 - 2 alpha I + alpha^2 P8 < 0
//   eq46      P5 - P6 < 0
//   eq47      M2(0) <= 0, M2(T2) <= 0
//   eq53_V    V + V^T > 0
//   eq53_Pi1  -50 P1bar <= He(Pi1) <= -0.2 P1bar
// ---------------------------------------------------------------------------
LmiProblem assemble_pre_lmis(const ExtendedPlantPre& ext, double T2, double alpha, double delta);

// The tau-parameterized constraint matrix of the eq47 family, evaluated on a
// synthesis assignment. At tau = 0 and tau = T2 it reproduces the assembled
// endpoint constraints bit for bit.
Matrix m2_of_tau(const LmiProblem& problem, const LmiAssignment& assignment, double tau);

// ---------------------------------------------------------------------------
// Analysis family: stability certificate with the controller fixed.
// Decision variables P1..P6; groups eq26, eq27, eq28, eq29.
// ---------------------------------------------------------------------------
struct ClosedLoopPreMatrices {
    Matrix Abb, Bbb, Jbb, H;
};

ClosedLoopPreMatrices closed_loop_pre_matrices(const ExtendedPlantPre& ext, const RegulatorPre& reg);

LmiProblem assemble_pre_analysis_lmis(const ClosedLoopPreMatrices& cl, double T2, double delta);

// ---------------------------------------------------------------------------
// Post-processing observer design family. Decision variables Pbar, Phat,
// Jbar, Jhat; two strict constraints (tau = 0 and tau = T2).
// ---------------------------------------------------------------------------
LmiProblem assemble_post_lmis(const Matrix& frak_A, const Matrix& H2, double T2, double delta);

// The tau-parameterized observer constraint matrix with explicit values.
Matrix post_observer_matrix(const Matrix& P_bar, const Matrix& P_hat, const Matrix& J_bar,
                            const Matrix& J_hat, const Matrix& frak_A, const Matrix& H2,
                            double delta, double tau);

// Analysis family for a FIXED observer (Q, W): decision variables Pbar, Phat
// only, with Jbar = Pbar Q and Jhat = Phat (W + H2 Q) substituted.
LmiProblem assemble_post_analysis_lmis(const Matrix& frak_A, const Matrix& H2, const Matrix& Q,
                                       const Matrix& W, double T2, double delta);

// Text-document serialization (JSON) of problems and assignments for golden
// tests and cross-implementation comparison.
std::string problem_to_text(const LmiProblem& problem);
std::string assignment_to_text(const LmiAssignment& assignment);
LmiAssignment assignment_from_text(const std::string& text);

}  // namespace sdreg::lmi
