#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sdreg/linalg.hpp"

// Plant, exosystem, sampling model, and the extended-plant / regulator
// parameter bundles for the two architectures. All types are immutable
// after construction and all operations are pure.

namespace sdreg {

// LTI plant
//   x_p' = A_p x_p + B_p u + E_p w,  y_p = C_p x_p,  e_p = y_p - F_p w.
struct PlantModel {
    Matrix A_p, B_p, E_p, C_p, F_p;

    PlantModel(Matrix A, Matrix B, Matrix E, Matrix C, Matrix F);

    Eigen::Index n_p() const { return A_p.rows(); }
    Eigen::Index m_p() const { return B_p.cols(); }
    Eigen::Index p() const { return C_p.rows(); }
    Eigen::Index q() const { return E_p.cols(); }
};

// Autonomous generator w' = S w of references and disturbances.
struct Exosystem {
    Matrix S;

    explicit Exosystem(Matrix s);

    Eigen::Index q() const { return S.rows(); }
};

enum class SamplingMode { Periodic, UniformRandom, WorstCaseMax, ExplicitList };

SamplingMode sampling_mode_from_string(const std::string& s);
std::string to_string(SamplingMode m);

// Dwell-time model for the measurement instants: consecutive gaps in
// [T1, T2], first instant in (0, T2].
struct SamplingSpec {
    double T1 = 0.0;
    double T2 = 0.0;
    SamplingMode mode = SamplingMode::Periodic;
    std::optional<std::uint64_t> seed;
    std::optional<std::vector<double>> explicit_times;

    SamplingSpec(double t1, double t2, SamplingMode m,
                 std::optional<std::uint64_t> seed_ = std::nullopt,
                 std::optional<std::vector<double>> explicit_times_ = std::nullopt);
};

// Plant + internal model viewed as one continuous plant:
//   A = [[A_p, B_p K], [0, G1]],  B = [[0], [G2]],  C = [C_p, 0].
// C*B = 0 holds structurally and is asserted at assembly.
struct ExtendedPlantPre {
    Matrix A, B, C;
    Matrix K, G1, G2;
    Eigen::Index n_p = 0, n_z = 0, p = 0, n_v = 0;
};

ExtendedPlantPre build_extended_pre(const PlantModel& plant, const Matrix& K, const Matrix& G1,
                                    const Matrix& G2);

// Hybrid stabilizer + holding device parameters (pre-processing design).
struct RegulatorPre {
    Matrix A_c, B_c, C_c, D_c;  // stabilizer
    Matrix H, E;                // holding device
};

// Continuous stabilizer + internal model + hybrid observer parameters
// (post-processing design). Observer matrices T, L1, L2, H, H2 follow from
// the block formulas and are not stored.
struct RegulatorPost {
    Matrix A_k, B_k, C_k, D_k;  // stabilizer
    Matrix G1, G2, K;           // internal model
    Matrix Q, W;                // observer gains
};

struct ValidationReport {
    bool stabilizable = false;
    bool detectable = false;
    double stabilizability_margin = 0.0;  // min sigma_min over tested eigenvalues
    double detectability_margin = 0.0;
    std::vector<std::complex<double>> tested_eigenvalues;
};

// PBH rank tests over the eigenvalues of A_p with nonnegative real part.
ValidationReport validate_plant(const PlantModel& plant);

struct NeutralStabilityReport {
    bool neutrally_stable = false;
    std::vector<std::complex<double>> spectrum;
};

// True iff all eigenvalues lie on the imaginary axis (|Re| <= tol) and each
// axis eigenvalue is semisimple.
NeutralStabilityReport check_neutral_stability(const Matrix& S, double tol = 1e-9);

// Strictly increasing instants covering [0, horizon] under the dwell model.
// Deterministic given (mode, seed).
std::vector<double> generate_sampling_sequence(const SamplingSpec& spec, double horizon);

// Gap-by-gap validation of a sampling sequence; returns the index of the
// first offending gap (0 = first instant) or nullopt when valid.
std::optional<std::size_t> find_sampling_violation(const std::vector<double>& times, double T1,
                                                   double T2);

}  // namespace sdreg
