#pragma once

#include <optional>

#include "sdreg/francis.hpp"
#include "sdreg/lmi.hpp"
#include "sdreg/model.hpp"
#include "sdreg/verify.hpp"

// End-to-end design pipelines: controller recovery from LMI decision
// variables and assemble -> solve -> recover -> verify orchestration for both
// architectures.

namespace sdreg {

struct PreDecisionVars {
    Matrix X, Y, V;
    Matrix K1, K2, K3, K4;
    Matrix P2, P3, P5, P6, P8;
    Matrix Z1, Z2;
    double alpha = 0.0, delta = 0.0;

    static PreDecisionVars from_assignment(const lmi::LmiAssignment& a, double alpha, double delta);
};

struct PostDecisionVars {
    Matrix Pbar, Phat, Jbar, Jhat;
    double delta = 0.0;

    static PostDecisionVars from_assignment(const lmi::LmiAssignment& a, double delta);
};

// Controller recovery (two-sided inverse of the synthesis change of
// variables); U = (I - X Y) V^-T is the canonical completion.
std::pair<RegulatorPre, Matrix> recover_controller_pre(const PreDecisionVars& vars,
                                                       const ExtendedPlantPre& ext);

// Q = Pbar^-1 Jbar, W = Phat^-1 Jhat - H2 Q.
std::pair<Matrix, Matrix> recover_observer_post(const PostDecisionVars& vars, const Matrix& H2);

// Default internal-model-to-plant gain: LQR (Q = R = I) on the
// error-feedback augmented pair, keeping the internal-model columns.
Matrix default_internal_model_gain(const PlantModel& plant, const Matrix& G1, const Matrix& G2);

struct PreSynthesisResult {
    RegulatorPre regulator;
    lmi::LmiAssignment assignment;
    Matrix U;
    double T2 = 0.0, alpha = 0.0, delta = 0.0;
    CertificateReport certificate;

    ExtendedPlantPre ext;
    Matrix K;            // gain baked into the extended plant
    Matrix P1, P4;       // analysis matrices reconstructed from the synthesis variables
    Matrix Xp, R, Z;     // steady-state transforms
    double coupling_residual = 0.0;  // ||X Y + U V^T - I||_F
};

struct SynthesisFailure {
    std::string reason;
    double worst_margin = 0.0;
    double alpha = 0.0, delta = 0.0;
};

struct PreSynthesisOutcome {
    bool feasible = false;
    std::optional<PreSynthesisResult> result;
    SynthesisFailure failure;
};

PreSynthesisOutcome synthesize_pre(const PlantModel& plant, const Exosystem& exo,
                                   const SamplingSpec& sampling, Eigen::Index copies, double alpha,
                                   double delta, std::optional<Matrix> K_override = std::nullopt,
                                   const lmi::SolveOptions& opts = {});

struct PostSynthesisResult {
    RegulatorPost regulator;
    lmi::LmiAssignment assignment;
    double T2 = 0.0, delta = 0.0;
    double hurwitz_margin = 0.0;  // -spectral abscissa of frak_Ac
    CertificateReport certificate;

    Matrix frak_A, frak_Ac, H2, H1, A_cl, B_cl;
    Matrix XM, Z;  // steady-state transforms
};

struct PostSynthesisOutcome {
    bool feasible = false;
    std::optional<PostSynthesisResult> result;
    SynthesisFailure failure;
};

// Stabilizer-plant-internal-model interconnection blocks shared by the post
// pipeline, the verifier CLI, and the simulator.
struct PostLoopMatrices {
    Matrix A_cl, B_cl, H1;
    Matrix frak_A, frak_Bc, H2, frak_Ac;
};

PostLoopMatrices build_post_loop(const PlantModel& plant, const Matrix& A_k, const Matrix& B_k,
                                 const Matrix& C_k, const Matrix& D_k, const Matrix& K,
                                 const Matrix& G1, const Matrix& G2);

PostSynthesisOutcome synthesize_post(const PlantModel& plant, const Exosystem& exo, const Matrix& A_k,
                                     const Matrix& B_k, const Matrix& C_k, const Matrix& D_k,
                                     const Matrix& K, const Matrix& G1, const Matrix& G2, double T2,
                                     double delta, const lmi::SolveOptions& opts = {});

enum class GridCellStatus { Feasible, Infeasible, Skipped };

struct GridCell {
    double alpha = 0.0, delta = 0.0;
    GridCellStatus status = GridCellStatus::Skipped;
};

std::vector<GridCell> grid_search_hyperparams(const PlantModel& plant, const Exosystem& exo,
                                              double T2, const std::vector<double>& alphas,
                                              const std::vector<double>& deltas,
                                              Eigen::Index copies = 0,
                                              const lmi::SolveOptions& opts = {});

}  // namespace sdreg
