#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sdreg/model.hpp"

// Hybrid closed-loop simulation: exact linear flow propagation between
// sampling instants, jump maps at the instants, trajectories recorded on a
// hybrid time domain.

namespace sdreg {

struct HybridArc {
    std::vector<double> t;
    std::vector<int> j;
    std::vector<Vector> x;
    std::vector<std::string> labels;
    std::vector<std::size_t> jump_indices;  // index of each post-jump sample
    double T1 = 0.0, T2 = 0.0;
    bool aborted = false;
    std::string diagnostic;

    std::size_t size() const { return t.size(); }
    Eigen::Index state_dim() const { return x.empty() ? 0 : x.front().size(); }
};

// Returns a description of the first violated hybrid-time-domain invariant,
// or nullopt when the arc is valid.
std::optional<std::string> validate_arc(const HybridArc& arc);

// Transformed pre-processing closed loop
//   d/dt [xt; thetat] = [[Abb, Bbb], [Jbb, H]] [xt; thetat],  w' = S w,
// with jump thetat+ = 0, plus the transforms that recover the original
// coordinates.
struct ClosedLoopPre {
    Matrix Abb, Bbb, Jbb, H;
    Matrix S;
    Matrix Xp, Z;  // x_p = xt_p + Xp w, z = zt + Z w
    Matrix C, Fp;  // extended output map and reference map
    Eigen::Index n_p = 0, n_z = 0, p = 0, q = 0;

    std::vector<std::string> state_labels() const;
};

// Block assembly only; transforms left empty (filled by make_closed_loop_pre).
ClosedLoopPre assemble_closed_loop_pre(const ExtendedPlantPre& ext, const RegulatorPre& reg);

ClosedLoopPre make_closed_loop_pre(const PlantModel& plant, const Exosystem& exo,
                                   const ExtendedPlantPre& ext, const RegulatorPre& reg,
                                   const Matrix& Xp, const Matrix& Z);

// Post-processing closed loop in estimate/error coordinates
// (chi1, chit1, chit2) with jump chit2+ = 0.
struct ClosedLoopPost {
    Matrix frak_A, frak_Ac, H2, Q, W;
    Matrix S;
    Matrix XM, Z;  // x_M = xt_M + XM w, z = zt + Z w
    Matrix Fp;
    Eigen::Index n_p = 0, n_k = 0, n_z = 0, p = 0, q = 0;

    std::vector<std::string> state_labels() const;
};

ClosedLoopPost make_closed_loop_post(const PlantModel& plant, const Exosystem& exo,
                                     const RegulatorPost& reg, const Matrix& frak_A,
                                     const Matrix& frak_Ac, const Matrix& H2, const Matrix& XM,
                                     const Matrix& Z);

// Core engine: exact linear flows x' = F x between the scheduled jump
// instants, an arbitrary linear-state jump operation at each instant, and an
// explicit timer appended as the last coordinate.
HybridArc flow_jump_simulate(const Matrix& flow, const std::function<void(Vector&)>& jump_op,
                             const Vector& x0, const std::vector<double>& times, double t_end,
                             double dt, double T1, double T2, std::vector<std::string> labels);

// x0 is given in original coordinates [x_p; z; x_c; theta]; w0 is the
// exosystem initial state.
HybridArc simulate(const ClosedLoopPre& loop, const Vector& x0, const Vector& w0,
                   const std::vector<double>& times, double t_end, double dt, double T1, double T2);

// x0 in original coordinates [x_p; x_k; z; chi1; chi2].
HybridArc simulate(const ClosedLoopPost& loop, const Vector& x0, const Vector& w0,
                   const std::vector<double>& times, double t_end, double dt, double T1, double T2);

struct OutputSeries {
    std::vector<double> t;
    std::vector<int> j;
    std::vector<Vector> e_p;
    std::vector<Vector> y_p;
    std::vector<Vector> y_w;
    // theta for the pre architecture, ehat_p for the post architecture
    std::vector<Vector> companion;
    bool is_post = false;
};

OutputSeries extract_outputs(const HybridArc& arc, const ClosedLoopPre& loop);
OutputSeries extract_outputs(const HybridArc& arc, const ClosedLoopPost& loop);

struct LyapunovTrace {
    std::vector<double> t;
    std::vector<int> j;
    std::vector<double> value;
    double max_jump_increase = 0.0;
    double max_flow_increase = 0.0;
    bool decreasing_on_every_interval = true;
};

// V = xt' P1 xt + e^{delta tau} thetat' P2 thetat along a pre-processing arc.
LyapunovTrace lyapunov_trace(const HybridArc& arc, const Matrix& P1, const Matrix& P2, double delta);

// Delimited text table: header "t,j,<labels...>", 17 significant digits.
std::string arc_to_table(const HybridArc& arc, char delimiter = ',');

}  // namespace sdreg
