#pragma once

#include <optional>

#include "sdreg/certificate.hpp"
#include "sdreg/lmi.hpp"
#include "sdreg/model.hpp"

// Numerical certification: Hurwitz checks, matrix-inequality margins,
// quadratic-function conditions for the hybrid observer, and
// trajectory-level regulation metrics.

namespace sdreg {

struct HurwitzReport {
    bool hurwitz = false;
    double abscissa = 0.0;  // max Re(lambda)
};

HurwitzReport check_hurwitz(const Matrix& a, double tol = 1e-9);

// Flow/jump certificate for the pre-processing closed loop: evaluates the
// stability inequalities at the given candidate matrices and reports the
// implied quadratic decrease constants k1, k2.
CertificateReport check_property1(const Matrix& P1, const Matrix& P2, const Matrix& P3,
                                  const Matrix& P4, const Matrix& P5, const Matrix& P6,
                                  const ExtendedPlantPre& ext, const RegulatorPre& reg, double T2,
                                  double delta);

// Observer-loop certificate: endpoint inequalities, sandwich constants,
// analytic jump decrease, and the flow decrease rate over sampled tau.
CertificateReport check_assumption4(const Matrix& Pbar, const Matrix& Phat, double delta,
                                    const Matrix& frak_A, const Matrix& Q, const Matrix& W,
                                    const Matrix& H2, double T2);

// Confirms a valid Young-inequality split (w0, w1) exists for the cascade
// Lyapunov argument; diagnostic only, does not gate certification.
struct GainSplitDiagnostic {
    bool found = false;
    double w0 = 0.0, w1 = 0.0;
    double scale = 1.0;  // scaling applied to the quadratic term
};

GainSplitDiagnostic check_gain_split_exists(const Matrix& frak_Ac, const Matrix& Q, const Matrix& H2,
                                            double rho);

struct RegulationMetrics {
    double final_error = 0.0;
    double peak_error = 0.0;
    // Slope of the least-squares fit of log||e|| on the post-peak tail;
    // absent for an identically (near-)zero series.
    std::optional<double> fitted_decay_rate;
    double settle_time = 0.0;  // first time ||e|| stays below eps * peak
};

RegulationMetrics regulation_metrics(const std::vector<double>& t,
                                     const std::vector<double>& error_norms,
                                     double settle_fraction = 0.01);

}  // namespace sdreg
