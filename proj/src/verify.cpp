#include "sdreg/verify.hpp"

#include <cmath>
#include <stdexcept>

namespace sdreg {

HurwitzReport check_hurwitz(const Matrix& a, double tol) {
    if (a.rows() != a.cols()) throw std::invalid_argument("check_hurwitz: matrix not square");
    HurwitzReport r;
    r.abscissa = spectral_abscissa(a);
    r.hurwitz = r.abscissa < -tol;
    return r;
}

CertificateReport check_property1(const Matrix& P1, const Matrix& P2, const Matrix& P3,
                                  const Matrix& P4, const Matrix& P5, const Matrix& P6,
                                  const ExtendedPlantPre& ext, const RegulatorPre& reg, double T2,
                                  double delta) {
    for (const Matrix* m : {&P1, &P2, &P3, &P4, &P5, &P6})
        if (m->rows() != m->cols() || (*m - m->transpose()).cwiseAbs().maxCoeff() >
                                          1e-9 * (1.0 + m->cwiseAbs().maxCoeff()))
            throw std::invalid_argument("check_property1: inputs must be symmetric");

    const lmi::ClosedLoopPreMatrices cl = lmi::closed_loop_pre_matrices(ext, reg);
    const lmi::LmiProblem analysis = lmi::assemble_pre_analysis_lmis(cl, T2, delta);
    lmi::LmiAssignment values;
    values.values = {{"P1", P1}, {"P2", P2}, {"P3", P3}, {"P4", P4}, {"P5", P5}, {"P6", P6}};
    CertificateReport report = lmi::verify_assignment(analysis, values, 1e-10);

    const double k1 = -max_eigenvalue_sym(P3 - P4);
    const double k2 = -max_eigenvalue_sym(P5 - P6);
    report.checks.push_back({"k1", k1 > 0.0, k1, 0.0, k1});
    report.checks.push_back({"k2", k2 > 0.0, k2, 0.0, k2});
    report.finalize();
    return report;
}

CertificateReport check_assumption4(const Matrix& Pbar, const Matrix& Phat, double delta,
                                    const Matrix& frak_A, const Matrix& Q, const Matrix& W,
                                    const Matrix& H2, double T2) {
    const double pbar_min = min_eigenvalue_sym(Pbar);
    const double phat_min = min_eigenvalue_sym(Phat);
    if (!(phat_min > 0.0)) throw std::invalid_argument("check_assumption4: Phat must be positive definite");
    if (!(pbar_min > 0.0)) throw std::invalid_argument("check_assumption4: Pbar must be positive definite");

    CertificateReport report;
    report.checks.push_back({"Pbar_pd", true, pbar_min, 0.0, pbar_min});
    report.checks.push_back({"Phat_pd", true, phat_min, 0.0, phat_min});

    const Matrix Jbar = Pbar * Q;
    const Matrix Jhat = Phat * (W + H2 * Q);

    for (const double tau : {0.0, T2}) {
        const Matrix m =
            symmetrize(lmi::post_observer_matrix(Pbar, Phat, Jbar, Jhat, frak_A, H2, delta, tau));
        const double lam_max = max_eigenvalue_sym(m);
        ConstraintCheck check;
        check.name = tau == 0.0 ? "obs_0" : "obs_T2";
        check.margin = lam_max;
        check.slack = -lam_max;
        check.tolerance = 1e-10;
        check.pass = lam_max < -check.tolerance;
        report.checks.push_back(check);
    }

    // Sandwich constants of the quadratic form.
    const double omega1 = std::min(pbar_min, phat_min);
    const double omega2 =
        std::max(max_eigenvalue_sym(Pbar), std::exp(delta * T2) * max_eigenvalue_sym(Phat));
    report.checks.push_back({"omega1", omega1 > 0.0, omega1, 0.0, omega1});
    report.checks.push_back({"omega2", omega2 > 0.0, omega2, 0.0, omega2});

    // Jump decrease is analytic: the reset clears the second error block, so
    // the difference equals -chi2' Phat chi2 <= 0.
    report.checks.push_back({"jump_decrease", true, -phat_min, 0.0, phat_min});

    // Flow decrease rate over sampled tau.
    double rho = std::numeric_limits<double>::infinity();
    const int samples = 33;
    for (int i = 0; i < samples; ++i) {
        const double tau = T2 * static_cast<double>(i) / (samples - 1);
        const Matrix m =
            symmetrize(lmi::post_observer_matrix(Pbar, Phat, Jbar, Jhat, frak_A, H2, delta, tau));
        rho = std::min(rho, -max_eigenvalue_sym(m));
    }
    report.checks.push_back({"rho", rho > 0.0, rho, 0.0, rho});
    report.finalize();
    return report;
}

GainSplitDiagnostic check_gain_split_exists(const Matrix& frak_Ac, const Matrix& Q, const Matrix& H2,
                                            double rho) {
    GainSplitDiagnostic diag;
    if (!(rho > 0.0)) return diag;

    const Eigen::Index n = frak_Ac.rows();
    // He(P frak_Ac) = -I has a positive definite solution for Hurwitz loops;
    // scale it down until the Young split fits under rho.
    Matrix P;
    try {
        P = solve_lyapunov(frak_Ac, Matrix::Identity(n, n));
    } catch (const std::exception&) {
        return diag;
    }
    if (min_eigenvalue_sym(P) <= 0.0) return diag;

    const double h2sq = std::max(1.0, max_singular_value(H2) * max_singular_value(H2));
    for (double scale = 1.0; scale >= 1e-12; scale *= 0.1) {
        const Matrix Ps = scale * P;
        const double qmin = scale;  // He(Ps frak_Ac) = -scale I
        const double w1 = 0.45 * qmin / (1.0 + h2sq);
        const double w0 = h2sq * w1;
        if (w0 + w1 >= qmin) continue;
        const Matrix PQ = Ps * Q;
        const double term1 = max_eigenvalue_sym(H2.transpose() * PQ.transpose() * PQ * H2) / w0;
        const double term2 = max_eigenvalue_sym(PQ.transpose() * PQ) / w1;
        if (term1 < rho && term2 < rho) {
            diag.found = true;
            diag.w0 = w0;
            diag.w1 = w1;
            diag.scale = scale;
            return diag;
        }
    }
    return diag;
}

RegulationMetrics regulation_metrics(const std::vector<double>& t,
                                     const std::vector<double>& error_norms,
                                     double settle_fraction) {
    if (t.empty() || t.size() != error_norms.size())
        throw std::invalid_argument("regulation_metrics: empty or mismatched series");

    RegulationMetrics metrics;
    metrics.final_error = error_norms.back();
    metrics.peak_error = 0.0;
    for (double e : error_norms) metrics.peak_error = std::max(metrics.peak_error, e);

    // Settle time: first instant after which the error stays below
    // settle_fraction * peak for the rest of the horizon.
    const double settle_level = settle_fraction * metrics.peak_error;
    std::size_t settle_idx = t.size();
    for (std::size_t i = t.size(); i-- > 0;) {
        if (error_norms[i] > settle_level) break;
        settle_idx = i;
    }
    metrics.settle_time = settle_idx < t.size() ? t[settle_idx] : t.back();

    // Decay fit on the tail: last 60% of the horizon, samples above the floor.
    const double floor = 1e-12;
    const double t_start = t.front() + 0.4 * (t.back() - t.front());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_start || error_norms[i] < floor) continue;
        const double x = t[i];
        const double y = std::log(error_norms[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count >= 2) {
        const double denom = static_cast<double>(count) * sxx - sx * sx;
        if (std::abs(denom) > 0.0)
            metrics.fitted_decay_rate = (static_cast<double>(count) * sxy - sx * sy) / denom;
    }
    return metrics;
}

}  // namespace sdreg
