#include <cmath>
#include <stdexcept>

#include "sdreg/lmi.hpp"

// Constraint families for the two regulator architectures. Block layouts
// follow the exact congruence/Schur chain so that a feasible synthesis
// assignment certifies the recovered controller by direct substitution.

namespace sdreg::lmi {

namespace {

double strict_gap(const Matrix& offset) {
    return kStrictGapCoeff * (1.0 + offset.cwiseAbs().maxCoeff());
}

Matrix scalar1x1(double v) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return m;
}

// [[Y, I], [V^T, 0]]
Matrix psi_matrix(const Matrix& Y, const Matrix& V) {
    const Eigen::Index nx = Y.rows();
    Matrix psi = Matrix::Zero(2 * nx, 2 * nx);
    psi.topLeftCorner(nx, nx) = Y;
    psi.topRightCorner(nx, nx) = Matrix::Identity(nx, nx);
    psi.bottomLeftCorner(nx, nx) = V.transpose();
    return psi;
}

Matrix p1bar_matrix(const Matrix& X, const Matrix& Y) {
    const Eigen::Index nx = X.rows();
    Matrix m = Matrix::Zero(2 * nx, 2 * nx);
    m.topLeftCorner(nx, nx) = Y;
    m.topRightCorner(nx, nx) = Matrix::Identity(nx, nx);
    m.bottomLeftCorner(nx, nx) = Matrix::Identity(nx, nx);
    m.bottomRightCorner(nx, nx) = X;
    return m;
}

// [[A Y + B K1, A + B K2 C], [K3, X A + K4 C]]
Matrix pi1_matrix(const Assignment& v, const Matrix& A, const Matrix& B, const Matrix& C) {
    const Eigen::Index nx = A.rows();
    Matrix pi1(2 * nx, 2 * nx);
    pi1.topLeftCorner(nx, nx) = A * v.at("Y") + B * v.at("K1");
    pi1.topRightCorner(nx, nx) = A + B * v.at("K2") * C;
    pi1.bottomLeftCorner(nx, nx) = v.at("K3");
    pi1.bottomRightCorner(nx, nx) = v.at("X") * A + v.at("K4") * C;
    return pi1;
}

// tau-slice of the hold-error constraint family:
// [[e^{dt}(He(Z1) - d P2) + P6, e^{dt}[Z1 C - P2 C A, Z2]], [., -P3]]
Matrix pre_m2_matrix(const Matrix& Z1, const Matrix& Z2, const Matrix& P2, const Matrix& P6,
                     const Matrix& P3, const Matrix& C, const Matrix& A, double delta, double tau) {
    const Eigen::Index p = Z1.rows();
    const Eigen::Index n2 = P3.rows();
    const double w = std::exp(delta * tau);

    Matrix lam2(p, n2);
    lam2.leftCols(n2 / 2) = Z1 * C - P2 * C * A;
    lam2.rightCols(n2 / 2) = Z2;

    Matrix m = Matrix::Zero(p + n2, p + n2);
    m.topLeftCorner(p, p) = w * (Z1 + Z1.transpose() - delta * P2) + P6;
    m.topRightCorner(p, n2) = w * lam2;
    m.bottomLeftCorner(n2, p) = (w * lam2).transpose();
    m.bottomRightCorner(n2, n2) = -P3;
    return m;
}

}  // namespace

LmiProblem assemble_pre_lmis(const ExtendedPlantPre& ext, double T2, double alpha, double delta) {
    if (!(T2 > 0.0)) throw std::invalid_argument("assemble_pre_lmis: T2 must be positive");
    if (!(alpha > 0.0)) throw std::invalid_argument("assemble_pre_lmis: alpha must be positive");
    if (!(delta > 0.0)) throw std::invalid_argument("assemble_pre_lmis: delta must be positive");

    const Matrix A = ext.A;
    const Matrix B = ext.B;
    const Matrix C = ext.C;
    const Eigen::Index nx = A.rows();
    const Eigen::Index p = C.rows();
    const Eigen::Index nv = B.cols();
    const Eigen::Index n2 = 2 * nx;

    LmiProblem prob;
    prob.add_variable("X", nx, nx, true);
    prob.add_variable("Y", nx, nx, true);
    prob.add_variable("V", nx, nx);
    prob.add_variable("K1", nv, nx);
    prob.add_variable("K2", nv, p);
    prob.add_variable("K3", nx, nx);
    prob.add_variable("K4", nx, p);
    prob.add_variable("P2", p, p, true, true);
    prob.add_variable("P3", n2, n2, true, true);
    prob.add_variable("P5", p, p, true, true);
    prob.add_variable("P6", p, p, true, true);
    prob.add_variable("P8", n2, n2, true, true);
    prob.add_variable("Z1", p, p);
    prob.add_variable("Z2", p, nx);

    prob.context["A"] = A;
    prob.context["B"] = B;
    prob.context["C"] = C;
    prob.context["T2"] = scalar1x1(T2);
    prob.context["alpha"] = scalar1x1(alpha);
    prob.context["delta"] = scalar1x1(delta);

    // eq43: coupled positivity of (X, Y).
    {
        AffineMap map = [](const Assignment& v) { return p1bar_matrix(v.at("X"), v.at("Y")); };
        const double eps = strict_gap(Matrix::Identity(n2, n2));
        prob.add_constraint("P1bar", "eq43", n2, Sense::PosDefEps, eps, map);
    }

    // eq44: congruence-transformed flow inequality after the Schur step.
    {
        AffineMap map = [A, B, C, nx, p](const Assignment& v) {
            const Eigen::Index n2l = 2 * nx;
            const Matrix pi1 = pi1_matrix(v, A, B, C);
            Matrix pi2(n2l, p);
            pi2.topRows(nx) = B * v.at("K2");
            pi2.bottomRows(nx) = v.at("K4");
            const Matrix psi = psi_matrix(v.at("Y"), v.at("V"));

            Matrix m = Matrix::Zero(n2l + p + n2l, n2l + p + n2l);
            m.block(0, 0, n2l, n2l) = pi1 + pi1.transpose();
            m.block(0, n2l, n2l, p) = pi2;
            m.block(n2l, 0, p, n2l) = pi2.transpose();
            m.block(0, n2l + p, n2l, n2l) = psi.transpose();
            m.block(n2l + p, 0, n2l, n2l) = psi;
            m.block(n2l, n2l, p, p) = -v.at("P5");
            m.block(n2l + p, n2l + p, n2l, n2l) = -v.at("P8");
            return m;
        };
        prob.add_constraint("M1hat", "eq44", n2 + p + n2, Sense::NegSemidef, 0.0, map);
    }

    // eq45: linearized inverse bound P3 < 2 alpha I - alpha^2 P8.
    {
        AffineMap map = [alpha, n2](const Assignment& v) {
            return Matrix(v.at("P3") - 2.0 * alpha * Matrix::Identity(n2, n2) +
                          alpha * alpha * v.at("P8"));
        };
        const double eps = strict_gap(2.0 * alpha * Matrix::Identity(n2, n2));
        prob.add_constraint("P3_P8_bound", "eq45", n2, Sense::NegDef, eps, map);
    }

    // eq46
    {
        AffineMap map = [](const Assignment& v) { return Matrix(v.at("P5") - v.at("P6")); };
        prob.add_constraint("P5_P6", "eq46", p, Sense::NegDef, kStrictGapCoeff, map);
    }

    // eq47: endpoint slices of the tau family.
    for (const double tau : {0.0, T2}) {
        AffineMap map = [A, C, delta, tau](const Assignment& v) {
            return pre_m2_matrix(v.at("Z1"), v.at("Z2"), v.at("P2"), v.at("P6"), v.at("P3"), C, A,
                                 delta, tau);
        };
        prob.add_constraint(tau == 0.0 ? "M2hat_0" : "M2hat_T2", "eq47", p + n2, Sense::NegSemidef,
                            0.0, map);
    }

    // eq53: V nonsingular via V + V^T > 0, plus the conditioning sandwich on He(Pi1).
    {
        AffineMap map = [](const Assignment& v) {
            return Matrix(v.at("V") + v.at("V").transpose());
        };
        prob.add_constraint("V_posdef", "eq53_V", nx, Sense::PosDefEps, kStrictGapCoeff, map);
    }
    {
        AffineMap lower = [A, B, C](const Assignment& v) {
            const Matrix pi1 = pi1_matrix(v, A, B, C);
            return Matrix(-(pi1 + pi1.transpose()) - 50.0 * p1bar_matrix(v.at("X"), v.at("Y")));
        };
        AffineMap upper = [A, B, C](const Assignment& v) {
            const Matrix pi1 = pi1_matrix(v, A, B, C);
            return Matrix(pi1 + pi1.transpose() + 0.2 * p1bar_matrix(v.at("X"), v.at("Y")));
        };
        prob.add_constraint("Pi1_lower", "eq53_Pi1", n2, Sense::NegSemidef, 0.0, lower);
        prob.add_constraint("Pi1_upper", "eq53_Pi1", n2, Sense::NegSemidef, 0.0, upper);
    }
    return prob;
}

Matrix m2_of_tau(const LmiProblem& problem, const LmiAssignment& assignment, double tau) {
    if (!problem.context.count("T2") || !problem.context.count("delta"))
        throw std::invalid_argument("m2_of_tau: problem carries no tau-family context");
    const double T2 = problem.context.at("T2")(0, 0);
    const double delta = problem.context.at("delta")(0, 0);
    if (tau < 0.0 || tau > T2) throw std::out_of_range("m2_of_tau: tau outside [0, T2]");

    const auto& v = assignment.values;
    if (problem.has_variable("Z1")) {
        return symmetrize(pre_m2_matrix(v.at("Z1"), v.at("Z2"), v.at("P2"), v.at("P6"), v.at("P3"),
                                        problem.context.at("C"), problem.context.at("A"), delta,
                                        tau));
    }
    // Analysis form: Z1 = P2 H, Z2 = P2 E come from the fixed hold gains.
    const Matrix& H = problem.context.at("H");
    const Matrix& Jbb = problem.context.at("J");
    const Matrix P2 = v.at("P2");
    const Eigen::Index p = P2.rows();
    const Eigen::Index n2 = v.at("P3").rows();
    const double w = std::exp(delta * tau);
    Matrix m = Matrix::Zero(p + n2, p + n2);
    m.topLeftCorner(p, p) = w * (P2 * H + H.transpose() * P2 - delta * P2) + v.at("P6");
    m.topRightCorner(p, n2) = w * P2 * Jbb;
    m.bottomLeftCorner(n2, p) = (w * P2 * Jbb).transpose();
    m.bottomRightCorner(n2, n2) = -v.at("P3");
    return symmetrize(m);
}

ClosedLoopPreMatrices closed_loop_pre_matrices(const ExtendedPlantPre& ext, const RegulatorPre& reg) {
    const Eigen::Index nx = ext.A.rows();
    const Eigen::Index p = ext.C.rows();
    ClosedLoopPreMatrices cl;
    cl.Abb = Matrix::Zero(2 * nx, 2 * nx);
    cl.Abb.topLeftCorner(nx, nx) = ext.A + ext.B * reg.D_c * ext.C;
    cl.Abb.topRightCorner(nx, nx) = ext.B * reg.C_c;
    cl.Abb.bottomLeftCorner(nx, nx) = reg.B_c * ext.C;
    cl.Abb.bottomRightCorner(nx, nx) = reg.A_c;

    cl.Bbb = Matrix::Zero(2 * nx, p);
    cl.Bbb.topRows(nx) = ext.B * reg.D_c;
    cl.Bbb.bottomRows(nx) = reg.B_c;

    cl.Jbb = Matrix::Zero(p, 2 * nx);
    cl.Jbb.leftCols(nx) = reg.H * ext.C - ext.C * ext.A;
    cl.Jbb.rightCols(nx) = reg.E;

    cl.H = reg.H;
    return cl;
}

LmiProblem assemble_pre_analysis_lmis(const ClosedLoopPreMatrices& cl, double T2, double delta) {
    if (!(T2 > 0.0)) throw std::invalid_argument("assemble_pre_analysis_lmis: T2 must be positive");
    if (!(delta > 0.0)) throw std::invalid_argument("assemble_pre_analysis_lmis: delta must be positive");

    const Eigen::Index n2 = cl.Abb.rows();
    const Eigen::Index p = cl.Bbb.cols();
    const Matrix Abb = cl.Abb;
    const Matrix Bbb = cl.Bbb;
    const Matrix Jbb = cl.Jbb;
    const Matrix H = cl.H;

    LmiProblem prob;
    prob.add_variable("P1", n2, n2, true, true);
    prob.add_variable("P2", p, p, true, true);
    prob.add_variable("P3", n2, n2, true, true);
    prob.add_variable("P4", n2, n2, true, true);
    prob.add_variable("P5", p, p, true, true);
    prob.add_variable("P6", p, p, true, true);

    prob.context["A"] = Abb;
    prob.context["B"] = Bbb;
    prob.context["J"] = Jbb;
    prob.context["H"] = H;
    prob.context["T2"] = scalar1x1(T2);
    prob.context["delta"] = scalar1x1(delta);

    prob.add_constraint("P3_P4", "eq26", n2, Sense::NegDef, kStrictGapCoeff,
                        [](const Assignment& v) { return Matrix(v.at("P3") - v.at("P4")); });
    prob.add_constraint("P5_P6", "eq27", p, Sense::NegDef, kStrictGapCoeff,
                        [](const Assignment& v) { return Matrix(v.at("P5") - v.at("P6")); });

    {
        AffineMap map = [Abb, Bbb, n2, p](const Assignment& v) {
            const Matrix& P1 = v.at("P1");
            Matrix m = Matrix::Zero(n2 + p, n2 + p);
            m.topLeftCorner(n2, n2) = P1 * Abb + Abb.transpose() * P1 + v.at("P4");
            m.topRightCorner(n2, p) = P1 * Bbb;
            m.bottomLeftCorner(p, n2) = (P1 * Bbb).transpose();
            m.bottomRightCorner(p, p) = -v.at("P5");
            return m;
        };
        prob.add_constraint("M1", "eq28", n2 + p, Sense::NegSemidef, 0.0, map);
    }

    for (const double tau : {0.0, T2}) {
        AffineMap map = [H, Jbb, delta, tau, n2, p](const Assignment& v) {
            const Matrix& P2 = v.at("P2");
            const double w = std::exp(delta * tau);
            Matrix m = Matrix::Zero(p + n2, p + n2);
            m.topLeftCorner(p, p) =
                w * (P2 * H + H.transpose() * P2 - delta * P2) + v.at("P6");
            m.topRightCorner(p, n2) = w * P2 * Jbb;
            m.bottomLeftCorner(n2, p) = (w * P2 * Jbb).transpose();
            m.bottomRightCorner(n2, n2) = -v.at("P3");
            return m;
        };
        prob.add_constraint(tau == 0.0 ? "M2_0" : "M2_T2", "eq29", p + n2, Sense::NegSemidef, 0.0,
                            map);
    }
    return prob;
}

Matrix post_observer_matrix(const Matrix& P_bar, const Matrix& P_hat, const Matrix& J_bar,
                            const Matrix& J_hat, const Matrix& frak_A, const Matrix& H2,
                            double delta, double tau) {
    const Eigen::Index n = frak_A.rows();
    const Eigen::Index p = H2.rows();
    const double w = std::exp(delta * tau);

    const Matrix top_left =
        P_bar * frak_A - J_bar * H2 + (P_bar * frak_A - J_bar * H2).transpose();
    const Matrix cross = -J_bar + w * (-P_hat * H2 * frak_A + J_hat * H2).transpose();

    Matrix m = Matrix::Zero(n + p, n + p);
    m.topLeftCorner(n, n) = top_left;
    m.topRightCorner(n, p) = cross;
    m.bottomLeftCorner(p, n) = cross.transpose();
    m.bottomRightCorner(p, p) = w * (-delta * P_hat + J_hat + J_hat.transpose());
    return m;
}

LmiProblem assemble_post_analysis_lmis(const Matrix& frak_A, const Matrix& H2, const Matrix& Q,
                                       const Matrix& W, double T2, double delta) {
    if (!(delta > 0.0) || !(T2 > 0.0))
        throw std::invalid_argument("assemble_post_analysis_lmis: need T2, delta > 0");
    const Eigen::Index n = frak_A.rows();
    const Eigen::Index p = H2.rows();

    LmiProblem prob;
    prob.add_variable("Pbar", n, n, true, true);
    prob.add_variable("Phat", p, p, true, true);
    prob.context["frakA"] = frak_A;
    prob.context["H2"] = H2;
    prob.context["Q"] = Q;
    prob.context["W"] = W;
    prob.context["T2"] = scalar1x1(T2);
    prob.context["delta"] = scalar1x1(delta);

    const Matrix fa = frak_A;
    const Matrix h2 = H2;
    const Matrix q = Q;
    const Matrix w = W;
    for (const double tau : {0.0, T2}) {
        AffineMap map = [fa, h2, q, w, delta, tau](const Assignment& v) {
            const Matrix jbar = v.at("Pbar") * q;
            const Matrix jhat = v.at("Phat") * (w + h2 * q);
            return post_observer_matrix(v.at("Pbar"), v.at("Phat"), jbar, jhat, fa, h2, delta, tau);
        };
        prob.add_constraint(tau == 0.0 ? "obs_0" : "obs_T2", "obs", n + p, Sense::NegDef,
                            kStrictGapCoeff, map);
    }
    return prob;
}

LmiProblem assemble_post_lmis(const Matrix& frak_A, const Matrix& H2, double T2, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("assemble_post_lmis: delta must be positive");
    if (!(T2 > 0.0)) throw std::invalid_argument("assemble_post_lmis: T2 must be positive");
    const Eigen::Index n = frak_A.rows();
    if (frak_A.cols() != n || H2.cols() != n)
        throw std::invalid_argument("assemble_post_lmis: dimension mismatch");
    const Eigen::Index p = H2.rows();

    LmiProblem prob;
    prob.add_variable("Pbar", n, n, true, true);
    prob.add_variable("Phat", p, p, true, true);
    prob.add_variable("Jbar", n, p);
    prob.add_variable("Jhat", p, p);

    prob.context["frakA"] = frak_A;
    prob.context["H2"] = H2;
    prob.context["T2"] = scalar1x1(T2);
    prob.context["delta"] = scalar1x1(delta);

    const Matrix fa = frak_A;
    const Matrix h2 = H2;
    for (const double tau : {0.0, T2}) {
        AffineMap map = [fa, h2, delta, tau](const Assignment& v) {
            return post_observer_matrix(v.at("Pbar"), v.at("Phat"), v.at("Jbar"), v.at("Jhat"), fa,
                                        h2, delta, tau);
        };
        prob.add_constraint(tau == 0.0 ? "obs_0" : "obs_T2", "obs", n + p, Sense::NegDef,
                            kStrictGapCoeff, map);
    }
    return prob;
}

}  // namespace sdreg::lmi
