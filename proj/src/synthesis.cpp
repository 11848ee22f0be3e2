#include "sdreg/synthesis.hpp"

#include <cmath>
#include <stdexcept>

namespace sdreg {

namespace {

Matrix pick(const lmi::LmiAssignment& a, const std::string& name) {
    auto it = a.values.find(name);
    if (it == a.values.end())
        throw std::invalid_argument("assignment is missing variable " + name);
    return it->second;
}

}  // namespace

PreDecisionVars PreDecisionVars::from_assignment(const lmi::LmiAssignment& a, double alpha,
                                                 double delta) {
    PreDecisionVars v;
    v.X = pick(a, "X");
    v.Y = pick(a, "Y");
    v.V = pick(a, "V");
    v.K1 = pick(a, "K1");
    v.K2 = pick(a, "K2");
    v.K3 = pick(a, "K3");
    v.K4 = pick(a, "K4");
    v.P2 = pick(a, "P2");
    v.P3 = pick(a, "P3");
    v.P5 = pick(a, "P5");
    v.P6 = pick(a, "P6");
    v.P8 = pick(a, "P8");
    v.Z1 = pick(a, "Z1");
    v.Z2 = pick(a, "Z2");
    v.alpha = alpha;
    v.delta = delta;
    return v;
}

PostDecisionVars PostDecisionVars::from_assignment(const lmi::LmiAssignment& a, double delta) {
    PostDecisionVars v;
    v.Pbar = pick(a, "Pbar");
    v.Phat = pick(a, "Phat");
    v.Jbar = pick(a, "Jbar");
    v.Jhat = pick(a, "Jhat");
    v.delta = delta;
    return v;
}

std::pair<RegulatorPre, Matrix> recover_controller_pre(const PreDecisionVars& vars,
                                                       const ExtendedPlantPre& ext) {
    const Matrix& A = ext.A;
    const Matrix& B = ext.B;
    const Matrix& C = ext.C;
    const Eigen::Index nx = A.rows();

    const double v_scale = std::max(1.0, max_singular_value(vars.V));
    if (min_singular_value(vars.V) < 1e-10 * v_scale)
        throw std::runtime_error("recover_controller_pre: V is numerically singular");

    const Matrix Vinv = vars.V.partialPivLu().solve(Matrix::Identity(nx, nx));
    const Matrix U = (Matrix::Identity(nx, nx) - vars.X * vars.Y) * Vinv.transpose();
    const double u_scale = std::max(1.0, max_singular_value(U));
    if (min_singular_value(U) < 1e-10 * u_scale)
        throw std::runtime_error("recover_controller_pre: U = (I - X Y) V^-T is numerically singular");
    const Matrix Uinv = U.partialPivLu().solve(Matrix::Identity(nx, nx));

    const Matrix CY = C * vars.Y;

    RegulatorPre reg;
    reg.D_c = vars.K2;
    reg.C_c = (vars.K1 - vars.K2 * CY) * Vinv.transpose();
    reg.B_c = Uinv * (vars.K4 - vars.X * B * vars.K2);
    reg.A_c = Uinv *
              (vars.K3 - vars.X * A * vars.Y - vars.K4 * CY - vars.X * B * vars.K1 +
               vars.X * B * vars.K2 * CY) *
              Vinv.transpose();

    // Hold gains from the linearizing substitution Z1 = P2 H, Z2 = P2 E.
    Eigen::LLT<Matrix> p2(vars.P2);
    if (p2.info() != Eigen::Success)
        throw std::runtime_error("recover_controller_pre: P2 is not positive definite");
    reg.H = p2.solve(vars.Z1);
    reg.E = p2.solve(vars.Z2);
    return {reg, U};
}

std::pair<Matrix, Matrix> recover_observer_post(const PostDecisionVars& vars, const Matrix& H2) {
    Eigen::LLT<Matrix> pbar(vars.Pbar);
    Eigen::LLT<Matrix> phat(vars.Phat);
    if (pbar.info() != Eigen::Success)
        throw std::runtime_error("recover_observer_post: Pbar is not positive definite");
    if (phat.info() != Eigen::Success)
        throw std::runtime_error("recover_observer_post: Phat is not positive definite");
    const Matrix Q = pbar.solve(vars.Jbar);
    const Matrix W = phat.solve(vars.Jhat) - H2 * Q;
    return {Q, W};
}

Matrix default_internal_model_gain(const PlantModel& plant, const Matrix& G1, const Matrix& G2) {
    const Eigen::Index n_p = plant.n_p();
    const Eigen::Index n_z = G1.rows();
    if (G2.cols() != plant.p())
        throw std::invalid_argument("default_internal_model_gain: G2 column count must match p");

    Matrix A_im = Matrix::Zero(n_p + n_z, n_p + n_z);
    A_im.topLeftCorner(n_p, n_p) = plant.A_p;
    A_im.bottomLeftCorner(n_z, n_p) = G2 * plant.C_p;
    A_im.bottomRightCorner(n_z, n_z) = G1;
    Matrix B_im = Matrix::Zero(n_p + n_z, plant.m_p());
    B_im.topRows(n_p) = plant.B_p;

    Matrix F;
    try {
        F = lqr_gain(A_im, B_im, Matrix::Identity(n_p + n_z, n_p + n_z),
                     Matrix::Identity(plant.m_p(), plant.m_p()));
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("default_internal_model_gain: augmented pair not "
                                             "LQR-stabilizable: ") +
                                 e.what());
    }
    const Matrix K = -F.rightCols(n_z);

    // The gain must excite every internal-model mode.
    const ComplexVector lambdas = eigenvalues(G1);
    for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
        ComplexMatrix pencil(n_z + K.rows(), n_z);
        pencil.topRows(n_z) =
            G1.cast<std::complex<double>>() - lambdas(i) * ComplexMatrix::Identity(n_z, n_z);
        pencil.bottomRows(K.rows()) = K.cast<std::complex<double>>();
        if (min_singular_value(pencil) < 1e-9 * std::max(1.0, max_singular_value(G1)))
            throw std::runtime_error(
                "default_internal_model_gain: gain leaves an internal-model mode unobservable");
    }
    return K;
}

namespace {

// Eq.-(38)-style reconstruction of the full Lyapunov matrix from the split
// variables; positive definite whenever P1bar > 0 and V is nonsingular.
Matrix reconstruct_p1(const PreDecisionVars& vars, const Matrix& U) {
    const Eigen::Index nx = vars.X.rows();
    const Matrix Vinv = vars.V.partialPivLu().solve(Matrix::Identity(nx, nx));
    const Matrix W = -Vinv * (vars.Y - vars.Y * vars.X * vars.Y) * Vinv.transpose();
    Matrix P1(2 * nx, 2 * nx);
    P1.topLeftCorner(nx, nx) = vars.X;
    P1.topRightCorner(nx, nx) = U;
    P1.bottomLeftCorner(nx, nx) = U.transpose();
    P1.bottomRightCorner(nx, nx) = W;
    return symmetrize(P1);
}

lmi::SolveResult solve_with_retry(const lmi::LmiProblem& problem, const lmi::SolveOptions& opts) {
    lmi::SolveResult res = lmi::solve_feasibility(problem, opts);
    if (res.feasible) {
        const CertificateReport check = lmi::verify_assignment(problem, res.assignment);
        if (check.overall) return res;
        // Margins that fail by less than an order of magnitude get one
        // re-solve with tightened gaps before reporting infeasible.
        double shortfall = 0.0;
        for (const auto& c : check.checks)
            if (!c.pass) shortfall = std::max(shortfall, -c.slack);
        if (shortfall <= 10.0 * opts.tol) {
            lmi::LmiProblem tightened = problem;
            for (auto& c : tightened.constraints) c.eps *= 10.0;
            lmi::SolveResult retry = lmi::solve_feasibility(tightened, opts);
            retry.feasible = retry.feasible && lmi::verify_assignment(problem, retry.assignment).overall;
            return retry;
        }
        res.feasible = false;
        res.reason = "verification-failed";
    }
    return res;
}

}  // namespace

PreSynthesisOutcome synthesize_pre(const PlantModel& plant, const Exosystem& exo,
                                   const SamplingSpec& sampling, Eigen::Index copies, double alpha,
                                   double delta, std::optional<Matrix> K_override,
                                   const lmi::SolveOptions& opts) {
    const auto plant_report = validate_plant(plant);
    if (!plant_report.stabilizable || !plant_report.detectable)
        throw std::invalid_argument("synthesize_pre: plant fails stabilizability/detectability");
    if (!check_neutral_stability(exo.S).neutrally_stable)
        throw std::invalid_argument("synthesize_pre: exosystem is not neutrally stable");
    if (!check_nonresonance(plant.A_p, plant.B_p, plant.C_p, exo.S).full_rank)
        throw std::invalid_argument("synthesize_pre: non-resonance condition fails");
    if (copies <= 0) copies = plant.p();

    const InternalModel im = build_internal_model(exo.S, copies);
    const Matrix K = K_override ? *K_override : default_internal_model_gain(plant, im.G1, im.G2);
    const ExtendedPlantPre ext = build_extended_pre(plant, K, im.G1, im.G2);

    const double T2 = sampling.T2;
    const lmi::LmiProblem problem = lmi::assemble_pre_lmis(ext, T2, alpha, delta);
    const lmi::SolveResult solved = solve_with_retry(problem, opts);

    PreSynthesisOutcome outcome;
    outcome.failure = {solved.reason, -solved.worst_slack, alpha, delta};
    if (!solved.feasible) return outcome;

    const PreDecisionVars vars = PreDecisionVars::from_assignment(solved.assignment, alpha, delta);
    auto [reg, U] = recover_controller_pre(vars, ext);

    PreSynthesisResult result;
    result.regulator = reg;
    result.assignment = solved.assignment;
    result.U = U;
    result.T2 = T2;
    result.alpha = alpha;
    result.delta = delta;
    result.ext = ext;
    result.K = K;
    result.coupling_residual =
        (vars.X * vars.Y + U * vars.V.transpose() - Matrix::Identity(ext.A.rows(), ext.A.rows()))
            .norm();
    if (result.coupling_residual > 1e-9 * (1.0 + vars.X.norm() * vars.Y.norm()))
        throw std::runtime_error("synthesize_pre: coupling identity X Y + U V^T = I violated");

    // Certificate: the stability inequalities evaluated at the matrices
    // implied by the synthesis variables.
    result.P1 = reconstruct_p1(vars, U);
    result.P4 = vars.P8.llt().solve(Matrix::Identity(vars.P8.rows(), vars.P8.cols()));
    const lmi::ClosedLoopPreMatrices cl = lmi::closed_loop_pre_matrices(ext, reg);
    const lmi::LmiProblem analysis = lmi::assemble_pre_analysis_lmis(cl, T2, delta);
    lmi::LmiAssignment analysis_values;
    analysis_values.values = {{"P1", result.P1}, {"P2", vars.P2}, {"P3", vars.P3},
                              {"P4", result.P4}, {"P5", vars.P5}, {"P6", vars.P6}};
    result.certificate = lmi::verify_assignment(analysis, analysis_values, 1e-9);

    const FrancisSolution francis =
        solve_francis(plant.A_p, plant.B_p, plant.C_p, plant.E_p, plant.F_p, exo.S);
    result.Xp = francis.X;
    result.R = francis.R;
    const ZSolution z = solve_Z(exo.S, im.G1, K, francis.R);
    if (!z.feasible)
        throw std::runtime_error("synthesize_pre: internal-model transform Z is infeasible");
    result.Z = z.Z;

    outcome.feasible = result.certificate.overall;
    if (!outcome.feasible) {
        outcome.failure = {"certificate-failed", result.certificate.worst_slack(), alpha, delta};
        return outcome;
    }
    outcome.result = std::move(result);
    return outcome;
}

PostLoopMatrices build_post_loop(const PlantModel& plant, const Matrix& A_k, const Matrix& B_k,
                                 const Matrix& C_k, const Matrix& D_k, const Matrix& K,
                                 const Matrix& G1, const Matrix& G2) {
    const Eigen::Index n_p = plant.n_p();
    const Eigen::Index n_k = A_k.rows();
    const Eigen::Index n_z = G1.rows();
    const Eigen::Index p = plant.p();
    if (A_k.cols() != n_k || B_k.rows() != n_k || C_k.rows() != plant.m_p() || C_k.cols() != n_k ||
        D_k.rows() != plant.m_p() || D_k.cols() != B_k.cols() || K.cols() != n_z ||
        K.rows() != B_k.cols() || G1.cols() != n_z || G2.rows() != n_z)
        throw std::invalid_argument("build_post_loop: stabilizer dimension mismatch");

    PostLoopMatrices loop;
    loop.A_cl = Matrix::Zero(n_p + n_k, n_p + n_k);
    loop.A_cl.topLeftCorner(n_p, n_p) = plant.A_p;
    loop.A_cl.topRightCorner(n_p, n_k) = plant.B_p * C_k;
    loop.A_cl.bottomRightCorner(n_k, n_k) = A_k;

    loop.B_cl = Matrix(n_p + n_k, n_z);
    loop.B_cl.topRows(n_p) = plant.B_p * D_k * K;
    loop.B_cl.bottomRows(n_k) = B_k * K;

    loop.H1 = Matrix::Zero(p, n_p + n_k);
    loop.H1.leftCols(n_p) = plant.C_p;

    const Eigen::Index nbar = n_p + n_k + n_z;
    loop.frak_A = Matrix::Zero(nbar, nbar);
    loop.frak_A.topLeftCorner(n_p + n_k, n_p + n_k) = loop.A_cl;
    loop.frak_A.topRightCorner(n_p + n_k, n_z) = loop.B_cl;
    loop.frak_A.bottomRightCorner(n_z, n_z) = G1;

    loop.H2 = Matrix::Zero(p, nbar);
    loop.H2.leftCols(n_p + n_k) = loop.H1;

    loop.frak_Bc = Matrix::Zero(nbar, p);
    loop.frak_Bc.bottomRows(n_z) = G2;

    loop.frak_Ac = loop.frak_A + loop.frak_Bc * loop.H2;
    return loop;
}

PostSynthesisOutcome synthesize_post(const PlantModel& plant, const Exosystem& exo, const Matrix& A_k,
                                     const Matrix& B_k, const Matrix& C_k, const Matrix& D_k,
                                     const Matrix& K, const Matrix& G1, const Matrix& G2, double T2,
                                     double delta, const lmi::SolveOptions& opts) {
    const Eigen::Index n_p = plant.n_p();
    const Eigen::Index n_k = A_k.rows();

    const PostLoopMatrices pl = build_post_loop(plant, A_k, B_k, C_k, D_k, K, G1, G2);
    const Matrix& A_cl = pl.A_cl;
    const Matrix& B_cl = pl.B_cl;
    const Matrix& H1 = pl.H1;
    const Matrix& frak_A = pl.frak_A;
    const Matrix& H2 = pl.H2;
    const Matrix& frak_Ac = pl.frak_Ac;
    const double abscissa = spectral_abscissa(frak_Ac);
    if (!(abscissa < 0.0)) {
        const ComplexVector lam = eigenvalues(frak_Ac);
        Eigen::Index worst = 0;
        for (Eigen::Index i = 1; i < lam.size(); ++i)
            if (lam(i).real() > lam(worst).real()) worst = i;
        throw std::invalid_argument(
            "synthesize_post: closed-loop matrix is not Hurwitz, offending eigenvalue " +
            std::to_string(lam(worst).real()) + (lam(worst).imag() >= 0 ? "+" : "") +
            std::to_string(lam(worst).imag()) + "i");
    }

    const lmi::LmiProblem problem = lmi::assemble_post_lmis(frak_A, H2, T2, delta);
    const lmi::SolveResult solved = solve_with_retry(problem, opts);

    PostSynthesisOutcome outcome;
    outcome.failure = {solved.reason, -solved.worst_slack, 0.0, delta};
    if (!solved.feasible) return outcome;

    const PostDecisionVars vars = PostDecisionVars::from_assignment(solved.assignment, delta);
    auto [Q, W] = recover_observer_post(vars, H2);

    PostSynthesisResult result;
    result.regulator = {A_k, B_k, C_k, D_k, G1, G2, K, Q, W};
    result.assignment = solved.assignment;
    result.T2 = T2;
    result.delta = delta;
    result.hurwitz_margin = -abscissa;
    result.frak_A = frak_A;
    result.frak_Ac = frak_Ac;
    result.H2 = H2;
    result.H1 = H1;
    result.A_cl = A_cl;
    result.B_cl = B_cl;

    result.certificate = check_assumption4(vars.Pbar, vars.Phat, delta, frak_A, Q, W, H2, T2);
    {
        // Theorem-level consequence: the cascade keeps the regulator
        // equations solvable whenever the loop is Hurwitz.
        const auto nr = check_nonresonance(A_cl, B_cl, H1, exo.S);
        ConstraintCheck check;
        check.name = "nonresonance_Acl";
        check.pass = nr.full_rank;
        double m = std::numeric_limits<double>::infinity();
        for (double v : nr.margins) m = std::min(m, v);
        check.margin = m;
        check.slack = m;
        result.certificate.checks.push_back(check);
        result.certificate.finalize();
    }

    Matrix E_cl = Matrix::Zero(n_p + n_k, plant.q());
    E_cl.topRows(n_p) = plant.E_p;
    const CascadeTransforms transforms =
        solve_cascade_transforms(A_cl, B_cl, H1, E_cl, plant.F_p, exo.S, G1);
    result.XM = transforms.X;
    result.Z = transforms.Z;

    outcome.feasible = result.certificate.overall;
    if (!outcome.feasible) {
        outcome.failure = {"certificate-failed", result.certificate.worst_slack(), 0.0, delta};
        return outcome;
    }
    outcome.result = std::move(result);
    return outcome;
}

std::vector<GridCell> grid_search_hyperparams(const PlantModel& plant, const Exosystem& exo,
                                              double T2, const std::vector<double>& alphas,
                                              const std::vector<double>& deltas, Eigen::Index copies,
                                              const lmi::SolveOptions& opts) {
    if (copies <= 0) copies = plant.p();
    const InternalModel im = build_internal_model(exo.S, copies);
    const Matrix K = default_internal_model_gain(plant, im.G1, im.G2);
    const ExtendedPlantPre ext = build_extended_pre(plant, K, im.G1, im.G2);

    std::vector<GridCell> cells;
    for (double alpha : alphas) {
        for (double delta : deltas) {
            GridCell cell{alpha, delta, GridCellStatus::Skipped};
            if (alpha > 0.0 && delta > 0.0) {
                const lmi::LmiProblem problem = lmi::assemble_pre_lmis(ext, T2, alpha, delta);
                const lmi::SolveResult solved = lmi::solve_feasibility(problem, opts);
                const bool ok =
                    solved.feasible && lmi::verify_assignment(problem, solved.assignment).overall;
                cell.status = ok ? GridCellStatus::Feasible : GridCellStatus::Infeasible;
            }
            cells.push_back(cell);
        }
    }
    return cells;
}

}  // namespace sdreg
