#include "sdreg/hybridsim.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace sdreg {

std::optional<std::string> validate_arc(const HybridArc& arc) {
    if (arc.size() == 0) return "empty arc";
    if (arc.labels.size() != static_cast<std::size_t>(arc.state_dim()))
        return "label count does not match state dimension";
    for (std::size_t i = 0; i < arc.size(); ++i) {
        if (!std::isfinite(arc.t[i]) || !all_finite(arc.x[i]))
            return "non-finite sample at index " + std::to_string(i);
    }
    for (std::size_t i = 0; i + 1 < arc.size(); ++i) {
        const double dtime = arc.t[i + 1] - arc.t[i];
        const int dj = arc.j[i + 1] - arc.j[i];
        if (dtime < 0.0) return "time decreases at index " + std::to_string(i + 1);
        if (dj != 0 && dj != 1) return "jump counter steps by " + std::to_string(dj);
        if (dj == 1 && dtime != 0.0) return "jump with nonzero time advance at index " + std::to_string(i + 1);
        if (dj == 0 && !(dtime > 0.0)) return "stalled flow sample at index " + std::to_string(i + 1);
    }
    // Jump instants must respect the dwell bounds.
    std::vector<double> jump_times;
    for (std::size_t idx : arc.jump_indices) {
        if (idx >= arc.size() || idx == 0) return "jump index out of range";
        if (arc.j[idx] != arc.j[idx - 1] + 1) return "jump index does not mark a jump";
        jump_times.push_back(arc.t[idx]);
    }
    if (!jump_times.empty() && arc.T1 > 0.0) {
        if (auto bad = find_sampling_violation(jump_times, arc.T1, arc.T2))
            return "jump gap violates dwell bounds at jump " + std::to_string(*bad);
    }
    return std::nullopt;
}

std::vector<std::string> ClosedLoopPre::state_labels() const {
    std::vector<std::string> labels;
    for (Eigen::Index i = 1; i <= n_p; ++i) labels.push_back("xt_p" + std::to_string(i));
    for (Eigen::Index i = 1; i <= n_z; ++i) labels.push_back("zt" + std::to_string(i));
    for (Eigen::Index i = 1; i <= n_p + n_z; ++i) labels.push_back("xc" + std::to_string(i));
    for (Eigen::Index i = 1; i <= p; ++i) labels.push_back("thetat" + std::to_string(i));
    for (Eigen::Index i = 1; i <= q; ++i) labels.push_back("w" + std::to_string(i));
    labels.push_back("tau");
    return labels;
}

std::vector<std::string> ClosedLoopPost::state_labels() const {
    const Eigen::Index nbar = n_p + n_k + n_z;
    std::vector<std::string> labels;
    for (Eigen::Index i = 1; i <= nbar; ++i) labels.push_back("chi1_" + std::to_string(i));
    for (Eigen::Index i = 1; i <= nbar; ++i) labels.push_back("chit1_" + std::to_string(i));
    for (Eigen::Index i = 1; i <= p; ++i) labels.push_back("chit2_" + std::to_string(i));
    for (Eigen::Index i = 1; i <= q; ++i) labels.push_back("w" + std::to_string(i));
    labels.push_back("tau");
    return labels;
}

ClosedLoopPre assemble_closed_loop_pre(const ExtendedPlantPre& ext, const RegulatorPre& reg) {
    const Eigen::Index nx = ext.A.rows();
    const Eigen::Index p = ext.C.rows();
    if (reg.A_c.rows() != nx || reg.A_c.cols() != nx || reg.B_c.rows() != nx || reg.B_c.cols() != p ||
        reg.C_c.cols() != nx || reg.D_c.rows() != reg.C_c.rows() || reg.D_c.cols() != p ||
        reg.H.rows() != p || reg.H.cols() != p || reg.E.rows() != p || reg.E.cols() != nx)
        throw std::invalid_argument("assemble_closed_loop_pre: regulator dimension mismatch");
    const double cb = (ext.C * ext.B).cwiseAbs().maxCoeff();
    if (cb != 0.0)
        throw std::invalid_argument("assemble_closed_loop_pre: C*B != 0, hold-error form invalid");

    ClosedLoopPre loop;
    loop.n_p = ext.n_p;
    loop.n_z = ext.n_z;
    loop.p = p;
    loop.q = 0;
    loop.C = ext.C;

    loop.Abb = Matrix::Zero(2 * nx, 2 * nx);
    loop.Abb.topLeftCorner(nx, nx) = ext.A + ext.B * reg.D_c * ext.C;
    loop.Abb.topRightCorner(nx, nx) = ext.B * reg.C_c;
    loop.Abb.bottomLeftCorner(nx, nx) = reg.B_c * ext.C;
    loop.Abb.bottomRightCorner(nx, nx) = reg.A_c;

    loop.Bbb = Matrix::Zero(2 * nx, p);
    loop.Bbb.topRows(nx) = ext.B * reg.D_c;
    loop.Bbb.bottomRows(nx) = reg.B_c;

    loop.Jbb = Matrix::Zero(p, 2 * nx);
    loop.Jbb.leftCols(nx) = reg.H * ext.C - ext.C * ext.A;
    loop.Jbb.rightCols(nx) = reg.E;

    loop.H = reg.H;
    return loop;
}

ClosedLoopPre make_closed_loop_pre(const PlantModel& plant, const Exosystem& exo,
                                   const ExtendedPlantPre& ext, const RegulatorPre& reg,
                                   const Matrix& Xp, const Matrix& Z) {
    ClosedLoopPre loop = assemble_closed_loop_pre(ext, reg);
    loop.S = exo.S;
    loop.Xp = Xp;
    loop.Z = Z;
    loop.Fp = plant.F_p;
    loop.q = exo.q();
    return loop;
}

ClosedLoopPost make_closed_loop_post(const PlantModel& plant, const Exosystem& exo,
                                     const RegulatorPost& reg, const Matrix& frak_A,
                                     const Matrix& frak_Ac, const Matrix& H2, const Matrix& XM,
                                     const Matrix& Z) {
    ClosedLoopPost loop;
    loop.frak_A = frak_A;
    loop.frak_Ac = frak_Ac;
    loop.H2 = H2;
    loop.Q = reg.Q;
    loop.W = reg.W;
    loop.S = exo.S;
    loop.XM = XM;
    loop.Z = Z;
    loop.Fp = plant.F_p;
    loop.n_p = plant.n_p();
    loop.n_k = reg.A_k.rows();
    loop.n_z = reg.G1.rows();
    loop.p = plant.p();
    loop.q = exo.q();
    return loop;
}

HybridArc flow_jump_simulate(const Matrix& flow, const std::function<void(Vector&)>& jump_op,
                             const Vector& x0, const std::vector<double>& times, double t_end,
                             double dt, double T1, double T2, std::vector<std::string> labels) {
    if (!(t_end > 0.0)) throw std::invalid_argument("simulate: t_end must be positive");
    if (!(dt > 0.0) || dt > T1 / 10.0 + 1e-12)
        throw std::invalid_argument("simulate: dt too coarse, need dt <= T1/10");
    if (flow.rows() != flow.cols() || flow.rows() != x0.size())
        throw std::invalid_argument("simulate: flow/state dimension mismatch");

    std::vector<double> jumps;
    for (double tk : times) {
        if (tk <= 0.0) throw std::invalid_argument("simulate: sampling instants must be positive");
        if (tk > t_end) break;
        jumps.push_back(tk);
    }

    HybridArc arc;
    arc.T1 = T1;
    arc.T2 = T2;
    arc.labels = std::move(labels);
    arc.labels.push_back("tau");

    auto timer = [&](std::size_t next_jump, double t) {
        if (next_jump < jumps.size()) return jumps[next_jump] - t;
        const double last = next_jump == 0 ? 0.0 : jumps[next_jump - 1];
        const double reset = std::min(T2, t_end - last);
        return std::max(0.0, reset - (t - last));
    };

    Vector state = x0;
    int jcount = 0;
    std::size_t next_jump = 0;

    auto push = [&](double t, const Vector& v) {
        Vector full(v.size() + 1);
        full << v, timer(next_jump, t);
        arc.t.push_back(t);
        arc.j.push_back(jcount);
        arc.x.push_back(std::move(full));
    };

    push(0.0, state);
    double t_cursor = 0.0;
    while (t_cursor < t_end) {
        const bool has_jump = next_jump < jumps.size();
        const double t_stop = has_jump ? jumps[next_jump] : t_end;
        const double span = t_stop - t_cursor;
        if (span > 0.0) {
            const int steps = std::max(1, static_cast<int>(std::ceil(span / dt - 1e-9)));
            const Matrix phi = expm(flow * (span / steps));
            for (int i = 1; i <= steps; ++i) {
                state = phi * state;
                if (!all_finite(state)) {
                    arc.aborted = true;
                    arc.diagnostic = "non-finite state at t = " + std::to_string(t_cursor);
                    return arc;
                }
                push(i == steps ? t_stop : t_cursor + i * (span / steps), state);
            }
        }
        t_cursor = t_stop;
        if (has_jump) {
            jump_op(state);
            ++jcount;
            ++next_jump;
            push(t_cursor, state);
            arc.jump_indices.push_back(arc.size() - 1);
        } else {
            break;
        }
    }
    return arc;
}

HybridArc simulate(const ClosedLoopPre& loop, const Vector& x0, const Vector& w0,
                   const std::vector<double>& times, double t_end, double dt, double T1, double T2) {
    const Eigen::Index nx = loop.n_p + loop.n_z;
    const Eigen::Index n2 = 2 * nx;
    const Eigen::Index p = loop.p;
    const Eigen::Index q = loop.q;
    if (x0.size() != n2 + p) throw std::invalid_argument("simulate(pre): x0 must be [x_p; z; x_c; theta]");
    if (w0.size() != q) throw std::invalid_argument("simulate(pre): w0 dimension mismatch");
    if (loop.Xp.rows() != loop.n_p || loop.Xp.cols() != q || loop.Z.rows() != loop.n_z ||
        loop.Z.cols() != q)
        throw std::invalid_argument("simulate(pre): loop carries no coordinate transforms");

    // Original -> transformed coordinates.
    Vector state(n2 + p + q);
    state.segment(0, loop.n_p) = x0.segment(0, loop.n_p) - loop.Xp * w0;
    state.segment(loop.n_p, loop.n_z) = x0.segment(loop.n_p, loop.n_z) - loop.Z * w0;
    state.segment(nx, nx) = x0.segment(nx, nx);  // stabilizer state is untransformed
    const Vector e_p0 = loop.C * state.segment(0, nx);
    state.segment(n2, p) = x0.segment(n2, p) - e_p0;
    state.segment(n2 + p, q) = w0;

    Matrix flow = Matrix::Zero(n2 + p + q, n2 + p + q);
    flow.topLeftCorner(n2, n2) = loop.Abb;
    flow.block(0, n2, n2, p) = loop.Bbb;
    flow.block(n2, 0, p, n2) = loop.Jbb;
    flow.block(n2, n2, p, p) = loop.H;
    flow.bottomRightCorner(q, q) = loop.S;

    auto jump = [n2, p](Vector& v) { v.segment(n2, p).setZero(); };

    std::vector<std::string> labels = loop.state_labels();
    labels.pop_back();  // engine appends the timer
    return flow_jump_simulate(flow, jump, state, times, t_end, dt, T1, T2, std::move(labels));
}

HybridArc simulate(const ClosedLoopPost& loop, const Vector& x0, const Vector& w0,
                   const std::vector<double>& times, double t_end, double dt, double T1, double T2) {
    const Eigen::Index nbar = loop.n_p + loop.n_k + loop.n_z;
    const Eigen::Index p = loop.p;
    const Eigen::Index q = loop.q;
    if (x0.size() != 2 * nbar + p)
        throw std::invalid_argument("simulate(post): x0 must be [x_p; x_k; z; chi1; chi2]");
    if (w0.size() != q) throw std::invalid_argument("simulate(post): w0 dimension mismatch");

    const Eigen::Index nm = loop.n_p + loop.n_k;
    Vector xt_alpha(nbar);
    xt_alpha.segment(0, nm) = x0.segment(0, nm) - loop.XM * w0;
    xt_alpha.segment(nm, loop.n_z) = x0.segment(nm, loop.n_z) - loop.Z * w0;

    const Vector chi1 = x0.segment(nbar, nbar);
    const Vector chi2 = x0.segment(2 * nbar, p);
    const Vector chit1 = xt_alpha - chi1;
    const Vector chit2 = chi2 - loop.H2 * chit1;

    Vector state(2 * nbar + p + q);
    state << chi1, chit1, chit2, w0;

    const Matrix a_minus_qh2 = loop.frak_A - loop.Q * loop.H2;
    Matrix flow = Matrix::Zero(2 * nbar + p + q, 2 * nbar + p + q);
    flow.topLeftCorner(nbar, nbar) = loop.frak_Ac;
    flow.block(0, nbar, nbar, nbar) = loop.Q * loop.H2;
    flow.block(0, 2 * nbar, nbar, p) = loop.Q;
    flow.block(nbar, nbar, nbar, nbar) = a_minus_qh2;
    flow.block(nbar, 2 * nbar, nbar, p) = -loop.Q;
    flow.block(2 * nbar, nbar, p, nbar) = loop.W * loop.H2 - loop.H2 * a_minus_qh2;
    flow.block(2 * nbar, 2 * nbar, p, p) = loop.W + loop.H2 * loop.Q;
    flow.bottomRightCorner(q, q) = loop.S;

    auto jump = [nbar, p](Vector& v) { v.segment(2 * nbar, p).setZero(); };

    std::vector<std::string> labels = loop.state_labels();
    labels.pop_back();
    return flow_jump_simulate(flow, jump, state, times, t_end, dt, T1, T2, std::move(labels));
}

OutputSeries extract_outputs(const HybridArc& arc, const ClosedLoopPre& loop) {
    if (arc.labels != loop.state_labels())
        throw std::invalid_argument("extract_outputs: arc labels do not match the pre loop");
    const Eigen::Index nx = loop.n_p + loop.n_z;
    const Eigen::Index n2 = 2 * nx;

    OutputSeries out;
    out.t = arc.t;
    out.j = arc.j;
    for (const Vector& s : arc.x) {
        const Vector e_p = loop.C * s.segment(0, nx);
        const Vector w = s.segment(n2 + loop.p, loop.q);
        const Vector y_w = loop.Fp * w;
        out.e_p.push_back(e_p);
        out.y_w.push_back(y_w);
        out.y_p.push_back(e_p + y_w);
        out.companion.push_back(s.segment(n2, loop.p) + e_p);  // theta = thetat + e_p
    }
    return out;
}

OutputSeries extract_outputs(const HybridArc& arc, const ClosedLoopPost& loop) {
    if (arc.labels != loop.state_labels())
        throw std::invalid_argument("extract_outputs: arc labels do not match the post loop");
    const Eigen::Index nbar = loop.n_p + loop.n_k + loop.n_z;

    OutputSeries out;
    out.is_post = true;
    out.t = arc.t;
    out.j = arc.j;
    for (const Vector& s : arc.x) {
        const Vector chi1 = s.segment(0, nbar);
        const Vector chit1 = s.segment(nbar, nbar);
        const Vector w = s.segment(2 * nbar + loop.p, loop.q);
        const Vector e_p = loop.H2 * (chi1 + chit1);
        const Vector y_w = loop.Fp * w;
        out.e_p.push_back(e_p);
        out.y_w.push_back(y_w);
        out.y_p.push_back(e_p + y_w);
        out.companion.push_back(loop.H2 * chi1);  // ehat_p
    }
    return out;
}

LyapunovTrace lyapunov_trace(const HybridArc& arc, const Matrix& P1, const Matrix& P2, double delta) {
    const Eigen::Index n2 = P1.rows();
    const Eigen::Index p = P2.rows();
    if (min_eigenvalue_sym(P1) <= 0.0 || min_eigenvalue_sym(P2) <= 0.0)
        throw std::invalid_argument("lyapunov_trace: P1, P2 must be positive definite");
    if (arc.state_dim() < n2 + p + 1 || arc.labels.empty() || arc.labels.back() != "tau")
        throw std::invalid_argument("lyapunov_trace: arc is missing the timer coordinate");

    LyapunovTrace trace;
    trace.t = arc.t;
    trace.j = arc.j;
    for (const Vector& s : arc.x) {
        const Vector xt = s.segment(0, n2);
        const Vector thetat = s.segment(n2, p);
        const double tau = s(s.size() - 1);
        trace.value.push_back(xt.dot(P1 * xt) + std::exp(delta * tau) * thetat.dot(P2 * thetat));
    }

    trace.max_jump_increase = -std::numeric_limits<double>::infinity();
    for (std::size_t idx : arc.jump_indices)
        trace.max_jump_increase = std::max(trace.max_jump_increase,
                                           trace.value[idx] - trace.value[idx - 1]);

    trace.max_flow_increase = -std::numeric_limits<double>::infinity();
    std::size_t interval_start = 0;
    for (std::size_t i = 0; i + 1 < arc.size(); ++i) {
        const bool jump_next = arc.j[i + 1] != arc.j[i];
        if (!jump_next)
            trace.max_flow_increase =
                std::max(trace.max_flow_increase, trace.value[i + 1] - trace.value[i]);
        if (jump_next || i + 2 == arc.size()) {
            const std::size_t interval_end = jump_next ? i : i + 1;
            if (interval_end > interval_start) {
                const double v0 = trace.value[interval_start];
                const double v1 = trace.value[interval_end];
                const double tiny = 1e-14 * (1.0 + std::abs(v0));
                if (!(v1 < v0 || (std::abs(v0) <= tiny && std::abs(v1) <= tiny)))
                    trace.decreasing_on_every_interval = false;
            }
            interval_start = interval_end + (jump_next ? 1 : 0);
        }
    }
    return trace;
}

std::string arc_to_table(const HybridArc& arc, char delimiter) {
    std::string out = "t";
    out += delimiter;
    out += "j";
    for (const auto& label : arc.labels) {
        out += delimiter;
        out += label;
    }
    out += '\n';
    char buf[64];
    for (std::size_t i = 0; i < arc.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", arc.t[i]);
        out += buf;
        out += delimiter;
        out += std::to_string(arc.j[i]);
        for (Eigen::Index k = 0; k < arc.x[i].size(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", arc.x[i](k));
            out += delimiter;
            out += buf;
        }
        out += '\n';
    }
    return out;
}

}  // namespace sdreg
