#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sdreg/jsonio.hpp"
#include "sdreg/lmi.hpp"

namespace sdreg::lmi {

std::string to_string(Sense s) {
    switch (s) {
        case Sense::NegSemidef: return "<=0";
        case Sense::NegDef: return "<0";
        case Sense::PosDefEps: return ">=epsI";
        case Sense::Zero: return "==0";
    }
    return "?";
}

void LmiProblem::add_variable(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                              bool symmetric, bool positive_definite) {
    if (has_variable(name)) throw std::invalid_argument("LmiProblem: duplicate variable " + name);
    if (symmetric && rows != cols)
        throw std::invalid_argument("LmiProblem: symmetric variable must be square: " + name);
    variables.push_back({name, rows, cols, symmetric, positive_definite});
}

void LmiProblem::add_constraint(const std::string& name, const std::string& group, Eigen::Index size,
                                Sense sense, double eps, AffineMap map) {
    constraints.push_back({name, group, size, sense, eps, std::move(map)});
}

const VariableSpec& LmiProblem::variable(const std::string& name) const {
    for (const auto& v : variables)
        if (v.name == name) return v;
    throw std::invalid_argument("LmiProblem: unknown variable " + name);
}

bool LmiProblem::has_variable(const std::string& name) const {
    for (const auto& v : variables)
        if (v.name == name) return true;
    return false;
}

Eigen::Index LmiProblem::scalar_dimension() const {
    Eigen::Index n = 0;
    for (const auto& v : variables)
        n += v.symmetric ? v.rows * (v.rows + 1) / 2 : v.rows * v.cols;
    return n;
}

std::vector<std::string> LmiProblem::groups() const {
    std::vector<std::string> g;
    for (const auto& c : constraints)
        if (std::find(g.begin(), g.end(), c.group) == g.end()) g.push_back(c.group);
    return g;
}

Assignment LmiProblem::zero_assignment() const {
    Assignment a;
    for (const auto& v : variables) a[v.name] = Matrix::Zero(v.rows, v.cols);
    return a;
}

Matrix LmiProblem::evaluate(const Constraint& c, const Assignment& values) const {
    Matrix m = c.map(values);
    if (m.rows() != c.size || m.cols() != c.size)
        throw std::logic_error("LmiProblem: constraint " + c.name + " evaluated to wrong size");
    const double scale = 1.0 + m.cwiseAbs().maxCoeff();
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-9 * scale)
        throw std::logic_error("LmiProblem: constraint " + c.name + " is not symmetric");
    return symmetrize(m);
}

// ---------------------------------------------------------------------------
// Scalar coordinate layout
// ---------------------------------------------------------------------------

namespace {

struct Layout {
    std::vector<Eigen::Index> offsets;
    Eigen::Index total = 0;
};

Layout make_layout(const LmiProblem& p) {
    Layout lay;
    Eigen::Index off = 0;
    for (const auto& v : p.variables) {
        lay.offsets.push_back(off);
        off += v.symmetric ? v.rows * (v.rows + 1) / 2 : v.rows * v.cols;
    }
    lay.total = off;
    return lay;
}

Assignment assignment_from_vector(const LmiProblem& p, const Layout& lay, const Vector& x) {
    Assignment a;
    for (std::size_t vi = 0; vi < p.variables.size(); ++vi) {
        const auto& v = p.variables[vi];
        Matrix m(v.rows, v.cols);
        Eigen::Index k = lay.offsets[vi];
        if (v.symmetric) {
            for (Eigen::Index j = 0; j < v.cols; ++j)
                for (Eigen::Index i = 0; i <= j; ++i) {
                    m(i, j) = x(k);
                    m(j, i) = x(k);
                    ++k;
                }
        } else {
            for (Eigen::Index j = 0; j < v.cols; ++j)
                for (Eigen::Index i = 0; i < v.rows; ++i) m(i, j) = x(k++);
        }
        a[v.name] = std::move(m);
    }
    return a;
}

Vector vector_from_assignment(const LmiProblem& p, const Layout& lay, const Assignment& a) {
    Vector x = Vector::Zero(lay.total);
    for (std::size_t vi = 0; vi < p.variables.size(); ++vi) {
        const auto& v = p.variables[vi];
        const Matrix& m = a.at(v.name);
        Eigen::Index k = lay.offsets[vi];
        if (v.symmetric) {
            for (Eigen::Index j = 0; j < v.cols; ++j)
                for (Eigen::Index i = 0; i <= j; ++i) x(k++) = 0.5 * (m(i, j) + m(j, i));
        } else {
            for (Eigen::Index j = 0; j < v.cols; ++j)
                for (Eigen::Index i = 0; i < v.rows; ++i) x(k++) = m(i, j);
        }
    }
    return x;
}

// One PSD-required block G(x) = C + sum_i x_i A_i >= 0.
struct Block {
    std::string name;
    Eigen::Index size = 0;
    Matrix constant;
    std::vector<std::pair<Eigen::Index, Matrix>> terms;

    Matrix eval(const Vector& x) const {
        Matrix g = constant;
        for (const auto& [idx, basis] : terms) g += x(idx) * basis;
        return g;
    }
};

// Extracts the affine basis of a constraint by probing scalar coordinates.
void extract_basis(const LmiProblem& p, const Layout& lay, const Constraint& c, double sign,
                   double shift, Block& out) {
    const Assignment zero = p.zero_assignment();
    const Matrix m0 = p.evaluate(c, zero);
    out.name = c.name;
    out.size = c.size;
    out.constant = sign * m0 - shift * Matrix::Identity(c.size, c.size);
    Vector x = Vector::Zero(lay.total);
    for (Eigen::Index i = 0; i < lay.total; ++i) {
        x(i) = 1.0;
        const Assignment probe = assignment_from_vector(p, lay, x);
        x(i) = 0.0;
        Matrix basis = sign * (p.evaluate(c, probe) - m0);
        if (basis.cwiseAbs().maxCoeff() > 0.0) out.terms.emplace_back(i, std::move(basis));
    }
}

double min_eig(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

// max over blocks of -lambda_min(G_k(x)); negative means strictly feasible.
double infeasibility(const std::vector<Block>& blocks, const Vector& x) {
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& b : blocks) worst = std::max(worst, -min_eig(b.eval(x)));
    return worst;
}

struct BarrierEval {
    double value = 0.0;
    bool domain_ok = false;
};

BarrierEval barrier_value(const std::vector<Block>& blocks, const Vector& x, double s, double mu) {
    BarrierEval ev;
    double phi = 0.5 * mu * x.squaredNorm();
    for (const auto& b : blocks) {
        Matrix shifted = b.eval(x) + s * Matrix::Identity(b.size, b.size);
        Eigen::LLT<Matrix> llt(shifted);
        if (llt.info() != Eigen::Success) return ev;
        const Matrix& l = llt.matrixLLT();
        for (Eigen::Index i = 0; i < b.size; ++i) phi -= 2.0 * std::log(l(i, i));
    }
    ev.value = phi;
    ev.domain_ok = true;
    return ev;
}

}  // namespace

// ---------------------------------------------------------------------------
// Feasibility solver: analytic-center path following on the shifted blocks.
// ---------------------------------------------------------------------------

SolveResult solve_feasibility(const LmiProblem& problem, const SolveOptions& opts) {
    const Layout lay = make_layout(problem);

    std::vector<Block> blocks;
    std::vector<Block> equalities;
    for (const auto& c : problem.constraints) {
        Block b;
        switch (c.sense) {
            case Sense::NegSemidef: extract_basis(problem, lay, c, -1.0, 0.0, b); break;
            case Sense::NegDef: extract_basis(problem, lay, c, -1.0, c.eps, b); break;
            case Sense::PosDefEps: extract_basis(problem, lay, c, +1.0, c.eps, b); break;
            case Sense::Zero: extract_basis(problem, lay, c, +1.0, 0.0, b); break;
        }
        (c.sense == Sense::Zero ? equalities : blocks).push_back(std::move(b));
    }
    // Positive-definiteness floors for flagged variables.
    for (std::size_t vi = 0; vi < problem.variables.size(); ++vi) {
        const auto& v = problem.variables[vi];
        if (!v.positive_definite) continue;
        Block b;
        b.name = "var:" + v.name;
        b.size = v.rows;
        b.constant = -kPosDefFloor * Matrix::Identity(v.rows, v.rows);
        Eigen::Index k = lay.offsets[vi];
        for (Eigen::Index j = 0; j < v.cols; ++j)
            for (Eigen::Index i = 0; i <= j; ++i) {
                Matrix basis = Matrix::Zero(v.rows, v.rows);
                basis(i, j) = 1.0;
                basis(j, i) = 1.0;
                b.terms.emplace_back(k++, std::move(basis));
            }
        blocks.push_back(std::move(b));
    }

    auto finish = [&](const Vector& x, bool feasible, const std::string& reason, int iters) {
        SolveResult res;
        res.feasible = feasible;
        res.assignment.values = assignment_from_vector(problem, lay, x);
        res.reason = reason;
        res.newton_iterations = iters;
        res.worst_slack = -infeasibility(blocks, x);
        return res;
    };

    // Equality constraints: restrict to the affine solution set.
    Vector x_part = Vector::Zero(lay.total);
    Matrix null_basis = Matrix::Identity(lay.total, lay.total);
    if (!equalities.empty()) {
        Eigen::Index rows = 0;
        for (const auto& e : equalities) rows += e.size * e.size;
        Matrix emat = Matrix::Zero(rows, lay.total);
        Vector erhs = Vector::Zero(rows);
        Eigen::Index r0 = 0;
        for (const auto& e : equalities) {
            const Eigen::Index m2 = e.size * e.size;
            erhs.segment(r0, m2) = -vec(e.constant);
            for (const auto& [idx, basis] : e.terms) emat.col(idx).segment(r0, m2) = vec(basis);
            r0 += m2;
        }
        x_part = emat.completeOrthogonalDecomposition().solve(erhs);
        if ((emat * x_part - erhs).norm() > 1e-9 * (1.0 + erhs.norm()))
            return finish(x_part, false, "equality-inconsistent", 0);
        Eigen::FullPivLU<Matrix> lu(emat);
        lu.setThreshold(1e-10);
        null_basis = lu.kernel();
        if (null_basis.cols() == 0) {
            const bool ok = infeasibility(blocks, x_part) < 0.0;
            return finish(x_part, ok, ok ? "" : "equality-pinned-infeasible", 0);
        }
        // Re-express inequality blocks in the reduced coordinates.
        for (auto& b : blocks) {
            Block red;
            red.name = b.name;
            red.size = b.size;
            red.constant = b.constant;
            for (const auto& [idx, basis] : b.terms) red.constant += x_part(idx) * basis;
            for (Eigen::Index j = 0; j < null_basis.cols(); ++j) {
                Matrix nb = Matrix::Zero(b.size, b.size);
                for (const auto& [idx, basis] : b.terms) nb += null_basis(idx, j) * basis;
                if (nb.cwiseAbs().maxCoeff() > 0.0) red.terms.emplace_back(j, std::move(nb));
            }
            b = std::move(red);
        }
    }
    const bool reduced = !equalities.empty();
    const Eigen::Index dim = reduced ? null_basis.cols() : lay.total;
    auto lift = [&](const Vector& y) { return reduced ? Vector(x_part + null_basis * y) : y; };

    // Start from identity symmetric variables projected into the reduced space.
    Assignment init = problem.zero_assignment();
    for (const auto& v : problem.variables)
        if (v.symmetric) init[v.name] = Matrix::Identity(v.rows, v.cols);
    Vector x0 = vector_from_assignment(problem, lay, init);
    Vector y = reduced ? Vector(null_basis.completeOrthogonalDecomposition().solve(x0 - x_part))
                       : x0;

    double offset_scale = 0.0;
    for (const auto& b : blocks) offset_scale = std::max(offset_scale, b.constant.cwiseAbs().maxCoeff());
    const double target = std::max(opts.tol, 1e-9 * (1.0 + offset_scale));
    const double mu = 1e-6;

    double t = infeasibility(blocks, lift(y));
    double s = t + 1.0 + 0.1 * std::abs(t);
    int total_newton = 0;

    if (blocks.empty()) return finish(lift(y), true, "", 0);

    for (int outer = 0; outer < 400; ++outer) {
        // Newton centering at the current shift.
        for (int it = 0; it < 60; ++it) {
            if (total_newton >= opts.max_iter)
                return finish(lift(y), infeasibility(blocks, lift(y)) < -target, "iteration-limit",
                              total_newton);
            ++total_newton;

            Vector grad = mu * lift(y);  // gradient of the ridge in x-space
            Vector g = reduced ? Vector(null_basis.transpose() * grad) : grad;
            Matrix h = mu * Matrix::Identity(dim, dim);
            if (reduced) h = mu * (null_basis.transpose() * null_basis);

            const Vector x = lift(y);
            bool ok = true;
            for (const auto& b : blocks) {
                Matrix shifted = b.eval(x) + s * Matrix::Identity(b.size, b.size);
                Eigen::LLT<Matrix> llt(shifted);
                if (llt.info() != Eigen::Success) {
                    ok = false;
                    break;
                }
                const Matrix sinv = llt.solve(Matrix::Identity(b.size, b.size));
                std::vector<Matrix> mapped(b.terms.size());
                for (std::size_t i = 0; i < b.terms.size(); ++i) {
                    const auto& [gi, basis] = b.terms[i];
                    const Matrix w = sinv * basis;
                    g(gi) -= w.trace();
                    mapped[i] = w * sinv;
                }
                for (std::size_t i = 0; i < b.terms.size(); ++i) {
                    const Eigen::Index gi = b.terms[i].first;
                    for (std::size_t k = i; k < b.terms.size(); ++k) {
                        const Eigen::Index gk = b.terms[k].first;
                        const double hik = (mapped[i].array() * b.terms[k].second.array()).sum();
                        h(gi, gk) += hik;
                        if (gi != gk) h(gk, gi) += hik;
                    }
                }
            }
            if (!ok) {
                s = infeasibility(blocks, x) + 1.0;  // recover the domain
                continue;
            }

            const double reg = 1e-12 * (1.0 + h.trace() / static_cast<double>(dim));
            Vector step = (h + reg * Matrix::Identity(dim, dim))
                              .ldlt()
                              .solve(-g);
            const double decrement = -g.dot(step);
            const BarrierEval phi0 = barrier_value(blocks, x, s, mu);
            if (!phi0.domain_ok) {
                s = infeasibility(blocks, x) + 1.0;
                continue;
            }
            if (0.5 * decrement < 1e-9 * (1.0 + std::abs(phi0.value))) break;

            double alpha = 1.0;
            bool accepted = false;
            for (int ls = 0; ls < 70; ++ls) {
                const Vector y_try = y + alpha * step;
                const BarrierEval phi = barrier_value(blocks, lift(y_try), s, mu);
                if (phi.domain_ok && phi.value <= phi0.value - 1e-4 * alpha * decrement) {
                    y = y_try;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) break;
        }

        t = infeasibility(blocks, lift(y));
        const bool deep = t <= -target && (s - t) <= 0.1 * std::max(std::abs(t), target);
        if (deep) return finish(lift(y), true, "", total_newton);

        const double s_new = t + 0.25 * (s - t);
        if (s - s_new < 1e-13 * (1.0 + std::abs(s))) {
            return finish(lift(y), t < -target, t < -target ? "" : "stalled", total_newton);
        }
        s = s_new;
    }
    t = infeasibility(blocks, lift(y));
    return finish(lift(y), t < -target, t < -target ? "" : "outer-limit", total_newton);
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

CertificateReport verify_assignment(const LmiProblem& problem, const LmiAssignment& assignment,
                                    double tol) {
    CertificateReport report;
    for (const auto& c : problem.constraints) {
        const Matrix m = problem.evaluate(c, assignment.values);
        Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
        const double lam_min = es.eigenvalues().minCoeff();
        const double lam_max = es.eigenvalues().maxCoeff();

        ConstraintCheck check;
        check.name = c.name;
        check.tolerance = tol;
        switch (c.sense) {
            case Sense::NegSemidef:
                check.margin = lam_max;
                check.slack = -lam_max;
                check.pass = check.slack >= -tol;
                break;
            case Sense::NegDef:
                check.margin = lam_max;
                check.slack = -lam_max;
                check.pass = check.slack > c.eps - tol;
                break;
            case Sense::PosDefEps:
                check.margin = lam_min;
                check.slack = lam_min;
                check.pass = check.slack > c.eps - tol;
                break;
            case Sense::Zero:
                check.margin = m.cwiseAbs().maxCoeff();
                check.slack = -check.margin;
                check.pass = check.margin <= tol;
                break;
        }
        report.checks.push_back(check);
    }
    for (const auto& v : problem.variables) {
        if (!v.positive_definite) continue;
        auto it = assignment.values.find(v.name);
        ConstraintCheck check;
        check.name = "var:" + v.name;
        check.tolerance = tol;
        if (it == assignment.values.end()) {
            check.pass = false;
            check.margin = -std::numeric_limits<double>::infinity();
        } else {
            const double lam_min = min_eigenvalue_sym(it->second);
            check.margin = lam_min;
            check.slack = lam_min;
            check.pass = lam_min > tol;
        }
        report.checks.push_back(check);
    }
    report.finalize();
    return report;
}

CertificateReport LmiAssignment::margins(const LmiProblem& problem, double tol) const {
    return verify_assignment(problem, *this, tol);
}

// ---------------------------------------------------------------------------
// Text serialization
// ---------------------------------------------------------------------------

std::string problem_to_text(const LmiProblem& problem) {
    nlohmann::json j;
    j["variables"] = nlohmann::json::array();
    for (const auto& v : problem.variables)
        j["variables"].push_back({{"name", v.name},
                                  {"rows", v.rows},
                                  {"cols", v.cols},
                                  {"symmetric", v.symmetric},
                                  {"positive_definite", v.positive_definite}});
    j["constraints"] = nlohmann::json::array();
    const Assignment zero = problem.zero_assignment();
    for (const auto& c : problem.constraints)
        j["constraints"].push_back({{"name", c.name},
                                    {"group", c.group},
                                    {"size", c.size},
                                    {"sense", to_string(c.sense)},
                                    {"eps", c.eps},
                                    {"offset", matrix_to_json(problem.evaluate(c, zero))}});
    return j.dump(2);
}

std::string assignment_to_text(const LmiAssignment& assignment) {
    nlohmann::json j;
    for (const auto& [name, value] : assignment.values) j["values"][name] = matrix_to_json(value);
    return j.dump(2);
}

LmiAssignment assignment_from_text(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    LmiAssignment a;
    for (const auto& [name, value] : j.at("values").items()) a.values[name] = matrix_from_json(value);
    return a;
}

}  // namespace sdreg::lmi
