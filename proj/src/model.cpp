#include "sdreg/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sdreg {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

PlantModel::PlantModel(Matrix A, Matrix B, Matrix E, Matrix C, Matrix F)
    : A_p(std::move(A)), B_p(std::move(B)), E_p(std::move(E)), C_p(std::move(C)), F_p(std::move(F)) {
    require(A_p.rows() > 0 && A_p.rows() == A_p.cols(), "PlantModel: A_p must be square");
    const Eigen::Index n = A_p.rows();
    require(B_p.rows() == n && B_p.cols() > 0, "PlantModel: B_p dimension mismatch");
    require(E_p.rows() == n && E_p.cols() > 0, "PlantModel: E_p dimension mismatch");
    require(C_p.cols() == n && C_p.rows() > 0, "PlantModel: C_p dimension mismatch");
    require(F_p.rows() == C_p.rows() && F_p.cols() == E_p.cols(), "PlantModel: F_p dimension mismatch");
    for (const Matrix* m : {&A_p, &B_p, &E_p, &C_p, &F_p})
        require(all_finite(*m), "PlantModel: non-finite entry");
}

Exosystem::Exosystem(Matrix s) : S(std::move(s)) {
    require(S.rows() > 0 && S.rows() == S.cols(), "Exosystem: S must be square");
    require(all_finite(S), "Exosystem: non-finite entry");
}

SamplingMode sampling_mode_from_string(const std::string& s) {
    if (s == "periodic") return SamplingMode::Periodic;
    if (s == "uniform-random") return SamplingMode::UniformRandom;
    if (s == "worst-case-max") return SamplingMode::WorstCaseMax;
    if (s == "explicit-list") return SamplingMode::ExplicitList;
    throw std::invalid_argument("unknown sampling mode: " + s);
}

std::string to_string(SamplingMode m) {
    switch (m) {
        case SamplingMode::Periodic: return "periodic";
        case SamplingMode::UniformRandom: return "uniform-random";
        case SamplingMode::WorstCaseMax: return "worst-case-max";
        case SamplingMode::ExplicitList: return "explicit-list";
    }
    return "?";
}

SamplingSpec::SamplingSpec(double t1, double t2, SamplingMode m, std::optional<std::uint64_t> seed_,
                           std::optional<std::vector<double>> explicit_times_)
    : T1(t1), T2(t2), mode(m), seed(seed_), explicit_times(std::move(explicit_times_)) {
    require(std::isfinite(T1) && std::isfinite(T2), "SamplingSpec: non-finite bound");
    require(T1 > 0.0, "SamplingSpec: T1 must be positive");
    require(T2 >= T1, "SamplingSpec: need T1 <= T2");
    if (mode == SamplingMode::ExplicitList) {
        require(explicit_times.has_value(), "SamplingSpec: explicit-list mode needs explicit_times");
        auto bad = find_sampling_violation(*explicit_times, T1, T2);
        if (bad)
            throw std::invalid_argument("SamplingSpec: explicit_times violates dwell bounds at gap index " +
                                        std::to_string(*bad));
    }
}

ExtendedPlantPre build_extended_pre(const PlantModel& plant, const Matrix& K, const Matrix& G1,
                                    const Matrix& G2) {
    const Eigen::Index n_p = plant.n_p();
    const Eigen::Index n_z = G1.rows();
    const Eigen::Index p = plant.p();
    require(G1.cols() == n_z, "build_extended_pre: G1 must be square");
    require(G2.rows() == n_z, "build_extended_pre: G2 row mismatch");
    const Eigen::Index n_v = G2.cols();
    require(K.rows() == plant.m_p() && K.cols() == n_z, "build_extended_pre: K dimension mismatch");

    ExtendedPlantPre ext;
    ext.n_p = n_p;
    ext.n_z = n_z;
    ext.p = p;
    ext.n_v = n_v;
    ext.K = K;
    ext.G1 = G1;
    ext.G2 = G2;

    ext.A = Matrix::Zero(n_p + n_z, n_p + n_z);
    ext.A.topLeftCorner(n_p, n_p) = plant.A_p;
    ext.A.topRightCorner(n_p, n_z) = plant.B_p * K;
    ext.A.bottomRightCorner(n_z, n_z) = G1;

    ext.B = Matrix::Zero(n_p + n_z, n_v);
    ext.B.bottomRows(n_z) = G2;

    ext.C = Matrix::Zero(p, n_p + n_z);
    ext.C.leftCols(n_p) = plant.C_p;

    // The hold-state error dynamics drop the C*B*theta term; valid only
    // because C*B = 0 holds for this block structure.
    const double cb = (ext.C * ext.B).cwiseAbs().maxCoeff();
    require(cb == 0.0, "build_extended_pre: C*B must vanish structurally");
    return ext;
}

namespace {

// PBH margin over the eigenvalues of `a` with nonnegative real part:
// sigma_min([a - lambda I, b]) for stabilizability (pass b = B_p) or of the
// transposed pencil for detectability (pass a = A_p^T, b = C_p^T).
std::pair<bool, double> pbh_test(const Matrix& a, const Matrix& b,
                                 std::vector<std::complex<double>>* tested) {
    const Eigen::Index n = a.rows();
    const double scale = max_singular_value(a);
    const double thresh = 1e-8 * scale;
    const ComplexVector lambdas = eigenvalues(a);

    bool ok = true;
    double margin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < lambdas.size(); ++i) {
        const std::complex<double> lam = lambdas(i);
        if (lam.real() < -1e-12 * std::max(1.0, scale)) continue;
        if (tested) tested->push_back(lam);
        ComplexMatrix pencil(n, n + b.cols());
        pencil << a.cast<std::complex<double>>() - lam * ComplexMatrix::Identity(n, n),
            b.cast<std::complex<double>>();
        const double sv = min_singular_value(pencil);
        margin = std::min(margin, sv);
        if (sv <= thresh) ok = false;
    }
    return {ok, margin};
}

}  // namespace

ValidationReport validate_plant(const PlantModel& plant) {
    ValidationReport report;
    auto [stab, ms] = pbh_test(plant.A_p, plant.B_p, &report.tested_eigenvalues);
    report.stabilizable = stab;
    report.stabilizability_margin = ms;
    auto [det, md] = pbh_test(plant.A_p.transpose(), plant.C_p.transpose(), nullptr);
    report.detectable = det;
    report.detectability_margin = md;
    return report;
}

NeutralStabilityReport check_neutral_stability(const Matrix& S, double tol) {
    if (S.rows() != S.cols() || S.rows() == 0)
        throw std::invalid_argument("check_neutral_stability: S must be square");

    NeutralStabilityReport report;
    const ComplexVector lambdas = eigenvalues(S);
    report.spectrum.assign(lambdas.data(), lambdas.data() + lambdas.size());

    const double scale = std::max(1.0, max_singular_value(S));
    for (const auto& lam : report.spectrum) {
        if (std::abs(lam.real()) > tol * scale) return report;  // off-axis
    }

    // Semisimplicity: cluster numerically split eigenvalues, then compare the
    // cluster size against the nullity of (S - lambda I) at that cluster.
    const double cluster_tol = 1e-5 * scale;
    std::vector<std::complex<double>> pending(report.spectrum.begin(), report.spectrum.end());
    while (!pending.empty()) {
        std::vector<std::complex<double>> cluster{pending.back()};
        pending.pop_back();
        for (std::size_t i = pending.size(); i-- > 0;) {
            if (std::abs(pending[i] - cluster.front()) <= cluster_tol) {
                cluster.push_back(pending[i]);
                pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(i));
            }
        }
        std::complex<double> center{0.0, 0.0};
        for (const auto& c : cluster) center += c;
        center /= static_cast<double>(cluster.size());

        const Eigen::Index n = S.rows();
        const ComplexMatrix shifted =
            S.cast<std::complex<double>>() - center * ComplexMatrix::Identity(n, n);
        Eigen::JacobiSVD<ComplexMatrix> svd(shifted);
        const double rank_tol = std::max(1e-9, 1e-9 * svd.singularValues().maxCoeff());
        Eigen::Index rank = 0;
        for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()(i) > rank_tol) ++rank;
        const Eigen::Index geometric = n - rank;
        if (geometric < static_cast<Eigen::Index>(cluster.size())) return report;  // defective
    }
    report.neutrally_stable = true;
    return report;
}

namespace {

// Nudge t_next so the realized floating-point gap lands back inside
// [T1, T2]; the drawn gap is exact but cumulative sums round.
double place_next_time(double t_prev, double gap, double T1, double T2) {
    double t_next = t_prev + gap;
    for (int i = 0; i < 8 && t_next - t_prev < T1; ++i)
        t_next = std::nextafter(t_next, std::numeric_limits<double>::infinity());
    for (int i = 0; i < 8 && t_next - t_prev > T2; ++i)
        t_next = std::nextafter(t_next, -std::numeric_limits<double>::infinity());
    return t_next;
}

}  // namespace

std::vector<double> generate_sampling_sequence(const SamplingSpec& spec, double horizon) {
    if (!(horizon > 0.0)) throw std::invalid_argument("generate_sampling_sequence: horizon must be positive");

    if (spec.mode == SamplingMode::ExplicitList) {
        std::vector<double> times;
        for (double t : *spec.explicit_times) {
            if (t > horizon) break;
            times.push_back(t);
        }
        return times;
    }

    std::mt19937_64 rng(spec.seed.value_or(0));
    auto draw_gap = [&]() {
        switch (spec.mode) {
            case SamplingMode::Periodic: return 0.5 * (spec.T1 + spec.T2);
            case SamplingMode::WorstCaseMax: return spec.T2;
            case SamplingMode::UniformRandom:
                return std::clamp(uniform_in(rng, spec.T1, spec.T2), spec.T1, spec.T2);
            default: return spec.T2;
        }
    };

    std::vector<double> times;
    double first = std::min(draw_gap(), spec.T2);
    if (first > horizon) return times;
    times.push_back(first);
    while (true) {
        const double next = place_next_time(times.back(), draw_gap(), spec.T1, spec.T2);
        if (next > horizon) break;
        times.push_back(next);
    }
    return times;
}

std::optional<std::size_t> find_sampling_violation(const std::vector<double>& times, double T1,
                                                   double T2) {
    auto tol = [](double t) { return 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, t); };
    if (times.empty()) return std::nullopt;
    if (!(times.front() > 0.0) || times.front() > T2 + tol(times.front())) return std::size_t{0};
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        const double gap = times[k + 1] - times[k];
        if (gap < T1 - tol(times[k + 1]) || gap > T2 + tol(times[k + 1])) return k + 1;
    }
    return std::nullopt;
}

}  // namespace sdreg
