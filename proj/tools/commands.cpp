#include "commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <json.hpp>

#include "sdreg/config.hpp"
#include "sdreg/hybridsim.hpp"
#include "sdreg/jsonio.hpp"
#include "sdreg/synthesis.hpp"
#include "sdreg/verify.hpp"

#ifndef SDREG_DEFAULT_CONFIG_DIR
#define SDREG_DEFAULT_CONFIG_DIR "configs"
#endif

namespace sdreg::cli {

namespace {

using nlohmann::json;

std::string config_error_to_message(const ConfigError& e) {
    return std::string("config error at ") + e.what();
}

json certificate_json(const CertificateReport& report) {
    return json::parse(certificate_to_text(report));
}

Matrix internal_G1(const RunConfig& cfg) {
    return build_internal_model(cfg.exosystem.S, cfg.copies).G1;
}

Matrix internal_G2(const RunConfig& cfg) {
    if (cfg.G2) return *cfg.G2;
    return build_internal_model(cfg.exosystem.S, cfg.copies).G2;
}

int synthesize_pre_cmd(const RunConfig& cfg, const std::string& out_dir) {
    const PreSynthesisOutcome outcome = synthesize_pre(
        cfg.plant, cfg.exosystem, cfg.sampling, cfg.copies, cfg.alpha, cfg.delta, cfg.K);

    json report;
    report["architecture"] = "pre";
    report["hyperparams"] = {{"T2", cfg.T2}, {"alpha", cfg.alpha}, {"delta", cfg.delta}};
    report["feasible"] = outcome.feasible;

    if (!outcome.feasible) {
        report["failure"] = {{"reason", outcome.failure.reason},
                             {"worst_margin", outcome.failure.worst_margin},
                             {"alpha", outcome.failure.alpha},
                             {"delta", outcome.failure.delta}};
        write_text_file(out_dir + "/report.json", report.dump(2));
        std::cerr << "synthesis infeasible (" << outcome.failure.reason
                  << "), worst margin " << outcome.failure.worst_margin << " at alpha = "
                  << outcome.failure.alpha << ", delta = " << outcome.failure.delta << "\n";
        return 2;
    }
    const PreSynthesisResult& res = *outcome.result;

    RegulatorDocument doc;
    doc.architecture = "pre";
    doc.matrices = {{"A_c", res.regulator.A_c}, {"B_c", res.regulator.B_c},
                    {"C_c", res.regulator.C_c}, {"D_c", res.regulator.D_c},
                    {"H", res.regulator.H},     {"E", res.regulator.E},
                    {"K", res.K},               {"G1", res.ext.G1},
                    {"G2", res.ext.G2},         {"Xp", res.Xp},
                    {"R", res.R},               {"Z", res.Z},
                    {"P1", res.P1},             {"P2", res.assignment.values.at("P2")},
                    {"P3", res.assignment.values.at("P3")},
                    {"P4", res.P4},             {"P5", res.assignment.values.at("P5")},
                    {"P6", res.assignment.values.at("P6")}};
    doc.scalars = {{"T2", res.T2}, {"alpha", res.alpha}, {"delta", res.delta}};

    for (const auto& [name, value] : doc.matrices) report["matrices"][name] = matrix_to_json(value);
    report["certificate"] = certificate_json(res.certificate);
    write_text_file(out_dir + "/report.json", report.dump(2));
    write_text_file(out_dir + "/regulator.json", regulator_to_text(doc));
    return res.certificate.overall ? 0 : 2;
}

int synthesize_post_cmd(const RunConfig& cfg, const std::string& out_dir) {
    const Matrix G1 = internal_G1(cfg);
    const Matrix G2 = internal_G2(cfg);
    const StabilizerSection& st = *cfg.stabilizer;
    const PostSynthesisOutcome outcome =
        synthesize_post(cfg.plant, cfg.exosystem, st.A_k, st.B_k, st.C_k, st.D_k, *cfg.K, G1, G2,
                        cfg.T2, cfg.delta);

    json report;
    report["architecture"] = "post";
    report["hyperparams"] = {{"T2", cfg.T2}, {"delta", cfg.delta}};
    report["feasible"] = outcome.feasible;

    if (!outcome.feasible) {
        report["failure"] = {{"reason", outcome.failure.reason},
                             {"worst_margin", outcome.failure.worst_margin},
                             {"delta", outcome.failure.delta}};
        write_text_file(out_dir + "/report.json", report.dump(2));
        std::cerr << "synthesis infeasible (" << outcome.failure.reason << "), worst margin "
                  << outcome.failure.worst_margin << "\n";
        return 2;
    }
    const PostSynthesisResult& res = *outcome.result;

    RegulatorDocument doc;
    doc.architecture = "post";
    doc.matrices = {{"A_k", res.regulator.A_k}, {"B_k", res.regulator.B_k},
                    {"C_k", res.regulator.C_k}, {"D_k", res.regulator.D_k},
                    {"G1", res.regulator.G1},   {"G2", res.regulator.G2},
                    {"K", res.regulator.K},     {"Q", res.regulator.Q},
                    {"W", res.regulator.W},     {"XM", res.XM},
                    {"Z", res.Z},               {"Pbar", res.assignment.values.at("Pbar")},
                    {"Phat", res.assignment.values.at("Phat")}};
    doc.scalars = {{"T2", res.T2}, {"delta", res.delta}, {"hurwitz_margin", res.hurwitz_margin}};

    for (const auto& [name, value] : doc.matrices) report["matrices"][name] = matrix_to_json(value);
    report["certificate"] = certificate_json(res.certificate);
    write_text_file(out_dir + "/report.json", report.dump(2));
    write_text_file(out_dir + "/regulator.json", regulator_to_text(doc));
    return res.certificate.overall ? 0 : 2;
}

RegulatorPre regulator_pre_from_doc(const RegulatorDocument& doc) {
    return {doc.matrix("A_c"), doc.matrix("B_c"), doc.matrix("C_c"),
            doc.matrix("D_c"), doc.matrix("H"),   doc.matrix("E")};
}

}  // namespace

std::string config_dir() {
    if (const char* env = std::getenv("SDREG_CONFIG_DIR")) return env;
    return SDREG_DEFAULT_CONFIG_DIR;
}

int cmd_synthesize(const std::string& config_path, const std::string& out_dir) {
    try {
        const RunConfig cfg = load_run_config(config_path);
        std::filesystem::create_directories(out_dir);
        return cfg.architecture == "pre" ? synthesize_pre_cmd(cfg, out_dir)
                                         : synthesize_post_cmd(cfg, out_dir);
    } catch (const ConfigError& e) {
        std::cerr << config_error_to_message(e) << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_simulate(const std::string& config_path, const std::string& regulator_path,
                 const std::string& out_dir) {
    try {
        const RunConfig cfg = load_run_config(config_path);
        const RegulatorDocument doc = load_regulator(regulator_path);
        if (doc.architecture != cfg.architecture) {
            std::cerr << "regulator architecture \"" << doc.architecture
                      << "\" does not match config \"" << cfg.architecture << "\"\n";
            return 1;
        }
        std::filesystem::create_directories(out_dir);

        const std::vector<double> times =
            generate_sampling_sequence(cfg.sampling, cfg.simulation.horizon);
        const Vector w0 = cfg.simulation.w0;

        HybridArc arc;
        std::vector<double> error_norms;
        std::vector<double> estimate_error_norms;
        std::map<std::string, double> extra;

        if (cfg.architecture == "pre") {
            const ExtendedPlantPre ext =
                build_extended_pre(cfg.plant, doc.matrix("K"), doc.matrix("G1"), doc.matrix("G2"));
            const ClosedLoopPre loop = make_closed_loop_pre(
                cfg.plant, cfg.exosystem, ext, regulator_pre_from_doc(doc), doc.matrix("Xp"),
                doc.matrix("Z"));
            const Eigen::Index dim = 2 * (loop.n_p + loop.n_z) + loop.p;
            Vector x0 = cfg.simulation.x0.value_or(Vector::Zero(dim));
            if (x0.size() != dim) {
                std::cerr << "simulation.x0: expected length " << dim << "\n";
                return 1;
            }
            arc = simulate(loop, x0, w0, times, cfg.simulation.horizon, cfg.simulation.dt,
                           cfg.sampling.T1, cfg.sampling.T2);
            const OutputSeries outputs = extract_outputs(arc, loop);
            for (const auto& e : outputs.e_p) error_norms.push_back(e.norm());

            if (doc.has("P1") && doc.has("P2")) {
                const LyapunovTrace trace =
                    lyapunov_trace(arc, doc.matrix("P1"), doc.matrix("P2"), doc.scalars.at("delta"));
                extra["lyapunov_max_jump_increase"] = trace.max_jump_increase;
                extra["lyapunov_max_flow_increase"] = trace.max_flow_increase;
                extra["lyapunov_decreasing_intervals"] =
                    trace.decreasing_on_every_interval ? 1.0 : 0.0;
            }
        } else {
            const PostLoopMatrices pl =
                build_post_loop(cfg.plant, doc.matrix("A_k"), doc.matrix("B_k"), doc.matrix("C_k"),
                                doc.matrix("D_k"), doc.matrix("K"), doc.matrix("G1"),
                                doc.matrix("G2"));
            RegulatorPost reg{doc.matrix("A_k"), doc.matrix("B_k"), doc.matrix("C_k"),
                              doc.matrix("D_k"), doc.matrix("G1"), doc.matrix("G2"),
                              doc.matrix("K"),   doc.matrix("Q"),  doc.matrix("W")};
            const ClosedLoopPost loop =
                make_closed_loop_post(cfg.plant, cfg.exosystem, reg, pl.frak_A, pl.frak_Ac, pl.H2,
                                      doc.matrix("XM"), doc.matrix("Z"));
            const Eigen::Index nbar = loop.n_p + loop.n_k + loop.n_z;
            const Eigen::Index dim = 2 * nbar + loop.p;
            Vector x0 = cfg.simulation.x0.value_or(Vector::Zero(dim));
            if (x0.size() != dim) {
                std::cerr << "simulation.x0: expected length " << dim << "\n";
                return 1;
            }
            arc = simulate(loop, x0, w0, times, cfg.simulation.horizon, cfg.simulation.dt,
                           cfg.sampling.T1, cfg.sampling.T2);
            const OutputSeries outputs = extract_outputs(arc, loop);
            for (std::size_t i = 0; i < outputs.e_p.size(); ++i) {
                error_norms.push_back(outputs.e_p[i].norm());
                estimate_error_norms.push_back((outputs.companion[i] - outputs.e_p[i]).norm());
            }
        }

        if (arc.aborted) {
            std::cerr << "simulation aborted: " << arc.diagnostic << "\n";
            return 2;
        }
        write_text_file(out_dir + "/arc.csv", arc_to_table(arc, cfg.delimiter));

        const RegulationMetrics metrics = regulation_metrics(arc.t, error_norms);
        if (!estimate_error_norms.empty()) {
            const RegulationMetrics est = regulation_metrics(arc.t, estimate_error_norms);
            extra["estimate_final_error"] = est.final_error;
            extra["estimate_peak_error"] = est.peak_error;
            if (est.fitted_decay_rate) extra["estimate_fitted_decay_rate"] = *est.fitted_decay_rate;
        }
        write_text_file(out_dir + "/metrics.json", metrics_to_text(metrics, extra));
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << config_error_to_message(e) << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_verify(const std::string& config_path, const std::string& regulator_path) {
    try {
        const RunConfig cfg = load_run_config(config_path);
        const RegulatorDocument doc = load_regulator(regulator_path);
        if (doc.architecture != cfg.architecture) {
            std::cerr << "regulator/config architecture mismatch\n";
            return 1;
        }

        if (cfg.architecture == "pre") {
            const ExtendedPlantPre ext =
                build_extended_pre(cfg.plant, doc.matrix("K"), doc.matrix("G1"), doc.matrix("G2"));
            const lmi::ClosedLoopPreMatrices cl =
                lmi::closed_loop_pre_matrices(ext, regulator_pre_from_doc(doc));
            const lmi::LmiProblem analysis =
                lmi::assemble_pre_analysis_lmis(cl, cfg.T2, cfg.delta);
            const lmi::SolveResult solved = lmi::solve_feasibility(analysis);
            CertificateReport report;
            if (solved.feasible) report = lmi::verify_assignment(analysis, solved.assignment, 1e-10);
            std::cout << certificate_to_text(report) << "\n";
            return solved.feasible && report.overall ? 0 : 2;
        }

        const PostLoopMatrices pl =
            build_post_loop(cfg.plant, doc.matrix("A_k"), doc.matrix("B_k"), doc.matrix("C_k"),
                            doc.matrix("D_k"), doc.matrix("K"), doc.matrix("G1"), doc.matrix("G2"));
        const HurwitzReport hw = check_hurwitz(pl.frak_Ac);
        if (!hw.hurwitz) {
            std::cerr << "closed-loop matrix is not Hurwitz (abscissa " << hw.abscissa << ")\n";
            return 2;
        }
        const lmi::LmiProblem analysis = lmi::assemble_post_analysis_lmis(
            pl.frak_A, pl.H2, doc.matrix("Q"), doc.matrix("W"), cfg.T2, cfg.delta);
        const lmi::SolveResult solved = lmi::solve_feasibility(analysis);
        if (!solved.feasible) {
            std::cerr << "observer certificate LMIs infeasible for the given (Q, W)\n";
            return 2;
        }
        const CertificateReport report = check_assumption4(
            solved.assignment.values.at("Pbar"), solved.assignment.values.at("Phat"), cfg.delta,
            pl.frak_A, doc.matrix("Q"), doc.matrix("W"), pl.H2, cfg.T2);
        std::cout << certificate_to_text(report) << "\n";
        return report.overall ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << config_error_to_message(e) << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_reproduce(const std::string& id, const std::string& out_dir,
                  std::optional<std::uint64_t> seed) {
    if (id != "preproc" && id != "postproc") {
        std::cerr << "unknown example id \"" << id << "\"; valid ids: preproc, postproc\n";
        return 1;
    }
    const std::string config_path = config_dir() + "/" + id + "_paper.json";
    const std::string run_dir = out_dir + "/" + id;

    std::string effective_config = config_path;
    try {
        std::filesystem::create_directories(run_dir);
        if (seed) {
            // Rewrite the sampling seed so runs are reproducible per seed.
            nlohmann::json j = nlohmann::json::parse(read_text_file(config_path));
            j["sampling"]["seed"] = *seed;
            effective_config = run_dir + "/config.json";
            write_text_file(effective_config, j.dump(2));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }

    if (int rc = cmd_synthesize(effective_config, run_dir); rc != 0) return rc;
    if (int rc = cmd_verify(effective_config, run_dir + "/regulator.json"); rc != 0) return rc;
    return cmd_simulate(effective_config, run_dir + "/regulator.json", run_dir);
}

}  // namespace sdreg::cli
