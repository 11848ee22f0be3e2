#include "sdreg/config.hpp"

#include <fstream>
#include <sstream>

#include "sdreg/jsonio.hpp"

namespace sdreg {

namespace {

using nlohmann::json;

const json& field(const json& j, const std::string& section, const std::string& key) {
    if (!j.contains(key)) throw ConfigError(section.empty() ? key : section + "." + key, "missing");
    return j.at(key);
}

Matrix matrix_field(const json& j, const std::string& section, const std::string& key) {
    try {
        return matrix_from_json(field(j, section, key));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(section + "." + key, e.what());
    }
}

double number_field(const json& j, const std::string& section, const std::string& key) {
    const json& v = field(j, section, key);
    if (!v.is_number()) throw ConfigError(section + "." + key, "expected a number");
    return v.get<double>();
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError("<document>", e.what());
    }

    const json& plant_j = field(j, "", "plant");
    PlantModel plant = [&]() {
        try {
            return PlantModel(matrix_field(plant_j, "plant", "A_p"),
                              matrix_field(plant_j, "plant", "B_p"),
                              matrix_field(plant_j, "plant", "E_p"),
                              matrix_field(plant_j, "plant", "C_p"),
                              matrix_field(plant_j, "plant", "F_p"));
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("plant", e.what());
        }
    }();

    Exosystem exo = [&]() {
        try {
            return Exosystem(matrix_field(field(j, "", "exosystem"), "exosystem", "S"));
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("exosystem", e.what());
        }
    }();

    const json& samp_j = field(j, "", "sampling");
    SamplingSpec sampling = [&]() {
        std::optional<std::uint64_t> seed;
        if (samp_j.contains("seed")) seed = samp_j.at("seed").get<std::uint64_t>();
        std::optional<std::vector<double>> times;
        if (samp_j.contains("explicit_times"))
            times = samp_j.at("explicit_times").get<std::vector<double>>();
        try {
            return SamplingSpec(number_field(samp_j, "sampling", "T1"),
                                number_field(samp_j, "sampling", "T2"),
                                sampling_mode_from_string(
                                    field(samp_j, "sampling", "mode").get<std::string>()),
                                seed, std::move(times));
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError("sampling", e.what());
        }
    }();

    RunConfig cfg{std::move(plant), std::move(exo), std::move(sampling)};

    cfg.architecture = field(j, "", "architecture").get<std::string>();
    if (cfg.architecture != "pre" && cfg.architecture != "post")
        throw ConfigError("architecture", "must be \"pre\" or \"post\"");

    const json& hp = field(j, "", "hyperparams");
    cfg.delta = number_field(hp, "hyperparams", "delta");
    if (cfg.architecture == "pre") cfg.alpha = number_field(hp, "hyperparams", "alpha");
    cfg.T2 = hp.contains("T2") ? hp.at("T2").get<double>() : cfg.sampling.T2;
    if (cfg.T2 != cfg.sampling.T2)
        throw ConfigError("hyperparams.T2", "must match sampling.T2");
    cfg.copies = hp.contains("copies") ? hp.at("copies").get<Eigen::Index>() : cfg.plant.p();
    if (hp.contains("K")) cfg.K = matrix_field(hp, "hyperparams", "K");
    if (hp.contains("G2")) cfg.G2 = matrix_field(hp, "hyperparams", "G2");
    if (hp.contains("n_v")) {
        const auto n_v = hp.at("n_v").get<Eigen::Index>();
        const Eigen::Index implied = cfg.G2 ? cfg.G2->cols() : cfg.plant.p();
        if (n_v != implied)
            throw ConfigError("hyperparams.n_v", "must match the internal model input count");
    }

    if (cfg.architecture == "post") {
        const json& st = field(j, "", "stabilizer");
        cfg.stabilizer = StabilizerSection{
            matrix_field(st, "stabilizer", "A_k"), matrix_field(st, "stabilizer", "B_k"),
            matrix_field(st, "stabilizer", "C_k"), matrix_field(st, "stabilizer", "D_k")};
        if (!cfg.K) throw ConfigError("hyperparams.K", "post architecture requires the gain K");
        if (!cfg.G2) throw ConfigError("hyperparams.G2", "post architecture requires G2");
    }

    const json& sim = field(j, "", "simulation");
    cfg.simulation.horizon = number_field(sim, "simulation", "horizon");
    cfg.simulation.dt = number_field(sim, "simulation", "dt");
    if (!(cfg.simulation.horizon > 0.0)) throw ConfigError("simulation.horizon", "must be positive");
    if (!(cfg.simulation.dt > 0.0)) throw ConfigError("simulation.dt", "must be positive");
    {
        const Matrix w0 = matrix_field(sim, "simulation", "w0");
        if (w0.cols() != 1 || w0.rows() != cfg.exosystem.q())
            throw ConfigError("simulation.w0", "expected a length-q vector");
        cfg.simulation.w0 = w0.col(0);
    }
    if (sim.contains("x0") && !sim.at("x0").is_string()) {
        const Matrix x0 = matrix_field(sim, "simulation", "x0");
        if (x0.cols() != 1) throw ConfigError("simulation.x0", "expected a vector");
        cfg.simulation.x0 = x0.col(0);
    }

    if (j.contains("output") && j.at("output").contains("delimiter")) {
        const std::string d = j.at("output").at("delimiter").get<std::string>();
        if (d.size() != 1) throw ConfigError("output.delimiter", "expected a single character");
        cfg.delimiter = d[0];
    }
    return cfg;
}

RunConfig load_run_config(const std::string& file) { return parse_run_config(read_text_file(file)); }

const Matrix& RegulatorDocument::matrix(const std::string& name) const {
    auto it = matrices.find(name);
    if (it == matrices.end())
        throw std::invalid_argument("regulator document is missing matrix " + name);
    return it->second;
}

std::string regulator_to_text(const RegulatorDocument& doc) {
    json j;
    j["architecture"] = doc.architecture;
    for (const auto& [name, m] : doc.matrices) j["matrices"][name] = matrix_to_json(m);
    for (const auto& [name, v] : doc.scalars) j["scalars"][name] = v;
    return j.dump(2);
}

RegulatorDocument regulator_from_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw ConfigError("<regulator>", e.what());
    }
    RegulatorDocument doc;
    doc.architecture = field(j, "", "architecture").get<std::string>();
    if (j.contains("matrices"))
        for (const auto& [name, m] : j.at("matrices").items())
            doc.matrices[name] = matrix_from_json(m);
    if (j.contains("scalars"))
        for (const auto& [name, v] : j.at("scalars").items()) doc.scalars[name] = v.get<double>();
    return doc;
}

RegulatorDocument load_regulator(const std::string& file) {
    return regulator_from_text(read_text_file(file));
}

std::string certificate_to_text(const CertificateReport& report) {
    json j;
    j["overall"] = report.overall;
    j["checks"] = json::array();
    for (const auto& c : report.checks)
        j["checks"].push_back({{"name", c.name},
                               {"pass", c.pass},
                               {"margin", std::isfinite(c.margin) ? json(c.margin) : json()},
                               {"tolerance", c.tolerance},
                               {"slack", std::isfinite(c.slack) ? json(c.slack) : json()}});
    return j.dump(2);
}

std::string metrics_to_text(const RegulationMetrics& metrics,
                            const std::map<std::string, double>& extra) {
    json j;
    j["final_error"] = metrics.final_error;
    j["peak_error"] = metrics.peak_error;
    j["fitted_decay_rate"] =
        metrics.fitted_decay_rate ? json(*metrics.fitted_decay_rate) : json();
    j["settle_time"] = metrics.settle_time;
    for (const auto& [name, v] : extra) j[name] = v;
    return j.dump(2);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace sdreg
