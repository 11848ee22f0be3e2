#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "sdreg/certificate.hpp"
#include "sdreg/model.hpp"
#include "sdreg/verify.hpp"

// Config ingestion and the on-disk document formats (run configs, regulator
// documents, reports, metrics). All files are JSON; matrices are row-major
// arrays of arrays.

namespace sdreg {

// Invalid configs are rejected with the offending field path.
struct ConfigError : std::runtime_error {
    std::string path;
    ConfigError(std::string path_, const std::string& what_)
        : std::runtime_error(path_ + ": " + what_), path(std::move(path_)) {}
};

struct StabilizerSection {
    Matrix A_k, B_k, C_k, D_k;
};

struct SimulationSection {
    std::optional<Vector> x0;  // absent = zero initial state
    Vector w0;
    double horizon = 0.0;
    double dt = 0.0;
};

struct RunConfig {
    PlantModel plant;
    Exosystem exosystem;
    SamplingSpec sampling;
    std::string architecture;  // "pre" | "post"
    double alpha = 0.0;        // pre only
    double delta = 0.0;
    double T2 = 0.0;  // LMI bound; defaults to sampling.T2
    Eigen::Index copies = 0;
    std::optional<Matrix> K;
    std::optional<Matrix> G2;  // post: required internal model input map
    std::optional<StabilizerSection> stabilizer;
    SimulationSection simulation;
    char delimiter = ',';
};

RunConfig load_run_config(const std::string& file);
RunConfig parse_run_config(const std::string& text);

// Regulator document: architecture tag plus named matrices/scalars. Numeric
// round trip is exact.
struct RegulatorDocument {
    std::string architecture;
    std::map<std::string, Matrix> matrices;
    std::map<std::string, double> scalars;

    const Matrix& matrix(const std::string& name) const;
    bool has(const std::string& name) const { return matrices.count(name) > 0; }
};

std::string regulator_to_text(const RegulatorDocument& doc);
RegulatorDocument regulator_from_text(const std::string& text);
RegulatorDocument load_regulator(const std::string& file);

std::string certificate_to_text(const CertificateReport& report);

std::string metrics_to_text(const RegulationMetrics& metrics,
                            const std::map<std::string, double>& extra = {});

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace sdreg
