#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

namespace sdreg {

struct ConstraintCheck {
    std::string name;
    bool pass = false;
    // Signed extreme eigenvalue of the evaluated constraint (lambda_max for
    // <=/< senses, lambda_min for >= senses).
    double margin = 0.0;
    double tolerance = 0.0;
    // Distance from the constraint boundary in the feasible direction;
    // positive means satisfied with room to spare.
    double slack = 0.0;
};

struct CertificateReport {
    std::vector<ConstraintCheck> checks;
    bool overall = false;

    void finalize() {
        overall = true;
        for (const auto& c : checks) overall = overall && c.pass;
    }

    const ConstraintCheck* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }

    double worst_slack() const {
        double w = std::numeric_limits<double>::infinity();
        for (const auto& c : checks) w = std::min(w, c.slack);
        return w;
    }
};

}  // namespace sdreg
