#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"
#include "csv.hpp"
#include "ftcheck.hpp"
#include "ldf.hpp"
#include "parallel.hpp"

namespace gaussldt {

// One FT report per parameter value. Failures are recorded per row.
inline std::vector<SweepRow> run_sweep(const config::ModelConfig& base, const std::string& bath,
                                       const std::string& param, const std::vector<double>& values,
                                       unsigned threads = 1, double threshold = 1e-2) {
    std::vector<SweepRow> rows(values.size());
    parallel_for(values.size(), threads, [&](std::size_t i) {
        rows[i].param_value = values[i];
        try {
            config::ModelConfig cfg = base;
            config::set_parameter(cfg, param, values[i]);
            ThetaEvaluator ev(cfg.build(), cfg.counting(bath));
            rows[i].report = ft_report(ev, threshold);
        } catch (const std::exception& e) {
            rows[i].error = e.what();
        }
    });
    return rows;
}

struct KappaRow {
    double param_value = 0.0;
    double kappa1 = std::numeric_limits<double>::quiet_NaN();
    double kappa1_identity = std::numeric_limits<double>::quiet_NaN();
    std::string error;
};

inline std::vector<KappaRow> run_kappa_scan(const config::ModelConfig& base, const std::string& bath,
                                            const std::string& param, const std::vector<double>& values,
                                            unsigned threads = 1) {
    std::vector<KappaRow> rows(values.size());
    parallel_for(values.size(), threads, [&](std::size_t i) {
        rows[i].param_value = values[i];
        try {
            config::ModelConfig cfg = base;
            config::set_parameter(cfg, param, values[i]);
            ThetaEvaluator ev(cfg.build(), cfg.counting(bath));
            rows[i].kappa1 = cumulants(ev, 1).kappa[0];
            rows[i].kappa1_identity = first_cumulant_identity(ev);
        } catch (const std::exception& e) {
            rows[i].error = e.what();
        }
    });
    return rows;
}

inline void write_kappa_csv(std::ostream& out, const std::vector<KappaRow>& rows) {
    out << "param_value,kappa1,kappa1_identity\n";
    for (const auto& r : rows) csv::row(out, {csv::num(r.param_value), csv::num(r.kappa1), csv::num(r.kappa1_identity)});
}

} // namespace gaussldt
