#pragma once

// Scenario configuration and file I/O for the command-line driver: a flat
// key-value format with one [firm.NAME] section per firm, strict unknown-key
// rejection with line diagnostics, a canonical serializer (parse-serialize-
// parse is the identity), and the CSV/JSON emitters for densities, default
// rates, correlation matrices and fitted parameters.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fptmc/calib.hpp"
#include "fptmc/kde.hpp"
#include "fptmc/model.hpp"

namespace fptmc::cli {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct FirmConfig {
    std::string name;
    double mu = -0.001;
    double gamma = -0.001;
    double x0 = 2.0;
    double kappa_log = 0.0;
    double sigma = 0.0;
    bool has_sigma = false;
    std::vector<double> sigma_row;  // explicit row overrides sigma + rho
    double jump_mean = 0.0;
    double jump_std = 0.0;

    bool operator==(const FirmConfig&) const = default;
};

struct Scenario {
    double horizon = 10.0;
    double lambda = 0.0;
    double mean_interjump = 1.0;
    double rho = 0.0;  // common pairwise diffusion correlation when rows are built from scalars
    std::uint64_t runs = 100000;
    std::uint64_t seed = 1;
    unsigned workers = 1;
    std::size_t grid_points = 512;
    std::vector<double> report_times;  // empty: yearly points 1..horizon
    std::vector<FirmConfig> firms;

    bool operator==(const Scenario&) const = default;

    std::vector<double> effective_report_times() const {
        if (!report_times.empty()) return report_times;
        std::vector<double> ts;
        for (double t = 1.0; t <= horizon + 1e-9; t += 1.0) ts.push_back(t);
        return ts;
    }

    SystemSpec to_system() const {
        SystemSpec sys;
        sys.horizon = horizon;
        sys.lambda = lambda;
        sys.mean_interjump = mean_interjump;
        bool any_row = false, all_rows = true;
        for (const auto& f : firms) {
            any_row = any_row || !f.sigma_row.empty();
            all_rows = all_rows && !f.sigma_row.empty();
        }
        if (any_row && !all_rows) {
            throw ConfigError("either every firm or no firm may specify sigma_row");
        }
        std::vector<std::vector<double>> rows;
        if (all_rows && !firms.empty()) {
            for (const auto& f : firms) rows.push_back(f.sigma_row);
        } else {
            std::vector<double> sigmas;
            for (const auto& f : firms) {
                if (!f.has_sigma) {
                    throw ConfigError("firm " + f.name + " needs sigma or sigma_row");
                }
                sigmas.push_back(f.sigma);
            }
            rows = firms.size() == 1 ? std::vector<std::vector<double>>{{sigmas[0]}}
                                     : build_sigma_rows(sigmas, rho);
        }
        for (std::size_t i = 0; i < firms.size(); ++i) {
            const auto& f = firms[i];
            FirmSpec spec;
            spec.name = f.name;
            spec.mu = f.mu;
            spec.gamma = f.gamma;
            spec.x0 = f.x0;
            spec.kappa_log = f.kappa_log;
            spec.sigma_row = rows[i];
            spec.jump_mean = f.jump_mean;
            spec.jump_std = f.jump_std;
            sys.firms.push_back(std::move(spec));
        }
        sys.validate();
        return sys;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& v, int line) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line) + ": expected a number, got '" + v + "'");
    }
}

inline std::uint64_t parse_uint(const std::string& v, int line) {
    try {
        std::size_t pos = 0;
        unsigned long long u = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return u;
    } catch (const std::exception&) {
        throw ConfigError("line " + std::to_string(line) + ": expected a nonnegative integer, got '" + v + "'");
    }
}

inline std::vector<double> parse_double_list(const std::string& v, int line) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), line));
    if (out.empty()) throw ConfigError("line " + std::to_string(line) + ": empty list");
    return out;
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt_list(const std::vector<double>& vs) {
    std::string out;
    for (std::size_t k = 0; k < vs.size(); ++k) {
        if (k) out += ",";
        out += fmt(vs[k]);
    }
    return out;
}

}  // namespace detail

inline Scenario parse_scenario(std::istream& in) {
    Scenario sc;
    FirmConfig* firm = nullptr;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = detail::trim(line);
        if (s.empty() || s[0] == '#') continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section");
            std::string section = s.substr(1, s.size() - 2);
            if (section.rfind("firm.", 0) != 0 || section.size() <= 5) {
                throw ConfigError("line " + std::to_string(lineno) + ": unknown section [" + section + "]");
            }
            sc.firms.push_back(FirmConfig{});
            firm = &sc.firms.back();
            firm->name = section.substr(5);
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = detail::trim(s.substr(0, eq));
        const std::string val = detail::trim(s.substr(eq + 1));
        if (firm == nullptr) {
            if (key == "horizon") sc.horizon = detail::parse_double(val, lineno);
            else if (key == "lambda") sc.lambda = detail::parse_double(val, lineno);
            else if (key == "mean_interjump") sc.mean_interjump = detail::parse_double(val, lineno);
            else if (key == "rho") sc.rho = detail::parse_double(val, lineno);
            else if (key == "runs") sc.runs = detail::parse_uint(val, lineno);
            else if (key == "seed") sc.seed = detail::parse_uint(val, lineno);
            else if (key == "workers") sc.workers = static_cast<unsigned>(detail::parse_uint(val, lineno));
            else if (key == "grid_points") sc.grid_points = detail::parse_uint(val, lineno);
            else if (key == "report_times") sc.report_times = detail::parse_double_list(val, lineno);
            else throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        } else {
            if (key == "mu") firm->mu = detail::parse_double(val, lineno);
            else if (key == "gamma") firm->gamma = detail::parse_double(val, lineno);
            else if (key == "x0") firm->x0 = detail::parse_double(val, lineno);
            else if (key == "kappa_log") firm->kappa_log = detail::parse_double(val, lineno);
            else if (key == "sigma") {
                firm->sigma = detail::parse_double(val, lineno);
                firm->has_sigma = true;
            }
            else if (key == "sigma_row") firm->sigma_row = detail::parse_double_list(val, lineno);
            else if (key == "jump_mean") firm->jump_mean = detail::parse_double(val, lineno);
            else if (key == "jump_std") firm->jump_std = detail::parse_double(val, lineno);
            else throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "' in [firm." + firm->name + "]");
        }
    }
    if (sc.firms.empty()) throw ConfigError("scenario defines no [firm.*] section");
    return sc;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_scenario(in);
}

inline std::string serialize_scenario(const Scenario& sc) {
    std::string out;
    out += "horizon = " + detail::fmt(sc.horizon) + "\n";
    out += "lambda = " + detail::fmt(sc.lambda) + "\n";
    out += "mean_interjump = " + detail::fmt(sc.mean_interjump) + "\n";
    out += "rho = " + detail::fmt(sc.rho) + "\n";
    out += "runs = " + std::to_string(sc.runs) + "\n";
    out += "seed = " + std::to_string(sc.seed) + "\n";
    out += "workers = " + std::to_string(sc.workers) + "\n";
    out += "grid_points = " + std::to_string(sc.grid_points) + "\n";
    if (!sc.report_times.empty()) {
        out += "report_times = " + detail::fmt_list(sc.report_times) + "\n";
    }
    for (const auto& f : sc.firms) {
        out += "\n[firm." + f.name + "]\n";
        out += "mu = " + detail::fmt(f.mu) + "\n";
        out += "gamma = " + detail::fmt(f.gamma) + "\n";
        out += "x0 = " + detail::fmt(f.x0) + "\n";
        out += "kappa_log = " + detail::fmt(f.kappa_log) + "\n";
        if (f.has_sigma) out += "sigma = " + detail::fmt(f.sigma) + "\n";
        if (!f.sigma_row.empty()) out += "sigma_row = " + detail::fmt_list(f.sigma_row) + "\n";
        out += "jump_mean = " + detail::fmt(f.jump_mean) + "\n";
        out += "jump_std = " + detail::fmt(f.jump_std) + "\n";
    }
    return out;
}

// ---- historical default-rate curves -------------------------------------

inline std::vector<calib::HistoricalCurve> read_historical_csv(std::istream& in,
                                                               const std::string& origin) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(origin + ": row 0: empty file");
    if (detail::trim(line) != "rating,t_years,cum_default_rate") {
        throw ConfigError(origin + ": row 0: expected header 'rating,t_years,cum_default_rate'");
    }
    std::vector<calib::HistoricalCurve> curves;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        std::string s = detail::trim(line);
        if (s.empty()) continue;
        std::stringstream ss(s);
        std::string rating, t_str, r_str;
        if (!std::getline(ss, rating, ',') || !std::getline(ss, t_str, ',') || !std::getline(ss, r_str)) {
            throw ConfigError(origin + ": row " + std::to_string(row) + ": expected rating,t_years,cum_default_rate");
        }
        rating = detail::trim(rating);
        const double t = detail::parse_double(detail::trim(t_str), row);
        const double r = detail::parse_double(detail::trim(r_str), row);
        auto it = std::find_if(curves.begin(), curves.end(),
                               [&](const auto& c) { return c.label == rating; });
        if (it == curves.end()) {
            curves.push_back({rating, {}, {}});
            it = curves.end() - 1;
        }
        it->times.push_back(t);
        it->rates.push_back(r);
    }
    if (curves.empty()) throw ConfigError(origin + ": no data rows");
    for (const auto& c : curves) c.validate();
    return curves;
}

inline std::vector<calib::HistoricalCurve> load_historical_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open data file: " + path);
    return read_historical_csv(in, path);
}

// ---- output emitters ------------------------------------------------------

inline std::string csv_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

// Per-firm density curve as (t, f, F) rows.
inline void write_density_csv(std::ostream& os, const kde::DensityEstimate& est) {
    os << "t,f,F\n";
    for (std::size_t k = 0; k < est.grid.size(); ++k) {
        const double t = est.grid[k];
        os << csv_num(t) << ',' << csv_num(est.density[k]) << ','
           << csv_num(kde::cumulative_default_rate(est, t)) << '\n';
    }
}

inline void write_matrix_csv(std::ostream& os, const std::vector<std::string>& names,
                             const std::vector<std::vector<double>>& matrix) {
    os << "firm";
    for (const auto& n : names) os << ',' << n;
    os << '\n';
    for (std::size_t i = 0; i < names.size(); ++i) {
        os << names[i];
        for (std::size_t j = 0; j < names.size(); ++j) os << ',' << csv_num(matrix[i][j]);
        os << '\n';
    }
}

inline void write_params_csv(std::ostream& os, const SystemSpec& sys, double objective_value) {
    os << "firm,sigma,lambda,jump_mean,jump_std,objective\n";
    for (const auto& f : sys.firms) {
        os << f.name << ',' << csv_num(effective_sigma(f)) << ',' << csv_num(sys.lambda) << ','
           << csv_num(f.jump_mean) << ',' << csv_num(f.jump_std) << ','
           << csv_num(objective_value) << '\n';
    }
}

inline void write_trace_csv(std::ostream& os, const std::vector<calib::FirmFitTrace>& traces) {
    os << "firm,iteration,best_objective\n";
    for (const auto& tr : traces) {
        for (std::size_t k = 0; k < tr.best_objective.size(); ++k) {
            os << tr.name << ',' << k + 1 << ',' << csv_num(tr.best_objective[k]) << '\n';
        }
    }
}

// JSON mirrors of the CSV payloads, for tooling.
inline nlohmann::json density_json(const kde::DensityEstimate& est) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t k = 0; k < est.grid.size(); ++k) {
        rows.push_back({{"t", est.grid[k]},
                        {"f", est.density[k]},
                        {"F", kde::cumulative_default_rate(est, est.grid[k])}});
    }
    return {{"bandwidth", est.bandwidth}, {"n_samples", est.n_samples}, {"curve", rows}};
}

inline nlohmann::json matrix_json(const std::vector<std::string>& names,
                                  const std::vector<std::vector<double>>& matrix) {
    return {{"firms", names}, {"matrix", matrix}};
}

}  // namespace fptmc::cli
