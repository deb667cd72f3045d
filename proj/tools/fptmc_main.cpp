// Command-line driver: analytic correlation tables, UNIF Monte Carlo scenario
// runs, and default-curve calibration, all emitting CSV (or JSON) data files.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "fptmc/fptmc.hpp"

namespace fs = std::filesystem;
using namespace fptmc;

namespace {

std::ofstream open_out(const fs::path& dir, const std::string& name) {
    fs::create_directories(dir);
    std::ofstream os(dir / name);
    if (!os) throw cli::ConfigError("cannot open output file: " + (dir / name).string());
    return os;
}

std::string time_tag(double t) { return cli::csv_num(t); }

struct AnalyticArgs {
    std::vector<double> z{8.06, 6.46, 3.73, 2.10};
    std::vector<std::string> labels{"A", "Baa", "Ba", "B"};
    double rho = 0.4;
    std::vector<double> horizons{1, 2, 5, 10};
    std::string out = "out";
    std::string format = "csv";
};

void run_analytic(const AnalyticArgs& args) {
    if (args.z.empty() || args.z.size() != args.labels.size()) {
        throw cli::ConfigError("analytic: --z and --labels must be nonempty and of equal length");
    }
    for (double z : args.z) {
        if (!(z > 0.0)) throw cli::ConfigError("analytic: distances must be positive");
    }
    if (!(std::abs(args.rho) < 1.0)) throw cli::ConfigError("analytic: |rho| must be < 1");
    for (double t : args.horizons) {
        if (!(t > 0.0)) throw cli::ConfigError("analytic: horizons must be positive");
    }

    const fs::path dir(args.out);
    {
        auto os = open_out(dir, "default_probabilities.csv");
        os << "firm";
        for (double t : args.horizons) os << ",t=" << time_tag(t);
        os << '\n';
        for (std::size_t i = 0; i < args.z.size(); ++i) {
            os << args.labels[i];
            for (double t : args.horizons) {
                os << ',' << cli::csv_num(analytic::default_probability({args.z[i]}, t));
            }
            os << '\n';
        }
    }
    nlohmann::json all;
    for (double t : args.horizons) {
        std::vector<std::vector<double>> m(args.z.size(), std::vector<double>(args.z.size()));
        for (std::size_t i = 0; i < args.z.size(); ++i) {
            for (std::size_t j = 0; j < args.z.size(); ++j) {
                m[i][j] = analytic::pairwise_default_correlation({args.z[i]}, {args.z[j]},
                                                                 args.rho, t);
            }
        }
        auto os = open_out(dir, "correlations_" + time_tag(t) + ".csv");
        cli::write_matrix_csv(os, args.labels, m);
        if (args.format == "json") all["t=" + time_tag(t)] = cli::matrix_json(args.labels, m);
    }
    if (args.format == "json") {
        auto os = open_out(dir, "correlations.json");
        os << all.dump(2) << '\n';
    }
}

struct SimulateArgs {
    std::string config;
    std::string out = "out";
    std::string format = "csv";
    std::uint64_t runs = 0;     // 0: keep the config value
    std::int64_t seed = -1;     // <0: keep the config value
    unsigned workers = 0;       // 0: keep the config value
};

void run_simulate(const SimulateArgs& args) {
    cli::Scenario sc = cli::load_scenario(args.config);
    if (args.runs > 0) sc.runs = args.runs;
    if (args.seed >= 0) sc.seed = static_cast<std::uint64_t>(args.seed);
    if (args.workers > 0) sc.workers = args.workers;
    SystemSpec sys;
    try {
        sys = sc.to_system();
    } catch (const std::invalid_argument& e) {
        throw cli::ConfigError(std::string("invalid scenario: ") + e.what());
    }

    const auto set = mc::simulate(sys, sc.runs, sc.seed, sc.workers);
    const auto grid = kde::uniform_grid(sys.horizon, sc.grid_points);
    const fs::path dir(args.out);

    std::vector<std::string> names;
    for (const auto& f : sys.firms) names.push_back(f.name);

    for (std::size_t i = 0; i < sys.firms.size(); ++i) {
        const auto est = kde::estimate_density(set, i, grid);
        auto os = open_out(dir, "density_" + names[i] + ".csv");
        cli::write_density_csv(os, est);
        if (args.format == "json") {
            auto js = open_out(dir, "density_" + names[i] + ".json");
            js << cli::density_json(est).dump(2) << '\n';
        }
    }

    for (double t : sc.effective_report_times()) {
        std::vector<std::vector<double>> m(names.size(), std::vector<double>(names.size(), 1.0));
        for (std::size_t i = 0; i < names.size(); ++i) {
            for (std::size_t j = i + 1; j < names.size(); ++j) {
                double c;
                try {
                    c = mc::simulated_default_correlation(set, i, j, t);
                } catch (const std::domain_error&) {
                    c = 0.0;  // no or all defaults observed by t
                }
                m[i][j] = m[j][i] = c;
            }
        }
        auto os = open_out(dir, "correlations_" + time_tag(t) + ".csv");
        cli::write_matrix_csv(os, names, m);
        if (args.format == "json") {
            auto js = open_out(dir, "correlations_" + time_tag(t) + ".json");
            js << cli::matrix_json(names, m).dump(2) << '\n';
        }
    }
}

struct CalibrateArgs {
    std::string config;
    std::string data;
    std::string out = "out";
    std::string format = "csv";
    std::uint64_t runs = 50000;
    std::int64_t seed = -1;
    unsigned workers = 0;
    bool no_shared_lambda = false;
    int max_iterations = 200;
};

void run_calibrate(const CalibrateArgs& args) {
    cli::Scenario sc = cli::load_scenario(args.config);
    auto curves = cli::load_historical_csv(args.data);

    // Pair curves with firms by name.
    std::vector<calib::HistoricalCurve> ordered;
    for (const auto& f : sc.firms) {
        auto it = std::find_if(curves.begin(), curves.end(),
                               [&](const auto& c) { return c.label == f.name; });
        if (it == curves.end()) {
            throw cli::ConfigError("data file has no curve for firm '" + f.name + "'");
        }
        ordered.push_back(*it);
    }

    SystemSpec initial;
    try {
        initial = sc.to_system();
    } catch (const std::invalid_argument& e) {
        throw cli::ConfigError(std::string("invalid scenario: ") + e.what());
    }

    calib::CalibrationSpec cspec;
    cspec.mc_runs = args.runs > 0 ? args.runs : sc.runs;
    cspec.seed = args.seed >= 0 ? static_cast<std::uint64_t>(args.seed) : sc.seed;
    cspec.workers = args.workers > 0 ? args.workers : sc.workers;
    cspec.shared_lambda = !args.no_shared_lambda;
    cspec.max_iterations = args.max_iterations;
    cspec.grid_points = sc.grid_points;

    const auto result = calib::calibrate(initial, ordered, cspec);

    const fs::path dir(args.out);
    {
        auto os = open_out(dir, "params.csv");
        cli::write_params_csv(os, result.fitted, result.objective);
    }
    {
        auto os = open_out(dir, "trace.csv");
        cli::write_trace_csv(os, result.traces);
    }
    if (args.format == "json") {
        nlohmann::json j;
        for (const auto& f : result.fitted.firms) {
            j["params"].push_back({{"firm", f.name},
                                   {"sigma", effective_sigma(f)},
                                   {"lambda", result.fitted.lambda},
                                   {"jump_mean", f.jump_mean},
                                   {"jump_std", f.jump_std}});
        }
        j["objective"] = result.objective;
        auto os = open_out(dir, "params.json");
        os << j.dump(2) << '\n';
    }
    std::cout << "calibrated " << result.fitted.firms.size() << " firm(s), objective "
              << cli::csv_num(result.objective) << "\n";
}

struct TablesArgs {
    std::vector<double> z{8.06, 6.46, 3.73, 2.10};
    std::vector<std::string> labels{"A", "Baa", "Ba", "B"};
    double rho = 0.4;
    std::vector<double> horizons{1, 2, 5, 10};
    std::string out = "out";
    std::string config;        // optional: firm parameters for the simulated columns
    std::uint64_t runs = 0;    // 0: analytic tables only
    std::uint64_t seed = 7;
    unsigned workers = 1;
};

// One-shot reproduction of the correlation-table layout: the closed-form
// matrices always, plus simulated matrices from pairwise two-firm runs when a
// scenario config and a run count are given.
void run_tables(const TablesArgs& args) {
    AnalyticArgs an;
    an.z = args.z;
    an.labels = args.labels;
    an.rho = args.rho;
    an.horizons = args.horizons;
    an.out = args.out;
    const fs::path dir(args.out);
    for (double t : args.horizons) {
        std::vector<std::vector<double>> m(args.z.size(), std::vector<double>(args.z.size()));
        for (std::size_t i = 0; i < args.z.size(); ++i) {
            for (std::size_t j = 0; j < args.z.size(); ++j) {
                m[i][j] = analytic::pairwise_default_correlation({args.z[i]}, {args.z[j]},
                                                                 args.rho, t);
            }
        }
        auto os = open_out(dir, "table_" + time_tag(t) + "y_diffusion.csv");
        cli::write_matrix_csv(os, args.labels, m);
    }
    if (args.runs == 0) return;
    if (args.config.empty()) {
        throw cli::ConfigError("tables: --runs needs --config with the firm parameters");
    }
    cli::Scenario sc = cli::load_scenario(args.config);
    const std::size_t n = sc.firms.size();
    std::vector<std::string> names;
    for (const auto& f : sc.firms) names.push_back(f.name);

    // Correlations of every pair from dedicated two-firm systems.
    std::vector<std::vector<std::vector<double>>> sim(
        args.horizons.size(),
        std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            cli::Scenario pair = sc;
            pair.firms = {sc.firms[i], sc.firms[j]};
            pair.firms[0].name += "_1";  // diagonal pairs: two firms of one rating
            pair.firms[1].name += "_2";
            SystemSpec sys = pair.to_system();
            const auto set = mc::simulate(sys, args.runs, args.seed, args.workers);
            for (std::size_t h = 0; h < args.horizons.size(); ++h) {
                double c;
                try {
                    c = mc::simulated_default_correlation(set, 0, 1, args.horizons[h]);
                } catch (const std::domain_error&) {
                    c = 0.0;
                }
                sim[h][i][j] = sim[h][j][i] = c;
            }
        }
    }
    for (std::size_t h = 0; h < args.horizons.size(); ++h) {
        auto os = open_out(dir, "table_" + time_tag(args.horizons[h]) + "y_unif.csv");
        cli::write_matrix_csv(os, names, sim[h]);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"First-passage-time Monte Carlo for correlated jump-diffusions"};
    app.require_subcommand(1);

    AnalyticArgs an;
    auto* c_an = app.add_subcommand("analytic", "closed-form default probabilities and correlations");
    c_an->add_option("--z", an.z, "standardized distances to default");
    c_an->add_option("--labels", an.labels, "labels for the distances");
    c_an->add_option("--rho", an.rho, "diffusion correlation");
    c_an->add_option("--horizons", an.horizons, "horizons in years");
    c_an->add_option("--out", an.out, "output directory");
    c_an->add_option("--format", an.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "UNIF Monte Carlo scenario run");
    c_sim->add_option("--config", sim.config, "scenario config file")->required();
    c_sim->add_option("--runs", sim.runs, "Monte Carlo runs (overrides config)")
        ->check(CLI::PositiveNumber);
    c_sim->add_option("--seed", sim.seed, "random seed (overrides config)");
    c_sim->add_option("--workers", sim.workers, "worker threads (overrides config)");
    c_sim->add_option("--out", sim.out, "output directory");
    c_sim->add_option("--format", sim.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    CalibrateArgs cal;
    auto* c_cal = app.add_subcommand("calibrate", "fit parameters to default-rate curves");
    c_cal->add_option("--config", cal.config, "scenario config with initial guesses")->required();
    c_cal->add_option("--data", cal.data, "historical curve CSV")->required();
    c_cal->add_option("--runs", cal.runs, "runs per objective evaluation")->check(CLI::PositiveNumber);
    c_cal->add_option("--seed", cal.seed, "common-random-numbers seed");
    c_cal->add_option("--workers", cal.workers, "worker threads");
    c_cal->add_option("--max-iterations", cal.max_iterations, "optimizer iteration cap");
    c_cal->add_flag("--no-shared-lambda", cal.no_shared_lambda,
                    "fit the jump intensity separately per firm");
    c_cal->add_option("--out", cal.out, "output directory");
    c_cal->add_option("--format", cal.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    TablesArgs tab;
    auto* c_tab = app.add_subcommand("tables", "one-shot correlation table reproduction");
    c_tab->add_option("--z", tab.z, "standardized distances to default");
    c_tab->add_option("--labels", tab.labels, "labels for the distances");
    c_tab->add_option("--rho", tab.rho, "diffusion correlation");
    c_tab->add_option("--horizons", tab.horizons, "horizons in years");
    c_tab->add_option("--out", tab.out, "output directory");
    c_tab->add_option("--config", tab.config, "scenario config for the simulated columns");
    c_tab->add_option("--runs", tab.runs, "runs per pair (0: analytic only)");
    c_tab->add_option("--seed", tab.seed, "random seed");
    c_tab->add_option("--workers", tab.workers, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (c_an->parsed()) run_analytic(an);
        if (c_sim->parsed()) run_simulate(sim);
        if (c_cal->parsed()) run_calibrate(cal);
        if (c_tab->parsed()) run_tables(tab);
    } catch (const cli::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
