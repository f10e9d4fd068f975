#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "seqsel/harness.hpp"

namespace fs = std::filesystem;
using namespace seqsel;

namespace {

struct Common {
    std::string config;
    std::string out = "results.csv";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::string scale = "desk";
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "key-value config file applied over the preset")
        ->check(CLI::ExistingFile);
    app->add_option("--out", c.out, "CSV output path");
    app->add_option("--seed", c.seed, "master seed");
    app->add_option("--workers", c.workers, "worker threads (results do not depend on it)");
    app->add_option("--scale", c.scale, "preset")->check(CLI::IsMember({"desk", "paper"}));
}

harness::ExperimentConfig resolve(const Common& c) {
    auto cfg = harness::preset(c.scale);
    if (!c.config.empty()) {
        cfg = harness::load_config(c.config, cfg);
    }
    if (c.seed) {
        cfg.seed = *c.seed;
    }
    if (c.workers) {
        cfg.workers = *c.workers;
    }
    cfg.validate();
    return cfg;
}

fs::path sibling(const fs::path& out, const std::string& suffix) {
    fs::path p = out;
    p.replace_extension();
    return p.string() + suffix;
}

void finish(const Common& c, harness::Experiment& ex, const std::vector<harness::ResultRow>& rows,
            const std::string& command, std::vector<std::string> notes, double wall) {
    const fs::path out(c.out);
    if (out.has_parent_path()) {
        fs::create_directories(out.parent_path());
    }
    harness::emit_csv(rows, out);
    notes.push_back("total_wall_s=" + std::to_string(wall));
    harness::write_metadata(sibling(out, ".meta.json"), ex, rows, command, notes);
    std::cout << harness::format_csv(rows);
}

int cmd_run(const Common& c) {
    auto cfg = resolve(c);
    harness::Experiment ex(cfg);
    const auto start = std::chrono::steady_clock::now();
    std::vector<harness::Experiment::PointInfo> infos;
    const auto rows = ex.sweep(&infos);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::vector<std::string> notes;
    int failed = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const auto& info = infos[i];
        std::string tag = r.scheme + " p=" + std::to_string(r.launch_power_dbm) +
                          " n_t=" + std::to_string(r.n_t);
        if (!info.error.empty()) {
            notes.push_back(tag + ": point aborted: " + info.error);
            ++failed;
        } else if (info.discarded_blocks > 0) {
            notes.push_back(tag + ": discarded " + std::to_string(info.discarded_blocks) +
                            " blocks on pilot mismatch");
        }
    }
    finish(c, ex, rows, "run", notes, wall);
    const auto best = harness::optimal_rows(rows);
    harness::emit_csv(best, sibling(fs::path(c.out), ".optimum.csv"));
    return failed == 0 ? 0 : 2;
}

int cmd_bound(const Common& c, std::optional<double> eta, std::optional<std::size_t> m_total) {
    auto cfg = resolve(c);
    if (eta) {
        cfg.bound.eta = *eta;
    }
    if (m_total) {
        cfg.bound.m_total = *m_total;
    }
    harness::Experiment ex(cfg);
    const auto start = std::chrono::steady_clock::now();
    std::vector<harness::ResultRow> rows;
    for (double p : cfg.sweep.launch_power_dbm) {
        rows.push_back(ex.ss_bound_estimate(cfg.bound.eta, cfg.bound.m_total, p));
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    finish(c, ex, rows, "bound", {"eta=" + std::to_string(cfg.bound.eta),
                                  "m_total=" + std::to_string(cfg.bound.m_total)},
           wall);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sequence selection for shaped signalling over a nonlinear WDM link"};
    app.require_subcommand(1);
    Common run_opts;
    Common bound_opts;
    std::optional<double> eta;
    std::optional<std::size_t> m_total;

    auto* run = app.add_subcommand("run", "power and N_t sweep over the configured schemes");
    add_common(run, run_opts);
    auto* bound = app.add_subcommand("bound", "empirical selection bound per launch power");
    add_common(bound, bound_opts);
    bound->add_option("--eta", eta, "acceptance rate in (0, 1]");
    bound->add_option("--m-total", m_total, "candidate ESS blocks per channel");
    auto* selftest = app.add_subcommand("selftest", "quick property checks");

    CLI11_PARSE(app, argc, argv);
    try {
        if (run->parsed()) {
            return cmd_run(run_opts);
        }
        if (bound->parsed()) {
            return cmd_bound(bound_opts, eta, m_total);
        }
        if (selftest->parsed()) {
            return harness::run_selftest(std::cout) == 0 ? 0 : 1;
        }
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
