#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "seqsel/channel.hpp"
#include "seqsel/selection.hpp"
#include "seqsel/shaping.hpp"

namespace seqsel::harness {

enum class ShapingScheme { mb, ess, ess_bsss, ess_siss };

std::string to_string(ShapingScheme s);
ShapingScheme parse_scheme(const std::string& s);
std::string to_string(selection::MetricKind m);
selection::MetricKind parse_metric(const std::string& s);

struct SweepConfig {
    std::vector<double> launch_power_dbm{-2, -1, 0, 1, 2, 3, 4};
    std::vector<std::size_t> n_t{256};
    std::vector<ShapingScheme> schemes{ShapingScheme::mb, ShapingScheme::ess,
                                       ShapingScheme::ess_bsss, ShapingScheme::ess_siss};
};

struct BoundConfig {
    double eta = 1e-3;
    std::size_t m_total = 30000;
};

struct ExperimentConfig {
    shaping::ShapingConfig shaping;
    std::size_t marginal_blocks = 4000;  // ESS marginal estimate, per trellis

    selection::MetricKind metric = selection::MetricKind::nli;
    std::size_t block_symbols = 256;  // n, payload 4D symbols per selection block
    std::size_t wk_window = 128;
    std::size_t wk_stride = 64;
    selection::WkAggregate wk_aggregate = selection::WkAggregate::mean;
    std::size_t metric_sps = 4;  // NLI emulation oversampling

    channel::FiberParams fiber;
    channel::WdmConfig wdm;
    channel::AmplifierParams amp;
    channel::StepConfig steps;

    SweepConfig sweep;
    BoundConfig bound;
    std::size_t n_blocks = 200;
    // Consecutive selection blocks propagated as one continuous waveform; the
    // frame should outlast the dispersive memory and channel walk-off.
    std::size_t frame_blocks = 16;
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    bool record_wall_time = false;

    /// DM blocks per selection block, 4n / N.
    std::size_t dm_blocks() const;
    void validate() const;
};

/// Desk preset: 10 x 100 km, 3 channels, n = 64, N_t = 16.
ExperimentConfig desk_preset();
/// Full-scale preset: 30 x 100 km, 5 channels, n = 256, N_t = 256.
ExperimentConfig paper_preset();
ExperimentConfig preset(const std::string& name);

struct ResultRow {
    std::string scheme;
    std::string metric;
    double launch_power_dbm = 0.0;
    std::size_t n_t = 1;
    double air_bits_per_4d = 0.0;
    double se_bits_per_s_hz = 0.0;
    double ci95 = 0.0;
    double selected_metric_mean = 0.0;
    double wall_time_s = 0.0;

    friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

inline constexpr const char* kCsvHeader =
    "scheme,metric,power_dbm,n_t,air_bits_4d,se_bits_s_hz,ci95,sel_metric_mean,wall_s";

void emit_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path);
std::string format_csv(const std::vector<ResultRow>& rows);
std::vector<ResultRow> parse_csv(const std::string& text);
std::vector<ResultRow> read_csv(const std::filesystem::path& path);

/// Everything a point needs besides the launch power, built once per
/// configuration: trellises, ESS marginals, books, nominal energies.
class Experiment {
public:
    explicit Experiment(ExperimentConfig cfg);

    const ExperimentConfig& config() const { return cfg_; }

    /// Per-point diagnostics beyond the CSV row.
    struct PointInfo {
        std::size_t discarded_blocks = 0;
        double rate_info_bits_per_4d = 0.0;
        double entropy_bits_per_4d = 0.0;
        double overhead_bits_per_4d = 0.0;
        double slot_factor = 1.0;
        double se_ci95 = 0.0;
        std::string error;
    };

    ResultRow run_point(ShapingScheme scheme, double power_dbm, std::size_t n_t,
                        PointInfo* info = nullptr);
    /// Cartesian sweep; MB and ESS are evaluated once per power (n_t = 1).
    /// `infos`, when given, receives the diagnostics in row order.
    std::vector<ResultRow> sweep(std::vector<PointInfo>* infos = nullptr);
    /// Empirical selection bound: keep the best ceil(eta * m_total) of m_total
    /// ESS blocks by the NLI metric, evaluate them over the full link, and add
    /// the rate penalty log2(eta) / n before SE conversion.
    ResultRow ss_bound_estimate(double eta, std::size_t m_total, double power_dbm,
                                PointInfo* info = nullptr);

    /// Per-N_t derived DM settings, exposed for logging.
    struct DmLayout {
        std::size_t k = 0;  // DM input bits per DM block
        std::size_t pilot_bits = 0;
        std::size_t info_bits = 0;  // per selection block, pilots excluded
        std::int64_t emax = 0;
        std::vector<double> marginal;
    };
    const DmLayout& dm_layout(ShapingScheme scheme, std::size_t n_t);
    const shaping::MbDistribution& mb_distribution() const { return mb_; }

    /// Transmitted block of channel `channel` in selection block `block`;
    /// returns the symbols and the metric of the transmitted candidate.
    struct TxBlock {
        Symbol4DSequence symbols;  // with pilots for SISS
        std::size_t pilot_symbols = 0;
        std::size_t chosen = 0;
        double metric = 0.0;
    };
    TxBlock make_tx_block(ShapingScheme scheme, std::size_t n_t, double power_dbm,
                          std::size_t channel, std::size_t block, bool score);

    selection::MetricFn metric_fn(ShapingScheme scheme, std::size_t n_t, double power_dbm,
                                  selection::MetricKind kind);
    double nominal_energy(ShapingScheme scheme, std::size_t n_t);

    const selection::ScramblerBook& scrambler_book(std::size_t n_t);
    const selection::PermutationBook& permutation_book(std::size_t n_t);
    const selection::PilotBook& pilot_book() const { return pilots_; }

    Bits info_bits(std::size_t channel, std::size_t block, std::size_t count) const;
    Symbol4DSequence dm_chain(const Bits& bits, const DmLayout& layout);

    std::map<std::string, std::string> resolved_defaults();

private:
    struct Received {
        Symbol4DSequence tx;
        Symbol4DSequence rx;
        bool discarded = false;
    };
    /// frame[c][j] is block j of channel c; returns the center-channel blocks.
    std::vector<Received> transmit_frame(const std::vector<std::vector<TxBlock>>& frame,
                                         double power_dbm, double nominal_energy,
                                         std::size_t frame_index, ShapingScheme scheme,
                                         std::size_t n_t);
    /// Runs `make(c, b)` for every channel and block, frame by frame.
    template <class Make>
    std::vector<Received> transmit_all(std::size_t blocks, double power_dbm,
                                       double nominal_energy, ShapingScheme scheme,
                                       std::size_t n_t, Make make);
    ResultRow evaluate(const std::string& scheme_name, ShapingScheme scheme, std::size_t n_t,
                       double power_dbm, const std::vector<Received>& blocks,
                       const DmLayout& layout, double metric_mean, double penalty,
                       PointInfo* info);
    const shaping::EssTrellis& trellis(std::size_t k);

    ExperimentConfig cfg_;
    shaping::MbDistribution mb_;
    selection::PilotBook pilots_;
    std::mutex mutex_;
    std::map<std::size_t, std::unique_ptr<shaping::EssTrellis>> trellises_;
    std::map<std::pair<int, std::size_t>, DmLayout> layouts_;
    std::map<std::size_t, selection::ScramblerBook> scramblers_;
    std::map<std::size_t, selection::PermutationBook> permutations_;
};

/// Runs `body(i)` for i in [0, count) on `workers` threads. Results must be
/// written to per-index slots so the outcome does not depend on scheduling.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

/// Rows holding the maximum SE over launch power per (scheme, metric, n_t).
std::vector<ResultRow> optimal_rows(const std::vector<ResultRow>& rows);

/// Key-value configuration file ([section] key = value; units in key names).
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base);
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base);
std::string format_config(const ExperimentConfig& cfg);
std::uint64_t fnv1a64(const std::string& text);

/// Sidecar JSON: config hash, seed, version, resolved defaults, timings.
void write_metadata(const std::filesystem::path& path, Experiment& experiment,
                    const std::vector<ResultRow>& rows, const std::string& command,
                    const std::vector<std::string>& notes);

std::string version();

/// Quick property checks over all modules; prints one line per check.
int run_selftest(std::ostream& os);

}  // namespace seqsel::harness
