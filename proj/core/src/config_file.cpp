#include <fstream>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "seqsel/harness.hpp"

namespace seqsel::harness {

namespace pt = boost::property_tree;

namespace {

// Every accepted key. Anything else in the file is a typo and is rejected.
const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "shaping.rate_bits_per_amplitude",
        "shaping.blocklength_amplitudes",
        "shaping.amplitude_levels",
        "shaping.marginal_estimate_blocks",
        "selection.metric",
        "selection.block_4d_symbols",
        "selection.wk_window_4d_symbols",
        "selection.wk_stride_4d_symbols",
        "selection.wk_aggregate",
        "selection.nli_metric_samples_per_symbol",
        "fiber.beta2_ps2_per_km",
        "fiber.gamma_per_w_km",
        "fiber.alpha_db_per_km",
        "fiber.span_length_km",
        "fiber.n_spans",
        "wdm.n_channels",
        "wdm.symbol_rate_gbd",
        "wdm.spacing_ghz",
        "wdm.rolloff",
        "wdm.samples_per_symbol",
        "amplifier.noise_figure_db",
        "amplifier.center_frequency_thz",
        "amplifier.noiseless",
        "steps.mode",
        "steps.steps_per_span",
        "steps.max_nonlinear_phase_rad",
        "steps.target_nonlinear_phase_rad",
        "steps.max_step_km",
        "sweep.launch_power_dbm",
        "sweep.n_t",
        "sweep.schemes",
        "bound.eta",
        "bound.m_total_blocks",
        "run.n_blocks",
        "run.frame_blocks",
        "run.seed",
        "run.workers",
        "run.record_wall_time",
    };
    return keys;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> parts;
    boost::split(parts, s, boost::is_any_of(","));
    std::vector<std::string> out;
    for (auto& p : parts) {
        boost::trim(p);
        if (!p.empty()) {
            out.push_back(p);
        }
    }
    return out;
}

template <class T>
T convert(const std::string& key, const std::string& value) {
    std::istringstream is(value);
    T v{};
    is >> v;
    if (is.fail() || !(is >> std::ws).eof()) {
        throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
    }
    return v;
}

template <>
bool convert<bool>(const std::string& key, const std::string& value) {
    const auto v = boost::to_lower_copy(value);
    if (v == "true" || v == "1" || v == "yes") {
        return true;
    }
    if (v == "false" || v == "0" || v == "no") {
        return false;
    }
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

template <class T>
std::vector<T> convert_list(const std::string& key, const std::string& value) {
    std::vector<T> out;
    for (const auto& p : split_list(value)) {
        out.push_back(convert<T>(key, p));
    }
    if (out.empty()) {
        throw ConfigError("config key '" + key + "': empty list");
    }
    return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) {
        os << (i ? ", " : "") << v[i];
    }
    return os.str();
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, ExperimentConfig cfg) {
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            throw ConfigError("config key '" + section + "' must live in a [section]");
        }
        for (const auto& [key, value] : body) {
            const std::string full = section + "." + key;
            if (!known_keys().contains(full)) {
                throw ConfigError("unknown config key '" + full + "'");
            }
            const std::string v = boost::trim_copy(value.data());
            if (full == "shaping.rate_bits_per_amplitude") {
                cfg.shaping.rate = convert<double>(full, v);
            } else if (full == "shaping.blocklength_amplitudes") {
                cfg.shaping.blocklength = convert<std::size_t>(full, v);
            } else if (full == "shaping.amplitude_levels") {
                cfg.shaping.alphabet = shaping::AmplitudeAlphabet(convert_list<double>(full, v));
            } else if (full == "shaping.marginal_estimate_blocks") {
                cfg.marginal_blocks = convert<std::size_t>(full, v);
            } else if (full == "selection.metric") {
                cfg.metric = parse_metric(v);
            } else if (full == "selection.block_4d_symbols") {
                cfg.block_symbols = convert<std::size_t>(full, v);
            } else if (full == "selection.wk_window_4d_symbols") {
                cfg.wk_window = convert<std::size_t>(full, v);
            } else if (full == "selection.wk_stride_4d_symbols") {
                cfg.wk_stride = convert<std::size_t>(full, v);
            } else if (full == "selection.wk_aggregate") {
                if (v == "mean") {
                    cfg.wk_aggregate = selection::WkAggregate::mean;
                } else if (v == "max") {
                    cfg.wk_aggregate = selection::WkAggregate::max;
                } else {
                    throw ConfigError("selection.wk_aggregate must be mean or max");
                }
            } else if (full == "selection.nli_metric_samples_per_symbol") {
                cfg.metric_sps = convert<std::size_t>(full, v);
            } else if (full == "fiber.beta2_ps2_per_km") {
                cfg.fiber.beta2_ps2_per_km = convert<double>(full, v);
            } else if (full == "fiber.gamma_per_w_km") {
                cfg.fiber.gamma_per_w_km = convert<double>(full, v);
            } else if (full == "fiber.alpha_db_per_km") {
                cfg.fiber.alpha_db_per_km = convert<double>(full, v);
            } else if (full == "fiber.span_length_km") {
                cfg.fiber.span_length_km = convert<double>(full, v);
            } else if (full == "fiber.n_spans") {
                cfg.fiber.n_spans = convert<std::size_t>(full, v);
            } else if (full == "wdm.n_channels") {
                cfg.wdm.n_channels = convert<std::size_t>(full, v);
            } else if (full == "wdm.symbol_rate_gbd") {
                cfg.wdm.symbol_rate_gbd = convert<double>(full, v);
            } else if (full == "wdm.spacing_ghz") {
                cfg.wdm.spacing_ghz = convert<double>(full, v);
            } else if (full == "wdm.rolloff") {
                cfg.wdm.rolloff = convert<double>(full, v);
            } else if (full == "wdm.samples_per_symbol") {
                cfg.wdm.sps = convert<std::size_t>(full, v);
            } else if (full == "amplifier.noise_figure_db") {
                cfg.amp.noise_figure_db = convert<double>(full, v);
            } else if (full == "amplifier.center_frequency_thz") {
                cfg.amp.center_frequency_thz = convert<double>(full, v);
            } else if (full == "amplifier.noiseless") {
                cfg.amp.noiseless = convert<bool>(full, v);
            } else if (full == "steps.mode") {
                if (v == "fixed") {
                    cfg.steps.mode = channel::StepMode::fixed;
                } else if (v == "adaptive") {
                    cfg.steps.mode = channel::StepMode::adaptive;
                } else {
                    throw ConfigError("steps.mode must be fixed or adaptive");
                }
            } else if (full == "steps.steps_per_span") {
                cfg.steps.steps_per_span = convert<std::size_t>(full, v);
            } else if (full == "steps.max_nonlinear_phase_rad") {
                cfg.steps.max_nonlinear_phase = convert<double>(full, v);
            } else if (full == "steps.target_nonlinear_phase_rad") {
                cfg.steps.target_nonlinear_phase = convert<double>(full, v);
            } else if (full == "steps.max_step_km") {
                cfg.steps.max_step_km = convert<double>(full, v);
            } else if (full == "sweep.launch_power_dbm") {
                cfg.sweep.launch_power_dbm = convert_list<double>(full, v);
            } else if (full == "sweep.n_t") {
                cfg.sweep.n_t = convert_list<std::size_t>(full, v);
            } else if (full == "sweep.schemes") {
                cfg.sweep.schemes.clear();
                for (const auto& s : split_list(v)) {
                    cfg.sweep.schemes.push_back(parse_scheme(s));
                }
            } else if (full == "bound.eta") {
                cfg.bound.eta = convert<double>(full, v);
            } else if (full == "bound.m_total_blocks") {
                cfg.bound.m_total = convert<std::size_t>(full, v);
            } else if (full == "run.n_blocks") {
                cfg.n_blocks = convert<std::size_t>(full, v);
            } else if (full == "run.frame_blocks") {
                cfg.frame_blocks = convert<std::size_t>(full, v);
            } else if (full == "run.seed") {
                cfg.seed = convert<std::uint64_t>(full, v);
            } else if (full == "run.workers") {
                cfg.workers = convert<std::size_t>(full, v);
            } else if (full == "run.record_wall_time") {
                cfg.record_wall_time = convert<bool>(full, v);
            }
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config(os.str(), std::move(base));
}

std::string format_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    std::vector<std::string> schemes;
    for (auto s : cfg.sweep.schemes) {
        schemes.push_back(to_string(s));
    }
    os << "[shaping]\n"
       << "rate_bits_per_amplitude = " << cfg.shaping.rate << "\n"
       << "blocklength_amplitudes = " << cfg.shaping.blocklength << "\n"
       << "amplitude_levels = " << join(cfg.shaping.alphabet.levels()) << "\n"
       << "marginal_estimate_blocks = " << cfg.marginal_blocks << "\n\n"
       << "[selection]\n"
       << "metric = " << to_string(cfg.metric) << "\n"
       << "block_4d_symbols = " << cfg.block_symbols << "\n"
       << "wk_window_4d_symbols = " << cfg.wk_window << "\n"
       << "wk_stride_4d_symbols = " << cfg.wk_stride << "\n"
       << "wk_aggregate = " << (cfg.wk_aggregate == selection::WkAggregate::mean ? "mean" : "max")
       << "\n"
       << "nli_metric_samples_per_symbol = " << cfg.metric_sps << "\n\n"
       << "[fiber]\n"
       << "beta2_ps2_per_km = " << cfg.fiber.beta2_ps2_per_km << "\n"
       << "gamma_per_w_km = " << cfg.fiber.gamma_per_w_km << "\n"
       << "alpha_db_per_km = " << cfg.fiber.alpha_db_per_km << "\n"
       << "span_length_km = " << cfg.fiber.span_length_km << "\n"
       << "n_spans = " << cfg.fiber.n_spans << "\n\n"
       << "[wdm]\n"
       << "n_channels = " << cfg.wdm.n_channels << "\n"
       << "symbol_rate_gbd = " << cfg.wdm.symbol_rate_gbd << "\n"
       << "spacing_ghz = " << cfg.wdm.spacing_ghz << "\n"
       << "rolloff = " << cfg.wdm.rolloff << "\n"
       << "samples_per_symbol = " << cfg.wdm.sps << "\n\n"
       << "[amplifier]\n"
       << "noise_figure_db = " << cfg.amp.noise_figure_db << "\n"
       << "center_frequency_thz = " << cfg.amp.center_frequency_thz << "\n"
       << "noiseless = " << (cfg.amp.noiseless ? "true" : "false") << "\n\n"
       << "[steps]\n"
       << "mode = " << (cfg.steps.mode == channel::StepMode::fixed ? "fixed" : "adaptive") << "\n"
       << "steps_per_span = " << cfg.steps.steps_per_span << "\n"
       << "max_nonlinear_phase_rad = " << cfg.steps.max_nonlinear_phase << "\n"
       << "target_nonlinear_phase_rad = " << cfg.steps.target_nonlinear_phase << "\n"
       << "max_step_km = " << cfg.steps.max_step_km << "\n\n"
       << "[sweep]\n"
       << "launch_power_dbm = " << join(cfg.sweep.launch_power_dbm) << "\n"
       << "n_t = " << join(cfg.sweep.n_t) << "\n"
       << "schemes = " << join(schemes) << "\n\n"
       << "[bound]\n"
       << "eta = " << cfg.bound.eta << "\n"
       << "m_total_blocks = " << cfg.bound.m_total << "\n\n"
       << "[run]\n"
       << "n_blocks = " << cfg.n_blocks << "\n"
       << "frame_blocks = " << cfg.frame_blocks << "\n"
       << "seed = " << cfg.seed << "\n"
       << "workers = " << cfg.workers << "\n"
       << "record_wall_time = " << (cfg.record_wall_time ? "true" : "false") << "\n";
    return os.str();
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace seqsel::harness
