#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "seqsel/harness.hpp"

namespace seqsel::harness {

namespace {

std::string number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <class T>
T parse_number(std::string_view field, std::size_t line) {
    T v{};
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw ConfigError("csv line " + std::to_string(line) + ": bad number '" +
                          std::string(field) + "'");
    }
    return v;
}

std::string text_field(const std::string& s) {
    if (s.find_first_of(",\"\n") != std::string::npos) {
        throw ConfigError("csv text field may not contain separators: " + s);
    }
    return s;
}

}  // namespace

std::string format_csv(const std::vector<ResultRow>& rows) {
    if (rows.empty()) {
        throw ConfigError("refusing to emit a CSV with no rows");
    }
    std::string out = kCsvHeader;
    out += '\n';
    for (const auto& r : rows) {
        out += text_field(r.scheme) + ',' + text_field(r.metric) + ',' +
               number(r.launch_power_dbm) + ',' + std::to_string(r.n_t) + ',' +
               number(r.air_bits_per_4d) + ',' + number(r.se_bits_per_s_hz) + ',' +
               number(r.ci95) + ',' + number(r.selected_metric_mean) + ',' +
               number(r.wall_time_s) + '\n';
    }
    return out;
}

void emit_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
    const std::string text = format_csv(rows);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << text;
    out.close();
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

std::vector<ResultRow> parse_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || line != kCsvHeader) {
        throw ConfigError("csv header mismatch");
    }
    std::vector<ResultRow> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::vector<std::string_view> f;
        std::string_view rest(line);
        for (;;) {
            auto pos = rest.find(',');
            f.push_back(rest.substr(0, pos));
            if (pos == std::string_view::npos) {
                break;
            }
            rest.remove_prefix(pos + 1);
        }
        if (f.size() != 9) {
            throw ConfigError("csv line " + std::to_string(lineno) + ": expected 9 fields");
        }
        ResultRow r;
        r.scheme = std::string(f[0]);
        r.metric = std::string(f[1]);
        r.launch_power_dbm = parse_number<double>(f[2], lineno);
        r.n_t = parse_number<std::size_t>(f[3], lineno);
        r.air_bits_per_4d = parse_number<double>(f[4], lineno);
        r.se_bits_per_s_hz = parse_number<double>(f[5], lineno);
        r.ci95 = parse_number<double>(f[6], lineno);
        r.selected_metric_mean = parse_number<double>(f[7], lineno);
        r.wall_time_s = parse_number<double>(f[8], lineno);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<ResultRow> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::ostringstream os;
    os << in.rdbuf();
    return parse_csv(os.str());
}

void write_metadata(const std::filesystem::path& path, Experiment& experiment,
                    const std::vector<ResultRow>& rows, const std::string& command,
                    const std::vector<std::string>& notes) {
    // The worker count does not change results, so it is left out of the hash.
    ExperimentConfig hashed = experiment.config();
    hashed.workers = 1;
    const std::string canonical = format_config(hashed);
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical)));

    nlohmann::ordered_json j;
    j["command"] = command;
    j["version"] = version();
    j["seed"] = experiment.config().seed;
    j["config_hash_fnv1a64"] = hash;
    j["workers"] = experiment.config().workers;
    j["config"] = canonical;
    j["resolved_defaults"] = experiment.resolved_defaults();
    j["approximations"] = {"selection-bound rate penalty log2(eta)/n is an approximation"};
    nlohmann::ordered_json points = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        points.push_back({{"scheme", r.scheme},
                          {"metric", r.metric},
                          {"power_dbm", r.launch_power_dbm},
                          {"n_t", r.n_t},
                          {"wall_s", r.wall_time_s}});
    }
    j["points"] = points;
    j["notes"] = notes;
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << j.dump(2) << '\n';
}

}  // namespace seqsel::harness
