#pragma once

// Serialization: key=value config files (also used as provenance sidecars),
// delimited tabular data files, and the trial-record stream. Doubles are
// printed with %.17g so every file round-trips bit for bit.

#include <cstdint>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "montecarlo.hpp"

namespace tmzi {

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shortest representation that still round-trips a double exactly;
/// integral values print without an exponent.
inline std::string format_double(double v) {
    char buf[40];
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e15) {
        std::snprintf(buf, sizeof buf, "%.0f", v);
        return buf;
    }
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v)
            break;
    }
    return buf;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& v, const std::string& ctx) {
    const char* begin = v.c_str();
    char* end = nullptr;
    const double x = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw ConfigError(ctx + ": malformed number '" + v + "'");
    return x;
}

inline std::uint64_t parse_u64(const std::string& v, const std::string& ctx) {
    const char* begin = v.c_str();
    char* end = nullptr;
    const unsigned long long x = std::strtoull(begin, &end, 10);
    if (end == begin || *end != '\0')
        throw ConfigError(ctx + ": malformed integer '" + v + "'");
    return x;
}

inline std::vector<double> parse_double_list(const std::string& v, const std::string& ctx) {
    std::vector<double> out;
    std::string item;
    std::stringstream ss(v);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty())
            out.push_back(parse_double(item, ctx));
    }
    if (out.empty())
        throw ConfigError(ctx + ": empty list");
    return out;
}

} // namespace detail

inline const char* to_string(PacketShape s) {
    switch (s) {
    case PacketShape::Gaussian: return "gaussian";
    case PacketShape::ExponentialDecay: return "exponential_decay";
    case PacketShape::Rectangular: return "rectangular";
    }
    return "?";
}

inline const char* to_string(QrngMode m) {
    return m == QrngMode::Amplitude ? "amplitude" : "ensemble";
}

inline const char* to_string(PhaseConvention p) {
    return p == PhaseConvention::ZeroStoragePhase ? "zero_storage_phase" : "explicit_residual";
}

inline PacketShape packet_shape_from_string(const std::string& v, const std::string& ctx) {
    if (v == "gaussian")
        return PacketShape::Gaussian;
    if (v == "exponential_decay")
        return PacketShape::ExponentialDecay;
    if (v == "rectangular")
        return PacketShape::Rectangular;
    throw ConfigError(ctx + ": unknown packet shape '" + v + "'");
}

inline QrngMode qrng_mode_from_string(const std::string& v, const std::string& ctx) {
    if (v == "amplitude")
        return QrngMode::Amplitude;
    if (v == "ensemble")
        return QrngMode::Ensemble;
    throw ConfigError(ctx + ": unknown qrng mode '" + v + "'");
}

inline PhaseConvention phase_convention_from_string(const std::string& v, const std::string& ctx) {
    if (v == "zero_storage_phase")
        return PhaseConvention::ZeroStoragePhase;
    if (v == "explicit_residual")
        return PhaseConvention::ExplicitResidual;
    throw ConfigError(ctx + ": unknown phase convention '" + v + "'");
}

/// Scenario fields of a config or provenance file, kept as loosely typed
/// requests here; the scenario layer resolves and validates them.
struct ScenarioRequest {
    std::string name;
    std::string engine;
    std::string format;
    std::string sweep_parameter;
    std::optional<std::vector<double>> sweep_values;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> trials_per_point;
    std::optional<double> total_counts;
    std::optional<int> phase_points;
};

/// Everything a config file can describe: the interferometer itself plus
/// the source, calibrations, timing bookkeeping and an optional scenario
/// block. Absent keys keep their defaults.
struct ConfigBundle {
    InterferometerConfig config;
    SourceModel source;
    OdCalibration od_calibration;
    TimingSequence timing;
    ScenarioRequest scenario;
};

namespace detail {

inline bool apply_mbs_key(MemoryBeamSplitter& m, const std::string& field, const std::string& value,
                          const std::string& ctx) {
    if (field == "eta_con")
        m.eta_con = parse_double(value, ctx);
    else if (field == "eta_stored")
        m.eta_stored = parse_double(value, ctx);
    else if (field == "storage_time_ns")
        m.storage_time_ns = parse_double(value, ctx);
    else if (field == "coherence_time_t1_ns")
        m.coherence_time_t1_ns = parse_double(value, ctx);
    else if (field == "packet.shape")
        m.retrieved_packet.shape = packet_shape_from_string(value, ctx);
    else if (field == "packet.center_ns")
        m.retrieved_packet.center_ns = parse_double(value, ctx);
    else if (field == "packet.width_ns")
        m.retrieved_packet.width_ns = parse_double(value, ctx);
    else
        return false;
    return true;
}

inline bool apply_scenario_key(ScenarioRequest& s, const std::string& field,
                               const std::string& value, const std::string& ctx) {
    if (field == "name")
        s.name = value;
    else if (field == "engine")
        s.engine = value;
    else if (field == "format")
        s.format = value;
    else if (field == "sweep_parameter")
        s.sweep_parameter = value;
    else if (field == "sweep_values")
        s.sweep_values = parse_double_list(value, ctx);
    else if (field == "seed")
        s.seed = parse_u64(value, ctx);
    else if (field == "trials_per_point")
        s.trials_per_point = parse_u64(value, ctx);
    else if (field == "total_counts")
        s.total_counts = parse_double(value, ctx);
    else if (field == "phase_points")
        s.phase_points = static_cast<int>(parse_u64(value, ctx));
    else
        return false;
    return true;
}

} // namespace detail

/// Parses the key=value config dialect: one assignment per line, '#' starts
/// a comment, unknown keys are reported with their line number instead of
/// being ignored.
inline ConfigBundle parse_config_text(const std::string& text) {
    ConfigBundle b;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const std::string ctx = "line " + std::to_string(lineno) + " (" + key + ")";
        if (key.empty() || value.empty())
            throw ConfigError(ctx + ": empty key or value");

        auto& c = b.config;
        bool ok = true;
        if (key.rfind("mbs1.", 0) == 0)
            ok = detail::apply_mbs_key(c.mbs1, key.substr(5), value, ctx);
        else if (key.rfind("mbs2.", 0) == 0)
            ok = detail::apply_mbs_key(c.mbs2, key.substr(5), value, ctx);
        else if (key == "eom_phase_rad")
            c.eom_phase_rad = detail::parse_double(value, ctx);
        else if (key == "fiber_delay_ns")
            c.fiber_delay_ns = detail::parse_double(value, ctx);
        else if (key == "qrng.xi")
            c.qrng.xi = detail::parse_double(value, ctx);
        else if (key == "qrng.mode")
            c.qrng.mode = qrng_mode_from_string(value, ctx);
        else if (key == "detector.efficiency")
            c.detector.efficiency = detail::parse_double(value, ctx);
        else if (key == "detector.dark_rate_hz")
            c.detector.dark_rate_hz = detail::parse_double(value, ctx);
        else if (key == "detector.gate_window_ns")
            c.detector.gate_window_ns = detail::parse_double(value, ctx);
        else if (key == "phase_convention")
            c.phase_convention = phase_convention_from_string(value, ctx);
        else if (key == "residual_phase_rad")
            c.residual_phase_rad = detail::parse_double(value, ctx);
        else if (key == "source.herald_probability")
            b.source.herald_probability = detail::parse_double(value, ctx);
        else if (key == "od.eta_max")
            b.od_calibration.eta_max = detail::parse_double(value, ctx);
        else if (key == "od.od_sat")
            b.od_calibration.od_sat = detail::parse_double(value, ctx);
        else if (key == "timing.repetition_rate_hz")
            b.timing.repetition_rate_hz = detail::parse_double(value, ctx);
        else if (key == "timing.trap_duration_ms")
            b.timing.trap_duration_ms = detail::parse_double(value, ctx);
        else if (key == "timing.experiment_window_ms")
            b.timing.experiment_window_ms = detail::parse_double(value, ctx);
        else if (key.rfind("scenario.", 0) == 0)
            ok = detail::apply_scenario_key(b.scenario, key.substr(9), value, ctx);
        else
            ok = false;
        if (!ok)
            throw ConfigError(ctx + ": unknown key");
    }
    return b;
}

/// Canonical serialization; parse_config_text(format_config(b)) reproduces b
/// exactly, and formatting the reparsed bundle reproduces the bytes.
inline std::string format_config(const ConfigBundle& b, bool include_scenario = true) {
    std::string out;
    const auto kv = [&out](const std::string& k, const std::string& v) {
        out += k;
        out += " = ";
        out += v;
        out += "\n";
    };
    const auto kvd = [&](const std::string& k, double v) { kv(k, format_double(v)); };
    const auto mbs = [&](const std::string& p, const MemoryBeamSplitter& m) {
        kvd(p + ".eta_con", m.eta_con);
        kvd(p + ".eta_stored", m.eta_stored);
        kvd(p + ".storage_time_ns", m.storage_time_ns);
        kvd(p + ".coherence_time_t1_ns", m.coherence_time_t1_ns);
        kv(p + ".packet.shape", to_string(m.retrieved_packet.shape));
        kvd(p + ".packet.center_ns", m.retrieved_packet.center_ns);
        kvd(p + ".packet.width_ns", m.retrieved_packet.width_ns);
    };
    const auto& c = b.config;
    mbs("mbs1", c.mbs1);
    mbs("mbs2", c.mbs2);
    kvd("eom_phase_rad", c.eom_phase_rad);
    kvd("fiber_delay_ns", c.fiber_delay_ns);
    kvd("qrng.xi", c.qrng.xi);
    kv("qrng.mode", to_string(c.qrng.mode));
    kvd("detector.efficiency", c.detector.efficiency);
    kvd("detector.dark_rate_hz", c.detector.dark_rate_hz);
    kvd("detector.gate_window_ns", c.detector.gate_window_ns);
    kv("phase_convention", to_string(c.phase_convention));
    kvd("residual_phase_rad", c.residual_phase_rad);
    kvd("source.herald_probability", b.source.herald_probability);
    kvd("od.eta_max", b.od_calibration.eta_max);
    kvd("od.od_sat", b.od_calibration.od_sat);
    kvd("timing.repetition_rate_hz", b.timing.repetition_rate_hz);
    kvd("timing.trap_duration_ms", b.timing.trap_duration_ms);
    kvd("timing.experiment_window_ms", b.timing.experiment_window_ms);
    if (include_scenario) {
        const auto& s = b.scenario;
        if (!s.name.empty())
            kv("scenario.name", s.name);
        if (!s.engine.empty())
            kv("scenario.engine", s.engine);
        if (!s.format.empty())
            kv("scenario.format", s.format);
        if (s.seed)
            kv("scenario.seed", std::to_string(*s.seed));
        if (s.trials_per_point)
            kv("scenario.trials_per_point", std::to_string(*s.trials_per_point));
        if (s.total_counts)
            kvd("scenario.total_counts", *s.total_counts);
        if (s.phase_points)
            kv("scenario.phase_points", std::to_string(*s.phase_points));
        if (!s.sweep_parameter.empty())
            kv("scenario.sweep_parameter", s.sweep_parameter);
        if (s.sweep_values) {
            std::string list;
            for (double v : *s.sweep_values) {
                if (!list.empty())
                    list += ",";
                list += format_double(v);
            }
            kv("scenario.sweep_values", list);
        }
    }
    return out;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path + "' for reading");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path + "' for writing");
    out << content;
    if (!out)
        throw IoError("short write to '" + path + "'");
}

inline ConfigBundle load_config_file(const std::string& path) {
    try {
        return parse_config_text(read_text_file(path));
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

enum class TableFormat { Tsv, Csv };

inline const char* table_extension(TableFormat f) { return f == TableFormat::Tsv ? ".tsv" : ".csv"; }

/// Numeric table with named columns and free-form '#' comment lines used to
/// carry fit results and run metadata alongside the data.
struct Table {
    std::vector<std::string> comments;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

inline std::string format_table(const Table& t, TableFormat fmt) {
    const char delim = fmt == TableFormat::Tsv ? '\t' : ',';
    std::string out;
    for (const auto& cline : t.comments) {
        out += "# ";
        out += cline;
        out += "\n";
    }
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        if (i)
            out += delim;
        out += t.columns[i];
    }
    out += "\n";
    for (const auto& row : t.rows) {
        if (row.size() != t.columns.size())
            throw IoError("table row width does not match the header");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i)
                out += delim;
            out += format_double(row[i]);
        }
        out += "\n";
    }
    return out;
}

inline void write_table_file(const std::string& path, const Table& t, TableFormat fmt) {
    write_text_file(path, format_table(t, fmt));
}

inline Table parse_table_text(const std::string& text) {
    Table t;
    std::stringstream ss(text);
    std::string line;
    bool have_header = false;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (line[0] == '#') {
            std::string c = line.substr(1);
            if (!c.empty() && c[0] == ' ')
                c.erase(0, 1);
            t.comments.push_back(c);
            continue;
        }
        const char delim = line.find('\t') != std::string::npos ? '\t' : ',';
        std::vector<std::string> cells;
        std::string cell;
        std::stringstream ls(line);
        while (std::getline(ls, cell, delim))
            cells.push_back(detail::trim(cell));
        if (!have_header) {
            t.columns = cells;
            have_header = true;
            continue;
        }
        if (cells.size() != t.columns.size())
            throw IoError("line " + std::to_string(lineno) + ": expected " +
                          std::to_string(t.columns.size()) + " cells, got " +
                          std::to_string(cells.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& cl : cells) {
            try {
                row.push_back(detail::parse_double(cl, "line " + std::to_string(lineno)));
            } catch (const ConfigError& e) {
                throw IoError(e.what());
            }
        }
        t.rows.push_back(std::move(row));
    }
    if (!have_header)
        throw IoError("table has no header row");
    return t;
}

inline Table read_table_file(const std::string& path) {
    try {
        return parse_table_text(read_text_file(path));
    } catch (const IoError& e) {
        throw IoError(path + ": " + e.what());
    }
}

/// Fringe scans persist as two columns (phase_rad, counts) plus a total_n
/// comment so the normalization survives the round trip.
inline Table to_table(const FringeScan& scan) {
    Table t;
    t.comments.push_back("total_n = " + format_double(scan.total_n));
    t.columns = {"phase_rad", "counts"};
    for (std::size_t i = 0; i < scan.phases.size(); ++i)
        t.rows.push_back({scan.phases[i], scan.values[i]});
    return t;
}

inline FringeScan fringe_scan_from_table(const Table& t) {
    if (t.columns.size() != 2 || t.columns[0] != "phase_rad")
        throw IoError("not a fringe table (expected columns phase_rad, counts)");
    FringeScan scan;
    for (const auto& cl : t.comments) {
        const auto eq = cl.find('=');
        if (eq != std::string::npos && detail::trim(cl.substr(0, eq)) == "total_n")
            scan.total_n = detail::parse_double(detail::trim(cl.substr(eq + 1)), "total_n");
    }
    for (const auto& row : t.rows) {
        scan.phases.push_back(row[0]);
        scan.values.push_back(row[1]);
    }
    return scan;
}

/// One line per trial: index, herald flag, QRNG outcome, detection outcome
/// and the detection time within the gate (empty when nothing fired).
inline std::string format_trial_records(const std::vector<TrialRecord>& records) {
    std::string out = "trial\therald\tqrng\toutcome\ttime_bin_ns\n";
    for (const auto& r : records) {
        out += std::to_string(r.trial_index);
        out += r.herald_fired ? "\t1\t" : "\t0\t";
        out += r.qrng_outcome == QrngBranch::In ? "in" : "out";
        if (r.detection) {
            out += r.detection->kind == DetectionKind::Signal ? "\tsignal\t" : "\tdark\t";
            out += format_double(r.detection->time_bin_ns);
        } else {
            out += "\tnone\t";
        }
        out += "\n";
    }
    return out;
}

inline void write_trial_records(const std::string& path, const std::vector<TrialRecord>& records) {
    write_text_file(path, format_trial_records(records));
}

} // namespace tmzi
