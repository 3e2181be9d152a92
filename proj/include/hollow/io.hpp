#pragma once

// File formats: realization CSV, roles descriptor, model file (JSON, schema 1)
// and the alarm stream (JSON Lines).

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hollow/clustering.hpp"
#include "hollow/comparator.hpp"
#include "hollow/kriging.hpp"
#include "hollow/pipeline.hpp"

namespace hollow::io {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// Malformed or inconsistent input data (as opposed to a usage error).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Table {
    std::vector<std::string> columns;
    std::vector<Vector> rows;
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace detail

inline double parse_double(std::string_view text, const std::string& where) {
    text = detail::trim(text);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
        throw DataError(where + ": not a finite decimal number: '" + std::string(text) + "'");
    }
    return value;
}

inline Table read_csv(std::istream& in, const std::string& name = "csv") {
    Table t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        if (t.columns.empty()) {
            for (auto field : detail::split(line, ',')) t.columns.emplace_back(detail::trim(field));
            continue;
        }
        const auto fields = detail::split(line, ',');
        if (fields.size() != t.columns.size()) {
            throw DataError(name + ":" + std::to_string(line_no) + ": expected " + std::to_string(t.columns.size()) +
                            " fields, found " + std::to_string(fields.size()));
        }
        Vector row;
        row.reserve(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) {
            row.push_back(parse_double(fields[i], name + ":" + std::to_string(line_no) + ": column '" + t.columns[i] + "'"));
        }
        t.rows.push_back(std::move(row));
    }
    if (t.columns.empty()) throw DataError(name + ": missing header row");
    return t;
}

inline Table read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    return read_csv(in, path);
}

inline std::string format_double(double v) {
    Json j = v;
    return j.dump();
}

inline void write_csv(std::ostream& out, const std::vector<std::string>& columns, const std::vector<Vector>& rows) {
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_double(row[i]);
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Roles descriptor: {"<column>": "independent" | "dependent" | "ignore", ...}

struct Roles {
    std::vector<std::string> columns;  // used columns, in CSV order
    std::vector<std::size_t> source;   // index of each used column in the CSV
    std::vector<bool> independent;
};

inline Roles resolve_roles(const Json& descriptor, const std::vector<std::string>& csv_columns) {
    if (!descriptor.is_object()) throw DataError("roles: expected a JSON object mapping column names to roles");
    std::map<std::string, std::string> roles;
    for (const auto& [key, value] : descriptor.items()) {
        if (!value.is_string()) throw DataError("roles: role of '" + key + "' must be a string");
        const std::string role = value.get<std::string>();
        if (role != "independent" && role != "dependent" && role != "ignore") {
            throw DataError("roles: unknown role '" + role + "' for column '" + key + "'");
        }
        roles[key] = role;
    }
    Roles out;
    for (std::size_t i = 0; i < csv_columns.size(); ++i) {
        const auto it = roles.find(csv_columns[i]);
        if (it == roles.end()) throw DataError("roles: column '" + csv_columns[i] + "' has no role");
        if (it->second == "ignore") continue;
        out.columns.push_back(csv_columns[i]);
        out.source.push_back(i);
        out.independent.push_back(it->second == "independent");
        roles.erase(it);
    }
    for (const auto& [key, role] : roles) {
        if (role != "ignore") throw DataError("roles: column '" + key + "' not present in the CSV header");
    }
    return out;
}

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw DataError(path + ": corrupt JSON: " + e.what());
    }
}

inline std::vector<Vector> select_columns(const Table& t, const Roles& roles) {
    std::vector<Vector> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        Vector v;
        v.reserve(roles.source.size());
        for (std::size_t i : roles.source) v.push_back(row[i]);
        out.push_back(std::move(v));
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON conversion of model state.

namespace detail {

template <typename T>
T field(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw DataError(std::string("model: missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw DataError(std::string("model: bad field '") + key + "': " + e.what());
    }
}

}  // namespace detail

inline Json to_json(const Cluster& c) {
    return Json{{"centroid", c.centroid}, {"per_dim_var", c.per_dim_var}, {"population", c.population}, {"cvar", c.cvar}};
}

inline Cluster cluster_from_json(const Json& j) {
    Cluster c;
    c.centroid = detail::field<Vector>(j, "centroid");
    c.per_dim_var = detail::field<Vector>(j, "per_dim_var");
    c.population = detail::field<std::uint64_t>(j, "population");
    c.cvar = detail::field<double>(j, "cvar");
    if (c.centroid.size() != c.per_dim_var.size()) throw DataError("model: cluster vector size mismatch");
    return c;
}

inline Json to_json(const ClusterModel::State& s) {
    Json items = Json::array();
    for (const auto& c : s.clusters) items.push_back(to_json(c));
    return Json{{"shelldist", s.shelldist},
                {"dmax", s.dmax},
                {"kcount", s.kcount},
                {"fusion_search_count", s.fusion_search_count},
                {"clusters", items}};
}

inline ClusterModel::State cluster_state_from_json(const Json& j) {
    ClusterModel::State s;
    s.shelldist = detail::field<double>(j, "shelldist");
    s.dmax = detail::field<double>(j, "dmax");
    s.kcount = detail::field<std::uint64_t>(j, "kcount");
    s.fusion_search_count = detail::field<std::uint64_t>(j, "fusion_search_count");
    for (const auto& c : detail::field<Json>(j, "clusters")) s.clusters.push_back(cluster_from_json(c));
    return s;
}

inline Json to_json(const KrigingModel::Parameters& p) {
    Json sites = Json::array();
    for (const auto& s : p.sites) sites.push_back(Json{{"coords", s.coords}, {"values", s.values}, {"nugget", s.nugget}});
    return Json{{"variogram", {{"nugget", p.variogram.nugget}, {"sill", p.variogram.sill}, {"range", p.variogram.range}}},
                {"independent_scales", p.independent_scales},
                {"dependent_scales", p.dependent_scales},
                {"channel_units", p.channel_units},
                {"nugget_factor", p.nugget_factor},
                {"sites", sites}};
}

inline KrigingModel::Parameters kriging_from_json(const Json& j) {
    KrigingModel::Parameters p;
    const Json v = detail::field<Json>(j, "variogram");
    p.variogram = {detail::field<double>(v, "nugget"), detail::field<double>(v, "sill"), detail::field<double>(v, "range")};
    p.independent_scales = detail::field<Vector>(j, "independent_scales");
    p.dependent_scales = detail::field<Vector>(j, "dependent_scales");
    p.channel_units = detail::field<Vector>(j, "channel_units");
    p.nugget_factor = detail::field<double>(j, "nugget_factor");
    for (const auto& s : detail::field<Json>(j, "sites")) {
        KrigingModel::Site site;
        site.coords = detail::field<Vector>(s, "coords");
        site.values = detail::field<Vector>(s, "values");
        site.nugget = detail::field<double>(s, "nugget");
        if (site.coords.size() != p.independent_scales.size() || site.values.size() != p.dependent_scales.size()) {
            throw DataError("model: kriging site size mismatch");
        }
        p.sites.push_back(std::move(site));
    }
    return p;
}

inline Json to_json(const Comparator::State& s) {
    return Json{{"mu", s.shell.mu},
                {"var", s.shell.var},
                {"weight", s.shell.weight},
                {"frozen", s.shell.frozen},
                {"count", s.count},
                {"updates", s.updates},
                {"match", s.match},
                {"alpha_weight", s.alpha_weight},
                {"sum_mean", s.sum_mean},
                {"sum_var", s.sum_var}};
}

inline Comparator::State comparator_from_json(const Json& j) {
    Comparator::State s;
    s.shell.mu = detail::field<double>(j, "mu");
    s.shell.var = detail::field<double>(j, "var");
    s.shell.weight = detail::field<double>(j, "weight");
    s.shell.frozen = detail::field<bool>(j, "frozen");
    s.count = detail::field<std::uint64_t>(j, "count");
    s.updates = detail::field<std::uint64_t>(j, "updates");
    s.match = detail::field<bool>(j, "match");
    s.alpha_weight = detail::field<double>(j, "alpha_weight");
    s.sum_mean = detail::field<double>(j, "sum_mean");
    s.sum_var = detail::field<double>(j, "sum_var");
    return s;
}

inline Json to_json(const MonitorConfig& c) {
    return Json{{"threshold_k", c.threshold_k},
                {"warmup", c.warmup},
                {"alpha", c.alpha},
                {"refit_interval", c.refit_interval},
                {"kmax", c.kmax},
                {"cdist", c.cdist},
                {"update_on_match_only", c.update_on_match_only},
                {"ewma_maturity", c.ewma_maturity}};
}

inline MonitorConfig config_from_json(const Json& j) {
    MonitorConfig c;
    c.threshold_k = detail::field<double>(j, "threshold_k");
    c.warmup = detail::field<std::uint64_t>(j, "warmup");
    c.alpha = detail::field<double>(j, "alpha");
    c.refit_interval = detail::field<std::uint64_t>(j, "refit_interval");
    c.kmax = detail::field<std::size_t>(j, "kmax");
    c.cdist = detail::field<double>(j, "cdist");
    c.update_on_match_only = detail::field<bool>(j, "update_on_match_only");
    c.ewma_maturity = detail::field<double>(j, "ewma_maturity");
    return c;
}

inline Json to_json(const Normalizer& n) {
    return Json{{"min", n.mins()}, {"max", n.maxs()}, {"count", n.count()}};
}

inline Normalizer normalizer_from_json(const Json& j) {
    return Normalizer::restore(detail::field<Vector>(j, "min"), detail::field<Vector>(j, "max"),
                               detail::field<std::uint64_t>(j, "count"));
}

inline void check_schema(const Json& j, std::string_view kind) {
    if (!j.is_object() || !j.contains("schema")) throw DataError("model: missing schema version");
    if (!j.at("schema").is_number_integer() || j.at("schema").get<int>() != kSchemaVersion) {
        throw DataError("model: schema version mismatch (expected " + std::to_string(kSchemaVersion) + ", found " +
                        j.at("schema").dump() + ")");
    }
    if (!kind.empty() && detail::field<std::string>(j, "kind") != kind) {
        throw DataError("model: expected a '" + std::string(kind) + "' model, found '" +
                        detail::field<std::string>(j, "kind") + "'");
    }
}

// ---------------------------------------------------------------------------
// Monitor model file.

struct MonitorFile {
    std::vector<std::string> columns;
    Monitor monitor;
};

inline Json to_json(const std::vector<std::string>& columns, const Monitor& m) {
    const Monitor::State s = m.state();
    Json j;
    j["schema"] = kSchemaVersion;
    j["kind"] = "monitor";
    j["columns"] = columns;
    j["independent"] = m.roles();
    j["config"] = to_json(m.config());
    j["index"] = s.index;
    j["normalizer"] = to_json(s.normalizer);
    j["clusters"] = s.clusters ? to_json(*s.clusters) : Json(nullptr);
    j["kriging"] = s.kriging ? to_json(*s.kriging) : Json(nullptr);
    j["since_fit"] = s.since_fit;
    j["point"] = to_json(s.point);
    j["fast"] = to_json(s.fast);
    j["trend"] = to_json(s.trend);
    j["actualized"] = Json{{"sum", s.ewma_sum}, {"weight", s.ewma_weight}, {"sq_weight", s.ewma_sq_weight}};
    j["dependent_scales"] = s.dep_scales;
    if (s.frozen) {
        j["initial"] = Json{{"kriging", s.initial_kriging ? to_json(*s.initial_kriging) : Json(nullptr)},
                            {"point", to_json(s.initial_point)},
                            {"mu", s.initial_mu},
                            {"count", s.initial_count}};
    } else {
        j["initial"] = nullptr;
    }
    return j;
}

inline MonitorFile monitor_from_json(const Json& j) {
    check_schema(j, "monitor");
    try {
        auto columns = detail::field<std::vector<std::string>>(j, "columns");
        auto independent = detail::field<std::vector<bool>>(j, "independent");
        if (columns.size() != independent.size()) throw DataError("model: columns and roles differ in length");
        const MonitorConfig config = config_from_json(detail::field<Json>(j, "config"));

        Monitor::State s;
        s.index = detail::field<std::uint64_t>(j, "index");
        s.normalizer = normalizer_from_json(detail::field<Json>(j, "normalizer"));
        if (!j.at("clusters").is_null()) s.clusters = cluster_state_from_json(j.at("clusters"));
        if (!detail::field<Json>(j, "kriging").is_null()) s.kriging = kriging_from_json(j.at("kriging"));
        s.since_fit = detail::field<std::uint64_t>(j, "since_fit");
        s.point = cluster_from_json(detail::field<Json>(j, "point"));
        s.fast = comparator_from_json(detail::field<Json>(j, "fast"));
        s.trend = comparator_from_json(detail::field<Json>(j, "trend"));
        const Json act = detail::field<Json>(j, "actualized");
        s.ewma_sum = detail::field<Vector>(act, "sum");
        s.ewma_weight = detail::field<double>(act, "weight");
        s.ewma_sq_weight = detail::field<double>(act, "sq_weight");
        s.dep_scales = detail::field<Vector>(j, "dependent_scales");
        const Json initial = detail::field<Json>(j, "initial");
        if (!initial.is_null()) {
            s.frozen = true;
            if (!detail::field<Json>(initial, "kriging").is_null()) s.initial_kriging = kriging_from_json(initial.at("kriging"));
            s.initial_point = cluster_from_json(detail::field<Json>(initial, "point"));
            s.initial_mu = detail::field<double>(initial, "mu");
            s.initial_count = detail::field<double>(initial, "count");
        }
        return {std::move(columns), Monitor::restore(std::move(independent), config, std::move(s))};
    } catch (const DataError&) {
        throw;
    } catch (const std::exception& e) {
        throw DataError(std::string("model: inconsistent state: ") + e.what());
    }
}

inline void write_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(1) << '\n';
}

inline void save(const std::string& path, const std::vector<std::string>& columns, const Monitor& m) {
    write_json_file(path, to_json(columns, m));
}

inline MonitorFile load(const std::string& path) { return monitor_from_json(read_json_file(path)); }

// ---------------------------------------------------------------------------
// Cluster model file, written by the `cluster` command.

struct ClusterFile {
    std::vector<std::string> columns;
    Normalizer normalizer;
    ClusterModel model;
};

inline Json to_json(const std::vector<std::string>& columns, const Normalizer& normalizer, const ClusterModel& model) {
    Json j;
    j["schema"] = kSchemaVersion;
    j["kind"] = "cluster";
    j["columns"] = columns;
    j["independent"] = model.mask().flags();
    j["kmax"] = model.kmax();
    j["cdist"] = model.cdist();
    j["normalizer"] = to_json(normalizer);
    j["clusters"] = to_json(model.state());
    return j;
}

inline ClusterFile cluster_file_from_json(const Json& j) {
    check_schema(j, "cluster");
    try {
        auto columns = detail::field<std::vector<std::string>>(j, "columns");
        auto independent = detail::field<std::vector<bool>>(j, "independent");
        Normalizer normalizer = normalizer_from_json(detail::field<Json>(j, "normalizer"));
        ClusterModel model = ClusterModel::restore(detail::field<std::size_t>(j, "kmax"), detail::field<double>(j, "cdist"),
                                                   Mask(std::move(independent)),
                                                   cluster_state_from_json(detail::field<Json>(j, "clusters")));
        return {std::move(columns), std::move(normalizer), std::move(model)};
    } catch (const DataError&) {
        throw;
    } catch (const std::exception& e) {
        throw DataError(std::string("model: inconsistent state: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Alarm stream.

inline Json to_json(const AlarmEvent& e) {
    return Json{{"index", e.index},
                {"type", to_string(e.type)},
                {"distance", e.distance},
                {"shelldist", e.shelldist},
                {"sigma_m", e.sigma_m},
                {"bound", e.bound},
                {"z", e.z},
                {"direction", to_string(e.direction)}};
}

inline std::string alarm_line(const AlarmEvent& e) { return to_json(e).dump(); }

}  // namespace hollow::io
