#pragma once

// Batch experiment runner behind the `conelab` executable. Kept in a
// header so the tests can drive it in-process.

#include "conelab/configurations.hpp"
#include "conelab/constructions.hpp"
#include "conelab/density.hpp"
#include "conelab/experiments.hpp"
#include "conelab/homogeneity.hpp"
#include "conelab/measure.hpp"
#include "conelab/parallel.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace conelab::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_invariant = 3, exit_resource = 4 };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Output

inline std::string fmt_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// RFC-4180 field quoting.
inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\r\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

struct ResultRow {
    std::string experiment;
    long long point = -1;  // -1 when the row is not tied to a point
    Point x;
    long long scale = -1;
    double radius = 0.0;
    std::string quantity;
    double lo = 0.0;
    double hi = 0.0;
    std::string metadata;
};

inline const char* kCsvHeader = "experiment,point_index,x,scale_index,radius,quantity,lo,hi,metadata";

inline std::string csv_line(const ResultRow& r)
{
    std::string coords;
    for (Eigen::Index d = 0; d < r.x.size(); ++d) {
        if (d)
            coords += ';';
        coords += fmt_double(r.x[d]);
    }
    std::string line;
    line += csv_field(r.experiment) + ',';
    line += (r.point >= 0 ? std::to_string(r.point) : std::string()) + ',';
    line += csv_field(coords) + ',';
    line += (r.scale >= 0 ? std::to_string(r.scale) : std::string()) + ',';
    line += fmt_double(r.radius) + ',';
    line += csv_field(r.quantity) + ',';
    line += fmt_double(r.lo) + ',' + fmt_double(r.hi) + ',';
    line += csv_field(r.metadata);
    return line;
}

inline json point_json(const Point& x)
{
    json a = json::array();
    for (Eigen::Index d = 0; d < x.size(); ++d)
        a.push_back(x[d]);
    return a;
}

// ---------------------------------------------------------------------------
// Config validation

namespace detail {

inline void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys)
{
    if (!obj.is_object())
        throw ConfigError(where + ": expected a JSON object");
    std::set<std::string> ok(keys.begin(), keys.end());
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!ok.count(it.key()))
            throw ConfigError((where.empty() ? "" : where + ".") + it.key() + ": unknown key");
}

inline std::string path_of(const std::string& where, const char* key)
{
    return where.empty() ? key : where + "." + key;
}

inline double get_number(const json& obj, const std::string& where, const char* key, std::optional<double> fallback)
{
    if (!obj.contains(key)) {
        if (fallback)
            return *fallback;
        throw ConfigError(path_of(where, key) + ": required field missing");
    }
    const json& v = obj.at(key);
    if (!v.is_number())
        throw ConfigError(path_of(where, key) + ": expected a number");
    return v.get<double>();
}

inline long long get_int(const json& obj, const std::string& where, const char* key, std::optional<long long> fallback)
{
    if (!obj.contains(key)) {
        if (fallback)
            return *fallback;
        throw ConfigError(path_of(where, key) + ": required field missing");
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer())
        throw ConfigError(path_of(where, key) + ": expected an integer");
    return v.get<long long>();
}

inline long long get_int_in(const json& obj, const std::string& where, const char* key, std::optional<long long> fallback,
                            long long lo, long long hi)
{
    const long long v = get_int(obj, where, key, fallback);
    if (v < lo || v > hi)
        throw ConfigError(path_of(where, key) + ": must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                          "]");
    return v;
}

inline double get_alpha(const json& obj, const std::string& where, const char* key, std::optional<double> fallback)
{
    const double a = get_number(obj, where, key, fallback);
    if (!(a > 0.0 && a <= 1.0))
        throw ConfigError(path_of(where, key) + ": must lie in (0, 1]");
    return a;
}

inline double get_positive(const json& obj, const std::string& where, const char* key, std::optional<double> fallback)
{
    const double v = get_number(obj, where, key, fallback);
    if (!(v > 0.0) || !std::isfinite(v))
        throw ConfigError(path_of(where, key) + ": must be positive");
    return v;
}

inline Point get_point(const json& v, const std::string& where)
{
    if (!v.is_array() || v.empty())
        throw ConfigError(where + ": expected a non-empty array of numbers");
    Vec p(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number())
            throw ConfigError(where + ": expected a non-empty array of numbers");
        p[static_cast<Eigen::Index>(i)] = v[i].get<double>();
    }
    return p;
}

} // namespace detail

struct MeasureSpec {
    std::string kind;
    MeasureTree tree;
    json echo;
};

inline MeasureSpec build_measure(const json& m)
{
    using namespace detail;
    const std::string where = "measure";
    if (!m.is_object() || !m.contains("kind") || !m.at("kind").is_string())
        throw ConfigError("measure.kind: required string field missing");
    const std::string kind = m.at("kind").get<std::string>();
    auto make = [&](MeasureTree t) { return MeasureSpec{kind, std::move(t), m}; };
    if (kind == "lebesgue") {
        allow_keys(m, where, {"kind", "n", "k"});
        const int n = static_cast<int>(get_int_in(m, where, "n", 1, 1, kMaxDimension));
        const int k = static_cast<int>(get_int_in(m, where, "k", 2, 2, 16));
        return make(lebesgue_tree(k, n));
    }
    if (kind == "binomial") {
        allow_keys(m, where, {"kind", "q", "rule"});
        if (m.contains("rule")) {
            if (m.contains("q"))
                throw ConfigError("measure.rule: give either q or rule, not both");
            if (!m.at("rule").is_string() || m.at("rule").get<std::string>() != "harmonic")
                throw ConfigError("measure.rule: only \"harmonic\" is supported");
            return make(binomial_measure(BinomialSpec::harmonic()));
        }
        const double q = get_number(m, where, "q", 0.25);
        if (!(q > 0.0 && q < 0.5))
            throw ConfigError("measure.q: must lie in (0, 1/2)");
        return make(binomial_measure(BinomialSpec::constant(q)));
    }
    if (kind == "rotating_ball") {
        allow_keys(m, where, {"kind", "depth", "start"});
        const int depth = static_cast<int>(get_int_in(m, where, "depth", 64, 1, 4096));
        const int start = static_cast<int>(get_int_in(m, where, "start", 1, 1, 1 << 20));
        return make(rotating_ball_tree(depth, start));
    }
    if (kind == "strip_block") {
        allow_keys(m, where, {"kind", "schedule", "depth"});
        StripBlockSpec spec;
        spec.depth = static_cast<int>(get_int_in(m, where, "depth", 12, 1, 64));
        if (m.contains("schedule")) {
            const json& s = m.at("schedule");
            if (s.is_string() && s.get<std::string>() == "shifted")
                spec.schedule = StripBlockSchedule::shifted();
            else if (s.is_string() && s.get<std::string>() == "original")
                spec.schedule = StripBlockSchedule::original();
            else if (s.is_array()) {
                std::vector<int> v;
                for (const json& e : s) {
                    if (!e.is_number_integer() || e.get<int>() < 2)
                        throw ConfigError("measure.schedule: entries must be integers >= 2");
                    v.push_back(e.get<int>());
                }
                if (v.empty())
                    throw ConfigError("measure.schedule: must not be empty");
                spec.schedule = StripBlockSchedule::custom(v);
            } else {
                throw ConfigError("measure.schedule: expected \"shifted\", \"original\" or an integer array");
            }
        }
        return make(strip_block_tree(spec));
    }
    if (kind == "atom") {
        allow_keys(m, where, {"kind", "point"});
        if (!m.contains("point"))
            throw ConfigError("measure.point: required field missing");
        const Point p = get_point(m.at("point"), "measure.point");
        if (p.size() > kMaxDimension)
            throw ConfigError("measure.point: dimension too large");
        return make(atom_tree(p));
    }
    if (kind == "axis_segment") {
        allow_keys(m, where, {"kind", "n", "k"});
        const int n = static_cast<int>(get_int_in(m, where, "n", 2, 2, kMaxDimension));
        const int k = static_cast<int>(get_int_in(m, where, "k", 2, 2, 16));
        return make(axis_segment_tree(n, k));
    }
    throw ConfigError("measure.kind: unknown kind \"" + kind + "\"");
}

struct RunOptions {
    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> depth;
    std::optional<int> threads;
    std::optional<std::string> out_dir;
};

struct Experiment {
    std::string id = "run";
    std::string operation;
    json params = json::object();
    json points = json::object();
    std::uint64_t seed = 0;
    int depth = 6;
    std::optional<std::string> out_dir;
    std::optional<MeasureSpec> measure;
    int threads = 1;
};

inline Experiment load_experiment(const RunOptions& opt, const std::string& command, bool needs_measure)
{
    Experiment e;
    json cfg = json::object();
    if (opt.config_path) {
        std::ifstream in(*opt.config_path);
        if (!in)
            throw ConfigError("config: cannot open " + *opt.config_path);
        try {
            cfg = json::parse(in);
        } catch (const json::parse_error& err) {
            throw ConfigError(std::string("config: invalid JSON: ") + err.what());
        }
    }
    detail::allow_keys(cfg, "", {"schema_version", "id", "command", "measure", "operation", "params", "points", "seed",
                                 "depth", "out"});
    if (cfg.contains("schema_version") && detail::get_int(cfg, "", "schema_version", 1) != 1)
        throw ConfigError("schema_version: only version 1 is supported");
    if (cfg.contains("command")) {
        if (!cfg.at("command").is_string() || cfg.at("command").get<std::string>() != command)
            throw ConfigError("command: config is for a different subcommand");
    }
    if (cfg.contains("id")) {
        if (!cfg.at("id").is_string())
            throw ConfigError("id: expected a string");
        e.id = cfg.at("id").get<std::string>();
    }
    if (cfg.contains("operation")) {
        if (!cfg.at("operation").is_string())
            throw ConfigError("operation: expected a string");
        e.operation = cfg.at("operation").get<std::string>();
    }
    if (cfg.contains("params")) {
        if (!cfg.at("params").is_object())
            throw ConfigError("params: expected a JSON object");
        e.params = cfg.at("params");
    }
    if (cfg.contains("points"))
        e.points = cfg.at("points");
    if (cfg.contains("seed")) {
        const json& s = cfg.at("seed");
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
            throw ConfigError("seed: expected a non-negative integer");
        e.seed = s.get<std::uint64_t>();
    }
    if (cfg.contains("depth"))
        e.depth = static_cast<int>(detail::get_int_in(cfg, "", "depth", 6, 0, 64));
    if (cfg.contains("out")) {
        if (!cfg.at("out").is_string())
            throw ConfigError("out: expected a string");
        e.out_dir = cfg.at("out").get<std::string>();
    }
    if (opt.seed)
        e.seed = *opt.seed;
    if (opt.depth) {
        if (*opt.depth < 0)
            throw ConfigError("--depth: must be non-negative");
        e.depth = *opt.depth;
    }
    if (opt.out_dir)
        e.out_dir = opt.out_dir;
    e.threads = opt.threads ? *opt.threads : default_threads();
    if (e.threads < 1)
        throw ConfigError("--threads: must be positive");
    if (needs_measure) {
        if (!cfg.contains("measure"))
            throw ConfigError("measure: required field missing (pass --config)");
        e.measure = build_measure(cfg.at("measure"));
    }
    return e;
}

// Points from the config: {"explicit": [[...], ...]} or
// {"count": N, "sample_depth": D} (mu-distributed).
inline std::vector<Point> experiment_points(const Experiment& e)
{
    const MeasureTree& tree = e.measure->tree;
    const json& p = e.points;
    if (p.is_object() && p.contains("explicit")) {
        detail::allow_keys(p, "points", {"explicit"});
        const json& arr = p.at("explicit");
        if (!arr.is_array() || arr.empty())
            throw ConfigError("points.explicit: expected a non-empty array of points");
        std::vector<Point> out;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            Point x = detail::get_point(arr[i], "points.explicit[" + std::to_string(i) + "]");
            if (x.size() != tree.dimension())
                throw ConfigError("points.explicit[" + std::to_string(i) + "]: dimension does not match the measure");
            out.push_back(x);
        }
        return out;
    }
    if (!p.is_object())
        throw ConfigError("points: expected a JSON object");
    detail::allow_keys(p, "points", {"count", "sample_depth"});
    const int count = static_cast<int>(detail::get_int_in(p, "points", "count", 4, 1, 100000));
    const int depth = static_cast<int>(detail::get_int_in(p, "points", "sample_depth", 40, 1, 4096));
    return sample_points(tree, count, depth, e.seed);
}

// ---------------------------------------------------------------------------
// Runs

struct RunResult {
    std::vector<ResultRow> rows;
    json summary = json::object();
    json checks = json::object();  // invariant name -> bool
};

inline bool all_checks(const json& checks)
{
    for (auto it = checks.begin(); it != checks.end(); ++it)
        if (it.value().is_boolean() && !it.value().get<bool>())
            return false;
    return true;
}

inline std::vector<double> radii_from(const json& params, int default_levels, double default_r0)
{
    using namespace detail;
    if (params.contains("radii")) {
        const json& r = params.at("radii");
        if (!r.is_array() || r.empty())
            throw ConfigError("params.radii: expected a non-empty array of positive numbers");
        std::vector<double> out;
        for (const json& v : r) {
            if (!v.is_number() || !(v.get<double>() > 0.0))
                throw ConfigError("params.radii: expected a non-empty array of positive numbers");
            out.push_back(v.get<double>());
        }
        return out;
    }
    const double r0 = get_positive(params, "params", "r0", default_r0);
    const int levels = static_cast<int>(get_int_in(params, "params", "levels", default_levels, 1, 60));
    std::vector<double> out;
    for (int j = 1; j <= levels; ++j)
        out.push_back(std::ldexp(r0, -j));
    return out;
}

inline RunResult run_measure(const Experiment& e)
{
    detail::allow_keys(e.params, "params", {"radii", "r0", "levels"});
    const auto pts = experiment_points(e);
    const auto radii = radii_from(e.params, 8, 0.5);
    const MeasureTree& tree = e.measure->tree;
    auto per_point = parallel_map<std::vector<ResultRow>>(pts.size(), e.threads, [&](std::size_t p) {
        std::vector<ResultRow> rows;
        MeasureInterval prev;
        for (std::size_t j = 0; j < radii.size(); ++j) {
            const int budget = budget_for(tree, radii[j], e.depth);
            const MeasureInterval mi = region_measure(tree, RegionQuery::ball(pts[p], radii[j]), budget);
            rows.push_back({e.id, static_cast<long long>(p), pts[p], static_cast<long long>(j + 1), radii[j],
                            "ball_measure", mi.lo, mi.hi, "budget=" + std::to_string(budget)});
        }
        return rows;
    });
    RunResult res;
    bool nested = true;
    const MeasureTree& t = tree;
    // Nestedness spot check on the first point and radius.
    {
        const MeasureInterval a = region_measure(t, RegionQuery::ball(pts[0], radii[0]), budget_for(t, radii[0], e.depth));
        const MeasureInterval b =
            region_measure(t, RegionQuery::ball(pts[0], radii[0]), budget_for(t, radii[0], e.depth + 2));
        nested = b.nested_in(a);
    }
    for (auto& v : per_point)
        for (auto& r : v)
            res.rows.push_back(std::move(r));
    res.summary["points"] = pts.size();
    res.summary["radii"] = radii;
    res.checks["nested_under_deeper_budget"] = nested;
    return res;
}

inline RunResult run_density(const Experiment& e)
{
    using namespace detail;
    const std::string op = e.operation.empty() ? "worst_cone_ratio" : e.operation;
    allow_keys(e.params, "params", {"alpha", "m", "r0", "levels", "radii", "c", "net_seed", "plane", "theta"});
    const double alpha = get_alpha(e.params, "params", "alpha", 0.5);
    const MeasureTree& tree = e.measure->tree;
    const int n = tree.dimension();
    const int m = static_cast<int>(get_int_in(e.params, "params", "m", n > 1 ? 1 : 0, 0, n - 1));
    const double c = get_number(e.params, "params", "c", 0.0);
    const auto net_seed = static_cast<std::uint64_t>(get_int_in(e.params, "params", "net_seed", 0, 0, 1LL << 62));
    const auto radii = radii_from(e.params, 6, 0.5);
    const auto pts = experiment_points(e);

    RunResult res;
    res.summary["operation"] = op;
    res.summary["alpha"] = alpha;
    res.summary["m"] = m;
    res.summary["c"] = c;
    if (op == "worst_cone_ratio") {
        const DirectionNet dirs = build_direction_net(n, alpha, net_seed);
        const SubspaceNet subs = build_subspace_net(n, m, alpha, net_seed);
        res.summary["direction_net_size"] = dirs.size();
        res.summary["subspace_net_size"] = subs.size();
        struct PointOut {
            std::vector<ResultRow> rows;
            double sup = 0.0;
            double freq = 0.0;
            bool monotone = true;
        };
        auto outs = parallel_map<PointOut>(pts.size(), e.threads, [&](std::size_t p) {
            PointOut o;
            double sup = 0.0;
            std::size_t hits = 0;
            for (std::size_t j = 0; j < radii.size(); ++j) {
                const ConeMinimum cell = worst_cone_cell(tree, pts[p], radii[j], alpha, dirs, subs, e.depth);
                const double next = std::max(sup, cell.ratio.lo);
                o.monotone = o.monotone && next >= sup;
                sup = next;
                if (cell.ratio.lo > c)
                    ++hits;
                o.rows.push_back({e.id, static_cast<long long>(p), pts[p], static_cast<long long>(j + 1), radii[j],
                                  "worst_cone_ratio", cell.ratio.lo, cell.ratio.hi,
                                  "plane=" + std::to_string(cell.plane) +
                                      ";direction=" + std::to_string(cell.direction)});
            }
            o.sup = sup;
            o.freq = static_cast<double>(hits) / radii.size();
            return o;
        });
        json per = json::array();
        bool monotone = true;
        bool freq_ok = true;
        for (std::size_t p = 0; p < outs.size(); ++p) {
            for (auto& r : outs[p].rows)
                res.rows.push_back(std::move(r));
            per.push_back({{"point", point_json(pts[p])}, {"running_sup", outs[p].sup}, {"frequency", outs[p].freq}});
            monotone = monotone && outs[p].monotone;
            freq_ok = freq_ok && outs[p].freq >= 0.0 && outs[p].freq <= 1.0;
        }
        res.summary["per_point"] = per;
        res.checks["running_sup_non_decreasing"] = monotone;
        res.checks["frequency_in_unit_interval"] = freq_ok;
        return res;
    }
    if (op == "halfspace_deficiency") {
        const DirectionNet dirs = build_direction_net(n, alpha, net_seed);
        res.summary["direction_net_size"] = dirs.size();
        auto outs = parallel_map<std::vector<ResultRow>>(pts.size(), e.threads, [&](std::size_t p) {
            std::vector<ResultRow> rows;
            for (std::size_t j = 0; j < radii.size(); ++j) {
                const DeficiencyReport d = halfspace_deficiency(tree, pts[p], radii[j], alpha, dirs, e.depth);
                rows.push_back({e.id, static_cast<long long>(p), pts[p], static_cast<long long>(j + 1), radii[j],
                                "deficiency_certified", d.certified.lo, d.certified.hi,
                                "direction=" + std::to_string(d.certified_direction)});
                rows.push_back({e.id, static_cast<long long>(p), pts[p], static_cast<long long>(j + 1), radii[j],
                                "deficiency_estimate", d.estimate.lo, d.estimate.hi,
                                "direction=" + std::to_string(d.estimate_direction)});
            }
            return rows;
        });
        for (auto& v : outs)
            for (auto& r : v)
                res.rows.push_back(std::move(r));
        return res;
    }
    if (op == "conical_ratio") {
        if (!e.params.contains("theta"))
            throw ConfigError("params.theta: required field missing");
        const Point th = get_point(e.params.at("theta"), "params.theta");
        if (th.size() != n || !(th.norm() > 0.0))
            throw ConfigError("params.theta: must be a non-zero vector of the measure's dimension");
        const UnitVector theta = UnitVector::normalized(th);
        Subspace plane = Subspace::whole(n);
        if (e.params.contains("plane")) {
            const json& basis = e.params.at("plane");
            if (!basis.is_array() || basis.empty())
                throw ConfigError("params.plane: expected an array of basis vectors");
            Mat b(n, static_cast<Eigen::Index>(basis.size()));
            for (std::size_t j = 0; j < basis.size(); ++j) {
                const Point v = get_point(basis[j], "params.plane");
                if (v.size() != n)
                    throw ConfigError("params.plane: basis vectors must match the measure's dimension");
                b.col(static_cast<Eigen::Index>(j)) = v;
            }
            try {
                plane = Subspace::span(b);
            } catch (const ArgumentError&) {
                throw ConfigError("params.plane: basis is rank deficient");
            }
        }
        auto outs = parallel_map<std::vector<ResultRow>>(pts.size(), e.threads, [&](std::size_t p) {
            std::vector<ResultRow> rows;
            for (std::size_t j = 0; j < radii.size(); ++j) {
                const MeasureInterval r = conical_ratio(tree, pts[p], radii[j], plane, theta, alpha, e.depth);
                rows.push_back({e.id, static_cast<long long>(p), pts[p], static_cast<long long>(j + 1), radii[j],
                                "conical_ratio", r.lo, r.hi, ""});
            }
            return rows;
        });
        for (auto& v : outs)
            for (auto& r : v)
                res.rows.push_back(std::move(r));
        return res;
    }
    throw ConfigError("operation: unknown density operation \"" + op + "\"");
}

inline RunResult run_hom(const Experiment& e)
{
    using namespace detail;
    allow_keys(e.params, "params", {"i", "l_max"});
    const MeasureTree& tree = e.measure->tree;
    if (!tree.generator().is_cube_tree())
        throw ConfigError("measure.kind: hom needs a k-adic cube measure");
    const int i = static_cast<int>(get_int(e.params, "params", "i", 1));
    const int l_max = static_cast<int>(get_int(e.params, "params", "l_max", 12));
    const HomEstimate h = hom_estimate(tree, i, l_max);
    RunResult res;
    for (std::size_t l = 0; l < h.partial.size(); ++l)
        res.rows.push_back({e.id, -1, Point(), static_cast<long long>(l + 1), 0.0, "hom_partial", h.partial[l],
                            h.partial[l], "level_sum=" + fmt_double(h.level_sums[l])});
    res.summary["i"] = i;
    res.summary["l_max"] = l_max;
    res.summary["trailing_max"] = h.trailing_max;
    res.summary["overall_max"] = h.overall_max;
    bool range_ok = true;
    for (double v : h.partial)
        range_ok = range_ok && v >= -1e-12 && std::isfinite(v);
    res.checks["partials_finite_non_negative"] = range_ok;
    return res;
}

inline RunResult run_doubling(const Experiment& e)
{
    using namespace detail;
    allow_keys(e.params, "params", {"gamma", "k", "c", "p", "l"});
    const MeasureTree& tree = e.measure->tree;
    const int n = tree.dimension();
    const double gamma = get_positive(e.params, "params", "gamma", 1.0);
    const int k = static_cast<int>(get_int_in(e.params, "params", "k", 2, 2, 16));
    const int l = static_cast<int>(get_int_in(e.params, "params", "l", 20, 1, 60));
    double c;
    if (e.params.contains("c")) {
        if (e.params.contains("p"))
            throw ConfigError("params.c: give either c or p, not both");
        c = get_positive(e.params, "params", "c", std::nullopt);
    } else {
        const double p = get_number(e.params, "params", "p", 0.9);
        if (!(p > 0.0 && p < 1.0))
            throw ConfigError("params.p: must lie in (0, 1)");
        c = doubling_constant(n, k, p);
    }
    const auto pts = experiment_points(e);
    auto stats = parallel_map<DoublingStats>(pts.size(), e.threads, [&](std::size_t p) {
        return doubling_frequency(tree, pts[p], gamma, k, c, l, e.depth);
    });
    RunResult res;
    bool ok = true;
    for (std::size_t p = 0; p < stats.size(); ++p) {
        const DoublingStats& s = stats[p];
        const double lo = s.frequency();
        const double hi = static_cast<double>(s.count + s.undecided) / s.l;
        ok = ok && lo >= 0.0 && hi <= 1.0;
        res.rows.push_back({e.id, static_cast<long long>(p), pts[p], static_cast<long long>(l), gamma,
                            "doubling_frequency", lo, hi, "undecided=" + std::to_string(s.undecided)});
    }
    res.summary["c"] = c;
    res.summary["gamma"] = gamma;
    res.summary["l"] = l;
    res.checks["frequency_in_unit_interval"] = ok;
    return res;
}

inline json constants_json(const ConstantsReport& r)
{
    json j;
    j["n"] = r.n;
    j["m"] = r.m;
    j["s"] = r.s;
    j["alpha"] = r.alpha;
    j["t"] = r.t;
    j["q"] = r.q;
    j["q_verified"] = r.q_verified;
    j["K_dir"] = r.k_dir;
    j["K_sub"] = r.k_sub;
    j["unit_ball_volume"] = r.unit_ball_volume;
    j["M_lower"] = r.m_lower;
    j["M"] = r.big_m.str();
    j["tau"] = r.tau;
    j["k"] = r.k.str();
    j["c1"] = r.c1;
    j["log_c1"] = r.log_c1;
    j["eta"] = r.eta;
    j["dimension_margin"] = r.dimension_margin;
    j["p"] = r.p;
    j["log_c2"] = r.log_c2;
    j["log_c"] = r.log_c;
    j["log10_c"] = r.log10_c();
    j["c"] = r.c();
    j["c_deficiency"] = r.c_deficiency;
    const auto& ck = r.checks;
    j["inequalities"] = {{"m_lt_s_le_n", ck.dims},
                         {"separation_constraints", ck.separation},
                         {"M_bound", ck.m_bound},
                         {"k_gt_max_root_3", ck.k_bound},
                         {"eta_in_range", ck.eta_range},
                         {"dimension_bound_below_s", ck.dimension},
                         {"p_in_unit_interval", ck.p_range},
                         {"c_deficiency_positive", ck.c_deficiency}};
    j["all_ok"] = r.all_ok();
    return j;
}

// ---------------------------------------------------------------------------
// verify-example

inline RunResult run_example(int which, int depth, std::uint64_t seed)
{
    RunResult res;
    res.summary["example"] = which;
    res.summary["seed"] = seed;
    if (which == 1) {
        if (depth > 40)
            throw ResourceGuardError("verify-example 1: last level above 40");
        if (depth < 9)
            throw ConfigError("--depth: example 1 needs a last level of at least 9");
        const MeasureTree tree = binomial_measure(BinomialSpec::harmonic());
        const Point x = sample_points(tree, 1, 60, seed).front();
        const SixIntervalScan scan = six_interval_scan(tree, x, 8, depth);
        for (std::size_t j = 0; j < scan.values.size(); ++j)
            res.rows.push_back({"example1", 0, x, static_cast<long long>(8 + j), std::ldexp(1.0, -(8 + int(j))),
                                "six_interval_constant", scan.values[j], scan.values[j], ""});
        res.summary["point"] = point_json(x);
        res.summary["first"] = scan.values.front();
        res.summary["last"] = scan.values.back();
        res.summary["non_increasing"] = scan.non_increasing();
        res.summary["halved"] = scan.halved();
        res.summary["verdict"] = scan.non_increasing() && scan.halved();
        return res;
    }
    if (which == 2) {
        if (depth > 256)
            throw ResourceGuardError("verify-example 2: n above 256");
        if (depth < 4)
            throw ConfigError("--depth: example 2 needs n of at least 4");
        const double alpha = 0.9;
        const RotatingBallReport rep = rotating_ball_cone_counts(alpha, depth, seed);
        for (const RotatingBallStep& s : rep.steps)
            res.rows.push_back({"example2", 0, Point(), s.n, s.r, "cone_hits", double(s.hits), double(s.hits),
                                "ratio_bound=" + fmt_double(s.ratio_bound)});
        res.summary["alpha"] = alpha;
        res.summary["M"] = rep.bound;
        res.summary["n0"] = rep.n0;
        res.summary["initial_bound"] = rep.n0 > 0 ? double(rep.bound) / rep.n0 : 0.0;
        res.summary["final_bound"] = double(rep.bound) / depth;
        res.summary["final_ratio"] = rep.final_ratio();
        res.summary["separation_ok"] = rep.separation_ok;
        const RotatingBallLevelTotals totals = rotating_ball_level_totals(depth);
        res.summary["level_radius_sum"] = static_cast<double>(totals.radius_sum);
        res.summary["level_diameter_sum"] = static_cast<double>(totals.diameter_sum);
        res.summary["verdict"] = rep.decays() && rep.separation_ok;
        return res;
    }
    if (which == 3) {
        if (depth > 14)
            throw ResourceGuardError("verify-example 3: last level above 14");
        const double alpha = 0.3;
        const StripBlockSchedule schedule = StripBlockSchedule::shifted();
        const int first = strip_block_first_level(schedule, alpha) + 1;
        if (depth < first + 1)
            throw ConfigError("--depth: example 3 needs a last level of at least " + std::to_string(first + 1));
        const StripBlockConeReport rep = strip_block_cone_ratios(schedule, alpha, first, depth, 40, seed);
        for (const StripBlockLevel& l : rep.levels)
            res.rows.push_back({"example3", -1, Point(), l.i, 1.0 / strip_block_cells(schedule, l.i), "max_cone_ratio", 0.0, l.max_ratio_hi,
                                "I=" + std::to_string(l.big_i) + ";I_next=" + std::to_string(l.next_i) +
                                    ";mean=" + fmt_double(l.mean_ratio_hi) + ";strips=" + std::to_string(l.max_strips)});
        res.summary["alpha"] = alpha;
        res.summary["schedule"] = "shifted";
        res.summary["i0"] = rep.i0;
        res.summary["bounded_by_two_over_next"] = rep.bounded_next();
        res.summary["decreasing"] = rep.decreasing();
        res.summary["verdict"] = rep.bounded_next() && rep.decreasing();
        return res;
    }
    throw ConfigError("--which: must be 1, 2 or 3");
}

// ---------------------------------------------------------------------------
// Driver

inline int emit(const RunResult& res, const std::string& id, const std::optional<std::string>& out_dir,
                std::ostream& out, std::ostream& err)
{
    bool rows_ok = true;
    for (const ResultRow& r : res.rows)
        rows_ok = rows_ok && r.lo <= r.hi;
    json checks = res.checks;
    checks["rows_lo_le_hi"] = rows_ok;
    checks["no_inverted_intervals"] = interval_audit().inverted == 0;
    json summary = {{"schema_version", 1}, {"experiment", id}};
    for (auto it = res.summary.begin(); it != res.summary.end(); ++it)
        summary[it.key()] = it.value();
    summary["rows"] = res.rows.size();
    summary["checks"] = checks;
    const bool ok = all_checks(checks);
    if (out_dir) {
        std::error_code ec;
        std::filesystem::create_directories(*out_dir, ec);
        if (ec)
            throw ConfigError("--out: cannot create directory " + *out_dir);
        std::ofstream csv(std::filesystem::path(*out_dir) / (id + ".csv"), std::ios::binary);
        std::ofstream js(std::filesystem::path(*out_dir) / (id + ".json"), std::ios::binary);
        if (!csv || !js)
            throw ConfigError("--out: cannot write into " + *out_dir);
        csv << kCsvHeader << "\r\n";
        for (const ResultRow& r : res.rows)
            csv << csv_line(r) << "\r\n";
        js << summary.dump(2) << "\n";
    } else {
        out << kCsvHeader << "\r\n";
        for (const ResultRow& r : res.rows)
            out << csv_line(r) << "\r\n";
    }
    if (!ok) {
        err << "invariant violation: " << checks.dump() << "\n";
        return exit_invariant;
    }
    return exit_ok;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"conelab: conical density experiments"};
    app.require_subcommand(1);
    RunOptions opt;
    std::string config;
    std::uint64_t seed = 0;
    int depth = 0;
    int threads = 0;
    std::string out_dir;
    auto* o_config = app.add_option("--config", config, "JSON experiment config")->check(CLI::ExistingFile);
    auto* o_seed = app.add_option("--seed", seed, "RNG seed");
    auto* o_depth = app.add_option("--depth", depth, "extra tree levels below each query scale");
    auto* o_threads = app.add_option("--threads", threads, "worker threads (default: hardware)");
    auto* o_out = app.add_option("--out", out_dir, "output directory for CSV and JSON summary");
    for (auto* o : {o_config, o_seed, o_depth, o_threads, o_out})
        o->configurable(false);
    app.fallthrough();

    auto* c_measure = app.add_subcommand("measure", "ball measure intervals at sampled points");
    auto* c_density = app.add_subcommand("density", "conical density ratios and profiles");
    auto* c_hom = app.add_subcommand("hom", "average homogeneity partial averages");
    auto* c_doubling = app.add_subcommand("doubling", "doubling scale frequencies");
    auto* c_constants = app.add_subcommand("constants", "constant chain with re-verified inequalities");
    int cn = 2, cm = 1;
    double cs = 2.0, calpha = 0.5;
    int cq = 0;
    c_constants->add_option("-n", cn, "ambient dimension")->required();
    c_constants->add_option("-m", cm, "codimension of the cone planes")->required();
    c_constants->add_option("-s", cs, "dimension threshold")->required();
    c_constants->add_option("--alpha", calpha, "cone opening")->required();
    auto* o_q = c_constants->add_option("--q", cq, "point-count override (needed when n - m > 1)");
    auto* c_ef = app.add_subcommand("ef", "cone triples in finite point sets");
    int en = 2, esize = 3, etrials = 10000;
    double ealpha = 0.1;
    c_ef->add_option("-n", en, "dimension");
    c_ef->add_option("--alpha", ealpha, "cone opening");
    c_ef->add_option("--size", esize, "points per candidate set");
    c_ef->add_option("--trials", etrials, "random candidate sets");
    auto* c_example = app.add_subcommand("verify-example", "canned experiment for one counterexample");
    int which = 1;
    c_example->add_option("--which", which, "1, 2 or 3")->required();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    }
    if (*o_config)
        opt.config_path = config;
    if (*o_seed)
        opt.seed = seed;
    if (*o_depth)
        opt.depth = depth;
    if (*o_threads)
        opt.threads = threads;
    if (*o_out)
        opt.out_dir = out_dir;

    try {
        if (*c_constants) {
            if (!(calpha > 0.0 && calpha <= 1.0))
                throw ConfigError("--alpha: must lie in (0, 1]");
            if (!(cm >= 0 && cm < cn && cn <= kMaxDimension))
                throw ConfigError("-m: must lie in [0, n-1]");
            if (!(cs > cm && cs <= cn))
                throw ConfigError("-s: must satisfy m < s <= n");
            std::optional<int> q;
            if (*o_q)
                q = cq;
            const ConstantsReport rep = constants_chain(cn, cm, cs, calpha, q, opt.seed.value_or(0));
            json j = {{"schema_version", 1}};
            const json body = constants_json(rep);
            for (auto it = body.begin(); it != body.end(); ++it)
                j[it.key()] = it.value();
            const std::string text = j.dump(2);
            out << text << "\n";
            if (opt.out_dir) {
                std::filesystem::create_directories(*opt.out_dir);
                std::ofstream(std::filesystem::path(*opt.out_dir) / "constants.json") << text << "\n";
            }
            return rep.all_ok() ? exit_ok : exit_invariant;
        }
        if (*c_ef) {
            if (!(ealpha > 0.0 && ealpha <= 1.0))
                throw ConfigError("--alpha: must lie in (0, 1]");
            if (en < 1 || en > kMaxDimension)
                throw ConfigError("-n: must lie in [1, 8]");
            if (esize < 3 || esize > 64)
                throw ConfigError("--size: must lie in [3, 64]");
            if (etrials < 1)
                throw ConfigError("--trials: must be positive");
            const auto found = search_counterexample_set(en, ealpha, esize, etrials, opt.seed.value_or(0));
            json j = {{"schema_version", 1}, {"n", en}, {"alpha", ealpha}, {"size", esize}, {"trials", etrials}};
            j["triple_free_set_found"] = found.has_value();
            if (found) {
                json pts = json::array();
                for (const Point& p : *found)
                    pts.push_back(point_json(p));
                j["points"] = pts;
                // Re-check with a fine direction net as an independent witness search.
                const DirectionNet net = build_direction_net(en, std::min(1.0, ealpha / 4.0), 0, 2000);
                j["verified_with_net"] = !find_cone_triple(*found, ealpha, &net).has_value();
            }
            out << j.dump(2) << "\n";
            return exit_ok;
        }
        if (*c_example) {
            const std::uint64_t s = opt.seed.value_or(1);
            const int default_depth = which == 1 ? 20 : which == 2 ? 64 : 10;
            const int d = opt.depth.value_or(default_depth);
            const RunResult res = run_example(which, d, s);
            const int code = emit(res, "example" + std::to_string(which), opt.out_dir, out, err);
            err << "verdict: " << (res.summary.at("verdict").get<bool>() ? "pass" : "fail") << "\n";
            return code;
        }
        const std::string command = *c_measure    ? "measure"
                                    : *c_density  ? "density"
                                    : *c_hom      ? "hom"
                                    : *c_doubling ? "doubling"
                                                  : "";
        const Experiment e = load_experiment(opt, command, true);
        RunResult res;
        if (command == "measure")
            res = run_measure(e);
        else if (command == "density")
            res = run_density(e);
        else if (command == "hom")
            res = run_hom(e);
        else
            res = run_doubling(e);
        res.summary["command"] = command;
        res.summary["seed"] = e.seed;
        res.summary["depth"] = e.depth;
        res.summary["measure"] = e.measure->echo;
        return emit(res, e.id, e.out_dir, out, err);
    } catch (const ConfigError& ex) {
        err << "config error: " << ex.what() << "\n";
        return exit_config;
    } catch (const ResourceGuardError& ex) {
        err << "resource guard: " << ex.what() << "\n";
        return exit_resource;
    } catch (const std::bad_alloc&) {
        err << "resource guard: out of memory\n";
        return exit_resource;
    } catch (const std::invalid_argument& ex) {
        err << "config error: " << ex.what() << "\n";
        return exit_config;
    } catch (const std::domain_error& ex) {
        err << "config error: " << ex.what() << "\n";
        return exit_config;
    } catch (const std::logic_error& ex) {
        err << "config error: " << ex.what() << "\n";
        return exit_config;
    }
}

} // namespace conelab::cli
