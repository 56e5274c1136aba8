#pragma once

// Flat `key = value` experiment configuration.
//
// Grammar, one entry per line:  key WS* = WS* value NL
// Lines whose first non-blank character is '#' are comments, blank lines are
// ignored. Keys are ASCII identifiers joined by dots (problem.n).

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "krylovmp/fpx.hpp"
#include "krylovmp/bounds.hpp"
#include "krylovmp/pcg.hpp"
#include "krylovmp/problems.hpp"

namespace krylovmp {

class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error("config key '" + key + "': " + message), key_(std::move(key)) {}
    [[nodiscard]] const std::string& key() const { return key_; }

private:
    std::string key_;
};

/// Shortest decimal that round-trips to the same binary64 value.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

enum class SchemeMode { none, left, right, split, saad_split };

inline std::string_view to_string(SchemeMode m) {
    switch (m) {
        case SchemeMode::none: return "none";
        case SchemeMode::left: return "left";
        case SchemeMode::right: return "right";
        case SchemeMode::split: return "split";
        case SchemeMode::saad_split: return "saad-split";
    }
    return "none";
}

enum class PreconditionerKind { truncation, identity };

struct ExperimentConfig {
    ProblemSpec problem;
    SchemeMode mode = SchemeMode::left;
    PreconditionerKind preconditioner = PreconditionerKind::truncation;
    std::string fmt_s = "fp64";
    std::string fmt_q = "fp64";
    std::string fmt_z = "fp64";
    std::string fmt_l = "fp64";  // saad-split, compare-saad and sweep
    std::string fmt_r = "fp64";
    std::size_t maxiter = 2500;
    StoppingRule::Kind stop = StoppingRule::Kind::none;
    double stop_tau = 1e-12;
    std::size_t stop_patience = 200;
    BoundVariant bound_variant = BoundVariant::plot;
    std::vector<std::string> sweep_formats{"fp64", "fp32", "fp16", "bfloat16"};
    std::string output = "out.csv";

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

    [[nodiscard]] StoppingRule stopping_rule() const {
        switch (stop) {
            case StoppingRule::Kind::none: return StoppingRule::none();
            case StoppingRule::Kind::true_residual_below: return StoppingRule::true_residual_below(stop_tau);
            case StoppingRule::Kind::recursive_residual_below:
                return StoppingRule::recursive_residual_below(stop_tau);
            case StoppingRule::Kind::anorm_error_min: return StoppingRule::anorm_error_min(stop_patience);
        }
        return StoppingRule::none();
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline bool valid_key(std::string_view key) {
    if (key.empty()) return false;
    bool at_start = true;
    for (char c : key) {
        const auto uc = static_cast<unsigned char>(c);
        if (c == '.') {
            if (at_start) return false;
            at_start = true;
        } else if (std::isalpha(uc) || c == '_') {
            at_start = false;
        } else if (std::isdigit(uc)) {
            if (at_start) return false;
        } else {
            return false;
        }
    }
    return !at_start;
}

inline double parse_real(const std::string& key, std::string_view v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw ConfigError(key, "expected a real number, got '" + std::string(v) + "'");
    return out;
}

inline std::size_t parse_count(const std::string& key, std::string_view v) {
    std::size_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        throw ConfigError(key, "expected a non-negative integer, got '" + std::string(v) + "'");
    return out;
}

inline std::string parse_format(const std::string& key, std::string_view v) {
    if (!format_by_name(v)) throw ConfigError(key, "unknown floating-point format '" + std::string(v) + "'");
    return std::string(v);
}

inline std::string_view to_string(StoppingRule::Kind k) {
    switch (k) {
        case StoppingRule::Kind::none: return "none";
        case StoppingRule::Kind::true_residual_below: return "true_residual";
        case StoppingRule::Kind::recursive_residual_below: return "recursive_residual";
        case StoppingRule::Kind::anorm_error_min: return "anorm_min";
    }
    return "none";
}

}  // namespace detail

/// Applies one `key = value` entry to `cfg`.
inline void apply_config_entry(ExperimentConfig& cfg, const std::string& key, std::string_view value) {
    using detail::parse_count;
    using detail::parse_format;
    using detail::parse_real;
    if (key == "problem.n") {
        cfg.problem.n = parse_count(key, value);
    } else if (key == "problem.lambda_1") {
        cfg.problem.lambda_1 = parse_real(key, value);
    } else if (key == "problem.lambda_n") {
        cfg.problem.lambda_n = parse_real(key, value);
    } else if (key == "problem.rho") {
        cfg.problem.rho = parse_real(key, value);
    } else if (key == "problem.trunc_index") {
        cfg.problem.trunc_index = parse_count(key, value);
    } else if (key == "scheme.mode") {
        if (value == "none") cfg.mode = SchemeMode::none;
        else if (value == "left") cfg.mode = SchemeMode::left;
        else if (value == "right") cfg.mode = SchemeMode::right;
        else if (value == "split") cfg.mode = SchemeMode::split;
        else if (value == "saad-split") cfg.mode = SchemeMode::saad_split;
        else throw ConfigError(key, "expected none|left|right|split|saad-split");
    } else if (key == "scheme.preconditioner") {
        if (value == "truncation") cfg.preconditioner = PreconditionerKind::truncation;
        else if (value == "identity") cfg.preconditioner = PreconditionerKind::identity;
        else throw ConfigError(key, "expected truncation|identity");
    } else if (key == "fmt.s") {
        cfg.fmt_s = parse_format(key, value);
    } else if (key == "fmt.q") {
        cfg.fmt_q = parse_format(key, value);
    } else if (key == "fmt.z") {
        cfg.fmt_z = parse_format(key, value);
    } else if (key == "fmt.L") {
        cfg.fmt_l = parse_format(key, value);
    } else if (key == "fmt.R") {
        cfg.fmt_r = parse_format(key, value);
    } else if (key == "maxiter") {
        cfg.maxiter = parse_count(key, value);
        if (cfg.maxiter < 1) throw ConfigError(key, "must be at least 1");
    } else if (key == "stop.rule") {
        if (value == "none") cfg.stop = StoppingRule::Kind::none;
        else if (value == "true_residual") cfg.stop = StoppingRule::Kind::true_residual_below;
        else if (value == "recursive_residual") cfg.stop = StoppingRule::Kind::recursive_residual_below;
        else if (value == "anorm_min") cfg.stop = StoppingRule::Kind::anorm_error_min;
        else throw ConfigError(key, "expected none|true_residual|recursive_residual|anorm_min");
    } else if (key == "stop.tau") {
        cfg.stop_tau = parse_real(key, value);
    } else if (key == "stop.patience") {
        cfg.stop_patience = parse_count(key, value);
    } else if (key == "bounds.variant") {
        if (value == "plot") cfg.bound_variant = BoundVariant::plot;
        else if (value == "strict") cfg.bound_variant = BoundVariant::strict;
        else throw ConfigError(key, "expected plot|strict");
    } else if (key == "sweep.formats") {
        std::vector<std::string> names;
        std::istringstream in{std::string(value)};
        for (std::string name; in >> name;) names.push_back(parse_format(key, name));
        if (names.empty()) throw ConfigError(key, "needs at least one format name");
        cfg.sweep_formats = std::move(names);
    } else if (key == "output") {
        if (value.empty()) throw ConfigError(key, "must not be empty");
        cfg.output = std::string(value);
    } else {
        throw ConfigError(key, "unknown key");
    }
}

/// Checks cross-field constraints after all entries are applied.
inline void validate_config(const ExperimentConfig& cfg) {
    try {
        cfg.problem.validate();
    } catch (const std::invalid_argument& e) {
        std::string msg = e.what();
        throw ConfigError(msg.substr(0, msg.find(' ')), msg);
    }
}

/// Parses configuration text. When `header_only` is set, only comment lines
/// of the form `# key = value` are read (the header of an emitted CSV file),
/// `meta.` keys are skipped and parsing ends at the first data line.
inline ExperimentConfig parse_config(std::string_view text, bool header_only = false) {
    ExperimentConfig cfg;
    std::map<std::string, bool> seen;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string_view line = detail::trim(text.substr(pos, end - pos));
        pos = end + 1;
        if (header_only) {
            if (line.empty()) continue;
            if (line.front() != '#') break;
            line = detail::trim(line.substr(1));
            if (line.empty()) continue;
        } else if (line.empty() || line.front() == '#') {
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            const std::string key(detail::trim(line));
            throw ConfigError(key, "missing '='");
        }
        const std::string key(detail::trim(line.substr(0, eq)));
        const std::string_view value = detail::trim(line.substr(eq + 1));
        if (!detail::valid_key(key)) throw ConfigError(key, "malformed key");
        if (header_only && key.rfind("meta.", 0) == 0) continue;
        if (seen[key]) throw ConfigError(key, "duplicate key");
        seen[key] = true;
        apply_config_entry(cfg, key, value);
    }
    validate_config(cfg);
    return cfg;
}

/// Every field of `cfg` as `key = value` lines, in a fixed order.
inline std::vector<std::string> config_lines(const ExperimentConfig& cfg) {
    std::vector<std::string> out;
    auto add = [&out](std::string_view k, const std::string& v) { out.push_back(std::string(k) + " = " + v); };
    add("problem.n", std::to_string(cfg.problem.n));
    add("problem.lambda_1", format_double(cfg.problem.lambda_1));
    add("problem.lambda_n", format_double(cfg.problem.lambda_n));
    add("problem.rho", format_double(cfg.problem.rho));
    add("problem.trunc_index", std::to_string(cfg.problem.trunc_index));
    add("scheme.mode", std::string(to_string(cfg.mode)));
    add("scheme.preconditioner", cfg.preconditioner == PreconditionerKind::identity ? "identity" : "truncation");
    add("fmt.s", cfg.fmt_s);
    add("fmt.q", cfg.fmt_q);
    add("fmt.z", cfg.fmt_z);
    add("fmt.L", cfg.fmt_l);
    add("fmt.R", cfg.fmt_r);
    add("maxiter", std::to_string(cfg.maxiter));
    add("stop.rule", std::string(detail::to_string(cfg.stop)));
    add("stop.tau", format_double(cfg.stop_tau));
    add("stop.patience", std::to_string(cfg.stop_patience));
    add("bounds.variant", cfg.bound_variant == BoundVariant::strict ? "strict" : "plot");
    std::string formats;
    for (const auto& f : cfg.sweep_formats) formats += (formats.empty() ? "" : " ") + f;
    add("sweep.formats", formats);
    add("output", cfg.output);
    return out;
}

inline FloatFormat resolve_format(const std::string& name) {
    if (auto f = format_by_name(name)) return *f;
    throw ConfigError("fmt", "unknown floating-point format '" + name + "'");
}

}  // namespace krylovmp
