#include "mfl/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace mfl {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

} // namespace

ConfigMap ConfigMap::parse(const std::string& text) {
    ConfigMap cfg;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    std::map<std::string, int> first_line;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                cfg.errors_.push_back("line " + std::to_string(lineno) + ": malformed section header");
                continue;
            }
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                cfg.errors_.push_back("line " + std::to_string(lineno) + ": empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            cfg.errors_.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            cfg.errors_.push_back("line " + std::to_string(lineno) + ": empty key");
            continue;
        }
        const std::string full = section.empty() ? key : section + "." + key;
        auto it = cfg.kv_.find(full);
        if (it != cfg.kv_.end()) {
            cfg.errors_.push_back("duplicate key " + full + " at lines " +
                                  std::to_string(first_line[full]) + " and " + std::to_string(lineno));
            continue;
        }
        first_line[full] = lineno;
        cfg.kv_[full] = Value{value, lineno, false};
    }
    return cfg;
}

bool ConfigMap::has(const std::string& key) const { return kv_.count(key) > 0; }

std::optional<std::string> ConfigMap::raw(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) return std::nullopt;
    it->second.used = true;
    return it->second.text;
}

std::string ConfigMap::get_string(const std::string& key) {
    auto v = raw(key);
    if (!v) {
        errors_.push_back("missing required key " + key);
        return {};
    }
    return *v;
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) {
    auto v = raw(key);
    return v ? *v : fallback;
}

double ConfigMap::get_double(const std::string& key) {
    auto v = raw(key);
    if (!v) {
        errors_.push_back("missing required key " + key);
        return 0.0;
    }
    try {
        std::size_t pos = 0;
        const double x = std::stod(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        errors_.push_back("key " + key + ": expected a number, got '" + *v + "'");
        return 0.0;
    }
}

double ConfigMap::get_double(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    return get_double(key);
}

double ConfigMap::get_exponent(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    auto v = raw(key);
    if (*v == "inf" || *v == "infinity") return std::numeric_limits<double>::infinity();
    try {
        return std::stod(*v);
    } catch (...) {
        errors_.push_back("key " + key + ": expected a number or 'inf', got '" + *v + "'");
        return fallback;
    }
}

long ConfigMap::get_int(const std::string& key) {
    auto v = raw(key);
    if (!v) {
        errors_.push_back("missing required key " + key);
        return 0;
    }
    try {
        std::size_t pos = 0;
        const long x = std::stol(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        errors_.push_back("key " + key + ": expected an integer, got '" + *v + "'");
        return 0;
    }
}

long ConfigMap::get_int(const std::string& key, long fallback) {
    if (!has(key)) return fallback;
    return get_int(key);
}

std::uint64_t ConfigMap::get_seed(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    auto v = raw(key);
    try {
        return std::stoull(*v);
    } catch (...) {
        errors_.push_back("key " + key + ": expected a nonnegative integer seed");
        return fallback;
    }
}

std::vector<double> ConfigMap::get_doubles(const std::string& key) {
    std::vector<double> out;
    auto v = raw(key);
    if (!v) {
        errors_.push_back("missing required key " + key);
        return out;
    }
    std::istringstream is(*v);
    std::string item;
    while (std::getline(is, item, ',')) {
        try {
            out.push_back(std::stod(trim(item)));
        } catch (...) {
            errors_.push_back("key " + key + ": expected comma-separated numbers");
            return {};
        }
    }
    if (out.empty()) errors_.push_back("key " + key + ": empty list");
    return out;
}

std::vector<std::size_t> ConfigMap::get_sizes(const std::string& key) {
    std::vector<std::size_t> out;
    for (double v : get_doubles(key)) {
        if (v < 1 || v != std::floor(v)) {
            errors_.push_back("key " + key + ": expected positive integers");
            return {};
        }
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

void ConfigMap::record_error(const std::string& msg) { errors_.push_back(msg); }

void ConfigMap::finish() {
    for (const auto& [key, val] : kv_)
        if (!val.used)
            errors_.push_back("unknown key " + key + " at line " + std::to_string(val.line));
    if (!errors_.empty()) {
        std::ostringstream os;
        os << "configuration invalid (" << errors_.size() << " error" << (errors_.size() > 1 ? "s" : "")
           << "):";
        for (const auto& e : errors_) os << "\n  - " << e;
        throw ConfigError(os.str());
    }
}

KernelSpec kernel_from_config(ConfigMap& cfg) {
    const std::string type = cfg.get_string("kernel.type");
    auto build = [&](const std::string& t, const std::string& prefix) -> std::optional<KernelSpec> {
        try {
            if (t == "harmonic") return KernelSpec::harmonic(cfg.get_double(prefix + "k", 1.0));
            if (t == "power_law")
                return KernelSpec::power_law(cfg.get_double(prefix + "a"), cfg.get_double(prefix + "b"));
            if (t == "morse")
                return KernelSpec::morse(cfg.get_double(prefix + "c_att"), cfg.get_double(prefix + "len_att"),
                                         cfg.get_double(prefix + "c_rep"), cfg.get_double(prefix + "len_rep"));
        } catch (const Error& e) {
            cfg.record_error(std::string("kernel: ") + e.what());
            return std::nullopt;
        }
        cfg.record_error("kernel.type: unknown variant '" + t + "'");
        return std::nullopt;
    };
    std::optional<KernelSpec> k;
    if (type == "truncated") {
        k = build(cfg.get_string("kernel.base_type"), "kernel.");
        if (k) {
            try {
                k = KernelSpec::truncated_tail(std::move(*k), cfg.get_double("kernel.r_cut"));
            } catch (const Error& e) {
                cfg.record_error(std::string("kernel: ") + e.what());
                k.reset();
            }
        }
    } else if (!type.empty()) {
        k = build(type, "kernel.");
    }
    if (!k) return KernelSpec::harmonic(1.0); // placeholder; finish() will throw
    return *k;
}

DensitySpec density_from_config(ConfigMap& cfg) {
    const std::string type = cfg.get_string("density.type");
    try {
        if (type == "uniform_box")
            return DensitySpec::uniform_box(cfg.get_doubles("density.lo"), cfg.get_doubles("density.hi"));
        if (type == "radial_bump")
            return DensitySpec::radial_bump(cfg.get_doubles("density.center"),
                                            cfg.get_double("density.radius"),
                                            cfg.get_double("density.exponent", 1.0));
        if (type == "gaussian")
            return DensitySpec::gaussian_truncated(cfg.get_doubles("density.center"),
                                                   cfg.get_double("density.sigma"),
                                                   cfg.get_double("density.radius"));
        if (!type.empty()) cfg.record_error("density.type: unknown variant '" + type + "'");
    } catch (const Error& e) {
        cfg.record_error(std::string("density: ") + e.what());
    }
    return DensitySpec::uniform_box({0.0}, {1.0}); // placeholder; finish() will throw
}

} // namespace mfl
