#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfl/kernels.hpp"
#include "mfl/measures.hpp"

namespace mfl {

// Line-oriented "key = value" configuration with [section] headers.  Keys are
// addressed as "section.key".  Parsing and typed access collect *all* errors;
// callers raise one ConfigError listing everything at the end.
class ConfigMap {
public:
    // Parses the text; syntax errors (bad lines, duplicate keys) are recorded.
    static ConfigMap parse(const std::string& text);

    bool has(const std::string& key) const;

    // Typed getters: record an error and return the fallback on failure.
    // Required variants (no fallback) record missing-key errors.
    std::string get_string(const std::string& key);
    std::string get_string(const std::string& key, const std::string& fallback);
    double get_double(const std::string& key);
    double get_double(const std::string& key, double fallback);
    // accepts "inf" for the integrability exponent
    double get_exponent(const std::string& key, double fallback);
    long get_int(const std::string& key);
    long get_int(const std::string& key, long fallback);
    std::uint64_t get_seed(const std::string& key, std::uint64_t fallback);
    std::vector<double> get_doubles(const std::string& key); // comma-separated
    std::vector<std::size_t> get_sizes(const std::string& key);

    void record_error(const std::string& msg);
    // Marks validation complete: every untouched key becomes an unknown-key
    // error.  Throws ConfigError listing all collected errors, if any.
    void finish();

    const std::vector<std::string>& errors() const { return errors_; }

private:
    struct Value {
        std::string text;
        int line = 0;
        bool used = false;
    };
    std::optional<std::string> raw(const std::string& key);
    std::map<std::string, Value> kv_;
    std::vector<std::string> errors_;
};

// Shared section builders.
KernelSpec kernel_from_config(ConfigMap& cfg);
DensitySpec density_from_config(ConfigMap& cfg);

} // namespace mfl
