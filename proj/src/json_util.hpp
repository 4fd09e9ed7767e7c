#pragma once

#include <initializer_list>
#include <string>

#include <json.hpp>

#include "errors.hpp"

namespace sardet {

using json = nlohmann::json;

/// Reject unknown keys so config typos fail loudly instead of being ignored.
inline void require_keys(const json& j, std::initializer_list<const char*> allowed,
                         const std::string& context) {
    if (!j.is_object()) throw ValidationError(context + ": expected a JSON object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed) {
            if (item.key() == k) { known = true; break; }
        }
        if (!known) throw ValidationError(context + ": unknown key '" + item.key() + "'");
    }
}

inline double get_num(const json& j, const char* key, double fallback,
                      const std::string& context) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ValidationError(context + ": '" + key + "' must be a number");
    return j[key].get<double>();
}

inline std::int64_t get_int(const json& j, const char* key, std::int64_t fallback,
                            const std::string& context) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer())
        throw ValidationError(context + ": '" + key + "' must be an integer");
    return j[key].get<std::int64_t>();
}

inline std::string get_str(const json& j, const char* key, const std::string& fallback,
                           const std::string& context) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_string()) throw ValidationError(context + ": '" + key + "' must be a string");
    return j[key].get<std::string>();
}

inline bool get_bool(const json& j, const char* key, bool fallback, const std::string& context) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_boolean()) throw ValidationError(context + ": '" + key + "' must be a boolean");
    return j[key].get<bool>();
}

} // namespace sardet
