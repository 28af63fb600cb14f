#pragma once

#include <exception>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "cmarl/error.hpp"

namespace cmarl::harness {

// Run directories that cannot be compared (different evaluation grids).
class IncompatibleRunsError : public std::runtime_error {
public:
    explicit IncompatibleRunsError(const std::string& what) : std::runtime_error(what) {}
};

enum ExitCode : int {
    exit_ok = 0,
    exit_internal = 1,
    exit_usage = 2,
    exit_config = 3,
    exit_collection = 4,
    exit_io = 5,
    exit_incompatible = 6,
};

struct Failure {
    int code = exit_internal;
    std::string kind = "internal";
    std::string message;
    double win_rate = -1.0;  // collection failures only
};

inline Failure classify(std::exception_ptr e) {
    Failure f;
    try {
        std::rethrow_exception(e);
    } catch (const UsageError& x) {
        f = {exit_usage, "usage", x.what()};
    } catch (const ConfigError& x) {
        f = {exit_config, "config", x.what()};
    } catch (const CollectionError& x) {
        f = {exit_collection, "collection", x.what(), x.win_rate()};
    } catch (const FormatError& x) {
        f = {exit_io, "io", x.what()};
    } catch (const IncompatibleRunsError& x) {
        f = {exit_incompatible, "incompatible-runs", x.what()};
    } catch (const std::exception& x) {
        f = {exit_internal, "internal", x.what()};
    }
    return f;
}

// One JSON object on one line, e.g.
// {"error":"config","exit_code":3,"message":"..."}
inline std::string failure_line(const Failure& f) {
    nlohmann::json j;
    j["error"] = f.kind;
    j["exit_code"] = f.code;
    j["message"] = f.message;
    if (f.win_rate >= 0.0) j["win_rate"] = f.win_rate;
    return j.dump();
}

} // namespace cmarl::harness
