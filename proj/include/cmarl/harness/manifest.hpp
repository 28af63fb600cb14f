#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmarl/error.hpp"
#include "cmarl/nn/checkpoint.hpp"

namespace cmarl::harness {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kCodeVersion = "0.1.0";
inline constexpr const char* kManifestName = "manifest.json";

struct Manifest {
    std::string experiment;
    std::string command;  // train | collect | acd | acd-eval | report
    json config;
    std::vector<std::uint64_t> seeds;
    std::string output_directory;
    std::string created_at;
    int substrate_version = nn::kSubstrateVersion;
    std::string code_version = kCodeVersion;
    json inputs = json::object();  // path -> content digest
};

inline json to_json(const Manifest& m) {
    json j;
    j["experiment"] = m.experiment;
    j["command"] = m.command;
    j["config"] = m.config;
    j["seeds"] = m.seeds;
    j["output_directory"] = m.output_directory;
    j["created_at"] = m.created_at;
    j["substrate_version"] = m.substrate_version;
    j["code_version"] = m.code_version;
    j["inputs"] = m.inputs;
    return j;
}

inline Manifest manifest_from_json(const json& j) {
    try {
        Manifest m;
        m.experiment = j.at("experiment").get<std::string>();
        m.command = j.at("command").get<std::string>();
        m.config = j.at("config");
        m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        m.output_directory = j.at("output_directory").get<std::string>();
        m.created_at = j.at("created_at").get<std::string>();
        m.substrate_version = j.at("substrate_version").get<int>();
        m.code_version = j.at("code_version").get<std::string>();
        m.inputs = j.at("inputs");
        return m;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed manifest: ") + e.what());
    }
}

inline std::string utc_now_iso8601() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string absolute_path(const std::string& p) { return fs::weakly_canonical(fs::absolute(p)).string(); }

// FNV-1a over file bytes; directories hash their regular files in name order.
inline std::uint64_t fnv1a(std::uint64_t h, const std::string& bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot read " + path);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

inline std::string content_digest(const std::string& path) {
    std::uint64_t h = 14695981039346656037ull;
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(path))
            if (e.is_regular_file()) files.push_back(e.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            h = fnv1a(h, fs::relative(f, path).generic_string());
            h = fnv1a(h, read_file(f.string()));
        }
    } else if (fs::is_regular_file(path)) {
        h = fnv1a(h, read_file(path));
    } else {
        throw FormatError("input not found: " + path);
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline void record_input(Manifest& m, const std::string& path) { m.inputs[path] = content_digest(path); }

inline void check_inputs(const Manifest& m) {
    for (auto it = m.inputs.begin(); it != m.inputs.end(); ++it)
        if (content_digest(it.key()) != it.value().get<std::string>())
            throw ConfigError("input changed since the manifest was written: " + it.key());
}

inline std::string manifest_path(const std::string& dir) { return (fs::path(dir) / kManifestName).string(); }

inline Manifest read_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot read manifest " + path);
    try {
        return manifest_from_json(json::parse(is));
    } catch (const json::parse_error& e) {
        throw FormatError(path + ": " + e.what());
    }
}

inline void write_manifest(const Manifest& m) {
    fs::create_directories(m.output_directory);
    std::ofstream os(manifest_path(m.output_directory));
    if (!os) throw FormatError("cannot write manifest in " + m.output_directory);
    os << to_json(m).dump(2) << "\n";
}

// Claims the output directory for `m` and writes the manifest before anything
// else. A directory that already holds the same experiment is reused: its
// outputs are cleared and created_at is kept, so a rerun reproduces it byte
// for byte. Anything else in the way is an error.
inline Manifest claim_output(Manifest m) {
    const fs::path dir(m.output_directory);
    if (fs::exists(dir)) {
        if (!fs::is_directory(dir)) throw ConfigError("output path is not a directory: " + dir.string());
        const auto mp = dir / kManifestName;
        if (fs::exists(mp)) {
            Manifest old = read_manifest(mp.string());
            Manifest a = old, b = m;
            a.created_at = b.created_at = "";
            if (to_json(a) != to_json(b))
                throw ConfigError("output directory " + dir.string() + " belongs to a different experiment");
            m.created_at = old.created_at;
            for (const auto& e : fs::directory_iterator(dir))
                if (e.path().filename() != kManifestName) fs::remove_all(e.path());
        } else if (!fs::is_empty(dir)) {
            throw ConfigError("output directory " + dir.string() + " is not empty and has no manifest");
        }
    }
    if (m.created_at.empty()) m.created_at = utc_now_iso8601();
    write_manifest(m);
    return m;
}

} // namespace cmarl::harness
