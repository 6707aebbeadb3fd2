#pragma once

// Run manifests: resolved configuration, CRC-32 of every output file and
// wall-clock timings, stored as manifest.json next to the outputs.

#include <boost/crc.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "oai/run/config.hpp"

namespace oai::run {

inline constexpr const char* kToolName = "oaiq";
inline constexpr const char* kToolVersion = "1.0.0";

struct FileEntry {
    std::string path; ///< relative to the output directory
    std::uint32_t crc32 = 0;
    std::uintmax_t bytes = 0;
};

struct RunTiming {
    std::size_t index = 0;
    double seconds = 0.0;
};

struct RunManifest {
    std::string tool = kToolName;
    std::string version = kToolVersion;
    std::string command;
    Settings config;
    std::vector<FileEntry> files;
    std::vector<RunTiming> runs;
    double total_seconds = 0.0;
};

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t crc32_of(const std::string& bytes)
{
    boost::crc_32_type crc;
    crc.process_bytes(bytes.data(), bytes.size());
    return crc.checksum();
}

inline FileEntry file_entry(const std::filesystem::path& dir, const std::string& rel)
{
    const std::string bytes = read_file(dir / rel);
    return {rel, crc32_of(bytes), bytes.size()};
}

inline nlohmann::json to_json(const RunManifest& m)
{
    nlohmann::json j;
    j["tool"] = m.tool;
    j["version"] = m.version;
    j["command"] = m.command;
    j["config"] = nlohmann::json::object();
    for (const auto& [k, v] : m.config) j["config"][k] = v;
    j["config_ini"] = to_ini(m.config);
    j["files"] = nlohmann::json::array();
    for (const auto& f : m.files) j["files"].push_back({{"path", f.path}, {"crc32", f.crc32}, {"bytes", f.bytes}});
    j["timings"]["total_seconds"] = m.total_seconds;
    j["timings"]["runs"] = nlohmann::json::array();
    for (const auto& r : m.runs) j["timings"]["runs"].push_back({{"index", r.index}, {"seconds", r.seconds}});
    return j;
}

inline RunManifest manifest_from_json(const nlohmann::json& j)
{
    try {
        RunManifest m;
        m.tool = j.at("tool").get<std::string>();
        m.version = j.at("version").get<std::string>();
        m.command = j.at("command").get<std::string>();
        for (const auto& [k, v] : j.at("config").items()) m.config[k] = v.get<std::string>();
        for (const auto& f : j.at("files"))
            m.files.push_back({f.at("path").get<std::string>(), f.at("crc32").get<std::uint32_t>(),
                               f.at("bytes").get<std::uintmax_t>()});
        const auto& t = j.at("timings");
        m.total_seconds = t.at("total_seconds").get<double>();
        for (const auto& r : t.at("runs")) m.runs.push_back({r.at("index").get<std::size_t>(), r.at("seconds").get<double>()});
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed manifest: ") + e.what());
    }
}

inline RunManifest read_manifest(const std::filesystem::path& path)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("malformed manifest " + path.string() + ": " + e.what());
    }
    return manifest_from_json(j);
}

inline void write_manifest(const std::filesystem::path& path, const RunManifest& m)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << to_json(m).dump(2) << '\n';
}

/// Files whose size or checksum no longer match the manifest.
inline std::vector<std::string> verify_manifest(const std::filesystem::path& dir, const RunManifest& m)
{
    std::vector<std::string> bad;
    for (const auto& f : m.files) {
        std::error_code ec;
        if (!std::filesystem::exists(dir / f.path, ec)) {
            bad.push_back(f.path + ": missing");
            continue;
        }
        const auto now = file_entry(dir, f.path);
        if (now.crc32 != f.crc32 || now.bytes != f.bytes) bad.push_back(f.path + ": checksum mismatch");
    }
    return bad;
}

/// Reads an INI file into flat settings.  A manifest.json from a previous run
/// is also accepted; its resolved configuration is replayed.
inline Settings read_settings_file(const std::filesystem::path& path)
{
    if (path.extension() == ".json") return read_manifest(path).config;
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    return parse_settings(in);
}

} // namespace oai::run
