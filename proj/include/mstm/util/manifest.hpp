#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "mstm/core/bytes.hpp"

namespace mstm {

inline constexpr const char* kToolVersion = "0.1.0";

/// Provenance record written beside every artifact. Contents are pure
/// functions of (inputs, config, seed) so re-runs stay byte-identical;
/// wall-clock timings go to stderr instead.
struct RunManifest {
    std::string command;
    std::string config_hash = "-";
    std::string dataset_hash = "-";
    std::string checkpoint_id = "-";
    std::uint64_t seed = 0;

    void write(const std::filesystem::path& path) const {
        std::ofstream os(path, std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write manifest: " + path.string());
        os << "command = " << command << "\n";
        os << "config_hash = " << config_hash << "\n";
        os << "dataset_hash = " << dataset_hash << "\n";
        os << "checkpoint_id = " << checkpoint_id << "\n";
        os << "seed = " << seed << "\n";
        os << "version = " << kToolVersion << "\n";
    }
};

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// FNV-1a fingerprint of a file, rendered as hex.
inline std::string file_fingerprint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for hashing: " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (is.read(buf, sizeof buf) || is.gcount() > 0)
        h = fnv1a64(buf, static_cast<std::size_t>(is.gcount()), h);
    return hex64(h);
}

}  // namespace mstm
