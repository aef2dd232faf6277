#pragma once

// Key-value run manifest written next to every output set.

#include <string>
#include <utility>
#include <vector>

namespace epipolicy {

struct RunManifest {
    std::vector<std::pair<std::string, std::string>> entries;   // insertion order kept

    void set(const std::string& key, const std::string& value);
    const std::string* get(const std::string& key) const;
};

inline constexpr const char* kToolVersion = "0.1.0";

// Writes "key = value" lines to path + ".tmp" and renames it over path.
// Newlines in values are escaped as \n.
void write_manifest_atomic(const std::string& path, const RunManifest& manifest);
RunManifest read_manifest(const std::string& path);

// Writes text to path through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace epipolicy
