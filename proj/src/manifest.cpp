#include "epipolicy/manifest.hpp"

#include "epipolicy/csv.hpp"
#include "epipolicy/error.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace epipolicy {

namespace {

std::string escape(const std::string& v) {
    std::string out;
    for (char c : v) {
        if (c == '\n') out += "\\n";
        else if (c == '\\') out += "\\\\";
        else out += c;
    }
    return out;
}

std::string unescape(const std::string& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] == '\\' && i + 1 < v.size()) {
            out += v[i + 1] == 'n' ? '\n' : v[i + 1];
            ++i;
        } else {
            out += v[i];
        }
    }
    return out;
}

}  // namespace

void RunManifest::set(const std::string& key, const std::string& value) {
    for (auto& [k, v] : entries)
        if (k == key) {
            v = value;
            return;
        }
    entries.emplace_back(key, value);
}

const std::string* RunManifest::get(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return &v;
    return nullptr;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + tmp + "'");
        out << contents;
        out.flush();
        if (!out) throw IoError("write to '" + tmp + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw IoError("cannot move '" + tmp + "' to '" + path + "': " + ec.message());
    }
}

void write_manifest_atomic(const std::string& path, const RunManifest& manifest) {
    std::ostringstream s;
    for (const auto& [k, v] : manifest.entries) s << k << " = " << escape(v) << '\n';
    write_file_atomic(path, s.str());
}

RunManifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    RunManifest m;
    std::string line;
    while (csv::read_line(in, line)) {
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) continue;
        m.entries.emplace_back(line.substr(0, eq), unescape(line.substr(eq + 3)));
    }
    return m;
}

}  // namespace epipolicy
