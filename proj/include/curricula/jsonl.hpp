#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "curricula/errors.hpp"

namespace curricula {

/// Reads a whole file; IoError if it cannot be opened.
inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return data;
}

/// Writes a file atomically (temp file + rename).
inline void write_file_atomic(const std::filesystem::path& path, const std::string& data) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << data;
        out.flush();
        if (!out) throw IoError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

/// Parses every non-blank line of a JSON Lines file. Strict: a malformed line
/// is an error here (these are artifact-written files, not model output).
inline std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<nlohmann::json> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        nlohmann::json parsed = nlohmann::json::parse(line, nullptr, false);
        if (parsed.is_discarded()) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed JSON line");
        }
        out.push_back(std::move(parsed));
    }
    return out;
}

inline void write_jsonl(const std::filesystem::path& path,
                        const std::vector<nlohmann::json>& records) {
    std::string data;
    for (const auto& record : records) {
        data += record.dump();
        data += '\n';
    }
    write_file_atomic(path, data);
}

/// Truncates a text file to its first `n_lines` complete lines. Used by the
/// pipeline to discard torn tails when resuming.
inline void truncate_to_lines(const std::filesystem::path& path, size_t n_lines) {
    if (!std::filesystem::exists(path)) return;
    std::ifstream in(path, std::ios::binary);
    std::string kept;
    std::string line;
    size_t count = 0;
    while (count < n_lines && std::getline(in, line)) {
        kept += line;
        kept += '\n';
        ++count;
    }
    in.close();
    write_file_atomic(path, kept);
}

inline size_t count_lines(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return 0;
    std::ifstream in(path, std::ios::binary);
    std::string line;
    size_t count = 0;
    while (std::getline(in, line)) ++count;
    return count;
}

}  // namespace curricula
