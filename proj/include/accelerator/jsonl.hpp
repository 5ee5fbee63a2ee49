#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <string>

#include "accelerator/errors.hpp"

namespace accel {

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    return in;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

/// Calls fn(line_number, line) for every non-empty line; numbering is 1-based.
template <typename Fn>
void for_each_jsonl_line(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        fn(line_no, line);
    }
}

}  // namespace accel
