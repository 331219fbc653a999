#pragma once
#include "errors.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace floq {

// 17 significant digits: round-trips every double exactly
inline std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// write via a temporary in the same directory, then rename into place
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path dir = path.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw NumericalError("atomic_write: cannot open " + tmp.string());
        out << content;
        if (!out.flush()) throw NumericalError("atomic_write: short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

struct CsvWriter {
    std::ostringstream out;

    explicit CsvWriter(const std::vector<std::string>& header) {
        for (std::size_t i = 0; i < header.size(); ++i)
            out << (i ? "," : "") << header[i];
        out << "\n";
    }
    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i)
            out << (i ? "," : "") << g17(values[i]);
        out << "\n";
    }
    std::string str() const { return out.str(); }
};

} // namespace floq
