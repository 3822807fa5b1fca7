#include "sintro/csv.hpp"

#include <cstdio>

namespace sintro::csv {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // prefer the shorter form when it round-trips
    char probe[40];
    std::snprintf(probe, sizeof(probe), "%.15g", v);
    double back;
    std::sscanf(probe, "%lf", &back);
    return back == v ? probe : buf;
}

std::string fmt(float v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", double(v));
    char probe[32];
    std::snprintf(probe, sizeof(probe), "%.6g", double(v));
    float back;
    std::sscanf(probe, "%f", &back);
    return back == v ? probe : buf;
}

Writer::Writer(const std::string& path, const std::vector<std::string>& header)
    : out_(path), cols_(header.size()) {
    if (!out_) throw Error("cannot write csv: " + path);
    row(header);
}

void Writer::row(const std::vector<std::string>& cells) {
    if (cells.size() != cols_)
        throw Error("csv row has " + std::to_string(cells.size()) + " cells, expected " +
                    std::to_string(cols_));
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
    if (!out_) throw Error("csv write failed");
}

std::vector<std::vector<std::string>> read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open csv: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t pos = line.find(',', start);
            if (pos == std::string::npos) {
                cells.push_back(line.substr(start));
                break;
            }
            cells.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

} // namespace sintro::csv
