#pragma once

#include "sintro/error.hpp"

#include <fstream>
#include <string>
#include <vector>

namespace sintro::csv {

// Shortest representations that round-trip the value.
std::string fmt(double v);
std::string fmt(float v);

class Writer {
public:
    Writer(const std::string& path, const std::vector<std::string>& header);
    void row(const std::vector<std::string>& cells);

private:
    std::ofstream out_;
    std::size_t cols_;
};

// Comma-split rows including the header; fields are never quoted in files
// this project writes.
std::vector<std::vector<std::string>> read(const std::string& path);

} // namespace sintro::csv
