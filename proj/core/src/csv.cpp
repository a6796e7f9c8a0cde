#include "sgdrop/csv.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

namespace sgdrop::csv {

std::string format_double(double value) {
    char buffer[64];
    auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return std::string(buffer, ptr);
}

std::vector<std::string> split_line(std::string_view line) {
    const char delimiter = line.find('\t') != std::string_view::npos ? '\t' : ',';
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto end = line.find(delimiter, start);
        auto field = line.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        while (!field.empty() && (field.front() == ' ' || field.front() == '"')) field.remove_prefix(1);
        while (!field.empty() && (field.back() == ' ' || field.back() == '"' || field.back() == '\r'))
            field.remove_suffix(1);
        fields.emplace_back(field);
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return fields;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        lines.push_back(std::move(line));
    }
    return lines;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

} // namespace sgdrop::csv
