#include "rung/csv.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

namespace rung {

ParseError::ParseError(const std::filesystem::path& file, std::size_t line, const std::string& reason)
    : std::runtime_error(file.string() + ":" + std::to_string(line) + ": " + reason),
      file_(file),
      line_(line) {}

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        std::string_view f = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
        while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
        out.push_back(f);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

CsvReader::CsvReader(const std::filesystem::path& path) : path_(path), in_(path) {
    if (!in_) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::string> h;
    if (!next(h)) throw ParseError(path_, line_, "missing header");
    header_ = std::move(h);
}

bool CsvReader::next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        if (line_ == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        fields.clear();
        for (auto f : split_fields(line)) fields.emplace_back(f);
        return true;
    }
    return false;
}

long long CsvReader::to_int(const std::string& field) const {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) fail("expected an integer, got '" + field + "'");
    return v;
}

double CsvReader::to_double(const std::string& field) const {
    double v = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) fail("expected a number, got '" + field + "'");
    if (!std::isfinite(v)) fail("non-finite value '" + field + "'");
    return v;
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
}

void CsvWriter::separate() {
    if (!first_) out_ << ',';
    first_ = false;
}

CsvWriter& CsvWriter::operator<<(std::string_view s) {
    separate();
    out_ << s;
    return *this;
}

CsvWriter& CsvWriter::operator<<(double x) {
    separate();
    out_ << format_double(x);
    return *this;
}

CsvWriter& CsvWriter::operator<<(std::int64_t x) {
    separate();
    out_ << x;
    return *this;
}

CsvWriter& CsvWriter::operator<<(std::uint64_t x) {
    separate();
    out_ << x;
    return *this;
}

void CsvWriter::end_row() {
    out_ << '\n';
    first_ = true;
}

void CsvWriter::close() {
    out_.flush();
    if (!out_) throw std::runtime_error("write failed for " + path_.string());
    out_.close();
}

}  // namespace rung
