#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rung {

// Malformed input file; the message names the file, line and reason.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::filesystem::path& file, std::size_t line, const std::string& reason);

    const std::filesystem::path& file() const { return file_; }
    std::size_t line() const { return line_; }

private:
    std::filesystem::path file_;
    std::size_t line_;
};

// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

std::vector<std::string_view> split_fields(std::string_view line);

// Line-oriented CSV reader. The first line is the header.
class CsvReader {
public:
    explicit CsvReader(const std::filesystem::path& path);

    const std::vector<std::string>& header() const { return header_; }
    // Fills `fields` with the next non-empty row; false at end of file.
    bool next(std::vector<std::string>& fields);
    std::size_t line() const { return line_; }
    const std::filesystem::path& path() const { return path_; }

    [[noreturn]] void fail(const std::string& reason) const { throw ParseError(path_, line_, reason); }

    long long to_int(const std::string& field) const;
    double to_double(const std::string& field) const;

private:
    std::filesystem::path path_;
    std::ifstream in_;
    std::vector<std::string> header_;
    std::size_t line_ = 0;
};

class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path);

    CsvWriter& operator<<(std::string_view s);
    CsvWriter& operator<<(const std::string& s) { return *this << std::string_view(s); }
    CsvWriter& operator<<(const char* s) { return *this << std::string_view(s); }
    CsvWriter& operator<<(double x);
    CsvWriter& operator<<(std::int64_t x);
    CsvWriter& operator<<(std::uint64_t x);
    CsvWriter& operator<<(int x) { return *this << static_cast<std::int64_t>(x); }
    CsvWriter& operator<<(unsigned x) { return *this << static_cast<std::uint64_t>(x); }
    void end_row();
    void close();

    template <typename... Ts>
    void row(const Ts&... values) {
        (*this << ... << values);
        end_row();
    }

private:
    void separate();

    std::filesystem::path path_;
    std::ofstream out_;
    bool first_ = true;
};

}  // namespace rung
