#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace attentrack::detail {

// Minimal RFC 4180 reader: quoted fields may contain commas, quotes ("") and newlines.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    // Reads the next row into `fields`; false at end of input. `line()` is the
    // 1-based physical line the row started on.
    bool next(std::vector<std::string>& fields);
    std::size_t line() const noexcept { return row_line_; }

private:
    std::istream& in_;
    std::size_t next_line_ = 1;
    std::size_t row_line_ = 0;
};

void append_csv_field(std::string& out, std::string_view value);

std::vector<std::string> split(std::string_view s, char sep);

}  // namespace attentrack::detail
