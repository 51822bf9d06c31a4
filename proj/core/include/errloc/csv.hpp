#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace errloc::csv {

/// Parses RFC-4180 records: quoted fields, doubled quotes, CRLF or LF line
/// ends. A trailing newline does not produce an empty record.
std::vector<std::vector<std::string>> read_records(std::istream& in);

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);
void write_record(std::ostream& out, const std::vector<std::string>& fields);

std::string_view trim(std::string_view s) noexcept;

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

}  // namespace errloc::csv
