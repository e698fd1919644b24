#ifndef MONOALIGN_CSV_HPP
#define MONOALIGN_CSV_HPP

#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace monoalign {

using CsvTable = std::vector<std::vector<std::string>>;

/// RFC 4180-style reader: comma separated, optional double-quoted fields,
/// LF or CRLF line ends, UTF-8 BOM skipped. Blank lines are ignored.
CsvTable parse_csv(std::string_view text);

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

}  // namespace monoalign

#endif  // MONOALIGN_CSV_HPP
