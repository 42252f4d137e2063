#pragma once

#include <string>

namespace epicast {

// Calendar days as a serial count (days since 1970-01-01). Enough for the
// date bookkeeping here: parsing JHU "M/D/YY" headers, ISO output, day steps.

int days_from_civil(int y, int m, int d);
void civil_from_days(int serial, int& y, int& m, int& d);

// "1/22/20" -> serial (two-digit years are 2000-based). Throws on malformed input.
int parse_mdy(const std::string& s);

// "2020-01-22" -> serial. Throws on malformed input.
int parse_iso(const std::string& s);

std::string format_iso(int serial);

}  // namespace epicast
