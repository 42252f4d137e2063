#include "epicast/dates.hpp"

#include <cstdio>
#include <stdexcept>

namespace epicast {

// Howard Hinnant's civil calendar algorithms.
int days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int>(doe) - 719468;
}

void civil_from_days(int serial, int& y, int& m, int& d) {
    serial += 719468;
    const int era = (serial >= 0 ? serial : serial - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(serial - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<int>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y += m <= 2;
}

int parse_mdy(const std::string& s) {
    int m = 0, d = 0, y = 0;
    char extra = 0;
    if (std::sscanf(s.c_str(), "%d/%d/%d%c", &m, &d, &y, &extra) != 3)
        throw std::runtime_error("unparseable M/D/YY date: '" + s + "'");
    if (y < 100) y += 2000;
    if (m < 1 || m > 12 || d < 1 || d > 31)
        throw std::runtime_error("out-of-range M/D/YY date: '" + s + "'");
    return days_from_civil(y, m, d);
}

int parse_iso(const std::string& s) {
    int y = 0, m = 0, d = 0;
    char extra = 0;
    if (std::sscanf(s.c_str(), "%d-%d-%d%c", &y, &m, &d, &extra) != 3)
        throw std::runtime_error("unparseable ISO date: '" + s + "'");
    if (m < 1 || m > 12 || d < 1 || d > 31)
        throw std::runtime_error("out-of-range ISO date: '" + s + "'");
    return days_from_civil(y, m, d);
}

std::string format_iso(int serial) {
    int y, m, d;
    civil_from_days(serial, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

}  // namespace epicast
