#include "argus/time.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>

#include "argus/error.hpp"

namespace argus {
namespace {

// Civil-calendar conversion, Howard Hinnant's algorithms.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yy + (m <= 2));
}

// Day of week, 0 = Sunday.
int weekday_from_days(std::int64_t z) {
    return static_cast<int>(z >= -4 ? (z + 4) % 7 : (z + 5) % 7 + 6);
}

// Last given weekday of a month, as days-from-epoch.
std::int64_t last_weekday_of(int year, unsigned month, int weekday) {
    unsigned last_dom = 31;
    if (month == 4 || month == 6 || month == 9 || month == 11) last_dom = 30;
    if (month == 2) {
        const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
        last_dom = leap ? 29 : 28;
    }
    std::int64_t z = days_from_civil(year, month, last_dom);
    const int wd = weekday_from_days(z);
    return z - ((wd - weekday + 7) % 7);
}

// Nth given weekday of a month (n is 1-based), as days-from-epoch.
std::int64_t nth_weekday_of(int year, unsigned month, int weekday, int n) {
    std::int64_t z = days_from_civil(year, month, 1);
    const int wd = weekday_from_days(z);
    return z + ((weekday - wd + 7) % 7) + 7 * (n - 1);
}

int parse_int(const std::string& s, size_t pos, size_t len) {
    int v = 0;
    for (size_t i = pos; i < pos + len; ++i) {
        if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i])))
            throw Error("bad timestamp: '" + s + "'");
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

} // namespace

TimestampMs parse_iso8601(const std::string& text) {
    // YYYY-MM-DDTHH:MM:SS[.fff...][Z|+HH:MM|-HH:MM]
    if (text.size() < 19 || text[4] != '-' || text[7] != '-' ||
        (text[10] != 'T' && text[10] != ' ') || text[13] != ':' || text[16] != ':')
        throw Error("bad timestamp: '" + text + "'");
    const int year = parse_int(text, 0, 4);
    const int month = parse_int(text, 5, 2);
    const int day = parse_int(text, 8, 2);
    const int hour = parse_int(text, 11, 2);
    const int minute = parse_int(text, 14, 2);
    const int second = parse_int(text, 17, 2);
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 ||
        minute > 59 || second > 60)
        throw Error("bad timestamp: '" + text + "'");

    size_t pos = 19;
    int millis = 0;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        size_t digits = 0;
        int frac = 0;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            if (digits < 3) frac = frac * 10 + (text[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0) throw Error("bad timestamp: '" + text + "'");
        while (digits < 3) {
            frac *= 10;
            ++digits;
        }
        millis = frac;
    }

    int offset_min = 0;
    if (pos < text.size()) {
        const char c = text[pos];
        if (c == 'Z' && pos + 1 == text.size()) {
            offset_min = 0;
        } else if ((c == '+' || c == '-') && pos + 6 == text.size() && text[pos + 3] == ':') {
            const int oh = parse_int(text, pos + 1, 2);
            const int om = parse_int(text, pos + 4, 2);
            offset_min = (oh * 60 + om) * (c == '+' ? 1 : -1);
        } else {
            throw Error("bad timestamp: '" + text + "'");
        }
    }

    const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month),
                                              static_cast<unsigned>(day));
    std::int64_t ms = days * kMsPerDay +
                      (static_cast<std::int64_t>(hour) * 3600 +
                       minute * 60 + second) * 1000 + millis;
    ms -= static_cast<std::int64_t>(offset_min) * 60'000;
    return ms;
}

std::string format_iso8601(TimestampMs t) {
    std::int64_t days = t / kMsPerDay;
    std::int64_t rem = t % kMsPerDay;
    if (rem < 0) {
        rem += kMsPerDay;
        --days;
    }
    int y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    const int ms = static_cast<int>(rem % 1000);
    const int sec = static_cast<int>(rem / 1000 % 60);
    const int min = static_cast<int>(rem / 60'000 % 60);
    const int hour = static_cast<int>(rem / 3'600'000);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                  y, m, d, hour, min, sec, ms);
    return buf;
}

Timezone Timezone::parse(const std::string& spec) {
    Timezone tz;
    tz.name_ = spec;
    if (spec.empty() || spec == "UTC" || spec == "Z" || spec == "Etc/UTC") {
        tz.name_ = "UTC";
        return tz;
    }

    auto fixed = [&](int minutes) {
        tz.base_offset_min_ = minutes;
        tz.rule_ = Rule::Fixed;
        return tz;
    };

    // Fixed-offset forms: "+HH:MM", "-HH:MM", "UTC+H", "UTC-HH:MM".
    std::string s = spec;
    if (s.rfind("UTC", 0) == 0) s = s.substr(3);
    if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
        const int sign = s[0] == '+' ? 1 : -1;
        s = s.substr(1);
        int hours = 0, minutes = 0;
        const auto colon = s.find(':');
        try {
            if (colon == std::string::npos) {
                hours = std::stoi(s);
            } else {
                hours = std::stoi(s.substr(0, colon));
                minutes = std::stoi(s.substr(colon + 1));
            }
        } catch (const std::exception&) {
            throw Error("unsupported timezone: '" + spec + "'");
        }
        if (hours > 14 || minutes > 59) throw Error("unsupported timezone: '" + spec + "'");
        return fixed(sign * (hours * 60 + minutes));
    }

    struct Zone {
        const char* name;
        int std_offset_min;
        Rule rule;
    };
    static constexpr std::array<Zone, 12> kZones{{
        {"Europe/Berlin", 60, Rule::EuDst},
        {"Europe/Paris", 60, Rule::EuDst},
        {"Europe/Vienna", 60, Rule::EuDst},
        {"Europe/Amsterdam", 60, Rule::EuDst},
        {"Europe/Madrid", 60, Rule::EuDst},
        {"Europe/Rome", 60, Rule::EuDst},
        {"Europe/London", 0, Rule::EuDst},
        {"Europe/Lisbon", 0, Rule::EuDst},
        {"America/New_York", -300, Rule::UsDst},
        {"America/Chicago", -360, Rule::UsDst},
        {"America/Denver", -420, Rule::UsDst},
        {"America/Los_Angeles", -480, Rule::UsDst},
    }};
    for (const auto& z : kZones) {
        if (spec == z.name) {
            tz.base_offset_min_ = z.std_offset_min;
            tz.rule_ = z.rule;
            return tz;
        }
    }
    throw Error("unsupported timezone: '" + spec + "'");
}

int Timezone::offset_minutes(TimestampMs at) const {
    if (rule_ == Rule::Fixed) return base_offset_min_;

    std::int64_t days = at / kMsPerDay;
    if (at % kMsPerDay < 0) --days;
    int y;
    unsigned m, d;
    civil_from_days(days, y, m, d);

    std::int64_t dst_start_ms, dst_end_ms;
    if (rule_ == Rule::EuDst) {
        // Last Sunday of March 01:00 UTC to last Sunday of October 01:00 UTC.
        dst_start_ms = last_weekday_of(y, 3, 0) * kMsPerDay + 3'600'000;
        dst_end_ms = last_weekday_of(y, 10, 0) * kMsPerDay + 3'600'000;
    } else {
        // US: second Sunday of March 02:00 local std to first Sunday of
        // November 02:00 local daylight.
        dst_start_ms = nth_weekday_of(y, 3, 0, 2) * kMsPerDay +
                       7'200'000 - static_cast<std::int64_t>(base_offset_min_) * 60'000;
        dst_end_ms = nth_weekday_of(y, 11, 0, 1) * kMsPerDay +
                     7'200'000 - static_cast<std::int64_t>(base_offset_min_ + 60) * 60'000;
    }
    const bool dst = at >= dst_start_ms && at < dst_end_ms;
    return base_offset_min_ + (dst ? 60 : 0);
}

std::int64_t Timezone::local_day(TimestampMs at) const {
    const std::int64_t local =
        at + static_cast<std::int64_t>(offset_minutes(at)) * 60'000;
    std::int64_t day = local / kMsPerDay;
    if (local % kMsPerDay < 0) --day;
    return day;
}

TimestampMs Timezone::day_start(std::int64_t local_day_number) const {
    // Midnight local = day boundary; resolve the offset at an instant inside
    // the day to sidestep the DST transition hour.
    const TimestampMs approx = local_day_number * kMsPerDay;
    const int off = offset_minutes(approx + kMsPerDay / 2);
    return approx - static_cast<std::int64_t>(off) * 60'000;
}

} // namespace argus
