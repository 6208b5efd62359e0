#pragma once

#include <cstdint>
#include <string>

namespace argus {

// Milliseconds since the Unix epoch, UTC.
using TimestampMs = std::int64_t;

constexpr std::int64_t kMsPerDay = 86'400'000;

// Parses "2024-01-01T08:00:00.000Z" (sub-second digits optional, trailing
// offset "+HH:MM" accepted) into epoch milliseconds. Throws Error on
// malformed input.
TimestampMs parse_iso8601(const std::string& text);

// Formats epoch milliseconds as "YYYY-MM-DDTHH:MM:SS.mmmZ".
std::string format_iso8601(TimestampMs t);

// Day-bucketing timezone. Supports "UTC"/"Z", fixed offsets ("+02:00",
// "-05:30", "UTC+2"), and a small table of IANA names with EU/US daylight
// saving rules, enough to bucket events into local calendar days.
class Timezone {
public:
    Timezone() = default; // UTC
    static Timezone parse(const std::string& spec);

    // Offset from UTC in minutes at the given instant.
    int offset_minutes(TimestampMs at) const;

    // Local calendar day number (days since epoch in local time).
    std::int64_t local_day(TimestampMs at) const;

    // Epoch ms of local midnight starting the given local day number.
    TimestampMs day_start(std::int64_t local_day_number) const;

    const std::string& name() const { return name_; }

private:
    enum class Rule { Fixed, EuDst, UsDst };
    std::string name_ = "UTC";
    int base_offset_min_ = 0; // standard (winter) offset
    Rule rule_ = Rule::Fixed;
};

} // namespace argus
