#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "argus/time.hpp"

namespace argus {

enum class DeviceKind { Nominal, Continuous };

enum class Origin { Observed, Injected };

struct DeviceDescriptor {
    std::string device_id;
    DeviceKind kind = DeviceKind::Nominal;
    std::string display_name; // optional

    bool operator==(const DeviceDescriptor&) const = default;
};

// Raw state carried by an update: a label for nominal devices, a number for
// continuous ones.
using RawState = std::variant<std::string, double>;

struct StatusUpdate {
    TimestampMs timestamp = 0;
    std::string device_id;
    RawState state;
    Origin origin = Origin::Observed;
    std::optional<int> label;      // 0 benign, 1 attack; absent when unlabeled
    std::string scenario;          // attack scenario tag, empty when none
    double mapped_offset = 0.0;    // additive perturbation in mapped domain

    bool operator==(const StatusUpdate&) const = default;
};

struct Trace {
    Timezone tz;
    std::vector<DeviceDescriptor> devices;
    std::vector<StatusUpdate> updates;

    const DeviceDescriptor* find_device(const std::string& id) const;
    bool has_labels() const; // true iff every update carries a label

    // Local calendar day index of an update relative to the trace's first
    // update (day 0 = the day the trace starts).
    std::int64_t day_index(TimestampMs t) const;

    // Number of calendar days touched by the trace (0 for an empty trace).
    std::int64_t span_days() const;

    bool operator==(const Trace& other) const;
};

// Canonical format: UTF-8 JSON lines, one record per line. Header carries a
// meta record and one device record per catalog entry, followed by updates
// in time order.
Trace parse_trace(std::istream& in);
Trace parse_trace_file(const std::string& path);
void write_trace(const Trace& trace, std::ostream& out);
void write_trace_file(const Trace& trace, const std::string& path);
std::string trace_to_string(const Trace& trace);

struct DaySplit {
    Trace train;
    Trace rest;
};

// First `train_days` local calendar days go to .train, the remainder to
// .rest. Throws if the trace is empty or spans fewer than train_days days.
DaySplit split_by_days(const Trace& trace, int train_days);

enum class IssueKind { Unsorted, UnknownDevice, TypeMismatch, LabelMismatch };

struct TraceIssue {
    IssueKind kind;
    std::size_t index; // offending update index
    std::string message;
};

// Reports invariant violations without mutating the input; empty iff valid.
std::vector<TraceIssue> validate_trace(const Trace& trace);

// Adapter for external event logs (CSV with a header row). Rows are mapped
// to updates through a pluggable record mapper; the default mapper reads
// Home Assistant style exports (entity_id, state, last_changed). Device
// kinds are inferred: a device whose every state parses as a number is
// continuous.
struct AdapterRecord {
    std::string entity_id;
    std::string state;
    std::string timestamp;
};

struct AdapterOptions {
    std::string entity_column = "entity_id";
    std::string state_column = "state";
    std::string time_column = "last_changed";
    std::string tz = "UTC";
    // Return false to drop the record; may rewrite fields in place.
    std::function<bool(AdapterRecord&)> mapper;
};

Trace import_csv(std::istream& in, const AdapterOptions& options);

} // namespace argus
