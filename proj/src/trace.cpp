#include "argus/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "argus/error.hpp"

namespace argus {

using json = nlohmann::ordered_json;

const DeviceDescriptor* Trace::find_device(const std::string& id) const {
    for (const auto& d : devices)
        if (d.device_id == id) return &d;
    return nullptr;
}

bool Trace::has_labels() const {
    if (updates.empty()) return false;
    return std::all_of(updates.begin(), updates.end(),
                       [](const StatusUpdate& u) { return u.label.has_value(); });
}

std::int64_t Trace::day_index(TimestampMs t) const {
    if (updates.empty()) throw Error("day_index on empty trace");
    return tz.local_day(t) - tz.local_day(updates.front().timestamp);
}

std::int64_t Trace::span_days() const {
    if (updates.empty()) return 0;
    return day_index(updates.back().timestamp) + 1;
}

bool Trace::operator==(const Trace& other) const {
    return tz.name() == other.tz.name() && devices == other.devices &&
           updates == other.updates;
}

namespace {

json update_to_json(const StatusUpdate& u) {
    json rec;
    rec["rec"] = "update";
    rec["t"] = format_iso8601(u.timestamp);
    rec["id"] = u.device_id;
    if (std::holds_alternative<double>(u.state))
        rec["state"] = std::get<double>(u.state);
    else
        rec["state"] = std::get<std::string>(u.state);
    rec["origin"] = u.origin == Origin::Injected ? "injected" : "observed";
    if (u.label) rec["label"] = *u.label;
    if (!u.scenario.empty()) rec["scen"] = u.scenario;
    if (u.mapped_offset != 0.0) rec["noise"] = u.mapped_offset;
    return rec;
}

StatusUpdate update_from_json(const json& rec, int line_no) {
    auto fail = [&](const std::string& what) -> Error {
        return Error("line " + std::to_string(line_no) + ": " + what);
    };
    StatusUpdate u;
    try {
        u.timestamp = parse_iso8601(rec.at("t").get<std::string>());
        u.device_id = rec.at("id").get<std::string>();
        const auto& state = rec.at("state");
        if (state.is_number())
            u.state = state.get<double>();
        else if (state.is_string())
            u.state = state.get<std::string>();
        else
            throw fail("update state must be a string or a number");
        if (rec.contains("origin")) {
            const auto o = rec["origin"].get<std::string>();
            if (o == "observed")
                u.origin = Origin::Observed;
            else if (o == "injected")
                u.origin = Origin::Injected;
            else
                throw fail("unknown origin '" + o + "'");
        }
        if (rec.contains("label")) {
            const int label = rec["label"].get<int>();
            if (label != 0 && label != 1) throw fail("label must be 0 or 1");
            u.label = label;
        }
        if (rec.contains("scen")) u.scenario = rec["scen"].get<std::string>();
        if (rec.contains("noise")) u.mapped_offset = rec["noise"].get<double>();
    } catch (const json::exception& e) {
        throw fail(std::string("malformed update record: ") + e.what());
    }
    return u;
}

} // namespace

Trace parse_trace(std::istream& in) {
    Trace trace;
    std::unordered_map<std::string, DeviceKind> kinds;
    std::string line;
    int line_no = 0;
    bool saw_meta = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw Error("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
        }
        const std::string kind = rec.value("rec", "");
        if (kind == "meta") {
            if (rec.contains("tz")) trace.tz = Timezone::parse(rec["tz"].get<std::string>());
            const int version = rec.value("version", 1);
            if (version != 1)
                throw Error("line " + std::to_string(line_no) + ": unsupported trace version " +
                            std::to_string(version));
            saw_meta = true;
        } else if (kind == "device") {
            DeviceDescriptor d;
            try {
                d.device_id = rec.at("id").get<std::string>();
                const auto k = rec.at("kind").get<std::string>();
                if (k == "nominal")
                    d.kind = DeviceKind::Nominal;
                else if (k == "continuous")
                    d.kind = DeviceKind::Continuous;
                else
                    throw Error("line " + std::to_string(line_no) + ": unknown device kind '" + k + "'");
                d.display_name = rec.value("name", "");
            } catch (const json::exception& e) {
                throw Error("line " + std::to_string(line_no) + ": malformed device record: " + e.what());
            }
            if (d.device_id.empty())
                throw Error("line " + std::to_string(line_no) + ": empty device id");
            if (kinds.count(d.device_id))
                throw Error("line " + std::to_string(line_no) + ": duplicate device '" + d.device_id + "'");
            kinds.emplace(d.device_id, d.kind);
            trace.devices.push_back(std::move(d));
        } else if (kind == "update") {
            StatusUpdate u = update_from_json(rec, line_no);
            const auto it = kinds.find(u.device_id);
            if (it == kinds.end())
                throw Error("line " + std::to_string(line_no) + ": unknown device '" + u.device_id + "'");
            const bool numeric = std::holds_alternative<double>(u.state);
            if (numeric && it->second == DeviceKind::Nominal)
                throw Error("line " + std::to_string(line_no) + ": numeric state on nominal device '" +
                            u.device_id + "'");
            if (!numeric && it->second == DeviceKind::Continuous)
                throw Error("line " + std::to_string(line_no) + ": non-numeric state on continuous device '" +
                            u.device_id + "'");
            if (numeric && !std::isfinite(std::get<double>(u.state)))
                throw Error("line " + std::to_string(line_no) + ": non-finite state");
            trace.updates.push_back(std::move(u));
        } else {
            throw Error("line " + std::to_string(line_no) + ": unknown record type '" + kind + "'");
        }
    }
    (void)saw_meta;

    std::stable_sort(trace.updates.begin(), trace.updates.end(),
                     [](const StatusUpdate& a, const StatusUpdate& b) {
                         return a.timestamp < b.timestamp;
                     });
    return trace;
}

Trace parse_trace_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open trace file '" + path + "'");
    return parse_trace(in);
}

void write_trace(const Trace& trace, std::ostream& out) {
    json meta;
    meta["rec"] = "meta";
    meta["tz"] = trace.tz.name();
    meta["version"] = 1;
    out << meta.dump() << '\n';
    for (const auto& d : trace.devices) {
        json rec;
        rec["rec"] = "device";
        rec["id"] = d.device_id;
        rec["kind"] = d.kind == DeviceKind::Nominal ? "nominal" : "continuous";
        if (!d.display_name.empty()) rec["name"] = d.display_name;
        out << rec.dump() << '\n';
    }
    for (const auto& u : trace.updates) out << update_to_json(u).dump() << '\n';
}

void write_trace_file(const Trace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write trace file '" + path + "'");
    write_trace(trace, out);
}

std::string trace_to_string(const Trace& trace) {
    std::ostringstream out;
    write_trace(trace, out);
    return out.str();
}

DaySplit split_by_days(const Trace& trace, int train_days) {
    if (train_days < 1) throw Error("train_days must be >= 1");
    if (trace.updates.empty()) throw Error("cannot split an empty trace");
    if (trace.span_days() < train_days)
        throw Error("trace spans " + std::to_string(trace.span_days()) +
                    " days, need at least " + std::to_string(train_days));

    DaySplit split;
    split.train.tz = trace.tz;
    split.train.devices = trace.devices;
    split.rest.tz = trace.tz;
    split.rest.devices = trace.devices;
    const std::int64_t base = trace.tz.local_day(trace.updates.front().timestamp);
    for (const auto& u : trace.updates) {
        if (trace.tz.local_day(u.timestamp) - base < train_days)
            split.train.updates.push_back(u);
        else
            split.rest.updates.push_back(u);
    }
    return split;
}

std::vector<TraceIssue> validate_trace(const Trace& trace) {
    std::vector<TraceIssue> issues;
    std::unordered_map<std::string, DeviceKind> kinds;
    for (const auto& d : trace.devices) kinds.emplace(d.device_id, d.kind);

    const auto& ups = trace.updates;
    for (std::size_t j = 0; j < ups.size(); ++j) {
        for (std::size_t i = 0; i < j; ++i) {
            if (ups[i].timestamp > ups[j].timestamp)
                issues.push_back({IssueKind::Unsorted, j,
                                  "update " + std::to_string(j) + " precedes update " +
                                      std::to_string(i)});
        }
    }
    std::size_t labeled = 0;
    for (std::size_t i = 0; i < ups.size(); ++i) {
        const auto it = kinds.find(ups[i].device_id);
        if (it == kinds.end()) {
            issues.push_back({IssueKind::UnknownDevice, i,
                              "unknown device '" + ups[i].device_id + "'"});
            continue;
        }
        const bool numeric = std::holds_alternative<double>(ups[i].state);
        if (numeric != (it->second == DeviceKind::Continuous))
            issues.push_back({IssueKind::TypeMismatch, i,
                              "state type does not match device kind of '" +
                                  ups[i].device_id + "'"});
        if (ups[i].label) ++labeled;
    }
    if (labeled != 0 && labeled != ups.size())
        issues.push_back({IssueKind::LabelMismatch, 0,
                          "labels present on " + std::to_string(labeled) + " of " +
                              std::to_string(ups.size()) + " updates"});
    return issues;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

bool parse_number(const std::string& s, double* out) {
    if (s.empty()) return false;
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(v)) return false;
        *out = v;
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

} // namespace

Trace import_csv(std::istream& in, const AdapterOptions& options) {
    std::string header;
    if (!std::getline(in, header)) throw Error("adapter: empty input");
    const auto columns = split_csv_line(header);
    auto column_of = [&](const std::string& name) {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<long>(i);
        throw Error("adapter: missing column '" + name + "'");
    };
    const auto ei = column_of(options.entity_column);
    const auto si = column_of(options.state_column);
    const auto ti = column_of(options.time_column);

    std::vector<AdapterRecord> records;
    std::string line;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        const auto max_col = std::max({ei, si, ti});
        if (static_cast<long>(fields.size()) <= max_col)
            throw Error("adapter: line " + std::to_string(line_no) + ": too few columns");
        AdapterRecord rec{fields[ei], fields[si], fields[ti]};
        if (options.mapper && !options.mapper(rec)) continue;
        if (rec.entity_id.empty()) continue;
        records.push_back(std::move(rec));
    }

    // Kind inference: continuous iff every state parses as a number.
    std::unordered_map<std::string, bool> all_numeric;
    for (const auto& r : records) {
        double v;
        const bool num = parse_number(r.state, &v);
        auto [it, inserted] = all_numeric.emplace(r.entity_id, num);
        if (!inserted) it->second = it->second && num;
    }

    Trace trace;
    trace.tz = Timezone::parse(options.tz);
    std::vector<std::string> ids;
    ids.reserve(all_numeric.size());
    for (const auto& [id, _] : all_numeric) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    for (const auto& id : ids)
        trace.devices.push_back({id,
                                 all_numeric[id] ? DeviceKind::Continuous
                                                 : DeviceKind::Nominal,
                                 ""});

    for (const auto& r : records) {
        StatusUpdate u;
        u.timestamp = parse_iso8601(r.timestamp);
        u.device_id = r.entity_id;
        double v;
        if (all_numeric[r.entity_id] && parse_number(r.state, &v))
            u.state = v;
        else
            u.state = r.state;
        trace.updates.push_back(std::move(u));
    }
    std::stable_sort(trace.updates.begin(), trace.updates.end(),
                     [](const StatusUpdate& a, const StatusUpdate& b) {
                         return a.timestamp < b.timestamp;
                     });
    return trace;
}

} // namespace argus
