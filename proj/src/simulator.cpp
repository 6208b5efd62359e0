#include "argus/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "argus/error.hpp"
#include "argus/rng.hpp"

namespace argus {

using json = nlohmann::ordered_json;

namespace {

constexpr std::int64_t kSecond = 1000;
constexpr std::int64_t kMinute = 60 * kSecond;

// Fixed stream ids keep every random process independent of the others'
// draw counts, so a roster change does not reshuffle unrelated devices.
enum Stream : std::uint64_t {
    kSchedule = 1,
    kMotion = 2,
    kTemperature = 3,
    kHumidity = 4,
    kBrightness = 5,
};

Rng stream_rng(std::uint64_t seed, std::int64_t day, std::uint64_t stream) {
    return Rng(seed ^ (0x9e3779b97f4a7c15ULL *
                       (static_cast<std::uint64_t>(day) * 16 + stream + 1)));
}

double round_to(double v, double step) { return std::round(v / step) * step; }

struct PendingEvent {
    TimestampMs t;
    std::string device;
    RawState state;
};

} // namespace

std::vector<AttackCategory> attack_categories(AttackKind kind) {
    using C = AttackCategory;
    switch (kind) {
    case AttackKind::DoorOpenWhileAbsent:
        return {C::EventInterception, C::CommandSpoofing, C::CommandInterception};
    case AttackKind::LightsOnWhileAbsent:
        return {C::EventSpoofing, C::CommandSpoofing};
    case AttackKind::MovementWhileAbsent:
        return {C::EventSpoofing};
    case AttackKind::CameraOffWhileAbsent:
        return {C::EventSpoofing, C::CommandSpoofing};
    case AttackKind::LightFlickering:
        return {C::CommandSpoofing};
    case AttackKind::HeatingOnWhileWindowsOpen:
        return {C::EventSpoofing, C::EventInterception, C::CommandInterception};
    case AttackKind::LightsOnDuringNight:
        return {C::CommandSpoofing};
    case AttackKind::FakeFireClosedWindows:
    case AttackKind::FakeFireOpenWindows:
        return {C::EventSpoofing};
    }
    throw Error("unknown attack kind");
}

std::string attack_slug(AttackKind kind) {
    switch (kind) {
    case AttackKind::DoorOpenWhileAbsent: return "door_open_absent";
    case AttackKind::LightsOnWhileAbsent: return "lights_on_absent";
    case AttackKind::MovementWhileAbsent: return "movement_absent";
    case AttackKind::CameraOffWhileAbsent: return "camera_off_absent";
    case AttackKind::LightFlickering: return "light_flicker";
    case AttackKind::HeatingOnWhileWindowsOpen: return "heating_open_windows";
    case AttackKind::LightsOnDuringNight: return "lights_on_night";
    case AttackKind::FakeFireClosedWindows: return "fake_fire_closed_windows";
    case AttackKind::FakeFireOpenWindows: return "fake_fire_open_windows";
    }
    throw Error("unknown attack kind");
}

std::optional<AttackKind> attack_kind_from_slug(const std::string& slug) {
    static const std::map<std::string, AttackKind> kMap = {
        {"door_open_absent", AttackKind::DoorOpenWhileAbsent},
        {"lights_on_absent", AttackKind::LightsOnWhileAbsent},
        {"movement_absent", AttackKind::MovementWhileAbsent},
        {"camera_off_absent", AttackKind::CameraOffWhileAbsent},
        {"light_flicker", AttackKind::LightFlickering},
        {"heating_open_windows", AttackKind::HeatingOnWhileWindowsOpen},
        {"lights_on_night", AttackKind::LightsOnDuringNight},
        {"fake_fire_closed_windows", AttackKind::FakeFireClosedWindows},
        {"fake_fire_open_windows", AttackKind::FakeFireOpenWindows},
    };
    const auto it = kMap.find(slug);
    if (it == kMap.end()) return std::nullopt;
    return it->second;
}

HomeProfile HomeProfile::from_json(const std::string& text) {
    HomeProfile p;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string("profile: invalid JSON: ") + e.what());
    }
    p.tz = j.value("tz", p.tz);
    p.start_day = j.value("start_day", p.start_day);
    if (j.contains("schedule")) {
        const auto& s = j["schedule"];
        p.schedule.wake_min = s.value("wake_min", p.schedule.wake_min);
        p.schedule.leave_min = s.value("leave_min", p.schedule.leave_min);
        p.schedule.return_min = s.value("return_min", p.schedule.return_min);
        p.schedule.sleep_min = s.value("sleep_min", p.schedule.sleep_min);
        p.schedule.jitter_min = s.value("jitter_min", p.schedule.jitter_min);
    }
    p.temperature_cadence_s = j.value("temperature_cadence_s", p.temperature_cadence_s);
    p.humidity_cadence_s = j.value("humidity_cadence_s", p.humidity_cadence_s);
    p.brightness_cadence_s = j.value("brightness_cadence_s", p.brightness_cadence_s);
    p.temperature_noise = j.value("temperature_noise", p.temperature_noise);
    p.humidity_noise = j.value("humidity_noise", p.humidity_noise);
    p.brightness_noise = j.value("brightness_noise", p.brightness_noise);
    p.sunrise_min = j.value("sunrise_min", p.sunrise_min);
    p.sunset_min = j.value("sunset_min", p.sunset_min);
    p.rule_latency_ms = j.value("rule_latency_ms", p.rule_latency_ms);
    p.rule_lights_off_when_absent = j.value("rule_lights_off_when_absent", true);
    p.rule_camera_on_when_absent = j.value("rule_camera_on_when_absent", true);
    p.rule_heater_off_when_window_open = j.value("rule_heater_off_when_window_open", true);
    p.rule_lights_off_at_night = j.value("rule_lights_off_at_night", true);
    p.disabled_devices = j.value("disabled_devices", std::vector<std::string>{});
    p.seed = j.value("seed", p.seed);
    return p;
}

std::string HomeProfile::to_json() const {
    json j;
    j["tz"] = tz;
    j["start_day"] = start_day;
    j["schedule"] = {{"wake_min", schedule.wake_min},
                     {"leave_min", schedule.leave_min},
                     {"return_min", schedule.return_min},
                     {"sleep_min", schedule.sleep_min},
                     {"jitter_min", schedule.jitter_min}};
    j["temperature_cadence_s"] = temperature_cadence_s;
    j["humidity_cadence_s"] = humidity_cadence_s;
    j["brightness_cadence_s"] = brightness_cadence_s;
    j["temperature_noise"] = temperature_noise;
    j["humidity_noise"] = humidity_noise;
    j["brightness_noise"] = brightness_noise;
    j["sunrise_min"] = sunrise_min;
    j["sunset_min"] = sunset_min;
    j["rule_latency_ms"] = rule_latency_ms;
    j["rule_lights_off_when_absent"] = rule_lights_off_when_absent;
    j["rule_camera_on_when_absent"] = rule_camera_on_when_absent;
    j["rule_heater_off_when_window_open"] = rule_heater_off_when_window_open;
    j["rule_lights_off_at_night"] = rule_lights_off_at_night;
    j["disabled_devices"] = disabled_devices;
    j["seed"] = seed;
    return j.dump(2) + "\n";
}

Trace generate_home(const HomeProfile& profile, int days) {
    if (days < 1) throw Error("generate_home: days must be >= 1");
    if (profile.schedule.wake_min + 45 >= profile.schedule.leave_min ||
        profile.schedule.leave_min >= profile.schedule.return_min ||
        profile.schedule.return_min >= profile.schedule.sleep_min ||
        profile.schedule.sleep_min >= 24 * 60)
        throw Error("generate_home: schedule times must be ordered within the day");

    const Timezone tz = Timezone::parse(profile.tz);
    const std::int64_t base_day =
        Timezone().local_day(parse_iso8601(profile.start_day + "T12:00:00.000Z"));

    struct RosterEntry {
        const char* id;
        DeviceKind kind;
        const char* midnight_state; // nominal devices only
    };
    const RosterEntry roster[] = {
        {device_id::presence, DeviceKind::Nominal, "home"},
        {device_id::sleep, DeviceKind::Nominal, "asleep"},
        {device_id::sun, DeviceKind::Nominal, "below_horizon"},
        {device_id::motion, DeviceKind::Nominal, "off"},
        {device_id::door, DeviceKind::Nominal, "closed"},
        {device_id::window, DeviceKind::Nominal, "closed"},
        {device_id::lock, DeviceKind::Nominal, "locked"},
        {device_id::light_living, DeviceKind::Nominal, "off"},
        {device_id::light_bedroom, DeviceKind::Nominal, "off"},
        {device_id::camera, DeviceKind::Nominal, "idle"},
        {device_id::heater, DeviceKind::Nominal, "idle"},
        {device_id::temperature, DeviceKind::Continuous, nullptr},
        {device_id::humidity, DeviceKind::Continuous, nullptr},
        {device_id::brightness, DeviceKind::Continuous, nullptr},
    };
    auto enabled = [&](const char* id) {
        return std::find(profile.disabled_devices.begin(), profile.disabled_devices.end(),
                         id) == profile.disabled_devices.end();
    };

    Trace trace;
    trace.tz = tz;
    for (const auto& entry : roster)
        if (enabled(entry.id)) trace.devices.push_back({entry.id, entry.kind, ""});
    if (trace.devices.empty()) throw Error("generate_home: empty device roster");

    std::vector<PendingEvent> events;
    auto emit = [&](TimestampMs t, const char* device, RawState state) {
        if (enabled(device)) events.push_back({t, device, std::move(state)});
    };

    const std::int64_t lat = profile.rule_latency_ms;

    for (int d = 0; d < days; ++d) {
        const TimestampMs day0 = tz.day_start(base_day + d);
        auto at_min = [&](double minutes) {
            return day0 + static_cast<TimestampMs>(minutes * kMinute);
        };

        // Integration refresh: every stateful device republishes its state
        // shortly after midnight.
        {
            int i = 0;
            for (const auto& entry : roster) {
                if (entry.kind != DeviceKind::Nominal) continue;
                emit(day0 + 30 * kSecond + i * 5 * kSecond, entry.id,
                     std::string(entry.midnight_state));
                ++i;
            }
        }

        Rng sched_rng = stream_rng(profile.seed, d, kSchedule);
        const auto jitter = [&]() {
            return sched_rng.uniform(-profile.schedule.jitter_min, profile.schedule.jitter_min);
        };
        const double wake = profile.schedule.wake_min + jitter();
        const double leave = profile.schedule.leave_min + jitter();
        const double ret = profile.schedule.return_min + jitter();
        const double sleep = profile.schedule.sleep_min + jitter();
        const double evening_light = std::max<double>(profile.sunset_min, ret + 2) +
                                     sched_rng.uniform(0.0, 8.0);

        // Sun transitions are fixed beacons.
        emit(at_min(profile.sunrise_min), device_id::sun, std::string("above_horizon"));
        emit(at_min(profile.sunset_min), device_id::sun, std::string("below_horizon"));

        // Morning routine.
        emit(at_min(wake), device_id::sleep, std::string("awake"));
        emit(at_min(wake) + 30 * kSecond, device_id::light_bedroom, std::string("on"));
        emit(at_min(wake) + 12 * kMinute, device_id::light_bedroom, std::string("off"));
        emit(at_min(wake) + 2 * kMinute, device_id::light_living, std::string("on"));
        emit(at_min(wake - 30), device_id::heater, std::string("heating"));

        const TimestampMs window_open_t = at_min(wake) + 15 * kMinute;
        const TimestampMs window_close_t = at_min(wake) + 35 * kMinute;
        emit(window_open_t, device_id::window, std::string("open"));
        emit(window_close_t, device_id::window, std::string("closed"));
        if (profile.rule_heater_off_when_window_open) {
            emit(window_open_t + lat, device_id::heater, std::string("idle"));
            emit(window_close_t + lat, device_id::heater, std::string("heating"));
        }

        // Leave for the day.
        const TimestampMs leave_t = at_min(leave);
        emit(leave_t - 10 * kSecond, device_id::lock, std::string("unlocked"));
        emit(leave_t, device_id::door, std::string("open"));
        emit(leave_t + 20 * kSecond, device_id::door, std::string("closed"));
        emit(leave_t + 40 * kSecond, device_id::lock, std::string("locked"));
        const TimestampMs away_t = leave_t + 60 * kSecond;
        emit(away_t, device_id::presence, std::string("away"));
        if (profile.rule_lights_off_when_absent)
            emit(away_t + lat, device_id::light_living, std::string("off"));
        emit(away_t + lat + 5 * kSecond, device_id::heater, std::string("idle"));
        if (profile.rule_camera_on_when_absent)
            emit(away_t + 2 * lat, device_id::camera, std::string("recording"));

        // Return home.
        const TimestampMs return_t = at_min(ret);
        const TimestampMs home_t = return_t - 60 * kSecond;
        emit(home_t, device_id::presence, std::string("home"));
        if (profile.rule_camera_on_when_absent)
            emit(home_t + lat, device_id::camera, std::string("idle"));
        emit(return_t - 10 * kSecond, device_id::lock, std::string("unlocked"));
        emit(return_t, device_id::door, std::string("open"));
        emit(return_t + 20 * kSecond, device_id::door, std::string("closed"));
        emit(return_t + 60 * kSecond, device_id::lock, std::string("locked"));
        emit(return_t + 5 * kMinute, device_id::heater, std::string("heating"));

        // Evening.
        const TimestampMs sleep_t = at_min(sleep);
        emit(at_min(evening_light), device_id::light_living, std::string("on"));
        emit(sleep_t - 15 * kMinute, device_id::light_bedroom, std::string("on"));
        emit(sleep_t, device_id::sleep, std::string("asleep"));
        if (profile.rule_lights_off_at_night) {
            emit(sleep_t + lat, device_id::light_living, std::string("off"));
            emit(sleep_t + lat + 5 * kSecond, device_id::light_bedroom, std::string("off"));
        }
        emit(sleep_t + 10 * kMinute, device_id::heater, std::string("idle"));

        // Motion bursts while home and awake.
        Rng motion_rng = stream_rng(profile.seed, d, kMotion);
        auto motion_bursts = [&](TimestampMs from, TimestampMs to) {
            TimestampMs t = from + static_cast<TimestampMs>(motion_rng.uniform(1, 5) * kMinute);
            while (t < to - 2 * kMinute) {
                emit(t, device_id::motion, std::string("on"));
                const auto hold = static_cast<TimestampMs>(motion_rng.uniform(30, 120) * kSecond);
                emit(t + hold, device_id::motion, std::string("off"));
                t += static_cast<TimestampMs>(motion_rng.uniform(8, 15) * kMinute);
            }
        };
        motion_bursts(at_min(wake), leave_t);
        motion_bursts(return_t, sleep_t);

        // Ambient samplers. Brightness depends on sun position and on the
        // living-room light intervals drawn above.
        const double living_on_1a = wake + 2;
        const double living_off_1a = (away_t + lat - day0) / static_cast<double>(kMinute);
        const double living_on_2a = evening_light;
        const double living_off_2a = (sleep_t + lat - day0) / static_cast<double>(kMinute);
        auto living_on_at = [&](double minutes) {
            return (minutes >= living_on_1a && minutes < living_off_1a) ||
                   (minutes >= living_on_2a && minutes < living_off_2a);
        };

        Rng temp_rng = stream_rng(profile.seed, d, kTemperature);
        for (double s = temp_rng.uniform(0.0, profile.temperature_cadence_s);
             s < 86400.0; s += profile.temperature_cadence_s) {
            const double hours = s / 3600.0;
            const double v = 20.5 + 2.2 * std::sin(2.0 * M_PI * (hours - 9.0) / 24.0) +
                             temp_rng.normal(0.0, profile.temperature_noise);
            emit(day0 + static_cast<TimestampMs>(s * 1000.0), device_id::temperature,
                 round_to(v, 0.1));
        }
        Rng hum_rng = stream_rng(profile.seed, d, kHumidity);
        for (double s = hum_rng.uniform(0.0, profile.humidity_cadence_s); s < 86400.0;
             s += profile.humidity_cadence_s) {
            const double hours = s / 3600.0;
            const double v = 55.0 - 7.0 * std::sin(2.0 * M_PI * (hours - 9.0) / 24.0) +
                             hum_rng.normal(0.0, profile.humidity_noise);
            emit(day0 + static_cast<TimestampMs>(s * 1000.0), device_id::humidity,
                 round_to(v, 0.5));
        }
        Rng bright_rng = stream_rng(profile.seed, d, kBrightness);
        for (double s = bright_rng.uniform(0.0, profile.brightness_cadence_s); s < 86400.0;
             s += profile.brightness_cadence_s) {
            const double minutes = s / 60.0;
            double v = 4.0;
            if (minutes >= profile.sunrise_min && minutes < profile.sunset_min) {
                const double frac = (minutes - profile.sunrise_min) /
                                    static_cast<double>(profile.sunset_min - profile.sunrise_min);
                v += 260.0 * std::sin(M_PI * frac);
            }
            if (living_on_at(minutes)) v += 60.0;
            v += bright_rng.normal(0.0, profile.brightness_noise);
            emit(day0 + static_cast<TimestampMs>(s * 1000.0), device_id::brightness,
                 std::max(0.0, std::round(v)));
        }
    }

    std::stable_sort(events.begin(), events.end(),
                     [](const PendingEvent& a, const PendingEvent& b) { return a.t < b.t; });
    trace.updates.reserve(events.size());
    for (auto& e : events) {
        StatusUpdate u;
        u.timestamp = e.t;
        u.device_id = e.device;
        u.state = std::move(e.state);
        u.origin = Origin::Observed;
        u.label = 0;
        trace.updates.push_back(std::move(u));
    }
    return trace;
}

namespace {

struct Interval {
    TimestampMs start = 0;
    TimestampMs end = 0;
    std::int64_t length() const { return end - start; }
};

// Maximal intervals during which `device` holds `state`, clipped to the
// scenario window.
std::vector<Interval> state_intervals(const Trace& trace, const std::string& device,
                                      const std::string& state, TimestampMs lo,
                                      TimestampMs hi) {
    std::vector<Interval> out;
    std::optional<TimestampMs> open;
    for (const auto& u : trace.updates) {
        if (u.device_id != device) continue;
        const bool match = std::holds_alternative<std::string>(u.state) &&
                           std::get<std::string>(u.state) == state;
        if (match && !open) {
            open = u.timestamp;
        } else if (!match && open) {
            out.push_back({*open, u.timestamp});
            open.reset();
        }
    }
    if (open && !trace.updates.empty())
        out.push_back({*open, trace.updates.back().timestamp});

    std::vector<Interval> clipped;
    for (const auto& iv : out) {
        const Interval c{std::max(iv.start, lo), std::min(iv.end, hi)};
        if (c.length() > 0) clipped.push_back(c);
    }
    return clipped;
}

std::string state_at(const Trace& trace, const std::string& device, TimestampMs t,
                     const std::string& fallback) {
    std::string cur = fallback;
    for (const auto& u : trace.updates) {
        if (u.timestamp > t) break;
        if (u.device_id == device && std::holds_alternative<std::string>(u.state))
            cur = std::get<std::string>(u.state);
    }
    return cur;
}

const Interval& longest(const std::vector<Interval>& ivs) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < ivs.size(); ++i)
        if (ivs[i].length() > ivs[best].length()) best = i;
    return ivs[best];
}

} // namespace

AttackScenario AttackScenario::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(std::string("scenario: invalid JSON: ") + e.what());
    }
    AttackScenario s;
    const auto slug = j.at("kind").get<std::string>();
    const auto kind = attack_kind_from_slug(slug);
    if (!kind) throw Error("scenario: unknown attack kind '" + slug + "'");
    s.kind = *kind;
    s.window_start = parse_iso8601(j.at("window_start").get<std::string>());
    s.window_end = parse_iso8601(j.at("window_end").get<std::string>());
    s.target_device = j.value("target_device", std::string{});
    s.flicker_period_ms = j.value("flicker_period_ms", s.flicker_period_ms);
    s.flicker_count = j.value("flicker_count", s.flicker_count);
    s.cycles = j.value("cycles", s.cycles);
    s.spike_celsius = j.value("spike_celsius", s.spike_celsius);
    return s;
}

std::string AttackScenario::to_json() const {
    json j;
    j["kind"] = attack_slug(kind);
    j["window_start"] = format_iso8601(window_start);
    j["window_end"] = format_iso8601(window_end);
    if (!target_device.empty()) j["target_device"] = target_device;
    j["flicker_period_ms"] = flicker_period_ms;
    j["flicker_count"] = flicker_count;
    j["cycles"] = cycles;
    j["spike_celsius"] = spike_celsius;
    return j.dump(2) + "\n";
}

Trace inject_attack(const Trace& trace, const AttackScenario& scenario,
                    std::uint64_t seed) {
    if (scenario.window_end <= scenario.window_start)
        throw Error("inject_attack: empty scenario window");
    if (trace.updates.empty()) throw Error("inject_attack: empty trace");
    if (scenario.window_start < trace.updates.front().timestamp ||
        scenario.window_end > trace.updates.back().timestamp + 1)
        throw Error("inject_attack: scenario window outside trace span");

    const std::string slug = attack_slug(scenario.kind);
    Rng rng(seed ^ 0xa77ac4ULL);
    const TimestampMs lo = scenario.window_start;
    const TimestampMs hi = scenario.window_end;

    Trace out = trace;
    for (auto& u : out.updates)
        if (!u.label) u.label = 0;

    std::vector<StatusUpdate> injected;
    auto inject = [&](TimestampMs t, const std::string& device, RawState state) {
        StatusUpdate u;
        u.timestamp = t;
        u.device_id = device;
        u.state = std::move(state);
        u.origin = Origin::Injected;
        u.label = 1;
        u.scenario = slug;
        injected.push_back(std::move(u));
    };
    auto pick_in = [&](const Interval& iv, std::int64_t need) {
        if (iv.length() <= need)
            throw Error("inject_attack: " + slug + ": interval too short for attack");
        return iv.start +
               static_cast<TimestampMs>(rng.uniform(0.0, static_cast<double>(iv.length() - need)));
    };
    auto require_absence = [&]() {
        const auto ivs = state_intervals(out, device_id::presence, "away", lo, hi);
        if (ivs.empty())
            throw Error("inject_attack: " + slug + ": no absence interval in attack window");
        return longest(ivs);
    };

    switch (scenario.kind) {
    case AttackKind::DoorOpenWhileAbsent: {
        const Interval away = require_absence();
        // Suppress the lock command issued when leaving, then enter.
        std::size_t lock_idx = out.updates.size();
        for (std::size_t i = 0; i < out.updates.size(); ++i) {
            const auto& u = out.updates[i];
            if (u.device_id == device_id::lock && u.timestamp >= away.start - 5 * kMinute &&
                u.timestamp <= away.end && std::holds_alternative<std::string>(u.state) &&
                std::get<std::string>(u.state) == "locked") {
                lock_idx = i;
                break;
            }
        }
        if (lock_idx == out.updates.size())
            throw Error("inject_attack: door_open_absent: no lock-locked event near the "
                        "absence start");
        const TimestampMs t0 = out.updates[lock_idx].timestamp;
        out.updates.erase(out.updates.begin() + static_cast<std::ptrdiff_t>(lock_idx));
        // The suppression becomes observable at the next event; label it.
        for (auto& u : out.updates) {
            if (u.timestamp >= t0 && u.timestamp <= away.end) {
                u.label = 1;
                u.scenario = slug;
                break;
            }
        }
        inject(t0 + 120 * kSecond, device_id::door, std::string("open"));
        inject(t0 + 150 * kSecond, device_id::door, std::string("closed"));
        inject(t0 + 180 * kSecond, device_id::lock, std::string("locked"));
        break;
    }
    case AttackKind::LightsOnWhileAbsent: {
        const Interval away = require_absence();
        const std::string target =
            scenario.target_device.empty() ? device_id::light_living : scenario.target_device;
        const TimestampMs t0 = pick_in(away, scenario.cycles * 180 * kSecond + kMinute);
        for (int i = 0; i < scenario.cycles; ++i) {
            inject(t0 + i * 180 * kSecond, target, std::string("on"));
            inject(t0 + i * 180 * kSecond + 90 * kSecond, target, std::string("off"));
        }
        break;
    }
    case AttackKind::MovementWhileAbsent: {
        const Interval away = require_absence();
        const TimestampMs t0 = pick_in(away, scenario.cycles * 70 * kSecond + kMinute);
        for (int i = 0; i < scenario.cycles; ++i) {
            inject(t0 + i * 70 * kSecond, device_id::motion, std::string("on"));
            inject(t0 + i * 70 * kSecond + 35 * kSecond, device_id::motion, std::string("off"));
        }
        break;
    }
    case AttackKind::CameraOffWhileAbsent: {
        const Interval away = require_absence();
        const TimestampMs t0 = pick_in(away, scenario.cycles * 240 * kSecond + kMinute);
        for (int i = 0; i < scenario.cycles; ++i) {
            inject(t0 + i * 240 * kSecond, device_id::camera, std::string("idle"));
            inject(t0 + i * 240 * kSecond + 120 * kSecond, device_id::camera,
                   std::string("recording"));
        }
        break;
    }
    case AttackKind::LightFlickering: {
        const std::string target =
            scenario.target_device.empty() ? device_id::light_living : scenario.target_device;
        const std::int64_t span =
            static_cast<std::int64_t>(scenario.flicker_count) * scenario.flicker_period_ms;
        const TimestampMs t0 = pick_in({lo, hi}, span + kSecond);
        std::string cur = state_at(out, target, t0, "off");
        for (int i = 0; i < scenario.flicker_count; ++i) {
            cur = cur == "on" ? "off" : "on";
            inject(t0 + static_cast<std::int64_t>(i) * scenario.flicker_period_ms, target,
                   cur);
        }
        break;
    }
    case AttackKind::HeatingOnWhileWindowsOpen: {
        const auto ivs = state_intervals(out, device_id::window, "open", lo, hi);
        if (ivs.empty())
            throw Error("inject_attack: heating_open_windows: no open-window interval in "
                        "attack window");
        const Interval open = longest(ivs);
        const TimestampMs t0 = pick_in(open, scenario.cycles * 90 * kSecond + kMinute);
        for (int i = 0; i < scenario.cycles; ++i) {
            inject(t0 + i * 90 * kSecond, device_id::heater, std::string("heating"));
            inject(t0 + i * 90 * kSecond + 45 * kSecond, device_id::heater,
                   std::string("idle"));
        }
        break;
    }
    case AttackKind::LightsOnDuringNight: {
        const auto ivs = state_intervals(out, device_id::sleep, "asleep", lo, hi);
        if (ivs.empty())
            throw Error("inject_attack: lights_on_night: no sleep interval in attack window");
        const Interval night = longest(ivs);
        const std::string target =
            scenario.target_device.empty() ? device_id::light_bedroom : scenario.target_device;
        const TimestampMs t0 = pick_in(night, scenario.cycles * 180 * kSecond + kMinute);
        for (int i = 0; i < scenario.cycles; ++i) {
            inject(t0 + i * 180 * kSecond, target, std::string("on"));
            inject(t0 + i * 180 * kSecond + 90 * kSecond, target, std::string("off"));
        }
        break;
    }
    case AttackKind::FakeFireClosedWindows:
    case AttackKind::FakeFireOpenWindows: {
        const bool want_open = scenario.kind == AttackKind::FakeFireOpenWindows;
        const auto ivs =
            state_intervals(out, device_id::window, want_open ? "open" : "closed", lo, hi);
        const std::int64_t span = 8 * 15 * kSecond;
        std::vector<Interval> fitting;
        for (const auto& iv : ivs)
            if (iv.length() > span + kSecond) fitting.push_back(iv);
        if (fitting.empty())
            throw Error("inject_attack: " + slug + ": no " +
                        (want_open ? std::string("open") : std::string("closed")) +
                        "-window interval long enough in attack window");
        const TimestampMs t0 = pick_in(longest(fitting), span + kSecond);
        const double ramp[8] = {30.0, 36.0, 42.0, 48.0, scenario.spike_celsius,
                                scenario.spike_celsius, scenario.spike_celsius,
                                scenario.spike_celsius};
        for (int i = 0; i < 8; ++i)
            inject(t0 + i * 15 * kSecond, device_id::temperature, ramp[i]);
        break;
    }
    }

    for (auto& u : injected) out.updates.push_back(std::move(u));
    std::stable_sort(out.updates.begin(), out.updates.end(),
                     [](const StatusUpdate& a, const StatusUpdate& b) {
                         return a.timestamp < b.timestamp;
                     });
    return out;
}

Trace inject_noise(const Trace& trace, const NoiseConfig& config) {
    if (config.sigma < 0.0) throw Error("inject_noise: sigma must be >= 0");
    if (config.samples_per_draw < 1)
        throw Error("inject_noise: samples_per_draw must be >= 1");
    if (!trace.find_device(config.target_device))
        throw Error("inject_noise: unknown device '" + config.target_device + "'");

    Trace out = trace;
    Rng rng(config.seed ^ 0x9015eULL);
    for (auto& u : out.updates) {
        if (u.device_id != config.target_device) continue;
        double sum = 0.0;
        for (int i = 0; i < config.samples_per_draw; ++i)
            sum += rng.normal(config.mu, config.sigma);
        const double draw = sum / static_cast<double>(config.samples_per_draw);
        if (config.raw_domain) {
            if (!std::holds_alternative<double>(u.state))
                throw Error("inject_noise: raw-domain noise requires a continuous device");
            u.state = std::get<double>(u.state) + draw;
        } else {
            u.mapped_offset += draw;
        }
    }
    return out;
}

Trace poison_training(const Trace& train, const Trace& attack_events, double fraction) {
    if (fraction < 0.0 || fraction > 1.0)
        throw Error("poison_training: fraction must be in [0,1]");
    if (fraction == 0.0) return train;

    std::vector<StatusUpdate> pool;
    for (const auto& u : attack_events.updates)
        if (u.label && *u.label == 1) pool.push_back(u);
    if (pool.empty()) throw Error("poison_training: attack pool is empty");

    const double n = static_cast<double>(train.updates.size());
    const std::size_t want =
        static_cast<std::size_t>(std::llround(fraction * n / (1.0 - fraction)));
    if (want == 0) return train;
    if (want > pool.size())
        throw Error("poison_training: need " + std::to_string(want) +
                    " attack events, pool has " + std::to_string(pool.size()));

    Trace out = train;
    for (std::size_t i = 0; i < want; ++i) out.updates.push_back(pool[i]);
    std::stable_sort(out.updates.begin(), out.updates.end(),
                     [](const StatusUpdate& a, const StatusUpdate& b) {
                         return a.timestamp < b.timestamp;
                     });
    return out;
}

} // namespace argus
