#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "argus/trace.hpp"

namespace argus {

// Inhabitant schedule, minutes from local midnight plus uniform jitter.
struct Schedule {
    int wake_min = 7 * 60;
    int leave_min = 8 * 60 + 30;
    int return_min = 18 * 60;
    int sleep_min = 23 * 60;
    int jitter_min = 18;
};

// Synthetic single-inhabitant home. The default roster mirrors a small
// real-world deployment: presence and sleep trackers, sun position, motion,
// door/window/lock sensors, two lights, an indoor camera, a heater and
// three ambient sensors (temperature, humidity, brightness).
struct HomeProfile {
    std::string tz = "UTC";
    std::string start_day = "2024-03-04"; // local date of day 0
    Schedule schedule;
    int temperature_cadence_s = 90;
    int humidity_cadence_s = 120;
    int brightness_cadence_s = 100;
    double temperature_noise = 0.12;
    double humidity_noise = 0.8;
    double brightness_noise = 6.0;
    int sunrise_min = 7 * 60 + 30;
    int sunset_min = 19 * 60 + 30;
    int rule_latency_ms = 30'000; // trigger-to-action delay of automations
    bool rule_lights_off_when_absent = true;
    bool rule_camera_on_when_absent = true;
    bool rule_heater_off_when_window_open = true;
    bool rule_lights_off_at_night = true;
    std::vector<std::string> disabled_devices; // roster subset configuration
    std::uint64_t seed = 1;

    static HomeProfile from_json(const std::string& text);
    std::string to_json() const;
};

// Device ids used by the generator and the attack injector.
namespace device_id {
inline constexpr const char* presence = "presence.user";
inline constexpr const char* sleep = "sensor.sleep";
inline constexpr const char* sun = "sun.sun";
inline constexpr const char* motion = "binary.motion";
inline constexpr const char* door = "binary.door";
inline constexpr const char* window = "binary.window";
inline constexpr const char* lock = "lock.front";
inline constexpr const char* light_living = "light.living";
inline constexpr const char* light_bedroom = "light.bedroom";
inline constexpr const char* camera = "camera.indoor";
inline constexpr const char* heater = "climate.heater";
inline constexpr const char* temperature = "sensor.temperature";
inline constexpr const char* humidity = "sensor.humidity";
inline constexpr const char* brightness = "sensor.brightness";
} // namespace device_id

// Deterministic benign trace over `days` calendar days; all labels 0.
Trace generate_home(const HomeProfile& profile, int days);

enum class AttackKind {
    DoorOpenWhileAbsent,
    LightsOnWhileAbsent,
    MovementWhileAbsent,
    CameraOffWhileAbsent,
    LightFlickering,
    HeatingOnWhileWindowsOpen,
    LightsOnDuringNight,
    FakeFireClosedWindows,
    FakeFireOpenWindows,
};

enum class AttackCategory { EventSpoofing, EventInterception, CommandSpoofing, CommandInterception };

// Taxonomy row for a kind (fixed mapping).
std::vector<AttackCategory> attack_categories(AttackKind kind);
std::string attack_slug(AttackKind kind);
std::optional<AttackKind> attack_kind_from_slug(const std::string& slug);

struct AttackScenario {
    AttackKind kind = AttackKind::LightFlickering;
    TimestampMs window_start = 0;
    TimestampMs window_end = 0;
    std::string target_device; // empty = kind-specific default
    int flicker_period_ms = 2'000;
    int flicker_count = 20;
    int cycles = 4;             // repetitions for spoof/restore attacks
    double spike_celsius = 55.0; // fake-fire peak, above any benign reading

    static AttackScenario from_json(const std::string& text);
    std::string to_json() const;
};

// Injects one attack into the trace and labels ground truth: every injected
// update carries label 1, origin Injected and the kind's scenario slug.
// Suppression attacks label the first update following the removed event
// inside the affected interval. Throws when the scenario preconditions are
// not met inside the window.
Trace inject_attack(const Trace& trace, const AttackScenario& scenario,
                    std::uint64_t seed);

struct NoiseConfig {
    double mu = 1.0;
    double sigma = 1.0;
    int samples_per_draw = 100;
    std::string target_device;
    // When true, continuous devices are perturbed in raw units instead of
    // the mapped domain.
    bool raw_domain = false;
    std::uint64_t seed = 0;
};

// Attaches a perturbation to every update of the target device: the draw is
// the mean of `samples_per_draw` Gaussian samples and is added to the mapped
// state at preprocessing time without clamping.
Trace inject_noise(const Trace& trace, const NoiseConfig& config);

// Interleaves attack-pool events into the training trace until injected
// events make up `fraction` of the result (within one event).
Trace poison_training(const Trace& train, const Trace& attack_events, double fraction);

} // namespace argus
