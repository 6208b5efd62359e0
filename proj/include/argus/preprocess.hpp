#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "argus/trace.hpp"

namespace argus {

// State map for a nominal device: labels are numbered 1..k in order of
// first occurrence in training data and map to state_id / |states|. Unseen
// labels map to 0 (the reserved slot for values never observed in training).
struct NominalStateMap {
    std::string device_id;
    std::vector<std::string> ordered_states; // index i holds state_id i+1
    bool degenerate = false;                 // no training updates

    std::size_t cardinality() const { return ordered_states.size(); }
    double map(const std::string& label) const;
};

// State map for a continuous device: the training range [s_min, s_max] is
// cut into 10 equal buckets mapping to i/10. Out-of-range readings clamp to
// the nearest bucket; the last bucket is closed at s_max.
struct ContinuousBucketMap {
    std::string device_id;
    double s_min = 0.0;
    double s_max = 0.0;
    bool degenerate = false; // no updates, or s_min == s_max

    static constexpr int kBuckets = 10;
    double map(double value) const;
};

using DeviceStateMap = std::variant<NominalStateMap, ContinuousBucketMap>;

struct StateMapCatalog {
    std::vector<std::string> device_order; // sorted by device_id; index = vector slot
    std::map<std::string, DeviceStateMap> maps;

    std::size_t device_count() const { return device_order.size(); }
    int index_of(const std::string& device_id) const; // -1 when absent

    std::string to_json() const;
    static StateMapCatalog from_json(const std::string& text);

    // Stable content hash used to pair a trained model with its catalog.
    std::uint64_t hash() const;
};

struct FitResult {
    StateMapCatalog catalog;
    std::vector<std::string> warnings; // one entry per degenerate map
};

// Fits per-device state maps from training data.
FitResult fit_state_maps(const Trace& train);

// Maps one raw state through the catalog; throws on unknown device.
double map_state(const StateMapCatalog& catalog, const std::string& device_id,
                 const RawState& raw);

struct Snapshot {
    TimestampMs time = 0;
    Eigen::VectorXd values; // entry m = mapped state of device_order[m]
    int trigger_index = -1; // device whose update produced this snapshot
};

// One snapshot per update, forward-filling every device's latest mapped
// state; devices not yet observed hold 0. Noise offsets attached to updates
// are added after mapping and are deliberately not clamped.
std::vector<Snapshot> build_event_chain(const Trace& trace,
                                        const StateMapCatalog& catalog);

enum class WindowMode { Disjoint, Sliding };

struct WindowBatch {
    std::vector<Eigen::MatrixXd> windows; // each (l, n_devices)
    int length = 0;                       // l
    std::vector<TimestampMs> end_times;   // per window, last snapshot time
    std::vector<std::size_t> end_indices; // per window, last snapshot index

    std::size_t size() const { return windows.size(); }
};

// Disjoint: consecutive groups of l snapshots, trailing partial dropped.
// Sliding: stride-1 windows ending at every index >= l-1.
WindowBatch build_windows(const std::vector<Snapshot>& chain, int length,
                          WindowMode mode);

} // namespace argus
