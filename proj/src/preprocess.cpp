#include "argus/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "argus/error.hpp"

namespace argus {

using json = nlohmann::ordered_json;

double NominalStateMap::map(const std::string& label) const {
    if (degenerate) return 0.0;
    for (std::size_t i = 0; i < ordered_states.size(); ++i)
        if (ordered_states[i] == label)
            return static_cast<double>(i + 1) / static_cast<double>(ordered_states.size());
    return 0.0; // unseen label -> reserved S_0
}

double ContinuousBucketMap::map(double value) const {
    if (degenerate || !std::isfinite(value)) return 0.0;
    if (value < s_min) return 0.0;
    if (value >= s_max) return (kBuckets - 1) / 10.0; // last bucket closed at s_max
    const double span = s_max - s_min;
    int bucket = static_cast<int>(std::floor((value - s_min) / span * kBuckets));
    bucket = std::clamp(bucket, 0, kBuckets - 1);
    return bucket / 10.0;
}

int StateMapCatalog::index_of(const std::string& device_id) const {
    const auto it = std::lower_bound(device_order.begin(), device_order.end(), device_id);
    if (it == device_order.end() || *it != device_id) return -1;
    return static_cast<int>(it - device_order.begin());
}

FitResult fit_state_maps(const Trace& train) {
    if (train.devices.empty()) throw Error("fit_state_maps: trace has no devices");

    FitResult result;
    auto& catalog = result.catalog;
    for (const auto& d : train.devices) catalog.device_order.push_back(d.device_id);
    std::sort(catalog.device_order.begin(), catalog.device_order.end());

    for (const auto& d : train.devices) {
        if (d.kind == DeviceKind::Nominal)
            catalog.maps.emplace(d.device_id, NominalStateMap{d.device_id, {}, true});
        else
            catalog.maps.emplace(d.device_id,
                                 ContinuousBucketMap{d.device_id, 0.0, 0.0, true});
    }

    for (const auto& u : train.updates) {
        auto it = catalog.maps.find(u.device_id);
        if (it == catalog.maps.end())
            throw Error("fit_state_maps: update references unknown device '" + u.device_id + "'");
        if (auto* nom = std::get_if<NominalStateMap>(&it->second)) {
            const auto& label = std::get<std::string>(u.state);
            if (std::find(nom->ordered_states.begin(), nom->ordered_states.end(), label) ==
                nom->ordered_states.end())
                nom->ordered_states.push_back(label);
            nom->degenerate = false;
        } else {
            auto& cont = std::get<ContinuousBucketMap>(it->second);
            const double v = std::get<double>(u.state);
            if (cont.degenerate) {
                cont.s_min = cont.s_max = v;
                cont.degenerate = false;
            } else {
                cont.s_min = std::min(cont.s_min, v);
                cont.s_max = std::max(cont.s_max, v);
            }
        }
    }

    for (auto& [id, map] : catalog.maps) {
        if (auto* nom = std::get_if<NominalStateMap>(&map)) {
            if (nom->ordered_states.empty()) {
                nom->degenerate = true;
                result.warnings.push_back("device '" + id + "' has no training updates; map is degenerate");
            }
        } else {
            auto& cont = std::get<ContinuousBucketMap>(map);
            if (cont.degenerate) {
                result.warnings.push_back("device '" + id + "' has no training updates; map is degenerate");
            } else if (cont.s_min == cont.s_max) {
                cont.degenerate = true;
                result.warnings.push_back("device '" + id + "' has a constant training value; map is degenerate");
            }
        }
    }
    return result;
}

double map_state(const StateMapCatalog& catalog, const std::string& device_id,
                 const RawState& raw) {
    const auto it = catalog.maps.find(device_id);
    if (it == catalog.maps.end()) throw Error("map_state: unknown device '" + device_id + "'");
    if (const auto* nom = std::get_if<NominalStateMap>(&it->second)) {
        if (!std::holds_alternative<std::string>(raw))
            throw Error("map_state: numeric state on nominal device '" + device_id + "'");
        return nom->map(std::get<std::string>(raw));
    }
    const auto& cont = std::get<ContinuousBucketMap>(it->second);
    if (!std::holds_alternative<double>(raw))
        throw Error("map_state: non-numeric state on continuous device '" + device_id + "'");
    return cont.map(std::get<double>(raw));
}

std::vector<Snapshot> build_event_chain(const Trace& trace,
                                        const StateMapCatalog& catalog) {
    std::vector<Snapshot> chain;
    chain.reserve(trace.updates.size());
    Eigen::VectorXd current = Eigen::VectorXd::Zero(
        static_cast<Eigen::Index>(catalog.device_count()));

    for (const auto& u : trace.updates) {
        const int idx = catalog.index_of(u.device_id);
        if (idx < 0) throw Error("build_event_chain: unknown device '" + u.device_id + "'");
        current[idx] = map_state(catalog, u.device_id, u.state) + u.mapped_offset;
        Snapshot snap;
        snap.time = u.timestamp;
        snap.values = current;
        snap.trigger_index = idx;
        chain.push_back(std::move(snap));
    }
    return chain;
}

WindowBatch build_windows(const std::vector<Snapshot>& chain, int length,
                          WindowMode mode) {
    if (length < 1) throw Error("build_windows: length must be >= 1");
    WindowBatch batch;
    batch.length = length;
    const std::size_t n = chain.size();
    const std::size_t l = static_cast<std::size_t>(length);
    if (n < l) return batch;

    const Eigen::Index dims = chain.front().values.size();
    auto emit = [&](std::size_t start) {
        Eigen::MatrixXd w(length, dims);
        for (std::size_t r = 0; r < l; ++r) w.row(static_cast<Eigen::Index>(r)) = chain[start + r].values;
        batch.windows.push_back(std::move(w));
        batch.end_times.push_back(chain[start + l - 1].time);
        batch.end_indices.push_back(start + l - 1);
    };

    if (mode == WindowMode::Disjoint) {
        for (std::size_t start = 0; start + l <= n; start += l) emit(start);
    } else {
        for (std::size_t start = 0; start + l <= n; ++start) emit(start);
    }
    return batch;
}

namespace {

json map_to_json(const DeviceStateMap& map) {
    json j;
    if (const auto* nom = std::get_if<NominalStateMap>(&map)) {
        j["kind"] = "nominal";
        j["states"] = nom->ordered_states;
        j["degenerate"] = nom->degenerate;
    } else {
        const auto& cont = std::get<ContinuousBucketMap>(map);
        j["kind"] = "continuous";
        j["min"] = cont.s_min;
        j["max"] = cont.s_max;
        j["degenerate"] = cont.degenerate;
    }
    return j;
}

} // namespace

std::string StateMapCatalog::to_json() const {
    json j;
    j["device_order"] = device_order;
    json maps_json;
    for (const auto& id : device_order) {
        const auto it = maps.find(id);
        if (it == maps.end()) throw Error("catalog: device_order entry '" + id + "' has no map");
        maps_json[id] = map_to_json(it->second);
    }
    j["maps"] = maps_json;
    return j.dump();
}

StateMapCatalog StateMapCatalog::from_json(const std::string& text) {
    StateMapCatalog catalog;
    json j;
    try {
        j = json::parse(text);
        catalog.device_order = j.at("device_order").get<std::vector<std::string>>();
        for (const auto& id : catalog.device_order) {
            const auto& m = j.at("maps").at(id);
            if (m.at("kind") == "nominal") {
                NominalStateMap nom;
                nom.device_id = id;
                nom.ordered_states = m.at("states").get<std::vector<std::string>>();
                nom.degenerate = m.at("degenerate").get<bool>();
                catalog.maps.emplace(id, std::move(nom));
            } else {
                ContinuousBucketMap cont;
                cont.device_id = id;
                cont.s_min = m.at("min").get<double>();
                cont.s_max = m.at("max").get<double>();
                cont.degenerate = m.at("degenerate").get<bool>();
                catalog.maps.emplace(id, std::move(cont));
            }
        }
    } catch (const json::exception& e) {
        throw Error(std::string("catalog: malformed JSON: ") + e.what());
    }
    return catalog;
}

std::uint64_t StateMapCatalog::hash() const {
    // FNV-1a over the canonical JSON form.
    const std::string text = to_json();
    std::uint64_t h = 14695981039346656037ULL;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace argus
