#include "argus/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "argus/error.hpp"

namespace argus {

using json = nlohmann::ordered_json;

MetricsReport compute_metrics(const ConfusionCounts& c) {
    MetricsReport r;
    r.counts = c;
    if (c.fp + c.tn > 0)
        r.fpr = static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
    if (c.tp + c.fp > 0)
        r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn > 0)
        r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (r.precision && r.recall && *r.precision + *r.recall > 0.0)
        r.f1 = 2.0 * *r.precision * *r.recall / (*r.precision + *r.recall);
    return r;
}

ConfusionCounts count_confusion(const std::vector<Decision>& decisions,
                                const std::vector<int>& labels) {
    if (decisions.size() != labels.size())
        throw Error("count_confusion: " + std::to_string(decisions.size()) +
                    " decisions vs " + std::to_string(labels.size()) + " labels");
    ConfusionCounts c;
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        const bool attack = decisions[i] == Decision::Attack;
        if (labels[i] == 1)
            attack ? ++c.tp : ++c.fn;
        else
            attack ? ++c.fp : ++c.tn;
    }
    return c;
}

FitOutput fit(const Trace& train, const nn::TrainConfig& train_cfg,
              const ThresholdConfig& threshold_cfg) {
    if (train.updates.empty()) throw Error("fit: empty training trace");

    FitOutput out;
    auto fitted = fit_state_maps(train);
    out.warnings = std::move(fitted.warnings);
    out.detector.catalog = std::move(fitted.catalog);

    const auto chain = build_event_chain(train, out.detector.catalog);
    const auto disjoint = build_windows(chain, train_cfg.window_len, WindowMode::Disjoint);
    if (disjoint.windows.empty())
        throw Error("fit: training data yields no full window (need >= " +
                    std::to_string(train_cfg.window_len) + " events)");

    auto trained = nn::train_autoencoder(disjoint.windows, train_cfg);
    out.detector.model = std::move(trained.model);
    out.detector.model.catalog_hash = out.detector.catalog.hash();
    out.train_report = std::move(trained.report);

    // Bootstrap threshold: candidate over the validation split's
    // sliding-window scores, mirroring the chronological split used by the
    // training loop. Degenerately small inputs fall back to the whole chain.
    const std::size_t n = disjoint.windows.size();
    const std::size_t n_val = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * train_cfg.validation_fraction));
    const std::size_t val_start_index =
        n_val > 0 ? (n - n_val) * static_cast<std::size_t>(train_cfg.window_len) : 0;

    const auto sliding = build_windows(chain, train_cfg.window_len, WindowMode::Sliding);
    std::vector<Eigen::MatrixXd> val_windows;
    for (std::size_t i = 0; i < sliding.windows.size(); ++i)
        if (sliding.end_indices[i] >= val_start_index)
            val_windows.push_back(sliding.windows[i]);
    if (val_windows.empty())
        throw Error("fit: no validation windows for threshold bootstrap");

    const Eigen::VectorXd scores = nn::score_windows(out.detector.model, val_windows);
    out.detector.bootstrap_scores.assign(scores.data(), scores.data() + scores.size());
    out.detector.threshold_cfg = threshold_cfg;
    out.detector.bootstrap_threshold =
        threshold_candidate(out.detector.bootstrap_scores, threshold_cfg.beta);
    return out;
}

StreamDetector::StreamDetector(const DetectorModel& model, const Timezone& tz)
    : model_(model),
      tz_(tz),
      state_(Eigen::VectorXd::Zero(
          static_cast<Eigen::Index>(model.catalog.device_count()))),
      threshold_(model.threshold_cfg, model.bootstrap_threshold) {
    if (model_.model.n_devices != static_cast<int>(model_.catalog.device_count()))
        throw Error("detector: model expects " + std::to_string(model_.model.n_devices) +
                    " devices, catalog has " + std::to_string(model_.catalog.device_count()));
}

Verdict StreamDetector::push(const StatusUpdate& update) {
    if (any_ && update.timestamp < last_time_)
        throw Error("detect_stream: out-of-order event at index " + std::to_string(index_));
    const int device = model_.catalog.index_of(update.device_id);
    if (device < 0)
        throw Error("detect_stream: unknown device '" + update.device_id + "'");

    // Close finished days before this event's score is observed, so each
    // day's threshold only uses completed days.
    const std::int64_t day = tz_.local_day(update.timestamp);
    if (day_) {
        for (std::int64_t d = *day_; d < day; ++d) threshold_.roll_day();
    }
    day_ = day;

    state_[device] =
        map_state(model_.catalog, update.device_id, update.state) + update.mapped_offset;
    if (!any_) first_snapshot_ = state_;
    window_.push_back(state_);
    const std::size_t l = static_cast<std::size_t>(model_.model.window_len);
    if (window_.size() > l) window_.pop_front();

    const bool provisional = window_.size() < l;
    Eigen::MatrixXd w(model_.model.window_len, state_.size());
    const std::size_t pad = l - window_.size();
    for (std::size_t i = 0; i < pad; ++i)
        w.row(static_cast<Eigen::Index>(i)) = first_snapshot_.transpose();
    for (std::size_t i = 0; i < window_.size(); ++i)
        w.row(static_cast<Eigen::Index>(pad + i)) = window_[i].transpose();

    Verdict v;
    v.index = index_;
    v.update = update;
    v.score = nn::score_window(model_.model, w);
    v.threshold = threshold_.current();
    v.decision = classify(v.score, v.threshold);
    v.provisional = provisional;
    if (v.decision == Decision::Attack)
        v.alert_context.assign(context_.begin(), context_.end());
    threshold_.observe(v.score, v.decision);

    context_.push_back(update);
    if (context_.size() > static_cast<std::size_t>(model_.context_depth))
        context_.pop_front();
    last_time_ = update.timestamp;
    any_ = true;
    ++index_;
    return v;
}

std::vector<Verdict> detect_stream(const DetectorModel& model, const Trace& events) {
    StreamDetector stream(model, events.tz);
    std::vector<Verdict> verdicts;
    verdicts.reserve(events.updates.size());
    for (const auto& u : events.updates) verdicts.push_back(stream.push(u));
    return verdicts;
}

EvaluationReport evaluate(const DetectorModel& model, const Trace& labeled) {
    if (!labeled.has_labels())
        throw Error("evaluate: trace is not fully labeled");

    EvaluationReport report;
    report.verdicts = detect_stream(model, labeled);

    std::vector<Decision> decisions;
    std::vector<int> labels;
    decisions.reserve(report.verdicts.size());
    labels.reserve(labeled.updates.size());
    for (const auto& v : report.verdicts) decisions.push_back(v.decision);
    for (const auto& u : labeled.updates) labels.push_back(*u.label);
    report.metrics = compute_metrics(count_confusion(decisions, labels));

    // Per-scenario recall over tagged attack events (Table 4 style).
    std::map<std::string, ScenarioStats> by_scenario;
    for (std::size_t i = 0; i < labeled.updates.size(); ++i) {
        const auto& u = labeled.updates[i];
        if (u.scenario.empty() || *u.label != 1) continue;
        auto& stats = by_scenario[u.scenario];
        stats.scenario = u.scenario;
        ++stats.events;
        if (decisions[i] == Decision::Attack) ++stats.detected;
    }
    for (auto& [_, stats] : by_scenario) {
        stats.recall = static_cast<double>(stats.detected) / static_cast<double>(stats.events);
        report.per_scenario.push_back(stats);
    }
    return report;
}

void write_verdicts(const std::vector<Verdict>& verdicts, std::ostream& out) {
    for (const auto& v : verdicts) {
        json j;
        j["i"] = v.index;
        j["t"] = format_iso8601(v.update.timestamp);
        j["device"] = v.update.device_id;
        j["score"] = v.score;
        j["threshold"] = v.threshold;
        j["decision"] = v.decision == Decision::Attack ? "attack" : "benign";
        j["provisional"] = v.provisional;
        if (v.decision == Decision::Attack) {
            json ctx = json::array();
            for (const auto& u : v.alert_context) {
                json e;
                e["t"] = format_iso8601(u.timestamp);
                e["id"] = u.device_id;
                if (std::holds_alternative<double>(u.state))
                    e["state"] = std::get<double>(u.state);
                else
                    e["state"] = std::get<std::string>(u.state);
                ctx.push_back(e);
            }
            j["context"] = ctx;
        }
        out << j.dump() << '\n';
    }
}

namespace {

constexpr char kDetectorMagic[8] = {'A', 'R', 'G', 'U', 'S', 'D', 'M', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw Error("detector stream truncated");
    return v;
}

} // namespace

void save_detector(const DetectorModel& model, std::ostream& out) {
    out.write(kDetectorMagic, sizeof(kDetectorMagic));
    write_pod<std::uint32_t>(out, 1);
    const std::string catalog = model.catalog.to_json();
    write_pod<std::uint64_t>(out, catalog.size());
    out.write(catalog.data(), static_cast<std::streamsize>(catalog.size()));
    write_pod<double>(out, model.threshold_cfg.alpha);
    write_pod<double>(out, model.threshold_cfg.beta);
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(model.threshold_cfg.strategy));
    write_pod<std::uint8_t>(out, model.threshold_cfg.exclude_attack_scores ? 1 : 0);
    write_pod<double>(out, model.bootstrap_threshold);
    write_pod<std::int32_t>(out, model.context_depth);
    nn::save_model(model.model, out);
}

DetectorModel load_detector(std::istream& in) {
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kDetectorMagic, sizeof(kDetectorMagic)) != 0)
        throw Error("not a detector file");
    const auto version = read_pod<std::uint32_t>(in);
    if (version != 1) throw Error("unsupported detector version " + std::to_string(version));

    DetectorModel model;
    const auto catalog_len = read_pod<std::uint64_t>(in);
    std::string catalog_text(catalog_len, '\0');
    in.read(catalog_text.data(), static_cast<std::streamsize>(catalog_len));
    if (!in) throw Error("detector stream truncated");
    model.catalog = StateMapCatalog::from_json(catalog_text);
    model.threshold_cfg.alpha = read_pod<double>(in);
    model.threshold_cfg.beta = read_pod<double>(in);
    model.threshold_cfg.strategy = static_cast<ThresholdStrategy>(read_pod<std::uint8_t>(in));
    model.threshold_cfg.exclude_attack_scores = read_pod<std::uint8_t>(in) != 0;
    model.bootstrap_threshold = read_pod<double>(in);
    model.context_depth = read_pod<std::int32_t>(in);
    model.model = nn::load_model(in);

    if (model.model.catalog_hash != model.catalog.hash())
        throw Error("detector file: model was trained against a different catalog");
    if (model.model.n_devices != static_cast<int>(model.catalog.device_count()))
        throw Error("detector file: model/catalog device count mismatch");
    return model;
}

void save_detector_file(const DetectorModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write detector file '" + path + "'");
    save_detector(model, out);
}

DetectorModel load_detector_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open detector file '" + path + "'");
    return load_detector(in);
}

} // namespace argus
