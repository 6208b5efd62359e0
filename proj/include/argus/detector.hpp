#pragma once

#include <deque>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "argus/metrics.hpp"
#include "argus/nn.hpp"
#include "argus/preprocess.hpp"
#include "argus/threshold.hpp"
#include "argus/trace.hpp"

namespace argus {

// A fitted detector: state maps, trained autoencoder, threshold policy and
// the bootstrap threshold that applies before the first full deployment day
// has produced scores.
struct DetectorModel {
    StateMapCatalog catalog;
    nn::AutoencoderModel model;
    ThresholdConfig threshold_cfg;
    double bootstrap_threshold = 0.0;
    // Validation-split scores behind bootstrap_threshold; kept so the
    // candidate can be recomputed for any beta.
    std::vector<double> bootstrap_scores;
    int context_depth = 5; // preceding events attached to alerts
};

struct Verdict {
    std::size_t index = 0;
    StatusUpdate update;
    double score = 0.0;
    double threshold = 0.0;
    Decision decision = Decision::Benign;
    bool provisional = false; // warm-up verdict on a front-padded window
    std::vector<StatusUpdate> alert_context; // k preceding events, attacks only
};

struct FitOutput {
    DetectorModel detector;
    nn::TrainReport train_report;
    std::vector<std::string> warnings;
};

// Fits state maps and the autoencoder on benign training data (labels are
// ignored), then bootstraps the threshold from the validation split's
// sliding-window scores.
FitOutput fit(const Trace& train, const nn::TrainConfig& train_cfg,
              const ThresholdConfig& threshold_cfg);

// Single-consumer streaming detector: one verdict per pushed event, emitted
// before the next event is consumed. The threshold rolls at local-day
// boundaries of the supplied timezone.
class StreamDetector {
public:
    StreamDetector(const DetectorModel& model, const Timezone& tz);

    Verdict push(const StatusUpdate& update);

    double current_threshold() const { return threshold_.current(); }
    const ThresholdState& threshold_state() const { return threshold_; }

private:
    const DetectorModel& model_;
    Timezone tz_;
    Eigen::VectorXd state_;
    Eigen::VectorXd first_snapshot_;
    std::deque<Eigen::VectorXd> window_;
    std::deque<StatusUpdate> context_;
    ThresholdState threshold_;
    std::optional<std::int64_t> day_;
    std::size_t index_ = 0;
    TimestampMs last_time_ = 0;
    bool any_ = false;
};

// Runs the stream over every update of the trace.
std::vector<Verdict> detect_stream(const DetectorModel& model, const Trace& events);

struct ScenarioStats {
    std::string scenario;
    std::int64_t events = 0;
    std::int64_t detected = 0;
    std::optional<double> recall;
};

struct EvaluationReport {
    MetricsReport metrics;
    std::vector<ScenarioStats> per_scenario; // present when scenario tags exist
    std::vector<Verdict> verdicts;
};

// Streams a labeled trace and joins verdicts with ground truth. Throws when
// the trace carries no labels.
EvaluationReport evaluate(const DetectorModel& model, const Trace& labeled);

// Verdict stream serialization, one JSON object per line.
void write_verdicts(const std::vector<Verdict>& verdicts, std::ostream& out);

void save_detector(const DetectorModel& model, std::ostream& out);
DetectorModel load_detector(std::istream& in);
void save_detector_file(const DetectorModel& model, const std::string& path);
DetectorModel load_detector_file(const std::string& path);

} // namespace argus
