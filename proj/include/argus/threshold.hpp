#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace argus {

enum class ThresholdStrategy {
    ArgusMomentum,
    MeanOfMax,
    MeanPlusStdPrevDay,
    MaxOfPrevDays,
};

enum class Decision { Benign, Attack };

struct ThresholdConfig {
    double alpha = 0.2; // aging factor
    double beta = 0.2;  // security level
    ThresholdStrategy strategy = ThresholdStrategy::ArgusMomentum;
    // When true, scores classified Attack are excluded from the daily set
    // E_d. The default follows the literal reading: all observed scores
    // enter the day's set.
    bool exclude_attack_scores = false;
};

// Daily candidate: C = max(E) + beta * (max(E) - min(E)).
double threshold_candidate(const std::vector<double>& day_scores, double beta);

// Momentum blend: T = alpha * prev + (1 - alpha) * C, or C when there is no
// previous threshold yet.
double update_threshold(std::optional<double> prev_threshold, double candidate,
                        double alpha);

// Benign iff score <= threshold (boundary inclusive).
Decision classify(double score, double threshold);

// Alternative strategies:
//   MeanOfMax           static mean of per-training-day maxima
//   MeanPlusStdPrevDay  mean + population std of the previous day's scores
//   MaxOfPrevDays       max over every preceding day's scores
double alt_threshold(ThresholdStrategy strategy,
                     const std::vector<std::vector<double>>& training_day_scores,
                     const std::vector<double>& prev_day_scores);

// Running state of the daily threshold over one detection stream.
class ThresholdState {
public:
    ThresholdState(ThresholdConfig config, double bootstrap_threshold);

    double current() const { return current_; }

    // Adds one score observed today; `decision` feeds the optional
    // attack-exclusion mode.
    void observe(double score, Decision decision);

    // Closes the current day and applies Eq. 4/5. A day with an empty score
    // set carries the threshold forward unchanged.
    void roll_day();

    const std::vector<std::pair<double, double>>& history() const { return history_; }
    int day_index() const { return day_; }

    std::string to_json() const;
    static ThresholdState from_json(const std::string& text);

private:
    ThresholdConfig config_;
    double current_ = 0.0;
    int day_ = 0;
    std::vector<double> today_;
    std::vector<std::pair<double, double>> history_; // (C_d, T_d) per closed day
};

} // namespace argus
