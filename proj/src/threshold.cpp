#include "argus/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "argus/error.hpp"

namespace argus {

using json = nlohmann::ordered_json;

double threshold_candidate(const std::vector<double>& day_scores, double beta) {
    if (day_scores.empty()) throw Error("threshold_candidate: empty score set");
    const auto [lo, hi] = std::minmax_element(day_scores.begin(), day_scores.end());
    return *hi + beta * (*hi - *lo);
}

double update_threshold(std::optional<double> prev_threshold, double candidate,
                        double alpha) {
    if (!prev_threshold) return candidate;
    return alpha * *prev_threshold + (1.0 - alpha) * candidate;
}

Decision classify(double score, double threshold) {
    return score <= threshold ? Decision::Benign : Decision::Attack;
}

double alt_threshold(ThresholdStrategy strategy,
                     const std::vector<std::vector<double>>& training_day_scores,
                     const std::vector<double>& prev_day_scores) {
    switch (strategy) {
    case ThresholdStrategy::MeanOfMax: {
        if (training_day_scores.empty())
            throw Error("alt_threshold: MeanOfMax needs training day scores");
        double sum = 0.0;
        for (const auto& day : training_day_scores) {
            if (day.empty()) throw Error("alt_threshold: empty day in training scores");
            sum += *std::max_element(day.begin(), day.end());
        }
        return sum / static_cast<double>(training_day_scores.size());
    }
    case ThresholdStrategy::MeanPlusStdPrevDay: {
        if (prev_day_scores.empty())
            throw Error("alt_threshold: MeanPlusStdPrevDay needs previous-day scores");
        const double mean = std::accumulate(prev_day_scores.begin(), prev_day_scores.end(), 0.0) /
                            static_cast<double>(prev_day_scores.size());
        double var = 0.0;
        for (const double s : prev_day_scores) var += (s - mean) * (s - mean);
        var /= static_cast<double>(prev_day_scores.size()); // population std
        return mean + std::sqrt(var);
    }
    case ThresholdStrategy::MaxOfPrevDays: {
        if (training_day_scores.empty())
            throw Error("alt_threshold: MaxOfPrevDays needs previous days");
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& day : training_day_scores)
            for (const double s : day) best = std::max(best, s);
        if (!std::isfinite(best)) throw Error("alt_threshold: no scores in previous days");
        return best;
    }
    case ThresholdStrategy::ArgusMomentum:
        throw Error("alt_threshold: ArgusMomentum is handled by ThresholdState");
    }
    throw Error("alt_threshold: unknown strategy");
}

ThresholdState::ThresholdState(ThresholdConfig config, double bootstrap_threshold)
    : config_(config), current_(bootstrap_threshold) {
    if (config_.alpha < 0.0 || config_.alpha > 1.0)
        throw Error("ThresholdState: alpha must be in [0,1]");
    if (config_.beta < 0.0) throw Error("ThresholdState: beta must be >= 0");
    if (!std::isfinite(bootstrap_threshold) || bootstrap_threshold < 0.0)
        throw Error("ThresholdState: bootstrap threshold must be finite and >= 0");
}

void ThresholdState::observe(double score, Decision decision) {
    if (config_.exclude_attack_scores && decision == Decision::Attack) return;
    today_.push_back(score);
}

void ThresholdState::roll_day() {
    if (today_.empty()) {
        // Eq. 4 is undefined on an empty set; carry the threshold forward.
        history_.emplace_back(current_, current_);
        ++day_;
        return;
    }
    const double candidate = threshold_candidate(today_, config_.beta);
    current_ = update_threshold(current_, candidate, config_.alpha);
    history_.emplace_back(candidate, current_);
    today_.clear();
    ++day_;
}

std::string ThresholdState::to_json() const {
    json j;
    j["alpha"] = config_.alpha;
    j["beta"] = config_.beta;
    j["exclude_attack_scores"] = config_.exclude_attack_scores;
    j["current"] = current_;
    j["day"] = day_;
    j["today"] = today_;
    json hist = json::array();
    for (const auto& [c, t] : history_) hist.push_back({{"c", c}, {"t", t}});
    j["history"] = hist;
    return j.dump();
}

ThresholdState ThresholdState::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
        ThresholdConfig cfg;
        cfg.alpha = j.at("alpha").get<double>();
        cfg.beta = j.at("beta").get<double>();
        cfg.exclude_attack_scores = j.at("exclude_attack_scores").get<bool>();
        ThresholdState state(cfg, j.at("current").get<double>());
        state.day_ = j.at("day").get<int>();
        state.today_ = j.at("today").get<std::vector<double>>();
        for (const auto& h : j.at("history"))
            state.history_.emplace_back(h.at("c").get<double>(), h.at("t").get<double>());
        return state;
    } catch (const json::exception& e) {
        throw Error(std::string("threshold state: malformed JSON: ") + e.what());
    }
}

} // namespace argus
