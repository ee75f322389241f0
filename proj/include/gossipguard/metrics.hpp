#pragma once

#include "gossipguard/error.hpp"

#include <cstdint>
#include <optional>

namespace gossipguard {

// Empty optional stands for an undefined ratio (zero denominator).
inline std::optional<double> compute_precision(std::uint64_t tp, std::uint64_t fp) {
    if (tp + fp == 0) return std::nullopt;
    return double(tp) / double(tp + fp);
}

inline std::optional<double> compute_recall(std::uint64_t tp, std::uint64_t fn) {
    if (tp + fn == 0) return std::nullopt;
    return double(tp) / double(tp + fn);
}

inline std::optional<double> compute_f1(std::optional<double> precision, std::optional<double> recall) {
    if (!precision || !recall || *precision + *recall == 0.0) return std::nullopt;
    return 2.0 * *precision * *recall / (*precision + *recall);
}

struct DetectionTime {
    std::size_t iterations = 0;
    double seconds = 0.0;
};

// Empty optional means "not detected".
inline std::optional<DetectionTime> detection_time(std::size_t attack_start, std::optional<std::size_t> first_alarm,
                                                   double seconds_per_iteration) {
    if (!first_alarm) return std::nullopt;
    if (*first_alarm < attack_start) throw InputError("detection_time: alarm precedes attack start");
    const std::size_t lag = *first_alarm - attack_start;
    return DetectionTime{lag, double(lag) * seconds_per_iteration};
}

struct Confusion {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;

    void add(bool attacker, bool flagged) {
        if (attacker) (flagged ? tp : fn) += 1;
        else (flagged ? fp : tn) += 1;
    }

    std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
    std::optional<double> precision() const { return compute_precision(tp, fp); }
    std::optional<double> recall() const { return compute_recall(tp, fn); }
    std::optional<double> f1() const { return compute_f1(precision(), recall()); }
};

}  // namespace gossipguard
