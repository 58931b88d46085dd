#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "provsense/core/mat.hpp"

namespace provsense {

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct DetectionReport {
    std::vector<double> scores;       // malicious-class probability per node
    std::set<std::size_t> flagged;    // score > tau
    double tau = 0.5;
    bool has_metrics = false;
    Metrics metrics;
};

// score(v) = f_std(v)[malicious]; flagged = { v : score(v) > tau }.
DetectionReport score_and_flag(const Mat& f_std, double tau);

// Confusion-matrix metrics with malicious as the positive class. Precision
// and F1 are 0 when nothing is flagged.
Metrics evaluate(const std::set<std::size_t>& flagged,
                 const std::set<std::size_t>& ground_truth, std::size_t n);

void write_report(const std::string& path, const DetectionReport& r,
                  const std::vector<std::string>& node_keys);

}  // namespace provsense
