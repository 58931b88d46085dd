#include "provsense/detect/detect.hpp"

#include <fstream>

#include "provsense/errors.hpp"

namespace provsense {

DetectionReport score_and_flag(const Mat& f_std, double tau) {
    if (tau < 0.0 || tau > 1.0) throw InvalidConfig("tau must be in [0, 1]");
    DetectionReport r;
    r.tau = tau;
    r.scores.resize(f_std.rows);
    for (std::size_t v = 0; v < f_std.rows; ++v) {
        r.scores[v] = f_std.at(v, f_std.cols - 1);  // malicious class is last
        if (r.scores[v] > tau) r.flagged.insert(v);
    }
    return r;
}

Metrics evaluate(const std::set<std::size_t>& flagged,
                 const std::set<std::size_t>& ground_truth, std::size_t n) {
    std::size_t tp = 0, fp = 0;
    for (std::size_t v : flagged) {
        if (ground_truth.count(v)) ++tp;
        else ++fp;
    }
    std::size_t fn = ground_truth.size() - tp;
    std::size_t tn = n - tp - fp - fn;

    Metrics m;
    m.accuracy = n ? static_cast<double>(tp + tn) / static_cast<double>(n) : 0.0;
    m.precision = flagged.empty() ? 0.0
        : static_cast<double>(tp) / static_cast<double>(tp + fp);
    m.recall = ground_truth.empty() ? 0.0
        : static_cast<double>(tp) / static_cast<double>(ground_truth.size());
    m.f1 = (m.precision + m.recall) > 0.0
        ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

void write_report(const std::string& path, const DetectionReport& r,
                  const std::vector<std::string>& node_keys) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path);
    os.precision(10);
    for (std::size_t v = 0; v < r.scores.size(); ++v) {
        os << node_keys[v] << ' ' << r.scores[v] << ' '
           << (r.flagged.count(v) ? 1 : 0) << '\n';
    }
    os << "# tau " << r.tau << '\n';
    if (r.has_metrics) {
        os << "# ACC " << r.metrics.accuracy << " PR " << r.metrics.precision
           << " RC " << r.metrics.recall << " F1 " << r.metrics.f1 << '\n';
    }
}

}  // namespace provsense
