#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "provsense/community/reconstruct.hpp"
#include "provsense/denoise/denoise.hpp"
#include "provsense/detect/detect.hpp"
#include "provsense/embed/embed.hpp"
#include "provsense/model/student.hpp"
#include "provsense/model/teacher.hpp"

namespace provsense {

struct PipelineConfig {
    // Input: either an event file (+ optional .labels sidecar) or a
    // generated scenario.
    std::string events_path;
    std::string labels_path;
    std::size_t scenario_benign = 200;
    double scenario_events_per_entity = 3.0;

    std::uint64_t seed = 0;

    // Stage toggles.
    bool denoise_enabled = true;
    bool ft_enabled = true;
    bool prl_enabled = true;

    DenoiseConfig denoise;
    EmbedConfig embed;

    TeacherVariant teacher_variant = TeacherVariant::GCN;
    TeacherHyper teacher;

    StudentHyper student;

    // Labeled-node budget; 0 means 30% of nodes.
    std::size_t labeled_nodes = 0;

    double tau = 0.5;
    ReconstructConfig reconstruct;

    std::string out_dir;  // empty = no artifacts

    // Flat key=value round trip (lossless for every field above except
    // out_dir, which is a runtime location, not an experiment parameter).
    std::string serialize() const;
    static PipelineConfig parse(const std::string& text);
    std::string hash() const;  // FNV-1a of serialize()
};

struct PipelineResult {
    ProvGraph graph;
    std::vector<std::size_t> malicious_nodes;
    Embedding embedding;
    Mat signals_raw;
    Mat signals;  // denoised (or raw when the stage is off)
    LabelSplit split;
    Mat teacher_soft;
    StudentParams student;
    DetectionReport report;
    Partition partition;
    std::vector<AttackPath> paths;
    std::map<std::string, double> stage_seconds;
};

PipelineResult run_pipeline(const PipelineConfig& cfg);

// Detection mode: score a (possibly perturbed) event stream with an already
// trained student. Loads no teacher state. Train-mask labels transfer by
// node key; unseen nodes are unlabeled and get the mean beta logit.
DetectionReport detect_events(const PipelineConfig& cfg,
                              const std::vector<Event>& events,
                              const Embedding& emb, const StudentParams& student,
                              const LabelSplit& base_split,
                              const std::vector<std::string>& base_keys,
                              ProvGraph* graph_out = nullptr);

struct MimicryPoint {
    std::size_t false_events;
    double mean_malicious_score;
};

// Trains once on the scenario, then re-runs detection after each mimicry
// perturbation level. Counts must be ascending.
std::vector<MimicryPoint> mimicry_sweep(const PipelineConfig& cfg,
                                        const std::vector<std::size_t>& false_event_counts);

void write_manifest(const PipelineConfig& cfg, const PipelineResult& res);

}  // namespace provsense
