#include "provsense/pipeline/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "provsense/denoise/denoise.hpp"
#include "provsense/errors.hpp"
#include "provsense/ingest/parser.hpp"
#include "provsense/ingest/scenario.hpp"

namespace provsense {

namespace fs = std::filesystem;

namespace {

class StageTimer {
public:
    StageTimer(std::map<std::string, double>& sink, std::string name)
        : sink_(sink), name_(std::move(name)),
          start_(std::chrono::steady_clock::now()) {}
    ~StageTimer() {
        auto end = std::chrono::steady_clock::now();
        sink_[name_] = std::chrono::duration<double>(end - start_).count();
    }

private:
    std::map<std::string, double>& sink_;
    std::string name_;
    std::chrono::steady_clock::time_point start_;
};

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(fnv1a(buf.str())));
    return hex;
}

std::vector<Event> load_or_generate(const PipelineConfig& cfg,
                                    std::vector<std::string>& gt_keys) {
    if (!cfg.events_path.empty()) {
        auto events = parse_events_file(cfg.events_path);
        if (!cfg.labels_path.empty()) gt_keys = read_labels_file(cfg.labels_path);
        return events;
    }
    ScenarioConfig sc;
    sc.n_benign = cfg.scenario_benign;
    sc.events_per_entity = cfg.scenario_events_per_entity;
    sc.seed = cfg.seed;
    Scenario s = generate_cadets_scenario(sc);
    gt_keys = s.ground_truth;
    return s.events;
}

Mat encode_signals(const ProvGraph& g, const Embedding& emb) {
    return emb.encode_all(build_sentences(g));
}

Mat maybe_denoise(const PipelineConfig& cfg, const ProvGraph& g, const Mat& raw) {
    if (!cfg.denoise_enabled) return raw;
    WeightMatrix w = build_weights(g, &raw);
    Csr lap = laplacian(g, w);
    return denoise_signals(lap, raw, cfg.denoise);
}

}  // namespace

std::string PipelineConfig::serialize() const {
    std::ostringstream os;
    os.precision(17);
    os << "events_path=" << events_path << '\n'
       << "labels_path=" << labels_path << '\n'
       << "scenario_benign=" << scenario_benign << '\n'
       << "scenario_events_per_entity=" << scenario_events_per_entity << '\n'
       << "seed=" << seed << '\n'
       << "denoise_enabled=" << (denoise_enabled ? 1 : 0) << '\n'
       << "ft_enabled=" << (ft_enabled ? 1 : 0) << '\n'
       << "prl_enabled=" << (prl_enabled ? 1 : 0) << '\n'
       << "gamma=" << denoise.gamma << '\n'
       << "cg_tol=" << denoise.cg_tol << '\n'
       << "cg_max_iter=" << denoise.cg_max_iter << '\n'
       << "embed_dim=" << embed.dim << '\n'
       << "embed_window=" << embed.window << '\n'
       << "embed_negatives=" << embed.negatives << '\n'
       << "embed_epochs=" << embed.epochs << '\n'
       << "embed_lr=" << embed.lr << '\n'
       << "teacher_variant=" << (teacher_variant == TeacherVariant::GCN ? "gcn" : "sgc") << '\n'
       << "teacher_hidden=" << teacher.hidden << '\n'
       << "teacher_lr=" << teacher.lr << '\n'
       << "teacher_dropout=" << teacher.dropout << '\n'
       << "teacher_weight_decay=" << teacher.weight_decay << '\n'
       << "teacher_epochs=" << teacher.epochs << '\n'
       << "student_hidden=" << student.hidden << '\n'
       << "student_k=" << student.k_steps << '\n'
       << "student_lr=" << student.lr << '\n'
       << "student_weight_decay=" << student.weight_decay << '\n'
       << "student_dropout=" << student.dropout << '\n'
       << "student_epochs=" << student.epochs << '\n'
       << "student_patience=" << student.patience << '\n'
       << "labeled_nodes=" << labeled_nodes << '\n'
       << "tau=" << tau << '\n'
       << "lambda=" << reconstruct.lambda << '\n'
       << "rho=" << reconstruct.rho << '\n'
       << "teleport=" << reconstruct.teleport << '\n';
    return os.str();
}

PipelineConfig PipelineConfig::parse(const std::string& text) {
    PipelineConfig cfg;
    std::istringstream is(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidConfig("config line " + std::to_string(line_no) + ": missing '='");
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        try {
            if (key == "events_path") cfg.events_path = val;
            else if (key == "labels_path") cfg.labels_path = val;
            else if (key == "scenario_benign") cfg.scenario_benign = std::stoull(val);
            else if (key == "scenario_events_per_entity") cfg.scenario_events_per_entity = std::stod(val);
            else if (key == "seed") cfg.seed = std::stoull(val);
            else if (key == "denoise_enabled") cfg.denoise_enabled = val != "0";
            else if (key == "ft_enabled") cfg.ft_enabled = val != "0";
            else if (key == "prl_enabled") cfg.prl_enabled = val != "0";
            else if (key == "gamma") cfg.denoise.gamma = std::stod(val);
            else if (key == "cg_tol") cfg.denoise.cg_tol = std::stod(val);
            else if (key == "cg_max_iter") cfg.denoise.cg_max_iter = std::stoull(val);
            else if (key == "embed_dim") cfg.embed.dim = std::stoull(val);
            else if (key == "embed_window") cfg.embed.window = std::stoull(val);
            else if (key == "embed_negatives") cfg.embed.negatives = std::stoull(val);
            else if (key == "embed_epochs") cfg.embed.epochs = std::stoull(val);
            else if (key == "embed_lr") cfg.embed.lr = std::stod(val);
            else if (key == "teacher_variant")
                cfg.teacher_variant = val == "sgc" ? TeacherVariant::SGC : TeacherVariant::GCN;
            else if (key == "teacher_hidden") cfg.teacher.hidden = std::stoull(val);
            else if (key == "teacher_lr") cfg.teacher.lr = std::stod(val);
            else if (key == "teacher_dropout") cfg.teacher.dropout = std::stod(val);
            else if (key == "teacher_weight_decay") cfg.teacher.weight_decay = std::stod(val);
            else if (key == "teacher_epochs") cfg.teacher.epochs = std::stoull(val);
            else if (key == "student_hidden") cfg.student.hidden = std::stoull(val);
            else if (key == "student_k") cfg.student.k_steps = std::stoull(val);
            else if (key == "student_lr") cfg.student.lr = std::stod(val);
            else if (key == "student_weight_decay") cfg.student.weight_decay = std::stod(val);
            else if (key == "student_dropout") cfg.student.dropout = std::stod(val);
            else if (key == "student_epochs") cfg.student.epochs = std::stoull(val);
            else if (key == "student_patience") cfg.student.patience = std::stoull(val);
            else if (key == "labeled_nodes") cfg.labeled_nodes = std::stoull(val);
            else if (key == "tau") cfg.tau = std::stod(val);
            else if (key == "lambda") cfg.reconstruct.lambda = std::stod(val);
            else if (key == "rho") cfg.reconstruct.rho = std::stod(val);
            else if (key == "teleport") cfg.reconstruct.teleport = std::stod(val);
            else throw InvalidConfig("unknown config key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw InvalidConfig("config line " + std::to_string(line_no) +
                                ": bad value for " + key);
        }
    }
    if (!cfg.ft_enabled && !cfg.prl_enabled)
        throw InvalidConfig("at least one of FT/PRL must be enabled");
    return cfg;
}

std::string PipelineConfig::hash() const {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(fnv1a(serialize())));
    return hex;
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    if (!cfg.ft_enabled && !cfg.prl_enabled)
        throw InvalidConfig("at least one of FT/PRL must be enabled");

    PipelineResult res;
    std::vector<std::string> gt_keys;
    std::vector<Event> events;
    {
        StageTimer t(res.stage_seconds, "ingest");
        events = load_or_generate(cfg, gt_keys);
    }
    {
        StageTimer t(res.stage_seconds, "build");
        res.graph = ProvGraph::build(events);
    }
    for (const std::string& k : gt_keys) {
        std::int64_t v = res.graph.index_of(k);
        if (v >= 0) res.malicious_nodes.push_back(static_cast<std::size_t>(v));
    }

    {
        StageTimer t(res.stage_seconds, "embed");
        EmbedConfig ec = cfg.embed;
        ec.seed = cfg.seed;
        res.embedding = Embedding::train(build_sentences(res.graph), ec);
        res.signals_raw = encode_signals(res.graph, res.embedding);
    }
    {
        StageTimer t(res.stage_seconds, "denoise");
        res.signals = maybe_denoise(cfg, res.graph, res.signals_raw);
    }
    Mat model_input = res.signals;
    std::vector<double> feat_mean, feat_sd;
    standardize_columns(model_input, &feat_mean, &feat_sd);

    const std::size_t n = res.graph.n();
    std::size_t labeled = cfg.labeled_nodes
        ? cfg.labeled_nodes
        : static_cast<std::size_t>(std::lround(0.3 * static_cast<double>(n)));
    res.split = make_split(n, res.malicious_nodes, labeled, cfg.seed);

    Csr a_hat = res.graph.normalized_adjacency();
    {
        StageTimer t(res.stage_seconds, "teacher");
        TeacherResult tr = train_teacher(cfg.teacher_variant, a_hat, model_input,
                                         res.split, cfg.teacher, cfg.seed);
        res.teacher_soft = std::move(tr.soft_labels);
        if (!cfg.out_dir.empty()) {
            fs::create_directories(cfg.out_dir);
            tr.params.save(cfg.out_dir + "/teacher.bin");
        }
    }
    {
        StageTimer t(res.stage_seconds, "distill");
        DistillResult dr = distill(res.teacher_soft, res.graph.undirected(),
                                   model_input, res.split, cfg.student, cfg.seed,
                                   /*ft_only=*/!cfg.prl_enabled,
                                   /*prl_only=*/!cfg.ft_enabled);
        res.student = std::move(dr.params);
        res.student.feat_mean = feat_mean;
        res.student.feat_sd = feat_sd;
    }
    {
        StageTimer t(res.stage_seconds, "detect");
        Mat f_std = student_forward(res.student, res.graph.undirected(),
                                    model_input, res.split);
        res.report = score_and_flag(f_std, cfg.tau);
        // Labeled malicious training nodes are known indicators; detection
        // reports them alongside the thresholded scores.
        for (std::size_t v = 0; v < n; ++v)
            if (res.split.train_mask[v] && res.split.label[v] == 1)
                res.report.flagged.insert(v);
        if (!res.malicious_nodes.empty() || !gt_keys.empty()) {
            std::set<std::size_t> gt(res.malicious_nodes.begin(), res.malicious_nodes.end());
            res.report.metrics = evaluate(res.report.flagged, gt, n);
            res.report.has_metrics = true;
        }
    }
    {
        StageTimer t(res.stage_seconds, "reconstruct");
        Csr w = flow_weights(res.graph, res.report.flagged, cfg.reconstruct.lambda);
        ReconstructConfig rc = cfg.reconstruct;
        rc.seed = cfg.seed;
        res.partition = detect_communities(res.graph, w, rc);
        res.paths = classify_and_trace(res.partition, res.report.flagged,
                                       res.graph, cfg.reconstruct.rho);
    }

    if (!cfg.out_dir.empty()) {
        fs::create_directories(cfg.out_dir);
        write_events_file(cfg.out_dir + "/events.jsonl", events);
        write_labels_file(cfg.out_dir + "/events.labels", gt_keys);
        res.graph.export_edges(cfg.out_dir + "/graph.edges");
        res.graph.export_nodes(cfg.out_dir + "/graph.nodes");
        res.embedding.save(cfg.out_dir + "/embedding.bin");
        save_signals(cfg.out_dir + "/signals_raw.bin", res.graph.node_keys(),
                     res.signals_raw, false);
        save_signals(cfg.out_dir + "/signals.bin", res.graph.node_keys(),
                     res.signals, cfg.denoise_enabled);
        save_soft_labels(cfg.out_dir + "/teacher_soft.txt", res.teacher_soft);
        res.student.save(cfg.out_dir + "/student.bin");
        write_report(cfg.out_dir + "/report.txt", res.report, res.graph.node_keys());
        write_communities(cfg.out_dir + "/communities.txt", res.partition, res.graph);
        write_paths(cfg.out_dir + "/paths.txt", res.paths);
        export_dot(cfg.out_dir + "/flagged.dot", res.graph, res.report.flagged);
        write_manifest(cfg, res);
    }
    return res;
}

DetectionReport detect_events(const PipelineConfig& cfg,
                              const std::vector<Event>& events,
                              const Embedding& emb, const StudentParams& student,
                              const LabelSplit& base_split,
                              const std::vector<std::string>& base_keys,
                              ProvGraph* graph_out) {
    ProvGraph g = ProvGraph::build(events);
    Mat raw = encode_signals(g, emb);
    Mat x = maybe_denoise(cfg, g, raw);
    if (student.feat_mean.size() == x.cols)
        apply_standardization(x, student.feat_mean, student.feat_sd);
    else
        standardize_columns(x);

    // Transfer the train labels by key; anything new is unlabeled test.
    const std::size_t n = g.n();
    LabelSplit split;
    split.label.assign(n, 0);
    split.train_mask.assign(n, 0);
    split.test_mask.assign(n, 1);
    for (std::size_t i = 0; i < base_keys.size(); ++i) {
        std::int64_t v = g.index_of(base_keys[i]);
        if (v < 0) continue;
        split.label[v] = base_split.label[i];
        if (base_split.train_mask[i]) {
            split.train_mask[v] = 1;
            split.test_mask[v] = 0;
        }
    }

    StudentParams p = student;
    if (p.beta_logits.size() < n) {
        double mean = 0.0;
        for (double b : p.beta_logits) mean += b;
        if (!p.beta_logits.empty()) mean /= static_cast<double>(p.beta_logits.size());
        p.beta_logits.resize(n, mean);
    } else if (p.beta_logits.size() > n) {
        p.beta_logits.resize(n);
    }

    Mat f_std = student_forward(p, g.undirected(), x, split);
    DetectionReport r = score_and_flag(f_std, cfg.tau);
    for (std::size_t v = 0; v < n; ++v)
        if (split.train_mask[v] && split.label[v] == 1) r.flagged.insert(v);
    if (graph_out) *graph_out = std::move(g);
    return r;
}

std::vector<MimicryPoint> mimicry_sweep(const PipelineConfig& cfg,
                                        const std::vector<std::size_t>& counts) {
    for (std::size_t i = 1; i < counts.size(); ++i)
        if (counts[i] < counts[i - 1])
            throw InvalidConfig("false event counts must be ascending");

    PipelineConfig base = cfg;
    base.out_dir.clear();
    PipelineResult trained = run_pipeline(base);

    ScenarioConfig sc;
    sc.n_benign = cfg.scenario_benign;
    sc.events_per_entity = cfg.scenario_events_per_entity;
    sc.seed = cfg.seed;
    Scenario scenario = generate_cadets_scenario(sc);

    std::vector<MimicryPoint> curve;
    for (std::size_t count : counts) {
        Scenario perturbed = apply_mimicry(scenario, count, cfg.seed + 1);
        ProvGraph g;
        DetectionReport r = detect_events(cfg, perturbed.events, trained.embedding,
                                          trained.student, trained.split,
                                          trained.graph.node_keys(), &g);
        double mean = 0.0;
        std::size_t hits = 0;
        for (const std::string& k : scenario.ground_truth) {
            std::int64_t v = g.index_of(k);
            if (v < 0) continue;
            mean += r.scores[static_cast<std::size_t>(v)];
            ++hits;
        }
        curve.push_back({count, hits ? mean / static_cast<double>(hits) : 0.0});
    }
    return curve;
}

void write_manifest(const PipelineConfig& cfg, const PipelineResult& res) {
    std::ofstream os(cfg.out_dir + "/manifest.txt");
    if (!os) throw DataError("cannot write manifest");
    os << "config_hash " << cfg.hash() << '\n';
    os << "seed " << cfg.seed << '\n';
    os << "nodes " << res.graph.n() << '\n';
    os << "edges " << res.graph.edges().size() << '\n';
    for (const auto& [stage, secs] : res.stage_seconds)
        os << "stage " << stage << ' ' << secs << '\n';
    for (const char* name :
         {"events.jsonl", "graph.edges", "embedding.bin", "signals.bin",
          "teacher_soft.txt", "student.bin", "report.txt", "communities.txt"}) {
        std::string path = cfg.out_dir + "/" + name;
        if (fs::exists(path)) os << "artifact " << name << ' ' << fnv1a_file(path) << '\n';
    }
    std::ofstream cfgfile(cfg.out_dir + "/config.txt");
    cfgfile << cfg.serialize();
}

}  // namespace provsense
