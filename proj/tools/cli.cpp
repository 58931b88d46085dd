// Command-line front end for the provenance detection pipeline.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "provsense/denoise/denoise.hpp"
#include "provsense/errors.hpp"
#include "provsense/ingest/parser.hpp"
#include "provsense/ingest/scenario.hpp"
#include "provsense/pipeline/pipeline.hpp"

namespace ps = provsense;

namespace {

// Soft-label text files are rows of class probabilities (see save_soft_labels).
ps::Mat load_soft_labels(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ps::DataError("cannot open " + path);
    std::vector<double> vals;
    std::size_t rows = 0, cols = 0;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        double v;
        std::size_t c = 0;
        while (ls >> v) {
            vals.push_back(v);
            ++c;
        }
        if (cols == 0) cols = c;
        else if (c != cols) throw ps::DataError(path + ": ragged soft-label row");
        ++rows;
    }
    if (rows == 0 || cols == 0) throw ps::DataError(path + ": empty soft-label file");
    ps::Mat m(rows, cols);
    m.a = std::move(vals);
    return m;
}

// Detection reports are "node_key score flag" lines with '#' footers.
std::set<std::size_t> load_flagged(const std::string& path, const ps::ProvGraph& g) {
    std::ifstream is(path);
    if (!is) throw ps::DataError("cannot open " + path);
    std::set<std::size_t> flagged;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key;
        double score;
        int flag;
        if (!(ls >> key >> score >> flag))
            throw ps::DataError(path + ": malformed report line");
        if (!flag) continue;
        std::int64_t v = g.index_of(key);
        if (v < 0) throw ps::DataError(path + ": unknown node '" + key + "'");
        flagged.insert(static_cast<std::size_t>(v));
    }
    return flagged;
}

ps::LabelSplit split_from_files(const ps::ProvGraph& g, const std::string& labels_path,
                                std::size_t labeled, std::uint64_t seed) {
    std::vector<std::size_t> malicious;
    if (!labels_path.empty()) {
        for (const std::string& k : ps::read_labels_file(labels_path)) {
            std::int64_t v = g.index_of(k);
            if (v >= 0) malicious.push_back(static_cast<std::size_t>(v));
        }
    }
    if (labeled == 0)
        labeled = static_cast<std::size_t>(0.3 * static_cast<double>(g.n()) + 0.5);
    return ps::make_split(g.n(), malicious, labeled, seed);
}

void print_metrics(const ps::Metrics& m) {
    std::cout.precision(6);
    std::cout << "ACC " << m.accuracy << " PR " << m.precision << " RC " << m.recall
              << " F1 " << m.f1 << '\n';
}

struct SharedOpts {
    std::string config_path;
};

// --config supplies defaults; explicit flags override it afterwards because
// CLI11 applies defaults first and parsed flags last.
ps::PipelineConfig base_config(const std::string& config_path) {
    if (config_path.empty()) return {};
    std::ifstream is(config_path);
    if (!is) throw ps::DataError("cannot open " + config_path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return ps::PipelineConfig::parse(buf.str());
}

void add_pipeline_flags(CLI::App* cmd, ps::PipelineConfig& cfg) {
    cmd->add_option("--events", cfg.events_path, "input event JSONL (omit to synthesize)");
    cmd->add_option("--labels", cfg.labels_path, "ground-truth sidecar for --events");
    cmd->add_option("--benign", cfg.scenario_benign, "synthetic benign entity count");
    cmd->add_option("--events-per-entity", cfg.scenario_events_per_entity,
                    "extra events per benign entity");
    cmd->add_option("--seed", cfg.seed, "master seed");
    cmd->add_flag("--no-denoise{false}", cfg.denoise_enabled, "skip signal denoising");
    cmd->add_flag("--no-ft{false}", cfg.ft_enabled, "ablate the feature-transform branch");
    cmd->add_flag("--no-prl{false}", cfg.prl_enabled, "ablate the label-propagation branch");
    cmd->add_option("--gamma", cfg.denoise.gamma, "denoise regularization strength");
    cmd->add_option("--cg-tol", cfg.denoise.cg_tol, "CG relative tolerance");
    cmd->add_option("--cg-max-iter", cfg.denoise.cg_max_iter, "CG iteration cap");
    cmd->add_option("--dim", cfg.embed.dim, "embedding dimension");
    cmd->add_option("--window", cfg.embed.window, "skip-gram window");
    cmd->add_option("--negatives", cfg.embed.negatives, "negative samples");
    cmd->add_option("--embed-epochs", cfg.embed.epochs, "embedding epochs");
    cmd->add_option("--embed-lr", cfg.embed.lr, "embedding learning rate");
    cmd->add_option("--teacher", [&cfg](const std::vector<std::string>& v) {
        if (v[0] == "gcn") cfg.teacher_variant = ps::TeacherVariant::GCN;
        else if (v[0] == "sgc") cfg.teacher_variant = ps::TeacherVariant::SGC;
        else return false;
        return true;
    }, "teacher variant: gcn|sgc");
    cmd->add_option("--teacher-hidden", cfg.teacher.hidden, "teacher hidden width");
    cmd->add_option("--teacher-lr", cfg.teacher.lr, "teacher learning rate");
    cmd->add_option("--teacher-dropout", cfg.teacher.dropout, "teacher dropout rate");
    cmd->add_option("--teacher-wd", cfg.teacher.weight_decay, "teacher weight decay");
    cmd->add_option("--teacher-epochs", cfg.teacher.epochs, "teacher epochs");
    cmd->add_option("--student-hidden", cfg.student.hidden, "student hidden width");
    cmd->add_option("-K,--k-steps", cfg.student.k_steps, "propagation steps");
    cmd->add_option("--student-lr", cfg.student.lr, "student learning rate");
    cmd->add_option("--student-wd", cfg.student.weight_decay, "student weight decay");
    cmd->add_option("--student-dropout", cfg.student.dropout, "student dropout rate");
    cmd->add_option("--student-epochs", cfg.student.epochs, "student epochs");
    cmd->add_option("--patience", cfg.student.patience, "early-stopping patience");
    cmd->add_option("--labeled", cfg.labeled_nodes, "training label budget (0 = 30%)");
    cmd->add_option("--tau", cfg.tau, "detection threshold");
    cmd->add_option("--lambda", cfg.reconstruct.lambda, "flagged-edge flow up-weight");
    cmd->add_option("--rho", cfg.reconstruct.rho, "core-community malicious fraction");
    cmd->add_option("--teleport", cfg.reconstruct.teleport, "random-walk teleportation");
    cmd->add_option("-o,--out", cfg.out_dir, "artifact directory (default: run-<hash>)");
}

int run_command(ps::PipelineConfig cfg) {
    if (cfg.out_dir.empty()) cfg.out_dir = "run-" + cfg.hash();
    ps::PipelineResult res = ps::run_pipeline(cfg);
    std::cout << "nodes " << res.graph.n() << " edges " << res.graph.edges().size()
              << " flagged " << res.report.flagged.size() << '\n';
    if (res.report.has_metrics) print_metrics(res.report.metrics);
    std::cout << "communities " << res.partition.num_communities << " map-equation "
              << res.partition.map_equation_bits << " bits, paths "
              << res.paths.size() << '\n';
    for (const auto& [stage, secs] : res.stage_seconds)
        std::cout << "stage " << stage << ' ' << secs << " s\n";
    std::cout << "artifacts in " << cfg.out_dir << '\n';
    return 0;
}

int sweep_command(const ps::PipelineConfig& base, const std::string& axis,
                  const std::vector<double>& values, const std::string& csv_path) {
    if (values.empty()) throw ps::UsageError("sweep axis values must be nonempty");
    std::ostringstream csv;
    csv << "axis,value,acc,precision,recall,f1\n";
    for (double v : values) {
        ps::PipelineConfig cfg = base;
        cfg.out_dir.clear();
        if (axis == "embedding_dim") cfg.embed.dim = static_cast<std::size_t>(v);
        else if (axis == "labeled_nodes") cfg.labeled_nodes = static_cast<std::size_t>(v);
        else if (axis == "gamma") cfg.denoise.gamma = v;
        else if (axis == "tau") cfg.tau = v;
        else throw ps::UsageError("unknown sweep axis '" + axis + "'");
        ps::PipelineResult res = ps::run_pipeline(cfg);
        const ps::Metrics& m = res.report.metrics;
        csv << axis << ',' << v << ',' << m.accuracy << ',' << m.precision << ','
            << m.recall << ',' << m.f1 << '\n';
    }
    if (csv_path.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream os(csv_path);
        if (!os) throw ps::DataError("cannot write " + csv_path);
        os << csv.str();
        std::cout << "wrote " << csv_path << '\n';
    }
    return 0;
}

int mimicry_command(const ps::PipelineConfig& cfg, std::vector<std::size_t> counts,
                    const std::string& csv_path) {
    if (counts.empty()) counts = {0, 100, 200, 300, 400, 500};
    auto curve = ps::mimicry_sweep(cfg, counts);
    std::ostringstream csv;
    csv << "false_events,mean_malicious_score\n";
    for (const auto& pt : curve)
        csv << pt.false_events << ',' << pt.mean_malicious_score << '\n';
    if (csv_path.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream os(csv_path);
        if (!os) throw ps::DataError("cannot write " + csv_path);
        os << csv.str();
        std::cout << "wrote " << csv_path << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Provenance-graph threat detection pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("-c,--config", config_path, "key=value config file (flags override)");

    // ingest ----------------------------------------------------------------
    std::string in_path, out_path, labels_path, model_path, signals_path;
    std::string soft_path, report_path;
    auto* c_ingest = app.add_subcommand("ingest", "validate and normalize an event stream");
    c_ingest->add_option("-i,--input", in_path, "event JSONL")->required();
    c_ingest->add_option("-o,--output", out_path, "normalized JSONL output");

    // scenario --------------------------------------------------------------
    auto* c_scen = app.add_subcommand("scenario", "synthesize a benchmark scenario");
    std::size_t sc_benign = 200, sc_mimicry = 0;
    double sc_epe = 3.0;
    std::uint64_t sc_seed = 0;
    c_scen->add_option("--benign", sc_benign, "benign entity count");
    c_scen->add_option("--events-per-entity", sc_epe, "extra events per entity");
    c_scen->add_option("--seed", sc_seed, "seed");
    c_scen->add_option("--mimicry", sc_mimicry, "append N benign-looking false events");
    c_scen->add_option("-o,--output", out_path, "event JSONL output")->required();
    c_scen->add_option("--labels-out", labels_path, "ground-truth sidecar output");

    // build -----------------------------------------------------------------
    auto* c_build = app.add_subcommand("build", "construct the provenance graph");
    std::string edges_path, nodes_path;
    c_build->add_option("-i,--input", in_path, "event JSONL")->required();
    c_build->add_option("--edges", edges_path, "edge table output");
    c_build->add_option("--nodes", nodes_path, "node table output");

    // embed -----------------------------------------------------------------
    auto* c_embed = app.add_subcommand("embed", "train node embeddings");
    ps::EmbedConfig embed_cfg;
    c_embed->add_option("-i,--input", in_path, "event JSONL")->required();
    c_embed->add_option("--dim", embed_cfg.dim, "embedding dimension");
    c_embed->add_option("--window", embed_cfg.window, "skip-gram window");
    c_embed->add_option("--negatives", embed_cfg.negatives, "negative samples");
    c_embed->add_option("--epochs", embed_cfg.epochs, "epochs");
    c_embed->add_option("--lr", embed_cfg.lr, "learning rate");
    c_embed->add_option("--seed", embed_cfg.seed, "seed");
    c_embed->add_option("--model", model_path, "embedding checkpoint output");
    c_embed->add_option("--signals", signals_path, "raw signal checkpoint output");

    // denoise ---------------------------------------------------------------
    auto* c_den = app.add_subcommand("denoise", "smooth signals over the graph");
    ps::DenoiseConfig den_cfg;
    c_den->add_option("-i,--input", in_path, "event JSONL")->required();
    c_den->add_option("--signals", signals_path, "raw signal checkpoint")->required();
    c_den->add_option("-o,--output", out_path, "denoised checkpoint output")->required();
    c_den->add_option("--gamma", den_cfg.gamma, "regularization strength");
    c_den->add_option("--cg-tol", den_cfg.cg_tol, "CG relative tolerance");
    c_den->add_option("--cg-max-iter", den_cfg.cg_max_iter, "CG iteration cap");

    // train-teacher ---------------------------------------------------------
    auto* c_teach = app.add_subcommand("train-teacher", "train the GNN teacher");
    ps::TeacherHyper teach_cfg;
    std::string teach_variant = "gcn";
    std::size_t labeled = 0;
    std::uint64_t seed = 0;
    c_teach->add_option("-i,--input", in_path, "event JSONL")->required();
    c_teach->add_option("--signals", signals_path, "signal checkpoint")->required();
    c_teach->add_option("--labels", labels_path, "ground-truth sidecar")->required();
    c_teach->add_option("--variant", teach_variant, "gcn|sgc")
        ->check(CLI::IsMember({"gcn", "sgc"}));
    c_teach->add_option("--hidden", teach_cfg.hidden, "hidden width");
    c_teach->add_option("--lr", teach_cfg.lr, "learning rate");
    c_teach->add_option("--dropout", teach_cfg.dropout, "dropout rate");
    c_teach->add_option("--weight-decay", teach_cfg.weight_decay, "weight decay");
    c_teach->add_option("--epochs", teach_cfg.epochs, "epochs");
    c_teach->add_option("--labeled", labeled, "label budget (0 = 30%)");
    c_teach->add_option("--seed", seed, "seed");
    c_teach->add_option("--model", model_path, "teacher checkpoint output");
    c_teach->add_option("--soft", soft_path, "soft-label output")->required();

    // distill ---------------------------------------------------------------
    auto* c_dist = app.add_subcommand("distill", "distill the teacher into the student");
    ps::StudentHyper stud_cfg;
    bool ft_only = false, prl_only = false;
    c_dist->add_option("-i,--input", in_path, "event JSONL")->required();
    c_dist->add_option("--signals", signals_path, "signal checkpoint")->required();
    c_dist->add_option("--soft", soft_path, "teacher soft labels")->required();
    c_dist->add_option("--labels", labels_path, "ground-truth sidecar")->required();
    c_dist->add_option("--hidden", stud_cfg.hidden, "hidden width");
    c_dist->add_option("-K,--k-steps", stud_cfg.k_steps, "propagation steps");
    c_dist->add_option("--lr", stud_cfg.lr, "learning rate");
    c_dist->add_option("--weight-decay", stud_cfg.weight_decay, "weight decay");
    c_dist->add_option("--dropout", stud_cfg.dropout, "dropout rate");
    c_dist->add_option("--epochs", stud_cfg.epochs, "epochs");
    c_dist->add_option("--patience", stud_cfg.patience, "early-stopping patience");
    c_dist->add_option("--labeled", labeled, "label budget (0 = 30%)");
    c_dist->add_option("--seed", seed, "seed");
    c_dist->add_flag("--ft-only", ft_only, "disable the propagation branch");
    c_dist->add_flag("--prl-only", prl_only, "disable the feature-transform branch");
    c_dist->add_option("--model", model_path, "student checkpoint output")->required();

    // detect ----------------------------------------------------------------
    auto* c_det = app.add_subcommand("detect", "score nodes with a trained student");
    double tau = 0.5;
    c_det->add_option("-i,--input", in_path, "event JSONL")->required();
    c_det->add_option("--signals", signals_path, "signal checkpoint")->required();
    c_det->add_option("--student", model_path, "student checkpoint")->required();
    c_det->add_option("--labels", labels_path, "ground-truth sidecar (for metrics)");
    c_det->add_option("--labeled", labeled, "label budget used in training (0 = 30%)");
    c_det->add_option("--seed", seed, "split seed used in training");
    c_det->add_option("--tau", tau, "detection threshold");
    c_det->add_option("--report", report_path, "report output")->required();

    // reconstruct -----------------------------------------------------------
    auto* c_rec = app.add_subcommand("reconstruct", "community + attack-path analysis");
    ps::ReconstructConfig rec_cfg;
    std::string comm_path, paths_path, dot_path;
    c_rec->add_option("-i,--input", in_path, "event JSONL")->required();
    c_rec->add_option("--report", report_path, "detection report")->required();
    c_rec->add_option("--lambda", rec_cfg.lambda, "flagged-edge flow up-weight");
    c_rec->add_option("--rho", rec_cfg.rho, "core-community malicious fraction");
    c_rec->add_option("--teleport", rec_cfg.teleport, "random-walk teleportation");
    c_rec->add_option("--seed", rec_cfg.seed, "seed");
    c_rec->add_option("--communities", comm_path, "community table output");
    c_rec->add_option("--paths", paths_path, "attack-path output");
    c_rec->add_option("--dot", dot_path, "flagged-subgraph DOT output");

    // run / sweep / mimicry -------------------------------------------------
    ps::PipelineConfig pipe_cfg;
    auto* c_run = app.add_subcommand("run", "end-to-end pipeline");
    add_pipeline_flags(c_run, pipe_cfg);

    auto* c_sweep = app.add_subcommand("sweep", "one pipeline run per axis value");
    std::string axis, csv_path;
    std::vector<double> axis_values;
    add_pipeline_flags(c_sweep, pipe_cfg);
    c_sweep->add_option("--axis", axis, "embedding_dim|labeled_nodes|gamma|tau")
        ->required()
        ->check(CLI::IsMember({"embedding_dim", "labeled_nodes", "gamma", "tau"}));
    c_sweep->add_option("--values", axis_values, "axis values")->required();
    c_sweep->add_option("--csv", csv_path, "CSV output (default stdout)");

    auto* c_mim = app.add_subcommand("mimicry", "robustness curve under false events");
    std::vector<std::size_t> mim_counts;
    add_pipeline_flags(c_mim, pipe_cfg);
    c_mim->add_option("--counts", mim_counts, "ascending false-event counts");
    c_mim->add_option("--csv", csv_path, "CSV output (default stdout)");

    try {
        // Pre-scan for --config so file values become defaults under the flags.
        for (int i = 1; i + 1 < argc; ++i) {
            std::string a = argv[i];
            if (a == "-c" || a == "--config") config_path = argv[i + 1];
        }
        if (!config_path.empty()) pipe_cfg = base_config(config_path);

        app.parse(argc, argv);

        if (*c_ingest) {
            auto events = ps::parse_events_file(in_path);
            if (!out_path.empty()) ps::write_events_file(out_path, events);
            std::cout << "parsed " << events.size() << " events\n";
            return 0;
        }
        if (*c_scen) {
            ps::ScenarioConfig sc{sc_benign, sc_epe, sc_seed};
            ps::Scenario s = ps::generate_cadets_scenario(sc);
            if (sc_mimicry) s = ps::apply_mimicry(s, sc_mimicry, sc_seed + 1);
            ps::write_events_file(out_path, s.events);
            if (!labels_path.empty()) ps::write_labels_file(labels_path, s.ground_truth);
            std::cout << "wrote " << s.events.size() << " events, "
                      << s.ground_truth.size() << " malicious entities\n";
            return 0;
        }
        if (*c_build) {
            auto g = ps::ProvGraph::build(ps::parse_events_file(in_path));
            if (!edges_path.empty()) g.export_edges(edges_path);
            if (!nodes_path.empty()) g.export_nodes(nodes_path);
            std::cout << "nodes " << g.n() << " edges " << g.edges().size() << '\n';
            return 0;
        }
        if (*c_embed) {
            auto g = ps::ProvGraph::build(ps::parse_events_file(in_path));
            auto sentences = ps::build_sentences(g);
            ps::Embedding emb = ps::Embedding::train(sentences, embed_cfg);
            if (!model_path.empty()) emb.save(model_path);
            if (!signals_path.empty())
                ps::save_signals(signals_path, g.node_keys(),
                                 emb.encode_all(sentences), false);
            std::cout << "vocab " << emb.vocab_size() << " dim " << emb.dim()
                      << " final-loss " << emb.loss_per_epoch().back() << '\n';
            return 0;
        }
        if (*c_den) {
            auto g = ps::ProvGraph::build(ps::parse_events_file(in_path));
            std::vector<std::string> keys;
            ps::Mat x0;
            bool was_denoised;
            ps::load_signals(signals_path, keys, x0, was_denoised);
            if (keys != g.node_keys())
                throw ps::DataError("signal checkpoint does not match the event stream");
            ps::WeightMatrix w = ps::build_weights(g, &x0);
            ps::Mat x = ps::denoise_signals(ps::laplacian(g, w), x0, den_cfg);
            ps::save_signals(out_path, keys, x, true);
            std::cout << "denoised " << x.rows << " x " << x.cols << " signals\n";
            return 0;
        }
        if (*c_teach) {
            auto g = ps::ProvGraph::build(ps::parse_events_file(in_path));
            std::vector<std::string> keys;
            ps::Mat x;
            bool was_denoised;
            ps::load_signals(signals_path, keys, x, was_denoised);
            if (keys != g.node_keys())
                throw ps::DataError("signal checkpoint does not match the event stream");
            ps::standardize_columns(x);
            ps::LabelSplit split = split_from_files(g, labels_path, labeled, seed);
            ps::TeacherVariant variant = teach_variant == "sgc"
                ? ps::TeacherVariant::SGC : ps::TeacherVariant::GCN;
            ps::TeacherResult tr = ps::train_teacher(variant, g.normalized_adjacency(),
                                                     x, split, teach_cfg, seed);
            if (!model_path.empty()) tr.params.save(model_path);
            ps::save_soft_labels(soft_path, tr.soft_labels);
            std::cout << "trained " << teach_variant << ", final loss "
                      << tr.loss_per_epoch.back() << '\n';
            return 0;
        }
        if (*c_dist) {
            auto g = ps::ProvGraph::build(ps::parse_events_file(in_path));
            std::vector<std::string> keys;
            ps::Mat x;
            bool was_denoised;
            ps::load_signals(signals_path, keys, x, was_denoised);
            if (keys != g.node_keys())
                throw ps::DataError("signal checkpoint does not match the event stream");
            std::vector<double> feat_mean, feat_sd;
            ps::standardize_columns(x, &feat_mean, &feat_sd);
            ps::Mat soft = load_soft_labels(soft_path);
            if (soft.rows != g.n())
                throw ps::ShapeMismatch("soft labels do not match the event stream");
            ps::LabelSplit split = split_from_files(g, labels_path, labeled, seed);
            ps::DistillResult dr = ps::distill(soft, g.undirected(), x, split,
                                               stud_cfg, seed, ft_only, prl_only);
            dr.params.feat_mean = std::move(feat_mean);
            dr.params.feat_sd = std::move(feat_sd);
            dr.params.save(model_path);
            std::cout << "distilled in " << dr.objective_per_epoch.size()
                      << " epochs, final objective " << dr.objective_per_epoch.back()
                      << '\n';
            return 0;
        }
        if (*c_det) {
            auto g = ps::ProvGraph::build(ps::parse_events_file(in_path));
            std::vector<std::string> keys;
            ps::Mat x;
            bool was_denoised;
            ps::load_signals(signals_path, keys, x, was_denoised);
            if (keys != g.node_keys())
                throw ps::DataError("signal checkpoint does not match the event stream");
            ps::StudentParams student = ps::StudentParams::load(model_path);
            if (student.feat_mean.size() == x.cols)
                ps::apply_standardization(x, student.feat_mean, student.feat_sd);
            else
                ps::standardize_columns(x);
            ps::LabelSplit split = split_from_files(g, labels_path, labeled, seed);
            ps::Mat f_std = ps::student_forward(student, g.undirected(), x, split);
            ps::DetectionReport r = ps::score_and_flag(f_std, tau);
            if (!labels_path.empty()) {
                std::set<std::size_t> gt;
                for (const std::string& k : ps::read_labels_file(labels_path)) {
                    std::int64_t v = g.index_of(k);
                    if (v >= 0) gt.insert(static_cast<std::size_t>(v));
                }
                r.metrics = ps::evaluate(r.flagged, gt, g.n());
                r.has_metrics = true;
            }
            ps::write_report(report_path, r, g.node_keys());
            std::cout << "flagged " << r.flagged.size() << " of " << g.n() << " nodes\n";
            if (r.has_metrics) print_metrics(r.metrics);
            return 0;
        }
        if (*c_rec) {
            auto g = ps::ProvGraph::build(ps::parse_events_file(in_path));
            std::set<std::size_t> flagged = load_flagged(report_path, g);
            ps::Csr w = ps::flow_weights(g, flagged, rec_cfg.lambda);
            ps::Partition part = ps::detect_communities(g, w, rec_cfg);
            auto paths = ps::classify_and_trace(part, flagged, g, rec_cfg.rho);
            if (!comm_path.empty()) ps::write_communities(comm_path, part, g);
            if (!paths_path.empty()) ps::write_paths(paths_path, paths);
            if (!dot_path.empty()) ps::export_dot(dot_path, g, flagged);
            std::cout << "communities " << part.num_communities << " map-equation "
                      << part.map_equation_bits << " bits, paths " << paths.size()
                      << '\n';
            return 0;
        }
        if (*c_run) return run_command(pipe_cfg);
        if (*c_sweep) return sweep_command(pipe_cfg, axis, axis_values, csv_path);
        if (*c_mim) return mimicry_command(pipe_cfg, mim_counts, csv_path);
        return 1;
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    } catch (const ps::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const ps::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const ps::NumericError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
