#include "emogait/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "emogait/generator.hpp"
#include "emogait/trainer.hpp"

namespace emogait::cli {

namespace {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file: " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

struct GlobalOpts {
    std::uint64_t seed = 0;
    bool verbose = false;
    bool deterministic = false;
    bool print_config = false;
    std::string config_path;
};

/// Resolved model/train configuration: built-in defaults, overridden by the
/// config file, overridden by explicit flags.
struct ResolvedConfig {
    ModelConfig model;
    TrainConfig train;

    void load_file(const std::string& path) {
        nlohmann::json doc = nlohmann::json::parse(read_file(path));
        if (doc.contains("model")) model = ModelConfig::from_json(doc.at("model").dump());
        if (doc.contains("train")) train = TrainConfig::from_json(doc.at("train").dump());
    }

    std::string dump() const {
        nlohmann::ordered_json doc;
        doc["model"] = nlohmann::ordered_json::parse(model.to_json());
        doc["train"] = nlohmann::ordered_json::parse(train.to_json());
        return doc.dump(2);
    }
};

std::optional<FeatureDefinitionTable> load_feature_table(const std::string& path,
                                                         const Skeleton& skeleton) {
    if (path.empty()) return std::nullopt;
    return feature_table_from_json(skeleton, read_file(path));
}

ModelConfig model_config_from_checkpoint_meta(const std::string& meta) {
    nlohmann::json j = nlohmann::json::parse(meta);
    if (!j.contains("model")) throw ValidationError("checkpoint lacks model configuration metadata");
    return ModelConfig::from_json(j.at("model").dump());
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open file for writing: " + path);
    out << text;
}

int cmd_ingest(const std::string& in, const std::string& emotion, const std::string& out_dir,
               const std::string& manifest_path, int stride, int window, bool verbose) {
    if (fs::path(in).extension() != ".bvh") {
        throw ValidationError("ingest expects a .bvh motion file");
    }
    MotionClip clip = parse_bvh(read_file(in), fs::path(in).filename().string());
    std::vector<Gait> gaits = window_and_downsample(clip, stride, window);
    if (verbose) {
        std::cerr << "ingest: " << clip.length() << " frames -> " << gaits.size() << " windows\n";
    }
    fs::create_directories(out_dir);
    CorpusManifest manifest;
    if (fs::exists(manifest_path)) manifest = load_manifest(manifest_path);
    EmotionVector m = parse_emotion(emotion);
    std::string stem = fs::path(in).stem().string();
    fs::path manifest_dir = fs::path(manifest_path).parent_path();
    for (std::size_t w = 0; w < gaits.size(); ++w) {
        gaits[w].emotion = m;
        char name[256];
        std::snprintf(name, sizeof name, "%s_w%03zu.json", stem.c_str(), w);
        fs::path path = fs::path(out_dir) / name;
        save_gait(path.string(), gaits[w]);
        manifest.entries.push_back({fs::relative(path, manifest_dir).string(), m, ""});
    }
    save_manifest(manifest_path, manifest);
    return 0;
}

int cmd_extract(const std::string& in, const std::string& out, const std::string& table_path) {
    Gait gait = load_gait(in);
    auto table = load_feature_table(table_path, gait.skeleton);
    FeatureDefinitionTable defs = table ? *table : default_feature_table(gait.skeleton);
    PhaseFallback fallback{0.0, 0.0};
    GaitFeatures f = extract_gait_features(gait, defs, {}, &fallback);
    std::ofstream os(out, std::ios::binary);
    if (!os) throw ValidationError("cannot open output file: " + out);
    os << "frame";
    for (const std::string& c : FeatureDefinitionTable::column_names()) os << "," << c;
    os << ",h,s,s_bar,delta,kappa,theta,omega\n";
    char buf[64];
    for (int t = 0; t < gait.length(); ++t) {
        auto ti = static_cast<std::size_t>(t);
        os << t;
        auto emit = [&](double v) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            os << buf;
        };
        for (double v : f.affective[ti]) emit(v);
        emit(f.root.height_dev[ti]);
        emit(f.root.speed[ti]);
        emit(f.root.speed_lp[ti]);
        emit(f.root.orient_diff[ti]);
        emit(f.root.curvature[ti]);
        emit(f.stepping.phase[ti]);
        emit(f.stepping.frequency[ti]);
        os << "\n";
    }
    return 0;
}

int cmd_split(const std::string& manifest_path, const std::string& split_text, std::uint64_t seed) {
    CorpusManifest manifest = load_manifest(manifest_path);
    manifest.seed = seed;
    std::array<double, 3> fractions{};
    if (std::sscanf(split_text.c_str(), "%lf,%lf,%lf", &fractions[0], &fractions[1], &fractions[2]) != 3) {
        throw ValidationError("--split expects three comma-separated fractions");
    }
    save_manifest(manifest_path, split_corpus(manifest, fractions));
    return 0;
}

int cmd_train(const std::string& corpus_path, const ResolvedConfig& cfg, const std::string& out,
              const std::string& log_path, const std::string& resume, int stride, int window,
              const std::string& table_path, bool verbose) {
    Corpus corpus = load_corpus(corpus_path, stride, window);
    grad::ParameterStore store;
    if (!resume.empty()) {
        std::string meta = grad::load_checkpoint(resume, store);
        (void)meta;
    } else {
        Rng init_rng = Rng::for_purpose(cfg.train.seed, "init");
        init_model_params(store, cfg.model, init_rng);
    }
    std::optional<FeatureDefinitionTable> table;
    if (!corpus.train.empty()) table = load_feature_table(table_path, corpus.train[0].skeleton);
    TrainResult result = train(corpus, cfg.model, cfg.train, store, table ? &*table : nullptr);
    if (verbose) {
        for (const EpochLog& row : result.log) {
            std::fprintf(stderr, "epoch %d train %.6g val %.6g lr %.6g tf %.4f\n", row.epoch,
                         row.train_total, row.val_total, row.lr, row.tf_prob);
        }
    }
    if (!log_path.empty()) write_loss_log_csv(log_path, result.log);
    if (!out.empty()) write_text(out, result.best_checkpoint);
    std::fprintf(stderr, "train: best epoch %d (val %.6g), checkpoint %s\n", result.best_epoch,
                 result.best_val, out.c_str());
    return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& test_set_path, int stride, int window,
             const std::string& table_path) {
    grad::ParameterStore store;
    std::string meta = grad::load_checkpoint(checkpoint, store);
    ModelConfig mc = model_config_from_checkpoint_meta(meta);
    Corpus corpus = load_corpus(test_set_path, stride, window);
    const std::vector<Gait>& gaits = corpus.test.empty() ? corpus.train : corpus.test;
    std::optional<FeatureDefinitionTable> table;
    if (!gaits.empty()) table = load_feature_table(table_path, gaits[0].skeleton);
    EvalResult r = evaluate(store, mc, gaits, table ? &*table : nullptr);
    std::printf("pose_error=%.17g rotation_error_deg=%.17g\n", r.pose_error, r.rotation_error_deg);
    if (r.clips_skipped > 0) std::fprintf(stderr, "eval: skipped %d short clips\n", r.clips_skipped);
    return 0;
}

void save_rollout(const RolloutResult& rr, const std::string& out_dir, const std::string& name,
                  bool bvh) {
    fs::create_directories(out_dir);
    fs::path path = fs::path(out_dir) / (name + ".json");
    save_gait(path.string(), rr.gait, &rr.schedule.steps);
    if (bvh) {
        MotionClip clip;
        clip.skeleton = rr.gait.skeleton;
        clip.frame_rate = rr.gait.frame_rate;
        std::vector<std::vector<Versor>> rot;
        for (const Pose& f : rr.gait.frames) {
            clip.frames.push_back(f.positions);
            rot.push_back(f.rotations);
        }
        write_text((fs::path(out_dir) / (name + ".bvh")).string(), write_bvh(clip, rot));
    }
    std::fprintf(stderr, "rollout: %d frames, mean stride %.4g, mean path deviation %.4g\n",
                 rr.gait.length(), rr.stats.mean_stride, rr.stats.mean_path_deviation);
}

int cmd_generate(const std::string& checkpoint, const std::string& seed_gait_path,
                 const std::string& trajectory_path, const std::string& emotion,
                 const std::string& emotion_end, int steps, const std::string& out_dir, bool bvh) {
    grad::ParameterStore store;
    std::string meta = grad::load_checkpoint(checkpoint, store);
    ModelConfig mc = model_config_from_checkpoint_meta(meta);
    Gait seed = load_gait(seed_gait_path);
    TrajectorySpec traj = TrajectorySpec::from_file(trajectory_path);
    EmotionVector start = parse_emotion(emotion);
    EmotionVector end = emotion_end.empty() ? start : parse_emotion(emotion_end);
    EmotionSchedule schedule = build_emotion_schedule(start, end, steps);
    RolloutResult rr = rollout(store, mc, seed, traj, schedule, steps);
    save_rollout(rr, out_dir, emotion_end.empty() ? "generated" : "transition", bvh);
    return 0;
}

int cmd_augment(const std::string& checkpoint, const std::string& seed_gait_path, AugmentSpec spec) {
    grad::ParameterStore store;
    std::string meta = grad::load_checkpoint(checkpoint, store);
    ModelConfig mc = model_config_from_checkpoint_meta(meta);
    Gait seed = load_gait(seed_gait_path);
    AugmentResult result = augment_corpus(store, mc, seed, spec);
    save_manifest((fs::path(spec.out_dir) / "manifest.json").string(), result.manifest);
    std::fprintf(stderr, "augment: %d single-emotion + %d transition gaits, %zu failures\n",
                 result.single_emotion_items, result.transition_items, result.failures.size());
    for (const std::string& f : result.failures) std::fprintf(stderr, "augment failure: %s\n", f.c_str());
    return result.failures.empty() ? 0 : 0; // partial manifests are allowed
}

int cmd_export_bvh(const std::string& in, const std::string& out) {
    Gait gait = load_gait(in);
    MotionClip clip;
    clip.skeleton = gait.skeleton;
    clip.frame_rate = gait.frame_rate;
    std::vector<std::vector<Versor>> rot;
    for (const Pose& f : gait.frames) {
        clip.frames.push_back(f.positions);
        rot.push_back(f.rotations);
    }
    write_text(out, write_bvh(clip, rot));
    return 0;
}

} // namespace

int run(const std::vector<std::string>& args) {
    GlobalOpts g;
    ResolvedConfig cfg;

    CLI::App app{"emogait: emotive gait feature extraction, training and synthesis"};
    app.require_subcommand(1);
    app.add_option("--seed", g.seed, "master random seed");
    app.add_flag("--verbose", g.verbose, "diagnostics on stderr");
    app.add_flag("--deterministic", g.deterministic, "single-threaded, fixed-order execution");
    app.add_option("--config", g.config_path, "JSON config file with model/train sections");
    app.add_flag("--print-config", g.print_config, "print the resolved configuration");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "parse a BVH file into windowed gait documents");
    std::string in_path, out_dir = "corpus", manifest_path = "corpus/manifest.json";
    std::string emotion = "0,0,0,1";
    int stride = 4, window = 60;
    ingest->add_option("--in", in_path, "input .bvh file")->required();
    ingest->add_option("--emotion", emotion, "emotion vector h,s,a,n");
    ingest->add_option("--out-dir", out_dir, "output directory for gait documents");
    ingest->add_option("--manifest", manifest_path, "manifest to create or append to");
    ingest->add_option("--stride", stride, "keep every stride-th frame");
    ingest->add_option("--window", window, "frames per gait window");

    // extract
    auto* extract = app.add_subcommand("extract", "per-frame affective + movement features as CSV");
    std::string extract_in, extract_out, feature_table_path;
    extract->add_option("--in", extract_in, "input gait document")->required();
    extract->add_option("--out", extract_out, "output CSV path")->required();
    extract->add_option("--feature-table", feature_table_path, "feature definition config (JSON)");

    // split
    auto* split = app.add_subcommand("split", "assign train/val/test tags in a manifest");
    std::string split_manifest, split_fractions = "0.8,0.1,0.1";
    split->add_option("--manifest", split_manifest, "manifest path")->required();
    split->add_option("--split", split_fractions, "train,val,test fractions");

    // train
    auto* train_cmd = app.add_subcommand("train", "train the encoder/predictor network");
    std::string corpus_path, checkpoint_out = "checkpoint.json", loss_log = "loss_log.csv", resume;
    int epochs_override = -1;
    train_cmd->add_option("--corpus", corpus_path, "corpus manifest")->required();
    train_cmd->add_option("--out", checkpoint_out, "checkpoint output path");
    train_cmd->add_option("--log", loss_log, "per-epoch loss log CSV");
    train_cmd->add_option("--epochs", epochs_override, "override the configured epoch count");
    train_cmd->add_option("--resume", resume, "resume from a checkpoint");
    train_cmd->add_option("--stride", stride, "downsampling stride for BVH entries");
    train_cmd->add_option("--window", window, "window length for BVH entries");
    train_cmd->add_option("--feature-table", feature_table_path, "feature definition config (JSON)");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "18/42-frame prediction error on a test set");
    std::string eval_checkpoint, test_set;
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "trained checkpoint")->required();
    eval_cmd->add_option("--test-set", test_set, "corpus manifest")->required();
    eval_cmd->add_option("--stride", stride, "downsampling stride for BVH entries");
    eval_cmd->add_option("--window", window, "window length for BVH entries");
    eval_cmd->add_option("--feature-table", feature_table_path, "feature definition config (JSON)");

    // generate / transition
    auto* generate = app.add_subcommand("generate", "synthesize a gait along a trajectory");
    auto* transition = app.add_subcommand("transition", "synthesize an emotion transition");
    std::string gen_checkpoint, seed_gait_path, trajectory_path, gen_out_dir = "generated";
    std::string emotion_start = "0,0,0,1", emotion_end_opt;
    int steps = 200;
    bool emit_bvh = false;
    for (CLI::App* cmd : {generate, transition}) {
        cmd->add_option("--checkpoint", gen_checkpoint, "trained checkpoint")->required();
        cmd->add_option("--seed-gait", seed_gait_path, "gait document supplying the seed frames")->required();
        cmd->add_option("--trajectory", trajectory_path, "waypoint file, one 'x z' pair per line")->required();
        cmd->add_option("--steps", steps, "prediction steps");
        cmd->add_option("--out-dir", gen_out_dir, "output directory");
        cmd->add_flag("--bvh", emit_bvh, "also write a BVH export");
    }
    generate->add_option("--emotion", emotion_start, "emotion vector h,s,a,n");
    std::string trans_start = "0,0,0,1", trans_end = "1,0,0,0";
    transition->add_option("--emotion-start", trans_start, "starting emotion h,s,a,n");
    transition->add_option("--emotion-end", trans_end, "final emotion h,s,a,n");

    // augment
    auto* augment = app.add_subcommand("augment", "batch-generate an augmentation corpus");
    AugmentSpec aug;
    aug.out_dir = "augmented";
    augment->add_option("--checkpoint", gen_checkpoint, "trained checkpoint")->required();
    augment->add_option("--seed-gait", seed_gait_path, "gait document supplying the seed frames")->required();
    augment->add_option("--trajectories", aug.trajectories, "number of random trajectories");
    augment->add_option("--emotions", aug.emotions, "number of random emotions per trajectory");
    augment->add_option("--pairs", aug.transition_pairs, "transition pairs per trajectory");
    augment->add_option("--steps", aug.steps, "prediction steps per item");
    augment->add_option("--out-dir", aug.out_dir, "output directory");
    augment->add_flag("--bvh", aug.write_bvh_files, "also write BVH exports");

    // export-bvh
    auto* export_bvh = app.add_subcommand("export-bvh", "convert a gait document to BVH");
    std::string export_in, export_out;
    export_bvh->add_option("--in", export_in, "input gait document")->required();
    export_bvh->add_option("--out", export_out, "output BVH path")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (!g.config_path.empty()) cfg.load_file(g.config_path);
        cfg.train.seed = g.seed != 0 ? g.seed : cfg.train.seed;
        if (epochs_override > 0) cfg.train.epochs = epochs_override;
        if (g.print_config) std::printf("%s\n", cfg.dump().c_str());

        if (ingest->parsed()) {
            return cmd_ingest(in_path, emotion, out_dir, manifest_path, stride, window, g.verbose);
        }
        if (extract->parsed()) return cmd_extract(extract_in, extract_out, feature_table_path);
        if (split->parsed()) return cmd_split(split_manifest, split_fractions, g.seed);
        if (train_cmd->parsed()) {
            return cmd_train(corpus_path, cfg, checkpoint_out, loss_log, resume, stride, window,
                             feature_table_path, g.verbose);
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(eval_checkpoint, test_set, stride, window, feature_table_path);
        }
        if (generate->parsed()) {
            return cmd_generate(gen_checkpoint, seed_gait_path, trajectory_path, emotion_start, "",
                                steps, gen_out_dir, emit_bvh);
        }
        if (transition->parsed()) {
            return cmd_generate(gen_checkpoint, seed_gait_path, trajectory_path, trans_start,
                                trans_end, steps, gen_out_dir, emit_bvh);
        }
        if (augment->parsed()) {
            aug.seed = g.seed;
            aug.threads = resolve_thread_cap(g.deterministic);
            return cmd_augment(gen_checkpoint, seed_gait_path, aug);
        }
        if (export_bvh->parsed()) return cmd_export_bvh(export_in, export_out);
        throw ValidationError("no command given");
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    args.reserve(static_cast<std::size_t>(argc > 0 ? argc - 1 : 0));
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

} // namespace emogait::cli
