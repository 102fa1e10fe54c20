// Command-line surface: train and evaluate boundary-pair segmenters, run the
// frame-classifier baselines, generate synthetic corpora, extract MFCC
// features and audit gradients.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "segmentor/config.hpp"
#include "segmentor/diagnostics.hpp"
#include "segmentor/eval.hpp"
#include "segmentor/synth.hpp"

namespace fs = std::filesystem;
using namespace seg;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
};

// CLI flags override config-file values, which override the defaults.
struct TrainFlags {
    TrainConfig values;
    CLI::Option *epochs = nullptr, *patience = nullptr, *eta = nullptr, *epsilon = nullptr,
                *tau = nullptr, *hidden = nullptr, *layers = nullptr, *bidir = nullptr,
                *dropout = nullptr, *mode = nullptr, *clip = nullptr, *window = nullptr,
                *binarize = nullptr, *verbose = nullptr;
    std::string mode_name = "per-boundary";

    void attach(CLI::App* cmd) {
        epochs = cmd->add_option("--epochs", values.epochs_max, "maximum training epochs");
        patience = cmd->add_option("--patience", values.patience,
                                   "early-stop epochs without dev improvement");
        eta = cmd->add_option("--eta", values.eta, "AdaGrad base learning rate");
        epsilon = cmd->add_option("--epsilon", values.epsilon, "AdaGrad damping");
        tau = cmd->add_option("--tau", values.tau_train, "training cost tolerance, frames");
        hidden = cmd->add_option("--hidden", values.hidden, "LSTM hidden size");
        layers = cmd->add_option("--layers", values.layers, "recurrent layers");
        bidir = cmd->add_option("--bidirectional", values.bidirectional,
                                "bidirectional recurrent stack (true/false)");
        dropout = cmd->add_option("--dropout", values.dropout, "inter-layer dropout rate");
        mode = cmd->add_option("--mode", mode_name, "boundary weights: per-boundary or shared")
                   ->check(CLI::IsMember({"per-boundary", "shared"}));
        clip = cmd->add_option("--clip", values.grad_clip,
                               "global-norm gradient clip (<= 0 disables)");
        window = cmd->add_option("--smooth-window", values.smooth_window,
                                 "baseline posterior smoothing window (odd)");
        binarize = cmd->add_flag("--binarize", values.baseline_binarize,
                                 "baseline: extract the pair from binarized decisions");
        verbose = cmd->add_flag("--verbose", values.verbose, "per-epoch log to stderr");
    }

    TrainConfig resolve(const GlobalOpts& g) const {
        TrainConfig cfg;
        if (!g.config_path.empty()) cfg = load_train_config(g.config_path);
        auto ov = [](CLI::Option* opt, auto& dst, const auto& src) {
            if (opt != nullptr && opt->count() > 0) dst = src;
        };
        ov(epochs, cfg.epochs_max, values.epochs_max);
        ov(patience, cfg.patience, values.patience);
        ov(eta, cfg.eta, values.eta);
        ov(epsilon, cfg.epsilon, values.epsilon);
        ov(tau, cfg.tau_train, values.tau_train);
        ov(hidden, cfg.hidden, values.hidden);
        ov(layers, cfg.layers, values.layers);
        ov(bidir, cfg.bidirectional, values.bidirectional);
        ov(dropout, cfg.dropout, values.dropout);
        if (mode != nullptr && mode->count() > 0)
            cfg.mode = mode_name == "shared" ? WeightMode::Shared : WeightMode::PerBoundary;
        ov(clip, cfg.grad_clip, values.grad_clip);
        ov(window, cfg.smooth_window, values.smooth_window);
        ov(binarize, cfg.baseline_binarize, values.baseline_binarize);
        ov(verbose, cfg.verbose, values.verbose);
        if (g.seed_set) cfg.seed = g.seed;
        validate_train_config(cfg);
        return cfg;
    }
};

std::vector<double> parse_tolerances(const std::string& csv) {
    std::vector<double> out;
    std::istringstream is(csv);
    std::string item;
    while (std::getline(is, item, ',')) {
        if (item.empty()) continue;
        out.push_back(detail::parse_double(item, "tolerance"));
    }
    if (out.empty()) throw DataError("empty tolerance list");
    return out;
}

LoadedDataset load_split(const std::string& manifest, const std::string& split) {
    return load_dataset(load_manifest(manifest, split));
}

void write_history(const fs::path& path, const TrainHistory& h) {
    std::ofstream os(path);
    os << "epoch\ttrain_loss\tdev_cd\n";
    for (std::size_t e = 0; e < h.train_loss.size(); ++e)
        os << e << '\t' << detail::format_double(h.train_loss[e]) << '\t'
           << detail::format_double(h.dev_cd[e]) << (e == h.best_epoch ? "\t*" : "") << '\n';
}

void emit_report(const std::vector<EvalReport>& reports, bool tsv, const std::string& report_path) {
    std::string text = tsv ? render_tsv(reports) : render_text(reports);
    std::cout << text;
    if (!report_path.empty()) {
        std::ofstream os(report_path);
        if (!os) throw DataError("cannot open for writing: " + report_path);
        os << render_tsv(reports);
    }
}

FeatureSequence load_input_features(const std::string& input, const SegmenterModel& model) {
    std::ifstream probe(input, std::ios::binary);
    if (!probe) throw DataError("cannot open: " + input);
    char magic[4] = {0, 0, 0, 0};
    probe.read(magic, 4);
    probe.close();
    if (std::memcmp(magic, "RIFF", 4) == 0) {
        FeatureSequence seq = mfcc(read_wav(input));
        seq.source_id = input;
        if (seq.dim() != model.input_dim)
            throw DataError("computed " + std::to_string(seq.dim()) +
                            "-dim features but the model expects " +
                            std::to_string(model.input_dim));
        return seq;
    }
    return read_features(input);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"boundary-pair sequence segmentation: joint recurrent features "
                 "and max-margin decoding"};
    app.require_subcommand(1);
    GlobalOpts g;
    app.add_option("--config", g.config_path, "training config file (key = value lines)")
        ->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", g.seed, "seed override");
    app.add_option("--out", g.out_dir, "output directory");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
    SynthSpec synth_spec;
    std::uint64_t synth_seed = 1234;
    synth_cmd->add_option("--n-train", synth_spec.n_train, "training utterances");
    synth_cmd->add_option("--n-dev", synth_spec.n_dev, "development utterances");
    synth_cmd->add_option("--n-test", synth_spec.n_test, "test utterances");
    synth_cmd->add_option("--t-min", synth_spec.t_min, "minimum frames per utterance");
    synth_cmd->add_option("--t-max", synth_spec.t_max, "maximum frames per utterance");
    synth_cmd->add_option("--dim", synth_spec.dim, "feature dimensions");
    synth_cmd->add_option("--sigma", synth_spec.noise_sigma, "background noise level");
    synth_cmd->add_option("--delta", synth_spec.contrast, "event contrast");
    synth_cmd->add_option("--min-dur", synth_spec.min_duration, "minimum event frames");
    synth_cmd->add_flag("--jitter", synth_spec.jitter, "add +/-1 frame label noise");

    // train / train-baseline
    auto* train_cmd = app.add_subcommand("train", "train the structured segmenter");
    std::string train_manifest, dev_manifest, model_out = "model.segs";
    train_cmd->add_option("--train", train_manifest, "training manifest")->required();
    train_cmd->add_option("--dev", dev_manifest, "development manifest")->required();
    train_cmd->add_option("--model", model_out, "output checkpoint filename");
    TrainFlags train_flags;
    train_flags.attach(train_cmd);

    auto* trainb_cmd = app.add_subcommand("train-baseline", "train a frame-NLL baseline");
    std::string arch_name = "bi-2-rnn";
    trainb_cmd->add_option("--train", train_manifest, "training manifest")->required();
    trainb_cmd->add_option("--dev", dev_manifest, "development manifest")->required();
    trainb_cmd->add_option("--model", model_out, "output checkpoint filename");
    trainb_cmd->add_option("--arch", arch_name, "rnn, 2-rnn, bi-rnn or bi-2-rnn")
        ->check(CLI::IsMember({"rnn", "2-rnn", "bi-rnn", "bi-2-rnn"}));
    TrainFlags trainb_flags;
    trainb_flags.attach(trainb_cmd);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a manifest");
    std::string eval_model, eval_manifest, tolerances_csv = "2,5,10,15,25,50";
    std::string split_name = "test", report_path;
    bool tsv = false;
    eval_cmd->add_option("--model", eval_model, "checkpoint path")->required();
    eval_cmd->add_option("--manifest", eval_manifest, "evaluation manifest")->required();
    eval_cmd->add_option("--split", split_name, "split label for the report");
    eval_cmd->add_option("--tolerances", tolerances_csv, "tolerance thresholds in ms");
    eval_cmd->add_flag("--tsv", tsv, "print machine-readable TSV instead of the text table");
    eval_cmd->add_option("--report", report_path, "also write the TSV report to this file");

    // segment
    auto* segment_cmd = app.add_subcommand("segment", "segment one utterance");
    std::string seg_model, seg_input;
    segment_cmd->add_option("--model", seg_model, "checkpoint path")->required();
    segment_cmd->add_option("--input", seg_input, "wav or feature file")->required();

    // compare
    auto* compare_cmd = app.add_subcommand("compare", "side-by-side evaluation of checkpoints");
    std::vector<std::string> compare_models;
    compare_cmd->add_option("--model", compare_models, "checkpoint path (repeatable)")
        ->required()
        ->expected(-1);
    compare_cmd->add_option("--manifest", eval_manifest, "evaluation manifest")->required();
    compare_cmd->add_option("--split", split_name, "split label for the report");
    compare_cmd->add_option("--tolerances", tolerances_csv, "tolerance thresholds in ms");
    compare_cmd->add_flag("--tsv", tsv, "print machine-readable TSV");
    compare_cmd->add_option("--report", report_path, "also write the TSV report to this file");

    // mfcc
    auto* mfcc_cmd = app.add_subcommand("mfcc", "extract MFCC features from a wav file");
    std::string mfcc_in, mfcc_out;
    MfccConfig mfcc_cfg;
    mfcc_cmd->add_option("--input", mfcc_in, "wav file")->required();
    mfcc_cmd->add_option("--output", mfcc_out, "output feature file")->required();
    mfcc_cmd->add_option("--window-ms", mfcc_cfg.window_ms, "analysis window, ms");
    mfcc_cmd->add_option("--hop-ms", mfcc_cfg.hop_ms, "hop, ms");
    mfcc_cmd->add_option("--coeffs", mfcc_cfg.n_coeffs, "cepstral coefficients");
    mfcc_cmd->add_option("--mels", mfcc_cfg.n_mels, "mel filters");

    // gradcheck
    auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference audit of the "
                                                     "hinge + BPTT gradients");
    PipelineCheckSpec check_spec;
    std::string check_mode = "per-boundary";
    grad_cmd->add_option("--frames", check_spec.frames, "sequence length");
    grad_cmd->add_option("--dim", check_spec.dim, "input feature dimension");
    grad_cmd->add_option("--hidden", check_spec.hidden, "LSTM hidden size");
    grad_cmd->add_option("--layers", check_spec.layers, "recurrent layers");
    grad_cmd->add_option("--bidirectional", check_spec.bidirectional, "true/false");
    grad_cmd->add_option("--tau", check_spec.tau, "cost tolerance, frames");
    grad_cmd->add_option("--mode", check_mode, "per-boundary or shared")
        ->check(CLI::IsMember({"per-boundary", "shared"}));
    grad_cmd->add_option("--step", check_spec.h, "central-difference step");

    for (CLI::App* sc : app.get_subcommands([](const CLI::App*) { return true; }))
        sc->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        fs::create_directories(g.out_dir);

        if (*synth_cmd) {
            if (seed_opt->count()) synth_seed = g.seed;
            synth_generate(g.out_dir, synth_spec, synth_seed);
            std::cout << "wrote corpus under " << g.out_dir << " (train " << synth_spec.n_train
                      << ", dev " << synth_spec.n_dev << ", test " << synth_spec.n_test << ")\n";
        } else if (*train_cmd || *trainb_cmd) {
            g.seed_set = seed_opt->count() > 0;
            const TrainFlags& flags = *train_cmd ? train_flags : trainb_flags;
            TrainConfig cfg = flags.resolve(g);
            LoadedDataset train = load_split(train_manifest, "train");
            LoadedDataset dev = load_split(dev_manifest, "dev");
            TrainResult r = *train_cmd
                                ? train_structured(train, dev, cfg)
                                : train_baseline(train, dev, cfg, parse_baseline_arch(arch_name));
            fs::path model_path = fs::path(g.out_dir) / model_out;
            save_model_file(model_path.string(), r.model);
            write_history(fs::path(g.out_dir) / (model_path.stem().string() + "_history.tsv"),
                          r.history);
            std::cout << "best dev CD " << detail::fixed4(r.history.dev_cd[r.history.best_epoch])
                      << " frames at epoch " << r.history.best_epoch << " of "
                      << r.history.dev_cd.size() << "; checkpoint: " << model_path.string()
                      << '\n';
        } else if (*eval_cmd) {
            SegmenterModel model = load_model_file(eval_model);
            LoadedDataset ds = load_split(eval_manifest, split_name);
            EvalReport rep = evaluate(model, ds, parse_tolerances(tolerances_csv),
                                      fs::path(eval_model).stem().string(), split_name);
            emit_report({rep}, tsv, report_path);
        } else if (*compare_cmd) {
            LoadedDataset ds = load_split(eval_manifest, split_name);
            std::vector<EvalReport> reports;
            for (const auto& mp : compare_models) {
                SegmenterModel model = load_model_file(mp);
                reports.push_back(evaluate(model, ds, parse_tolerances(tolerances_csv),
                                           fs::path(mp).stem().string(), split_name));
            }
            emit_report(reports, tsv, report_path);
        } else if (*segment_cmd) {
            SegmenterModel model = load_model_file(seg_model);
            FeatureSequence seq = load_input_features(seg_input, model);
            TimingPair pair = predict_pair(model, seq);
            std::cout << "onset_frame=" << pair.onset << " offset_frame=" << pair.offset
                      << " onset_ms=" << detail::fixed4(pair.onset * seq.frame_period_ms)
                      << " offset_ms=" << detail::fixed4(pair.offset * seq.frame_period_ms)
                      << '\n';
        } else if (*mfcc_cmd) {
            FeatureSequence seq = mfcc(read_wav(mfcc_in), mfcc_cfg);
            seq.source_id = mfcc_in;
            write_features(mfcc_out, seq);
            std::cout << "wrote " << seq.frames() << " x " << seq.dim() << " features to "
                      << mfcc_out << '\n';
        } else if (*grad_cmd) {
            if (seed_opt->count()) check_spec.seed = g.seed;
            check_spec.mode =
                check_mode == "shared" ? WeightMode::Shared : WeightMode::PerBoundary;
            PipelineCheckResult r = run_pipeline_grad_check(check_spec);
            std::cout << "max relative gradient error " << r.max_rel_error << " (instance seed "
                      << r.instance_seed << ", argmax margin " << detail::fixed4(r.margin)
                      << ")\n";
            if (r.max_rel_error > 1e-4) {
                std::cerr << "gradient audit FAILED the 1e-4 tolerance\n";
                return 3;
            }
        }
        return 0;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << '\n';
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
