#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "msa/data.hpp"
#include "msa/errors.hpp"
#include "msa/fusion.hpp"
#include "msa/metrics.hpp"
#include "msa/run_config.hpp"
#include "msa/training.hpp"

namespace {

constexpr double kGradCheckTol = 1e-4;

struct SynthArgs {
    std::string mode = "easy";
    std::size_t videos = 200;
    std::size_t utterances = 5;
    std::size_t dim = 16;
    double noise = 0.1;
    std::uint64_t seed = 7;
    std::string out;
};

int cmd_synth(const SynthArgs& args) {
    msa::SynthMode mode;
    if (args.mode == "easy") {
        mode = msa::SynthMode::easy;
    } else if (args.mode == "parity") {
        mode = msa::SynthMode::parity;
    } else {
        throw msa::ConfigError("unknown synth mode '" + args.mode + "'");
    }
    msa::Corpus corpus = msa::synth_generate(mode, args.videos, args.utterances,
                                             args.dim, args.noise, args.seed);
    msa::write_corpus(corpus, args.out);
    std::cout << "wrote " << corpus.sequences.size() << " sequences ("
              << corpus.utterance_count() << " utterances, dim "
              << corpus.feature_dim << ") to " << args.out << '\n';
    return 0;
}

// Predicted class indices and binned labels for every utterance, in corpus
// order.
void collect_predictions(const msa::Corpus& corpus,
                         const msa::ModelParams& params,
                         std::vector<int>& preds, std::vector<int>& labels) {
    for (const auto& seq : corpus.sequences) {
        std::vector<int> p = msa::predict(seq, params);
        for (std::size_t t = 0; t < p.size(); ++t) {
            preds.push_back(p[t]);
            labels.push_back(msa::bin_label(seq.utterances[t].label));
        }
    }
}

void check_dims(const msa::Corpus& corpus, const msa::ModelParams& params) {
    if (corpus.feature_dim != params.config.input_dim) {
        throw msa::DimensionError(
            "corpus feature dimension " + std::to_string(corpus.feature_dim) +
            " does not match model input_dim " +
            std::to_string(params.config.input_dim));
    }
}

int cmd_train(const msa::RunConfig& rc) {
    if (rc.data.empty()) {
        throw msa::ConfigError("config key 'data' is required for train");
    }
    msa::Corpus corpus = msa::load_corpus(rc.data);

    msa::FusionConfig fusion = rc.fusion;
    fusion.input_dim = corpus.feature_dim;
    fusion.validate();

    // One user-facing seed fans out to the three seeded stages.
    const std::uint64_t base_seed = rc.train.seed;
    auto [train_corpus, test_corpus] =
        msa::split(corpus, rc.split_fraction, base_seed);
    msa::ModelParams params = msa::ModelParams::init(fusion, base_seed + 1);
    msa::TrainConfig tc = rc.train;
    tc.seed = base_seed + 2;

    if (!rc.test_out.empty()) {
        msa::write_corpus(test_corpus, rc.test_out);
    }

    std::cout << "training on " << train_corpus.sequences.size()
              << " sequences (" << train_corpus.utterance_count()
              << " utterances), holding out " << test_corpus.sequences.size()
              << " sequences\n";

    msa::TrainHistory history = msa::train(train_corpus, params, tc);
    for (const auto& e : history) {
        std::cout << "epoch " << e.epoch << "  loss " << e.mean_loss
                  << "  acc " << e.train_accuracy << '\n';
    }

    msa::save_model(params, rc.model_out);
    msa::write_history(history, rc.history_out);

    std::vector<int> preds, labels;
    collect_predictions(train_corpus, params, preds, labels);
    msa::MetricsReport rep = msa::report(msa::confusion(preds, labels));
    std::cout << "final train metrics: accuracy " << rep.accuracy
              << ", precision " << rep.macro_precision << ", recall "
              << rep.macro_recall << ", f1 " << rep.macro_f1 << '\n';
    std::cout << "wrote model to " << rc.model_out << ", history to "
              << rc.history_out << '\n';
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_path,
             const std::string& out_path) {
    msa::ModelParams params = msa::load_model(model_path);
    msa::Corpus corpus = msa::load_corpus(data_path);
    check_dims(corpus, params);

    std::vector<int> preds, labels;
    collect_predictions(corpus, params, preds, labels);
    msa::ConfusionMatrix cm = msa::confusion(preds, labels);
    const std::string text = msa::render_report(cm, msa::report(cm));

    std::ofstream out(out_path);
    if (!out) {
        throw msa::IoError("cannot write report file " + out_path);
    }
    out << text;
    std::cout << text;
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out_path) {
    msa::ModelParams params = msa::load_model(model_path);
    msa::Corpus corpus = msa::load_corpus(data_path);
    check_dims(corpus, params);

    std::ofstream out(out_path);
    if (!out) {
        throw msa::IoError("cannot write predictions file " + out_path);
    }
    out << "video_id,utterance_index,predicted_class\n";
    for (const auto& seq : corpus.sequences) {
        std::vector<int> p = msa::predict(seq, params);
        for (std::size_t t = 0; t < p.size(); ++t) {
            out << seq.video_id << ','
                << seq.utterances[t].utterance_index << ',' << p[t] << '\n';
        }
    }
    std::cout << "wrote predictions for " << corpus.utterance_count()
              << " utterances to " << out_path << '\n';
    return 0;
}

// Deterministic toy sample for gradient checking: three utterances of
// standard-normal features.
msa::SequenceSample gradcheck_sample(std::size_t input_dim,
                                     std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    msa::SequenceSample sample;
    sample.video_id = "gradcheck";
    const double labels[3] = {-3.0, 0.0, 2.0};
    for (std::size_t t = 0; t < 3; ++t) {
        msa::UtteranceRecord rec;
        rec.video_id = sample.video_id;
        rec.utterance_index = t;
        rec.label = labels[t];
        for (std::size_t i = 0; i < input_dim; ++i) {
            rec.text.push_back(normal(rng));
            rec.audio.push_back(normal(rng));
            rec.visual.push_back(normal(rng));
        }
        sample.utterances.push_back(std::move(rec));
    }
    return sample;
}

int cmd_gradcheck(const std::string& mode, std::size_t heads, double epsilon,
                  std::uint64_t seed) {
    std::vector<msa::FusionMode> modes;
    if (mode == "all") {
        modes = {msa::FusionMode::scalar_gate, msa::FusionMode::hadamard,
                 msa::FusionMode::concat};
    } else {
        modes = {msa::fusion_mode_from_name(mode)};
    }

    msa::SequenceSample sample = gradcheck_sample(4, seed);
    bool ok = true;
    for (msa::FusionMode m : modes) {
        msa::FusionConfig cfg;
        cfg.mode = m;
        cfg.d_model = 8;
        cfg.heads = heads;
        cfg.input_dim = 4;
        msa::ModelParams params = msa::ModelParams::init(cfg, seed);
        msa::GradCheckResult r = msa::grad_check(params, sample, epsilon);
        const bool pass = r.max_rel_error < kGradCheckTol;
        ok = ok && pass;
        std::cout << "fusion=" << msa::fusion_mode_name(m) << " heads=" << heads
                  << " max_rel_error=" << r.max_rel_error << " worst="
                  << r.worst_param << '[' << r.worst_index << "] "
                  << (pass ? "ok" : "FAIL") << '\n';
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "multi-modal sentiment classifier: late-fusion multi-head-attention "
        "LSTM"};
    app.require_subcommand(1);

    SynthArgs synth;
    CLI::App* synth_cmd =
        app.add_subcommand("synth", "generate a synthetic corpus");
    synth_cmd->add_option("--mode", synth.mode, "easy or parity")
        ->capture_default_str();
    synth_cmd->add_option("--videos", synth.videos, "number of sequences")
        ->capture_default_str();
    synth_cmd
        ->add_option("--utterances", synth.utterances,
                     "utterances per sequence")
        ->capture_default_str();
    synth_cmd->add_option("--dim", synth.dim, "feature dimension per modality")
        ->capture_default_str();
    synth_cmd->add_option("--noise", synth.noise, "Gaussian noise sigma")
        ->capture_default_str();
    synth_cmd->add_option("--seed", synth.seed, "RNG seed")
        ->capture_default_str();
    synth_cmd->add_option("--out", synth.out, "output corpus file")
        ->required();

    msa::RunConfig rc;
    std::string train_config_file;
    std::string train_order = "text,audio,visual";
    std::string train_mode = "scalar_gate";
    CLI::App* train_cmd =
        app.add_subcommand("train", "train a model on a corpus");
    train_cmd->add_option("--config", train_config_file,
                          "key = value config file (flags override it)");
    auto* opt_data =
        train_cmd->add_option("--data", rc.data, "training corpus file");
    auto* opt_model_out =
        train_cmd->add_option("--model-out", rc.model_out, "model output file")
            ->capture_default_str();
    auto* opt_history_out =
        train_cmd
            ->add_option("--history-out", rc.history_out, "history CSV output")
            ->capture_default_str();
    auto* opt_test_out =
        train_cmd->add_option("--test-out", rc.test_out,
                              "write the held-out split to this corpus file");
    auto* opt_split =
        train_cmd
            ->add_option("--split", rc.split_fraction,
                         "train fraction of sequences")
            ->capture_default_str();
    auto* opt_seed =
        train_cmd->add_option("--seed", rc.train.seed, "base RNG seed")
            ->capture_default_str();
    auto* opt_epochs =
        train_cmd->add_option("--epochs", rc.train.epochs, "training epochs")
            ->capture_default_str();
    auto* opt_lr = train_cmd
                       ->add_option("--lr", rc.train.learning_rate,
                                    "ADAM learning rate")
                       ->capture_default_str();
    auto* opt_mode =
        train_cmd
            ->add_option("--fusion-mode", train_mode,
                         "scalar_gate, hadamard or concat")
            ->capture_default_str();
    auto* opt_order =
        train_cmd
            ->add_option("--order", train_order,
                         "fusion order, e.g. text,audio,visual")
            ->capture_default_str();
    auto* opt_dmodel =
        train_cmd->add_option("--d-model", rc.fusion.d_model, "hidden width")
            ->capture_default_str();
    auto* opt_heads =
        train_cmd->add_option("--heads", rc.fusion.heads, "attention heads")
            ->capture_default_str();

    std::string eval_model, eval_data, eval_out = "report.txt";
    CLI::App* eval_cmd =
        app.add_subcommand("eval", "evaluate a model on a corpus");
    eval_cmd->add_option("--model", eval_model, "model file")->required();
    eval_cmd->add_option("--data", eval_data, "corpus file")->required();
    eval_cmd->add_option("--out", eval_out, "report output file")
        ->capture_default_str();

    std::string gc_mode = "all";
    std::size_t gc_heads = 1;
    double gc_epsilon = 1e-3;
    std::uint64_t gc_seed = 7;
    CLI::App* gc_cmd = app.add_subcommand(
        "gradcheck",
        "finite-difference check of a tiny model (d_model 8, 3 utterances, "
        "input dim 4)");
    gc_cmd->add_option("--mode", gc_mode,
                       "fusion mode to check, or 'all' for all three")
        ->capture_default_str();
    gc_cmd->add_option("--heads", gc_heads, "attention heads")
        ->capture_default_str();
    gc_cmd
        ->add_option("--epsilon", gc_epsilon,
                     "finite-difference step; the default balances secant "
                     "truncation against rounding on near-zero gradients")
        ->capture_default_str();
    gc_cmd->add_option("--seed", gc_seed, "init and sample seed")
        ->capture_default_str();

    std::string pred_model, pred_data, pred_out = "predictions.csv";
    CLI::App* pred_cmd = app.add_subcommand(
        "predict", "write per-utterance predicted classes for a corpus");
    pred_cmd->add_option("--model", pred_model, "model file")->required();
    pred_cmd->add_option("--data", pred_data, "corpus file")->required();
    pred_cmd->add_option("--out", pred_out, "predictions output file")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (synth_cmd->parsed()) return cmd_synth(synth);
        if (train_cmd->parsed()) {
            // Defaults, then file, then explicit flags.
            msa::RunConfig merged;
            if (!train_config_file.empty()) {
                msa::apply_config_file(merged, train_config_file);
            }
            if (opt_data->count() > 0) merged.data = rc.data;
            if (opt_model_out->count() > 0) merged.model_out = rc.model_out;
            if (opt_history_out->count() > 0)
                merged.history_out = rc.history_out;
            if (opt_test_out->count() > 0) merged.test_out = rc.test_out;
            if (opt_split->count() > 0)
                merged.split_fraction = rc.split_fraction;
            if (opt_seed->count() > 0) merged.train.seed = rc.train.seed;
            if (opt_epochs->count() > 0) merged.train.epochs = rc.train.epochs;
            if (opt_lr->count() > 0)
                merged.train.learning_rate = rc.train.learning_rate;
            if (opt_mode->count() > 0)
                merged.fusion.mode = msa::fusion_mode_from_name(train_mode);
            if (opt_order->count() > 0)
                merged.fusion.order = msa::parse_order(train_order);
            if (opt_dmodel->count() > 0)
                merged.fusion.d_model = rc.fusion.d_model;
            if (opt_heads->count() > 0) merged.fusion.heads = rc.fusion.heads;
            if (!(merged.split_fraction > 0.0 &&
                  merged.split_fraction < 1.0)) {
                throw msa::ConfigError("config key 'split': must lie in (0, 1)");
            }
            return cmd_train(merged);
        }
        if (eval_cmd->parsed()) return cmd_eval(eval_model, eval_data, eval_out);
        if (gc_cmd->parsed())
            return cmd_gradcheck(gc_mode, gc_heads, gc_epsilon, gc_seed);
        if (pred_cmd->parsed())
            return cmd_predict(pred_model, pred_data, pred_out);
    } catch (const msa::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const msa::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
