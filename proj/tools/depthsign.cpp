// depthsign: train and evaluate stacked sparse-autoencoder sign classifiers
// on depth-image corpora. Subcommands: gen-data, train, eval, predict,
// plot-data. Exit codes: 0 success, 2 usage or validation failure,
// 3 training divergence.

#include <CLI11.hpp>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "depthsign/depthsign.hpp"

namespace fs = std::filesystem;
using namespace depthsign;

namespace {

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path.string());
    out << content;
    if (!out) throw IoError("failed writing file: " + path.string());
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    return content;
}

std::vector<std::size_t> parse_subject_list(const std::string& text) {
    std::vector<std::size_t> ids;
    std::string cur;
    for (char c : text + ",") {
        if (c == ',') {
            const std::string token = detail::trim(cur);
            cur.clear();
            if (token.empty()) continue;
            try {
                std::size_t used = 0;
                ids.push_back(std::stoul(token, &used));
                if (used != token.size()) throw std::invalid_argument(token);
            } catch (const std::logic_error&) {
                throw ParameterError("subjects: expected 'all' or integer ids, got '" +
                                     token + "'");
            }
        } else {
            cur.push_back(c);
        }
    }
    if (ids.empty()) throw ParameterError("subjects: empty selection");
    return ids;
}

// -- gen-data -----------------------------------------------------------------

struct GenDataArgs {
    std::size_t classes = 5;
    std::size_t per_class = 200;
    std::size_t side = 16;
    double noise = 0.05;
    std::size_t subjects = 1;
    std::uint64_t seed = 1;
    std::string out_dir;
};

int run_gen_data(const GenDataArgs& args) {
    if (args.side < 4)
        throw ParameterError("gen-data: side must be at least 4, got " +
                             std::to_string(args.side));
    if (args.classes == 0 || args.per_class == 0 || args.subjects == 0)
        throw ParameterError("gen-data: classes, per-class and subjects must be positive");
    if (args.noise < 0.0) throw ParameterError("gen-data: noise must be non-negative");

    const fs::path out(args.out_dir);
    std::error_code ec;
    fs::create_directories(out / "images", ec);
    if (ec) throw IoError("cannot create output directory: " + (out / "images").string());

    std::vector<std::string> class_names;
    for (std::size_t k = 0; k < args.classes; ++k)
        class_names.push_back("g" + std::to_string(k));

    std::vector<ManifestRecord> records;
    for (std::size_t s = 0; s < args.subjects; ++s) {
        RngState rng = derive_stream(args.seed, s);
        const Dataset ds =
            synth_gestures(args.classes, args.per_class, args.side, args.noise, rng);
        std::vector<std::size_t> index_in_class(args.classes, 0);
        for (const auto& img : ds.images) {
            char name[64];
            std::snprintf(name, sizeof(name), "su%zu_g%zu_%04zu.pgm", s, img.label,
                          index_in_class[img.label]++);
            write_pgm(out / "images" / name, img.width, img.height, img.pixels);
            records.push_back({std::string("images/") + name, img.label, s});
        }
    }
    save_manifest(out / "manifest.tsv", class_names, records);
    std::cout << "wrote " << records.size() << " images and "
              << (out / "manifest.tsv").string() << "\n";
    return 0;
}

// -- train ---------------------------------------------------------------------

struct SubjectOutcome {
    std::size_t subject = 0;
    SubjectEval eval;
};

SubjectOutcome train_one_subject(const Dataset& ds, const RunConfig& cfg,
                                 std::size_t subject, const fs::path& out_dir) {
    RngState rng = derive_stream(cfg.seed, subject);
    const std::vector<std::size_t> indices = indices_of_subject(ds, subject);
    const Split split = split_dataset(ds, indices, cfg.fractions(), rng);

    GreedyResult result = greedy_train(ds, split, cfg.pipeline, rng);
    TrainTrace ft_trace;
    if (cfg.pipeline.fine_tune.enabled) {
        auto [tuned, trace] = fine_tune(result.net, ds, split, cfg.pipeline.fine_tune, rng);
        result.net = std::move(tuned);
        ft_trace = std::move(trace);
    }

    const fs::path subject_dir = out_dir / ("su" + std::to_string(subject));
    fs::create_directories(subject_dir);

    RunConfig snapshot_cfg = cfg;
    snapshot_cfg.subjects = std::to_string(subject);
    // the snapshot records what reproduces the model, not run plumbing
    snapshot_cfg.out_dir = RunConfig{}.out_dir;
    snapshot_cfg.parallel_subjects = RunConfig{}.parallel_subjects;
    save_network(subject_dir / "model.dsnw", result.net, config_snapshot(snapshot_cfg));
    save_autoencoder(subject_dir / "ae1.dsae", result.ae1);
    save_autoencoder(subject_dir / "ae2.dsae", result.ae2);
    write_text_file(subject_dir / "trace_ae1.csv", trace_to_csv(result.traces.ae1));
    write_text_file(subject_dir / "trace_ae2.csv", trace_to_csv(result.traces.ae2));
    write_text_file(subject_dir / "trace_head.csv", trace_to_csv(result.traces.head));
    if (cfg.pipeline.fine_tune.enabled)
        write_text_file(subject_dir / "trace_finetune.csv", trace_to_csv(ft_trace));

    // score the validation partition
    const Matrix x_val = to_columns(ds, split.validation);
    const std::vector<std::size_t> truth = labels_at(ds, split.validation);
    const Prediction pred = predict(result.net, x_val);

    SubjectOutcome outcome;
    outcome.subject = subject;
    outcome.eval.cm = confusion(truth, pred.labels, ds.class_count);
    outcome.eval.posteriors = pred.posteriors;
    outcome.eval.targets = one_hot(truth, ds.class_count);

    std::string cm_csv = "true\\pred";
    for (std::size_t j = 0; j < ds.class_count; ++j)
        cm_csv += "," + ds.class_names[j];
    cm_csv += "\n";
    for (std::size_t i = 0; i < ds.class_count; ++i) {
        cm_csv += ds.class_names[i];
        for (std::size_t j = 0; j < ds.class_count; ++j)
            cm_csv += "," + std::to_string(outcome.eval.cm.at(i, j));
        cm_csv += "\n";
    }
    write_text_file(subject_dir / "confusion.csv", cm_csv);
    return outcome;
}

int run_train(const RunConfig& cfg) {
    validate_run_config(cfg);
    if (cfg.manifest.empty()) throw ParameterError("train: --manifest is required");

    const Dataset ds = load_dataset(cfg.manifest);
    if (ds.images.empty()) throw ParameterError("train: dataset is empty");
    if (ds.class_count < 2) throw ParameterError("train: need at least two classes");

    std::vector<std::size_t> subjects;
    if (cfg.subjects == "all") {
        subjects = subject_ids(ds);
    } else {
        subjects = parse_subject_list(cfg.subjects);
        const auto known = subject_ids(ds);
        for (std::size_t id : subjects)
            if (std::find(known.begin(), known.end(), id) == known.end())
                throw ParameterError("train: subject " + std::to_string(id) +
                                     " not present in the dataset");
    }

    const fs::path out_dir(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + out_dir.string());

    std::vector<SubjectOutcome> outcomes(subjects.size());
    if (cfg.parallel_subjects <= 1) {
        for (std::size_t i = 0; i < subjects.size(); ++i)
            outcomes[i] = train_one_subject(ds, cfg, subjects[i], out_dir);
    } else {
        std::size_t next = 0;
        while (next < subjects.size()) {
            const std::size_t batch =
                std::min(cfg.parallel_subjects, subjects.size() - next);
            std::vector<std::future<SubjectOutcome>> futures;
            for (std::size_t i = 0; i < batch; ++i)
                futures.push_back(std::async(std::launch::async, train_one_subject,
                                             std::cref(ds), std::cref(cfg),
                                             subjects[next + i], out_dir));
            for (std::size_t i = 0; i < batch; ++i)
                outcomes[next + i] = futures[i].get();
            next += batch;
        }
    }

    std::vector<SubjectEval> evals;
    evals.reserve(outcomes.size());
    for (auto& outcome : outcomes) evals.push_back(std::move(outcome.eval));
    const EvalReport rep = report(evals);

    const std::string table = format_report_table(rep);
    write_text_file(out_dir / "report.txt", table);
    write_text_file(out_dir / "report.csv", report_to_csv(rep));
    std::cout << table;
    return 0;
}

// -- eval ------------------------------------------------------------------------

struct EvalArgs {
    std::vector<std::string> models;
    std::string manifest;
    std::string partition = "validation";
    std::string out_dir = ".";
};

int run_eval(const EvalArgs& args) {
    if (args.models.empty()) throw ParameterError("eval: --model is required");
    if (args.partition != "train" && args.partition != "validation" &&
        args.partition != "test")
        throw ParameterError("eval: partition must be train, validation or test");

    const Dataset ds = load_dataset(args.manifest);
    if (ds.images.empty()) throw ParameterError("eval: dataset is empty");
    const std::size_t input_dim =
        ds.images.front().width * ds.images.front().height;

    std::vector<SubjectEval> evals;
    for (const auto& model_path : args.models) {
        const NetworkBundle bundle = load_network(model_path);
        if (bundle.net.layer_dims.front() != input_dim)
            throw ParameterError("eval: model " + model_path + " expects input dimension " +
                                 std::to_string(bundle.net.layer_dims.front()) +
                                 " but the dataset images are " +
                                 std::to_string(ds.images.front().width) + "x" +
                                 std::to_string(ds.images.front().height) + " = " +
                                 std::to_string(input_dim) + " pixels");
        if (bundle.net.layer_dims.back() != ds.class_count)
            throw ParameterError("eval: model " + model_path + " has " +
                                 std::to_string(bundle.net.layer_dims.back()) +
                                 " classes but the dataset declares " +
                                 std::to_string(ds.class_count));

        const RunConfig cfg = config_from_snapshot(bundle.config_snapshot);
        std::size_t subject = 0;
        if (cfg.subjects != "all") {
            const auto ids = parse_subject_list(cfg.subjects);
            if (ids.size() != 1)
                throw ParameterError("eval: bundle " + model_path +
                                     " does not identify a single subject");
            subject = ids.front();
        } else {
            const auto ids = subject_ids(ds);
            if (ids.size() != 1)
                throw ParameterError("eval: bundle " + model_path +
                                     " carries no subject and the dataset has several");
            subject = ids.front();
        }

        RngState rng = derive_stream(cfg.seed, subject);
        const std::vector<std::size_t> indices = indices_of_subject(ds, subject);
        if (indices.empty())
            throw ParameterError("eval: subject " + std::to_string(subject) +
                                 " not present in the dataset");
        const Split split = split_dataset(ds, indices, cfg.fractions(), rng);
        const std::vector<std::size_t>* part = &split.validation;
        if (args.partition == "train") part = &split.train;
        if (args.partition == "test") part = &split.test;
        if (part->empty())
            throw ParameterError("eval: the " + args.partition + " partition is empty");

        const Matrix x = to_columns(ds, *part);
        const std::vector<std::size_t> truth = labels_at(ds, *part);
        const Prediction pred = predict(bundle.net, x);
        SubjectEval ev;
        ev.cm = confusion(truth, pred.labels, ds.class_count);
        ev.posteriors = pred.posteriors;
        ev.targets = one_hot(truth, ds.class_count);
        evals.push_back(std::move(ev));
    }

    const EvalReport rep = report(evals);
    const std::string table = format_report_table(rep);
    const fs::path out_dir(args.out_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + out_dir.string());
    write_text_file(out_dir / "report.csv", report_to_csv(rep));
    write_text_file(out_dir / "report.txt", table);
    std::cout << table;
    return 0;
}

// -- predict ----------------------------------------------------------------------

struct PredictArgs {
    std::string model;
    std::vector<std::string> images;
};

int run_predict(const PredictArgs& args) {
    const NetworkBundle bundle = load_network(args.model);
    const std::size_t input_dim = bundle.net.layer_dims.front();
    for (const auto& image_path : args.images) {
        const DepthImage img = read_pgm(image_path);
        if (img.pixels.size() != input_dim)
            throw ParameterError("predict: " + image_path + " is " +
                                 std::to_string(img.width) + "x" +
                                 std::to_string(img.height) + " = " +
                                 std::to_string(img.pixels.size()) +
                                 " pixels, model expects " + std::to_string(input_dim));
        Matrix x(input_dim, 1);
        for (std::size_t i = 0; i < input_dim; ++i) x(i, 0) = img.pixels[i];
        const Prediction pred = predict(bundle.net, x);
        std::string line = image_path + "\t" + std::to_string(pred.labels[0]);
        char buf[32];
        for (std::size_t r = 0; r < pred.posteriors.rows(); ++r) {
            std::snprintf(buf, sizeof(buf), "%.17g", pred.posteriors(r, 0));
            line += std::string("\t") + buf;
        }
        std::cout << line << "\n";
    }
    return 0;
}

// -- plot-data ---------------------------------------------------------------------

struct PlotDataArgs {
    std::string report_csv;
    std::string out_dir = ".";
};

int run_plot_data(const PlotDataArgs& args) {
    const EvalReport rep = parse_report_csv(read_text_file(args.report_csv));
    const fs::path out_dir(args.out_dir);
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory: " + out_dir.string());

    const char* files[4] = {"nrmse.csv", "acc.csv", "f1s.csv", "ber.csv"};
    const char* headers[4] = {"subject,nrmse", "subject,acc", "subject,f1s",
                              "subject,ber"};
    for (std::size_t metric = 0; metric < 4; ++metric) {
        std::string csv = std::string(headers[metric]) + "\n";
        char buf[48];
        for (std::size_t s = 0; s < rep.subjects.size(); ++s) {
            double value = 0.0;
            switch (metric) {
                case 0: value = rep.subjects[s].nrmse; break;
                case 1: value = rep.subjects[s].acc; break;
                case 2: value = rep.subjects[s].f1; break;
                default: value = rep.subjects[s].ber; break;
            }
            std::snprintf(buf, sizeof(buf), "su%zu,%.17g\n", s + 1, value);
            csv += buf;
        }
        write_text_file(out_dir / files[metric], csv);
    }
    std::cout << "wrote nrmse.csv acc.csv f1s.csv ber.csv under " << out_dir.string()
              << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"depthsign: stacked sparse-autoencoder classifier for depth-image signs"};
    app.require_subcommand(1);

    GenDataArgs gen_args;
    CLI::App* gen = app.add_subcommand("gen-data", "write a synthetic gesture corpus");
    gen->add_option("--classes", gen_args.classes, "number of gesture classes");
    gen->add_option("--per-class", gen_args.per_class, "images per class per subject");
    gen->add_option("--side", gen_args.side, "image side length in pixels");
    gen->add_option("--noise", gen_args.noise, "uniform noise amplitude");
    gen->add_option("--subjects", gen_args.subjects, "number of subjects");
    gen->add_option("--seed", gen_args.seed, "random seed")->envname("DEPTHSIGN_SEED");
    gen->add_option("--out", gen_args.out_dir, "output directory")->required();

    CLI::App* train = app.add_subcommand("train", "greedy layer-wise training per subject");
    std::map<std::string, std::string> train_cli_values;
    std::string train_config_path;
    bool paper_defaults = false;
    for (const auto& key : config_keys()) {
        std::string names = "--" + key.name;
        if (key.name.find('_') != std::string::npos) {
            std::string hyphenated = key.name;
            for (char& c : hyphenated)
                if (c == '_') c = '-';
            names += ",--" + hyphenated;
        }
        train->add_option_function<std::string>(
            names,
            [&train_cli_values, name = key.name](const std::string& value) {
                train_cli_values[name] = value;
            },
            key.help);
    }
    train->add_option("--config", train_config_path, "key = value configuration file");
    train->add_flag("--paper-defaults", paper_defaults,
                    "use the full-scale protocol values (hidden 100/50, epochs "
                    "400/100/400, split 50/25/25)");

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "score trained models on a partition");
    eval->add_option("--model", eval_args.models, "model bundle paths (one per subject)")
        ->required();
    eval->add_option("--manifest", eval_args.manifest, "dataset manifest")->required();
    eval->add_option("--partition", eval_args.partition, "train, validation or test");
    eval->add_option("--out", eval_args.out_dir, "directory for report.csv/report.txt");

    PredictArgs predict_args;
    CLI::App* predict_cmd = app.add_subcommand("predict", "classify individual images");
    predict_cmd->add_option("--model", predict_args.model, "model bundle path")->required();
    predict_cmd->add_option("images", predict_args.images, "PGM image paths")->required();

    PlotDataArgs plot_args;
    CLI::App* plot = app.add_subcommand("plot-data", "emit per-figure metric CSVs");
    plot->add_option("--report", plot_args.report_csv, "report.csv from train or eval")
        ->required();
    plot->add_option("--out", plot_args.out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) return run_gen_data(gen_args);
        if (train->parsed()) {
            RunConfig cfg;
            if (paper_defaults) apply_paper_defaults(cfg);
            std::map<std::string, std::string> file_values;
            if (!train_config_path.empty())
                file_values = parse_config_file(train_config_path);
            apply_config_values(cfg, file_values);
            apply_config_values(cfg, train_cli_values);
            if (!train_cli_values.count("seed") && !file_values.count("seed")) {
                if (const char* env_seed = std::getenv("DEPTHSIGN_SEED"))
                    apply_config_values(cfg, {{"seed", env_seed}});
            }
            return run_train(cfg);
        }
        if (eval->parsed()) return run_eval(eval_args);
        if (predict_cmd->parsed()) return run_predict(predict_args);
        if (plot->parsed()) return run_plot_data(plot_args);
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
