#include "imugan/cli.hpp"

#include "imugan/features.hpp"
#include "imugan/harness.hpp"
#include "imugan/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <map>
#include <mutex>

namespace imugan {

namespace {

struct Globals {
    std::uint64_t seed = 1;
    std::string config;
    std::string out;
    int jobs = 1;
    std::vector<std::string> overrides;

    bool has_config() const { return !config.empty() || !overrides.empty(); }
};

// Config file contents with `key.path=value` overrides merged in.
Json load_config(const Globals& g) {
    Json doc = g.config.empty() ? Json::object() : read_json(g.config);
    for (const std::string& item : g.overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw IoError("--set expects key=value, got '" + item + "'");
        const std::string value = item.substr(eq + 1);
        Json* node = &doc;
        std::string_view key(item.data(), eq);
        for (auto dot = key.find('.'); dot != std::string_view::npos; dot = key.find('.')) {
            Json& child = (*node)[std::string(key.substr(0, dot))];
            if (!child.is_object()) child = Json::object();
            node = &child;
            key.remove_prefix(dot + 1);
        }
        Json parsed = Json::parse(value, nullptr, false);
        (*node)[std::string(key)] = parsed.is_discarded() ? Json(value) : std::move(parsed);
    }
    return doc;
}

void require_file(const std::string& path, const char* flag) {
    if (path.empty()) throw IoError(std::string("missing required ") + flag);
    if (!fs::exists(path)) throw IoError(path + ": no such file");
}

fs::path sibling(const fs::path& path, const std::string& suffix) {
    return path.parent_path() / (path.stem().string() + suffix);
}

std::vector<std::size_t> labeled_indices(std::span<const Trip> trips) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < trips.size(); ++i)
        if (trips[i].label) idx.push_back(i);
    return idx;
}

std::vector<Trip> labeled_only(std::vector<Trip> trips) {
    std::erase_if(trips, [](const Trip& t) { return !t.label.has_value(); });
    return trips;
}

LabeledSet labeled_rows(const FeatureTable& table, const ScalerParams& scaler, const std::string& where) {
    std::vector<Index> rows;
    LabeledSet set;
    for (std::size_t i = 0; i < table.ids.size(); ++i)
        if (table.labels[i]) {
            rows.push_back(static_cast<Index>(i));
            set.y.push_back(*table.labels[i] == DrivingStyle::aggressive ? 1 : 0);
        }
    if (rows.empty()) throw IoError(where + ": no labeled rows");
    set.x = apply_minmax(scaler, table.features(rows, Eigen::all));
    return set;
}

// ---------------------------------------------------------------------------
// Subcommands

struct SimulateArgs {
    int n = 238;
    int labeled = 60;
};

void cmd_simulate(const Globals& g, const SimulateArgs& a, std::ostream& out) {
    SimulationSettings settings;
    settings.n = a.n;
    settings.labeled = a.labeled;
    settings.seed = g.seed;
    if (g.has_config()) {
        const Json j = load_config(g);
        if (j.contains("normal")) settings.normal = style_profile_from_json(j.at("normal"), settings.normal);
        if (j.contains("aggressive"))
            settings.aggressive = style_profile_from_json(j.at("aggressive"), settings.aggressive);
    }
    const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
    RawCsvWriter writer(dir / "raw.csv", g.seed);
    std::vector<std::string> ids;
    std::vector<DrivingStyle> truth;
    simulate_each(settings, [&](RawTrip&& trip, DrivingStyle style) {
        writer.write(trip);
        ids.push_back(trip.id);
        truth.push_back(style);
    });
    write_ground_truth(dir / "ground_truth.csv", ids, truth, g.seed);
    out << "wrote " << ids.size() << " trips to " << (dir / "raw.csv").string() << '\n';
}

struct PreprocessArgs {
    std::string in;
    int window = 10;
};

void cmd_preprocess(const Globals& g, const PreprocessArgs& a, std::ostream& out) {
    require_file(a.in, "--in");
    std::vector<Trip> conditioned;
    read_raw_csv(a.in, [&](RawTrip&& raw) { conditioned.push_back(condition_trip(raw, a.window)); });
    if (conditioned.empty()) throw IoError(a.in + ": no trips");
    std::vector<std::size_t> fit = labeled_indices(conditioned);
    if (fit.empty())
        for (std::size_t i = 0; i < conditioned.size(); ++i) fit.push_back(i);
    const ProcessedDataset data = scale_dataset(std::move(conditioned), fit);
    const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
    write_trips_csv(dir / "processed.csv", data.trips, g.seed);
    Json scaler = to_json(data.scaler);
    scaler["provenance"] = provenance(g.seed);
    write_json(dir / "scaler.json", scaler);
    out << "wrote " << data.trips.size() << " processed trips to " << (dir / "processed.csv").string() << '\n';
}

struct TrainGanArgs {
    std::string in;
    std::optional<int> epochs, hidden, latent;
};

void cmd_train_gan(const Globals& g, const TrainGanArgs& a, std::ostream& out) {
    require_file(a.in, "--in");
    RcganConfig config;
    if (g.has_config()) config = rcgan_config_from_json(load_config(g), config);
    if (a.epochs) config.epochs = *a.epochs;
    if (a.hidden) config.hidden = *a.hidden;
    if (a.latent) config.latent = *a.latent;
    config.seed = g.seed;
    const std::vector<Trip> trips = labeled_only(read_trips_csv(a.in));
    Rng rng(config.seed);
    const RcganModel model = train_rcgan(trips, config, rng);
    const fs::path dir = g.out.empty() ? fs::path(".") : fs::path(g.out);
    write_json(dir / "generator.json", checkpoint_json(model.generator, config, g.seed));
    write_json(dir / "discriminator.json", checkpoint_json(model.discriminator, config, g.seed));
    write_loss_history(dir / "loss_history.csv", model.history, g.seed);
    out << "trained on " << trips.size() << " trips for " << config.epochs << " epochs; final d_loss="
        << format_double(model.history.back().d_loss) << " g_loss=" << format_double(model.history.back().g_loss)
        << '\n';
}

struct GenerateArgs {
    std::string model;
    double ratio = 1.0;
    int base = 60;
};

void cmd_generate(const Globals& g, const GenerateArgs& a, std::ostream& out) {
    require_file(a.model, "--model");
    RcganConfig config;
    const GeneratorNet gen = generator_from_json(read_json(a.model), &config);
    Rng rng(g.seed);
    const std::vector<Trip> fakes = synthesize(gen, a.ratio, a.base, rng, "fake", config.seq_len);
    const fs::path path = g.out.empty() ? fs::path("fakes.csv") : fs::path(g.out);
    write_trips_csv(path, fakes, g.seed);
    out << "wrote " << fakes.size() << " generated trips to " << path.string() << '\n';
}

struct FeaturesArgs {
    std::string in;
};

void cmd_features(const Globals& g, const FeaturesArgs& a, std::ostream& out) {
    require_file(a.in, "--in");
    const std::vector<Trip> trips = read_trips_csv(a.in);
    const Matrix features = extract_features(trips);
    const fs::path path = g.out.empty() ? fs::path("features.csv") : fs::path(g.out);
    write_features_csv(path, trips, features, g.seed);
    write_feature_legend(sibling(path, "_legend.csv"), g.seed);
    out << "wrote " << trips.size() << " x " << kFeatureCount << " features to " << path.string() << '\n';
}

struct PretrainArgs {
    std::string in;
    int epochs = 100;
    double lr = 0.01;
};

void cmd_pretrain(const Globals& g, const PretrainArgs& a, std::ostream& out) {
    require_file(a.in, "--in");
    const FeatureTable table = read_features_csv(a.in);
    std::vector<Index> rows;
    for (std::size_t i = 0; i < table.ids.size(); ++i)
        if (!table.labels[i]) rows.push_back(static_cast<Index>(i));
    if (rows.empty())
        for (std::size_t i = 0; i < table.ids.size(); ++i) rows.push_back(static_cast<Index>(i));
    if (rows.empty()) throw IoError(a.in + ": no feature rows");
    const Matrix raw = table.features(rows, Eigen::all);
    const ScalerParams scaler = fit_minmax(std::span<const Matrix>(&raw, 1));
    Rng rng(g.seed);
    const AutoencoderFit fit = train_autoencoder(apply_minmax(scaler, raw), a.epochs, a.lr, rng);
    const fs::path path = g.out.empty() ? fs::path("autoencoder.json") : fs::path(g.out);
    write_json(path, autoencoder_json(fit.params, scaler, fit.loss_history, g.seed));
    out << "pretrained on " << rows.size() << " feature vectors; final loss="
        << format_double(fit.loss_history.empty() ? 0.0 : fit.loss_history.back()) << '\n';
}

struct TrainClassifierArgs {
    std::string ae, train, val;
};

void cmd_train_classifier(const Globals& g, const TrainClassifierArgs& a, std::ostream& out) {
    require_file(a.ae, "--ae");
    require_file(a.train, "--train");
    ScalerParams scaler;
    const AutoencoderParams ae = autoencoder_from_json(read_json(a.ae), &scaler);
    GridSpec grid;
    if (g.has_config()) grid = grid_from_json(load_config(g), grid);
    LabeledSet train = labeled_rows(read_features_csv(a.train), scaler, a.train);
    LabeledSet val;
    if (!a.val.empty()) {
        require_file(a.val, "--val");
        val = labeled_rows(read_features_csv(a.val), scaler, a.val);
    } else {
        // Stratified halves of the training file.
        Rng rng(derive_seed(g.seed, "split"));
        std::array<std::vector<Index>, 2> by_class;
        for (std::size_t i = 0; i < train.y.size(); ++i) by_class[static_cast<std::size_t>(train.y[i])].push_back(static_cast<Index>(i));
        std::vector<Index> first, second;
        for (auto& members : by_class) {
            std::shuffle(members.begin(), members.end(), rng);
            for (std::size_t k = 0; k < members.size(); ++k) (k < (members.size() + 1) / 2 ? first : second).push_back(members[k]);
        }
        auto take = [&](const std::vector<Index>& idx) {
            LabeledSet s{train.x(idx, Eigen::all), {}};
            for (Index i : idx) s.y.push_back(train.y[static_cast<std::size_t>(i)]);
            return s;
        };
        val = take(second);
        train = take(first);
    }
    const GridResult result = grid_search(ae, train, val, grid, g.seed);
    Json doc = classifier_json(result.best, scaler, g.seed);
    Json table = Json::array();
    for (const GridEntry& e : result.table)
        table.push_back(Json{{"learning_rate", e.learning_rate},
                             {"epochs", e.epochs},
                             {"activation", to_string(e.activation)},
                             {"validation_auroc", e.validation_auroc}});
    doc["grid"] = std::move(table);
    doc["chosen"] = Json{{"learning_rate", result.best_entry.learning_rate},
                         {"epochs", result.best_entry.epochs},
                         {"activation", to_string(result.best_entry.activation)},
                         {"validation_auroc", result.best_entry.validation_auroc}};
    const fs::path path = g.out.empty() ? fs::path("classifier.json") : fs::path(g.out);
    write_json(path, doc);
    out << "best: lr=" << format_double(result.best_entry.learning_rate) << " epochs=" << result.best_entry.epochs
        << " activation=" << to_string(result.best_entry.activation)
        << " validation_auroc=" << format_double(result.best_entry.validation_auroc) << '\n';
}

struct EvaluateArgs {
    std::string model, in, ground_truth;
};

void cmd_evaluate(const Globals& g, const EvaluateArgs& a, std::ostream& out) {
    require_file(a.model, "--model");
    require_file(a.in, "--in");
    ScalerParams scaler;
    const ClassifierParams model = classifier_from_json(read_json(a.model), &scaler);
    FeatureTable table = read_features_csv(a.in);
    if (!a.ground_truth.empty()) {
        require_file(a.ground_truth, "--ground-truth");
        std::map<std::string, DrivingStyle> truth;
        for (const auto& [id, style] : read_ground_truth(a.ground_truth)) truth[id] = style;
        for (std::size_t i = 0; i < table.ids.size(); ++i) {
            const auto it = truth.find(table.ids[i]);
            if (it == truth.end()) throw IoError(a.ground_truth + ": no entry for trip '" + table.ids[i] + "'");
            table.labels[i] = it->second;
        }
    }
    const LabeledSet set = labeled_rows(table, scaler, a.in);
    const Vector scores = predict_scores(model, set.x);
    const RocResult roc = auroc(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), set.y);
    const fs::path path = g.out.empty() ? fs::path("roc.csv") : fs::path(g.out);
    write_roc_csv(path, roc, g.seed);
    out << "auroc=" << format_double(roc.auc) << " n=" << set.size() << '\n';
}

struct ExperimentArgs {
    std::optional<int> runs, gan_epochs;
    bool baseline_only = false;
};

ExperimentData load_experiment_data(const ExperimentFile& file) {
    if (!file.dataset) return prepare_simulated(file.simulation);
    const std::string dataset = file.dataset->string();
    require_file(dataset, "dataset");
    std::vector<Trip> trips = read_trips_csv(dataset);
    std::map<std::string, DrivingStyle> truth_by_id;
    if (file.ground_truth) {
        require_file(file.ground_truth->string(), "ground_truth");
        for (const auto& [id, style] : read_ground_truth(*file.ground_truth)) truth_by_id[id] = style;
    }
    std::vector<DrivingStyle> truth;
    for (const Trip& t : trips) {
        const auto it = truth_by_id.find(t.id);
        if (it != truth_by_id.end()) truth.push_back(it->second);
        else if (t.label) truth.push_back(*t.label);
        else throw IoError(dataset + ": trip '" + t.id + "' has neither a label nor a ground-truth entry");
    }
    return prepare_from(std::move(trips), truth);
}

void write_run_outputs(const fs::path& dir, const RunResult& run) {
    const std::string stem = "run_" + std::to_string(run.run);
    write_run_csv(dir / (stem + ".csv"), run);
    write_run_markdown(dir / (stem + ".md"), run);
    if (!run.gan_history.empty()) write_loss_history(dir / (stem + "_loss_history.csv"), run.gan_history, run.seed);
    for (const CellResult& c : run.cells)
        write_roc_csv(dir / "roc" / (stem + "_" + cell_label(c.spec) + ".csv"), c.test_roc, run.seed);
}

void cmd_experiment(const Globals& g, const ExperimentArgs& a, bool jobs_given, bool seed_given,
                    std::ostream& out) {
    ExperimentFile file;
    file.config.seed = g.seed;
    file.simulation.seed = g.seed;
    if (g.has_config()) file = experiment_from_json(load_config(g), file);
    if (seed_given) file.config.seed = g.seed;
    if (jobs_given || !g.has_config()) file.config.jobs = g.jobs;
    if (a.runs) file.config.runs = *a.runs;
    if (a.gan_epochs) file.config.rcgan.epochs = *a.gan_epochs;
    if (a.baseline_only) file.config.baseline_only = true;
    file.config.validate();

    const fs::path dir = g.out.empty() ? fs::path("results") : fs::path(g.out);
    Json resolved = to_json(file);
    resolved["provenance"] = provenance(file.config.seed);
    write_json(dir / "config.json", resolved);

    const ExperimentData data = load_experiment_data(file);
    const std::vector<RunResult> results = run_experiments(data, file.config, [&](const RunResult& run) {
        write_run_outputs(dir, run);
        out << "run " << run.run << ": baseline auroc=" << format_double(run.baseline().test_auroc) << '\n';
    });
    if (!file.config.baseline_only) {
        const AggregateReport report = aggregate(results);
        write_aggregate_csv(dir / "aggregate.csv", report, file.config.seed);
        write_aggregate_markdown(dir / "aggregate.md", report, file.config.seed);
        out << "runs with a cell above baseline: " << report.runs_with_any << "/" << report.runs << '\n';
    }
}

struct ReportArgs {
    std::string in;
};

void cmd_report(const Globals& g, const ReportArgs& a, std::ostream& out) {
    if (a.in.empty() || !fs::is_directory(a.in)) throw IoError(a.in + ": not a results directory");
    std::vector<std::pair<int, fs::path>> files;
    for (const auto& entry : fs::directory_iterator(a.in)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("run_", 0) == 0 && entry.path().extension() == ".csv" &&
            name.find("loss_history") == std::string::npos) {
            const std::string number = name.substr(4, name.size() - 8);
            if (!number.empty() && std::all_of(number.begin(), number.end(), ::isdigit))
                files.emplace_back(std::stoi(number), entry.path());
        }
    }
    if (files.empty()) throw IoError(a.in + ": no run_<k>.csv files");
    std::sort(files.begin(), files.end());
    std::vector<RunResult> runs;
    for (const auto& [k, path] : files) runs.push_back(read_run_csv(path));
    const AggregateReport report = aggregate(runs);
    const fs::path dir = g.out.empty() ? fs::path(a.in) : fs::path(g.out);
    write_aggregate_csv(dir / "aggregate.csv", report, g.seed);
    write_aggregate_markdown(dir / "aggregate.md", report, g.seed);
    out << "aggregated " << runs.size() << " runs into " << (dir / "aggregate.csv").string() << '\n';
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Recurrent conditional GAN for IMU driving trips, with extrinsic evaluation", "imugan"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(kVersion));

    Globals g;
    auto* seed_opt = app.add_option("--seed", g.seed, "Base seed for all randomness")->capture_default_str();
    app.add_option("--config", g.config, "JSON configuration file");
    app.add_option("--out", g.out, "Output file or directory");
    app.add_option("--set", g.overrides, "Configuration override key=value (dotted keys nest)");
    auto* jobs_opt = app.add_option("--jobs", g.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Simulate raw 1000 Hz trips (raw.csv, ground_truth.csv)");
    simulate->add_option("--n", sim.n, "Number of trips")->capture_default_str();
    simulate->add_option("--labeled", sim.labeled, "Number of labeled trips")->capture_default_str();

    PreprocessArgs pre;
    auto* preprocess = app.add_subcommand("preprocess", "Downsample, smooth, truncate and scale raw trips");
    preprocess->add_option("--in", pre.in, "Raw trip CSV")->required();
    preprocess->add_option("--window", pre.window, "Moving-average window")->capture_default_str();

    TrainGanArgs gan;
    auto* train_gan = app.add_subcommand("train-gan", "Train the RCGAN on the labeled processed trips");
    train_gan->add_option("--in", gan.in, "Processed trip CSV")->required();
    train_gan->add_option("--epochs", gan.epochs, "Training epochs");
    train_gan->add_option("--hidden", gan.hidden, "LSTM width");
    train_gan->add_option("--latent", gan.latent, "Noise dimension");

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Generate balanced fake trips from a generator checkpoint");
    generate->add_option("--model", gen.model, "Generator checkpoint JSON")->required();
    generate->add_option("--ratio", gen.ratio, "Fake/real ratio")->capture_default_str();
    generate->add_option("--base", gen.base, "Real trip count the ratio refers to")->capture_default_str();

    FeaturesArgs feat;
    auto* features = app.add_subcommand("features", "Extract the 45 statistical features per trip");
    features->add_option("--in", feat.in, "Processed trip CSV")->required();

    PretrainArgs pt;
    auto* pretrain = app.add_subcommand("pretrain-ae", "Pretrain the autoencoder on unlabeled feature rows");
    pretrain->add_option("--in", pt.in, "Feature CSV")->required();
    pretrain->add_option("--epochs", pt.epochs, "Training epochs")->capture_default_str();
    pretrain->add_option("--lr", pt.lr, "ADAM learning rate")->capture_default_str();

    TrainClassifierArgs tc;
    auto* train_clf = app.add_subcommand("train-classifier", "Grid-search the transferred classifier");
    train_clf->add_option("--ae", tc.ae, "Autoencoder JSON")->required();
    train_clf->add_option("--train", tc.train, "Training feature CSV")->required();
    train_clf->add_option("--val", tc.val, "Validation feature CSV (default: half of --train)");

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "Score a feature CSV and write its ROC curve");
    evaluate->add_option("--model", ev.model, "Classifier JSON")->required();
    evaluate->add_option("--in", ev.in, "Feature CSV")->required();
    evaluate->add_option("--ground-truth", ev.ground_truth, "Ground-truth CSV overriding the label column");

    ExperimentArgs ex;
    auto* experiment = app.add_subcommand("experiment", "Run the full combination-grid protocol");
    experiment->add_option("--runs", ex.runs, "Number of runs");
    experiment->add_option("--gan-epochs", ex.gan_epochs, "RCGAN epochs per run");
    experiment->add_flag("--baseline-only", ex.baseline_only, "Skip the RCGAN and evaluate the baseline cell only");

    ReportArgs rep;
    auto* report = app.add_subcommand("report", "Aggregate run_<k>.csv files of a results directory");
    report->add_option("--in", rep.in, "Results directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 2;
    }

    const CLI::App* cmd = app.get_subcommands().front();
    const std::string stage = cmd->get_name();
    try {
        if (cmd == simulate) cmd_simulate(g, sim, out);
        else if (cmd == preprocess) cmd_preprocess(g, pre, out);
        else if (cmd == train_gan) cmd_train_gan(g, gan, out);
        else if (cmd == generate) cmd_generate(g, gen, out);
        else if (cmd == features) cmd_features(g, feat, out);
        else if (cmd == pretrain) cmd_pretrain(g, pt, out);
        else if (cmd == train_clf) cmd_train_classifier(g, tc, out);
        else if (cmd == evaluate) cmd_evaluate(g, ev, out);
        else if (cmd == experiment) cmd_experiment(g, ex, jobs_opt->count() > 0, seed_opt->count() > 0, out);
        else if (cmd == report) cmd_report(g, rep, out);
    } catch (const std::exception& e) {
        err << "error [" << stage << "]: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace imugan
