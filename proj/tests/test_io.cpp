#include "imugan/io.hpp"

#include "imugan/features.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

using namespace imugan;

namespace {

class IoTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir = fs::temp_directory_path() / ("imugan_io_" + std::string(info->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
    void write_text(const fs::path& p, const std::string& text) {
        std::ofstream out(p, std::ios::binary);
        out << text;
    }

    fs::path dir;
};

std::vector<Trip> sample_trips(Rng& rng) {
    std::vector<Trip> trips;
    trips.push_back({"a", oracle::uniform_matrix(rng, kTripSeconds, kChannels, -1, 1), DrivingStyle::normal});
    trips.push_back({"b", oracle::uniform_matrix(rng, kTripSeconds, kChannels, -1, 1), DrivingStyle::aggressive});
    trips.push_back({"c", oracle::uniform_matrix(rng, kTripSeconds, kChannels, -1, 1), std::nullopt});
    return trips;
}

RunResult sample_run() {
    RunResult r;
    r.run = 3;
    r.seed = 12345678901234ULL;
    Rng rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const CombinationSpec& spec : table_layout()) {
        CellResult c;
        c.spec = spec;
        c.test_auroc = u(rng);
        c.test_roc.auc = c.test_auroc;
        c.chosen = GridEntry{0.01, 200, Activation::maxout, u(rng)};
        c.train_size = 30;
        c.validation_size = 45;
        c.test_size = 238;
        r.cells.push_back(c);
    }
    return r;
}

} // namespace

TEST(Format, ShortestRoundTripAndNaN) {
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(1.0 / 3.0), "0.3333333333333333");
    EXPECT_EQ(format_double(std::nan("")), "");
    EXPECT_EQ(provenance(7), "imugan 0.1.0 seed=7");
}

TEST_F(IoTest, TripsCsvRoundTripIsExact) {
    Rng rng(1);
    const auto trips = sample_trips(rng);
    write_trips_csv(dir / "trips.csv", trips, 4);
    const auto back = read_trips_csv(dir / "trips.csv");
    ASSERT_EQ(back.size(), trips.size());
    for (std::size_t k = 0; k < trips.size(); ++k) {
        EXPECT_EQ(back[k].id, trips[k].id);
        EXPECT_EQ(back[k].values, trips[k].values);
        EXPECT_EQ(back[k].label, trips[k].label);
    }
    EXPECT_EQ(slurp(dir / "trips.csv").rfind("# imugan 0.1.0 seed=4\ntrip_id,t,long_acc,lat_acc,pitch,yaw,roll,label\n", 0),
              0u);
}

TEST_F(IoTest, RawCsvStreamsTrips) {
    Rng rng(2);
    {
        RawCsvWriter writer(dir / "raw.csv", 1);
        writer.write(RawTrip{"x", oracle::uniform_matrix(rng, 50, kChannels, 0, 1), DrivingStyle::aggressive});
        writer.write(RawTrip{"y", oracle::uniform_matrix(rng, 40, kChannels, 0, 1), std::nullopt});
    }
    const auto raw = read_raw_csv(dir / "raw.csv");
    ASSERT_EQ(raw.size(), 2u);
    EXPECT_EQ(raw[0].samples.rows(), 50);
    EXPECT_EQ(raw[1].id, "y");
    EXPECT_FALSE(raw[1].label.has_value());
    int calls = 0;
    read_raw_csv(dir / "raw.csv", [&](RawTrip&&) { ++calls; });
    EXPECT_EQ(calls, 2);
}

TEST_F(IoTest, MalformedCsvReportsLocation) {
    write_text(dir / "bad.csv",
               "# c\ntrip_id,t,long_acc,lat_acc,pitch,yaw,roll,label\na,0,1,2,3,4,5,normal\na,1,1,x,3,4,5,normal\n");
    try {
        read_trips_csv(dir / "bad.csv");
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("bad.csv:4"), std::string::npos) << e.what();
    }
    write_text(dir / "gap.csv", "trip_id,t,long_acc,lat_acc,pitch,yaw,roll,label\na,0,1,2,3,4,5,normal\n"
                                "a,2,1,2,3,4,5,normal\n");
    EXPECT_THROW(read_trips_csv(dir / "gap.csv"), IoError);
    write_text(dir / "split.csv", "trip_id,t,long_acc,lat_acc,pitch,yaw,roll,label\na,0,1,2,3,4,5,normal\n"
                                  "b,0,1,2,3,4,5,normal\na,1,1,2,3,4,5,normal\n");
    EXPECT_THROW(read_trips_csv(dir / "split.csv"), IoError);
    write_text(dir / "header.csv", "id,t\n");
    EXPECT_THROW(read_trips_csv(dir / "header.csv"), IoError);
    EXPECT_THROW(read_trips_csv(dir / "missing.csv"), IoError);
}

TEST_F(IoTest, GroundTruthRoundTrip) {
    const std::vector<std::string> ids = {"t0", "t1"};
    const std::vector<DrivingStyle> truth = {DrivingStyle::aggressive, DrivingStyle::normal};
    write_ground_truth(dir / "gt.csv", ids, truth, 3);
    const auto back = read_ground_truth(dir / "gt.csv");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0], std::make_pair(std::string("t0"), DrivingStyle::aggressive));
    EXPECT_EQ(back[1], std::make_pair(std::string("t1"), DrivingStyle::normal));
}

TEST_F(IoTest, FeaturesCsvAndLegend) {
    Rng rng(3);
    const auto trips = sample_trips(rng);
    const Matrix features = extract_features(trips);
    write_features_csv(dir / "f.csv", trips, features, 2);
    const FeatureTable table = read_features_csv(dir / "f.csv");
    EXPECT_EQ(table.ids, (std::vector<std::string>{"a", "b", "c"}));
    EXPECT_EQ(table.features, features);
    EXPECT_EQ(table.labels[2], std::nullopt);
    write_feature_legend(dir / "legend.csv", 2);
    const std::string legend = slurp(dir / "legend.csv");
    EXPECT_NE(legend.find("f0,long_acc_mean,long_acc,mean"), std::string::npos);
    EXPECT_NE(legend.find("f44,roll_iqr,roll,iqr"), std::string::npos);
}

TEST(Json, MatrixAndScalerRoundTrip) {
    Rng rng(4);
    const Matrix m = oracle::uniform_matrix(rng, 3, 4, -1, 1);
    EXPECT_EQ(matrix_from_json(to_json(m), "m"), m);
    const Vector v = m.col(1);
    EXPECT_EQ(vector_from_json(to_json(v), "v"), v);
    const Matrix fit = oracle::uniform_matrix(rng, 10, 3, 0, 1);
    ScalerParams s = fit_minmax(std::span<const Matrix>(&fit, 1));
    s.degenerate[1] = true;
    EXPECT_EQ(scaler_from_json(to_json(s)), s);
    Json bad = to_json(m);
    bad["rows"] = 5;
    EXPECT_THROW(matrix_from_json(bad, "m"), IoError);
}

TEST(Json, ConfigsRoundTripAndMerge) {
    RcganConfig c;
    c.hidden = 17;
    c.minimax_generator_loss = true;
    c.smooth = 0.2;
    const RcganConfig back = rcgan_config_from_json(to_json(c));
    EXPECT_EQ(back.hidden, 17);
    EXPECT_TRUE(back.minimax_generator_loss);
    EXPECT_EQ(back.smooth, 0.2);
    EXPECT_EQ(rcgan_config_from_json(Json{{"epochs", 12}}).hidden, 100);
    EXPECT_EQ(rcgan_config_from_json(Json{{"epochs", 12}}).epochs, 12);

    GridSpec g;
    g.epochs = {3, 4};
    g.activations = {Activation::maxout};
    const GridSpec gb = grid_from_json(to_json(g));
    EXPECT_EQ(gb.epochs, g.epochs);
    EXPECT_EQ(gb.activations, g.activations);
    EXPECT_EQ(gb.learning_rates, g.learning_rates);

    StyleProfile p = default_profile(DrivingStyle::aggressive);
    p.channels[3].noise_std = 0.5;
    const StyleProfile pb = style_profile_from_json(to_json(p), default_profile(DrivingStyle::normal));
    EXPECT_EQ(pb.channels[3].noise_std, 0.5);
    EXPECT_EQ(pb.event_rate, p.event_rate);
}

TEST(Json, ExperimentFileRoundTrip) {
    ExperimentFile e;
    e.config.runs = 7;
    e.config.ratios = {0.5, 1.0};
    e.config.rcgan.epochs = 9;
    e.simulation.n = 40;
    e.simulation.labeled = 10;
    const ExperimentFile back = experiment_from_json(to_json(e));
    EXPECT_EQ(back.config.runs, 7);
    EXPECT_EQ(back.config.ratios, e.config.ratios);
    EXPECT_EQ(back.config.rcgan.epochs, 9);
    EXPECT_EQ(back.simulation.n, 40);
    EXPECT_EQ(back.simulation.labeled, 10);
    EXPECT_FALSE(back.dataset.has_value());
    EXPECT_EQ(experiment_from_json(Json{{"runs", 3}}).config.runs, 3);
}

TEST(Json, CheckpointsRoundTripBitwise) {
    RcganConfig c = oracle::small_gan_config();
    Rng rng(5);
    const GeneratorNet g = GeneratorNet::random(c, rng);
    const DiscriminatorNet d = DiscriminatorNet::random(c, rng);
    RcganConfig loaded;
    const GeneratorNet gb = generator_from_json(Json::parse(checkpoint_json(g, c, 1).dump()), &loaded);
    EXPECT_EQ(flatten(gb).values, flatten(g).values);
    EXPECT_EQ(loaded.hidden, c.hidden);
    const DiscriminatorNet db = discriminator_from_json(checkpoint_json(d, c, 1));
    EXPECT_EQ(flatten(db).values, flatten(d).values);
    EXPECT_EQ(checkpoint_json(g, c, 1)["provenance"], provenance(1));
    EXPECT_THROW(generator_from_json(checkpoint_json(d, c, 1)), IoError);
}

TEST(Json, AutoencoderAndClassifierRoundTrip) {
    Rng rng(6);
    const AutoencoderParams ae = init_autoencoder(oracle::kSmallAutoencoder, rng);
    const Matrix fit = oracle::uniform_matrix(rng, 4, 6, 0, 1);
    const ScalerParams s = fit_minmax(std::span<const Matrix>(&fit, 1));
    ScalerParams sb;
    const AutoencoderParams aeb =
        autoencoder_from_json(Json::parse(autoencoder_json(ae, s, std::vector<double>{1.0, 0.5}, 2).dump()), &sb);
    EXPECT_EQ(flatten(aeb).values, flatten(ae).values);
    EXPECT_EQ(sb, s);
    const ClassifierParams model = transfer_weights(ae, Activation::rectifier, rng);
    const ClassifierParams mb = classifier_from_json(Json::parse(classifier_json(model, s, 2).dump()));
    EXPECT_EQ(flatten(mb).values, flatten(model).values);
    EXPECT_EQ(mb.activation, Activation::rectifier);
}

TEST_F(IoTest, LossHistoryRoundTrip) {
    const std::vector<LossRecord> h = {{0, 1.25, 0.5}, {1, 1.0 / 3.0, 0.75}};
    write_loss_history(dir / "loss.csv", h, 1);
    const auto back = read_loss_history(dir / "loss.csv");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].epoch, 1);
    EXPECT_EQ(back[1].d_loss, 1.0 / 3.0);
    EXPECT_EQ(back[1].g_loss, 0.75);
}

TEST_F(IoTest, RocCsvRoundTrip) {
    const std::vector<double> scores = {0.1, 0.4, 0.35, 0.8, 0.4};
    const std::vector<int> labels = {0, 0, 1, 1, 1};
    const RocResult roc = auroc(scores, labels);
    write_roc_csv(dir / "roc.csv", roc, 1);
    const RocResult back = read_roc_csv(dir / "roc.csv");
    ASSERT_EQ(back.curve.size(), roc.curve.size());
    EXPECT_TRUE(std::isinf(back.curve.front().threshold));
    EXPECT_NEAR(back.auc, roc.auc, 1e-15);
}

TEST_F(IoTest, RunCsvRoundTripAndMarkdown) {
    const RunResult run = sample_run();
    write_run_csv(dir / "run.csv", run);
    const RunResult back = read_run_csv(dir / "run.csv");
    EXPECT_EQ(back.run, run.run);
    EXPECT_EQ(back.seed, run.seed);
    ASSERT_EQ(back.cells.size(), 25u);
    for (std::size_t k = 0; k < 25; ++k) {
        EXPECT_EQ(back.cells[k].spec, run.cells[k].spec);
        EXPECT_EQ(back.cells[k].test_auroc, run.cells[k].test_auroc);
        EXPECT_EQ(back.cells[k].chosen.validation_auroc, run.cells[k].chosen.validation_auroc);
        EXPECT_EQ(back.cells[k].chosen.activation, run.cells[k].chosen.activation);
        EXPECT_EQ(back.cells[k].validation_size, 45);
    }

    write_run_markdown(dir / "run.md", run);
    std::istringstream md(slurp(dir / "run.md"));
    std::string line;
    int data_rows = 0, bold = 0, expected_bold = 0;
    for (const CellResult& c : run.cells) expected_bold += !c.spec.is_baseline() && c.test_auroc > run.cells[0].test_auroc;
    while (std::getline(md, line)) {
        if (line.rfind("| R", 0) == 0 || line.rfind("| F", 0) == 0) ++data_rows;
        if (line.find("**") != std::string::npos) ++bold;
    }
    EXPECT_EQ(data_rows, 25);
    EXPECT_EQ(bold, expected_bold);
}

TEST_F(IoTest, AggregateCsvRoundTripWithNaN) {
    const RunResult a = sample_run();
    RunResult b = sample_run();
    for (CellResult& c : b.cells) c.test_auroc = 1.0 - c.test_auroc;
    const std::vector<RunResult> runs = {a, b};
    const AggregateReport report = aggregate(runs);
    write_aggregate_csv(dir / "agg.csv", report, 1);
    EXPECT_EQ(read_aggregate_csv(dir / "agg.csv"), report);

    std::istringstream csv(slurp(dir / "agg.csv"));
    std::string line;
    int rows = 0;
    while (std::getline(csv, line))
        if (!line.empty() && line[0] != '#') ++rows;
    EXPECT_EQ(rows, 1 + 24 + 1);

    write_aggregate_markdown(dir / "agg.md", report, 1);
    const std::string md = slurp(dir / "agg.md");
    EXPECT_NE(md.find("| R+F | R+F |"), std::string::npos);
    EXPECT_NE(md.find("Mean & SD"), std::string::npos);
}

TEST_F(IoTest, JsonErrorsCarryOffsets) {
    write_text(dir / "bad.json", "{\"runs\": 3,,}");
    try {
        read_json(dir / "bad.json");
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("bad.json"), std::string::npos);
    }
}

TEST_F(IoTest, OpenOutputCreatesParents) {
    write_json(dir / "nested" / "deeper" / "x.json", Json{{"a", 1}});
    EXPECT_EQ(read_json(dir / "nested" / "deeper" / "x.json")["a"], 1);
}
