#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "app.hpp"
#include "config.hpp"
#include "readoutsim/io.hpp"
#include "readoutsim/json.hpp"

namespace fs = std::filesystem;
using namespace rsim;
using namespace rsim::cli;

namespace {

struct Invocation {
    int status = 0;
    std::string out;
    std::string err;
};

Invocation invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "readoutsim");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    int status = run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {status, out.str(), err.str()};
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
    auto pos = text.find(from);
    EXPECT_NE(pos, std::string::npos) << from;
    if (pos != std::string::npos) {
        text.replace(pos, from.size(), to);
    }
    return text;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class CliTest : public ::testing::Test {
   protected:
    void SetUp() override {
        dir_ = fs::path(::testing::TempDir()) /
               ("readoutsim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        unsetenv("REPRO_SEED");
    }
    void TearDown() override {
        unsetenv("REPRO_SEED");
        fs::remove_all(dir_);
    }

    std::string write_config(const std::string& text, const std::string& name = "run.yaml") {
        fs::path p = dir_ / name;
        std::ofstream(p, std::ios::binary) << text;
        return p.string();
    }

    fs::path dir_;
};

Json without_timestamp(Json j) {
    j["metadata"].erase("generated_at_utc");
    return j;
}

}  // namespace

TEST(Config, DefaultsMatchMeasuredDevice) {
    RunConfig c = parse_config(paper_defaults());
    EXPECT_EQ(c.device, reference_device());
    EXPECT_EQ(c.chain_profile, "slug");
    EXPECT_EQ(c.chain(), slug_chain());
    EXPECT_EQ(c.chains.at("hemt"), hemt_chain());
    EXPECT_EQ(c.prep, PreparationModel{});
    EXPECT_EQ(c.seed, 7u);
    EXPECT_EQ(c.shots, 40000u);

    ExperimentSetup s = make_setup(c, 1);
    ExperimentSetup ref = reference_setup(7);
    EXPECT_EQ(s.pulse, ref.pulse);
    EXPECT_EQ(s.filter, ref.filter);
    EXPECT_EQ(s.optimize_window, ref.optimize_window);
    EXPECT_EQ(s.optimize_phase, ref.optimize_phase);
    EXPECT_EQ(s.window_grid, ref.window_grid);
    EXPECT_EQ(s.histogram_bins, ref.histogram_bins);
    EXPECT_EQ(c.ga, GaConfig{});
    ASSERT_TRUE(c.postselect);
    EXPECT_EQ(*c.postselect, PostSelectionTiming{});
}

TEST(Config, UnitsComeFromKeyNames) {
    std::string text = replace(paper_defaults(), "t1_us: 2.8", "t1_us: 12.5");
    text = replace(text, "window_length_ns: 200", "window_length_ns: 150");
    RunConfig c = parse_config(text);
    EXPECT_DOUBLE_EQ(c.device.t1, 12.5e-6);
    EXPECT_DOUBLE_EQ(c.readout.filter.window_length, 150e-9);
    EXPECT_DOUBLE_EQ(c.device.cavity_freq, 8.081e9);
    EXPECT_DOUBLE_EQ(c.readout.drive_freq, 8.0762e9);
    ASSERT_TRUE(c.qnd_delays);
    EXPECT_DOUBLE_EQ(c.qnd_delays->at(1), 0.25e-6);
}

TEST(Config, UnknownKeyIsNamedWithItsPath) {
    std::string text = replace(paper_defaults(), "cavity_freq_ghz:", "cavity_freq_gz:");
    try {
        parse_config(text);
        FAIL() << "accepted an unknown key";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("device.cavity_freq_gz"), std::string::npos) << e.what();
    }
    text = replace(paper_defaults(), "      power_gain_db: 40", "      power_gain_db: 40\n      gain_db: 3");
    try {
        parse_config(text);
        FAIL() << "accepted an unknown key";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("chain.profiles.hemt.gain_db"), std::string::npos) << e.what();
    }
}

TEST(Config, MissingKeyIsNamed) {
    std::string text = replace(paper_defaults(), "  t2_star_us: 2.0\n", "");
    try {
        parse_config(text);
        FAIL() << "accepted a config without t2_star_us";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("device.t2_star_us"), std::string::npos) << e.what();
    }
}

TEST(Config, RejectsInconsistentValues) {
    EXPECT_THROW(parse_config(replace(paper_defaults(), "profile: slug", "profile: jpa")), ConfigError);
    EXPECT_THROW(parse_config(replace(paper_defaults(), "n_bar: 24", "n_bar: 24\n  envelope_sqrt_photons_per_us: [[1, 0]]")),
                 ConfigError);
    EXPECT_THROW(parse_config(replace(paper_defaults(), "filter: boxcar", "filter: gaussian")), ConfigError);
    EXPECT_THROW(parse_config(replace(paper_defaults(), "window_length_ns: 200", "window_length_ns: 250")),
                 ConfigError);
    EXPECT_THROW(parse_config(replace(paper_defaults(), "thermal_excited_population: 0.0145",
                                      "thermal_excited_population: 1.5")),
                 ConfigError);
    EXPECT_THROW(parse_config(replace(paper_defaults(), "cavity_linewidth_mhz: 10", "cavity_linewidth_mhz: ten")),
                 ConfigError);
    EXPECT_THROW(parse_config(replace(paper_defaults(), "  elitism: 2", "  elitism: 30")), ConfigError);
    EXPECT_THROW(parse_config("run: [1, 2"), ConfigError);
    EXPECT_THROW(parse_config(""), ConfigError);
}

TEST(Config, ExplicitEnvelopeMatchesPhotonTarget) {
    RunConfig ref = parse_config(paper_defaults());
    ReadoutPulse flat = make_pulse(ref);
    Complex eps = flat.envelope.front();
    std::string seg = "[" + format_double(eps.real() / 1e6) + ", " + format_double(eps.imag() / 1e6) + "]";
    RunConfig c = parse_config(
        replace(paper_defaults(), "n_bar: 24", "envelope_sqrt_photons_per_us: [" + seg + ", " + seg + "]"));
    ReadoutPulse p = make_pulse(c);
    ASSERT_EQ(p.envelope.size(), flat.envelope.size());
    for (std::size_t i = 0; i < p.envelope.size(); ++i) {
        EXPECT_NEAR(std::abs(p.envelope[i] - eps), 0.0, 1e-12 * std::abs(eps));
    }
}

TEST(Config, ProtocolSectionsAreRequiredWhenUsed) {
    std::string text = paper_defaults();
    text.erase(text.find("rb:\n"), text.find("optimize:") - text.find("rb:\n"));
    RunConfig c = parse_config(text);
    EXPECT_FALSE(c.rb);
    EXPECT_NO_THROW(require_protocol(c, Protocol::fidelity));
    EXPECT_THROW(require_protocol(c, Protocol::rb), ConfigError);
    c.protocol = Protocol::qnd;
    EXPECT_THROW(require_protocol(c, Protocol::fidelity), ConfigError);
    EXPECT_NO_THROW(require_protocol(c, Protocol::qnd));
}

TEST_F(CliTest, MissingConfigPrintsUsage) {
    Invocation r = invoke({"fidelity", "--shots", "100"});
    EXPECT_EQ(r.status, kExitUsage);
    EXPECT_NE(r.err.find("--config"), std::string::npos);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);

    r = invoke({});
    EXPECT_EQ(r.status, kExitUsage);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);

    r = invoke({"fidelity", "--config", (dir_ / "absent.yaml").string()});
    EXPECT_EQ(r.status, kExitUsage);
}

TEST_F(CliTest, InvalidKeyExitsTwoNamingKey) {
    std::string path = write_config(replace(paper_defaults(), "  shots: 40000", "  shots: 40000\n  shot: 5"));
    Invocation r = invoke({"fidelity", "--config", path});
    EXPECT_EQ(r.status, kExitUsage);
    EXPECT_NE(r.err.find("run.shot"), std::string::npos) << r.err;
}

TEST_F(CliTest, ProtocolMismatchAndMissingSection) {
    std::string path = write_config("protocol: qnd\n" + paper_defaults());
    EXPECT_EQ(invoke({"fidelity", "--config", path}).status, kExitUsage);

    std::string text = paper_defaults();
    auto start = text.find("qnd:\n");
    auto end = text.find("postselect:\n");
    text.erase(start, end - start);
    path = write_config(text, "noqnd.yaml");
    Invocation r = invoke({"qnd", "--config", path});
    EXPECT_EQ(r.status, kExitUsage);
    EXPECT_NE(r.err.find("qnd"), std::string::npos);
}

TEST_F(CliTest, PaperDefaultsRoundTrip) {
    Invocation r = invoke({"paper-defaults"});
    ASSERT_EQ(r.status, kExitOk);
    EXPECT_EQ(r.out, paper_defaults());
    fs::path file = dir_ / "defaults.yaml";
    ASSERT_EQ(invoke({"paper-defaults", "--output", file.string()}).status, kExitOk);
    EXPECT_EQ(slurp(file), paper_defaults());
}

TEST_F(CliTest, FidelityReportMatchesLibraryRun) {
    std::string path = write_config(paper_defaults());
    fs::path out = dir_ / "out";
    Invocation r = invoke({"fidelity", "--config", path, "--shots", "2000", "--seed", "11", "--output-dir",
                           out.string(), "--threads", "1"});
    ASSERT_EQ(r.status, kExitOk) << r.err;
    EXPECT_NE(r.out.find("fidelity F="), std::string::npos);
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 1);

    fs::path run_dir = out / "fidelity-seed11";
    Json report = Json::parse(slurp(run_dir / "report.json"));
    EXPECT_EQ(report["metadata"]["seed"], 11);
    EXPECT_EQ(report["metadata"]["shots"], 2000);
    EXPECT_TRUE(report["metadata"].contains("generated_at_utc"));

    RunConfig c = parse_config(paper_defaults());
    c.seed = 11;
    FidelityResult direct = run_fidelity(make_setup(c, 2), 2000);
    EXPECT_EQ(report["result"]["report"].get<DiscriminationReport>(), direct.report);
    EXPECT_EQ(report["result"]["histogram"].get<Histogram>(), direct.histogram);
    EXPECT_EQ(report["result"]["readout"].get<CalibratedReadout>(), direct.readout);
    EXPECT_EQ(report["setup"]["device"].get<DeviceParams>(), c.device);

    std::ifstream hist(run_dir / "histogram.csv");
    std::string header;
    std::getline(hist, header);
    EXPECT_EQ(header, "bin_center,count_g,count_e");
    std::ifstream scores(run_dir / "scores.csv");
    std::size_t lines = 0;
    for (std::string line; std::getline(scores, line);) {
        ++lines;
    }
    EXPECT_EQ(lines, 2001u);
}

TEST_F(CliTest, SeedDeterminesEveryByteButTheTimestamp) {
    std::string path = write_config(paper_defaults());
    fs::path a = dir_ / "a";
    fs::path b = dir_ / "b";
    ASSERT_EQ(invoke({"fidelity", "--config", path, "--shots", "1000", "--output-dir", a.string(), "--threads", "1"})
                  .status,
              kExitOk);
    ASSERT_EQ(invoke({"fidelity", "--config", path, "--shots", "1000", "--output-dir", b.string(), "--threads", "3"})
                  .status,
              kExitOk);
    for (const char* name : {"histogram.csv", "scores.csv"}) {
        EXPECT_EQ(slurp(a / "fidelity-seed7" / name), slurp(b / "fidelity-seed7" / name)) << name;
    }
    Json ja = Json::parse(slurp(a / "fidelity-seed7" / "report.json"));
    Json jb = Json::parse(slurp(b / "fidelity-seed7" / "report.json"));
    EXPECT_EQ(without_timestamp(ja).dump(2), without_timestamp(jb).dump(2));

    fs::path c = dir_ / "c";
    ASSERT_EQ(invoke({"fidelity", "--config", path, "--shots", "1000", "--seed", "8", "--output-dir", c.string()})
                  .status,
              kExitOk);
    EXPECT_NE(slurp(a / "fidelity-seed7" / "scores.csv"), slurp(c / "fidelity-seed8" / "scores.csv"));
}

TEST_F(CliTest, SeedPrecedence) {
    std::string path = write_config(paper_defaults());
    fs::path out = dir_ / "out";
    setenv("REPRO_SEED", "21", 1);
    ASSERT_EQ(invoke({"rb", "--config", path, "--output-dir", out.string()}).status, kExitOk);
    EXPECT_TRUE(fs::exists(out / "rb-seed21" / "report.json"));
    ASSERT_EQ(invoke({"rb", "--config", path, "--output-dir", out.string(), "--seed", "5"}).status, kExitOk);
    EXPECT_TRUE(fs::exists(out / "rb-seed5" / "rb.csv"));
    setenv("REPRO_SEED", "twelve", 1);
    EXPECT_EQ(invoke({"rb", "--config", path, "--output-dir", out.string()}).status, kExitUsage);
}

TEST_F(CliTest, StrictExitsThreeOnPhysicsFlags) {
    std::string text = replace(paper_defaults(), "      saturation_photons: 35", "      saturation_photons: 5");
    std::string path = write_config(text);
    fs::path out = dir_ / "out";
    Invocation loose = invoke({"fidelity", "--config", path, "--shots", "400", "--output-dir", out.string()});
    EXPECT_EQ(loose.status, kExitOk);
    EXPECT_NE(loose.out.find("over_saturation="), std::string::npos);
    Invocation strict =
        invoke({"fidelity", "--config", path, "--shots", "400", "--output-dir", out.string(), "--strict"});
    EXPECT_EQ(strict.status, kExitPhysicsFlag);
    EXPECT_TRUE(fs::exists(out / "fidelity-seed7" / "report.json"));

    std::string clean = write_config(paper_defaults(), "clean.yaml");
    EXPECT_EQ(invoke({"fidelity", "--config", clean, "--shots", "400", "--output-dir", out.string(), "--strict"})
                  .status,
              kExitOk);
}

TEST_F(CliTest, SweepWritesOneRowPerPointAndFlagsSaturation) {
    std::string path = write_config(paper_defaults());
    fs::path out = dir_ / "out";
    Invocation r = invoke({"sweep", "--config", path, "--param", "n_bar", "--from", "10", "--to", "40", "--steps",
                           "4", "--shots", "600", "--output-dir", out.string()});
    ASSERT_EQ(r.status, kExitOk) << r.err;
    EXPECT_NE(r.out.find("best_unflagged=20"), std::string::npos) << r.out;

    std::ifstream csv(out / "sweep-n_bar-seed7" / "sweep.csv");
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line,
              "n_bar,fidelity,error_g,error_e,snr_meas,snr_core,max_photons,shots_over_ncrit,shots_over_saturation,"
              "flagged");
    std::vector<double> n;
    std::vector<int> flagged;
    for (; std::getline(csv, line);) {
        n.push_back(std::stod(line.substr(0, line.find(','))));
        flagged.push_back(line.back() - '0');
        double max_photons = 0;
        std::stringstream ss(line);
        std::string field;
        for (int i = 0; i < 7; ++i) {
            std::getline(ss, field, ',');
        }
        max_photons = std::stod(field);
        EXPECT_EQ(flagged.back() == 1, max_photons > 35.0) << line;
    }
    EXPECT_EQ(n, (std::vector<double>{10, 20, 30, 40}));
    EXPECT_EQ(flagged, (std::vector<int>{0, 0, 1, 1}));

    EXPECT_EQ(invoke({"sweep", "--config", path, "--param", "kappa", "--from", "1", "--to", "2", "--output-dir",
                      out.string()})
                  .status,
              kExitUsage);
    EXPECT_EQ(invoke({"sweep", "--config", path, "--param", "n_bar", "--output-dir", out.string()}).status,
              kExitUsage);
}

TEST_F(CliTest, DurationSweepResizesWindow) {
    std::string path = write_config(paper_defaults());
    fs::path out = dir_ / "out";
    Invocation r = invoke({"sweep", "--config", path, "--param", "tau", "--from", "100", "--to", "300", "--steps",
                           "2", "--shots", "400", "--output-dir", out.string()});
    ASSERT_EQ(r.status, kExitOk) << r.err;
    Json report = Json::parse(slurp(out / "sweep-tau-seed7" / "report.json"));
    ASSERT_EQ(report["result"]["points"].size(), 2u);
    FilterSpec last = report["result"]["points"][1]["filter"].get<FilterSpec>();
    EXPECT_LE(last.window_start + last.window_length, 300e-9 * (1 + 1e-12));
}
