#include <doctest.h>

#include "phasebound/config.hpp"
#include "phasebound/harness.hpp"

using namespace phasebound;

TEST_CASE("key/value grammar: comments, lists, pairs, overrides") {
    const ConfigFile cfg = ConfigFile::parse_text(
        "# oscillator\n"
        "poles = [0.9999]\n"
        "zeros = [[0.9937, 1], [0.7286, 2]]   # second-order numerator\n"
        "gamma = 0.1\n"
        "snr_db = [0, 3, 6]\n"
        "modulation = qam4\n",
        "test.cfg");
    CHECK(cfg.get_double("gamma") == 0.1);
    CHECK(cfg.get_double_list("gamma") == std::vector<double>{0.1}); // scalar shorthand
    CHECK(cfg.get_double_list("snr_db") == std::vector<double>{0.0, 3.0, 6.0});
    CHECK(cfg.get_pair_list("zeros").size() == 2);
    CHECK(cfg.get_pair_list("zeros")[1].first == 0.7286);
    CHECK(cfg.get_string("modulation") == "qam4");

    ConfigFile mut = cfg;
    mut.set("gamma", "0.25"); // flags override the file
    CHECK(mut.get_double("gamma") == 0.25);
}

TEST_CASE("config errors carry the origin, line and field") {
    CHECK_THROWS_WITH_AS(ConfigFile::parse_text("gamma 0.1\n", "bad.cfg"),
                         doctest::Contains("bad.cfg:1"), ConfigError);

    const ConfigFile cfg = ConfigFile::parse_text("gamma = oops\nzeros = [[1]]\n", "t.cfg");
    CHECK_THROWS_WITH_AS(cfg.get_double("gamma"), doctest::Contains("field 'gamma'"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(cfg.get_double("missing"),
                         doctest::Contains("field 'missing': missing required field"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(cfg.get_pair_list("zeros"), doctest::Contains("[coeff, delay]"),
                         ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse_file("/nonexistent/path.cfg"), ConfigError);
}

TEST_CASE("unknown fields are rejected") {
    const ConfigFile cfg = ConfigFile::parse_text("gamma = 0.1\ngama = 0.2\n", "t.cfg");
    CHECK_THROWS_WITH_AS(cfg.ensure_only({"gamma"}), doctest::Contains("unknown field 'gama'"),
                         ConfigError);
}

TEST_CASE("model sources: built-ins, explicit factors, stability") {
    const ModelSource sm = model_from_config(ConfigFile::parse_text("", "t"));
    CHECK(sm.model_id == "sm");
    CHECK(sm.a.size() == 3);
    CHECK(sm.b[2] == doctest::Approx(0.72400982));

    const ModelSource wiener =
        model_from_config(ConfigFile::parse_text("model = wiener\n", "t"));
    CHECK(wiener.model_id == "wiener");
    CHECK(wiener.a == std::vector<double>{0.0});

    const ModelSource custom = model_from_config(
        ConfigFile::parse_text("poles = [0.5]\nzeros = [[1, 2]]\n", "t"));
    CHECK(custom.model_id == "custom");
    CHECK(custom.a == std::vector<double>{0.5, 0.0});
    CHECK(custom.b == std::vector<double>{0.0, -1.0});

    CHECK_THROWS_WITH_AS(model_from_config(ConfigFile::parse_text("poles = [1.0]\n", "t")),
                         doctest::Contains("unit circle"), ConfigError);
    CHECK_THROWS_WITH_AS(model_from_config(ConfigFile::parse_text("model = laser\n", "t")),
                         doctest::Contains("unknown model"), ConfigError);
}

TEST_CASE("sweep config: defaults, trackers, validation") {
    const ConfigFile cfg = ConfigFile::parse_text(
        "model = wiener\n"
        "gamma = 0.1\n"
        "snr_db = [3, 6]\n"
        "n = 20000\n"
        "trackers = [kalman, particle]\n"
        "np_tracker = 128\n",
        "t.cfg");
    const SweepConfig sw = SweepConfig::from_config(cfg);
    CHECK(sw.n == 20000);
    CHECK(sw.burn_in == 1000);
    CHECK(sw.np_blind == 4096);
    CHECK(sw.trackers.size() == 2);
    CHECK(sw.trackers[0].kind == TrackerChoice::Kind::kalman);
    CHECK(sw.trackers[1].np == 128);
    CHECK(sw.master_seed == 1);

    SUBCASE("missing gamma is named") {
        const ConfigFile no_gamma =
            ConfigFile::parse_text("model = wiener\nsnr_db = 6\n", "t.cfg");
        CHECK_THROWS_WITH_AS(SweepConfig::from_config(no_gamma),
                             doctest::Contains("field 'gamma'"), ConfigError);
    }
    SUBCASE("n must clear burn_in by a safe margin") {
        ConfigFile small = cfg;
        small.set("n", "10500");
        small.set("burn_in", "1000");
        CHECK_THROWS_WITH_AS(SweepConfig::from_config(small), doctest::Contains("burn_in"),
                             ConfigError);
    }
    SUBCASE("bad modulation is rejected") {
        ConfigFile bad = cfg;
        bad.set("modulation", "psk8");
        CHECK_THROWS_AS(SweepConfig::from_config(bad), ModelError);
    }
    SUBCASE("unknown keys are rejected") {
        ConfigFile bad = cfg;
        bad.set("npblind", "12");
        CHECK_THROWS_WITH_AS(SweepConfig::from_config(bad),
                             doctest::Contains("unknown field"), ConfigError);
    }
}
