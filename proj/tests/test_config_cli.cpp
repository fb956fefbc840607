#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <string>

#include "specklerc/cli.hpp"
#include "specklerc/config.hpp"

using namespace specklerc;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag)
        : path(fs::temp_directory_path() / ("specklerc_" + tag))
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::set<std::string> dir_entries(const fs::path& p)
{
    std::set<std::string> names;
    for (const auto& e : fs::directory_iterator(p)) names.insert(e.path().filename().string());
    return names;
}

/// Small waveguide so CLI runs stay fast; everything else default-shaped.
std::vector<std::string> small_args()
{
    return {"--set", "waveguide.width_um=10",    "--set", "waveguide.length_mm=10",
            "--set", "detection.probes=5",       "--set", "task.train_len=60",
            "--set", "task.test_len=30",         "--set", "task.max_delay=3"};
}

}  // namespace

TEST_CASE("config serialization round-trips exactly")
{
    ExperimentConfig cfg = default_config();
    cfg.seed = 42;
    cfg.wavelengths_nm = {1548.0, 1550.0, 1552.0};
    cfg.explicit_probe_positions = {-3.0, 0.0, 4.5};
    cfg.ac_coupled = true;
    cfg.readout.gamma = 0.125;
    cfg.task.source = "lorenz";

    const std::string text = serialize_config(cfg);
    const ExperimentConfig back = parse_config_text(text);
    CHECK(serialize_config(back) == text);
    CHECK(config_hash(back) == config_hash(cfg));

    CHECK(config_hash(cfg).size() == 16);
    ExperimentConfig other = cfg;
    other.readout.gamma = 0.25;
    CHECK(config_hash(other) != config_hash(cfg));
}

TEST_CASE("config files require a seed and reject unknown keys")
{
    CHECK_NOTHROW(parse_config_text("{\"seed\": 7}"));
    CHECK(parse_config_text("{\"seed\": 7}").seed == 7);

    CHECK_THROWS_WITH_AS(parse_config_text("{}"), "config field is mandatory: seed",
                         ValidationError);
    CHECK_THROWS_WITH_AS(parse_config_text("{\"seed\": 1, \"bogus\": 2}"),
                         "unknown config field: bogus", ValidationError);
    CHECK_THROWS_WITH_AS(
        parse_config_text("{\"seed\": 1, \"waveguide\": {\"n_core\": \"high\"}}"),
        "config field has the wrong type: waveguide.n_core", ValidationError);
    CHECK_THROWS_AS(parse_config_text("{\"seed\": 1,"), ValidationError);
    // Physically inconsistent values fail the same validation as the library.
    CHECK_THROWS_AS(parse_config_text("{\"seed\": 1, \"waveguide\": {\"n_core\": 1.0}}"),
                    ValidationError);
}

TEST_CASE("dotted overrides set leaves of any JSON type")
{
    ExperimentConfig cfg = default_config();

    apply_override(cfg, "readout.gamma=0.25");
    CHECK(cfg.readout.gamma == 0.25);
    apply_override(cfg, "task.train_len=500");
    CHECK(cfg.task.train_len == 500);
    apply_override(cfg, "task.source=lorenz");  // bare string, not valid JSON
    CHECK(cfg.task.source == "lorenz");
    apply_override(cfg, "detection.ac_coupled=true");
    CHECK(cfg.ac_coupled);
    apply_override(cfg, "wavelengths_nm=[1549,1550,1551]");
    CHECK(cfg.wavelengths_nm == std::vector<double>{1549.0, 1550.0, 1551.0});
    apply_override(cfg, "detection.probe_positions_um=[0.0,2.5]");
    CHECK(cfg.explicit_probe_positions == std::vector<double>{0.0, 2.5});
    CHECK(cfg.detection().probe_positions_um.size() == 2);

    CHECK_THROWS_WITH_AS(apply_override(cfg, "task.bogus=1"), "unknown config field: task.bogus",
                         ValidationError);
    CHECK_THROWS_WITH_AS(apply_override(cfg, "readout.gama=1"),
                         "unknown config field: readout.gama", ValidationError);
    CHECK_THROWS_AS(apply_override(cfg, "no_equals_sign"), ValidationError);
    CHECK_THROWS_AS(apply_override(cfg, "task.=3"), ValidationError);
    CHECK_THROWS_WITH_AS(apply_override(cfg, "task.train_len=\"abc\""),
                         "config field has the wrong type: task.train_len", ValidationError);
    // Overrides pass through full validation.
    CHECK_THROWS_WITH_AS(apply_override(cfg, "threads=0"), "threads must be >= 1",
                         ValidationError);
}

TEST_CASE("derived pipeline wires probes, seeds, and coupling")
{
    ExperimentConfig cfg = default_config();
    cfg.seed = 11;
    const SimPipeline pipe = cfg.pipeline();
    CHECK(pipe.detection.probe_positions_um.size() == 65);
    CHECK(pipe.noise_seed == derive_seed(11, 2));
    CHECK(!pipe.coupling.has_value());  // default plan is the identity

    cfg.coupling.segments = 4;
    cfg.coupling.strength = 0.3;
    const SimPipeline coupled = cfg.pipeline();
    REQUIRE(coupled.coupling.has_value());
    CHECK(coupled.coupling->rng_seed == derive_seed(11, 3));

    cfg.explicit_probe_positions = {-1.0, 1.0};
    CHECK(cfg.pipeline().detection.probe_positions_um.size() == 2);

    cfg.explicit_probe_positions.clear();
    cfg.probes = 0;
    CHECK_THROWS_AS(cfg.detection(), ValidationError);
}

TEST_CASE("mac command writes a manifest covering every artifact")
{
    TempDir tmp("cli_mac");
    const fs::path out = tmp.path / "run";
    const int rc = cli::run({"analyze", "mac", "--out", out.string(), "--seed", "9"});
    REQUIRE(rc == 0);

    const json mac = json::parse(slurp(out / "mac.json"));
    CHECK(mac.at("probes").get<int>() == 65);
    CHECK(mac.at("modes").get<int>() == 69);
    CHECK(mac.at("mac_per_second").get<double>() > 1e15);
    CHECK(mac.at("timestep_ns").get<double>() == doctest::Approx(0.02));

    const json cfg_json = json::parse(slurp(out / "config.json"));
    CHECK(cfg_json.at("seed").get<std::uint64_t>() == 9);

    const json man = json::parse(slurp(out / "manifest.json"));
    CHECK(man.at("command").get<std::string>() == "analyze mac");
    CHECK(man.at("config_hash").get<std::string>() ==
          config_hash(parse_config_text(slurp(out / "config.json"))));
    std::set<std::string> names;
    for (const json& f : man.at("files")) {
        names.insert(f.at("name").get<std::string>());
        CHECK(f.at("bytes").get<std::uint64_t>() ==
              fs::file_size(out / f.at("name").get<std::string>()));
        CHECK(f.at("fnv1a64").get<std::string>() ==
              hex64(fnv1a64(slurp(out / f.at("name").get<std::string>()))));
    }
    CHECK(names == std::set<std::string>{"config.json", "mac.json"});
    // The manifest lists config.json first so a run is replayable from it.
    CHECK(man.at("files")[0].at("name").get<std::string>() == "config.json");
}

TEST_CASE("memory runs are reproducible and thread-count independent")
{
    TempDir tmp("cli_mem");
    std::vector<std::string> base = {"run", "memory", "--seed", "3"};
    for (const std::string& a : small_args()) base.push_back(a);
    base.insert(base.end(), {"--set", "wavelengths_nm=[1549,1550]"});

    const auto run_into = [&](const std::string& name, int threads) {
        std::vector<std::string> args = base;
        args.insert(args.end(), {"--out", (tmp.path / name).string()});
        args.insert(args.end(), {"--threads", std::to_string(threads)});
        REQUIRE(cli::run(args) == 0);
    };
    run_into("a", 1);
    run_into("b", 1);
    run_into("c", 2);

    CHECK(slurp(tmp.path / "a/metrics.json") == slurp(tmp.path / "b/metrics.json"));
    CHECK(slurp(tmp.path / "a/memory.csv") == slurp(tmp.path / "b/memory.csv"));
    CHECK(slurp(tmp.path / "a/metrics.json") == slurp(tmp.path / "c/metrics.json"));
    CHECK(slurp(tmp.path / "a/memory.csv") == slurp(tmp.path / "c/memory.csv"));

    const json man = json::parse(slurp(tmp.path / "a/manifest.json"));
    CHECK(man.at("counters").at("effective_memory").get<std::int64_t>() >= 0);
    const json metrics = json::parse(slurp(tmp.path / "a/metrics.json"));
    CHECK(metrics.at("m").size() == 4);

    const json cfg_c = json::parse(slurp(tmp.path / "c/config.json"));
    CHECK(cfg_c.at("threads").get<int>() == 2);
}

TEST_CASE("commands write only inside the output directory")
{
    TempDir tmp("cli_fence");
    const std::set<std::string> cwd_before = dir_entries(fs::current_path());
    const std::set<std::string> tmp_before = dir_entries(tmp.path);

    std::vector<std::string> args = {"modes", "--seed", "1",
                                     "--out", (tmp.path / "only_here").string(),
                                     "--set", "waveguide.width_um=10"};
    REQUIRE(cli::run(args) == 0);

    CHECK(dir_entries(fs::current_path()) == cwd_before);
    std::set<std::string> tmp_after = tmp_before;
    tmp_after.insert("only_here");
    CHECK(dir_entries(tmp.path) == tmp_after);
    CHECK(dir_entries(tmp.path / "only_here") ==
          std::set<std::string>{"config.json", "manifest.json", "modes.csv",
                                "modes_summary.json"});

    const json summary = json::parse(slurp(tmp.path / "only_here" / "modes_summary.json"));
    CHECK(summary.at("mode_count").get<int>() == 28);
}

TEST_CASE("exit codes separate validation from numerical failures")
{
    TempDir tmp("cli_codes");
    const fs::path out = tmp.path / "x";

    // Validation failures exit 2 and create nothing.
    CHECK(cli::run({"modes", "--out", out.string(), "--set", "waveguide.n_core=1.0"}) == 2);
    CHECK(cli::run({"modes", "--out", out.string(), "--config", "/nonexistent/cfg.json"}) == 2);
    CHECK(cli::run({"modes", "--out", out.string(), "--set", "nope=1"}) == 2);
    CHECK(!fs::exists(out));

    // Unmodulated, noiseless drive leaves every feature constant and the
    // unregularized normal matrix singular: a numerical failure, exit 3.
    std::vector<std::string> sing = {"run", "predict", "--seed", "4", "--out", out.string()};
    for (const std::string& a : small_args()) sing.push_back(a);
    sing.insert(sing.end(), {"--set", "modulation.depth_rad=0", "--set", "detection.noise_std=0",
                             "--set", "readout.gamma=0"});
    CHECK(cli::run(sing) == 3);

    // Argument-parser failures exit 2, help and version exit 0.
    CHECK(cli::run({"frobnicate"}) == 2);
    CHECK(cli::run({"run"}) == 2);
    CHECK(cli::run({"--help"}) == 0);
    CHECK(cli::run({"--version"}) == 0);
}
