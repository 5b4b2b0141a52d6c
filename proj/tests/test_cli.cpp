#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "canopy/raster_io.hpp"
#include "config.hpp"
#include "doctest.h"
#include "heatmap.hpp"
#include "manifest.hpp"
#include "test_util.hpp"

using namespace canopy;
using namespace canopy::cli;
namespace ct = canopy::test;
namespace fs = std::filesystem;

namespace {

struct Scratch {
    fs::path dir;
    Scratch() : dir(fs::temp_directory_path() / ("canopy_cli_" + std::to_string(::getpid()))) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
};

struct Run {
    int code;
    std::string err;
};

Run run(const std::string& args, const fs::path& scratch) {
    const fs::path err = scratch / "stderr.txt";
    const std::string cmd = std::string(CANOPY_BIN) + " " + args + " >/dev/null 2>" + err.string();
    const int status = std::system(cmd.c_str());
    std::ifstream f(err);
    std::stringstream ss;
    ss << f.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// A 40 m scene renders in well under a second.
const char* kSmallScene = "--set synth.width=40 --set synth.height=40 --set synth.stems_per_ha=300";

}  // namespace

TEST_CASE("heatmap: constant grid paints a single colour") {
    const auto px = colorize(ct::constant(5, 4, 7.5f), Palette::Viridis);
    for (const auto& p : px) CHECK(p == px.front());
    CHECK(px.front()[3] == 255);
}

TEST_CASE("heatmap: extremes map to ramp endpoints and nodata is transparent") {
    RasterHeader h = ct::header(3, 1);
    h.nodata = -9999.0f;
    const Grid g(h, std::vector<float>{0.0f, 10.0f, -9999.0f});
    const auto px = colorize(g, Palette::Viridis);
    CHECK(px[0] == Rgba{68, 1, 84, 255});
    CHECK(px[1] == Rgba{253, 231, 37, 255});
    CHECK(px[2][3] == 0);
}

TEST_CASE("heatmap: categorical labels are stable and ground is grey") {
    const Grid g(ct::header(4, 1), std::vector<float>{0.0f, 1.0f, 2.0f, 1.0f});
    const auto px = colorize(g, Palette::Categorical);
    CHECK(px[0] == Rgba{128, 128, 128, 255});
    CHECK(px[1] == px[3]);
    CHECK(px[1] != px[2]);
}

TEST_CASE("heatmap: output is a PNG") {
    const auto png = render_heatmap(ct::random_float(16, 9, 3), Palette::Viridis);
    REQUIRE(png.size() > 8);
    const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    CHECK(std::equal(sig, sig + 8, png.begin()));
}

TEST_CASE("config: sections, comments, defaults and overrides") {
    Config c = Config::parse(
        "threads = 2\n"
        "# comment\n"
        "[chm]\n"
        "smooth_radius = 2   ; trailing comment\n"
        "clamp_negative = false\n"
        "[benchmark]\n"
        "sweep = 90, 150,300\n");
    CHECK(c.integer("run.threads", 0) == 2);
    CHECK(c.integer("chm.smooth_radius", 0) == 2);
    CHECK_FALSE(c.flag("chm.clamp_negative", true));
    CHECK(c.list("benchmark.sweep", {}) == std::vector<double>{90, 150, 300});
    CHECK(c.num("crowns.window_fraction", 0.1) == doctest::Approx(0.1));
    c.set("chm.smooth_radius", "0");
    CHECK(c.integer("chm.smooth_radius", 5) == 0);
    CHECK_NOTHROW(c.reject_unused());
    c.set("chm.typo", "1");
    CHECK_THROWS_AS(c.reject_unused(), ConfigError);
}

TEST_CASE("config: bad values name the field") {
    const Config c = Config::parse("[chm]\nsmooth_radius = two\n");
    try {
        (void)c.integer("chm.smooth_radius", 0);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "chm.smooth_radius");
    }
    CHECK_THROWS_AS(Config::parse("[chm\nx=1\n"), ConfigError);
}

TEST_CASE("config: canonical form ignores order and skipped prefixes") {
    const Config a = Config::parse("[b]\ny = 2\n[a]\nx = 1\n[output]\ndir = one\n");
    const Config b = Config::parse("[a]\nx=1\n[b]\ny=2\n[output]\ndir=two\n");
    CHECK(a.canonical({"output."}) == b.canonical({"output."}));
    CHECK(a.canonical() != b.canonical());
}

TEST_CASE("manifest: sha256 of known text") {
    CHECK(sha256_hex(std::string_view("abc")) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("cli: exit codes for missing, unreadable and unknown inputs") {
    Scratch s;
    const std::string dsm = (s.dir / "dsm.tif").string();
    save_geotiff(dsm, ct::constant(8, 8, 10.0f));
    const fs::path never = s.dir / "never";

    Run r = run("inventory --dsm " + dsm + " --species-map " + dsm + " --out " + (s.dir / "o").string(), s.dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("\"where\":\"inputs.dem\"") != std::string::npos);

    r = run("inventory --dsm " + dsm + " --dem " + (s.dir / "absent.tif").string() + " --species-map " + dsm +
                " --out " + never.string(),
            s.dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("inputs.dem") != std::string::npos);

    const fs::path junk = s.dir / "junk.tif";
    std::ofstream(junk) << "not a tiff";
    r = run("inventory --dsm " + dsm + " --dem " + junk.string() + " --species-map " + dsm + " --out " + never.string(),
            s.dir);
    CHECK(r.code == 3);
    CHECK(r.err.find("inputs.dem") != std::string::npos);
    CHECK_FALSE(fs::exists(never));

    r = run("inventory --dsm " + dsm + " --dem " + dsm + " --species-map " + dsm + " --set chm.smoth=1 --out " +
                never.string(),
            s.dir);
    CHECK(r.code == 2);
    CHECK(r.err.find("chm.smoth") != std::string::npos);

    r = run("costs --area -5", s.dir);
    CHECK(r.code == 2);
}

TEST_CASE("cli: synth then inventory, with species-map bypass recorded") {
    Scratch s;
    const fs::path scene = s.dir / "scene";
    REQUIRE(run(std::string("synth --seed 5 ") + kSmallScene + " --out " + scene.string(), s.dir).code == 0);
    for (const char* f : {"dsm.tif", "dem.tif", "red.tif", "nir.tif", "truth.csv", "truth.json", "inventory.conf"})
        CHECK(fs::exists(scene / f));

    const fs::path spectral_run = s.dir / "spectral";
    REQUIRE(run("inventory -c " + (scene / "inventory.conf").string() + " --out " + spectral_run.string(), s.dir).code == 0);
    auto m = nlohmann::json::parse(slurp(spectral_run / "manifest.json"));
    CHECK(m["command"] == "inventory");
    CHECK(m["notes"]["species_source"].get<std::string>().find("spectral") == 0);
    CHECK(m["outputs"].size() == 7);

    // Reuse the spectral result as a ready species map.
    const fs::path byp = s.dir / "byp";
    REQUIRE(run("inventory --dsm " + (scene / "dsm.tif").string() + " --dem " + (scene / "dem.tif").string() +
                    " --species-map " + (spectral_run / "species.tif").string() + " --out " + byp.string(),
                s.dir)
                .code == 0);
    m = nlohmann::json::parse(slurp(byp / "manifest.json"));
    CHECK(m["notes"]["species_source"].get<std::string>().find("bypass") != std::string::npos);
    const auto stand = nlohmann::json::parse(slurp(byp / "stand_carbon.json"));
    CHECK(stand["species_map_bypass"] == true);
    // Same species labels either way, so the same trees and carbon.
    CHECK(slurp(byp / "trees.csv") == slurp(spectral_run / "trees.csv"));
}

TEST_CASE("cli: outputs do not depend on the thread count") {
    Scratch s;
    const fs::path scene = s.dir / "scene";
    REQUIRE(run(std::string("synth --seed 9 ") + kSmallScene + " --out " + scene.string(), s.dir).code == 0);
    const std::string conf = " -c " + (scene / "inventory.conf").string();
    REQUIRE(run("inventory" + conf + " --threads 1 --out " + (s.dir / "t1").string(), s.dir).code == 0);
    REQUIRE(run("inventory" + conf + " --threads 3 --out " + (s.dir / "t3").string(), s.dir).code == 0);
    for (const char* f :
         {"chm.tif", "species.tif", "crowns.geojson", "trees.csv", "stand_carbon.json", "chm.png", "species.png"})
        CHECK_MESSAGE(slurp(s.dir / "t1" / f) == slurp(s.dir / "t3" / f), f);
    const auto a = nlohmann::json::parse(slurp(s.dir / "t1" / "manifest.json"));
    const auto b = nlohmann::json::parse(slurp(s.dir / "t3" / "manifest.json"));
    CHECK(a["config_sha256"] == b["config_sha256"]);

    REQUIRE(run(std::string("synth --seed 9 --threads 2 ") + kSmallScene + " --out " + (s.dir / "s2").string(),
                s.dir)
                .code == 0);
    for (const char* f : {"dsm.tif", "dem.tif", "red.tif", "truth.csv", "truth.json"})
        CHECK_MESSAGE(slurp(scene / f) == slurp(s.dir / "s2" / f), f);
}
