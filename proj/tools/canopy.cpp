#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "canopy/error.hpp"
#include "canopy/parallel.hpp"
#include "commands.hpp"
#include "config.hpp"

using namespace canopy::cli;

namespace {

// Command-line values that override config keys, filled in by CLI11.
struct Overrides {
    std::string config_path;
    std::vector<std::string> sets;
    std::map<std::string, std::string> flags;  // dotted key -> value
    std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-c,--config", o.config_path, "Config file (key = value with [section] headers)");
    cmd->add_option("--set", o.sets, "Override any key: section.key=value (repeatable)");
    cmd->add_option("--threads", o.threads, "Worker threads; 0 uses every core");
}

void add_key(CLI::App* cmd, Overrides& o, const std::string& flag, const std::string& key, const std::string& help) {
    cmd->add_option_function<std::string>(flag, [&o, key](const std::string& v) { o.flags[key] = v; }, help);
}

Config build_config(const Overrides& o) {
    Config cfg;
    if (!o.config_path.empty()) {
        if (!std::filesystem::is_regular_file(o.config_path))
            throw ConfigError("--config", "file not found: " + o.config_path);
        cfg = Config::load(o.config_path);
    }
    for (const auto& s : o.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || s.find('.') > eq)
            throw ConfigError("--set", "expected section.key=value, got '" + s + "'");
        cfg.set(s.substr(0, eq), s.substr(eq + 1));
    }
    for (const auto& [k, v] : o.flags) cfg.set(k, v);
    if (o.threads) cfg.set("run.threads", std::to_string(*o.threads));
    return cfg;
}

int fail(int code, const std::string& kind, const std::string& where, const std::string& message) {
    std::cerr << error_json(code, kind, where, message) << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Drone canopy inventory, synthetic forests and survey cost comparison"};
    app.require_subcommand(1);
    Overrides o;

    auto* inventory = app.add_subcommand("inventory", "DSM/DEM (+ RGB-NIR or species map) to tree inventory");
    add_common(inventory, o);
    add_key(inventory, o, "--out", "output.dir", "Output directory");
    add_key(inventory, o, "--dsm", "inputs.dsm", "Surface model GeoTIFF");
    add_key(inventory, o, "--dem", "inputs.dem", "Terrain model GeoTIFF");
    add_key(inventory, o, "--rgbnir", "inputs.rgbnir", "Four-band R,G,B,NIR GeoTIFF");
    add_key(inventory, o, "--red", "inputs.red", "Red band GeoTIFF");
    add_key(inventory, o, "--green", "inputs.green", "Green band GeoTIFF");
    add_key(inventory, o, "--blue", "inputs.blue", "Blue band GeoTIFF");
    add_key(inventory, o, "--nir", "inputs.nir", "Near-infrared band GeoTIFF");
    add_key(inventory, o, "--species-map", "inputs.species_map", "Species label raster; skips spectral classification");
    add_key(inventory, o, "--signatures", "inputs.signatures", "Species signature CSV");
    add_key(inventory, o, "--models", "inputs.models", "Allometric model registry CSV");
    add_key(inventory, o, "--model", "allometry.model", "Allometric model id");
    add_key(inventory, o, "--chm-clamp", "chm.clamp_negative", "Clamp negative heights to 0 (true/false)");
    add_key(inventory, o, "--chm-max-height", "chm.max_height", "Heights above this become nodata (m)");
    add_key(inventory, o, "--chm-smooth-radius", "chm.smooth_radius", "Median-filter radius in pixels");
    add_key(inventory, o, "--ndvi-threshold", "spectral.ndvi_threshold", "Pixels below this NDVI are ground");

    auto* benchmark = app.add_subcommand("benchmark", "Census versus ground plots over synthetic forests");
    add_common(benchmark, o);
    add_key(benchmark, o, "--out", "output.dir", "Output directory");
    add_key(benchmark, o, "--seeds", "benchmark.seeds", "Number of forests");
    add_key(benchmark, o, "--first-seed", "benchmark.first_seed", "Seed of the first forest");
    add_key(benchmark, o, "--plot-spacing", "benchmark.plot_spacing", "Plot lattice spacing (m)");
    add_key(benchmark, o, "--model", "allometry.model", "Allometric model id");

    auto* synth = app.add_subcommand("synth", "Render a synthetic forest with ground truth");
    add_common(synth, o);
    add_key(synth, o, "--out", "output.dir", "Output directory");
    add_key(synth, o, "--seed", "synth.seed", "Random seed");
    add_key(synth, o, "--stems-per-ha", "synth.stems_per_ha", "Target stem density");
    add_key(synth, o, "--width", "synth.width", "Scene width (m)");
    add_key(synth, o, "--height", "synth.height", "Scene height (m)");
    add_key(synth, o, "--resolution", "synth.resolution", "Pixel size (m)");
    add_key(synth, o, "--model", "allometry.model", "Allometric model id");

    auto* costs = app.add_subcommand("costs", "Survey and offset cost comparison");
    add_common(costs, o);
    add_key(costs, o, "--out", "output.dir", "Also write costs.json and costs.txt here");
    add_key(costs, o, "--costs", "inputs.costs", "Cost model CSV");
    add_key(costs, o, "--area", "costs.area_ha", "Survey area (ha)");
    add_key(costs, o, "--tco2e", "costs.tco2e", "Tonnes CO2e to price");
    add_key(costs, o, "--stand", "costs.stand", "stand_carbon.json to take tonnes from");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(kConfigError, "usage", "command line", e.what());
    }

    try {
        Config cfg = build_config(o);
        const long long threads = cfg.integer("run.threads", 0);
        if (threads < 0) throw ConfigError("run.threads", "must be >= 0");
        canopy::set_thread_count(static_cast<unsigned>(threads));
        const unsigned used = canopy::thread_count();
        if (inventory->parsed()) {
            run_inventory_command(cfg, used);
        } else if (benchmark->parsed()) {
            run_benchmark_command(cfg, used);
        } else if (synth->parsed()) {
            run_synth_command(cfg, used);
        } else {
            std::string text;
            run_costs_command(cfg, text);
            std::cout << text;
        }
    } catch (const ConfigError& e) {
        return fail(kConfigError, "config", e.field(), e.what());
    } catch (const InputError& e) {
        return fail(kInputError, "input", e.field(), e.what());
    } catch (const StageError& e) {
        return fail(kStageError, "stage", e.stage(), e.what());
    } catch (const canopy::Error& e) {
        return fail(kStageError, "stage", "pipeline", e.what());
    } catch (const std::exception& e) {
        return fail(kStageError, "internal", "", e.what());
    }
    return kOk;
}
