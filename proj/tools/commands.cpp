#include "commands.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>

#include <fmt/format.h>
#include <json.hpp>

#include "canopy/economics.hpp"
#include "canopy/error.hpp"
#include "canopy/raster_io.hpp"
#include "canopy/text.hpp"
#include "heatmap.hpp"
#include "manifest.hpp"

namespace canopy::cli {

namespace fs = std::filesystem;

namespace {

// Keys that change where or how fast a run happens but not what it produces.
const std::set<std::string> kVolatileKeys = {"run.threads", "output."};

template <class F>
auto config_guard(const std::string& field, F&& f) {
    try {
        return f();
    } catch (const canopy::Error& e) {
        throw ConfigError(field, e.what());
    }
}

template <class F>
auto input_guard(const std::string& field, F&& f) {
    try {
        return f();
    } catch (const canopy::Error& e) {
        throw InputError(field, e.what());
    }
}

template <class F>
auto stage_guard(const std::string& stage, F&& f) {
    try {
        return f();
    } catch (const canopy::Error& e) {
        throw StageError(stage, e.what());
    }
}

std::optional<fs::path> input_path(const Config& cfg, const std::string& key, bool required) {
    const std::string v = cfg.str(key);
    if (v.empty()) {
        if (required) throw ConfigError(key, "required input path is missing");
        return std::nullopt;
    }
    if (!fs::is_regular_file(v)) throw ConfigError(key, "file not found: " + v);
    return fs::path(v);
}

fs::path output_path(const Config& cfg) { return cfg.str("output.dir", "out"); }

fs::path make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("output.dir", "cannot create directory " + dir.string());
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) throw StageError("output", "cannot write " + path.string());
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw StageError("output", "cannot write " + path.string());
}

SpeciesCatalog load_species(const Config& cfg, const std::string& key) {
    const auto path = input_path(cfg, key, false);
    if (!path) return default_species();
    return input_guard(key, [&] { return parse_species_csv(read_text_file(path->string())); });
}

AllometricModel load_model(const Config& cfg) {
    ModelRegistry registry = default_registry();
    if (const auto path = input_path(cfg, "inputs.models", false))
        registry = input_guard("inputs.models", [&] { return parse_registry_csv(read_text_file(path->string())); });
    const std::string id = cfg.str("allometry.model", "tropical_with_height");
    return config_guard("allometry.model", [&] { return registry.get(id); });
}

Grid load_grid(const std::string& field, const fs::path& path, int band = -1) {
    return input_guard(field, [&] { return band < 0 ? load_raster(path) : load_raster_band(path, band); });
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Placement parse_placement(const std::string& v) {
    if (v == "matern") return Placement::MaternII;
    if (v == "nonoverlapping") return Placement::NonOverlapping;
    throw ConfigError("synth.placement", "expected 'matern' or 'nonoverlapping', got '" + v + "'");
}

}  // namespace

InventoryParams inventory_params(const Config& cfg) {
    InventoryParams p;
    p.chm.clamp_negative = cfg.flag("chm.clamp_negative", p.chm.clamp_negative);
    p.chm.max_plausible_height = static_cast<float>(cfg.num("chm.max_height", p.chm.max_plausible_height));
    p.chm.smooth_radius = static_cast<int>(cfg.integer("chm.smooth_radius", p.chm.smooth_radius));
    p.pit_depth = static_cast<float>(cfg.num("chm.pit_depth", p.pit_depth));
    p.crowns.min_tree_height = cfg.num("crowns.min_tree_height", p.crowns.min_tree_height);
    p.crowns.window_fraction = cfg.num("crowns.window_fraction", p.crowns.window_fraction);
    p.crowns.min_window_radius = cfg.num("crowns.min_window_radius", p.crowns.min_window_radius);
    p.crowns.crown_floor_fraction = cfg.num("crowns.floor_fraction", p.crowns.crown_floor_fraction);
    p.ndvi_threshold = static_cast<float>(cfg.num("spectral.ndvi_threshold", p.ndvi_threshold));
    p.majority_radius = static_cast<int>(cfg.integer("spectral.majority_radius", p.majority_radius));
    p.carbon_fraction = cfg.num("allometry.carbon_fraction", p.carbon_fraction);
    config_guard("chm", [&] {
        p.chm.validate();
        if (p.pit_depth < 0.0f) throw canopy::InvalidArgument("pit_depth must be >= 0");
        return 0;
    });
    config_guard("crowns", [&] {
        p.crowns.validate();
        return 0;
    });
    config_guard("spectral", [&] {
        if (p.majority_radius < 0) throw canopy::InvalidArgument("majority_radius must be >= 0");
        return 0;
    });
    config_guard("allometry", [&] {
        p.validate();
        return 0;
    });
    return p;
}

SynthParams synth_params(const Config& cfg, SynthParams p) {
    p.seed = static_cast<std::uint64_t>(cfg.integer("synth.seed", static_cast<long long>(p.seed)));
    p.width_m = cfg.num("synth.width", p.width_m);
    p.height_m = cfg.num("synth.height", p.height_m);
    p.resolution = cfg.num("synth.resolution", p.resolution);
    p.origin_x = cfg.num("synth.origin_x", p.origin_x);
    p.origin_y = cfg.num("synth.origin_y", p.origin_y);
    p.crs = cfg.str("synth.crs", p.crs);
    p.stems_per_ha = cfg.num("synth.stems_per_ha", p.stems_per_ha);
    if (cfg.has("synth.species")) p.species = load_species(cfg, "synth.species");
    p.proportions = cfg.list("synth.proportions", p.proportions);
    p.height_mu = cfg.num("synth.height_mu", p.height_mu);
    if (cfg.has("synth.height_median")) {
        const double m = cfg.num("synth.height_median", 0.0);
        if (!(m > 0)) throw ConfigError("synth.height_median", "must be > 0");
        p.height_mu = std::log(m);
    }
    p.height_sigma = cfg.num("synth.height_sigma", p.height_sigma);
    p.min_height = cfg.num("synth.min_height", p.min_height);
    p.max_height = cfg.num("synth.max_height", p.max_height);
    p.hd_a = cfg.num("synth.hd_a", p.hd_a);
    p.hd_b = cfg.num("synth.hd_b", p.hd_b);
    if (cfg.has("synth.placement")) p.placement = parse_placement(cfg.str("synth.placement"));
    p.hardcore_fraction = cfg.num("synth.hardcore_fraction", p.hardcore_fraction);
    p.crown_gap = cfg.num("synth.crown_gap", p.crown_gap);
    p.crowns_inside = cfg.flag("synth.crowns_inside", p.crowns_inside);
    p.heterogeneity = cfg.num("synth.heterogeneity", p.heterogeneity);
    p.heterogeneity_wavelength = cfg.num("synth.heterogeneity_wavelength", p.heterogeneity_wavelength);
    p.terrain_base = cfg.num("synth.terrain_base", p.terrain_base);
    p.terrain_amplitude = cfg.num("synth.terrain_amplitude", p.terrain_amplitude);
    p.terrain_waves = static_cast<int>(cfg.integer("synth.terrain_waves", p.terrain_waves));
    p.spectral_noise = cfg.num("synth.spectral_noise", p.spectral_noise);
    config_guard("synth", [&] {
        p.validate();
        return 0;
    });
    return p;
}

BenchmarkParams benchmark_params(const Config& cfg) {
    BenchmarkParams b;
    b.scene = synth_params(cfg, reference_scene());
    b.inventory = inventory_params(cfg);
    b.plots.spacing = cfg.num("benchmark.plot_spacing", b.plots.spacing);
    b.plots.radius = cfg.num("benchmark.plot_radius", b.plots.radius);
    b.recall = cfg.num("benchmark.recall", b.recall);
    b.first_seed = static_cast<std::uint64_t>(cfg.integer("benchmark.first_seed", static_cast<long long>(b.first_seed)));
    b.seeds = static_cast<int>(cfg.integer("benchmark.seeds", b.seeds));
    b.support_side = static_cast<int>(cfg.integer("benchmark.support_side", b.support_side));
    if (!(b.plots.spacing > 0)) throw ConfigError("benchmark.plot_spacing", "must be > 0");
    config_guard("benchmark", [&] {
        b.validate();
        return 0;
    });
    return b;
}

void run_inventory_command(const Config& cfg, unsigned threads) {
    const InventoryParams params = inventory_params(cfg);
    const auto dsm_path = input_path(cfg, "inputs.dsm", true);
    const auto dem_path = input_path(cfg, "inputs.dem", true);
    const auto map_path = input_path(cfg, "inputs.species_map", false);
    const auto rgbnir_path = input_path(cfg, "inputs.rgbnir", false);
    std::array<std::optional<fs::path>, 4> band_paths;
    const char* band_keys[4] = {"inputs.red", "inputs.green", "inputs.blue", "inputs.nir"};
    for (int k = 0; k < 4; ++k) band_paths[k] = input_path(cfg, band_keys[k], false);
    const bool have_bands = band_paths[0] && band_paths[1] && band_paths[2] && band_paths[3];
    if (!map_path && !rgbnir_path && !have_bands)
        throw ConfigError("inputs.rgbnir", "give inputs.rgbnir, all of inputs.red/green/blue/nir, or inputs.species_map");
    const SpeciesCatalog catalog = load_species(cfg, "inputs.signatures");
    const AllometricModel model = load_model(cfg);
    const fs::path out = output_path(cfg);
    cfg.reject_unused();

    Manifest manifest("inventory", cfg.canonical(kVolatileKeys));
    manifest.set_threads(threads);
    const auto t0 = std::chrono::steady_clock::now();
    InventoryInputs in;
    in.dsm = load_grid("inputs.dsm", *dsm_path);
    in.dem = load_grid("inputs.dem", *dem_path);
    manifest.add_input("inputs.dsm", *dsm_path);
    manifest.add_input("inputs.dem", *dem_path);
    if (map_path) {
        in.species_map = load_grid("inputs.species_map", *map_path);
        manifest.add_input("inputs.species_map", *map_path);
    } else if (rgbnir_path) {
        const int bands = input_guard("inputs.rgbnir", [&] { return geotiff_band_count(read_file(*rgbnir_path)); });
        if (bands != 4) throw InputError("inputs.rgbnir", fmt::format("expected 4 bands, found {}", bands));
        in.bands = RgbNir{load_grid("inputs.rgbnir", *rgbnir_path, 0), load_grid("inputs.rgbnir", *rgbnir_path, 1),
                          load_grid("inputs.rgbnir", *rgbnir_path, 2), load_grid("inputs.rgbnir", *rgbnir_path, 3)};
        manifest.add_input("inputs.rgbnir", *rgbnir_path);
    } else {
        in.bands = RgbNir{load_grid(band_keys[0], *band_paths[0]), load_grid(band_keys[1], *band_paths[1]),
                          load_grid(band_keys[2], *band_paths[2]), load_grid(band_keys[3], *band_paths[3])};
        for (int k = 0; k < 4; ++k) manifest.add_input(band_keys[k], *band_paths[k]);
    }
    for (const char* key : {"inputs.signatures", "inputs.models"})
        if (const auto p = input_path(cfg, key, false)) manifest.add_input(key, *p);
    manifest.add_stage("load", seconds_since(t0));

    const Inventory inv = stage_guard("pipeline", [&] { return run_inventory(in, params, catalog, model); });
    for (const auto& [stage, s] : inv.stage_seconds) manifest.add_stage(stage, s);
    manifest.add_note("species_source", inv.species_bypass ? "species_map bypass (spectral stage skipped)"
                                                           : "spectral nearest-centroid");

    make_dir(out);
    const auto t1 = std::chrono::steady_clock::now();
    const std::vector<std::pair<std::string, std::function<void(const fs::path&)>>> artifacts = {
        {"chm.tif", [&](const fs::path& p) { save_geotiff(p, inv.chm); }},
        {"species.tif", [&](const fs::path& p) { save_geotiff(p, inv.species); }},
        {"crowns.geojson", [&](const fs::path& p) { write_text(p, crowns_geojson(inv.crowns.crowns, inv.crowns.labels)); }},
        {"trees.csv", [&](const fs::path& p) { write_text(p, trees_csv(inv.trees)); }},
        {"stand_carbon.json", [&](const fs::path& p) { write_text(p, stand_carbon_json(inv, model.id)); }},
        {"chm.png", [&](const fs::path& p) { write_bytes(p, render_heatmap(inv.chm, Palette::Viridis)); }},
        {"species.png", [&](const fs::path& p) { write_bytes(p, render_heatmap(inv.species, Palette::Categorical)); }},
    };
    for (const auto& [name, write] : artifacts) {
        stage_guard("output", [&] {
            write(out / name);
            return 0;
        });
        manifest.add_output(out / name);
    }
    manifest.add_stage("output", seconds_since(t1));
    write_text(out / "manifest.json", manifest.json());
}

void run_benchmark_command(const Config& cfg, unsigned threads) {
    const BenchmarkParams params = benchmark_params(cfg);
    const std::vector<double> sweep = cfg.list("benchmark.sweep", {90, 150, 300, 600, 1000});
    BenchmarkParams sweep_params = params;
    sweep_params.seeds = static_cast<int>(cfg.integer("benchmark.sweep_seeds", params.seeds));
    for (double s : sweep)
        if (!(s > 0)) throw ConfigError("benchmark.sweep", "spacings must be > 0");
    if (sweep_params.seeds < 1) throw ConfigError("benchmark.sweep_seeds", "must be >= 1");
    const AllometricModel model = load_model(cfg);
    const fs::path out = make_dir(output_path(cfg));
    cfg.reject_unused();

    Manifest manifest("benchmark", cfg.canonical(kVolatileKeys));
    manifest.set_threads(threads);
    for (const char* key : {"synth.species", "inputs.models"})
        if (const auto p = input_path(cfg, key, false)) manifest.add_input(key, *p);
    auto t0 = std::chrono::steady_clock::now();
    const BenchmarkResult result = stage_guard("benchmark", [&] { return run_benchmark(params, model); });
    manifest.add_stage("census_and_plots", seconds_since(t0));
    t0 = std::chrono::steady_clock::now();
    const auto points =
        stage_guard("spacing_sweep", [&] { return sweep.empty() ? std::vector<SweepPoint>{} : spacing_sweep(sweep_params, sweep, model); });
    manifest.add_stage("spacing_sweep", seconds_since(t0));
    write_text(out / "benchmark.json", benchmark_json(result, params, points));
    manifest.add_output(out / "benchmark.json");
    write_text(out / "manifest.json", manifest.json());
}

void run_synth_command(const Config& cfg, unsigned threads) {
    const SynthParams params = synth_params(cfg);
    const AllometricModel model = load_model(cfg);
    const fs::path out = make_dir(output_path(cfg));
    cfg.reject_unused();

    Manifest manifest("synth", cfg.canonical(kVolatileKeys));
    manifest.set_threads(threads);
    for (const char* key : {"synth.species", "inputs.models"})
        if (const auto p = input_path(cfg, key, false)) manifest.add_input(key, *p);
    auto t0 = std::chrono::steady_clock::now();
    const GroundTruth truth = stage_guard("generate", [&] { return generate(params, model); });
    manifest.add_stage("generate", seconds_since(t0));
    t0 = std::chrono::steady_clock::now();
    const SceneRasters scene = stage_guard("render", [&] { return render(truth, params); });
    manifest.add_stage("render", seconds_since(t0));

    const std::pair<const char*, const Grid*> grids[] = {{"dsm.tif", &scene.dsm}, {"dem.tif", &scene.dem},
                                                         {"red.tif", &scene.red}, {"green.tif", &scene.green},
                                                         {"blue.tif", &scene.blue}, {"nir.tif", &scene.nir}};
    for (const auto& [name, g] : grids) {
        save_geotiff(out / name, *g);
        manifest.add_output(out / name);
    }
    write_text(out / "truth.csv", truth_csv(truth));
    manifest.add_output(out / "truth.csv");
    write_text(out / "truth.json", truth_json(truth, params));
    manifest.add_output(out / "truth.json");
    write_text(out / "species.csv", species_csv(params.species));
    manifest.add_output(out / "species.csv");

    // Ready-to-run inventory config pointing at the rendered scene.
    const fs::path abs = fs::absolute(out);
    std::string conf = "[inputs]\n";
    for (const char* band : {"dsm", "dem", "red", "green", "blue", "nir"})
        conf += fmt::format("{} = {}\n", band, (abs / (std::string(band) + ".tif")).string());
    conf += fmt::format("signatures = {}\n", (abs / "species.csv").string());
    conf += fmt::format("\n[allometry]\nmodel = {}\n", model.id);
    write_text(out / "inventory.conf", conf);
    write_text(out / "manifest.json", manifest.json());
}

void run_costs_command(const Config& cfg, std::string& text_out) {
    CostModels models = default_cost_models();
    if (const auto p = input_path(cfg, "inputs.costs", false))
        models = input_guard("inputs.costs", [&] { return parse_cost_models_csv(read_text_file(p->string())); });
    const double area = cfg.num("costs.area_ha", 100.0);
    double tco2e = cfg.num("costs.tco2e", 1.0);
    if (const auto stand = input_path(cfg, "costs.stand", false)) {
        tco2e = input_guard("costs.stand", [&] {
            try {
                const auto j = nlohmann::json::parse(read_text_file(stand->string()));
                return j.at("co2e_kg").get<double>() / 1000.0;
            } catch (const nlohmann::json::exception& e) {
                throw canopy::InvalidArgument(std::string("not a stand_carbon.json: ") + e.what());
            }
        });
    }
    if (!(area >= 0)) throw ConfigError("costs.area_ha", "must be >= 0");
    if (!(tco2e >= 0)) throw ConfigError("costs.tco2e", "must be >= 0");
    const bool write = cfg.has("output.dir");
    const fs::path out = write ? make_dir(output_path(cfg)) : fs::path{};
    cfg.reject_unused();
    text_out = stage_guard("costs", [&] { return costs_report_text(models, area, tco2e); });
    if (write) {
        write_text(out / "costs.json", costs_report_json(models, area, tco2e));
        write_text(out / "costs.txt", text_out);
    }
}

std::string error_json(int code, const std::string& kind, const std::string& where, const std::string& message) {
    nlohmann::ordered_json j;
    j["status"] = "error";
    j["exit_code"] = code;
    j["kind"] = kind;
    j["where"] = where;
    j["message"] = message;
    return j.dump();
}

}  // namespace canopy::cli
