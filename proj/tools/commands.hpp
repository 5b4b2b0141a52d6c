#pragma once

#include <stdexcept>
#include <string>

#include "canopy/benchmark.hpp"
#include "canopy/pipeline.hpp"
#include "canopy/synthforest.hpp"
#include "config.hpp"

namespace canopy::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kInputError = 3, kStageError = 4 };

// An input file exists but cannot be parsed. Exit status 3.
class InputError : public std::runtime_error {
public:
    InputError(const std::string& field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(field) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// A pipeline stage failed on parsed inputs. Exit status 4.
class StageError : public std::runtime_error {
public:
    StageError(const std::string& stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(stage) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

// Parameter blocks read from a config; all throw ConfigError on bad values.
InventoryParams inventory_params(const Config& cfg);
SynthParams synth_params(const Config& cfg, SynthParams base = {});
BenchmarkParams benchmark_params(const Config& cfg);

// Each returns normally on success and throws ConfigError, InputError or
// StageError otherwise. `threads` is recorded in the manifest only.
void run_inventory_command(const Config& cfg, unsigned threads);
void run_benchmark_command(const Config& cfg, unsigned threads);
void run_synth_command(const Config& cfg, unsigned threads);
// Writes the text table to `text_out`.
void run_costs_command(const Config& cfg, std::string& text_out);

// One-line JSON error record for stderr.
std::string error_json(int code, const std::string& kind, const std::string& where, const std::string& message);

}  // namespace canopy::cli
