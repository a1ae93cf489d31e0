#pragma once

#include <string>

#include "bque/config.hpp"

namespace bque {

/// Staged experiment driver. Each stage reads the artifacts of the previous
/// ones from the configured output directory and writes its own:
///   classical -> classical_spectrum.csv
///   solve     -> modes.bqm, weyl.csv
///   elements  -> diagonal.csv, block.csv
///   stats     -> variance_series.csv, fit.json, band_profile.csv,
///                histogram.csv, extremes.csv, moments.csv
///   report    -> report.txt (comparison against the published values)
///   verify    -> oracle self-checks, no artifacts
/// Missing prerequisites are reported by file name. Returns the process
/// exit status (0 ok; the CLI maps validation errors to 1 and compute
/// errors to 2).
int run_pipeline(const PipelineConfig& config, const std::string& subcommand);

}  // namespace bque
