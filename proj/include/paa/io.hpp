#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "paa/core.hpp"
#include "paa/simgen.hpp"
#include "paa/solvers.hpp"
#include "paa/viz.hpp"

namespace paa {

struct RaggedRowError final : Error {
    using Error::Error;
};

// Bad flags / argument combinations; mapped to exit code 2 by the CLI.
struct UsageError final : Error {
    using Error::Error;
};

enum class Orientation { rows_are_observations, columns_are_observations };

// Reads a rectangular numeric CSV (RFC-4180 subset, UTF-8, '.' decimals).
// With auto_detect, a non-numeric first cell drops a header row and a
// non-numeric first column is treated as ids.  The returned DataMatrix always
// has observations as columns.
DataMatrix ingest_csv(const std::string& path, Orientation orientation,
                      Domain domain, bool auto_detect = true);

// Writes `values` with observations as rows (the ingestion default).
void write_csv_rows_are_observations(const std::string& path,
                                     const Matrix& values);

// FNV-1a 64-bit hash over shape, domain tag, and raw value bytes.
std::uint64_t data_fingerprint(const DataMatrix& x);

// ---------------------------------------------------------------------------
// JSON documents (schema_version 1)
// ---------------------------------------------------------------------------

struct ModelDocument {
    int schema_version = 1;
    ArchetypalModel model;
    int iterations = 0;
    bool converged = false;
    double final_nll = 0.0;
    double stochasticity_residual = 0.0;
    std::uint64_t data_fingerprint = 0;
};

void save_model_document(const std::string& path, const ModelDocument& doc);
ModelDocument load_model_document(const std::string& path);

struct TruthDocument {
    int schema_version = 1;
    std::string kind; // generator kind: binary | poisson | multinomial
    Matrix true_archetypes;
    Matrix true_h;
    std::string config_json; // generator parameters, self-describing
};

void save_truth_document(const std::string& path, const TruthDocument& doc);
TruthDocument load_truth_document(const std::string& path);

void save_layout_document(const std::string& path, const SimplexLayout& layout);

void save_match_document(const std::string& path, const MatchResult& result,
                         const std::string& metric);

// ---------------------------------------------------------------------------
// CLI entry point (subcommands: fit, elbow, simulate, viz, match)
// ---------------------------------------------------------------------------

// Returns the process exit code: 0 success, 1 runtime failure, 2 usage error.
int run_cli(const std::vector<std::string>& args);

} // namespace paa
