#pragma once

#include "mixcure/inference.hpp"
#include "mixcure/lasso.hpp"
#include "mixcure/simgen.hpp"

#include <iosfwd>
#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

namespace mixcure {

// Ordered key/value pairs written at the top of every output file.
using Provenance = std::vector<std::pair<std::string, std::string>>;

/// Reads delimited text (comma, tab or semicolon, detected from the header).
/// Columns: time, status (0 censored, 1 event, 2 known cured), then any of
/// x*, z*, q* covariates. Blank lines and lines starting with '#' are skipped.
Dataset read_dataset(std::istream& in);
Dataset read_dataset_file(const std::string& path);

void write_dataset(std::ostream& out, const Dataset& data, const Provenance& provenance = {});
void write_truth(std::ostream& out, const std::vector<TruthRecord>& truth, const Provenance& provenance = {});

/// Shortest decimal form that parses back to the same double.
std::string format_number(double v);

void write_provenance(std::ostream& out, const Provenance& provenance);

nlohmann::json to_json(const Provenance& provenance);
nlohmann::json to_json(const FitResult& fit, const Dataset& data);
nlohmann::json to_json(const BootstrapResult& boot, const std::vector<std::string>& names);
nlohmann::json to_json(const StudyReport& report);
nlohmann::json to_json(const RealizedRates& rates);
nlohmann::json to_json(const BicPath& path);

/// name, estimate[, ci_lower, ci_upper]
void write_coefficient_table(std::ostream& out, const FitResult& fit, const Dataset& data,
                             const BootstrapResult* boot, const Provenance& provenance = {});
/// Latency (and cure-identification) baseline cumulative hazard steps.
void write_baseline_table(std::ostream& out, const FitResult& fit, const Provenance& provenance = {});
/// One row per scenario x strategy x coefficient.
void write_study_table(std::ostream& out, const std::vector<StudyReport>& reports,
                       const Provenance& provenance = {});
/// One row per scenario x replicate x strategy x coefficient.
void write_records_table(std::ostream& out, const std::vector<StudyReport>& reports,
                         const Provenance& provenance = {});

}  // namespace mixcure
