#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ppikit/data_model.hpp"

namespace ppikit {

// Column mapping for ingestion. Empty covariate list means "every column not
// otherwise claimed, in header order". The canonical layout is
// id, x1..xp, y, s[, yhat] with y empty on unlabeled rows.
struct CsvSchema {
    std::vector<std::string> covariate_columns;
    std::string outcome_column = "y";
    std::string label_column = "s";
    std::string prediction_column;        // empty: use "yhat" when present
    std::string id_column = "id";         // optional in the file
    // Drop rows with missing covariate cells instead of failing; the dropped
    // count lands in Dataset::rejected_covariate_rows for the A3 diagnostic.
    bool allow_incomplete_rows = false;
};

struct IngestResult {
    Dataset dataset;
    std::optional<PredictionSet> predictions;
};

IngestResult ingest_csv(const std::string& path, const CsvSchema& schema = {});

// Canonical emission (id, x1..xp, y, s[, yhat]); doubles use shortest
// round-trip formatting so ingest(emit(d)) reproduces d bit-exactly.
void emit_csv(const std::string& path, const Dataset& d,
              const PredictionSet* preds = nullptr);

} // namespace ppikit
