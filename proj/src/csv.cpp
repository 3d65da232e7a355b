#include "ppikit/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <system_error>

namespace ppikit {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

std::optional<double> parse_double(const std::string& raw) {
    std::string s = trim(raw);
    if (s.empty()) return std::nullopt;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return {buf, ptr};
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) raise(Errc::MissingColumn, name);
    return static_cast<std::size_t>(it - header.begin());
}

} // namespace

IngestResult ingest_csv(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) raise(Errc::IoError, "cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) raise(Errc::MalformedRow, "line 1: missing header");
    std::vector<std::string> header = split_line(line);
    for (auto& h : header) h = trim(h);

    const std::size_t y_col = find_column(header, schema.outcome_column);
    const std::size_t s_col = find_column(header, schema.label_column);

    std::optional<std::size_t> id_col;
    if (auto it = std::find(header.begin(), header.end(), schema.id_column);
        it != header.end()) {
        id_col = static_cast<std::size_t>(it - header.begin());
    }

    std::optional<std::size_t> yhat_col;
    if (!schema.prediction_column.empty()) {
        yhat_col = find_column(header, schema.prediction_column);
    } else if (auto it = std::find(header.begin(), header.end(), "yhat");
               it != header.end()) {
        yhat_col = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<std::size_t> x_cols;
    if (schema.covariate_columns.empty()) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c == y_col || c == s_col) continue;
            if (id_col && c == *id_col) continue;
            if (yhat_col && c == *yhat_col) continue;
            x_cols.push_back(c);
        }
    } else {
        for (const auto& name : schema.covariate_columns) {
            x_cols.push_back(find_column(header, name));
        }
    }
    const std::size_t p = x_cols.size();

    std::vector<std::vector<double>> x_by_col(p);
    std::vector<std::uint8_t> labels;
    std::vector<double> outcomes_labeled;
    std::vector<double> yhat_values;
    std::vector<std::int64_t> row_ids;
    std::size_t rejected = 0;
    std::size_t line_no = 1;

    auto malformed = [&](const std::string& why) {
        raise(Errc::MalformedRow, "line " + std::to_string(line_no) + ": " + why);
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::vector<std::string> fields = split_line(line);
        if (fields.size() != header.size()) {
            malformed("expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
        }

        std::vector<double> xs(p);
        bool covariate_missing = false;
        for (std::size_t j = 0; j < p; ++j) {
            auto v = parse_double(fields[x_cols[j]]);
            if (!v) {
                covariate_missing = true;
                if (!schema.allow_incomplete_rows) {
                    malformed("missing covariate '" + header[x_cols[j]] +
                              "' violates complete-covariate assumption (A3)");
                }
                break;
            }
            xs[j] = *v;
        }
        if (covariate_missing) {
            ++rejected;
            continue;
        }

        const std::string s_raw = trim(fields[s_col]);
        if (s_raw != "0" && s_raw != "1") {
            malformed("label column must be literal 0 or 1, got '" + s_raw + "'");
        }
        const bool labeled = s_raw == "1";

        auto y = parse_double(fields[y_col]);
        if (labeled && !y) malformed("labeled row has empty or unparsable outcome");
        if (!labeled && y) malformed("unlabeled row must leave the outcome cell empty");

        double yh = 0.0;
        if (yhat_col) {
            auto v = parse_double(fields[*yhat_col]);
            if (!v) malformed("missing prediction value");
            yh = *v;
        }

        for (std::size_t j = 0; j < p; ++j) x_by_col[j].push_back(xs[j]);
        labels.push_back(labeled ? 1 : 0);
        if (labeled) outcomes_labeled.push_back(*y);
        if (yhat_col) yhat_values.push_back(yh);
        if (id_col) {
            std::int64_t id = 0;
            const std::string id_raw = trim(fields[*id_col]);
            auto [ptr, ec] = std::from_chars(id_raw.data(), id_raw.data() + id_raw.size(), id);
            if (ec != std::errc{} || ptr != id_raw.data() + id_raw.size()) {
                malformed("unparsable id '" + id_raw + "'");
            }
            row_ids.push_back(id);
        }
    }

    if (outcomes_labeled.empty()) {
        raise(Errc::EmptyLabeledSet, path + " contains no labeled rows");
    }

    const std::size_t n = labels.size();
    Matrix x(n, p);
    for (std::size_t j = 0; j < p; ++j) {
        std::copy(x_by_col[j].begin(), x_by_col[j].end(), x.col(j).begin());
    }

    IngestResult out{Dataset::create(std::move(x), std::move(labels),
                                     std::move(outcomes_labeled), std::move(row_ids)),
                     std::nullopt};
    out.dataset.set_rejected_covariate_rows(rejected);
    if (yhat_col) {
        out.predictions = PredictionSet{std::move(yhat_values), Pretrained{}};
    }
    return out;
}

void emit_csv(const std::string& path, const Dataset& d, const PredictionSet* preds) {
    if (preds && preds->values.size() != d.n()) {
        raise(Errc::MissingPredictions, "prediction set length != dataset rows");
    }
    std::ofstream out(path);
    if (!out) raise(Errc::IoError, "cannot write " + path);

    out << "id";
    for (std::size_t c = 0; c < d.p(); ++c) out << ",x" << (c + 1);
    out << ",y,s";
    if (preds) out << ",yhat";
    out << "\n";

    for (std::size_t r = 0; r < d.n(); ++r) {
        out << d.row_id(r);
        for (std::size_t c = 0; c < d.p(); ++c) {
            out << ',' << format_double(d.covariates()(r, c));
        }
        out << ',';
        if (auto y = d.outcome(r)) out << format_double(*y);
        out << ',' << (d.is_labeled(r) ? '1' : '0');
        if (preds) out << ',' << format_double(preds->values[r]);
        out << "\n";
    }
    if (!out) raise(Errc::IoError, "failed writing " + path);
}

} // namespace ppikit
