#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "ppikit/csv.hpp"
#include "ppikit/data_model.hpp"
#include "ppikit/rng.hpp"

using namespace ppikit;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& contents)
        : path("ppikit_test_" + name) {
        std::ofstream out(path);
        out << contents;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return Errc::IoError;
}

bool datasets_identical(const Dataset& a, const Dataset& b) {
    if (a.n() != b.n() || a.p() != b.p() || a.n_labeled() != b.n_labeled()) return false;
    for (std::size_t r = 0; r < a.n(); ++r) {
        if (a.row_id(r) != b.row_id(r)) return false;
        if (a.is_labeled(r) != b.is_labeled(r)) return false;
        if (a.is_labeled(r) && *a.outcome(r) != *b.outcome(r)) return false;
        for (std::size_t c = 0; c < a.p(); ++c) {
            if (a.covariates()(r, c) != b.covariates()(r, c)) return false;
        }
    }
    return true;
}

} // namespace

TEST_CASE("well-formed 4-row csv ingests with the expected counts") {
    TempFile f("ok.csv",
               "id,x1,x2,y,s\n"
               "0,0.5,1.0,2.5,1\n"
               "1,-0.25,0.0,1.5,1\n"
               "2,0.75,2.0,,0\n"
               "3,1.5,-1.0,,0\n");
    auto res = ingest_csv(f.path);
    CHECK(res.dataset.n() == 4);
    CHECK(res.dataset.n_labeled() == 2);
    CHECK(res.dataset.n_unlabeled() == 2);
    CHECK(res.dataset.p() == 2);
    CHECK_FALSE(res.predictions.has_value());
    CHECK(*res.dataset.outcome(0) == 2.5);
    CHECK_FALSE(res.dataset.outcome(2).has_value());
}

TEST_CASE("labeled row with empty outcome is malformed") {
    TempFile f("missing_y.csv",
               "id,x1,y,s\n"
               "0,0.5,2.5,1\n"
               "1,1.5,,1\n"
               "2,0.1,,0\n");
    CHECK(code_of([&] { ingest_csv(f.path); }) == Errc::MalformedRow);
}

TEST_CASE("missing covariate cell is malformed and cites A3") {
    TempFile f("missing_x.csv",
               "id,x1,y,s\n"
               "0,0.5,2.5,1\n"
               "1,,1.0,1\n"
               "2,0.1,,0\n");
    try {
        ingest_csv(f.path);
        FAIL("expected MalformedRow");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MalformedRow);
        CHECK(std::string(e.what()).find("A3") != std::string::npos);
    }

    CsvSchema lenient;
    lenient.allow_incomplete_rows = true;
    auto res = ingest_csv(f.path, lenient);
    CHECK(res.dataset.n() == 2);
    CHECK(res.dataset.rejected_covariate_rows() == 1);
}

TEST_CASE("ingest error catalogue") {
    TempFile no_col("no_col.csv", "id,x1,s\n0,1.0,1\n");
    CHECK(code_of([&] { ingest_csv(no_col.path); }) == Errc::MissingColumn);

    TempFile no_labeled("no_labeled.csv", "id,x1,y,s\n0,1.0,,0\n1,2.0,,0\n");
    CHECK(code_of([&] { ingest_csv(no_labeled.path); }) == Errc::EmptyLabeledSet);

    TempFile bad_label("bad_label.csv", "id,x1,y,s\n0,1.0,1.0,2\n");
    CHECK(code_of([&] { ingest_csv(bad_label.path); }) == Errc::MalformedRow);

    TempFile unlabeled_y("unlabeled_y.csv", "id,x1,y,s\n0,1.0,1.0,1\n1,2.0,3.0,0\n");
    CHECK(code_of([&] { ingest_csv(unlabeled_y.path); }) == Errc::MalformedRow);

    CHECK(code_of([] { ingest_csv("does_not_exist.csv"); }) == Errc::IoError);
}

TEST_CASE("split views partition rows and preserve ids") {
    TempFile f("views.csv",
               "id,x1,y,s,yhat\n"
               "10,0.5,2.5,1,2.0\n"
               "11,1.5,3.5,1,3.0\n"
               "12,0.1,,0,1.0\n"
               "13,0.9,,0,4.0\n");
    auto res = ingest_csv(f.path);
    REQUIRE(res.predictions.has_value());

    auto [lab, unl] = split_views(res.dataset, *res.predictions);
    CHECK(lab.size() == 2);
    CHECK(unl.size() == 2);
    CHECK(lab.row_ids == std::vector<std::int64_t>{10, 11});
    CHECK(unl.row_ids == std::vector<std::int64_t>{12, 13});
    CHECK(lab.y == std::vector<double>{2.5, 3.5});
    CHECK(lab.yhat == std::vector<double>{2.0, 3.0});
    CHECK(unl.yhat == std::vector<double>{1.0, 4.0});
    CHECK(lab.x(0, 0) == 0.5);
    CHECK(unl.x(1, 0) == 0.9);
}

TEST_CASE("all rows labeled leaves the unlabeled view empty") {
    Matrix x(3, 1);
    x(0, 0) = 1;
    x(1, 0) = 2;
    x(2, 0) = 3;
    auto d = Dataset::create(x, {1, 1, 1}, {1.0, 2.0, 3.0});
    auto [lab, unl] = split_views(d);
    CHECK(lab.size() == 3);
    CHECK(unl.size() == 0);
}

TEST_CASE("prediction set must cover every row") {
    Matrix x(3, 1);
    auto d = Dataset::create(x, {1, 1, 0}, {1.0, 2.0});
    PredictionSet short_preds{{1.0, 2.0}, Pretrained{}};
    CHECK(code_of([&] { split_views(d, short_preds); }) == Errc::MissingPredictions);
}

TEST_CASE("outcomes of unlabeled rows are not representable") {
    Matrix x(2, 1);
    // Only labeled rows carry outcomes; handing over more outcomes than
    // labeled rows is rejected at construction.
    CHECK_THROWS_AS(Dataset::create(x, {1, 0}, {1.0, 2.0}), Error);
    auto d = Dataset::create(x, {1, 0}, {1.0});
    CHECK_FALSE(d.outcome(1).has_value());
}

TEST_CASE("round trip: ingest(emit(d)) reproduces d bit-exactly") {
    Rng rng(99);
    Matrix x(50, 3);
    std::vector<std::uint8_t> labels(50);
    std::vector<double> outcomes;
    std::vector<double> preds(50);
    for (std::size_t r = 0; r < 50; ++r) {
        for (std::size_t c = 0; c < 3; ++c) x(r, c) = rng.normal() * 12.345;
        labels[r] = rng.bernoulli(0.6) ? 1 : 0;
        if (labels[r]) outcomes.push_back(rng.normal() / 7.0);
        preds[r] = rng.normal() * 1e-3;
    }
    if (outcomes.empty()) {
        labels[0] = 1;
        outcomes.push_back(0.25);
    }
    auto d = Dataset::create(x, labels, outcomes);
    PredictionSet ps{preds, Pretrained{}};

    TempFile f("roundtrip.csv", "");
    emit_csv(f.path, d, &ps);
    auto back = ingest_csv(f.path);
    CHECK(datasets_identical(d, back.dataset));
    REQUIRE(back.predictions.has_value());
    CHECK(back.predictions->values == preds);

    // Re-emission is byte-identical.
    TempFile f2("roundtrip2.csv", "");
    emit_csv(f2.path, back.dataset, &*back.predictions);
    std::ifstream a(f.path), b(f2.path);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
}
