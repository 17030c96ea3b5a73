#include "latentpath/dataset.hpp"
#include "latentpath/error.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <random>

using namespace latentpath;
using Catch::Matchers::WithinAbs;

TEST_CASE("three-row two-column table", "[data-moments]") {
    const Dataset d = parse_table("a,b\n1,2\n3,4\n5,6\n");
    CHECK(d.rows() == 3);
    CHECK(d.cols() == 2);
    CHECK(d.names == std::vector<std::string>{"a", "b"});
    CHECK(d.values(2, 1) == 6.0);
}

TEST_CASE("blank and NA cells are missing", "[data-moments]") {
    const Dataset d = parse_table("a,b\n1,\nNA,4\n5,6\n7,9\n");
    CHECK(d.missing(0, 1));
    CHECK(d.missing(1, 0));
    CHECK_FALSE(d.missing(2, 0));
    const SampleMoments m = covariance(d);
    CHECK(m.n == 2);
}

TEST_CASE("table format errors", "[data-moments]") {
    CHECK_THROWS_AS(parse_table("a,b\n"), DataError);
    CHECK_THROWS_AS(parse_table(""), DataError);
    CHECK_THROWS_AS(parse_table("a,b\n1,2\n3\n"), DataError);
    CHECK_THROWS_AS(load_table("/nonexistent/file.csv"), DataError);
}

TEST_CASE("quotes, tabs, CRLF", "[data-moments]") {
    const Dataset d = parse_table("\"x\",\"y\"\r\n\"1\",2\r\n3,4\r\n");
    CHECK(d.names == std::vector<std::string>{"x", "y"});
    CHECK(d.values(0, 0) == 1.0);
    const Dataset t = parse_table("x\ty\n1\t2\n", {'\t'});
    CHECK(t.values(0, 1) == 2.0);
}

TEST_CASE("identical columns correlate perfectly", "[data-moments]") {
    const SampleMoments m = covariance(parse_table("a,b\n1,1\n2,2\n4,4\n7,7\n"));
    CHECK_THAT(m.correlation(0, 1), WithinAbs(1.0, 1e-12));
}

TEST_CASE("constant column is flagged", "[data-moments]") {
    const SampleMoments m = covariance(parse_table("a,b\n1,3\n2,3\n4,3\n"));
    CHECK(m.zero_variance == std::vector<bool>{false, true});
    CHECK(m.has_zero_variance());
    CHECK(std::isnan(m.correlation(0, 1)));
    CHECK(m.correlation(1, 1) == 1.0);
}

TEST_CASE("too few complete rows", "[data-moments]") {
    CHECK_THROWS_AS(covariance(parse_table("a,b\n1,2\n")), DataError);
    CHECK_THROWS_AS(covariance(parse_table("a,b\n1,\n,2\n3,4\n")), DataError);
}

TEST_CASE("4x3 hand dataset matches a brute-force double loop", "[data-moments]") {
    const Dataset d = parse_table("a,b,c\n1,2,0\n2,1,1\n4,3,1\n5,6,2\n");
    // Independent double-loop evaluation of sum (x - mean)(y - mean) / (n - 1).
    const int n = d.rows(), p = d.cols();
    Eigen::MatrixXd brute(p, p);
    for (int i = 0; i < p; ++i) {
        for (int j = 0; j < p; ++j) {
            double mi = 0, mj = 0;
            for (int r = 0; r < n; ++r) mi += d.values(r, i), mj += d.values(r, j);
            mi /= n;
            mj /= n;
            double acc = 0;
            for (int r = 0; r < n; ++r) acc += (d.values(r, i) - mi) * (d.values(r, j) - mj);
            brute(i, j) = acc / (n - 1);
        }
    }
    const SampleMoments m = covariance(d);
    CHECK(m.covariance.isApprox(brute, 1e-14));
    // Frozen values from the numpy oracle.
    CHECK_THAT(m.covariance(0, 0), WithinAbs(10.0 / 3.0, 1e-12));
    CHECK_THAT(m.covariance(1, 1), WithinAbs(14.0 / 3.0, 1e-12));
    CHECK_THAT(m.covariance(0, 2), WithinAbs(4.0 / 3.0, 1e-12));
    CHECK_THAT(m.covariance(2, 2), WithinAbs(2.0 / 3.0, 1e-12));
}

TEST_CASE("moment properties", "[data-moments][property]") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> shift(-100, 100);
    for (int rep = 0; rep < 25; ++rep) {
        Dataset d;
        d.names = {"a", "b", "c", "d"};
        d.values.resize(30, 4);
        for (int i = 0; i < 30; ++i)
            for (int j = 0; j < 4; ++j) d.values(i, j) = normal(rng) + (j == 1 ? d.values(i, 0) : 0.0);
        d.raw.assign(30, std::vector<std::string>(4, "0"));
        const SampleMoments base = covariance(d);

        Dataset shifted = d;
        for (int j = 0; j < 4; ++j) shifted.values.col(j).array() += shift(rng);
        CHECK(covariance(shifted).covariance.isApprox(base.covariance, 1e-9));

        const SampleMoments by_n = covariance(d, Divisor::N);
        CHECK(by_n.covariance.isApprox(base.covariance * (29.0 / 30.0), 1e-13));

        CHECK((base.correlation.diagonal().array() == 1.0).all());
        CHECK((base.correlation.array().abs() <= 1.0 + 1e-15).all());
        CHECK(base.covariance.isApprox(base.covariance.transpose(), 0.0));
    }
}

TEST_CASE("frequency tables", "[data-moments]") {
    std::string text = "gender\n";
    for (int i = 0; i < 519; ++i) text += i < 236 ? "Male\n" : "Female\n";
    const auto rows = frequency_table(parse_table(text), "gender");
    REQUIRE(rows.size() == 2);
    const auto& male = rows[0].level == "Male" ? rows[0] : rows[1];
    CHECK(male.count == 236);
    CHECK_THAT(male.percentage, WithinAbs(45.47, 0.005));

    const auto single = frequency_table(parse_table("v\n3\n3\n"), "v");
    REQUIRE(single.size() == 1);
    CHECK(single[0].percentage == 100.0);

    const auto three = frequency_table(parse_table("v\n1\n2\n3\n3\n"), "v");
    REQUIRE(three.size() == 3);
    CHECK(three[0].percentage == 25.0);
    CHECK(three[1].percentage == 25.0);
    CHECK(three[2].percentage == 50.0);
    int total = 0;
    for (const auto& r : three) total += r.count;
    CHECK(total == 4);

    // Numeric levels sort numerically, missing cells are skipped.
    const auto numeric = frequency_table(parse_table("v\n10\n9\n\n10\n"), "v");
    REQUIRE(numeric.size() == 2);
    CHECK(numeric[0].level == "9");
    CHECK_THROWS_AS(frequency_table(parse_table("v\n1\n"), "w"), DataError);
}

TEST_CASE("write and reload preserves values", "[data-moments]") {
    Dataset d = parse_table("a,b\n0.1,NA\n1e-300,3.3333333333333335\n");
    const std::string path = (std::filesystem::temp_directory_path() / "latentpath_roundtrip_test.csv").string();
    write_table(d, path);
    const Dataset back = load_table(path);
    CHECK(back.missing(0, 1));
    CHECK(back.values(1, 0) == 1e-300);
    CHECK(back.values(1, 1) == 3.3333333333333335);
}
