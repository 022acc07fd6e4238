#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pact/csvio.hpp"
#include "pact/errors.hpp"
#include "pact/rng.hpp"
#include "test_support.hpp"

using namespace pact;

TEST_CASE("mix_seed is deterministic and spreads nearby keys") {
    CHECK(mix_seed(1, 2) == mix_seed(1, 2));
    CHECK(mix_seed(1, 2) != mix_seed(1, 3));
    CHECK(mix_seed(1, 2) != mix_seed(2, 2));
    CHECK(mix_seed(0, 0) != mix_seed(0, 1));

    // Nearby counters should produce well-separated values.
    std::vector<std::uint64_t> vals;
    for (std::uint64_t c = 0; c < 1000; ++c) {
        vals.push_back(mix_seed(42, c));
    }
    std::sort(vals.begin(), vals.end());
    CHECK(std::adjacent_find(vals.begin(), vals.end()) == vals.end());
}

TEST_CASE("uniform01 stays inside the open unit interval") {
    for (std::uint64_t c = 0; c < 10000; ++c) {
        double u = uniform01(mix_seed(7, c));
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("normal_quantile inverts normal_cdf") {
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(normal_quantile(0.95) == doctest::Approx(1.6448536270).epsilon(1e-7));
    for (double p : {0.001, 0.01, 0.2, 0.4, 0.6, 0.8, 0.99, 0.999}) {
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-8));
    }
}

TEST_CASE("truncated_normal_quantile matches the renormalized CDF") {
    const double cut = 3.0;
    CHECK(truncated_normal_quantile(0.5, cut) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(truncated_normal_quantile(0.05, cut) ==
          doctest::Approx(-truncated_normal_quantile(0.95, cut)).epsilon(1e-9));

    // Independent check: F_trunc(x) = (Phi(x) - Phi(-cut)) / (Phi(cut) - Phi(-cut)).
    auto trunc_cdf = [&](double x) {
        double lo = normal_cdf(-cut);
        double hi = normal_cdf(cut);
        return (normal_cdf(x) - lo) / (hi - lo);
    };
    for (double p : {0.01, 0.1, 0.25, 0.75, 0.9, 0.99}) {
        double x = truncated_normal_quantile(p, cut);
        CHECK(x >= -cut);
        CHECK(x <= cut);
        CHECK(trunc_cdf(x) == doctest::Approx(p).epsilon(1e-7));
    }
}

TEST_CASE("truncated_normal_draw is bounded, keyed, and centered") {
    const double cut = 3.0;
    double sum = 0.0;
    double sum_sq = 0.0;
    const int n = 20000;
    for (int c = 0; c < n; ++c) {
        double z = truncated_normal_draw(99, static_cast<std::uint64_t>(c), cut);
        CHECK(z >= -cut);
        CHECK(z <= cut);
        sum += z;
        sum_sq += z * z;
    }
    CHECK(truncated_normal_draw(99, 7, cut) == truncated_normal_draw(99, 7, cut));
    CHECK(truncated_normal_draw(99, 7, cut) != truncated_normal_draw(100, 7, cut));

    double mean = sum / n;
    double var = sum_sq / n - mean * mean;
    // Variance of a +/-3 truncated standard normal: 1 - 2*3*phi(3)/(2*Phi(3)-1).
    double phi3 = std::exp(-4.5) / std::sqrt(2.0 * 3.14159265358979323846);
    double expected_var = 1.0 - 2.0 * cut * phi3 / (2.0 * normal_cdf(cut) - 1.0);
    CHECK(std::abs(mean) < 0.02);
    CHECK(var == doctest::Approx(expected_var).epsilon(0.05));
}

TEST_CASE("format_double uses shortest %.10g forms") {
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-2.5) == "-2.5");
    CHECK(format_double(1e30) == "1e+30");
    CHECK(format_double(0.0) == "0");
}

TEST_CASE("write_file_atomic round-trips and creates parents") {
    testsup::TempDir tmp;
    std::string nested = tmp.file("a/b/c.txt");
    write_file_atomic(nested, "hello\nworld\n");
    CHECK(read_file(nested) == "hello\nworld\n");

    write_file_atomic(nested, "replaced");
    CHECK(read_file(nested) == "replaced");

    // No temp files left behind.
    int entries = 0;
    for (auto& e : std::filesystem::directory_iterator(tmp.path() + "/a/b")) {
        (void)e;
        ++entries;
    }
    CHECK(entries == 1);
}

TEST_CASE("read_file reports missing paths") {
    CHECK_THROWS_AS(read_file("/nonexistent/path/file.txt"), RuntimeError);
}

TEST_CASE("split_csv_line and split_lines handle edge shapes") {
    CHECK(split_csv_line("a,b,,c") == std::vector<std::string>{"a", "b", "", "c"});
    CHECK(split_csv_line("single") == std::vector<std::string>{"single"});
    CHECK(split_csv_line("") == std::vector<std::string>{""});

    CHECK(split_lines("x\ny\n") == std::vector<std::string>{"x", "y"});
    CHECK(split_lines("x\r\ny\r\n") == std::vector<std::string>{"x", "y"});
    CHECK(split_lines("x\ny") == std::vector<std::string>{"x", "y"});
    CHECK(split_lines("") == std::vector<std::string>{});
}
