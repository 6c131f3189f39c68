#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fairpost/core.hpp"
#include "fairpost/rng.hpp"

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

}  // namespace

TEST_CASE("dataset bookkeeping: counts, cells, subset") {
    fairpost::Dataset data(2, 3);
    auto row = [&](std::vector<double> x, int a, int y) {
        data.add(x, a, y);
    };
    row({0.0, 1.0}, 1, 1);
    row({0.5, -1.0}, 1, 0);
    row({2.0, 2.0}, 2, 1);
    row({3.0, 3.0}, 3, 0);
    row({4.0, 4.0}, 3, 1);

    CHECK(data.n() == 5);
    CHECK(data.d() == 2);
    CHECK(data.k_groups() == 3);
    CHECK(data.group_count(1) == 2);
    CHECK(data.group_count(2) == 1);
    CHECK(data.group_count(3) == 2);
    CHECK(data.label_count(1) == 3);
    CHECK(data.label_count(0) == 2);
    CHECK(data.cell_count(1, 1) == 1);
    CHECK(data.cell_count(0, 3) == 1);

    auto sub = data.subset({0, 2, 4});
    CHECK(sub.n() == 3);
    CHECK(sub.a(1) == 2);
    CHECK(sub.y(2) == 1);
    CHECK(sub.x(2)[0] == 4.0);
}

TEST_CASE("dataset validates group and label ranges") {
    fairpost::Dataset data(1, 2);
    std::vector<double> one{1.0};
    std::vector<double> two{1.0, 2.0};
    CHECK_THROWS_AS(data.add(one, 0, 1), fairpost::DataError);
    CHECK_THROWS_AS(data.add(one, 3, 1), fairpost::DataError);
    CHECK_THROWS_AS(data.add(one, 1, 2), fairpost::DataError);
    CHECK_THROWS_AS(data.add(two, 1, 1), fairpost::DataError);
}

TEST_CASE("csv round trip preserves every double bit-for-bit") {
    fairpost::rng::Stream s(fairpost::rng::derive(0xc0ffee, 7));
    fairpost::Dataset data(3, 2);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> x{s.next_normal(), s.next_uniform(-10, 10),
                              s.next_unit()};
        data.add(x, 1 + static_cast<int>(s.next_u64() % 2),
                 static_cast<int>(s.next_u64() % 2));
    }
    auto path = temp_file("fairpost_core_roundtrip.csv");
    fairpost::write_dataset_csv(path.string(), data);
    auto back = fairpost::read_dataset_csv(path.string());
    REQUIRE(back.n() == data.n());
    REQUIRE(back.d() == data.d());
    CHECK(back.k_groups() == data.k_groups());
    for (std::size_t i = 0; i < data.n(); ++i) {
        CHECK(back.a(i) == data.a(i));
        CHECK(back.y(i) == data.y(i));
        for (int j = 0; j < data.d(); ++j)
            CHECK(back.x(i)[j] == data.x(i)[j]);
    }
    std::filesystem::remove(path);
}

TEST_CASE("csv reader rejects malformed input with line numbers") {
    auto path = temp_file("fairpost_core_bad.csv");

    write_text(path, "x1,x2,y\n1,2,1\n");
    CHECK_THROWS_AS(fairpost::read_dataset_csv(path.string()),
                    fairpost::DataError);

    write_text(path, "x1,a,y\n1.0,1,1\n2.0,1\n");
    CHECK_THROWS_WITH_AS(fairpost::read_dataset_csv(path.string()),
                         doctest::Contains("line 3"), fairpost::DataError);

    write_text(path, "x1,a,y\n1.0,1,2\n");
    CHECK_THROWS_AS(fairpost::read_dataset_csv(path.string()),
                    fairpost::DataError);

    write_text(path, "x1,a,y\nfoo,1,1\n");
    CHECK_THROWS_AS(fairpost::read_dataset_csv(path.string()),
                    fairpost::DataError);

    write_text(path, "x1,a,y\n");
    CHECK_THROWS_AS(fairpost::read_dataset_csv(path.string()),
                    fairpost::DataError);
    std::filesystem::remove(path);
}

TEST_CASE("csv reader accepts blank lines and infers group count") {
    auto path = temp_file("fairpost_core_ok.csv");
    write_text(path, "x1,a,y\n0.5,1,0\n\n0.25,3,1\n");
    auto data = fairpost::read_dataset_csv(path.string());
    CHECK(data.n() == 2);
    CHECK(data.k_groups() == 3);
    std::filesystem::remove(path);
}

TEST_CASE("fairness spec validation") {
    fairpost::FairnessSpec spec;
    spec.notion = fairpost::Notion::DemographicParity;
    spec.scenario = fairpost::Scenario::Aware;
    spec.alpha = 0.1;
    spec.delta_post = 0.05;
    CHECK_NOTHROW(spec.validate());

    spec.alpha = 0.0;
    CHECK_THROWS_AS(spec.validate(), fairpost::ValidationError);
    spec.alpha = 0.1;

    spec.delta_post = 0.0;
    CHECK_THROWS_AS(spec.validate(), fairpost::ValidationError);
    spec.delta_post = 1.0;
    CHECK_THROWS_AS(spec.validate(), fairpost::ValidationError);
    spec.delta_post = 0.05;

    spec.epsilon.mode = fairpost::EpsilonMode::Fixed;
    spec.epsilon.fixed_value = -0.2;
    CHECK_THROWS_AS(spec.validate(), fairpost::ValidationError);
    spec.epsilon.fixed_value = 0.0;
    CHECK_NOTHROW(spec.validate());
}

TEST_CASE("notion and scenario string conversions round trip") {
    using fairpost::Notion;
    using fairpost::Scenario;
    for (auto n : {Notion::DemographicParity, Notion::EqualOpportunity,
                   Notion::OverallAccuracyEquality,
                   Notion::PredictiveEquality, Notion::EqualizedOdds})
        CHECK(fairpost::notion_from_string(fairpost::to_string(n)) == n);
    for (auto s : {Scenario::Aware, Scenario::Blind})
        CHECK(fairpost::scenario_from_string(fairpost::to_string(s)) == s);
    CHECK_THROWS_AS(fairpost::notion_from_string("nope"),
                    fairpost::ValidationError);
    CHECK_THROWS_AS(fairpost::scenario_from_string(""),
                    fairpost::ValidationError);
}

TEST_CASE("fitted classifier predicts with a strict inequality") {
    fairpost::FittedFairClassifier f;
    f.scenario = fairpost::Scenario::Aware;
    f.notion = fairpost::Notion::DemographicParity;
    f.alpha = 0.1;
    f.delta_post = 0.05;
    f.epsilon_alpha = 0.0;
    f.s_hat = 1;
    f.lambda = {0.2};
    f.eta = [](std::span<const double>, int) { return 0.6; };  // margin 0.2
    f.phi = [](std::span<const double>, int) { return 1.0; };

    std::vector<double> x{0.0};
    // margin == lambda * phi exactly: strict rule predicts 0.
    CHECK(f.predict(x, 1) == 0);

    f.lambda = {0.2 - 1e-9};
    CHECK(f.predict(x, 1) == 1);

    f.lambda = {0.3};
    f.eta = [](std::span<const double>, int) { return 0.9; };  // margin 0.8
    CHECK(f.predict(x, 1) == 1);
}

TEST_CASE("fitted classifier with vector representation") {
    fairpost::FittedFairClassifier f;
    f.scenario = fairpost::Scenario::Aware;
    f.notion = fairpost::Notion::EqualizedOdds;
    f.alpha = 0.1;
    f.delta_post = 0.05;
    f.epsilon_alpha = 0.0;
    f.s_hat = 1;
    f.lambda = {0.1, -0.2};
    f.eta = [](std::span<const double>, int) { return 0.75; };  // margin 0.5
    f.phi_vec = [](std::span<const double>, int) {
        return std::vector<double>{1.0, 2.0};  // threshold -0.3
    };
    CHECK(f.multi_component());
    std::vector<double> x{0.0};
    CHECK(f.predict(x, 1) == 1);

    f.phi_vec = [](std::span<const double>, int) {
        return std::vector<double>{1.0};  // wrong arity
    };
    CHECK_THROWS_AS(f.predict(x, 1), fairpost::ValidationError);
}

TEST_CASE("deterministic rng streams and derivations") {
    using namespace fairpost::rng;
    Stream a(derive(42, 3));
    Stream b(derive(42, 3));
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    CHECK(derive(42, 3) != derive(42, 4));
    CHECK(derive(42, 3) != derive(43, 3));

    Stream u(derive(7, 0));
    for (int i = 0; i < 1000; ++i) {
        const double v = u.next_unit();
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }

    // Categorical sampling respects the distribution roughly.
    Stream c(derive(9, 1));
    std::vector<double> probs{0.2, 0.5, 0.3};
    std::vector<int> hits(3, 0);
    const int trials = 20000;
    for (int i = 0; i < trials; ++i)
        ++hits[c.next_categorical(probs.data(), 3)];
    for (int j = 0; j < 3; ++j) {
        const double freq = static_cast<double>(hits[j]) / trials;
        CHECK(std::abs(freq - probs[j]) < 0.02);
    }
}
