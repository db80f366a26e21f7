#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include <sparsecomp/matrix_io.hpp>
#include <sparsecomp/observation_io.hpp>

using namespace sparsecomp;
using namespace sparsecomp::io;

namespace {

std::filesystem::path temp_dir() {
    auto d = std::filesystem::temp_directory_path() / "sparsecomp_io_test";
    std::filesystem::create_directories(d);
    return d;
}

}  // namespace

TEST(Csv, RoundTripIsBitExact) {
    const auto a = make_low_rank(5, 4, {3.0, 1e-7}, 2);
    std::stringstream ss;
    write_csv(ss, a.eigen(), {"generated"});
    EXPECT_EQ(read_csv(ss), a);
}

TEST(Csv, SkipsBlankAndCommentLines) {
    std::stringstream ss("# header\n1, 2\n\n+3,-4e0\n");
    EXPECT_EQ(read_csv(ss), DenseMatrix::from_rows({{1, 2}, {3, -4}}));
}

TEST(Csv, Errors) {
    std::stringstream ragged("1,2\n3\n");
    try {
        read_csv(ragged);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    std::stringstream nan("1,nan\n");
    EXPECT_THROW(read_csv(nan), ParseError);
    std::stringstream inf("inf\n");
    EXPECT_THROW(read_csv(inf), ParseError);
    std::stringstream junk("1,2x\n");
    EXPECT_THROW(read_csv(junk), ParseError);
    std::stringstream empty("\n# nothing\n");
    EXPECT_THROW(read_csv(empty), ParseError);
}

TEST(MatrixMarket, RoundTripKeepsZerosImplicit) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 4);
    m(0, 1) = 0.1;
    m(2, 3) = -7.25;
    m(1, 0) = 1e300;
    std::stringstream ss;
    write_matrix_market(ss, m, {"tool test"});
    const std::string text = ss.str();
    EXPECT_NE(text.find("%%MatrixMarket matrix coordinate real general\n%tool test\n3 4 3\n"), std::string::npos);
    EXPECT_EQ(read_matrix_market(ss), DenseMatrix(m));
}

TEST(MatrixMarket, FieldsAndDuplicates) {
    std::stringstream integer("%%MatrixMarket matrix coordinate integer general\n2 2 3\n1 1 2\n1 1 3\n2 2 -1\n");
    EXPECT_EQ(read_matrix_market(integer), DenseMatrix::from_rows({{5, 0}, {0, -1}}));
    std::stringstream pattern("%%MatrixMarket matrix coordinate pattern general\n% c\n2 3 1\n2 3\n");
    EXPECT_EQ(read_matrix_market(pattern), DenseMatrix::from_rows({{0, 0, 0}, {0, 0, 1}}));
}

TEST(MatrixMarket, Errors) {
    auto fails_at = [](const std::string& text, std::size_t line) {
        std::stringstream ss(text);
        try {
            read_matrix_market(ss);
        } catch (const ParseError& e) {
            EXPECT_EQ(e.line(), line) << text;
            return;
        }
        ADD_FAILURE() << "no error for: " << text;
    };
    fails_at("%%MatrixMarket matrix array real general\n2 2\n", 1);
    fails_at("%%MatrixMarket matrix coordinate real symmetric\n2 2 0\n", 1);
    fails_at("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n", 3);
    fails_at("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 nan\n", 3);
    fails_at("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n", 3);
    fails_at("not a banner\n", 1);
}

TEST(Files, ExtensionSelectsFormat) {
    const auto dir = temp_dir();
    const auto a = make_low_rank(4, 3, {2.0}, 5);
    save_matrix((dir / "a.mtx").string(), a.eigen(), {"seed 5"});
    save_matrix((dir / "a.csv").string(), a.eigen(), {"seed 5"});
    EXPECT_EQ(load_matrix((dir / "a.mtx").string()), a);
    EXPECT_EQ(load_matrix((dir / "a.csv").string()), a);
    EXPECT_THROW(load_matrix((dir / "missing.csv").string()), ParseError);
}

TEST(Observations, RoundTrip) {
    const auto dir = temp_dir();
    const auto a = make_low_rank(10, 8, {4.0, 1.0}, 5);
    const auto obs = observe(a, 0.6, NoiseKind::gaussian, 0.05, 12);
    const auto path = (dir / "obs.json").string();
    save_observations(path, obs);
    const auto back = load_observations(path);
    EXPECT_EQ(back.observed, obs.observed);
    EXPECT_EQ(back.mask, obs.mask);
    EXPECT_EQ(back.p, 0.6);
    EXPECT_EQ(back.noiseKind, NoiseKind::gaussian);
    EXPECT_EQ(back.sigma, 0.05);
    EXPECT_EQ(back.seed, 12u);
    EXPECT_EQ(estimate(back, 2), estimate(obs, 2));
}

TEST(Observations, RejectsInconsistentFiles) {
    const auto dir = temp_dir();
    const auto a = make_low_rank(4, 4, {1.0}, 1);
    auto obs = observe(a, 0.5, NoiseKind::none, 0.0, 3);
    const auto path = (dir / "bad.json").string();
    save_observations(path, obs);
    // a value where the mask says unobserved
    Eigen::MatrixXd values = obs.observed;
    Index k = 0;
    while (k < 16 && obs.mask.data()[k] != 0.0) ++k;
    ASSERT_LT(k, 16);
    values.data()[k] = 1.0;
    save_matrix((dir / "bad.values.mtx").string(), values);
    EXPECT_THROW(load_observations(path), ParseError);
    EXPECT_THROW(load_observations((dir / "nope.json").string()), ParseError);
}
