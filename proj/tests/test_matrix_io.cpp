#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "safelqr/errors.hpp"
#include "safelqr/matrix_io.hpp"
#include "safelqr/systems.hpp"
#include "test_support.hpp"

using namespace safelqr;
using namespace safelqr::testing;

#ifndef SAFELQR_TEST_DATA_DIR
#define SAFELQR_TEST_DATA_DIR "data"
#endif

TEST_CASE("matrix blocks round-trip bit-exactly at 17 significant digits") {
    std::mt19937_64 gen(12);
    for (int trial = 0; trial < 20; ++trial) {
        const int rows = 1 + static_cast<int>(gen() % 5);
        const int cols = 1 + static_cast<int>(gen() % 5);
        const Eigen::MatrixXd M = 1e3 * random_matrix(gen, rows, cols);
        std::ostringstream out;
        write_matrix_block(out, "M", M);
        std::istringstream in(out.str());
        const auto blocks = read_matrix_blocks(in, "roundtrip");
        REQUIRE(blocks.count("M") == 1);
        const Eigen::MatrixXd& back = blocks.at("M");
        REQUIRE(back.rows() == rows);
        REQUIRE(back.cols() == cols);
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) CHECK(back(r, c) == M(r, c));
        }
    }
}

TEST_CASE("parser accepts comments and blank lines") {
    std::istringstream in(
        "# plant description\n"
        "\n"
        "A 2 2\n"
        "1 0\n"
        "0 1\n"
        "\n"
        "# trailing comment\n");
    const auto blocks = read_matrix_blocks(in, "test");
    CHECK(blocks.size() == 1);
    CHECK(blocks.at("A").isIdentity(0.0));
}

TEST_CASE("parser rejects malformed input") {
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return read_matrix_blocks(in, "test");
    };
    CHECK_THROWS_AS(parse("A two 2\n1 2\n"), ParseError);
    CHECK_THROWS_AS(parse("A 2 2\n1 2\n"), ParseError);          // missing row
    CHECK_THROWS_AS(parse("A 1 3\n1 2\n"), ParseError);          // short row
    CHECK_THROWS_AS(parse("A 1 1 junk\n1\n"), ParseError);       // trailing header
    CHECK_THROWS_AS(parse("A 1 1\n1 2\n"), ParseError);          // extra value
    CHECK_THROWS_AS(parse("A 1 1\n1\nA 1 1\n2\n"), ParseError);  // duplicate
    CHECK_THROWS_AS(parse(""), ParseError);                      // empty
    CHECK_THROWS_AS(parse("A 0 2\n"), ParseError);               // bad shape
    CHECK_THROWS_AS(parse("A 99999999 2\n"), ParseError);        // absurd shape
}

TEST_CASE("gain loader accepts a sole unnamed block") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "safelqr_io_test";
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "gain.txt");
        out << "Kanything 1 2\n0.25 -0.5\n";
    }
    const Eigen::MatrixXd K = load_gain(dir / "gain.txt", "K1");
    CHECK(K(0, 0) == 0.25);
    CHECK(K(0, 1) == -0.5);
    fs::remove_all(dir);
}

TEST_CASE("missing files and missing blocks raise parse errors") {
    CHECK_THROWS_AS(load_plant("/nonexistent/safelqr/plant.txt"), ParseError);

    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "safelqr_io_test2";
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "partial.txt");
        out << "A 1 1\n0.5\nB 1 1\n1\n";  // W missing
    }
    CHECK_THROWS_AS(load_plant(dir / "partial.txt"), ParseError);
    fs::remove_all(dir);
}

TEST_CASE("committed data files parse to the embedded reference systems") {
    namespace fs = std::filesystem;
    const fs::path data(SAFELQR_TEST_DATA_DIR);

    const LinearPlant demo_file = load_plant(data / "demo2_plant.txt");
    const LinearPlant demo_code = demo_plant();
    CHECK((demo_file.A() - demo_code.A()).norm() == 0.0);
    CHECK((demo_file.B() - demo_code.B()).norm() == 0.0);
    CHECK((demo_file.W() - demo_code.W()).norm() == 0.0);
    const LQWeights demo_w_file = load_weights(data / "demo2_weights.txt");
    CHECK((demo_w_file.Q() - demo_weights().Q()).norm() == 0.0);
    CHECK((demo_w_file.R() - demo_weights().R()).norm() == 0.0);

    const LinearPlant standin_file = load_plant(data / "standin8_plant.txt");
    const LinearPlant standin_code = standin_plant();
    CHECK((standin_file.A() - standin_code.A()).norm() == 0.0);
    CHECK((standin_file.B() - standin_code.B()).norm() == 0.0);
    CHECK((standin_file.W() - standin_code.W()).norm() == 0.0);
    const LQWeights standin_w = load_weights(data / "standin8_weights.txt");
    CHECK((standin_w.Q() - standin_weights().Q()).norm() == 0.0);
    CHECK((standin_w.R() - standin_weights().R()).norm() == 0.0);
}

TEST_CASE("cost serialization uses the inf literal") {
    CHECK(Cost::infinite().str() == "inf");
    CHECK(Cost::finite(0.5).str() == "0.5");
    CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
}
