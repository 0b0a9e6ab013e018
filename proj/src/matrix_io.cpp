#include "safelqr/matrix_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "safelqr/errors.hpp"

namespace safelqr {

namespace {

[[noreturn]] void fail(const std::string& context, int line, const std::string& what) {
    std::ostringstream os;
    os << context << ":" << line << ": " << what;
    throw ParseError(os.str());
}

bool is_blank_or_comment(const std::string& line) {
    for (char c : line) {
        if (c == '#') return true;
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

}  // namespace

std::map<std::string, Eigen::MatrixXd> read_matrix_blocks(std::istream& in,
                                                          const std::string& context) {
    std::map<std::string, Eigen::MatrixXd> blocks;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank_or_comment(line)) continue;

        std::istringstream header(line);
        std::string name;
        long rows = 0;
        long cols = 0;
        if (!(header >> name >> rows >> cols) || rows < 1 || cols < 1) {
            fail(context, line_no, "expected block header 'name rows cols'");
        }
        if (rows > 100000 || cols > 100000) {
            fail(context, line_no, "block dimensions are implausibly large");
        }
        std::string trailing;
        if (header >> trailing) {
            fail(context, line_no, "unexpected text after block header");
        }
        if (blocks.count(name)) {
            fail(context, line_no, "duplicate block '" + name + "'");
        }

        Eigen::MatrixXd M(rows, cols);
        for (long r = 0; r < rows; ++r) {
            if (!std::getline(in, line)) {
                fail(context, line_no, "unexpected end of file inside block '" + name + "'");
            }
            ++line_no;
            std::istringstream row(line);
            for (long c = 0; c < cols; ++c) {
                double value = 0.0;
                if (!(row >> value)) {
                    fail(context, line_no, "expected " + std::to_string(cols) +
                                               " values in row of block '" + name + "'");
                }
                M(r, c) = value;
            }
            if (row >> std::ws && !row.eof()) {
                fail(context, line_no, "extra values in row of block '" + name + "'");
            }
        }
        blocks.emplace(std::move(name), std::move(M));
    }
    if (blocks.empty()) {
        throw ParseError(context + ": no matrix blocks found");
    }
    return blocks;
}

std::map<std::string, Eigen::MatrixXd> read_matrix_file(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open '" + path.string() + "'");
    }
    return read_matrix_blocks(in, path.string());
}

void write_matrix_block(std::ostream& out, const std::string& name,
                        const Eigen::MatrixXd& M) {
    out << name << ' ' << M.rows() << ' ' << M.cols() << '\n';
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        for (Eigen::Index c = 0; c < M.cols(); ++c) {
            if (c > 0) out << ' ';
            out << format_double(M(r, c));
        }
        out << '\n';
    }
}

namespace {

const Eigen::MatrixXd& require_block(const std::map<std::string, Eigen::MatrixXd>& blocks,
                                     const std::string& name,
                                     const std::filesystem::path& path) {
    auto it = blocks.find(name);
    if (it == blocks.end()) {
        throw ParseError(path.string() + ": missing block '" + name + "'");
    }
    return it->second;
}

}  // namespace

LinearPlant load_plant(const std::filesystem::path& path) {
    auto blocks = read_matrix_file(path);
    return LinearPlant(require_block(blocks, "A", path), require_block(blocks, "B", path),
                       require_block(blocks, "W", path));
}

LQWeights load_weights(const std::filesystem::path& path) {
    auto blocks = read_matrix_file(path);
    return LQWeights(require_block(blocks, "Q", path), require_block(blocks, "R", path));
}

Eigen::MatrixXd load_gain(const std::filesystem::path& path, const std::string& name) {
    auto blocks = read_matrix_file(path);
    if (blocks.size() == 1) return blocks.begin()->second;
    return require_block(blocks, name, path);
}

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

}  // namespace safelqr
