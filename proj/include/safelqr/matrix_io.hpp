#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "safelqr/types.hpp"

namespace safelqr {

/// Matrix text format shared by every tool: per block, one header line
/// `name rows cols` followed by `rows` lines of whitespace-separated decimal
/// values in row-major order. Blank lines and lines starting with '#' are
/// ignored. Plant files carry blocks A, B, W; weight files carry Q, R.

std::map<std::string, Eigen::MatrixXd> read_matrix_blocks(std::istream& in,
                                                          const std::string& context);
std::map<std::string, Eigen::MatrixXd> read_matrix_file(
    const std::filesystem::path& path);

/// Writes one block with 17 significant digits per value.
void write_matrix_block(std::ostream& out, const std::string& name,
                        const Eigen::MatrixXd& M);

LinearPlant load_plant(const std::filesystem::path& path);
LQWeights load_weights(const std::filesystem::path& path);

/// Loads the block called `name`; a file holding exactly one block matches
/// regardless of its label.
Eigen::MatrixXd load_gain(const std::filesystem::path& path, const std::string& name);

/// printf("%.17g") convenience used for all numeric output.
std::string format_double(double value);

}  // namespace safelqr
