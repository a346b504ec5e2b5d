#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>

namespace abcfb {

// Dense text format: first line "rows cols", then row-major
// whitespace-separated reals. Vectors are n x 1 matrices.
Eigen::MatrixXd read_dense_matrix(std::istream& is);
Eigen::MatrixXd read_dense_matrix_file(const std::string& path);
void write_dense_matrix(std::ostream& os, const Eigen::MatrixXd& A);
void write_dense_matrix_file(const std::string& path, const Eigen::MatrixXd& A);

}  // namespace abcfb
