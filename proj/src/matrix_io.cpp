#include "abcfb/matrix_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "abcfb/errors.hpp"

namespace abcfb {

Eigen::MatrixXd read_dense_matrix(std::istream& is) {
  std::int64_t rows = 0, cols = 0;
  if (!(is >> rows >> cols)) throw StructuralError("matrix header must be 'rows cols'");
  if (rows <= 0 || cols <= 0) throw StructuralError("matrix dimensions must be positive");
  Eigen::MatrixXd A(rows, cols);
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t c = 0; c < cols; ++c)
      if (!(is >> A(r, c)))
        throw StructuralError("matrix body ended early at row " + std::to_string(r));
  return A;
}

Eigen::MatrixXd read_dense_matrix_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw StructuralError("cannot open matrix file: " + path);
  return read_dense_matrix(f);
}

void write_dense_matrix(std::ostream& os, const Eigen::MatrixXd& A) {
  os << A.rows() << ' ' << A.cols() << '\n';
  char buf[32];
  for (Eigen::Index r = 0; r < A.rows(); ++r) {
    for (Eigen::Index c = 0; c < A.cols(); ++c) {
      auto res = std::to_chars(buf, buf + sizeof(buf), A(r, c));
      os.write(buf, res.ptr - buf);
      os.put(c + 1 == A.cols() ? '\n' : ' ');
    }
  }
}

void write_dense_matrix_file(const std::string& path, const Eigen::MatrixXd& A) {
  std::ofstream f(path);
  if (!f) throw StructuralError("cannot open matrix file for writing: " + path);
  write_dense_matrix(f, A);
}

}  // namespace abcfb
