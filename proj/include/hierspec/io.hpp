#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace hierspec {

std::string base64_encode(const unsigned char* data, std::size_t len);
std::vector<unsigned char> base64_decode(const std::string& text);

// Matrix bytes as row-major little-endian doubles, base64.
std::string matrix_to_base64(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_base64(const std::string& text, Eigen::Index rows,
                                   Eigen::Index cols);

// Shortest round-trippable decimal form; used for every float written to
// CSV/JSON so identical runs produce identical bytes.
std::string format_double(double v);

// Write-then-rename so readers never see a torn file.
void atomic_write_file(const std::string& path, const std::string& contents);

std::string read_file(const std::string& path);

}  // namespace hierspec
