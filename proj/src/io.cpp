#include "hierspec/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hierspec {

namespace {
constexpr char kB64[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}
}  // namespace

std::string base64_encode(const unsigned char* data, std::size_t len) {
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (std::size_t i = 0; i < len; i += 3) {
        const unsigned b0 = data[i];
        const unsigned b1 = i + 1 < len ? data[i + 1] : 0;
        const unsigned b2 = i + 2 < len ? data[i + 2] : 0;
        out.push_back(kB64[b0 >> 2]);
        out.push_back(kB64[((b0 & 3) << 4) | (b1 >> 4)]);
        out.push_back(i + 1 < len ? kB64[((b1 & 15) << 2) | (b2 >> 6)] : '=');
        out.push_back(i + 2 < len ? kB64[b2 & 63] : '=');
    }
    return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
    std::vector<unsigned char> out;
    out.reserve(text.size() / 4 * 3);
    int acc = 0, bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        const int v = b64_value(c);
        if (v < 0) throw std::invalid_argument("base64_decode: bad character");
        acc = (acc << 6) | v;
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<unsigned char>((acc >> bits) & 0xff));
        }
    }
    return out;
}

std::string matrix_to_base64(const Eigen::MatrixXd& m) {
    static_assert(sizeof(double) == 8);
    // row-major little-endian stream (we only target little-endian hosts)
    std::vector<unsigned char> bytes(static_cast<std::size_t>(m.size()) * 8);
    std::size_t off = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const double v = m(r, c);
            std::memcpy(bytes.data() + off, &v, 8);
            off += 8;
        }
    }
    return base64_encode(bytes.data(), bytes.size());
}

Eigen::MatrixXd matrix_from_base64(const std::string& text, Eigen::Index rows,
                                   Eigen::Index cols) {
    const auto bytes = base64_decode(text);
    if (bytes.size() != static_cast<std::size_t>(rows) * cols * 8) {
        throw std::invalid_argument("matrix_from_base64: size mismatch");
    }
    Eigen::MatrixXd m(rows, cols);
    std::size_t off = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            double v;
            std::memcpy(&v, bytes.data() + off, 8);
            m(r, c) = v;
            off += 8;
        }
    }
    return m;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    // %.17g always round-trips; prefer the shorter %.15g when it does too
    std::snprintf(buf, sizeof(buf), "%.15g", v);
    if (std::strtod(buf, nullptr) != v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
    }
    return buf;
}

void atomic_write_file(const std::string& path, const std::string& contents) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("atomic_write_file: cannot open " + tmp);
        f << contents;
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_file: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace hierspec
