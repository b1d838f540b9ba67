#include "bfgd/pgm.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace bfgd {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error("pgm: " + path + ": " + what);
}

/// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in, const std::string& path, std::size_t& line) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            if (ch == '\n') ++line;
            continue;
        }
        if (std::isspace(ch)) {
            if (ch == '\n') ++line;
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(ch));
    }
    if (tok.empty()) fail(path, "unexpected end of header at line " + std::to_string(line));
    return tok;
}

std::size_t parse_count(const std::string& tok, const std::string& path, std::size_t line,
                        const char* what) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument("trailing");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        fail(path, std::string("bad ") + what + " at line " + std::to_string(line) + ": '" +
                       tok + "'");
    }
}

}  // namespace

DenseMatrix read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");

    std::size_t line = 1;
    const std::string magic = next_token(in, path, line);
    if (magic != "P5" && magic != "P2")
        fail(path, "unsupported magic '" + magic + "' (want P2 or P5)");

    const std::size_t width = parse_count(next_token(in, path, line), path, line, "width");
    const std::size_t height = parse_count(next_token(in, path, line), path, line, "height");
    const std::size_t maxval = parse_count(next_token(in, path, line), path, line, "maxval");
    if (width == 0 || height == 0) fail(path, "zero image dimension");
    if (maxval == 0 || maxval > 255)
        fail(path, "maxval " + std::to_string(maxval) + " unsupported (8-bit only)");

    DenseMatrix img(height, width);
    if (magic == "P5") {
        // Single whitespace byte separates the header from raster data; the
        // token reader has already consumed it.
        std::string raster(width * height, '\0');
        in.read(raster.data(), static_cast<std::streamsize>(raster.size()));
        if (static_cast<std::size_t>(in.gcount()) != raster.size())
            fail(path, "truncated raster at byte offset " +
                           std::to_string(static_cast<std::size_t>(in.gcount())));
        for (std::size_t i = 0; i < height; ++i)
            for (std::size_t j = 0; j < width; ++j) {
                const unsigned char byte =
                    static_cast<unsigned char>(raster[i * width + j]);
                if (byte > maxval)
                    fail(path, "pixel value " + std::to_string(byte) + " exceeds maxval");
                img(i, j) = static_cast<double>(byte) / static_cast<double>(maxval);
            }
    } else {
        for (std::size_t i = 0; i < height; ++i)
            for (std::size_t j = 0; j < width; ++j) {
                const std::string tok = next_token(in, path, line);
                const std::size_t v = parse_count(tok, path, line, "pixel");
                if (v > maxval)
                    fail(path, "pixel value " + std::to_string(v) + " exceeds maxval at line " +
                                   std::to_string(line));
                img(i, j) = static_cast<double>(v) / static_cast<double>(maxval);
            }
    }
    return img;
}

void write_pgm(const std::string& path, const DenseMatrix& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out << "P5\n" << image.cols() << ' ' << image.rows() << "\n255\n";
    for (std::size_t i = 0; i < image.rows(); ++i)
        for (std::size_t j = 0; j < image.cols(); ++j) {
            const double clamped = std::min(1.0, std::max(0.0, image(i, j)));
            out.put(static_cast<char>(std::lround(clamped * 255.0)));
        }
    if (!out) fail(path, "write failed");
}

}  // namespace bfgd
