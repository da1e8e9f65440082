#include "dentocc/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "dentocc/error.hpp"

namespace dentocc {

void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "P5\n" << image.cols << ' ' << image.rows << "\n255\n";
    std::string bytes(image.pixels.size(), '\0');
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
        const double v = std::clamp(image.pixels[i], 0.0, 1.0);
        bytes[i] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in) {
    std::string token;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {}
            continue;
        }
        if (std::isspace(ch)) {
            if (!token.empty()) break;
            continue;
        }
        token.push_back(static_cast<char>(ch));
    }
    return token;
}

}  // namespace

GrayImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    if (next_token(in) != "P5") throw ParseError(path.string() + ": not a binary PGM (P5)", 0);
    std::size_t cols = 0, rows = 0, maxval = 0;
    try {
        cols = std::stoul(next_token(in));
        rows = std::stoul(next_token(in));
        maxval = std::stoul(next_token(in));
    } catch (const std::exception&) {
        throw ParseError(path.string() + ": malformed PGM header", 0);
    }
    if (cols == 0 || rows == 0 || maxval == 0 || maxval > 255) {
        throw ParseError(path.string() + ": unsupported PGM geometry or depth", 0);
    }
    std::string bytes(rows * cols, '\0');
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw ParseError(path.string() + ": truncated PGM payload", 0);
    }
    GrayImage image(rows, cols);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        image.pixels[i] = static_cast<double>(static_cast<unsigned char>(bytes[i])) / static_cast<double>(maxval);
    }
    return image;
}

}  // namespace dentocc
