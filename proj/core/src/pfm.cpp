#include "lumen/pfm.hpp"

#include <bit>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>

#include "lumen/common.hpp"

namespace lumen {

namespace {

void byteswap_floats(std::vector<float> &v) {
    for (float &f : v) {
        std::uint32_t u;
        std::memcpy(&u, &f, 4);
        u = ((u & 0x000000ffu) << 24) | ((u & 0x0000ff00u) << 8) |
            ((u & 0x00ff0000u) >> 8) | ((u & 0xff000000u) >> 24);
        std::memcpy(&f, &u, 4);
    }
}

// Reads one whitespace-terminated token, tracking the byte offset.
std::string read_token(std::istream &in, std::size_t &offset) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        ++offset;
        if (ch == ' ' || ch == '\n' || ch == '\r' || ch == '\t') {
            if (!tok.empty()) break;
        } else {
            tok.push_back(static_cast<char>(ch));
        }
    }
    return tok;
}

long parse_dim(const std::string &tok, std::size_t offset_after) {
    // offset_after points just past the token's terminating whitespace.
    std::size_t at = offset_after - tok.size() - 1;
    if (tok.empty()) throw FormatError("PFM: truncated header", at);
    char *end = nullptr;
    long v = std::strtol(tok.c_str(), &end, 10);
    if (end != tok.c_str() + tok.size() || v < 1 ||
        v > std::numeric_limits<int>::max())
        throw FormatError("PFM: bad dimension '" + tok + "'", at);
    return v;
}

}  // namespace

Image3 read_pfm(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("PFM: cannot open " + path, 0);

    std::size_t offset = 0;
    std::string magic = read_token(in, offset);
    if (magic == "Pf")
        throw UnsupportedFormat("PFM: grayscale 'Pf' not supported (color 'PF' only)", 0);
    if (magic != "PF") throw FormatError("PFM: bad magic '" + magic + "'", 0);

    std::string wtok = read_token(in, offset);
    long w = parse_dim(wtok, offset);
    std::string htok = read_token(in, offset);
    long h = parse_dim(htok, offset);

    std::size_t scale_at = offset;
    std::string stok = read_token(in, offset);
    char *end = nullptr;
    double scale = std::strtod(stok.c_str(), &end);
    if (stok.empty() || end != stok.c_str() + stok.size() || scale == 0.0)
        throw FormatError("PFM: bad scale '" + stok + "'", scale_at);

    Image3 img(static_cast<int>(h), static_cast<int>(w));
    std::size_t n_floats = img.size();
    std::vector<float> raw(n_floats);
    in.read(reinterpret_cast<char *>(raw.data()),
            static_cast<std::streamsize>(n_floats * 4));
    std::size_t got = static_cast<std::size_t>(in.gcount());
    if (got != n_floats * 4)
        throw FormatError("PFM: truncated payload, expected " +
                              std::to_string(n_floats * 4) + " bytes, got " +
                              std::to_string(got),
                          offset + got);

    // Negative scale marks little-endian data.
    bool file_le = scale < 0.0;
    if (file_le != (std::endian::native == std::endian::little))
        byteswap_floats(raw);

    // Bottom-to-top file rows -> top-row-first memory rows.
    std::size_t row_floats = static_cast<std::size_t>(w) * 3;
    for (long r = 0; r < h; ++r)
        std::memcpy(img.data.data() + static_cast<std::size_t>(r) * row_floats,
                    raw.data() + static_cast<std::size_t>(h - 1 - r) * row_floats,
                    row_floats * 4);
    return img;
}

void write_pfm(const Image3 &img, const std::string &path) {
    if (img.height < 1 || img.width < 1)
        throw std::invalid_argument("write_pfm: empty image");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_pfm: cannot open " + path);

    out << "PF\n" << img.width << " " << img.height << "\n-1.0\n";

    std::size_t row_floats = static_cast<std::size_t>(img.width) * 3;
    std::vector<float> row(row_floats);
    for (int r = img.height - 1; r >= 0; --r) {
        std::memcpy(row.data(),
                    img.data.data() + static_cast<std::size_t>(r) * row_floats,
                    row_floats * 4);
        if constexpr (std::endian::native != std::endian::little)
            byteswap_floats(row);
        out.write(reinterpret_cast<const char *>(row.data()),
                  static_cast<std::streamsize>(row_floats * 4));
    }
    if (!out) throw std::runtime_error("write_pfm: write failed for " + path);
}

}  // namespace lumen
