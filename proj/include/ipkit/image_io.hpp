#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "ipkit/errors.hpp"
#include "ipkit/image.hpp"

namespace ipkit {

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw io_error("read failed: " + path);
    return bytes;
}

/// PNM header tokenizer: skips whitespace and '#' comments.
class PnmScanner {
public:
    PnmScanner(const std::vector<std::uint8_t>& bytes, std::size_t pos)
        : bytes_(bytes), pos_(pos) {}

    int next_int() {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_]))
            throw format_error("malformed PNM header: expected integer");
        long v = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + (bytes_[pos_] - '0');
            if (v > 1'000'000'000L) throw format_error("malformed PNM header: value out of range");
            ++pos_;
        }
        return static_cast<int>(v);
    }

    /// Consumes the single whitespace byte that separates maxval from a
    /// binary payload.
    std::size_t binary_payload_start() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            throw format_error("malformed PNM header: missing payload separator");
        return pos_ + 1;
    }

    std::size_t pos() const { return pos_; }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_;
};

inline Image load_pgm_bytes(const std::vector<std::uint8_t>& bytes, const std::string& path) {
    const bool ascii = bytes[1] == '2';
    PnmScanner scan(bytes, 2);
    const int width = scan.next_int();
    const int height = scan.next_int();
    const int maxval = scan.next_int();
    if (width < 1 || height < 1) throw format_error("malformed PGM header: bad dimensions in " + path);
    if (maxval < 1) throw format_error("malformed PGM header: bad maxval in " + path);
    if (maxval > 255)
        throw unsupported_format_error("unsupported PGM: maxval " + std::to_string(maxval) +
                                       " exceeds 255 in " + path);

    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(width) * height);
    if (ascii) {
        for (std::size_t i = 0; i < static_cast<std::size_t>(width) * height; ++i) {
            int v;
            try {
                v = scan.next_int();
            } catch (const format_error&) {
                throw format_error("malformed PGM payload: too few samples in " + path);
            }
            if (v > maxval) throw format_error("malformed PGM payload: sample exceeds maxval in " + path);
            data.push_back(static_cast<double>(v));
        }
    } else {
        const std::size_t start = scan.binary_payload_start();
        const std::size_t need = static_cast<std::size_t>(width) * height;
        if (bytes.size() - start < need)
            throw format_error("malformed PGM payload: truncated in " + path);
        for (std::size_t i = 0; i < need; ++i) {
            const std::uint8_t v = bytes[start + i];
            if (v > maxval) throw format_error("malformed PGM payload: sample exceeds maxval in " + path);
            data.push_back(static_cast<double>(v));
        }
    }
    return Image(width, height, std::move(data));
}

inline std::uint32_t read_be32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

inline std::vector<std::uint8_t> zlib_inflate(const std::vector<std::uint8_t>& in,
                                              std::size_t expected, const std::string& path) {
    std::vector<std::uint8_t> out(expected);
    z_stream zs;
    std::memset(&zs, 0, sizeof(zs));
    if (inflateInit(&zs) != Z_OK) throw format_error("zlib init failed for " + path);
    zs.next_in = const_cast<std::uint8_t*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = out.data();
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    const std::size_t produced = out.size() - zs.avail_out;
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || produced != expected)
        throw format_error("malformed PNG: bad or truncated compressed data in " + path);
    return out;
}

inline int paeth_predict(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

/// Minimal PNG reader for the one layout the library accepts: 8-bit
/// grayscale (color type 0), no interlace. Everything else is rejected as
/// unsupported rather than guessed at.
inline Image load_png_bytes(const std::vector<std::uint8_t>& bytes, const std::string& path) {
    static const std::uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
        throw format_error("malformed PNG: bad signature in " + path);

    std::size_t pos = 8;
    bool seen_ihdr = false, seen_iend = false;
    int width = 0, height = 0;
    std::vector<std::uint8_t> idat;

    while (pos + 8 <= bytes.size() && !seen_iend) {
        const std::uint32_t len = read_be32(&bytes[pos]);
        if (pos + 12 + len > bytes.size())
            throw format_error("malformed PNG: truncated chunk in " + path);
        const char* type = reinterpret_cast<const char*>(&bytes[pos + 4]);
        const std::uint8_t* data = &bytes[pos + 8];

        const std::uint32_t stored_crc = read_be32(&bytes[pos + 8 + len]);
        const std::uint32_t got_crc = static_cast<std::uint32_t>(
            crc32(crc32(0L, Z_NULL, 0), &bytes[pos + 4], len + 4));
        if (stored_crc != got_crc)
            throw format_error("malformed PNG: chunk CRC mismatch in " + path);

        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw format_error("malformed PNG: bad IHDR in " + path);
            width = static_cast<int>(read_be32(data));
            height = static_cast<int>(read_be32(data + 4));
            const int bit_depth = data[8], color_type = data[9];
            const int compression = data[10], filter = data[11], interlace = data[12];
            if (compression != 0 || filter != 0)
                throw format_error("malformed PNG: unknown compression/filter scheme in " + path);
            if (bit_depth != 8 || color_type != 0)
                throw unsupported_format_error("unsupported PNG: only 8-bit grayscale is readable (" +
                                               path + ")");
            if (interlace != 0)
                throw unsupported_format_error("unsupported PNG: interlaced images not readable (" +
                                               path + ")");
            if (width < 1 || height < 1) throw format_error("malformed PNG: bad dimensions in " + path);
            seen_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            if (!seen_ihdr) throw format_error("malformed PNG: IDAT before IHDR in " + path);
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            seen_iend = true;
        }
        // Ancillary chunks are skipped.
        pos += 12 + len;
    }
    if (!seen_ihdr || !seen_iend || idat.empty())
        throw format_error("malformed PNG: missing required chunks in " + path);

    const std::size_t stride = static_cast<std::size_t>(width) + 1;
    const auto raw = zlib_inflate(idat, stride * height, path);

    std::vector<double> out(static_cast<std::size_t>(width) * height);
    std::vector<std::uint8_t> prev(width, 0), cur(width, 0);
    for (int y = 0; y < height; ++y) {
        const std::uint8_t* row = &raw[y * stride];
        const int filter = row[0];
        for (int x = 0; x < width; ++x) {
            const int f = row[1 + x];
            const int left = x > 0 ? cur[x - 1] : 0;
            const int up = prev[x];
            const int upleft = x > 0 ? prev[x - 1] : 0;
            int v = 0;
            switch (filter) {
                case 0: v = f; break;
                case 1: v = f + left; break;
                case 2: v = f + up; break;
                case 3: v = f + (left + up) / 2; break;
                case 4: v = f + paeth_predict(left, up, upleft); break;
                default: throw format_error("malformed PNG: unknown row filter in " + path);
            }
            cur[x] = static_cast<std::uint8_t>(v & 0xff);
            out[static_cast<std::size_t>(y) * width + x] = static_cast<double>(cur[x]);
        }
        std::swap(prev, cur);
    }
    return Image(width, height, std::move(out));
}

} // namespace detail

/// Loads a grayscale image: PGM P2/P5 (maxval <= 255) or 8-bit grayscale
/// PNG, dispatched on the magic bytes. Intensities come back as reals in
/// [0, 255].
inline Image load_image(const std::string& path) {
    const auto bytes = detail::read_file_bytes(path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '2' || bytes[1] == '5'))
        return detail::load_pgm_bytes(bytes, path);
    if (bytes.size() >= 8 && bytes[0] == 137 && bytes[1] == 'P')
        return detail::load_png_bytes(bytes, path);
    if (bytes.size() >= 2 && bytes[0] == 'P')
        throw unsupported_format_error("unsupported PNM variant in " + path +
                                       " (only P2/P5 grayscale is readable)");
    throw unsupported_format_error("unsupported image format in " + path);
}

/// Writes binary PGM (P5, maxval 255). Intensities are rounded half-up and
/// clamped to [0, 255].
inline void save_pgm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open file for writing: " + path);
    out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
    std::vector<std::uint8_t> row(img.width());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const double v = std::floor(img.at(x, y) + 0.5);
            row[x] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
        }
        out.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
    if (!out) throw io_error("write failed: " + path);
}

} // namespace ipkit
