#include "sfdmc/image_io.hpp"

#include <zlib.h>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>

#include "sfdmc/errors.hpp"

namespace sfdmc {

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

void write_file(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write to " + path);
}

std::uint32_t be32(const unsigned char* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

void push_be32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v >> 24));
    out.push_back(static_cast<unsigned char>(v >> 16));
    out.push_back(static_cast<unsigned char>(v >> 8));
    out.push_back(static_cast<unsigned char>(v));
}

const unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

// skips whitespace and # comments, then reads one non-negative integer
int next_pnm_int(const std::vector<unsigned char>& bytes, std::size_t& pos,
                 const std::string& path) {
    for (;;) {
        while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
        if (pos < bytes.size() && bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            continue;
        }
        break;
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
        throw DataError("malformed header in " + path);
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
        v = v * 10 + (bytes[pos] - '0');
        if (v > std::numeric_limits<int>::max()) throw DataError("oversized value in " + path);
        ++pos;
    }
    return static_cast<int>(v);
}

}  // namespace

Tensor read_pgm(const std::string& path) {
    const std::vector<unsigned char> bytes = read_file(path);
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5')
        throw DataError(path + " is not a binary PGM");
    std::size_t pos = 2;
    const int w = next_pnm_int(bytes, pos, path);
    const int h = next_pnm_int(bytes, pos, path);
    const int maxval = next_pnm_int(bytes, pos, path);
    if (w < 1 || h < 1) throw DataError("bad dimensions in " + path);
    if (maxval < 1 || maxval > 255)
        throw DataError(path + " is not 8-bit (maxval " + std::to_string(maxval) + ")");
    ++pos;  // single whitespace after maxval
    const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (bytes.size() < pos + need) throw DataError(path + " is truncated");

    Tensor img = Tensor::zeros({h, w, 1});
    for (std::size_t i = 0; i < need; ++i)
        img.data[i] = static_cast<double>(bytes[pos + i]) / static_cast<double>(maxval);
    return img;
}

void write_pgm(const std::string& path, const Tensor& img) {
    if (img.rank() != 3 || img.shape[2] != 1)
        throw DataError("write_pgm expects [h x w x 1], got " + img.shape_str());
    const int h = img.shape[0], w = img.shape[1];
    std::string header = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    std::vector<unsigned char> bytes(header.begin(), header.end());
    for (double v : img.data) {
        const double c = std::min(1.0, std::max(0.0, v));
        bytes.push_back(static_cast<unsigned char>(std::lround(c * 255.0)));
    }
    write_file(path, bytes);
}

Tensor read_png(const std::string& path) {
    const std::vector<unsigned char> bytes = read_file(path);
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kPngSig, 8) != 0)
        throw DataError(path + " is not a PNG");

    std::size_t pos = 8;
    int w = 0, h = 0, bit_depth = 0, color_type = 0;
    bool saw_ihdr = false, saw_iend = false;
    std::vector<unsigned char> idat;

    while (pos < bytes.size() && !saw_iend) {
        if (pos + 8 > bytes.size()) throw DataError(path + " is truncated");
        const std::uint32_t len = be32(&bytes[pos]);
        if (pos + 12 + len > bytes.size()) throw DataError(path + " is truncated");
        const unsigned char* type = &bytes[pos + 4];
        const unsigned char* data = &bytes[pos + 8];

        const std::uint32_t want_crc = be32(&bytes[pos + 8 + len]);
        std::uint32_t crc = static_cast<std::uint32_t>(crc32(0L, type, 4));
        crc = static_cast<std::uint32_t>(crc32(crc, data, len));
        if (crc != want_crc) throw DataError(path + " has a corrupt chunk (bad CRC)");

        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) throw DataError(path + " has a malformed IHDR");
            w = static_cast<int>(be32(data));
            h = static_cast<int>(be32(data + 4));
            bit_depth = data[8];
            color_type = data[9];
            if (data[10] != 0 || data[11] != 0 || data[12] != 0)
                throw DataError(path + " uses an unsupported compression/filter/interlace mode");
            saw_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_iend = true;
        }
        // other chunks are ancillary here; CRC was still enforced
        pos += 12 + len;
    }

    if (!saw_ihdr || !saw_iend) throw DataError(path + " is missing required chunks");
    if (w < 1 || h < 1 || w > 32768 || h > 32768)
        throw DataError("bad dimensions in " + path);
    if (bit_depth != 8 || color_type != 0)
        throw DataError(path + " is not 8-bit grayscale (depth " + std::to_string(bit_depth) +
                        ", color type " + std::to_string(color_type) + ")");

    const std::size_t row = static_cast<std::size_t>(w) + 1;  // filter byte + pixels
    const std::size_t raw_len = row * static_cast<std::size_t>(h);
    std::vector<unsigned char> raw(raw_len);
    uLongf out_len = static_cast<uLongf>(raw_len);
    const int rc = uncompress(raw.data(), &out_len, idat.data(),
                              static_cast<uLong>(idat.size()));
    if (rc != Z_OK || out_len != raw_len)
        throw DataError(path + " has undecodable image data");

    // undo per-row filters, 1 byte per pixel
    std::vector<unsigned char> px(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) {
        const unsigned char filter = raw[static_cast<std::size_t>(y) * row];
        const unsigned char* src = &raw[static_cast<std::size_t>(y) * row + 1];
        unsigned char* dst = &px[static_cast<std::size_t>(y) * w];
        const unsigned char* up = y > 0 ? &px[static_cast<std::size_t>(y - 1) * w] : nullptr;
        for (int x = 0; x < w; ++x) {
            const int a = x > 0 ? dst[x - 1] : 0;
            const int b = up ? up[x] : 0;
            const int c = (up && x > 0) ? up[x - 1] : 0;
            int v = src[x];
            switch (filter) {
                case 0: break;
                case 1: v += a; break;
                case 2: v += b; break;
                case 3: v += (a + b) / 2; break;
                case 4: v += paeth(a, b, c); break;
                default: throw DataError(path + " uses unknown filter type " +
                                         std::to_string(filter));
            }
            dst[x] = static_cast<unsigned char>(v & 0xff);
        }
    }

    Tensor img = Tensor::zeros({h, w, 1});
    for (std::size_t i = 0; i < px.size(); ++i) img.data[i] = px[i] / 255.0;
    return img;
}

Tensor read_image(const std::string& path) {
    const std::vector<unsigned char> head = read_file(path);
    if (head.size() >= 8 && std::memcmp(head.data(), kPngSig, 8) == 0) return read_png(path);
    if (head.size() >= 2 && head[0] == 'P' && head[1] == '5') return read_pgm(path);
    throw DataError(path + " is neither a PNG nor a binary PGM");
}

namespace detail {

namespace {

void push_chunk(std::vector<unsigned char>& out, const char* type,
                const std::vector<unsigned char>& payload) {
    push_be32(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t type_at = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0L, &out[type_at], static_cast<uInt>(4 + payload.size())));
    push_be32(out, crc);
}

}  // namespace

void write_png_custom(const std::string& path, int w, int h, int color_type, int bit_depth,
                      const std::vector<unsigned char>& filtered_scanlines) {
    std::vector<unsigned char> out(kPngSig, kPngSig + 8);

    std::vector<unsigned char> ihdr;
    push_be32(ihdr, static_cast<std::uint32_t>(w));
    push_be32(ihdr, static_cast<std::uint32_t>(h));
    ihdr.push_back(static_cast<unsigned char>(bit_depth));
    ihdr.push_back(static_cast<unsigned char>(color_type));
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    push_chunk(out, "IHDR", ihdr);

    uLongf cap = compressBound(static_cast<uLong>(filtered_scanlines.size()));
    std::vector<unsigned char> packed(cap);
    if (compress2(packed.data(), &cap, filtered_scanlines.data(),
                  static_cast<uLong>(filtered_scanlines.size()), 9) != Z_OK)
        throw DataError("deflate failed writing " + path);
    packed.resize(cap);
    push_chunk(out, "IDAT", packed);
    push_chunk(out, "IEND", {});
    write_file(path, out);
}

void write_png_gray8(const std::string& path, const std::vector<unsigned char>& pixels, int w,
                     int h) {
    if (pixels.size() != static_cast<std::size_t>(w) * static_cast<std::size_t>(h))
        throw DataError("pixel count does not match dimensions for " + path);
    std::vector<unsigned char> filtered;
    filtered.reserve((static_cast<std::size_t>(w) + 1) * static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) {
        filtered.push_back(0);  // filter: none
        const unsigned char* row = &pixels[static_cast<std::size_t>(y) * w];
        filtered.insert(filtered.end(), row, row + w);
    }
    write_png_custom(path, w, h, 0, 8, filtered);
}

}  // namespace detail

}  // namespace sfdmc
