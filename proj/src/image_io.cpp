#include "mtk/image_io.hpp"

#include "mtk/common.hpp"

#include <cctype>
#include <cstring>
#include <fstream>
#include <map>

namespace mtk {

namespace {

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image file: " + path.string());
    in.seekg(0, std::ios::end);
    const auto size = in.tellg();
    in.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(size));
    in.read(reinterpret_cast<char*>(buf.data()), size);
    if (!in) throw DataError("short read on image file: " + path.string());
    return buf;
}

// ---------------------------------------------------------------------------
// TIFF (baseline subset: uncompressed strips, chunky planar layout)
// ---------------------------------------------------------------------------

struct TiffCursor {
    const std::vector<std::uint8_t>& buf;
    bool big_endian;

    std::uint16_t u16(std::size_t off) const {
        check(off, 2);
        return big_endian ? static_cast<std::uint16_t>(buf[off] << 8 | buf[off + 1])
                          : static_cast<std::uint16_t>(buf[off + 1] << 8 | buf[off]);
    }
    std::uint32_t u32(std::size_t off) const {
        check(off, 4);
        if (big_endian)
            return (std::uint32_t(buf[off]) << 24) | (std::uint32_t(buf[off + 1]) << 16) |
                   (std::uint32_t(buf[off + 2]) << 8) | std::uint32_t(buf[off + 3]);
        return (std::uint32_t(buf[off + 3]) << 24) | (std::uint32_t(buf[off + 2]) << 16) |
               (std::uint32_t(buf[off + 1]) << 8) | std::uint32_t(buf[off]);
    }
    void check(std::size_t off, std::size_t n) const {
        if (off + n > buf.size()) throw DataError("truncated TIFF structure");
    }
};

struct TiffEntry {
    std::uint16_t type = 0;
    std::uint32_t count = 0;
    std::size_t value_off = 0;  // offset of the inline value field
};

std::size_t tiff_type_size(std::uint16_t type) {
    switch (type) {
        case 1: case 2: case 6: case 7: return 1;  // BYTE, ASCII, SBYTE, UNDEF
        case 3: case 8: return 2;                  // SHORT, SSHORT
        case 4: case 9: case 11: return 4;         // LONG, SLONG, FLOAT
        case 5: case 10: case 12: return 8;        // RATIONAL, SRATIONAL, DOUBLE
        default: return 0;
    }
}

// Reads entry value i as an unsigned integer (SHORT or LONG).
std::uint32_t tiff_uint_at(const TiffCursor& c, const TiffEntry& e, std::uint32_t i) {
    const std::size_t elem = tiff_type_size(e.type);
    if (elem == 0 || (e.type != 3 && e.type != 4))
        throw DataError("unsupported TIFF tag value type " + std::to_string(e.type));
    const std::size_t total = elem * e.count;
    std::size_t base = e.value_off;
    if (total > 4) base = c.u32(e.value_off);  // out-of-line values
    const std::size_t off = base + elem * i;
    return e.type == 3 ? c.u16(off) : c.u32(off);
}

SliceImage decode_tiff(const std::vector<std::uint8_t>& buf, const std::filesystem::path& path) {
    if (buf.size() < 8) throw DataError("truncated TIFF: " + path.string());
    const bool big_endian = buf[0] == 'M';
    TiffCursor c{buf, big_endian};
    if (c.u16(2) != 42) throw DataError("bad TIFF magic: " + path.string());

    // First IFD only; slice files carry a single image each.
    const std::size_t ifd = c.u32(4);
    const std::uint16_t n_entries = c.u16(ifd);
    std::map<std::uint16_t, TiffEntry> tags;
    for (std::uint16_t i = 0; i < n_entries; ++i) {
        const std::size_t e = ifd + 2 + std::size_t(i) * 12;
        const std::uint16_t tag = c.u16(e);
        tags[tag] = TiffEntry{c.u16(e + 2), c.u32(e + 4), e + 8};
    }

    auto get = [&](std::uint16_t tag, std::uint32_t fallback,
                   bool required) -> std::uint32_t {
        auto it = tags.find(tag);
        if (it == tags.end()) {
            if (required)
                throw DataError("TIFF missing tag " + std::to_string(tag) + ": " + path.string());
            return fallback;
        }
        return tiff_uint_at(c, it->second, 0);
    };

    const std::uint32_t width = get(256, 0, true);
    const std::uint32_t height = get(257, 0, true);
    const std::uint32_t compression = get(259, 1, false);
    const std::uint32_t photometric = get(262, 1, false);
    const std::uint32_t samples = get(277, 1, false);
    const std::uint32_t planar = get(284, 1, false);
    const std::uint32_t sample_format = get(339, 1, false);
    const std::uint32_t rows_per_strip = get(278, height, false);

    if (compression != 1)
        throw DataError("unsupported TIFF compression " + std::to_string(compression) + ": " +
                        path.string());
    if (planar != 1)
        throw DataError("unsupported TIFF planar configuration: " + path.string());
    if (sample_format != 1)
        throw DataError("unsupported TIFF sample format: " + path.string());
    if (samples != 1 && samples != 3)
        throw DataError("unsupported TIFF samples per pixel " + std::to_string(samples) + ": " +
                        path.string());
    if (photometric > 2)
        throw DataError("unsupported TIFF photometric " + std::to_string(photometric) + ": " +
                        path.string());
    if (tags.count(322) || tags.count(323))
        throw DataError("tiled TIFF not supported: " + path.string());

    std::uint32_t bits = 8;
    if (auto it = tags.find(258); it != tags.end()) {
        bits = tiff_uint_at(c, it->second, 0);
        for (std::uint32_t i = 1; i < it->second.count; ++i)
            if (tiff_uint_at(c, it->second, i) != bits)
                throw DataError("mixed TIFF bit depths not supported: " + path.string());
    }
    if (bits != 8 && bits != 16)
        throw DataError("unsupported TIFF bit depth " + std::to_string(bits) + ": " +
                        path.string());

    auto offsets_it = tags.find(273);
    auto counts_it = tags.find(279);
    if (offsets_it == tags.end() || counts_it == tags.end())
        throw DataError("TIFF missing strip layout: " + path.string());
    const std::uint32_t n_strips = offsets_it->second.count;
    if (counts_it->second.count != n_strips)
        throw DataError("inconsistent TIFF strip tables: " + path.string());

    const std::size_t bytes_per_sample = bits / 8;
    const std::size_t row_bytes = std::size_t(width) * samples * bytes_per_sample;

    SliceImage img;
    img.height = static_cast<int>(height);
    img.width = static_cast<int>(width);
    img.pixels.assign(std::size_t(height) * width, 0.0f);

    const float white_level = bits == 8 ? 255.0f : 65535.0f;
    std::uint32_t row = 0;
    for (std::uint32_t s = 0; s < n_strips && row < height; ++s) {
        const std::size_t strip_off = tiff_uint_at(c, offsets_it->second, s);
        const std::size_t strip_len = tiff_uint_at(c, counts_it->second, s);
        c.check(strip_off, strip_len);
        const std::uint32_t strip_rows =
            std::min<std::uint32_t>(rows_per_strip, height - row);
        if (strip_len < row_bytes * strip_rows)
            throw DataError("short TIFF strip: " + path.string());
        for (std::uint32_t r = 0; r < strip_rows; ++r, ++row) {
            const std::size_t line = strip_off + std::size_t(r) * row_bytes;
            for (std::uint32_t x = 0; x < width; ++x) {
                float acc = 0.0f;
                for (std::uint32_t ch = 0; ch < samples; ++ch) {
                    const std::size_t p = line + (std::size_t(x) * samples + ch) * bytes_per_sample;
                    acc += bits == 8 ? float(buf[p]) : float(c.u16(p));
                }
                float v = acc / float(samples);
                if (photometric == 0) v = white_level - v;  // WhiteIsZero
                img.pixels[std::size_t(row) * width + x] = v;
            }
        }
    }
    if (row != height) throw DataError("TIFF strips cover only part of the image: " + path.string());
    return img;
}

// ---------------------------------------------------------------------------
// PGM
// ---------------------------------------------------------------------------

struct PgmLexer {
    const std::vector<std::uint8_t>& buf;
    std::size_t pos = 0;

    int next_int(const std::filesystem::path& path) {
        // skip whitespace and '#' comments
        while (pos < buf.size()) {
            if (std::isspace(buf[pos])) {
                ++pos;
            } else if (buf[pos] == '#') {
                while (pos < buf.size() && buf[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
        if (pos >= buf.size() || !std::isdigit(buf[pos]))
            throw DataError("malformed PGM header: " + path.string());
        int v = 0;
        while (pos < buf.size() && std::isdigit(buf[pos])) {
            v = v * 10 + (buf[pos] - '0');
            ++pos;
        }
        return v;
    }
};

SliceImage decode_pgm(const std::vector<std::uint8_t>& buf, const std::filesystem::path& path) {
    const bool binary = buf[1] == '5';
    PgmLexer lex{buf, 2};
    const int width = lex.next_int(path);
    const int height = lex.next_int(path);
    const int maxval = lex.next_int(path);
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535)
        throw DataError("bad PGM dimensions: " + path.string());

    SliceImage img;
    img.height = height;
    img.width = width;
    img.pixels.resize(std::size_t(height) * width);

    const std::size_t n = img.pixels.size();
    if (binary) {
        ++lex.pos;  // single whitespace after maxval
        const int bytes = maxval > 255 ? 2 : 1;
        if (lex.pos + n * bytes > buf.size())
            throw DataError("truncated PGM payload: " + path.string());
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t p = lex.pos + i * bytes;
            img.pixels[i] = bytes == 1 ? float(buf[p]) : float((buf[p] << 8) | buf[p + 1]);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) img.pixels[i] = float(lex.next_int(path));
    }
    return img;
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write image file: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed: " + path.string());
}

void push_u16le(std::vector<std::uint8_t>& v, std::uint16_t x) {
    v.push_back(x & 0xff);
    v.push_back(x >> 8);
}
void push_u32le(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(x & 0xff);
    v.push_back((x >> 8) & 0xff);
    v.push_back((x >> 16) & 0xff);
    v.push_back(x >> 24);
}
void push_entry(std::vector<std::uint8_t>& v, std::uint16_t tag, std::uint16_t type,
                std::uint32_t count, std::uint32_t value) {
    push_u16le(v, tag);
    push_u16le(v, type);
    push_u32le(v, count);
    push_u32le(v, value);
}

void write_tiff(const std::filesystem::path& path, int height, int width, int samples, int bits,
                const std::uint8_t* data, std::size_t data_len) {
    std::vector<std::uint8_t> out;
    out.reserve(data_len + 256);
    out.push_back('I');
    out.push_back('I');
    push_u16le(out, 42);
    push_u32le(out, 8);  // IFD directly after header

    const std::uint16_t n_entries = 9;
    const std::uint32_t ifd_size = 2 + n_entries * 12 + 4;
    const std::uint32_t bps_off = 8 + ifd_size;           // out-of-line BitsPerSample for RGB
    const std::uint32_t data_off = bps_off + (samples == 3 ? 8 : 0);

    push_u16le(out, n_entries);
    push_entry(out, 256, 4, 1, std::uint32_t(width));
    push_entry(out, 257, 4, 1, std::uint32_t(height));
    if (samples == 3)
        push_entry(out, 258, 3, 3, bps_off);
    else
        push_entry(out, 258, 3, 1, std::uint32_t(bits));
    push_entry(out, 259, 3, 1, 1);                        // no compression
    push_entry(out, 262, 3, 1, samples == 3 ? 2 : 1);     // RGB / BlackIsZero
    push_entry(out, 273, 4, 1, data_off);                 // single strip
    push_entry(out, 277, 3, 1, std::uint32_t(samples));
    push_entry(out, 278, 4, 1, std::uint32_t(height));
    push_entry(out, 279, 4, 1, std::uint32_t(data_len));
    push_u32le(out, 0);  // no next IFD

    if (samples == 3) {
        push_u16le(out, std::uint16_t(bits));
        push_u16le(out, std::uint16_t(bits));
        push_u16le(out, std::uint16_t(bits));
        push_u16le(out, 0);  // pad to keep data offset word-aligned
    }
    out.insert(out.end(), data, data + data_len);
    write_bytes(path, out);
}

}  // namespace

SliceImage read_slice_image(const std::filesystem::path& path) {
    const auto buf = read_all(path);
    if (buf.size() >= 4 && (buf[0] == 'I' || buf[0] == 'M') && buf[0] == buf[1])
        return decode_tiff(buf, path);
    if (buf.size() >= 2 && buf[0] == 'P' && (buf[1] == '2' || buf[1] == '5'))
        return decode_pgm(buf, path);
    throw DataError("unrecognized image format (expect TIFF or PGM): " + path.string());
}

void write_pgm8(const std::filesystem::path& path, int height, int width,
                const std::vector<std::uint8_t>& gray) {
    std::vector<std::uint8_t> out;
    const std::string header =
        "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.insert(out.end(), header.begin(), header.end());
    out.insert(out.end(), gray.begin(), gray.end());
    write_bytes(path, out);
}

void write_tiff_gray8(const std::filesystem::path& path, int height, int width,
                      const std::vector<std::uint8_t>& gray) {
    write_tiff(path, height, width, 1, 8, gray.data(), gray.size());
}

void write_tiff_gray16(const std::filesystem::path& path, int height, int width,
                       const std::vector<std::uint16_t>& gray) {
    std::vector<std::uint8_t> bytes(gray.size() * 2);
    for (std::size_t i = 0; i < gray.size(); ++i) {
        bytes[2 * i] = gray[i] & 0xff;
        bytes[2 * i + 1] = gray[i] >> 8;
    }
    write_tiff(path, height, width, 1, 16, bytes.data(), bytes.size());
}

void write_tiff_rgb8(const std::filesystem::path& path, int height, int width,
                     const std::vector<std::uint8_t>& rgb) {
    write_tiff(path, height, width, 3, 8, rgb.data(), rgb.size());
}

}  // namespace mtk
