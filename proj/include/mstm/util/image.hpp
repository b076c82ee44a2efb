#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "mstm/core/bytes.hpp"

namespace mstm {

struct Rgb {
    std::uint8_t r, g, b;
};

/// In-memory RGB raster with a deterministic PNG encoder (stored deflate
/// blocks, no compression library).
class Canvas {
  public:
    Canvas(std::size_t width, std::size_t height, Rgb fill = {255, 255, 255})
        : width_(width), height_(height), pixels_(width * height, fill) {}

    std::size_t width() const { return width_; }
    std::size_t height() const { return height_; }

    void set(std::size_t x, std::size_t y, Rgb c) {
        if (x < width_ && y < height_) pixels_[y * width_ + x] = c;
    }
    Rgb get(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }

    void fill_rect(std::size_t x0, std::size_t y0, std::size_t x1, std::size_t y1, Rgb c) {
        for (std::size_t y = y0; y <= y1 && y < height_; ++y)
            for (std::size_t x = x0; x <= x1 && x < width_; ++x) pixels_[y * width_ + x] = c;
    }

    void line(long long x0, long long y0, long long x1, long long y1, Rgb c) {
        const long long dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
        const long long dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
        long long err = dx + dy;
        while (true) {
            if (x0 >= 0 && y0 >= 0) set(static_cast<std::size_t>(x0),
                                        static_cast<std::size_t>(y0), c);
            if (x0 == x1 && y0 == y1) break;
            const long long e2 = 2 * err;
            if (e2 >= dy) {
                err += dy;
                x0 += sx;
            }
            if (e2 <= dx) {
                err += dx;
                y0 += sy;
            }
        }
    }

    void write_png(const std::filesystem::path& path) const {
        std::ofstream os(path, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write image: " + path.string());
        static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
        os.write(reinterpret_cast<const char*>(sig), 8);

        auto chunk = [&os](const char type[4], const std::string& payload) {
            unsigned char len[4] = {
                static_cast<unsigned char>((payload.size() >> 24) & 0xff),
                static_cast<unsigned char>((payload.size() >> 16) & 0xff),
                static_cast<unsigned char>((payload.size() >> 8) & 0xff),
                static_cast<unsigned char>(payload.size() & 0xff)};
            os.write(reinterpret_cast<const char*>(len), 4);
            Crc32 crc;
            crc.update(type, 4);
            crc.update(payload.data(), payload.size());
            os.write(type, 4);
            os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
            const std::uint32_t c = crc.value();
            unsigned char cb[4] = {static_cast<unsigned char>((c >> 24) & 0xff),
                                   static_cast<unsigned char>((c >> 16) & 0xff),
                                   static_cast<unsigned char>((c >> 8) & 0xff),
                                   static_cast<unsigned char>(c & 0xff)};
            os.write(reinterpret_cast<const char*>(cb), 4);
        };

        std::string ihdr(13, '\0');
        auto put_be32 = [](std::string& s, std::size_t off, std::uint32_t v) {
            s[off] = static_cast<char>((v >> 24) & 0xff);
            s[off + 1] = static_cast<char>((v >> 16) & 0xff);
            s[off + 2] = static_cast<char>((v >> 8) & 0xff);
            s[off + 3] = static_cast<char>(v & 0xff);
        };
        put_be32(ihdr, 0, static_cast<std::uint32_t>(width_));
        put_be32(ihdr, 4, static_cast<std::uint32_t>(height_));
        ihdr[8] = 8;   // bit depth
        ihdr[9] = 2;   // truecolor
        ihdr[10] = 0;  // deflate
        ihdr[11] = 0;  // filter method
        ihdr[12] = 0;  // no interlace
        chunk("IHDR", ihdr);

        // raw scanlines: filter byte 0 + RGB triples
        std::string raw;
        raw.reserve(height_ * (1 + width_ * 3));
        for (std::size_t y = 0; y < height_; ++y) {
            raw.push_back('\0');
            for (std::size_t x = 0; x < width_; ++x) {
                const Rgb& p = pixels_[y * width_ + x];
                raw.push_back(static_cast<char>(p.r));
                raw.push_back(static_cast<char>(p.g));
                raw.push_back(static_cast<char>(p.b));
            }
        }

        // zlib stream with stored (uncompressed) deflate blocks
        std::string idat;
        idat.push_back(0x78);
        idat.push_back(0x01);
        std::size_t pos = 0;
        while (pos < raw.size() || raw.empty()) {
            const std::size_t n = std::min<std::size_t>(65535, raw.size() - pos);
            const bool final = pos + n == raw.size();
            idat.push_back(final ? 1 : 0);
            idat.push_back(static_cast<char>(n & 0xff));
            idat.push_back(static_cast<char>((n >> 8) & 0xff));
            idat.push_back(static_cast<char>(~n & 0xff));
            idat.push_back(static_cast<char>((~n >> 8) & 0xff));
            idat.append(raw, pos, n);
            pos += n;
            if (final) break;
        }
        // adler32 of the raw stream
        std::uint32_t a = 1, b = 0;
        for (unsigned char c : raw) {
            a = (a + c) % 65521;
            b = (b + a) % 65521;
        }
        const std::uint32_t adler = (b << 16) | a;
        idat.push_back(static_cast<char>((adler >> 24) & 0xff));
        idat.push_back(static_cast<char>((adler >> 16) & 0xff));
        idat.push_back(static_cast<char>((adler >> 8) & 0xff));
        idat.push_back(static_cast<char>(adler & 0xff));
        chunk("IDAT", idat);
        chunk("IEND", "");
    }

  private:
    std::size_t width_, height_;
    std::vector<Rgb> pixels_;
};

}  // namespace mstm
