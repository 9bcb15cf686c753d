#include "gausskin/image_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "gausskin/errors.hpp"

namespace gausskin {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(char((v >> 24) & 0xff));
    out.push_back(char((v >> 16) & 0xff));
    out.push_back(char((v >> 8) & 0xff));
    out.push_back(char(v & 0xff));
}

void append_chunk(std::string& out, const char type[4], const std::string& payload) {
    put_u32(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t crc_start = out.size();
    out.append(type, 4);
    out += payload;
    const std::uint32_t crc = static_cast<std::uint32_t>(
        crc32(0, reinterpret_cast<const Bytef*>(out.data() + crc_start), out.size() - crc_start));
    put_u32(out, crc);
}

void write_png_bytes(int width, int height, int channels, const std::string& raster,
                     const std::string& path) {
    std::string idat;
    idat.resize(compressBound(static_cast<uLong>(raster.size())));
    uLongf compressed = static_cast<uLongf>(idat.size());
    if (compress2(reinterpret_cast<Bytef*>(idat.data()), &compressed,
                  reinterpret_cast<const Bytef*>(raster.data()), static_cast<uLong>(raster.size()),
                  6) != Z_OK)
        throw IoError(path + ": png deflate failed");
    idat.resize(compressed);

    std::string ihdr;
    put_u32(ihdr, static_cast<std::uint32_t>(width));
    put_u32(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);                            // bit depth
    ihdr.push_back(channels == 3 ? char(2) : 0);  // color type: rgb or gray
    ihdr.push_back(0);                            // compression
    ihdr.push_back(0);                            // filter
    ihdr.push_back(0);                            // interlace

    std::string file("\x89PNG\r\n\x1a\n", 8);
    append_chunk(file, "IHDR", ihdr);
    append_chunk(file, "IDAT", idat);
    append_chunk(file, "IEND", "");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path + ": cannot open file for writing");
    out.write(file.data(), static_cast<std::streamsize>(file.size()));
    if (!out) throw IoError(path + ": write failed");
}

std::uint8_t quantize(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

} // namespace

double linear_to_srgb(double linear) {
    const double c = std::clamp(linear, 0.0, 1.0);
    return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

void write_png(const FrameBuffer& fb, const std::string& path) {
    std::string raster;
    raster.reserve(std::size_t(fb.height) * (1 + std::size_t(fb.width) * 3));
    for (int y = 0; y < fb.height; ++y) {
        raster.push_back(0); // filter: none
        for (int x = 0; x < fb.width; ++x) {
            const double* px = fb.pixel(x, y);
            raster.push_back(char(quantize(linear_to_srgb(px[0]))));
            raster.push_back(char(quantize(linear_to_srgb(px[1]))));
            raster.push_back(char(quantize(linear_to_srgb(px[2]))));
        }
    }
    write_png_bytes(fb.width, fb.height, 3, raster, path);
}

void write_mask_png(const FrameBuffer& fb, const std::string& path) {
    std::string raster;
    raster.reserve(std::size_t(fb.height) * (1 + std::size_t(fb.width)));
    for (int y = 0; y < fb.height; ++y) {
        raster.push_back(0);
        for (int x = 0; x < fb.width; ++x)
            raster.push_back(char(quantize(fb.alpha[std::size_t(y) * fb.width + x])));
    }
    write_png_bytes(fb.width, fb.height, 1, raster, path);
}

} // namespace gausskin
