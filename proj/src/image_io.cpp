#include "ils/image_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <memory>

#include <png.h>

namespace ils {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FilePtr f(std::fopen(path.string().c_str(), mode));
    if (!f) throw ImageIoError("cannot open '" + path.string() + "'");
    return f;
}

ImageBuffer read_png(const std::filesystem::path& path) {
    FilePtr file = open_file(path, "rb");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw ImageIoError("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw ImageIoError("libpng initialisation failed");
    }
    // Declared before setjmp so a libpng longjmp never skips their lifetimes.
    std::vector<std::uint8_t> samples;
    std::vector<png_bytep> rows;
    png_uint_32 width = 0, height = 0;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ImageIoError("malformed PNG '" + path.string() + "'");
    }
    png_init_io(png, file.get());
    png_read_info(png, info);
    width = png_get_image_width(png, info);
    height = png_get_image_height(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    const bool has_trns = png_get_valid(png, info, PNG_INFO_tRNS) != 0;
    if (has_trns) png_set_tRNS_to_alpha(png);
    if ((color_type & PNG_COLOR_MASK_ALPHA) || has_trns) png_set_strip_alpha(png);
    png_read_update_info(png, info);

    if (png_get_rowbytes(png, info) != static_cast<std::size_t>(width) * 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ImageIoError("unsupported PNG layout in '" + path.string() + "'");
    }
    samples.resize(static_cast<std::size_t>(width) * height * 3);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = samples.data() + static_cast<std::size_t>(y) * width * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return {height, width, std::move(samples)};
}

void write_png(const std::filesystem::path& path, const ImageBuffer& img) {
    FilePtr file = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw ImageIoError("libpng initialisation failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw ImageIoError("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw ImageIoError("failed writing PNG '" + path.string() + "'");
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const auto samples = img.samples();
    for (std::size_t y = 0; y < img.height(); ++y) {
        png_write_row(png, const_cast<png_bytep>(samples.data() + y * img.width() * 3));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// Skips whitespace and '#' comments between PPM header tokens.
std::size_t read_ppm_number(std::istream& in) {
    while (true) {
        const int c = in.peek();
        if (c == '#') {
            std::string skip;
            std::getline(in, skip);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    std::size_t v = 0;
    if (!(in >> v)) throw ImageIoError("malformed PPM header");
    return v;
}

ImageBuffer read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageIoError("cannot open '" + path.string() + "'");
    std::string magic(2, '\0');
    in.read(magic.data(), 2);
    if (magic != "P6") throw ImageIoError("only binary P6 PPM is supported");
    const std::size_t width = read_ppm_number(in);
    const std::size_t height = read_ppm_number(in);
    const std::size_t maxval = read_ppm_number(in);
    if (maxval != 255) throw ImageIoError("PPM maxval must be 255");
    if (width == 0 || height == 0) throw ImageIoError("PPM has zero size");
    in.get();  // single whitespace before the raster
    std::vector<std::uint8_t> samples(width * height * 3);
    in.read(reinterpret_cast<char*>(samples.data()), static_cast<std::streamsize>(samples.size()));
    if (in.gcount() != static_cast<std::streamsize>(samples.size())) throw ImageIoError("truncated PPM raster");
    return {height, width, std::move(samples)};
}

void write_ppm(const std::filesystem::path& path, const ImageBuffer& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ImageIoError("cannot open '" + path.string() + "' for writing");
    out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
    const auto samples = img.samples();
    out.write(reinterpret_cast<const char*>(samples.data()), static_cast<std::streamsize>(samples.size()));
    if (!out) throw ImageIoError("failed writing '" + path.string() + "'");
}

}  // namespace

ImageBuffer read_image(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw ImageIoError("cannot open '" + path.string() + "'");
    std::array<unsigned char, 8> header{};
    probe.read(reinterpret_cast<char*>(header.data()), header.size());
    const auto got = static_cast<std::size_t>(probe.gcount());
    probe.close();
    if (got >= 8 && png_sig_cmp(header.data(), 0, 8) == 0) return read_png(path);
    if (got >= 2 && header[0] == 'P' && header[1] == '6') return read_ppm(path);
    throw ImageIoError("'" + path.string() + "' is neither PNG nor binary PPM");
}

void write_image(const std::filesystem::path& path, const ImageBuffer& img, ImageFormat format) {
    if (format == ImageFormat::Png) {
        write_png(path, img);
    } else {
        write_ppm(path, img);
    }
}

ImageFormat parse_format(const std::string& name) {
    const std::string n = lower(name);
    if (n == "png") return ImageFormat::Png;
    if (n == "ppm") return ImageFormat::Ppm;
    if (n == "jpg" || n == "jpeg" || n == "webp" || n == "heic" || n == "avif") {
        throw LossyFormatError("refusing lossy output format '" + name + "'");
    }
    throw std::invalid_argument("unknown image format '" + name + "' (expected png or ppm)");
}

ImageFormat resolve_format(const std::filesystem::path& path, const std::optional<std::string>& explicit_format) {
    if (explicit_format) return parse_format(*explicit_format);
    std::string ext = lower(path.extension().string());
    if (!ext.empty() && ext.front() == '.') ext.erase(0, 1);
    if (ext.empty()) return ImageFormat::Png;
    return parse_format(ext);
}

}  // namespace ils
