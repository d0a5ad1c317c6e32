#include "relight/pipeline/image_io.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include <jpeglib.h>
#include <png.h>

namespace relight {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
    FILE* f = std::fopen(path.string().c_str(), mode);
    if (!f) throw IoError("cannot open " + path.string());
    return FilePtr(f);
}

ImageTensor from_rows(const std::vector<std::vector<unsigned char>>& rows, int h,
                      int w, int channels) {
    ImageTensor img(h, w, channels, Range::Unit);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(y, x, c) = rows[y][x * channels + c] / 255.0;
    return img;
}

ImageTensor load_png(const std::filesystem::path& path) {
    FilePtr file = open_file(path, "rb");

    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failure");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng init failure");
    }

    std::vector<std::vector<unsigned char>> rows;
    int h = 0, w = 0, channels = 0;
    bool format_error = false;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("failed to decode PNG: " + path.string());
    }

    png_init_io(png, file.get());
    png_read_info(png, info);

    const int bit_depth = png_get_bit_depth(png, info);
    if (bit_depth == 16) {
        format_error = true;
    } else {
        const int color_type = png_get_color_type(png, info);
        if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
        if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
            png_set_expand_gray_1_2_4_to_8(png);
        if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
        if (color_type & PNG_COLOR_MASK_ALPHA ||
            png_get_valid(png, info, PNG_INFO_tRNS))
            png_set_strip_alpha(png);
        png_set_interlace_handling(png);
        png_read_update_info(png, info);

        h = static_cast<int>(png_get_image_height(png, info));
        w = static_cast<int>(png_get_image_width(png, info));
        channels = png_get_channels(png, info);

        if (channels == 1 || channels == 3) {
            rows.assign(h, std::vector<unsigned char>(
                               png_get_rowbytes(png, info)));
            std::vector<png_bytep> row_ptrs(h);
            for (int y = 0; y < h; ++y) row_ptrs[y] = rows[y].data();
            png_read_image(png, row_ptrs.data());
            png_read_end(png, nullptr);
        } else {
            format_error = true;
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);

    if (format_error)
        throw FormatError("unsupported PNG format (need 8-bit gray or RGB): " +
                          path.string());
    return from_rows(rows, h, w, channels);
}

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    longjmp(mgr->jump, 1);
}

ImageTensor load_jpeg(const std::filesystem::path& path) {
    FilePtr file = open_file(path, "rb");

    jpeg_decompress_struct cinfo;
    JpegErrorMgr err;
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_error_exit;

    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw IoError("failed to decode JPEG: " + path.string());
    }

    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, file.get());
    jpeg_read_header(&cinfo, TRUE);

    if (cinfo.data_precision != 8) {
        jpeg_destroy_decompress(&cinfo);
        throw FormatError("unsupported JPEG bit depth: " + path.string());
    }
    cinfo.out_color_space =
        cinfo.jpeg_color_space == JCS_GRAYSCALE ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);

    const int h = static_cast<int>(cinfo.output_height);
    const int w = static_cast<int>(cinfo.output_width);
    const int channels = cinfo.output_components;
    std::vector<std::vector<unsigned char>> rows(
        h, std::vector<unsigned char>(static_cast<size_t>(w) * channels));
    while (cinfo.output_scanline < cinfo.output_height) {
        unsigned char* row = rows[cinfo.output_scanline].data();
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);

    if (channels != 1 && channels != 3)
        throw FormatError("unsupported JPEG channel count: " + path.string());
    return from_rows(rows, h, w, channels);
}

}  // namespace

ImageTensor load_image(const std::filesystem::path& path) {
    FilePtr file = open_file(path, "rb");
    unsigned char magic[8] = {0};
    const size_t got = std::fread(magic, 1, sizeof magic, file.get());
    file.reset();

    if (got >= 8 && png_sig_cmp(magic, 0, 8) == 0) return load_png(path);
    if (got >= 2 && magic[0] == 0xFF && magic[1] == 0xD8) return load_jpeg(path);
    throw FormatError("not a PNG or JPEG file: " + path.string());
}

void save_image(const ImageTensor& img, const std::filesystem::path& path) {
    if (img.range() != Range::Unit)
        throw ConfigError("save_image expects a unit-range image");

    const int h = img.height(), w = img.width(), c = img.channels();
    std::vector<std::vector<unsigned char>> rows(
        h, std::vector<unsigned char>(static_cast<size_t>(w) * c));
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) {
                const double v = std::clamp(img.at(y, x, ch), 0.0, 1.0) * 255.0;
                // nearbyint under the default FE_TONEAREST mode: half-to-even.
                rows[y][x * c + ch] = static_cast<unsigned char>(std::nearbyint(v));
            }

    FilePtr file = open_file(path, "wb");
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failure");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng init failure");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed to write PNG: " + path.string());
    }

    png_init_io(png, file.get());
    png_set_IHDR(png, info, w, h, 8,
                 c == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < h; ++y) png_write_row(png, rows[y].data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

ImageTensor resize_bilinear(const ImageTensor& img, int height, int width) {
    if (img.height() == height && img.width() == width) return img;
    ImageTensor out(height, width, img.channels(), img.range());
    const double sy = static_cast<double>(img.height()) / height;
    const double sx = static_cast<double>(img.width()) / width;
    for (int y = 0; y < height; ++y) {
        const double fy = std::min((y + 0.5) * sy - 0.5,
                                   static_cast<double>(img.height() - 1));
        const int y0 = std::max(0, static_cast<int>(std::floor(fy)));
        const int y1 = std::min(img.height() - 1, y0 + 1);
        const double wy = std::clamp(fy - y0, 0.0, 1.0);
        for (int x = 0; x < width; ++x) {
            const double fx = std::min((x + 0.5) * sx - 0.5,
                                       static_cast<double>(img.width() - 1));
            const int x0 = std::max(0, static_cast<int>(std::floor(fx)));
            const int x1 = std::min(img.width() - 1, x0 + 1);
            const double wx = std::clamp(fx - x0, 0.0, 1.0);
            for (int c = 0; c < img.channels(); ++c) {
                const double top =
                    (1.0 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c);
                const double bot =
                    (1.0 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c);
                out.at(y, x, c) = (1.0 - wy) * top + wy * bot;
            }
        }
    }
    return out;
}

ImageTensor fit_to(const ImageTensor& img, int height, int width) {
    if (img.height() == height && img.width() == width) return img;
    const double scale = std::max(static_cast<double>(height) / img.height(),
                                  static_cast<double>(width) / img.width());
    const int rh = std::max(height, static_cast<int>(std::lround(img.height() * scale)));
    const int rw = std::max(width, static_cast<int>(std::lround(img.width() * scale)));
    const ImageTensor resized = resize_bilinear(img, rh, rw);

    ImageTensor out(height, width, img.channels(), img.range());
    const int oy = (rh - height) / 2;
    const int ox = (rw - width) / 2;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < img.channels(); ++c)
                out.at(y, x, c) = resized.at(y + oy, x + ox, c);
    return out;
}

ImageTensor to_rgb(const ImageTensor& img) {
    if (img.channels() == 3) return img;
    ImageTensor out(img.height(), img.width(), 3, img.range());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, x, 0);
    return out;
}

}  // namespace relight
