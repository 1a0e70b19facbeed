#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "ils/image.hpp"

namespace ils {

enum class ImageFormat { Png, Ppm };

class ImageIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when asked to write a format that would not preserve samples exactly.
class LossyFormatError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Reads 8-bit PNG (grey, palette and alpha variants are converted to RGB) or
/// binary P6 PPM with maxval 255. The format is detected from the file header.
ImageBuffer read_image(const std::filesystem::path& path);

void write_image(const std::filesystem::path& path, const ImageBuffer& img, ImageFormat format);

/// Picks the output format from an explicit name ("png"/"ppm") or else from
/// the file extension. Lossy extensions such as .jpg raise LossyFormatError.
ImageFormat resolve_format(const std::filesystem::path& path,
                           const std::optional<std::string>& explicit_format);

ImageFormat parse_format(const std::string& name);

}  // namespace ils
