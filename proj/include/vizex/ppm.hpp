#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vizex/ingest.hpp"

namespace vizex {

struct DecodedImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;
};

// Binary P6 (RGB) or P5 (gray, expanded to RGB). Throws MalformedImage.
DecodedImage decode_pnm(const std::string& bytes, const std::string& origin);
DecodedImage read_pnm(const std::filesystem::path& path);

std::string encode_ppm(const Frame& frame);
void write_ppm(const Frame& frame, const std::filesystem::path& path);

}  // namespace vizex
