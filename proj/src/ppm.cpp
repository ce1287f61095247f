#include "vizex/ppm.hpp"

#include <cctype>

#include "vizex/error.hpp"
#include "vizex/io.hpp"

namespace vizex {

namespace {

class HeaderReader {
public:
    HeaderReader(const std::string& bytes, const std::string& origin) : bytes_(bytes), origin_(origin) {}

    int next_int() {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            fail("expected integer in header");
        }
        long value = 0;
        while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > 1'000'000) fail("header value too large");
            ++pos_;
        }
        return static_cast<int>(value);
    }

    // Exactly one whitespace byte separates the header from the raster.
    std::size_t raster_offset() {
        if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
            fail("missing whitespace before raster");
        }
        return pos_ + 1;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw Error(ErrorCode::MalformedImage, origin_ + ": " + what);
    }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            const char c = bytes_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    const std::string& bytes_;
    const std::string& origin_;
    std::size_t pos_ = 2;
};

}  // namespace

DecodedImage decode_pnm(const std::string& bytes, const std::string& origin) {
    HeaderReader reader(bytes, origin);
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '6' && bytes[1] != '5')) {
        reader.fail("not a binary P6/P5 image");
    }
    const bool color = bytes[1] == '6';
    DecodedImage img;
    img.width = reader.next_int();
    img.height = reader.next_int();
    const int maxval = reader.next_int();
    if (img.width < 1 || img.height < 1) reader.fail("empty image");
    if (maxval < 1 || maxval > 255) reader.fail("only 8-bit images are supported");
    const std::size_t offset = reader.raster_offset();
    const std::size_t pixels = static_cast<std::size_t>(img.width) * img.height;
    const std::size_t need = pixels * (color ? 3 : 1);
    if (bytes.size() - offset < need) reader.fail("truncated raster");

    img.rgb.resize(pixels * 3);
    const auto* src = reinterpret_cast<const std::uint8_t*>(bytes.data() + offset);
    if (color) {
        std::copy(src, src + need, img.rgb.begin());
    } else {
        for (std::size_t i = 0; i < pixels; ++i) {
            img.rgb[3 * i] = img.rgb[3 * i + 1] = img.rgb[3 * i + 2] = src[i];
        }
    }
    return img;
}

DecodedImage read_pnm(const std::filesystem::path& path) {
    return decode_pnm(read_file(path), path.string());
}

std::string encode_ppm(const Frame& frame) {
    std::string out = "P6\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(frame.rgb.data()), frame.rgb.size());
    return out;
}

void write_ppm(const Frame& frame, const std::filesystem::path& path) {
    write_file(path, encode_ppm(frame));
}

}  // namespace vizex
