#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "firescope/domain.hpp"
#include "firescope/errors.hpp"

namespace firescope {

/// Base64-encoded image payload ready for a chat-completions request.
struct EncodedImage {
    std::string media_type;   // e.g. image/jpeg
    std::string payload_b64;  // standard base64, no line breaks
};

namespace base64 {

inline constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline std::string encode(const std::vector<std::uint8_t>& bytes) {
    std::string out;
    out.reserve(((bytes.size() + 2) / 3) * 4);
    std::size_t i = 0;
    while (i + 3 <= bytes.size()) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(kAlphabet[(v >> 18) & 0x3F]);
        out.push_back(kAlphabet[(v >> 12) & 0x3F]);
        out.push_back(kAlphabet[(v >> 6) & 0x3F]);
        out.push_back(kAlphabet[v & 0x3F]);
        i += 3;
    }
    const std::size_t rem = bytes.size() - i;
    if (rem == 1) {
        const std::uint32_t v = bytes[i] << 16;
        out.push_back(kAlphabet[(v >> 18) & 0x3F]);
        out.push_back(kAlphabet[(v >> 12) & 0x3F]);
        out.push_back('=');
        out.push_back('=');
    } else if (rem == 2) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out.push_back(kAlphabet[(v >> 18) & 0x3F]);
        out.push_back(kAlphabet[(v >> 12) & 0x3F]);
        out.push_back(kAlphabet[(v >> 6) & 0x3F]);
        out.push_back('=');
    }
    return out;
}

inline int decode_digit(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

inline std::vector<std::uint8_t> decode(std::string_view text) {
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    int acc = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        const int d = decode_digit(c);
        if (d < 0) throw Error("invalid base64 digit");
        acc = (acc << 6) | d;
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((acc >> bits) & 0xFF));
        }
    }
    return out;
}

}  // namespace base64

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageReadError(path, "cannot open");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

/// Media type from magic bytes, falling back to the file extension.
/// Returns empty when neither identifies a supported format.
inline std::string sniff_media_type(const std::vector<std::uint8_t>& bytes,
                                    const std::string& uri) {
    if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
        return "image/jpeg";
    }
    static const std::uint8_t png_magic[8] = {0x89, 0x50, 0x4E, 0x47, 0x0D, 0x0A, 0x1A, 0x0A};
    if (bytes.size() >= 8) {
        bool png = true;
        for (int i = 0; i < 8; ++i) {
            if (bytes[static_cast<std::size_t>(i)] != png_magic[i]) { png = false; break; }
        }
        if (png) return "image/png";
    }
    const auto dot = uri.find_last_of('.');
    if (dot != std::string::npos) {
        const std::string ext = to_lower_copy(uri.substr(dot + 1));
        if (ext == "jpg" || ext == "jpeg") return "image/jpeg";
        if (ext == "png") return "image/png";
        if (ext == "webp") return "image/webp";
        if (ext == "gif") return "image/gif";
    }
    return "";
}

inline bool is_remote_uri(const std::string& uri) {
    return uri.rfind("http://", 0) == 0 || uri.rfind("https://", 0) == 0;
}

/// Reads the referenced file and base64-encodes its raw bytes, untouched:
/// no resizing or recompression, so what the model sees (and is billed for)
/// is exactly the stored image.
inline EncodedImage encode_image(const ImageRef& ref) {
    if (ref.uri.empty()) throw ImageReadError("<empty>", "empty uri");
    if (is_remote_uri(ref.uri)) {
        throw ImageReadError(ref.uri, "remote uris are not fetched; stage files locally");
    }
    std::string path = ref.uri;
    if (path.rfind("file://", 0) == 0) path = path.substr(7);
    const auto bytes = read_file_bytes(path);
    if (bytes.empty()) throw ImageReadError(ref.uri, "empty file");
    std::string media = sniff_media_type(bytes, path);
    if (media.empty()) throw UnsupportedFormat(ref.uri);
    return EncodedImage{media, base64::encode(bytes)};
}

}  // namespace firescope
