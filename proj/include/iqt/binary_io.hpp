#pragma once

// Little-endian primitive encoding shared by the IQV and IQD formats.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "iqt/error.hpp"

namespace iqt::io {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    const std::array<char, 4> bytes{static_cast<char>(v & 0xffu), static_cast<char>((v >> 8) & 0xffu),
                                    static_cast<char>((v >> 16) & 0xffu),
                                    static_cast<char>((v >> 24) & 0xffu)};
    os.write(bytes.data(), bytes.size());
}

inline void write_f32(std::ostream& os, float v) { write_u32(os, std::bit_cast<std::uint32_t>(v)); }

inline void write_magic(std::ostream& os, std::string_view magic) {
    os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

/// Reads exactly n bytes or throws CorruptionError naming `what`.
inline void read_exact(std::istream& is, char* dst, std::size_t n, const char* what) {
    is.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n) {
        throw CorruptionError(std::string("truncated input while reading ") + what);
    }
}

inline std::uint32_t read_u32(std::istream& is, const char* what) {
    std::array<unsigned char, 4> b{};
    read_exact(is, reinterpret_cast<char*>(b.data()), b.size(), what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline float read_f32(std::istream& is, const char* what) {
    return std::bit_cast<float>(read_u32(is, what));
}

/// Header magic check. A short or mismatching magic is a format error.
inline void expect_magic(std::istream& is, std::string_view magic) {
    std::string got(magic.size(), '\0');
    is.read(got.data(), static_cast<std::streamsize>(got.size()));
    if (static_cast<std::size_t>(is.gcount()) != magic.size() || got != magic) {
        throw FormatError("bad magic: expected '" + std::string(magic) + "'");
    }
}

/// True when no byte remains in the stream.
inline bool at_end(std::istream& is) {
    return is.peek() == std::char_traits<char>::eof();
}

} // namespace iqt::io
