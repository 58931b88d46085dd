#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "provsense/errors.hpp"

namespace provsense::binio {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void put_u64(std::ostream& os, std::uint64_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void put_f64(std::ostream& os, double v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline void put_str(std::ostream& os, const std::string& s) {
    put_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline void put_f64s(std::ostream& os, const std::vector<double>& v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline std::uint32_t get_u32(std::istream& is) {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw DataError("truncated checkpoint");
    return v;
}
inline std::uint64_t get_u64(std::istream& is) {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw DataError("truncated checkpoint");
    return v;
}
inline double get_f64(std::istream& is) {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw DataError("truncated checkpoint");
    return v;
}
inline std::string get_str(std::istream& is) {
    std::uint32_t len = get_u32(is);
    std::string s(len, '\0');
    is.read(s.data(), len);
    if (!is) throw DataError("truncated checkpoint");
    return s;
}
inline void get_f64s(std::istream& is, std::vector<double>& v, std::size_t count) {
    v.resize(count);
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!is) throw DataError("truncated checkpoint");
}

inline void check_magic(std::istream& is, std::uint32_t expect, const char* what) {
    if (get_u32(is) != expect)
        throw DataError(std::string("bad magic in ") + what + " checkpoint");
}

}  // namespace provsense::binio
