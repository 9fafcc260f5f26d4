#include "iform/io.hpp"

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "iform/errors.hpp"

namespace iform {

namespace {

void put_u64_le(std::vector<std::uint8_t>& buf, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_f64_le(std::vector<std::uint8_t>& buf, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    put_u64_le(buf, v);
}

std::uint64_t get_u64_le(const std::vector<std::uint8_t>& buf, std::size_t off) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[off + i]) << (8 * i);
    return v;
}

double get_f64_le(const std::vector<std::uint8_t>& buf, std::size_t off) {
    std::uint64_t v = get_u64_le(buf, off);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}

void need(const std::vector<std::uint8_t>& buf, std::size_t offset, std::size_t n,
          const char* what) {
    if (offset + n > buf.size())
        throw FormatError(std::string("truncated file while reading ") + what, buf.size());
}

}  // namespace

void append_iftn(std::vector<std::uint8_t>& buf, const Tensor& t) {
    buf.push_back('I');
    buf.push_back('F');
    buf.push_back('T');
    buf.push_back('N');
    buf.push_back(1);  // version
    buf.push_back(0);  // dtype f64
    buf.push_back(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u64_le(buf, d);
    for (std::size_t i = 0; i < t.size(); ++i) put_f64_le(buf, t.at(i));
}

std::vector<std::uint8_t> encode_iftn(const Tensor& t) {
    std::vector<std::uint8_t> buf;
    buf.reserve(7 + 8 * t.rank() + 8 * t.size());
    append_iftn(buf, t);
    return buf;
}

Tensor decode_iftn(const std::vector<std::uint8_t>& buf, std::size_t& offset) {
    need(buf, offset, 7, "IFTN header");
    if (buf[offset] != 'I' || buf[offset + 1] != 'F' || buf[offset + 2] != 'T' ||
        buf[offset + 3] != 'N')
        throw FormatError("bad IFTN magic", offset);
    if (buf[offset + 4] != 1) throw FormatError("unsupported IFTN version", offset + 4);
    if (buf[offset + 5] != 0) throw FormatError("unsupported IFTN dtype", offset + 5);
    std::size_t rank = buf[offset + 6];
    offset += 7;
    std::vector<std::size_t> shape(rank);
    std::size_t count = 1;
    for (std::size_t i = 0; i < rank; ++i) {
        need(buf, offset, 8, "IFTN dims");
        std::uint64_t d = get_u64_le(buf, offset);
        offset += 8;
        shape[i] = static_cast<std::size_t>(d);
        count *= shape[i];
    }
    need(buf, offset, 8 * count, "IFTN payload");
    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) {
        data[i] = get_f64_le(buf, offset);
        offset += 8;
    }
    return Tensor::from_data(std::move(shape), std::move(data));
}

void write_iftn(const std::string& path, const Tensor& t) {
    std::vector<std::uint8_t> buf = encode_iftn(t);
    write_file_atomic(path, buf.data(), buf.size());
}

Tensor read_iftn(const std::string& path) {
    std::vector<std::uint8_t> buf = read_file(path);
    std::size_t offset = 0;
    Tensor t = decode_iftn(buf, offset);
    if (offset != buf.size()) throw FormatError("trailing bytes after IFTN payload", offset);
    return t;
}

// ---- PGM / PPM -----------------------------------------------------------------

namespace {

void write_pnm(const std::string& path, const char* magic, std::size_t height, std::size_t width,
               std::size_t channels, const std::vector<double>& values) {
    if (values.size() != channels * height * width)
        throw ContractError("pnm write: value count does not match dimensions");
    std::string header = std::string(magic) + "\n" + std::to_string(width) + " " +
                         std::to_string(height) + "\n255\n";
    std::vector<std::uint8_t> buf(header.begin(), header.end());
    buf.reserve(buf.size() + height * width * channels);
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x)
            for (std::size_t c = 0; c < channels; ++c) {
                double v = values[c * height * width + y * width + x];
                v = std::min(std::max(v, 0.0), 1.0);
                buf.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
            }
    write_file_atomic(path, buf.data(), buf.size());
}

// Skips PNM whitespace/comments and parses one non-negative integer.
std::size_t parse_pnm_int(const std::vector<std::uint8_t>& buf, std::size_t& off) {
    for (;;) {
        while (off < buf.size() && std::isspace(buf[off])) ++off;
        if (off < buf.size() && buf[off] == '#') {
            while (off < buf.size() && buf[off] != '\n') ++off;
            continue;
        }
        break;
    }
    if (off >= buf.size() || !std::isdigit(buf[off]))
        throw FormatError("pnm: expected integer", off);
    std::size_t v = 0;
    while (off < buf.size() && std::isdigit(buf[off])) {
        v = v * 10 + static_cast<std::size_t>(buf[off] - '0');
        ++off;
    }
    return v;
}

void read_pnm(const std::string& path, const char* magic, std::size_t channels,
              std::size_t& height, std::size_t& width, std::vector<double>& values) {
    std::vector<std::uint8_t> buf = read_file(path);
    if (buf.size() < 2 || buf[0] != magic[0] || buf[1] != magic[1])
        throw FormatError(std::string("pnm: expected magic ") + magic, 0);
    std::size_t off = 2;
    width = parse_pnm_int(buf, off);
    height = parse_pnm_int(buf, off);
    std::size_t maxval = parse_pnm_int(buf, off);
    if (maxval != 255) throw FormatError("pnm: only maxval 255 supported", off);
    ++off;  // single whitespace after maxval
    std::size_t count = channels * height * width;
    if (off + count > buf.size()) throw FormatError("pnm: truncated payload", buf.size());
    values.assign(count, 0.0);
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x)
            for (std::size_t c = 0; c < channels; ++c)
                values[c * height * width + y * width + x] =
                    static_cast<double>(buf[off++]) / 255.0;
}

}  // namespace

void write_pgm(const std::string& path, std::size_t height, std::size_t width,
               const std::vector<double>& values) {
    write_pnm(path, "P5", height, width, 1, values);
}

void read_pgm(const std::string& path, std::size_t& height, std::size_t& width,
              std::vector<double>& values) {
    read_pnm(path, "P5", 1, height, width, values);
}

void write_ppm(const std::string& path, std::size_t height, std::size_t width,
               const std::vector<double>& rgb_planes) {
    write_pnm(path, "P6", height, width, 3, rgb_planes);
}

void read_ppm(const std::string& path, std::size_t& height, std::size_t& width,
              std::vector<double>& rgb_planes) {
    read_pnm(path, "P6", 3, height, width, rgb_planes);
}

// ---- filesystem ------------------------------------------------------------------

void write_file_atomic(const std::string& path, const void* data, std::size_t size) {
    namespace fs = std::filesystem;
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::string tmp = path + ".tmp" + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("cannot open for write: " + tmp);
        f.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!f) {
            std::remove(tmp.c_str());
            throw Error("write failed: " + tmp);
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw Error("rename failed: " + tmp + " -> " + path + " (" + std::strerror(errno) + ")");
    }
}

void write_file_atomic(const std::string& path, const std::string& text) {
    write_file_atomic(path, text.data(), text.size());
}

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open for read: " + path);
    f.seekg(0, std::ios::end);
    std::streamsize n = f.tellg();
    f.seekg(0, std::ios::beg);
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(n));
    f.read(reinterpret_cast<char*>(buf.data()), n);
    if (!f) throw Error("read failed: " + path);
    return buf;
}

std::string read_text_file(const std::string& path) {
    std::vector<std::uint8_t> buf = read_file(path);
    return std::string(buf.begin(), buf.end());
}

}  // namespace iform
