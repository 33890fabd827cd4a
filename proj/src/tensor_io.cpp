#include "fdb/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace fdb {
namespace {

constexpr char kMagic[4] = {'F', 'D', 'T', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, std::size_t& off) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw ParseError("truncated tensor file", off);
    off += 4;
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

template <typename S>
void write_scalars(std::ostream& os, const std::vector<S>& v) {
    static_assert(std::endian::native == std::endian::little,
                  "scalar payload assumes a little-endian host");
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(S)));
}

template <typename S>
void read_scalars(std::istream& is, std::vector<S>& v, std::size_t& off) {
    is.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(S)));
    if (!is) throw ParseError("truncated tensor payload", off);
    off += v.size() * sizeof(S);
}

}  // namespace

template <typename T>
void write_tensor(std::ostream& os, const TensorT<T>& t) {
    os.write(kMagic, 4);
    put_u32(os, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) put_u32(os, static_cast<std::uint32_t>(d));
    const unsigned char code = sizeof(T) == 4 ? 4 : 8;
    os.write(reinterpret_cast<const char*>(&code), 1);
    write_scalars(os, t.data);
}

template <typename T>
TensorT<T> read_tensor(std::istream& is) {
    std::size_t off = 0;
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw ParseError("bad tensor magic (want FDT1)", off);
    off += 4;
    const std::uint32_t rank = get_u32(is, off);
    if (rank > 16) throw ParseError("implausible tensor rank " + std::to_string(rank), off);
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<int>(get_u32(is, off));
    unsigned char code = 0;
    is.read(reinterpret_cast<char*>(&code), 1);
    if (!is) throw ParseError("missing precision code", off);
    off += 1;
    if (code != 4 && code != 8)
        throw ParseError("unknown precision code " + std::to_string(int(code)), off);

    const auto n = static_cast<std::size_t>(shape_numel(shape));
    TensorT<T> out;
    out.shape = std::move(shape);
    if (code == 4) {
        std::vector<float> raw(n);
        read_scalars(is, raw, off);
        out.data.assign(raw.begin(), raw.end());
    } else {
        std::vector<double> raw(n);
        read_scalars(is, raw, off);
        out.data.resize(n);
        for (std::size_t i = 0; i < n; ++i) out.data[i] = static_cast<T>(raw[i]);
    }
    return out;
}

template <typename T>
void save_tensor_file(const std::string& path, const TensorT<T>& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ValidationError("cannot open for writing: " + path);
    write_tensor(os, t);
    if (!os) throw ValidationError("write failed: " + path);
}

template <typename T>
TensorT<T> load_tensor_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot open: " + path);
    return read_tensor<T>(is);
}

int peek_tensor_precision(std::istream& is) {
    const auto pos = is.tellg();
    std::size_t off = 0;
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw ParseError("bad tensor magic (want FDT1)", 0);
    off += 4;
    const std::uint32_t rank = get_u32(is, off);
    for (std::uint32_t i = 0; i < rank; ++i) (void)get_u32(is, off);
    unsigned char code = 0;
    is.read(reinterpret_cast<char*>(&code), 1);
    if (!is) throw ParseError("missing precision code", off);
    is.seekg(pos);
    return code;
}

template void write_tensor<float>(std::ostream&, const TensorT<float>&);
template void write_tensor<double>(std::ostream&, const TensorT<double>&);
template TensorT<float> read_tensor<float>(std::istream&);
template TensorT<double> read_tensor<double>(std::istream&);
template void save_tensor_file<float>(const std::string&, const TensorT<float>&);
template void save_tensor_file<double>(const std::string&, const TensorT<double>&);
template TensorT<float> load_tensor_file<float>(const std::string&);
template TensorT<double> load_tensor_file<double>(const std::string&);

}  // namespace fdb
