#include "fdb/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

namespace fdb {
namespace {

std::size_t pos_of(std::istream& in) {
    const auto p = in.tellg();
    return p < 0 ? 0 : static_cast<std::size_t>(p);
}

// whitespace and '#' comments between header tokens
void skip_separators(std::istream& in) {
    for (;;) {
        const int c = in.peek();
        if (c == '#') {
            while (in.good() && in.get() != '\n') {
            }
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            in.get();
        } else {
            return;
        }
    }
}

int read_header_int(std::istream& in, const char* what) {
    skip_separators(in);
    int v = 0;
    if (!(in >> v) || v < 0) throw ParseError(std::string("bad PNM header field: ") + what,
                                              pos_of(in));
    return v;
}

}  // namespace

template <typename T>
TensorT<T> load_image(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open image: " + path, 0);
    char m0 = 0, m1 = 0;
    in.get(m0).get(m1);
    if (m0 != 'P' || (m1 != '5' && m1 != '6'))
        throw ParseError("not a binary PNM (P5/P6) file: " + path, 0);
    const int C = m1 == '6' ? 3 : 1;
    const int W = read_header_int(in, "width");
    const int H = read_header_int(in, "height");
    const int maxval = read_header_int(in, "maxval");
    if (W < 1 || H < 1 || maxval < 1 || maxval > 65535)
        throw ParseError("bad PNM dimensions or maxval", pos_of(in));
    in.get();  // single separator byte after maxval

    const int bytes_per = maxval > 255 ? 2 : 1;
    const std::size_t count = static_cast<std::size_t>(W) * H * C;
    std::vector<unsigned char> raw(count * static_cast<std::size_t>(bytes_per));
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw ParseError("truncated PNM payload in " + path, pos_of(in));

    TensorT<T> img(Shape{C, H, W});
    const T inv = T(1) / static_cast<T>(maxval);
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j)
            for (int c = 0; c < C; ++c) {
                const std::size_t s = (static_cast<std::size_t>(i) * W + j) * C + c;
                int v;
                if (bytes_per == 2)
                    v = raw[2 * s] << 8 | raw[2 * s + 1];
                else
                    v = raw[s];
                img.at3(c, i, j) = static_cast<T>(v) * inv;
            }
    return img;
}

template <typename T>
void save_image(const std::string& path, const TensorT<T>& img, int bits) {
    if (img.rank() != 3 || (img.dim(0) != 1 && img.dim(0) != 3))
        throw ParamError("save_image: expected [1|3,H,W]");
    if (bits != 8 && bits != 16) throw ParamError("save_image: bits must be 8 or 16");
    const int C = img.dim(0), H = img.dim(1), W = img.dim(2);
    const int maxval = bits == 16 ? 65535 : 255;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParamError("save_image: cannot open " + path);
    out << (C == 3 ? "P6" : "P5") << "\n" << W << " " << H << "\n" << maxval << "\n";

    std::vector<unsigned char> raw(static_cast<std::size_t>(W) * H * C * (bits == 16 ? 2 : 1));
    std::size_t s = 0;
    for (int i = 0; i < H; ++i)
        for (int j = 0; j < W; ++j)
            for (int c = 0; c < C; ++c) {
                const double v01 = std::clamp(static_cast<double>(img.at3(c, i, j)), 0.0, 1.0);
                const int q = static_cast<int>(std::lround(v01 * maxval));
                if (bits == 16) {
                    raw[s++] = static_cast<unsigned char>(q >> 8);
                    raw[s++] = static_cast<unsigned char>(q & 0xff);
                } else {
                    raw[s++] = static_cast<unsigned char>(q);
                }
            }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw ParamError("save_image: write failed for " + path);
}

template TensorT<float> load_image<float>(const std::string&);
template TensorT<double> load_image<double>(const std::string&);
template void save_image<float>(const std::string&, const TensorT<float>&, int);
template void save_image<double>(const std::string&, const TensorT<double>&, int);

}  // namespace fdb
