#include "fdb/nn.hpp"

#include <algorithm>

#include "fdb/errors.hpp"

namespace fdb::nn {

namespace {

template <typename T>
void spatial_dims(const TensorT<T>& x, int& planes, int& h, int& w) {
    const auto& d = x.shape;
    if (d.size() != 3 && d.size() != 4) throw ParamError("expected [C,H,W] or [B,C,H,W]");
    h = d[d.size() - 2];
    w = d[d.size() - 1];
    planes = 1;
    for (std::size_t i = 0; i + 2 < d.size(); ++i) planes *= d[i];
}

}  // namespace

template <typename T>
TensorT<T> pad_to_multiple(const TensorT<T>& x, int m) {
    if (m <= 0) throw ParamError("pad multiple must be positive");
    int planes, h, w;
    spatial_dims(x, planes, h, w);
    const int hp = (h + m - 1) / m * m;
    const int wp = (w + m - 1) / m * m;
    if (hp == h && wp == w) return x;
    Shape s = x.shape;
    s[s.size() - 2] = hp;
    s[s.size() - 1] = wp;
    TensorT<T> out(s);
    for (int p = 0; p < planes; ++p)
        for (int i = 0; i < hp; ++i) {
            const int si = std::min(i, h - 1);
            for (int j = 0; j < wp; ++j) {
                const int sj = std::min(j, w - 1);
                out.data[(static_cast<std::size_t>(p) * hp + i) * wp + j] =
                    x.data[(static_cast<std::size_t>(p) * h + si) * w + sj];
            }
        }
    return out;
}

template <typename T>
TensorT<T> crop_spatial(const TensorT<T>& x, int h, int w) {
    int planes, hp, wp;
    spatial_dims(x, planes, hp, wp);
    if (h > hp || w > wp) throw ParamError("crop larger than tensor");
    if (h == hp && w == wp) return x;
    Shape s = x.shape;
    s[s.size() - 2] = h;
    s[s.size() - 1] = w;
    TensorT<T> out(s);
    for (int p = 0; p < planes; ++p)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j)
                out.data[(static_cast<std::size_t>(p) * h + i) * w + j] =
                    x.data[(static_cast<std::size_t>(p) * hp + i) * wp + j];
    return out;
}

template TensorT<float> pad_to_multiple<float>(const TensorT<float>&, int);
template TensorT<double> pad_to_multiple<double>(const TensorT<double>&, int);
template TensorT<float> crop_spatial<float>(const TensorT<float>&, int, int);
template TensorT<double> crop_spatial<double>(const TensorT<double>&, int, int);

}  // namespace fdb::nn
